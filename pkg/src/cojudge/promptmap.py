"""Participant prompt-space map: TF-IDF vectors projected to the plane.

The projection is exploratory by design. The embedding uses raw term counts
with smoothed log idf (ln((1+N)/(1+df)) + 1) and L2 normalization; the
planar layout uses exact t-SNE seeded from the principal-axes projection so
a fixed seed reproduces coordinates bit-for-bit. Below five points t-SNE is
not meaningful and the principal-axes projection itself is returned,
flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TSNE_MIN_POINTS = 5
_TSNE_MAX_ITER = 1000
_TSNE_LEARNING_RATE = 100.0


class EmptyCorpus(ValueError):
    """No participant has a non-empty context."""


@dataclass(frozen=True)
class PromptMapPoint:
    participant: str
    x: float
    y: float
    solved_rate: float


def tfidf_embed(contexts: dict[str, str]) -> tuple[dict[str, np.ndarray], list[str]]:
    """Embed each participant context into L2-normalized TF-IDF space.

    Tokens are whitespace-delimited lowercased words. Returns the vectors
    (aligned to the returned vocabulary order) keyed by participant.
    """
    docs = {u: contexts[u].lower().split() for u in sorted(contexts)}
    if not any(docs.values()):
        raise EmptyCorpus("every context is empty")
    vocab = sorted({tok for tokens in docs.values() for tok in tokens})
    index = {tok: i for i, tok in enumerate(vocab)}
    n_docs = len(docs)
    df = np.zeros(len(vocab))
    counts = {}
    for u, tokens in docs.items():
        vec = np.zeros(len(vocab))
        for tok in tokens:
            vec[index[tok]] += 1.0
        counts[u] = vec
        df += vec > 0
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    vectors = {}
    for u, vec in counts.items():
        weighted = vec * idf
        norm = math.sqrt(float(weighted @ weighted))
        vectors[u] = weighted / norm if norm > 0 else weighted
    return vectors, vocab


def _principal_axes(matrix: np.ndarray) -> np.ndarray:
    centered = matrix - matrix.mean(axis=0, keepdims=True)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    coords = centered @ vt[:2].T
    if coords.shape[1] < 2:
        coords = np.hstack([coords, np.zeros((coords.shape[0], 2 - coords.shape[1]))])
    return coords


def tsne_project(
    vectors: dict[str, np.ndarray], seed: int
) -> tuple[dict[str, np.ndarray], bool]:
    """Project TF-IDF vectors to 2-D.

    Returns (coordinates, used_fallback). With fewer than five points the
    fallback projects onto the first two principal axes instead of running
    t-SNE.
    """
    if not vectors:
        raise EmptyCorpus("no vectors to project")
    names = sorted(vectors)
    matrix = np.vstack([vectors[u] for u in names])
    n = len(names)
    if n < TSNE_MIN_POINTS:
        coords = _principal_axes(matrix)
        return {u: coords[i].copy() for i, u in enumerate(names)}, True

    from sklearn.manifold import TSNE

    init = _principal_axes(matrix)
    spread = init[:, 0].std()
    if spread > 0:
        init = init / spread * 1e-4
    perplexity = min(5.0, (n - 1) / 3.0)
    tsne = TSNE(
        n_components=2,
        method="exact",
        perplexity=perplexity,
        learning_rate=_TSNE_LEARNING_RATE,
        max_iter=_TSNE_MAX_ITER,
        init=init,
        random_state=seed,
    )
    coords = tsne.fit_transform(matrix)
    if not np.isfinite(coords).all():
        raise RuntimeError("t-SNE produced non-finite coordinates")
    return {u: coords[i].copy() for i, u in enumerate(names)}, False


def build_prompt_map(
    contexts: dict[str, str], solved_rates: dict[str, float], seed: int
) -> tuple[list[PromptMapPoint], bool]:
    """TF-IDF + planar projection + solved-rate coloring, one point per
    participant."""
    vectors, _ = tfidf_embed(contexts)
    coords, fallback = tsne_project(vectors, seed)
    points = [
        PromptMapPoint(
            participant=u,
            x=float(coords[u][0]),
            y=float(coords[u][1]),
            solved_rate=float(solved_rates.get(u, 0.0)),
        )
        for u in sorted(coords)
    ]
    return points, fallback
