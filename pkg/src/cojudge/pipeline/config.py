"""Pipeline configuration: one declarative file drives every stage.

Credentials never live in the file; adapter entries name the environment
variable (COJUDGE_API_KEY_<PROVIDER>) that holds the token. The config hash
used for report provenance covers everything except filesystem paths, so
the same experiment re-rooted elsewhere hashes identically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from cojudge.judging.adapters import JudgeAdapterSpec
from cojudge.similarity.codebleu import CodeBleuConfig
from cojudge.splitting import (
    DEFAULT_MAX_CODE_CHARS,
    DEFAULT_MAX_PROMPT_CHARS,
    DEFAULT_RATIOS,
    SplitConfig,
)

DEFAULT_SLEEP_SECONDS = 0.2
DEFAULT_SAVE_EVERY = 10
DEFAULT_MAX_RETRIES = 3
DEFAULT_ECE_BINS = 15

DEFAULT_OFFLINE_JUDGE_NAMES = ("alpha", "bravo", "charlie", "delta")


def derive_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class PipelineConfig:
    input_dir: Path
    work_dir: Path
    seed: int = 0
    split_ratios: tuple[float, float, float] = DEFAULT_RATIOS
    stratify: bool = True
    judges: tuple[JudgeAdapterSpec, ...] = ()
    max_code_chars: int = DEFAULT_MAX_CODE_CHARS
    max_prompt_chars: int = DEFAULT_MAX_PROMPT_CHARS
    sleep_seconds: float = DEFAULT_SLEEP_SECONDS
    save_every: int = DEFAULT_SAVE_EVERY
    max_retries: int = DEFAULT_MAX_RETRIES
    ece_bins: int = DEFAULT_ECE_BINS
    codebleu: CodeBleuConfig = field(default_factory=CodeBleuConfig)

    def split_config(self) -> SplitConfig:
        return SplitConfig(ratios=self.split_ratios, seed=self.seed, stratify=self.stratify)

    def to_dict(self, include_paths: bool = True) -> dict:
        payload = {
            "seed": self.seed,
            "split": {"ratios": list(self.split_ratios), "stratify": self.stratify},
            "judges": [
                {
                    "name": j.name,
                    "kind": j.kind,
                    "endpoint": j.endpoint,
                    "credential_env": j.credential_env,
                    "temperature": j.temperature,
                    "max_output_tokens": j.max_output_tokens,
                    "repair_max_output_tokens": j.repair_max_output_tokens,
                    "response_path": list(j.response_path),
                    "seed": j.seed,
                    "timeout_seconds": j.timeout_seconds,
                }
                for j in self.judges
            ],
            "max_code_chars": self.max_code_chars,
            "max_prompt_chars": self.max_prompt_chars,
            "sleep_seconds": self.sleep_seconds,
            "save_every": self.save_every,
            "max_retries": self.max_retries,
            "ece_bins": self.ece_bins,
            "codebleu": {
                "weights": list(self.codebleu.weights),
                "max_ngram": self.codebleu.max_ngram,
                "keyword_weight": self.codebleu.keyword_weight,
                "grammar": self.codebleu.grammar,
                "fallback_mode": self.codebleu.fallback_mode,
            },
        }
        if include_paths:
            payload["input_dir"] = str(self.input_dir)
            payload["work_dir"] = str(self.work_dir)
        return payload

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(include_paths=False), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_offline_judges(self) -> "PipelineConfig":
        """Replace every adapter with a deterministic mock of the same name."""
        judges = self.judges or tuple(
            JudgeAdapterSpec(name=n, kind="mock") for n in DEFAULT_OFFLINE_JUDGE_NAMES
        )
        mocks = tuple(
            JudgeAdapterSpec(name=j.name, kind="mock", seed=derive_seed(self.seed, j.name))
            for j in judges
        )
        return replace(self, judges=mocks, sleep_seconds=0.0)

    @classmethod
    def from_dict(cls, payload: dict, base_dir: Path | None = None) -> "PipelineConfig":
        base = base_dir or Path(".")

        def _path(key: str) -> Path:
            raw = Path(payload[key])
            return raw if raw.is_absolute() else base / raw

        split = payload.get("split", {})
        seed = int(payload.get("seed", 0))
        judges = []
        for entry in payload.get("judges", []):
            judges.append(
                JudgeAdapterSpec(
                    name=entry["name"],
                    kind=entry.get("kind", "mock"),
                    endpoint=entry.get("endpoint", ""),
                    credential_env=entry.get("credential_env", ""),
                    temperature=float(entry.get("temperature", 0.0)),
                    max_output_tokens=int(entry.get("max_output_tokens", 1024)),
                    repair_max_output_tokens=entry.get("repair_max_output_tokens"),
                    response_path=tuple(entry.get("response_path", ())),
                    seed=int(entry.get("seed", derive_seed(seed, entry["name"]))),
                    timeout_seconds=float(entry.get("timeout_seconds", 60.0)),
                )
            )
        cb = payload.get("codebleu", {})
        return cls(
            input_dir=_path("input_dir"),
            work_dir=_path("work_dir"),
            seed=seed,
            split_ratios=tuple(split.get("ratios", DEFAULT_RATIOS)),
            stratify=bool(split.get("stratify", True)),
            judges=tuple(judges),
            max_code_chars=int(payload.get("max_code_chars", DEFAULT_MAX_CODE_CHARS)),
            max_prompt_chars=int(payload.get("max_prompt_chars", DEFAULT_MAX_PROMPT_CHARS)),
            sleep_seconds=float(payload.get("sleep_seconds", DEFAULT_SLEEP_SECONDS)),
            save_every=int(payload.get("save_every", DEFAULT_SAVE_EVERY)),
            max_retries=int(payload.get("max_retries", DEFAULT_MAX_RETRIES)),
            ece_bins=int(payload.get("ece_bins", DEFAULT_ECE_BINS)),
            codebleu=CodeBleuConfig(
                weights=tuple(cb.get("weights", CodeBleuConfig().weights)),
                max_ngram=int(cb.get("max_ngram", 4)),
                keyword_weight=float(cb.get("keyword_weight", 5.0)),
                grammar=cb.get("grammar", "auto"),
                fallback_mode=bool(cb.get("fallback_mode", False)),
            ),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls.from_dict(payload, base_dir=path.parent)


def default_offline_config(input_dir: str | Path, work_dir: str | Path, seed: int = 0) -> PipelineConfig:
    """Four deterministic mock judges, no pacing: the zero-network profile
    used by tests and the quickstart."""
    return PipelineConfig(
        input_dir=Path(input_dir), work_dir=Path(work_dir), seed=seed
    ).with_offline_judges()
