from __future__ import annotations

import random
from dataclasses import dataclass

import pytest
from hypothesis import given, strategies as st

from cojudge.similarity.edit_distance import consecutive_churn, levenshtein, ned
from oracles import levenshtein_recursive


@pytest.mark.parametrize(
    "s,t,expected",
    [
        ("abc", "abc", 0),
        ("", "abc", 3),
        ("abc", "", 3),
        ("kitten", "sitting", 3),
        ("ab", "ba", 2),
        ("flaw", "lawn", 2),
        ("", "", 0),
    ],
)
def test_levenshtein_fixtures(s, t, expected):
    assert levenshtein(s, t) == expected
    assert levenshtein(s, t) == levenshtein_recursive(s, t)


def test_levenshtein_random_against_oracle():
    rng = random.Random(7)
    alphabet = "abcxyz "
    for _ in range(300):
        s = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12)))
        t = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12)))
        assert levenshtein(s, t) == levenshtein_recursive(s, t)


def test_numpy_path_matches_python_path():
    rng = random.Random(11)
    s = "".join(rng.choice("abcd") for _ in range(250))
    t = "".join(rng.choice("abcd") for _ in range(180))
    # 250 * 180 = 45000 cells forces the vectorized path.
    assert levenshtein(s, t) == levenshtein_recursive(s, t)


@pytest.mark.parametrize(
    "s,t,expected",
    [
        ("", "", 0.0),
        ("ab", "ba", 1.0),
        ("kitten", "sitting", 3 / 7),
        ("same", "same", 0.0),
    ],
)
def test_ned_fixtures(s, t, expected):
    assert ned(s, t) == pytest.approx(expected, abs=1e-12)


@given(st.text(alphabet="abc", max_size=20), st.text(alphabet="abc", max_size=20))
def test_ned_symmetry_and_range(s, t):
    assert ned(s, t) == ned(t, s)
    assert 0.0 <= ned(s, t) <= 1.0
    assert ned(s, s) == 0.0


@dataclass
class _Step:
    turn: int
    code: str
    prompt_text: str


def test_consecutive_churn():
    traj = [
        _Step(1, "ab", "p"),
        _Step(2, "ba", "p"),
        _Step(3, "ba", "q"),
    ]
    assert consecutive_churn(traj, "code") == [(2, 1.0), (3, 0.0)]
    prompt = consecutive_churn(traj, "prompt")
    assert prompt[0] == (2, 0.0)
    assert prompt[1][1] == 1.0
    assert consecutive_churn(traj[:1], "code") == []
    with pytest.raises(ValueError):
        consecutive_churn(traj, "verdict")
