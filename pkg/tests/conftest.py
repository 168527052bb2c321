from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

from hpi.data import Dataset
from hpi.grid import parse_grid

TESTS_DIR = Path(__file__).parent
STUB_TRAINER = TESTS_DIR / "stub_trainer.py"


def stub_command(*flags: str) -> list[str]:
    return [sys.executable, str(STUB_TRAINER), *flags]


@pytest.fixture
def toy_dataset() -> Dataset:
    """Four points on one feature, separable at x = 1.5."""
    return Dataset(
        features=np.array([[0.0], [1.0], [2.0], [3.0]]),
        labels=np.array([0, 0, 1, 1]),
        feature_names=("x",),
    )


@pytest.fixture
def small_grid():
    return parse_grid(
        """
axes:
  a: {values: [1, 2], default: 1}
  b: {values: [x, y], default: x}
"""
    )


def make_random_dataset(n: int, d: int, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = (rng.random(n) < 0.5).astype(np.int8)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return Dataset(features=X, labels=y, feature_names=tuple(f"x{j}" for j in range(d)))
