"""Tabular datasets and the seeded sampling engine.

Datasets are immutable numeric feature matrices with a binary label.
All randomness flows through :func:`derive_seed`, a fixed SHA-256 based
mixer, so every split, subsample, and fit is reproducible bit-for-bit
from the master seed alone regardless of execution order or worker
count.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import DataError

_SEED_DOMAIN = b"hpi/seed/v1"


def derive_seed(master: int, tags: Sequence[int]) -> int:
    """Mix a master seed and integer tags into a 64-bit stream seed.

    SHA-256 over the domain string, the master, the tag count, and each
    tag (all 8-byte big-endian two's complement); the first 8 digest
    bytes, read big-endian, are the seed. Stable across platforms and
    sessions.
    """
    h = hashlib.sha256()
    h.update(_SEED_DOMAIN)
    h.update(int(master).to_bytes(8, "big", signed=True))
    h.update(len(tags).to_bytes(8, "big"))
    for tag in tags:
        h.update(int(tag).to_bytes(8, "big", signed=True))
    return int.from_bytes(h.digest()[:8], "big")


def rng_from_seed(seed: int) -> np.random.Generator:
    """The toolkit-wide generator construction (PCG64)."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Dataset:
    """An n x d float feature matrix with a {0,1} label vector."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    label_name: str = "y"

    def __post_init__(self) -> None:
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int8)
        if features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        n, d = features.shape
        if n < 1 or d < 1:
            raise DataError("dataset needs at least one row and one feature column")
        if labels.shape != (n,):
            raise DataError("labels must be a vector with one entry per row")
        if not np.all((labels == 0) | (labels == 1)):
            raise DataError("labels must be 0 or 1")
        if not np.all(np.isfinite(features)):
            raise DataError("features contain NaN or infinite values")
        if len(self.feature_names) != d:
            raise DataError("feature_names must name every column")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def row_count(self) -> int:
        return self.features.shape[0]

    @property
    def column_count(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        pos = int(self.labels.sum())
        return self.row_count - pos, pos

    def take(self, rows: np.ndarray) -> "Dataset":
        return Dataset(
            features=self.features[rows],
            labels=self.labels[rows],
            feature_names=self.feature_names,
            label_name=self.label_name,
        )

    def fingerprint(self) -> str:
        """Content hash used to key temp-file caches for external trainers."""
        h = hashlib.sha256()
        h.update(",".join(self.feature_names).encode())
        h.update(self.label_name.encode())
        h.update(self.features.tobytes())
        h.update(self.labels.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SplitPair:
    """Disjoint train/test row subsets of one source dataset."""

    train: Dataset
    test: Dataset


def load_dataset(path: str | Path, label_column: str) -> Dataset:
    """Load a UTF-8 CSV with a header row into a Dataset.

    The label column must contain only 0/1; every other column must be
    fully numeric and finite.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    try:
        frame = pd.read_csv(path, encoding="utf-8", float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise DataError(f"{path} is empty") from None
    except Exception as exc:
        raise DataError(f"could not parse {path}: {exc}") from exc
    if frame.shape[0] == 0:
        raise DataError(f"{path} has a header but no rows")
    if label_column not in frame.columns:
        raise DataError(f"{path} has no column named {label_column!r}")

    label_raw = frame[label_column]
    labels = pd.to_numeric(label_raw, errors="coerce")
    if labels.isna().any() or not labels.isin((0, 1)).all():
        raise DataError(f"label column {label_column!r} must contain only 0 and 1")

    feature_frame = frame.drop(columns=[label_column])
    if feature_frame.shape[1] == 0:
        raise DataError(f"{path} has no feature columns besides the label")
    for col in feature_frame.columns:
        numeric = pd.to_numeric(feature_frame[col], errors="coerce")
        bad = numeric.isna() | ~np.isfinite(numeric.to_numpy(dtype=np.float64))
        if bad.any():
            row = int(np.argmax(bad.to_numpy()))
            raise DataError(
                f"feature column {col!r} has a non-numeric or non-finite value at data row {row}"
            )
        feature_frame[col] = numeric

    return Dataset(
        features=feature_frame.to_numpy(dtype=np.float64),
        labels=labels.to_numpy(dtype=np.int8),
        feature_names=tuple(str(c) for c in feature_frame.columns),
        label_name=label_column,
    )


def save_dataset(data: Dataset, path: str | Path) -> None:
    """Write a Dataset back to CSV (features then label, lossless floats)."""
    frame = pd.DataFrame(data.features, columns=list(data.feature_names))
    frame[data.label_name] = data.labels.astype(int)
    frame.to_csv(path, index=False)


def split(data: Dataset, train_fraction: float, seed: int) -> SplitPair:
    """Seeded disjoint train/test partition; train gets floor(n*fraction) rows."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must lie strictly between 0 and 1")
    n = data.row_count
    n_train = int(n * train_fraction)
    if n_train < 1 or n - n_train < 1:
        raise DataError(
            f"split of {n} rows at fraction {train_fraction} leaves an empty side"
        )
    perm = rng_from_seed(seed).permutation(n)
    train_rows = np.sort(perm[:n_train])
    test_rows = np.sort(perm[n_train:])
    return SplitPair(train=data.take(train_rows), test=data.take(test_rows))


def subsample(
    data: Dataset,
    size: int,
    seed: int,
    stratified: bool = False,
) -> Dataset:
    """Seeded uniform sample of ``size`` rows without replacement.

    With ``stratified=True`` the label proportions are preserved to the
    nearest row (at least one row per class when the source has both);
    useful for heavily imbalanced data where tiny uniform subsamples can
    miss the rare class.
    """
    n = data.row_count
    if not 1 <= size <= n:
        raise DataError(f"subsample size {size} out of range 1..{n}")
    rng = rng_from_seed(seed)
    if not stratified:
        rows = np.sort(rng.choice(n, size=size, replace=False))
        return data.take(rows)

    pos_rows = np.flatnonzero(data.labels == 1)
    neg_rows = np.flatnonzero(data.labels == 0)
    if len(pos_rows) == 0 or len(neg_rows) == 0:
        rows = np.sort(rng.choice(n, size=size, replace=False))
        return data.take(rows)
    n_pos = int(round(size * len(pos_rows) / n))
    n_pos = min(max(n_pos, 1), len(pos_rows), size - 1) if size >= 2 else n_pos
    n_pos = max(n_pos, size - len(neg_rows))
    n_neg = size - n_pos
    take_pos = rng.choice(len(pos_rows), size=n_pos, replace=False)
    take_neg = rng.choice(len(neg_rows), size=n_neg, replace=False)
    rows = np.sort(np.concatenate([pos_rows[take_pos], neg_rows[take_neg]]))
    return data.take(rows)
