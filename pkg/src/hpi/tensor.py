"""The replicate x grid loss tensor and its marginalization primitives.

One tensor holds every loss from grid search on T subsamples of one
size: shape (T, p_1, ..., p_q). Cells are written once each (any order,
any worker), and all reductions run only after the tensor is complete.
Checkpoints round-trip the tensor losslessly for ``estimate --resume``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import HpiError
from .grid import Assignment, HyperGrid, flat_index, grid_from_dict, grid_to_dict

CHECKPOINT_SCHEMA = "hpi-tensor/1"


class TensorError(HpiError):
    """Loss-tensor assembly or checkpoint violation."""


@dataclass
class LossTensor:
    """Dense loss hyper-matrix under incremental, write-once assembly."""

    grid: HyperGrid
    replicate_count: int
    meta: dict[str, Any] = field(default_factory=dict)
    values: np.ndarray = field(init=False)
    filled: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if self.replicate_count < 1:
            raise TensorError("replicate_count must be >= 1")
        shape = (self.replicate_count, *self.grid.axis_sizes)
        self.values = np.full(shape, np.nan)
        self.filled = np.zeros(shape, dtype=bool)

    @property
    def axis_names(self) -> tuple[str, ...]:
        return self.grid.axis_names

    @property
    def axis_sizes(self) -> tuple[int, ...]:
        return self.grid.axis_sizes

    @property
    def cell_count(self) -> int:
        return self.replicate_count * self.grid.size

    def _flat(self, point: Assignment | Mapping[str, Any] | int) -> int:
        if isinstance(point, int):
            if not 0 <= point < self.grid.size:
                raise TensorError(f"grid index {point} out of range 0..{self.grid.size - 1}")
            return point
        return flat_index(self.grid, point)

    def set_cell(self, t: int, point: Assignment | Mapping[str, Any] | int, loss: float) -> None:
        """Record one evaluated loss; a cell can be written exactly once."""
        if not 0 <= t < self.replicate_count:
            raise TensorError(f"replicate index {t} out of range 0..{self.replicate_count - 1}")
        flat = self._flat(point)
        if not math.isfinite(loss):
            raise TensorError(f"loss for replicate {t}, grid index {flat} is not finite: {loss!r}")
        flat_values = self.values.reshape(self.replicate_count, -1)
        flat_mask = self.filled.reshape(self.replicate_count, -1)
        if flat_mask[t, flat]:
            raise TensorError(f"cell (t={t}, grid index {flat}) written twice")
        flat_values[t, flat] = float(loss)
        flat_mask[t, flat] = True

    def get_cell(self, t: int, point: Assignment | Mapping[str, Any] | int) -> float:
        flat = self._flat(point)
        flat_mask = self.filled.reshape(self.replicate_count, -1)
        if not flat_mask[t, flat]:
            raise TensorError(f"cell (t={t}, grid index {flat}) has not been set")
        return float(self.values.reshape(self.replicate_count, -1)[t, flat])

    def is_complete(self) -> bool:
        return bool(self.filled.all())

    def missing_cells(self) -> list[tuple[int, int]]:
        """(replicate, grid flat index) pairs still unfilled, in order."""
        flat_mask = self.filled.reshape(self.replicate_count, -1)
        t_idx, g_idx = np.nonzero(~flat_mask)
        return list(zip(t_idx.tolist(), g_idx.tolist()))

    def require_complete(self) -> None:
        if not self.is_complete():
            missing = int((~self.filled).sum())
            raise TensorError(f"tensor incomplete: {missing} of {self.cell_count} cells unset")

    def replicate_values(self, t: int) -> np.ndarray:
        self.require_complete()
        return self.values[t]

    def replicate_mean(self) -> np.ndarray:
        """Grid-shaped mean over the replicate axis (the averaged-error estimator)."""
        self.require_complete()
        return self.values.mean(axis=0)


def marginal_mean(grid_array: np.ndarray, keep_axes: Sequence[int]) -> np.ndarray:
    """Uniform average over all axes not in ``keep_axes``.

    Kept axes stay in their original relative order; keeping every axis
    is the identity.
    """
    keep = sorted(set(int(a) for a in keep_axes))
    if not keep:
        raise TensorError("keep_axes must be non-empty")
    if any(a < 0 or a >= grid_array.ndim for a in keep):
        raise TensorError(f"keep_axes {keep} invalid for a {grid_array.ndim}-axis array")
    drop = tuple(a for a in range(grid_array.ndim) if a not in keep)
    if not drop:
        return np.asarray(grid_array, dtype=np.float64)
    return np.asarray(grid_array, dtype=np.float64).mean(axis=drop)


def save_checkpoint(tensor: LossTensor, path: str | Path) -> None:
    """Atomically write the tensor (values, fill mask, header) to an .npz."""
    path = Path(path)
    header = {
        "schema": CHECKPOINT_SCHEMA,
        "axes": grid_to_dict(tensor.grid),
        "replicate_count": tensor.replicate_count,
        "meta": tensor.meta,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(
            fh,
            header=np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8),
            values=tensor.values,
            filled=tensor.filled,
        )
    os.replace(tmp, path)


def load_checkpoint(path: str | Path) -> LossTensor:
    path = Path(path)
    with np.load(path) as bundle:
        try:
            header = json.loads(bundle["header"].tobytes().decode())
        except KeyError:
            raise TensorError(f"{path} is not a tensor checkpoint (no header)") from None
        if header.get("schema") != CHECKPOINT_SCHEMA:
            raise TensorError(
                f"{path} is not a tensor checkpoint (schema {header.get('schema')!r})"
            )
        try:
            values = bundle["values"]
            filled = bundle["filled"]
        except KeyError as exc:
            raise TensorError(f"{path} is missing the {exc} array") from None
    grid = grid_from_dict(header["axes"])
    tensor = LossTensor(
        grid=grid, replicate_count=int(header["replicate_count"]), meta=dict(header["meta"])
    )
    if values.shape != tensor.values.shape:
        raise TensorError(f"{path} shape {values.shape} does not match grid {tensor.values.shape}")
    if not np.all(np.isfinite(values[filled])):
        raise TensorError(f"{path} stores non-finite losses in filled cells")
    tensor.values = values.astype(np.float64)
    tensor.filled = filled.astype(bool)
    return tensor


def checkpoint_matches(tensor: LossTensor, meta: Mapping[str, Any], keys: Iterable[str]) -> bool:
    """True when the checkpoint's run identity agrees on every given key."""
    return all(tensor.meta.get(k) == meta.get(k) for k in keys)
