"""Finite hyperparameter grids.

A grid is an ordered list of named axes, each with an explicit finite
candidate list and a default. Grid points are enumerated in row-major
order (last axis varies fastest), and every point has a stable flat
index used to key loss-tensor cells and per-fit seeds.

Grids are defined in YAML: a top-level ``axes`` map (declaration order is
preserved), each entry ``{values: [...], default: <v>}``, plus an optional
``joint: [[name, name], ...]`` list requesting pair importances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

import yaml

from .errors import (
    DefaultNotInValuesError,
    DuplicateAxisError,
    DuplicateValueError,
    EmptyAxisError,
    GridError,
    MalformedGridError,
    MixedTypeAxisError,
)

# Candidate values are 64-bit floats, 64-bit ints, or string categories.
AxisValue = float | int | str


def _check_axis_values(name: str, values: Sequence[Any]) -> tuple[AxisValue, ...]:
    if len(values) == 0:
        raise EmptyAxisError(f"axis {name!r} has an empty candidate list")
    if any(isinstance(v, bool) for v in values):
        raise GridError(f"axis {name!r} uses boolean candidates; use 0/1 or strings")
    is_str = [isinstance(v, str) for v in values]
    is_num = [isinstance(v, (int, float)) for v in values]
    if all(is_str):
        out: tuple[AxisValue, ...] = tuple(values)
    elif all(is_num):
        # A numeric axis is uniformly int, or uniformly float if any
        # candidate is fractional.
        if any(isinstance(v, float) for v in values):
            out = tuple(float(v) for v in values)
        else:
            out = tuple(int(v) for v in values)
        if any(isinstance(v, float) and not math.isfinite(v) for v in out):
            raise GridError(f"axis {name!r} has a non-finite candidate")
    else:
        raise MixedTypeAxisError(f"axis {name!r} mixes numeric and string candidates")
    if len(set(out)) != len(out):
        raise DuplicateValueError(f"axis {name!r} lists a candidate more than once")
    return out


@dataclass(frozen=True)
class Axis:
    """One hyperparameter: a name, its candidates, and a default."""

    name: str
    values: tuple[AxisValue, ...]
    default: AxisValue

    def __post_init__(self) -> None:
        values = _check_axis_values(self.name, self.values)
        object.__setattr__(self, "values", values)
        default = self.default
        if isinstance(values[0], float) and isinstance(default, int) and not isinstance(default, bool):
            default = float(default)
            object.__setattr__(self, "default", default)
        if default not in values:
            raise DefaultNotInValuesError(
                f"axis {self.name!r}: default {default!r} is not a candidate"
            )

    @property
    def size(self) -> int:
        return len(self.values)

    def index_of(self, value: AxisValue) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise GridError(f"axis {self.name!r} has no candidate {value!r}") from None


@dataclass(frozen=True)
class HyperGrid:
    """An ordered collection of axes spanning a finite product grid."""

    axes: tuple[Axis, ...]
    _by_name: dict[str, Axis] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise DuplicateAxisError("grid declares the same axis name twice")
        object.__setattr__(self, "_by_name", {a.name: a for a in axes})

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    @property
    def axis_sizes(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.axis_sizes)

    def axis(self, name: str) -> Axis:
        try:
            return self._by_name[name]
        except KeyError:
            raise GridError(f"grid has no axis named {name!r}") from None

    def axis_position(self, name: str) -> int:
        self.axis(name)
        return self.axis_names.index(name)

    def defaults(self) -> "Assignment":
        return Assignment({a.name: a.default for a in self.axes})

    def assignment_at(self, flat: int) -> "Assignment":
        """Assignment at a flat index (inverse of :func:`flat_index`)."""
        if not 0 <= flat < self.size:
            raise GridError(f"flat index {flat} out of range for grid of size {self.size}")
        bindings: dict[str, AxisValue] = {}
        for axis in reversed(self.axes):
            flat, i = divmod(flat, axis.size)
            bindings[axis.name] = axis.values[i]
        return Assignment({a.name: bindings[a.name] for a in self.axes})


@dataclass(frozen=True)
class Assignment:
    """One grid point: a value chosen for every axis of the owning grid."""

    bindings: Mapping[str, AxisValue]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bindings", dict(self.bindings))

    def __getitem__(self, name: str) -> AxisValue:
        return self.bindings[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.bindings)

    def as_dict(self) -> dict[str, AxisValue]:
        return dict(self.bindings)

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.bindings.items(), key=lambda kv: kv[0])))


def enumerate_points(grid: HyperGrid) -> Iterator[Assignment]:
    """Yield all grid points in row-major order (last axis fastest)."""
    for flat in range(grid.size):
        yield grid.assignment_at(flat)


def flat_index(grid: HyperGrid, assignment: Assignment | Mapping[str, AxisValue]) -> int:
    """Flat index of a grid point under the row-major enumeration order."""
    bindings = assignment.bindings if isinstance(assignment, Assignment) else assignment
    extra = set(bindings) - set(grid.axis_names)
    if extra:
        raise GridError(f"assignment binds unknown axes: {sorted(extra)}")
    missing = set(grid.axis_names) - set(bindings)
    if missing:
        raise GridError(f"assignment misses axes: {sorted(missing)}")
    flat = 0
    for axis in grid.axes:
        flat = flat * axis.size + axis.index_of(bindings[axis.name])
    return flat


@dataclass(frozen=True)
class GridConfig:
    """Parsed grid config: the grid plus any requested joint pairs."""

    grid: HyperGrid
    joint_pairs: tuple[tuple[str, str], ...] = ()


def _reject_duplicate_keys(text: str) -> None:
    """YAML maps silently keep the last duplicate key; reject them instead.

    A duplicate under ``axes`` is a duplicate axis declaration; duplicates
    anywhere else are malformed config.
    """

    def walk(node: yaml.Node, under_axes: bool) -> None:
        if isinstance(node, yaml.MappingNode):
            seen: set[str] = set()
            for key_node, value_node in node.value:
                key = getattr(key_node, "value", None)
                if key in seen:
                    if under_axes:
                        raise DuplicateAxisError(f"axis {key!r} is declared twice")
                    raise MalformedGridError(f"duplicate key {key!r} in grid config")
                if isinstance(key, str):
                    seen.add(key)
                walk(value_node, not under_axes and key == "axes")
        elif isinstance(node, yaml.SequenceNode):
            for child in node.value:
                walk(child, False)

    root = yaml.compose(text, Loader=yaml.SafeLoader)
    if root is not None:
        walk(root, False)


def parse_grid_config(text: str) -> GridConfig:
    """Parse the YAML grid schema into a grid and its requested pairs."""
    try:
        _reject_duplicate_keys(text)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise MalformedGridError(f"grid config is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict) or "axes" not in doc:
        raise MalformedGridError("grid config must be a map with a top-level 'axes' key")
    axes_node = doc["axes"]
    if not isinstance(axes_node, dict) or not axes_node:
        raise MalformedGridError("'axes' must be a non-empty map of axis name -> spec")
    unknown = set(doc) - {"axes", "joint"}
    if unknown:
        raise MalformedGridError(f"unknown top-level keys in grid config: {sorted(unknown)}")

    axes: list[Axis] = []
    for name, node in axes_node.items():
        if not isinstance(name, str):
            raise MalformedGridError(f"axis name {name!r} is not a string")
        if not isinstance(node, dict) or "values" not in node:
            raise MalformedGridError(f"axis {name!r} must be a map with a 'values' list")
        bad_keys = set(node) - {"values", "default"}
        if bad_keys:
            raise MalformedGridError(f"axis {name!r} has unknown keys: {sorted(bad_keys)}")
        values = node["values"]
        if not isinstance(values, list):
            raise MalformedGridError(f"axis {name!r}: 'values' must be a list")
        checked = _check_axis_values(name, values)
        default = node.get("default", checked[0])
        axes.append(Axis(name=name, values=checked, default=default))
    grid = HyperGrid(tuple(axes))

    pairs: list[tuple[str, str]] = []
    for pair in doc.get("joint") or []:
        if not (isinstance(pair, list) and len(pair) == 2):
            raise MalformedGridError(f"joint entry {pair!r} must be a [name, name] pair")
        a, b = pair
        grid.axis(a), grid.axis(b)
        if a == b:
            raise MalformedGridError(f"joint pair [{a!r}, {b!r}] repeats one axis")
        pairs.append((a, b))
    return GridConfig(grid=grid, joint_pairs=tuple(pairs))


def parse_grid(text: str) -> HyperGrid:
    """Parse the YAML grid schema, ignoring any ``joint`` request."""
    return parse_grid_config(text).grid


def serialize_grid(grid: HyperGrid, joint_pairs: Sequence[tuple[str, str]] = ()) -> str:
    """Render a grid back to its YAML schema (round-trip stable)."""
    doc: dict[str, Any] = {
        "axes": {
            a.name: {"values": list(a.values), "default": a.default} for a in grid.axes
        }
    }
    if joint_pairs:
        doc["joint"] = [list(p) for p in joint_pairs]
    return yaml.safe_dump(doc, sort_keys=False)


def grid_to_dict(grid: HyperGrid) -> list[dict[str, Any]]:
    """JSON-friendly description of the axes, in declaration order."""
    return [
        {"name": a.name, "values": list(a.values), "default": a.default} for a in grid.axes
    ]


def grid_from_dict(axes: Sequence[Mapping[str, Any]]) -> HyperGrid:
    return HyperGrid(
        tuple(
            Axis(
                name=str(node["name"]),
                values=_check_axis_values(str(node["name"]), node["values"]),
                default=node["default"],
            )
            for node in axes
        )
    )
