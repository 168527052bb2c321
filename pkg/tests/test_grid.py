from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpi.errors import (
    DefaultNotInValuesError,
    DuplicateAxisError,
    DuplicateValueError,
    EmptyAxisError,
    GridError,
    MalformedGridError,
    MixedTypeAxisError,
)
from hpi.grid import (
    Assignment,
    Axis,
    HyperGrid,
    enumerate_points,
    flat_index,
    parse_grid,
    parse_grid_config,
    serialize_grid,
)

TWO_AXIS = """
axes:
  max_depth: {values: [2, 4, 6], default: 4}
  step_size: {values: [0.05, 0.1], default: 0.1}
"""


def test_parse_grid_sizes_and_order():
    grid = parse_grid(TWO_AXIS)
    assert grid.axis_names == ("max_depth", "step_size")
    assert grid.axis_sizes == (3, 2)
    assert grid.size == 6
    assert grid.axis("max_depth").default == 4


def test_singleton_grid():
    grid = parse_grid("axes:\n  a: {values: [1]}\n")
    assert grid.size == 1
    assert grid.axis("a").default == 1


def test_duplicate_value_rejected():
    with pytest.raises(DuplicateValueError):
        parse_grid("axes:\n  a: {values: [1, 1]}\n")


def test_duplicate_axis_rejected():
    text = "axes:\n  a: {values: [1]}\n  a: {values: [2]}\n"
    with pytest.raises(DuplicateAxisError):
        parse_grid(text)


def test_empty_values_rejected():
    with pytest.raises(EmptyAxisError):
        parse_grid("axes:\n  a: {values: []}\n")


def test_default_not_in_values_rejected():
    with pytest.raises(DefaultNotInValuesError):
        parse_grid("axes:\n  a: {values: [1, 2], default: 3}\n")


def test_mixed_types_rejected():
    with pytest.raises(MixedTypeAxisError):
        parse_grid("axes:\n  a: {values: [1, two]}\n")


def test_malformed_text_rejected():
    with pytest.raises(MalformedGridError):
        parse_grid("axes: [not, a, map]\n")
    with pytest.raises(MalformedGridError):
        parse_grid("nothing: here\n")
    with pytest.raises(MalformedGridError):
        parse_grid("axes:\n  a: {values: [1], nonsense: 2}\n")


def test_joint_pairs_parsed_and_validated():
    config = parse_grid_config(TWO_AXIS + "joint:\n  - [max_depth, step_size]\n")
    assert config.joint_pairs == (("max_depth", "step_size"),)
    with pytest.raises(MalformedGridError):
        parse_grid_config(TWO_AXIS + "joint:\n  - [max_depth, max_depth]\n")
    with pytest.raises(GridError):
        parse_grid_config(TWO_AXIS + "joint:\n  - [max_depth, nope]\n")


def test_enumeration_row_major(small_grid):
    points = [p.as_dict() for p in enumerate_points(small_grid)]
    assert points == [
        {"a": 1, "b": "x"},
        {"a": 1, "b": "y"},
        {"a": 2, "b": "x"},
        {"a": 2, "b": "y"},
    ]


def test_flat_index_corners(small_grid):
    assert flat_index(small_grid, Assignment({"a": 1, "b": "x"})) == 0
    assert flat_index(small_grid, Assignment({"a": 2, "b": "y"})) == 3


def test_flat_index_hand_computed():
    grid = parse_grid("axes:\n  a: {values: [1, 2, 3]}\n  b: {values: [0, 1]}\n")
    # index = i_a * p_b + i_b for the row-major order
    assert flat_index(grid, {"a": 2, "b": 1}) == 1 * 2 + 1
    assert len(list(enumerate_points(grid))) == 6


def test_flat_index_errors(small_grid):
    with pytest.raises(GridError):
        flat_index(small_grid, {"a": 1, "c": "x"})
    with pytest.raises(GridError):
        flat_index(small_grid, {"a": 1})
    with pytest.raises(GridError):
        flat_index(small_grid, {"a": 7, "b": "x"})


def test_enumerate_flat_index_inverse_three_axes():
    grid = parse_grid(
        """
axes:
  a: {values: [1, 2, 3]}
  b: {values: [u, v]}
  c: {values: [0.1, 0.2, 0.3, 0.4]}
"""
    )
    for i, point in enumerate(enumerate_points(grid)):
        assert flat_index(grid, point) == i
        assert grid.assignment_at(i).as_dict() == point.as_dict()


@st.composite
def grid_texts(draw) -> str:
    n_axes = draw(st.integers(1, 4))
    lines = ["axes:"]
    for i in range(n_axes):
        kind = draw(st.sampled_from(["int", "float", "str"]))
        size = draw(st.integers(1, 4))
        if kind == "int":
            values = draw(
                st.lists(st.integers(-50, 50), min_size=size, max_size=size, unique=True)
            )
        elif kind == "float":
            values = draw(
                st.lists(
                    st.floats(-10, 10, allow_nan=False).map(lambda x: round(x, 3)),
                    min_size=size,
                    max_size=size,
                    unique=True,
                )
            )
        else:
            values = draw(
                st.lists(
                    st.text(alphabet="abcdefgh", min_size=1, max_size=4),
                    min_size=size,
                    max_size=size,
                    unique=True,
                )
            )
        default = draw(st.sampled_from(values))
        rendered = ", ".join(repr(v) for v in values)
        lines.append(f"  ax{i}: {{values: [{rendered}], default: {default!r}}}")
    return "\n".join(lines) + "\n"


@given(grid_texts())
@settings(max_examples=60, deadline=None)
def test_parse_serialize_roundtrip(text):
    grid = parse_grid(text)
    again = parse_grid(serialize_grid(grid))
    assert again == grid
    assert parse_grid(serialize_grid(again)) == again


@given(grid_texts())
@settings(max_examples=40, deadline=None)
def test_enumeration_bijection_property(text):
    grid = parse_grid(text)
    seen = set()
    for i, point in enumerate(enumerate_points(grid)):
        assert flat_index(grid, point) == i
        seen.add(tuple(sorted(point.as_dict().items())))
    assert len(seen) == grid.size


def test_numeric_axis_with_floats_coerces_uniformly():
    grid = parse_grid("axes:\n  s: {values: [0.05, 0.1, 1], default: 1}\n")
    assert grid.axis("s").values == (0.05, 0.1, 1.0)
    assert isinstance(grid.axis("s").default, float)


def test_grid_and_assignment_are_immutable(small_grid):
    axis = small_grid.axis("a")
    with pytest.raises(Exception):
        axis.name = "other"
    point = next(iter(enumerate_points(small_grid)))
    with pytest.raises(Exception):
        point.bindings = {}


def test_direct_construction_duplicate_axis():
    with pytest.raises(DuplicateAxisError):
        HyperGrid((Axis("a", (1,), 1), Axis("a", (2,), 2)))
