"""Hyperparameter importance as variance of the risk over the grid.

Two variance forms are computed for every axis. The *before* form
averages the risk over all other axes first and takes the population
variance of that one-dimensional profile (the main-effect variance).
The *after* form is the total variance left once the other axes' main
effects are removed:

    after_j = Var(R) - sum_{i != j} before_i

For two axes this is exactly the classic "variance along axis j within
each slice, averaged over slices" (law of total variance), and for any
number of axes it keeps the ranking identity exact:

    before_j - before_k == after_j - after_k
                        == mean(m_j^2) - mean(m_k^2)

where m_j is the marginal mean profile of axis j. Rankings therefore
never depend on which form is reported.

All variances are population variances (divide by the count): the grid
is a finite uniform probability space, not a sample from one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.stats import kendalltau

from .errors import ConfigError, DataError
from .tensor import LossTensor, marginal_mean

FORMS = ("before", "after")
AGGREGATIONS = ("mean-then-variance", "variance-then-mean")


def _as_grid_array(grid_array: np.ndarray) -> np.ndarray:
    arr = np.asarray(grid_array, dtype=np.float64)
    if arr.ndim < 1:
        raise DataError("grid array must have at least one axis")
    if not np.all(np.isfinite(arr)):
        raise DataError("grid array contains non-finite values")
    return arr


def _check_axis(arr: np.ndarray, axis: int) -> int:
    axis = int(axis)
    if not 0 <= axis < arr.ndim:
        raise DataError(f"axis {axis} invalid for a {arr.ndim}-axis array")
    return axis


def importance_before(grid_array: np.ndarray, axis: int) -> float:
    """Population variance of the risk profile marginalized onto one axis."""
    arr = _as_grid_array(grid_array)
    axis = _check_axis(arr, axis)
    profile = marginal_mean(arr, [axis])
    return float(np.var(profile))


def importance_after(grid_array: np.ndarray, axis: int) -> float:
    """Total variance minus the other axes' main-effect variances.

    Equals the slice-averaged variance along the axis when the grid has
    at most two axes, and preserves before/after ranking equality for
    any axis count.
    """
    arr = _as_grid_array(grid_array)
    axis = _check_axis(arr, axis)
    others = [i for i in range(arr.ndim) if i != axis]
    value = float(np.var(arr)) - sum(importance_before(arr, i) for i in others)
    return max(value, 0.0)


def ranking_difference(grid_array: np.ndarray, axis_j: int, axis_k: int) -> float:
    """mean(m_j^2) - mean(m_k^2); equals importance(j) - importance(k) in either form."""
    arr = _as_grid_array(grid_array)
    axis_j = _check_axis(arr, axis_j)
    axis_k = _check_axis(arr, axis_k)
    if axis_j == axis_k:
        raise DataError("ranking_difference needs two distinct axes")
    m_j = marginal_mean(arr, [axis_j])
    m_k = marginal_mean(arr, [axis_k])
    return float(np.mean(m_j**2) - np.mean(m_k**2))


def joint_importance(grid_array: np.ndarray, axes: Sequence[int], form: str = "before") -> float:
    """Importance of a pair of axes varied together.

    Before form: population variance of the two-axis marginal-mean
    matrix. After form: total variance minus the remaining axes'
    main-effect variances (same construction as the single-axis case).
    """
    arr = _as_grid_array(grid_array)
    pair = [_check_axis(arr, a) for a in axes]
    if len(pair) != 2 or pair[0] == pair[1]:
        raise DataError("joint importance needs two distinct axes")
    if form == "before":
        return float(np.var(marginal_mean(arr, pair)))
    if form == "after":
        others = [i for i in range(arr.ndim) if i not in pair]
        value = float(np.var(arr)) - sum(importance_before(arr, i) for i in others)
        return max(value, 0.0)
    raise ConfigError(f"unknown importance form {form!r}; choose from {FORMS}")


@dataclass(frozen=True)
class ImportanceReport:
    """Per-axis (and optional per-pair) variance scores with a ranking."""

    axis_names: tuple[str, ...]
    before: dict[str, float]
    after: dict[str, float]
    pair_scores: dict[tuple[str, str], dict[str, float]]
    ranking: tuple[str, ...]
    chosen_form: str
    replicate_dispersion: dict[str, float]
    metadata: dict[str, Any] = field(default_factory=dict)

    def scores(self, form: str | None = None) -> dict[str, float]:
        form = form or self.chosen_form
        if form == "before":
            return dict(self.before)
        if form == "after":
            return dict(self.after)
        raise ConfigError(f"unknown importance form {form!r}; choose from {FORMS}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "axes": list(self.axis_names),
            "scores": {
                name: {"before": self.before[name], "after": self.after[name]}
                for name in self.axis_names
            },
            "pairs": [
                {"axes": list(pair), "before": forms["before"], "after": forms["after"]}
                for pair, forms in self.pair_scores.items()
            ],
            "ranking": list(self.ranking),
            "chosen_form": self.chosen_form,
            "replicate_dispersion": {
                name: self.replicate_dispersion[name] for name in self.axis_names
            },
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ImportanceReport":
        axes = tuple(str(a) for a in doc["axes"])
        scores = doc["scores"]
        return cls(
            axis_names=axes,
            before={a: float(scores[a]["before"]) for a in axes},
            after={a: float(scores[a]["after"]) for a in axes},
            pair_scores={
                (p["axes"][0], p["axes"][1]): {
                    "before": float(p["before"]),
                    "after": float(p["after"]),
                }
                for p in doc.get("pairs", [])
            },
            ranking=tuple(str(a) for a in doc["ranking"]),
            chosen_form=str(doc["chosen_form"]),
            replicate_dispersion={
                a: float(v) for a, v in doc.get("replicate_dispersion", {}).items()
            },
            metadata=dict(doc.get("metadata", {})),
        )


def rank_axes(axis_names: Sequence[str], scores: Mapping[str, float]) -> tuple[str, ...]:
    """Axis names by descending score; ties keep declaration order."""
    order = sorted(range(len(axis_names)), key=lambda i: (-scores[axis_names[i]], i))
    return tuple(axis_names[i] for i in order)


def compute_report(
    tensor: LossTensor,
    pairs: Sequence[tuple[str, str]] = (),
    form: str = "before",
    aggregation: str = "mean-then-variance",
) -> ImportanceReport:
    """Importance scores for every axis of a complete loss tensor.

    ``mean-then-variance`` (default) averages the T replicate grids
    first and scores the averaged grid; ``variance-then-mean`` scores
    each replicate and averages the scores. Both report the population
    standard deviation of the per-replicate chosen-form scores as the
    replicate dispersion.
    """
    if form not in FORMS:
        raise ConfigError(f"unknown importance form {form!r}; choose from {FORMS}")
    if aggregation not in AGGREGATIONS:
        raise ConfigError(f"unknown aggregation {aggregation!r}; choose from {AGGREGATIONS}")
    tensor.require_complete()
    names = tensor.axis_names
    positions = {name: i for i, name in enumerate(names)}
    for a, b in pairs:
        if a not in positions or b not in positions:
            raise ConfigError(f"joint pair ({a!r}, {b!r}) names an unknown axis")

    per_replicate: dict[str, list[float]] = {
        fm: [] for fm in FORMS
    }  # form -> [T x q] score rows
    for t in range(tensor.replicate_count):
        grid_t = tensor.replicate_values(t)
        per_replicate["before"].append([importance_before(grid_t, positions[n]) for n in names])
        per_replicate["after"].append([importance_after(grid_t, positions[n]) for n in names])

    mean_grid = tensor.replicate_mean()
    if aggregation == "mean-then-variance":
        before = {n: importance_before(mean_grid, positions[n]) for n in names}
        after = {n: importance_after(mean_grid, positions[n]) for n in names}
        pair_scores = {
            (a, b): {
                fm: joint_importance(mean_grid, (positions[a], positions[b]), fm) for fm in FORMS
            }
            for a, b in pairs
        }
    else:
        before_mat = np.asarray(per_replicate["before"])
        after_mat = np.asarray(per_replicate["after"])
        before = {n: float(before_mat[:, i].mean()) for i, n in enumerate(names)}
        after = {n: float(after_mat[:, i].mean()) for i, n in enumerate(names)}
        pair_scores = {}
        for a, b in pairs:
            ax = (positions[a], positions[b])
            per_t = {
                fm: [
                    joint_importance(tensor.replicate_values(t), ax, fm)
                    for t in range(tensor.replicate_count)
                ]
                for fm in FORMS
            }
            pair_scores[(a, b)] = {fm: float(np.mean(per_t[fm])) for fm in FORMS}

    chosen_mat = np.asarray(per_replicate[form])
    dispersion = {n: float(chosen_mat[:, i].std()) for i, n in enumerate(names)}
    chosen_scores = before if form == "before" else after
    metadata = dict(tensor.meta)
    metadata["aggregation"] = aggregation
    return ImportanceReport(
        axis_names=names,
        before=before,
        after=after,
        pair_scores=pair_scores,
        ranking=rank_axes(names, chosen_scores),
        chosen_form=form,
        replicate_dispersion=dispersion,
        metadata=metadata,
    )


@dataclass(frozen=True)
class ConsistencyVerdict:
    """Agreement of importance rankings across subsample sizes."""

    sizes: tuple[int, ...]
    rankings: dict[int, tuple[str, ...]]
    exact_match: bool
    kendall_tau: dict[tuple[int, int], float]
    top_k: int
    top_k_match: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "sizes": list(self.sizes),
            "rankings": {str(s): list(r) for s, r in self.rankings.items()},
            "exact_match": self.exact_match,
            "kendall_tau": [
                {"sizes": [a, b], "tau": t} for (a, b), t in self.kendall_tau.items()
            ],
            "top_k": self.top_k,
            "top_k_match": self.top_k_match,
        }


def ranking_kendall_tau(first: Sequence[str], second: Sequence[str]) -> float:
    """Kendall tau between two orderings of the same item set."""
    if set(first) != set(second) or len(first) != len(second):
        raise DataError("rankings must order the same items")
    if len(first) < 2:
        return 1.0
    pos = {name: i for i, name in enumerate(second)}
    x = list(range(len(first)))
    y = [pos[name] for name in first]
    return float(kendalltau(x, y).statistic)


def consistency_check(reports: Sequence[ImportanceReport], k: int = 2) -> ConsistencyVerdict:
    """Compare rankings across reports taken at increasing subsample sizes."""
    if len(reports) < 2:
        raise ConfigError("consistency check needs at least two reports")
    axes = reports[0].axis_names
    metric = reports[0].metadata.get("metric")
    for rep in reports[1:]:
        if rep.axis_names != axes:
            raise DataError("reports disagree on grid axes")
        if rep.metadata.get("metric") != metric:
            raise DataError("reports disagree on the metric")
    sizes = []
    for rep in reports:
        size = rep.metadata.get("subsample_size")
        sizes.append(int(size) if size is not None else len(sizes))
    k = max(1, min(int(k), len(axes)))

    rankings = {size: rep.ranking for size, rep in zip(sizes, reports)}
    exact = all(rep.ranking == reports[0].ranking for rep in reports)
    taus: dict[tuple[int, int], float] = {}
    for i in range(len(reports)):
        for j in range(i + 1, len(reports)):
            taus[(sizes[i], sizes[j])] = ranking_kendall_tau(
                reports[i].ranking, reports[j].ranking
            )
    top_k = all(rep.ranking[:k] == reports[0].ranking[:k] for rep in reports)
    return ConsistencyVerdict(
        sizes=tuple(sizes),
        rankings=rankings,
        exact_match=exact,
        kendall_tau=taus,
        top_k=k,
        top_k_match=top_k,
    )
