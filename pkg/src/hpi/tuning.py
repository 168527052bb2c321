"""Sequential group-wise tuning driven by an importance ranking.

A plan partitions (a subset of) the grid's axes into ordered groups.
Tuning sweeps each group's sub-grid in turn, holding earlier groups at
their chosen values and later ones at defaults, so the total fit count
is the sum of group grid sizes instead of their product. A single-group
plan of all axes degenerates to the simultaneous full-grid baseline.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

from .data import Dataset, derive_seed
from .errors import ConfigError, TrainerError
from .grid import Assignment, AxisValue, HyperGrid, grid_from_dict, grid_to_dict
from .importance import ImportanceReport
from .metrics import Metric
from .trainers import TrainerContract

DEFAULT_GAP_RATIO = 3.0


@dataclass(frozen=True)
class TuningPlan:
    """Ordered axis groups plus the defaults held while untuned."""

    grid: HyperGrid
    groups: tuple[tuple[str, ...], ...]
    defaults: Assignment

    def __post_init__(self) -> None:
        if not self.groups:
            raise ConfigError("a tuning plan needs at least one group")
        seen: set[str] = set()
        for group in self.groups:
            if not group:
                raise ConfigError("tuning groups must be non-empty")
            for name in group:
                self.grid.axis(name)
                if name in seen:
                    raise ConfigError(f"axis {name!r} appears in more than one group")
                seen.add(name)
        for name in self.grid.axis_names:
            if name not in self.defaults.bindings:
                raise ConfigError(f"plan defaults miss axis {name!r}")
            self.grid.axis(name).index_of(self.defaults[name])

    @property
    def fit_count(self) -> int:
        total = 0
        for group in self.groups:
            size = 1
            for name in group:
                size *= self.grid.axis(name).size
            total += size
        return total

    def to_dict(self) -> dict[str, Any]:
        return {
            "axes": grid_to_dict(self.grid),
            "groups": [list(g) for g in self.groups],
            "defaults": self.defaults.as_dict(),
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "TuningPlan":
        grid = grid_from_dict(doc["axes"])
        return cls(
            grid=grid,
            groups=tuple(tuple(str(n) for n in g) for g in doc["groups"]),
            defaults=Assignment(doc["defaults"]),
        )


@dataclass(frozen=True)
class TuningOutcome:
    """What a tuning run selected, at what cost."""

    selected: Assignment
    best_loss: float
    fit_count: int
    wall_seconds: float
    trace: tuple[dict[str, Any], ...]
    metric: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "selected": self.selected.as_dict(),
            "best_loss": self.best_loss,
            "fit_count": self.fit_count,
            "wall_seconds": self.wall_seconds,
            "trace": [dict(step) for step in self.trace],
            "metric": self.metric,
        }


def plan_groups(
    report: ImportanceReport,
    grid: HyperGrid,
    gap_ratio: float | None = None,
    explicit: Sequence[Sequence[str]] | None = None,
    top_m: int | None = None,
) -> TuningPlan:
    """Build a tuning plan from an importance report.

    Exactly one policy applies. ``gap_ratio`` (default 3.0) walks the
    descending score list and opens a new group at every ratio jump of
    at least the given factor; zero-score axes are left at defaults.
    ``top_m`` tunes the m best axes as one group. ``explicit`` is a
    user partition, validated against the grid.
    """
    modes = sum(x is not None for x in (gap_ratio, explicit, top_m))
    if modes > 1:
        raise ConfigError("choose one planning policy: gap_ratio, explicit, or top_m")
    missing = set(grid.axis_names) - set(report.axis_names)
    if missing:
        raise ConfigError(f"importance report does not cover grid axes {sorted(missing)}")
    defaults = grid.defaults()

    if explicit is not None:
        groups = tuple(tuple(str(n) for n in g) for g in explicit)
        return TuningPlan(grid=grid, groups=groups, defaults=defaults)

    scores = report.scores()
    ranked = [name for name in report.ranking if name in set(grid.axis_names)]

    if top_m is not None:
        if not 1 <= top_m <= len(ranked):
            raise ConfigError(f"top_m must lie in 1..{len(ranked)}")
        return TuningPlan(grid=grid, groups=(tuple(ranked[:top_m]),), defaults=defaults)

    ratio = DEFAULT_GAP_RATIO if gap_ratio is None else float(gap_ratio)
    if ratio <= 1.0:
        raise ConfigError("gap_ratio must be > 1")
    positive = [name for name in ranked if scores[name] > 0.0]
    if not positive:
        raise ConfigError("no axis has positive importance; nothing to plan")
    groups: list[list[str]] = [[positive[0]]]
    for prev, name in zip(positive, positive[1:]):
        if scores[prev] / scores[name] >= ratio:
            groups.append([name])
        else:
            groups[-1].append(name)
    return TuningPlan(grid=grid, groups=tuple(tuple(g) for g in groups), defaults=defaults)


def _group_points(
    grid: HyperGrid, group: Sequence[str]
) -> list[dict[str, AxisValue]]:
    """All value combinations of one group, row-major in grid axis order."""
    ordered = [name for name in grid.axis_names if name in set(group)]
    combos: list[dict[str, AxisValue]] = [{}]
    for name in ordered:
        axis = grid.axis(name)
        combos = [{**c, name: v} for c in combos for v in axis.values]
    return combos


def _evaluate_points(
    points: Sequence[Assignment],
    train: Dataset,
    test: Dataset,
    trainer_factory: Callable[[], TrainerContract] | TrainerContract,
    metric: Metric,
    seeds: Sequence[int],
    workers: int,
) -> list[float]:
    """Metric value per point, order-preserving, optionally in parallel."""
    if isinstance(trainer_factory, type) or not hasattr(trainer_factory, "evaluate"):
        make_trainer = trainer_factory
    else:
        instance = trainer_factory
        make_trainer = lambda: instance  # noqa: E731 - single shared instance
    if workers <= 1 or len(points) <= 1:
        trainer = make_trainer()
        return [
            trainer.evaluate(train, test, point, metric, seed)
            for point, seed in zip(points, seeds)
        ]

    import threading

    local = threading.local()
    created: list[TrainerContract] = []
    lock = threading.Lock()

    def evaluate_one(idx: int) -> float:
        trainer = getattr(local, "trainer", None)
        if trainer is None:
            trainer = make_trainer()
            local.trainer = trainer
            with lock:
                created.append(trainer)
        return trainer.evaluate(train, test, points[idx], metric, seeds[idx])

    try:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(evaluate_one, range(len(points))))
    finally:
        for trainer in created:
            try:
                trainer.close()
            except Exception:
                pass


def tune_sequential(
    plan: TuningPlan,
    train: Dataset,
    test: Dataset,
    trainer: Callable[[], TrainerContract] | TrainerContract,
    metric: Metric,
    seed: int,
    workers: int = 1,
) -> TuningOutcome:
    """Grid-search each group in order, fixing its best combination.

    The best combination minimizes risk (maximizes a higher-is-better
    metric); ties go to the earliest point in enumeration order. The per
    -evaluation seed is derived from (seed, group index, point index).
    """
    started = time.monotonic()
    grid = plan.grid
    current: dict[str, AxisValue] = plan.defaults.as_dict()
    trace: list[dict[str, Any]] = []
    fit_count = 0
    for group_index, group in enumerate(plan.groups):
        combos = _group_points(grid, group)
        points = [Assignment({**current, **combo}) for combo in combos]
        seeds = [
            derive_seed(seed, [group_index, point_index])
            for point_index in range(len(points))
        ]
        try:
            losses = _evaluate_points(points, train, test, trainer, metric, seeds, workers)
        except TrainerError as exc:
            raise TrainerError(f"tuning failed in group {list(group)}: {exc}") from exc
        risks = [metric.as_risk(value) for value in losses]
        best_index = min(range(len(risks)), key=lambda i: (risks[i], i))
        current.update(combos[best_index])
        fit_count += len(points)
        trace.append(
            {
                "group": list(group),
                "evaluated_points": len(points),
                "chosen": dict(combos[best_index]),
                "best_metric": losses[best_index],
            }
        )
    selected = Assignment(current)
    return TuningOutcome(
        selected=selected,
        best_loss=float(trace[-1]["best_metric"]),
        fit_count=fit_count,
        wall_seconds=time.monotonic() - started,
        trace=tuple(trace),
        metric=metric.kind,
    )


def tune_simultaneous(
    grid: HyperGrid,
    train: Dataset,
    test: Dataset,
    trainer: Callable[[], TrainerContract] | TrainerContract,
    metric: Metric,
    seed: int,
    workers: int = 1,
) -> TuningOutcome:
    """Full-grid baseline: one group containing every axis."""
    plan = TuningPlan(grid=grid, groups=(grid.axis_names,), defaults=grid.defaults())
    return tune_sequential(plan, train, test, trainer, metric, seed, workers=workers)
