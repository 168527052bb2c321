"""The subsample -> grid search -> repeat -> score estimation pipeline.

One run: split the data once (seeded), then for every configured
subsample size draw T seeded subsamples of the training split, evaluate
every grid point on each against the fixed test split, assemble the loss
tensor, score importances, and compare rankings across sizes.

Seeds are derived per cell, so results are bit-identical across runs,
worker counts, and execution orders:

  split seed       derive_seed(master, [-1])
  test-subsample   derive_seed(master, [-2])
  subsample seed   derive_seed(master, [size_index, t])
  fit seed         derive_seed(master, [size_index, t, grid flat index])
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import (
    FIRST_EXCEPTION,
    ProcessPoolExecutor,
    ThreadPoolExecutor,
    wait,
)
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from .data import Dataset, derive_seed, split, subsample
from .errors import ConfigError, DataError, TrainerError
from .grid import Assignment, HyperGrid
from .importance import (
    AGGREGATIONS,
    FORMS,
    ConsistencyVerdict,
    ImportanceReport,
    compute_report,
    consistency_check,
)
from .metrics import Metric, get_metric
from .tensor import LossTensor, checkpoint_matches, load_checkpoint, save_checkpoint
from .trainers import DEFAULT_EVAL_TIMEOUT, TrainerContract, make_trainer_factory

SPLIT_TAG = -1
TEST_SUBSAMPLE_TAG = -2

# Meta keys that must agree before a checkpoint may be resumed.
_RESUME_KEYS = (
    "subsample_size",
    "replicates",
    "metric",
    "master_seed",
    "train_fraction",
    "stratified",
    "trainer",
)


@dataclass(frozen=True)
class EstimationConfig:
    """Everything one estimation run depends on."""

    grid: HyperGrid
    subsample_sizes: tuple[int, ...]
    replicates: int
    train_fraction: float = 0.7
    metric: str = "auc"
    master_seed: int = 0
    trainer_kind: str = "builtin"
    external_command: tuple[str, ...] | str | None = None
    workers: int = 1
    stratified: bool = False
    skip_failures: bool = False
    joint_pairs: tuple[tuple[str, str], ...] = ()
    form: str = "before"
    aggregation: str = "mean-then-variance"
    top_k: int = 2
    test_subsample_size: int | None = None
    checkpoint_dir: Path | None = None
    resume: bool = False
    eval_timeout: float = DEFAULT_EVAL_TIMEOUT

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.subsample_sizes:
            raise ConfigError("at least one subsample size is required")
        if any(s < 1 for s in self.subsample_sizes):
            raise ConfigError("subsample sizes must be positive")
        if list(self.subsample_sizes) != sorted(set(self.subsample_sizes)):
            raise ConfigError("subsample sizes must be strictly increasing")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie strictly between 0 and 1")
        if self.form not in FORMS:
            raise ConfigError(f"unknown importance form {self.form!r}")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"unknown aggregation {self.aggregation!r}")
        get_metric(self.metric)


@dataclass
class EstimationResult:
    """Per-size tensors and reports plus the cross-size verdict."""

    sizes: tuple[int, ...]
    tensors: dict[int, LossTensor]
    reports: dict[int, ImportanceReport]
    consistency: ConsistencyVerdict | None
    fit_counts: dict[int, int]
    eval_seconds: dict[int, float]
    imputed_cells: dict[int, int] = field(default_factory=dict)
    wall_seconds: float = 0.0

    def mean_loss(self, size: int) -> float:
        return float(self.tensors[size].replicate_mean().mean())


def resolve_sizes(
    raw_sizes: Sequence[float | int], train_rows: int
) -> tuple[int, ...]:
    """Turn absolute or fractional size requests into row counts."""
    out: list[int] = []
    for s in raw_sizes:
        if isinstance(s, float) and not s.is_integer():
            if not 0.0 < s < 1.0:
                raise ConfigError(f"fractional subsample size {s} must lie in (0, 1)")
            out.append(max(1, int(s * train_rows)))
        else:
            out.append(int(s))
    for s in out:
        if s > train_rows:
            raise ConfigError(
                f"subsample size {s} exceeds the training split ({train_rows} rows)"
            )
    if out != sorted(set(out)):
        raise ConfigError(f"resolved subsample sizes {out} are not strictly increasing")
    return tuple(out)


class _WorkerPool:
    """Per-thread trainer instances created lazily from a factory."""

    def __init__(self, factory: Callable[[], TrainerContract]):
        self._factory = factory
        self._local = threading.local()
        self._created: list[TrainerContract] = []
        self._lock = threading.Lock()

    def trainer(self) -> TrainerContract:
        trainer = getattr(self._local, "trainer", None)
        if trainer is None:
            trainer = self._factory()
            self._local.trainer = trainer
            with self._lock:
                self._created.append(trainer)
        return trainer

    def close(self) -> None:
        for trainer in self._created:
            try:
                trainer.close()
            except Exception:
                pass
        self._created.clear()


def run_estimation(
    data: Dataset,
    config: EstimationConfig,
    trainer_factory: Callable[[], TrainerContract] | None = None,
) -> EstimationResult:
    """Execute the full estimation procedure for every configured size."""
    started = time.monotonic()
    metric = get_metric(config.metric)
    factory = trainer_factory or make_trainer_factory(
        config.trainer_kind, config.external_command, timeout=config.eval_timeout
    )
    pool = _WorkerPool(factory)
    try:
        probe = pool.trainer()
        declared = probe.declared_hyperparameters
        unknown = set(config.grid.axis_names) - set(declared)
        if unknown:
            raise ConfigError(
                f"grid axes {sorted(unknown)} are not hyperparameters of the selected "
                f"trainer (declares {sorted(declared)})"
            )

        pair = split(data, config.train_fraction, derive_seed(config.master_seed, [SPLIT_TAG]))
        train, test = pair.train, pair.test
        if config.test_subsample_size is not None:
            test = subsample(
                test,
                config.test_subsample_size,
                derive_seed(config.master_seed, [TEST_SUBSAMPLE_TAG]),
                stratified=config.stratified,
            )
        sizes = resolve_sizes(config.subsample_sizes, train.row_count)

        tensors: dict[int, LossTensor] = {}
        reports: dict[int, ImportanceReport] = {}
        fit_counts: dict[int, int] = {}
        eval_seconds: dict[int, float] = {}
        imputed: dict[int, int] = {}
        for size_index, size in enumerate(sizes):
            tensor, stats = _fill_tensor(
                train,
                test,
                size_index,
                size,
                config,
                metric,
                pool,
                own_factory=trainer_factory is None,
            )
            tensors[size] = tensor
            fit_counts[size] = stats["fits"]
            eval_seconds[size] = stats["seconds"]
            imputed[size] = stats["imputed"]
            reports[size] = compute_report(
                tensor,
                pairs=config.joint_pairs,
                form=config.form,
                aggregation=config.aggregation,
            )
        verdict = (
            consistency_check([reports[s] for s in sizes], k=config.top_k)
            if len(sizes) >= 2
            else None
        )
        return EstimationResult(
            sizes=sizes,
            tensors=tensors,
            reports=reports,
            consistency=verdict,
            fit_counts=fit_counts,
            eval_seconds=eval_seconds,
            imputed_cells=imputed,
            wall_seconds=time.monotonic() - started,
        )
    finally:
        pool.close()


def _tensor_meta(config: EstimationConfig, size: int, size_index: int) -> dict[str, Any]:
    return {
        "subsample_size": size,
        "size_index": size_index,
        "replicates": config.replicates,
        "metric": config.metric,
        "master_seed": config.master_seed,
        "train_fraction": config.train_fraction,
        "stratified": config.stratified,
        "trainer": config.trainer_kind,
    }


_WORKER_STATE: dict[str, Any] = {}


def _builtin_worker_init(
    subsamples: list[Dataset], test: Dataset, metric_name: str, skip_failures: bool
) -> None:
    from .trainers import BuiltinGbmTrainer

    _WORKER_STATE["trainer"] = BuiltinGbmTrainer()
    _WORKER_STATE["subsamples"] = subsamples
    _WORKER_STATE["test"] = test
    _WORKER_STATE["metric"] = get_metric(metric_name)


def _builtin_worker_eval(
    task: tuple[int, int, dict[str, Any], int]
) -> tuple[int, int, float | None, float, str | None]:
    t, flat, bindings, seed = task
    begin = time.monotonic()
    try:
        loss = _WORKER_STATE["trainer"].evaluate(
            _WORKER_STATE["subsamples"][t],
            _WORKER_STATE["test"],
            Assignment(bindings),
            _WORKER_STATE["metric"],
            seed,
        )
    except TrainerError as exc:
        return t, flat, None, 0.0, f"evaluation failed at replicate={t}, point={bindings}: {exc}"
    return t, flat, loss, time.monotonic() - begin, None


def _fill_tensor(
    train: Dataset,
    test: Dataset,
    size_index: int,
    size: int,
    config: EstimationConfig,
    metric: Metric,
    pool: _WorkerPool,
    own_factory: bool = True,
) -> tuple[LossTensor, dict[str, Any]]:
    grid = config.grid
    meta = _tensor_meta(config, size, size_index)
    checkpoint_path = (
        Path(config.checkpoint_dir) / f"tensor_size{size}.npz"
        if config.checkpoint_dir is not None
        else None
    )
    tensor: LossTensor | None = None
    if config.resume and checkpoint_path is not None and checkpoint_path.exists():
        candidate = load_checkpoint(checkpoint_path)
        if candidate.grid != grid or not checkpoint_matches(candidate, meta, _RESUME_KEYS):
            raise ConfigError(
                f"checkpoint {checkpoint_path} was produced by a different run "
                "configuration; remove it or change --out"
            )
        tensor = candidate
    if tensor is None:
        tensor = LossTensor(grid=grid, replicate_count=config.replicates, meta=meta)

    subsamples = []
    for t in range(config.replicates):
        sub = subsample(
            train,
            size,
            derive_seed(config.master_seed, [size_index, t]),
            stratified=config.stratified,
        )
        neg, pos = sub.class_counts()
        if neg == 0 or pos == 0:
            raise DataError(
                f"subsample (size={size}, replicate={t}) contains a single label class; "
                "consider --stratified"
            )
        subsamples.append(sub)

    todo = tensor.missing_cells()
    lock = threading.Lock()
    state = {"fits": 0, "seconds": 0.0, "since_save": 0}
    failures: list[tuple[int, int, str]] = []

    def record(t: int, flat: int, loss: float | None, elapsed: float, error: str | None) -> None:
        with lock:
            if error is not None:
                failures.append((t, flat, error))
                return
            tensor.set_cell(t, flat, loss)
            state["fits"] += 1
            state["seconds"] += elapsed
            state["since_save"] += 1
            if checkpoint_path is not None and state["since_save"] >= grid.size:
                save_checkpoint(tensor, checkpoint_path)
                state["since_save"] = 0

    def run_cell(t: int, flat: int) -> None:
        assignment = grid.assignment_at(flat)
        fit_seed = derive_seed(config.master_seed, [size_index, t, flat])
        begin = time.monotonic()
        try:
            loss = pool.trainer().evaluate(subsamples[t], test, assignment, metric, fit_seed)
        except TrainerError as exc:
            if config.skip_failures:
                record(t, flat, None, 0.0, str(exc))
                return
            raise TrainerError(
                f"evaluation failed at size={size}, replicate={t}, "
                f"point={assignment.as_dict()}: {exc}"
            ) from exc
        record(t, flat, loss, time.monotonic() - begin, None)

    use_processes = (
        config.workers > 1 and config.trainer_kind == "builtin" and own_factory
    )
    if config.workers == 1:
        for t, flat in todo:
            run_cell(t, flat)
    elif use_processes:
        # The built-in trainer is pure CPU-bound Python/numpy: threads
        # convoy on the GIL, so grid cells fan out to worker processes.
        tasks = [
            (
                t,
                flat,
                grid.assignment_at(flat).as_dict(),
                derive_seed(config.master_seed, [size_index, t, flat]),
            )
            for t, flat in todo
        ]
        chunk = max(1, len(tasks) // (config.workers * 8))
        with ProcessPoolExecutor(
            max_workers=config.workers,
            initializer=_builtin_worker_init,
            initargs=(subsamples, test, config.metric, config.skip_failures),
        ) as executor:
            for t, flat, loss, elapsed, error in executor.map(
                _builtin_worker_eval, tasks, chunksize=chunk
            ):
                if error is not None and not config.skip_failures:
                    raise TrainerError(error)
                record(t, flat, loss, elapsed, error)
    else:
        executor = ThreadPoolExecutor(max_workers=config.workers)
        try:
            futures = [executor.submit(run_cell, t, flat) for t, flat in todo]
            done, _ = wait(futures, return_when=FIRST_EXCEPTION)
            for fut in done:
                exc = fut.exception()
                if exc is not None:
                    executor.shutdown(wait=True, cancel_futures=True)
                    raise exc
        finally:
            executor.shutdown(wait=True)

    imputed = 0
    if failures:
        flat_values = tensor.values.reshape(config.replicates, -1)
        flat_mask = tensor.filled.reshape(config.replicates, -1)
        for t, flat, message in failures:
            good = flat_mask[:, flat]
            if not good.any():
                raise TrainerError(
                    f"every replicate failed at size={size}, grid index {flat}; "
                    f"last error: {message}"
                )
            tensor.set_cell(t, flat, float(flat_values[good, flat].mean()))
            imputed += 1

    tensor.require_complete()
    tensor.meta["imputed_cells"] = imputed
    if checkpoint_path is not None:
        save_checkpoint(tensor, checkpoint_path)
    return tensor, {"fits": state["fits"], "seconds": state["seconds"], "imputed": imputed}


@dataclass(frozen=True)
class TimingRow:
    size: int
    mean_fit_seconds: float
    mean_loss: float


def timing_rows(result: EstimationResult) -> list[TimingRow]:
    rows = []
    for size in result.sizes:
        fits = result.fit_counts[size]
        rows.append(
            TimingRow(
                size=size,
                mean_fit_seconds=result.eval_seconds[size] / fits if fits else 0.0,
                mean_loss=result.mean_loss(size),
            )
        )
    return rows


def timing_profile(
    data: Dataset,
    config: EstimationConfig,
    trainer_factory: Callable[[], TrainerContract] | None = None,
) -> list[TimingRow]:
    """Per-size average evaluation time and average metric value."""
    return timing_rows(run_estimation(data, config, trainer_factory))
