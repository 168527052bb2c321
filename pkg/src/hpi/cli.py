"""Command-line surface: estimate, plan, tune, check, synth.

Exit codes: 0 success, 1 usage error, 2 data/config error, 3 trainer
failure. ``--workers`` defaults to the HPI_WORKERS environment variable
when set.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from pathlib import Path
from typing import Sequence

from .artifacts import (
    comparison_summary,
    load_grid_file,
    load_plan,
    load_report_bundle,
    outcome_dict,
    recheck_consistency,
    select_report,
    write_outcome,
    write_plan,
    write_report_bundle,
    write_timing_csv,
)
from .data import load_dataset
from .errors import ConfigError, DataError, GridError, HpiError, TrainerError
from .grid import HyperGrid
from .metrics import METRIC_NAMES, get_metric
from .pipeline import EstimationConfig, run_estimation, timing_rows
from .synth import GENERATORS, make_synthetic
from .tensor import TensorError
from .trainers import DEFAULT_EVAL_TIMEOUT, make_trainer_factory
from .tuning import plan_groups, tune_sequential, tune_simultaneous

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINER = 3


class CliUsageError(HpiError):
    """Bad flag combination caught after argparse."""


class _Parser(argparse.ArgumentParser):
    """argparse with the exit-code contract (usage errors exit 1)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_sizes(text: str) -> list[float | int]:
    sizes: list[float | int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            sizes.append(float(chunk) if "." in chunk else int(chunk))
        except ValueError:
            raise CliUsageError(f"bad size {chunk!r} in --sizes") from None
    if not sizes:
        raise CliUsageError("--sizes is empty")
    return sizes


def _parse_groups(text: str) -> list[list[str]]:
    groups = []
    for part in text.split("|"):
        names = [n.strip() for n in part.split(",") if n.strip()]
        if names:
            groups.append(names)
    if not groups:
        raise CliUsageError("--groups is empty")
    return groups


def _default_workers() -> int:
    env = os.environ.get("HPI_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _add_trainer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--trainer", choices=["builtin", "external"], default="builtin",
        help="which learner evaluates grid points",
    )
    parser.add_argument(
        "--external-cmd", default=None,
        help="command line of the external trainer (with --trainer external)",
    )
    parser.add_argument(
        "--timeout", type=float, default=DEFAULT_EVAL_TIMEOUT,
        help="per-evaluation timeout in seconds for external trainers",
    )


def _trainer_args(args: argparse.Namespace) -> tuple[str, tuple[str, ...] | None]:
    if args.trainer == "external":
        if not args.external_cmd:
            raise CliUsageError("--trainer external requires --external-cmd")
        return "external", tuple(shlex.split(args.external_cmd))
    return "builtin", None


def build_parser() -> _Parser:
    parser = _Parser(prog="hpi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    est = sub.add_parser("estimate", help="estimate hyperparameter importance by subsampling")
    est.add_argument("--data", required=True, help="input CSV")
    est.add_argument("--label", required=True, help="label column name")
    est.add_argument("--grid", required=True, help="grid config YAML")
    est.add_argument("--sizes", required=True, help="comma list of subsample sizes (ints or fractions)")
    est.add_argument("--replicates", type=int, default=10, help="subsamples per size (T)")
    est.add_argument("--metric", choices=list(METRIC_NAMES), default="auc")
    est.add_argument("--seed", type=int, default=0, help="master seed")
    est.add_argument("--out", required=True, help="output directory")
    est.add_argument("--train-fraction", type=float, default=0.7)
    est.add_argument("--stratified", action="store_true", help="stratify subsamples by label")
    est.add_argument("--workers", type=int, default=None)
    est.add_argument("--form", choices=["before", "after"], default="before")
    est.add_argument(
        "--aggregation", choices=["mean-then-variance", "variance-then-mean"],
        default="mean-then-variance",
    )
    est.add_argument("--top-k", type=int, default=2, help="k for the top-k consistency check")
    est.add_argument("--skip-failures", action="store_true",
                     help="impute failed evaluations with the replicate mean")
    est.add_argument("--resume", action="store_true", help="reuse tensor checkpoints in --out")
    est.add_argument("--test-subsample-size", type=int, default=None)
    est.add_argument("--timing-out", default=None,
                     help="also write a timing profile CSV (wall-time dependent)")
    _add_trainer_flags(est)

    plan = sub.add_parser("plan", help="turn a report into a sequential tuning plan")
    plan.add_argument("--report", required=True, help="report.json from estimate")
    plan.add_argument("--size", type=int, default=None,
                      help="use the report at this subsample size (default: largest)")
    plan.add_argument("--gap-ratio", type=float, default=None,
                      help="importance-ratio jump that opens a new group (default 3.0)")
    plan.add_argument("--groups", default=None, help="explicit groups, e.g. 'a,b|c'")
    plan.add_argument("--top", type=int, default=None, help="tune only the top-m axes")
    plan.add_argument("--out", default="plan.json")

    tune = sub.add_parser("tune", help="run sequential and/or simultaneous tuning")
    tune.add_argument("--data", required=True)
    tune.add_argument("--label", required=True)
    tune.add_argument("--plan", default=None, help="plan.json from plan")
    tune.add_argument("--grid", default=None, help="grid YAML (for --simultaneous without a plan)")
    tune.add_argument("--simultaneous", action="store_true", help="run only the full-grid baseline")
    tune.add_argument("--both", action="store_true",
                      help="run sequential and simultaneous and print the comparison")
    tune.add_argument("--metric", choices=list(METRIC_NAMES), default="auc")
    tune.add_argument("--seed", type=int, default=0)
    tune.add_argument("--train-fraction", type=float, default=0.7)
    tune.add_argument("--workers", type=int, default=None)
    tune.add_argument("--out", default="outcome.json")
    _add_trainer_flags(tune)

    check = sub.add_parser("check", help="re-run the consistency verdict over stored reports")
    check.add_argument("--report", required=True, nargs="+", help="one or more report.json files")
    check.add_argument("--top-k", type=int, default=2)

    synth = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    synth.add_argument("--gen", required=True, help=f"one of {', '.join(GENERATORS)}")
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--d", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="output CSV path")

    return parser


def _cmd_estimate(args: argparse.Namespace) -> int:
    data = load_dataset(args.data, args.label)
    grid_config = load_grid_file(args.grid)
    kind, external = _trainer_args(args)
    out_dir = Path(args.out)
    config = EstimationConfig(
        grid=grid_config.grid,
        subsample_sizes=tuple(_parse_sizes(args.sizes)),
        replicates=args.replicates,
        train_fraction=args.train_fraction,
        metric=args.metric,
        master_seed=args.seed,
        trainer_kind=kind,
        external_command=external,
        workers=args.workers if args.workers is not None else _default_workers(),
        stratified=args.stratified,
        skip_failures=args.skip_failures,
        joint_pairs=grid_config.joint_pairs,
        form=args.form,
        aggregation=args.aggregation,
        top_k=args.top_k,
        test_subsample_size=args.test_subsample_size,
        checkpoint_dir=out_dir,
        resume=args.resume,
        eval_timeout=args.timeout,
    )
    result = run_estimation(data, config)
    paths = write_report_bundle(out_dir, result, config)
    if args.timing_out:
        write_timing_csv(timing_rows(result), args.timing_out)

    for size in result.sizes:
        report = result.reports[size]
        print(f"subsample size {size} (T={config.replicates}, metric={config.metric}):")
        scores = report.scores()
        for rank, name in enumerate(report.ranking, start=1):
            print(
                f"  {rank:>2}. {name:<20} {report.chosen_form}={scores[name]:.6e} "
                f"dispersion={report.replicate_dispersion[name]:.3e}"
            )
    if result.consistency is not None:
        verdict = result.consistency
        print(
            f"consistency across sizes {list(verdict.sizes)}: "
            f"exact_match={verdict.exact_match} top_{verdict.top_k}_match={verdict.top_k_match}"
        )
    print(f"report written to {paths['report']}")
    return EXIT_OK


def _cmd_plan(args: argparse.Namespace) -> int:
    chosen = [x is not None for x in (args.gap_ratio, args.groups, args.top)]
    if sum(chosen) > 1:
        raise CliUsageError("choose one of --gap-ratio, --groups, --top")
    bundle = load_report_bundle(args.report)
    if bundle["grid"] is None:
        raise ConfigError(f"{args.report} carries no grid definition")
    grid: HyperGrid = bundle["grid"]
    report = select_report(bundle["reports"], args.size)
    plan = plan_groups(
        report,
        grid,
        gap_ratio=args.gap_ratio,
        explicit=_parse_groups(args.groups) if args.groups else None,
        top_m=args.top,
    )
    write_plan(plan, args.out)
    print(f"plan with groups {[list(g) for g in plan.groups]} written to {args.out}")
    return EXIT_OK


def _cmd_tune(args: argparse.Namespace) -> int:
    if args.both and args.simultaneous:
        raise CliUsageError("--both already includes the simultaneous baseline")
    if not args.plan and not (args.simultaneous and args.grid):
        raise CliUsageError("tune needs --plan, or --simultaneous with --grid")
    if args.both and not args.plan:
        raise CliUsageError("--both needs --plan")

    data = load_dataset(args.data, args.label)
    metric = get_metric(args.metric)
    kind, external = _trainer_args(args)
    factory = make_trainer_factory(kind, external, timeout=args.timeout)
    workers = args.workers if args.workers is not None else _default_workers()

    from .data import derive_seed, split
    from .pipeline import SPLIT_TAG

    pair = split(data, args.train_fraction, derive_seed(args.seed, [SPLIT_TAG]))

    plan = load_plan(args.plan) if args.plan else None
    grid = plan.grid if plan is not None else load_grid_file(args.grid).grid

    doc: dict
    if args.simultaneous and not args.both:
        outcome = tune_simultaneous(
            grid, pair.train, pair.test, factory, metric, args.seed, workers=workers
        )
        doc = outcome_dict(outcome)
        print(
            f"simultaneous: best {metric.kind}={outcome.best_loss:.6f} "
            f"with {outcome.selected.as_dict()} in {outcome.fit_count} fits"
        )
    elif args.both:
        assert plan is not None
        sequential = tune_sequential(
            plan, pair.train, pair.test, factory, metric, args.seed, workers=workers
        )
        simultaneous = tune_simultaneous(
            grid, pair.train, pair.test, factory, metric, args.seed, workers=workers
        )
        summary = comparison_summary(sequential, simultaneous)
        doc = {
            "schema": "hpi-outcome/1",
            "sequential": sequential.to_dict(),
            "simultaneous": simultaneous.to_dict(),
            "comparison": summary,
        }
        print(
            f"sequential:   best {metric.kind}={sequential.best_loss:.6f} "
            f"in {sequential.fit_count} fits -> {sequential.selected.as_dict()}"
        )
        print(
            f"simultaneous: best {metric.kind}={simultaneous.best_loss:.6f} "
            f"in {simultaneous.fit_count} fits -> {simultaneous.selected.as_dict()}"
        )
        print(
            f"comparison: loss_delta={summary['loss_delta']:+.6f} "
            f"fit_count_ratio={summary['fit_count_ratio']:.3f}"
        )
    else:
        assert plan is not None
        outcome = tune_sequential(
            plan, pair.train, pair.test, factory, metric, args.seed, workers=workers
        )
        doc = outcome_dict(outcome)
        print(
            f"sequential: best {metric.kind}={outcome.best_loss:.6f} "
            f"with {outcome.selected.as_dict()} in {outcome.fit_count} fits"
        )
    write_outcome(doc, args.out)
    print(f"outcome written to {args.out}")
    return EXIT_OK


def _cmd_check(args: argparse.Namespace) -> int:
    verdict = recheck_consistency(args.report, args.top_k)
    print(f"sizes: {list(verdict.sizes)}")
    for size, ranking in verdict.rankings.items():
        print(f"  {size}: {list(ranking)}")
    for (a, b), tau in verdict.kendall_tau.items():
        print(f"  tau({a}, {b}) = {tau:+.4f}")
    print(f"exact_match={verdict.exact_match} top_{verdict.top_k}_match={verdict.top_k_match}")
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.gen not in GENERATORS:
        raise CliUsageError(f"unknown generator {args.gen!r}; choose from {', '.join(GENERATORS)}")
    data = make_synthetic(args.gen, args.n, args.d, args.seed)
    from .data import save_dataset

    save_dataset(data, args.out)
    neg, pos = data.class_counts()
    print(f"wrote {data.row_count} rows ({pos} positive, {neg} negative) to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "estimate": _cmd_estimate,
    "plan": _cmd_plan,
    "tune": _cmd_tune,
    "check": _cmd_check,
    "synth": _cmd_synth,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        return _COMMANDS[args.command](args)
    except CliUsageError as exc:
        print(f"hpi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainerError as exc:
        print(f"hpi: trainer failure: {exc}", file=sys.stderr)
        return EXIT_TRAINER
    except (ConfigError, DataError, GridError, TensorError) as exc:
        print(f"hpi: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HpiError as exc:
        print(f"hpi: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
