"""On-disk artifacts: report bundles, plan files, tuning outcomes.

``report.json`` is the machine-readable product of one estimation run:
per-size importance reports, the cross-size consistency verdict, and
run metadata (the grid definition rides along so downstream commands
never need the original grid file). The only non-deterministic field is
``metadata.created_at``; everything else is byte-stable for identical
inputs, whatever the worker count.

Plot data follows the display convention of importance bar charts for
AUC-like metrics: scores are multiplied by 1e6 in ``plotdata.csv`` (and
only there).
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from .errors import ConfigError
from .grid import grid_from_dict, grid_to_dict
from .importance import ConsistencyVerdict, ImportanceReport, consistency_check
from .pipeline import EstimationConfig, EstimationResult, TimingRow
from .tuning import TuningOutcome, TuningPlan

REPORT_SCHEMA = "hpi-report/1"
PLAN_SCHEMA = "hpi-plan/1"
OUTCOME_SCHEMA = "hpi-outcome/1"

PLOT_SCALE = 1e6


def _write_json(doc: dict[str, Any], path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _read_json(path: Path) -> dict[str, Any]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} does not hold a JSON object")
    return doc


def report_bundle_dict(
    result: EstimationResult, config: EstimationConfig
) -> dict[str, Any]:
    return {
        "schema": REPORT_SCHEMA,
        "metadata": {
            "created_at": datetime.now(timezone.utc).isoformat(),
            "metric": config.metric,
            "master_seed": config.master_seed,
            "replicates": config.replicates,
            "sizes": list(result.sizes),
            "train_fraction": config.train_fraction,
            "stratified": config.stratified,
            "trainer": config.trainer_kind,
            "form": config.form,
            "aggregation": config.aggregation,
            "grid": {"axes": grid_to_dict(config.grid)},
            "joint": [list(p) for p in config.joint_pairs],
        },
        "reports": [result.reports[size].to_dict() for size in result.sizes],
        "consistency": result.consistency.to_dict() if result.consistency else None,
    }


def write_report_bundle(
    out_dir: str | Path, result: EstimationResult, config: EstimationConfig
) -> dict[str, Path]:
    """Write report.json, ranking.csv, and plotdata.csv; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.json",
        "ranking": out / "ranking.csv",
        "plotdata": out / "plotdata.csv",
    }
    _write_json(report_bundle_dict(result, config), paths["report"])

    with open(paths["ranking"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subsample_size", "axis", "before", "after", "rank"])
        for size in result.sizes:
            report = result.reports[size]
            rank_of = {name: i + 1 for i, name in enumerate(report.ranking)}
            for name in report.axis_names:
                writer.writerow(
                    [size, name, repr(report.before[name]), repr(report.after[name]), rank_of[name]]
                )

    with open(paths["plotdata"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subsample_size", "axis", "score"])
        for size in result.sizes:
            report = result.reports[size]
            scores = report.scores()
            for name in report.axis_names:
                writer.writerow([size, name, repr(scores[name] * PLOT_SCALE)])
            for pair, forms in report.pair_scores.items():
                writer.writerow(
                    [size, "&".join(pair), repr(forms[report.chosen_form] * PLOT_SCALE)]
                )
    return paths


def write_timing_csv(rows: Sequence[TimingRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subsample_size", "mean_fit_seconds", "mean_loss"])
        for row in rows:
            writer.writerow([row.size, repr(row.mean_fit_seconds), repr(row.mean_loss)])


def load_report_bundle(path: str | Path) -> dict[str, Any]:
    """Read a report bundle back into live objects."""
    doc = _read_json(Path(path))
    if doc.get("schema") != REPORT_SCHEMA:
        raise ConfigError(f"{path} is not a report bundle (schema {doc.get('schema')!r})")
    reports = [ImportanceReport.from_dict(rep) for rep in doc.get("reports", [])]
    if not reports:
        raise ConfigError(f"{path} holds no importance reports")
    metadata = doc.get("metadata", {})
    grid = grid_from_dict(metadata["grid"]["axes"]) if "grid" in metadata else None
    return {"metadata": metadata, "reports": reports, "grid": grid, "raw": doc}


def select_report(reports: Sequence[ImportanceReport], size: int | None) -> ImportanceReport:
    """Pick one per-size report; the largest size when none is named."""
    if size is None:
        return max(reports, key=lambda r: int(r.metadata.get("subsample_size", -1)))
    for report in reports:
        if int(report.metadata.get("subsample_size", -1)) == int(size):
            return report
    known = sorted(int(r.metadata.get("subsample_size", -1)) for r in reports)
    raise ConfigError(f"no report at subsample size {size}; bundle has sizes {known}")


def recheck_consistency(paths: Sequence[str | Path], top_k: int) -> ConsistencyVerdict:
    """Re-run the cross-size rank comparison over stored bundles."""
    reports: list[ImportanceReport] = []
    for path in paths:
        reports.extend(load_report_bundle(path)["reports"])
    reports.sort(key=lambda r: int(r.metadata.get("subsample_size", -1)))
    return consistency_check(reports, k=top_k)


def write_plan(plan: TuningPlan, path: str | Path) -> None:
    _write_json({"schema": PLAN_SCHEMA, **plan.to_dict()}, Path(path))


def load_plan(path: str | Path) -> TuningPlan:
    doc = _read_json(Path(path))
    if doc.get("schema") != PLAN_SCHEMA:
        raise ConfigError(f"{path} is not a tuning plan (schema {doc.get('schema')!r})")
    return TuningPlan.from_dict(doc)


def outcome_dict(outcome: TuningOutcome) -> dict[str, Any]:
    return {"schema": OUTCOME_SCHEMA, **outcome.to_dict()}


def write_outcome(doc: dict[str, Any], path: str | Path) -> None:
    _write_json(doc, Path(path))


def load_grid_file(path: str | Path):
    from .grid import parse_grid_config

    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    return parse_grid_config(text)


def comparison_summary(
    sequential: TuningOutcome, simultaneous: TuningOutcome
) -> dict[str, Any]:
    """The side-by-side row printed by ``tune --both``."""
    return {
        "sequential_loss": sequential.best_loss,
        "simultaneous_loss": simultaneous.best_loss,
        "loss_delta": sequential.best_loss - simultaneous.best_loss,
        "sequential_fits": sequential.fit_count,
        "simultaneous_fits": simultaneous.fit_count,
        "fit_count_ratio": sequential.fit_count / simultaneous.fit_count,
    }
