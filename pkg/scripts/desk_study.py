#!/usr/bin/env python3
"""End-to-end desk-scale study on synthetic data.

Generates an interaction dataset and an additive dataset, estimates
hyperparameter importance on subsamples of each, prints the rankings and
the cross-size consistency verdicts, then compares sequential group
tuning against the simultaneous full-grid baseline on the interaction
data. All outputs (reports, plot data, plan, outcomes) land in --out.

Usage:
    python scripts/desk_study.py --out out/desk [--quick]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from hpi.cli import main as hpi

GRID_TEXT = """\
axes:
  max_depth: {values: [1, 2, 4], default: 2}
  step_size: {values: [0.05, 0.1, 0.3], default: 0.1}
  max_iteration: {values: [10, 30, 60], default: 30}
  subsample: {values: [0.5, 0.75, 1.0], default: 1.0}
joint:
  - [step_size, max_iteration]
"""


def run(args: list[str]) -> None:
    code = hpi(args)
    if code != 0:
        raise SystemExit(f"hpi {' '.join(args[:1])} failed with exit code {code}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/desk")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--quick", action="store_true", help="smaller n and fewer replicates")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid_path = out / "grid.yaml"
    grid_path.write_text(GRID_TEXT, encoding="utf-8")

    n = 2000 if args.quick else 8000
    sizes = "200,400" if args.quick else "500,1000,2000"
    replicates = "2" if args.quick else "5"

    for gen in ("interaction", "additive"):
        data_path = out / f"{gen}.csv"
        run(["synth", "--gen", gen, "--n", str(n), "--d", "6",
             "--seed", "20260810", "--out", str(data_path)])
        print(f"\n=== importance on {gen} data ===")
        run([
            "estimate", "--data", str(data_path), "--label", "y",
            "--grid", str(grid_path), "--sizes", sizes,
            "--replicates", replicates, "--metric", "auc",
            "--seed", str(args.seed), "--workers", str(args.workers),
            "--out", str(out / gen), "--timing-out", str(out / gen / "timing.csv"),
        ])

    print("\n=== tuning comparison on interaction data ===")
    run(["plan", "--report", str(out / "interaction" / "report.json"),
         "--gap-ratio", "3.0", "--out", str(out / "plan.json")])
    run([
        "tune", "--data", str(out / "interaction.csv"), "--label", "y",
        "--plan", str(out / "plan.json"), "--both", "--metric", "auc",
        "--seed", str(args.seed), "--out", str(out / "outcome.json"),
    ])
    print(f"\nartifacts in {out}/")


if __name__ == "__main__":
    main()
