from __future__ import annotations

import csv
import json
import shlex
from pathlib import Path

import pytest

from hpi.cli import main

from conftest import stub_command


def run_cli(*args: str) -> int:
    return main(list(args))


def make_data(tmp_path: Path, n=400, gen="interaction", seed=3) -> Path:
    path = tmp_path / "data.csv"
    code = run_cli("synth", "--gen", gen, "--n", str(n), "--d", "4", "--seed", str(seed),
                   "--out", str(path))
    assert code == 0
    return path


def write_grid(tmp_path: Path, text: str | None = None) -> Path:
    path = tmp_path / "grid.yaml"
    path.write_text(
        text
        or """
axes:
  a: {values: [1, 2], default: 1}
  b: {values: [10, 20], default: 10}
""",
        encoding="utf-8",
    )
    return path


def stub_flags() -> list[str]:
    cmd = " ".join(shlex.quote(part) for part in stub_command("--axes", "a", "--declare", "a,b"))
    return ["--trainer", "external", "--external-cmd", cmd]


class TestSynth:
    def test_deterministic_output(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert run_cli("synth", "--gen", "interaction", "--n", "500", "--d", "5",
                       "--seed", "7", "--out", str(a)) == 0
        assert run_cli("synth", "--gen", "interaction", "--n", "500", "--d", "5",
                       "--seed", "7", "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_labels_binary_both_classes(self, tmp_path):
        path = make_data(tmp_path, n=300, gen="additive")
        labels = {row.rsplit(",", 1)[1] for row in path.read_text().strip().splitlines()[1:]}
        assert labels == {"0", "1"}

    def test_unknown_generator_is_usage_error(self, tmp_path):
        assert run_cli("synth", "--gen", "mystery", "--n", "10", "--d", "2",
                       "--out", str(tmp_path / "x.csv")) == 1

    def test_row_count(self, tmp_path):
        path = make_data(tmp_path, n=123, gen="separable-noise")
        assert len(path.read_text().strip().splitlines()) == 124


class TestEstimate:
    def run_estimate(self, tmp_path, *extra, out="out"):
        data = make_data(tmp_path)
        grid = write_grid(tmp_path)
        out_dir = tmp_path / out
        code = run_cli(
            "estimate", "--data", str(data), "--label", "y", "--grid", str(grid),
            "--sizes", "50,100", "--replicates", "2", "--metric", "auc",
            "--seed", "11", "--out", str(out_dir), *stub_flags(), *extra,
        )
        return code, out_dir

    def test_writes_expected_files(self, tmp_path):
        code, out_dir = self.run_estimate(tmp_path)
        assert code == 0
        assert (out_dir / "report.json").exists()
        assert (out_dir / "ranking.csv").exists()
        assert (out_dir / "plotdata.csv").exists()
        assert (out_dir / "tensor_size50.npz").exists()
        assert (out_dir / "tensor_size100.npz").exists()
        doc = json.loads((out_dir / "report.json").read_text())
        assert doc["schema"] == "hpi-report/1"
        assert [rep["ranking"][0] for rep in doc["reports"]] == ["a", "a"]
        assert doc["consistency"]["exact_match"] is True

    def test_ranking_csv_schema(self, tmp_path):
        _, out_dir = self.run_estimate(tmp_path)
        with open(out_dir / "ranking.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert set(rows[0]) == {"subsample_size", "axis", "before", "after", "rank"}
        assert len(rows) == 4  # 2 sizes x 2 axes

    def test_plotdata_scaled(self, tmp_path):
        _, out_dir = self.run_estimate(tmp_path)
        doc = json.loads((out_dir / "report.json").read_text())
        raw = doc["reports"][0]["scores"]["a"]["before"]
        with open(out_dir / "plotdata.csv") as fh:
            rows = [r for r in csv.DictReader(fh) if r["axis"] == "a"]
        assert float(rows[0]["score"]) == pytest.approx(raw * 1e6)

    def test_missing_label_flag_usage_error(self, tmp_path):
        data = make_data(tmp_path)
        grid = write_grid(tmp_path)
        code = run_cli("estimate", "--data", str(data), "--grid", str(grid),
                       "--sizes", "50", "--out", str(tmp_path / "o"))
        assert code == 1

    def test_oversized_subsample_is_data_error(self, tmp_path):
        data = make_data(tmp_path)
        grid = write_grid(tmp_path)
        code = run_cli(
            "estimate", "--data", str(data), "--label", "y", "--grid", str(grid),
            "--sizes", "900", "--replicates", "1", "--out", str(tmp_path / "o2"),
            *stub_flags(),
        )
        assert code == 2

    def test_missing_data_file_is_data_error(self, tmp_path):
        grid = write_grid(tmp_path)
        code = run_cli(
            "estimate", "--data", str(tmp_path / "absent.csv"), "--label", "y",
            "--grid", str(grid), "--sizes", "50", "--out", str(tmp_path / "o"),
        )
        assert code == 2

    def test_timing_out_flag(self, tmp_path):
        code, out_dir = self.run_estimate(tmp_path, "--timing-out",
                                          str(tmp_path / "timing.csv"))
        assert code == 0
        with open(tmp_path / "timing.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert [int(r["subsample_size"]) for r in rows] == [50, 100]


class TestPlanAndTune:
    def setup_run(self, tmp_path):
        code, out_dir = TestEstimate().run_estimate(tmp_path)
        assert code == 0
        return out_dir

    def test_plan_gap_ratio(self, tmp_path):
        out_dir = self.setup_run(tmp_path)
        plan_path = tmp_path / "plan.json"
        code = run_cli("plan", "--report", str(out_dir / "report.json"),
                       "--gap-ratio", "3.0", "--out", str(plan_path))
        assert code == 0
        doc = json.loads(plan_path.read_text())
        assert doc["schema"] == "hpi-plan/1"
        assert doc["groups"] == [["a"]]  # b has exactly zero importance

    def test_plan_explicit_and_top(self, tmp_path):
        out_dir = self.setup_run(tmp_path)
        report = str(out_dir / "report.json")
        explicit = tmp_path / "explicit.json"
        assert run_cli("plan", "--report", report, "--groups", "a,b",
                       "--out", str(explicit)) == 0
        assert json.loads(explicit.read_text())["groups"] == [["a", "b"]]
        top = tmp_path / "top.json"
        assert run_cli("plan", "--report", report, "--top", "2", "--out", str(top)) == 0
        assert json.loads(top.read_text())["groups"] == [["a", "b"]]

    def test_plan_malformed_report(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}", encoding="utf-8")
        assert run_cli("plan", "--report", str(bad)) == 2

    def test_tune_sequential_and_both(self, tmp_path):
        out_dir = self.setup_run(tmp_path)
        data = tmp_path / "data.csv"
        plan_path = tmp_path / "plan.json"
        run_cli("plan", "--report", str(out_dir / "report.json"), "--groups", "a|b",
                "--out", str(plan_path))
        outcome_path = tmp_path / "outcome.json"
        code = run_cli(
            "tune", "--data", str(data), "--label", "y", "--plan", str(plan_path),
            "--seed", "5", "--out", str(outcome_path), *stub_flags(),
        )
        assert code == 0
        doc = json.loads(outcome_path.read_text())
        # Stub loss = value of a; lowest candidate wins under logloss-like
        # minimization, but auc maximizes, so a=2 is selected.
        assert doc["selected"]["a"] == 2
        assert doc["fit_count"] == 2 + 2

        both_path = tmp_path / "both.json"
        code = run_cli(
            "tune", "--data", str(data), "--label", "y", "--plan", str(plan_path),
            "--both", "--seed", "5", "--out", str(both_path), *stub_flags(),
        )
        assert code == 0
        both = json.loads(both_path.read_text())
        assert both["comparison"]["simultaneous_fits"] == 4
        assert both["comparison"]["sequential_fits"] == 4
        ratio = both["comparison"]["fit_count_ratio"]
        assert ratio == both["sequential"]["fit_count"] / both["simultaneous"]["fit_count"]

    def test_tune_usage_errors(self, tmp_path):
        data = make_data(tmp_path)
        assert run_cli("tune", "--data", str(data), "--label", "y") == 1

    def test_tune_trainer_failure_exit_code(self, tmp_path):
        out_dir = self.setup_run(tmp_path)
        data = tmp_path / "data.csv"
        plan_path = tmp_path / "plan.json"
        run_cli("plan", "--report", str(out_dir / "report.json"), "--groups", "a",
                "--out", str(plan_path))
        crashing = " ".join(
            shlex.quote(p)
            for p in stub_command("--axes", "a", "--declare", "a,b", "--crash-on-id", "0")
        )
        code = run_cli(
            "tune", "--data", str(data), "--label", "y", "--plan", str(plan_path),
            "--trainer", "external", "--external-cmd", crashing,
            "--out", str(tmp_path / "x.json"),
        )
        assert code == 3


class TestCheck:
    def test_check_over_existing_report(self, tmp_path):
        out_dir = TestEstimate().run_estimate(tmp_path)[1]
        assert run_cli("check", "--report", str(out_dir / "report.json")) == 0

    def test_check_missing_file(self, tmp_path):
        assert run_cli("check", "--report", str(tmp_path / "none.json")) == 2


class TestIdempotency:
    def test_estimate_idempotent_modulo_timestamp(self, tmp_path):
        code1, out1 = TestEstimate().run_estimate(tmp_path, out="run1")
        code2, out2 = TestEstimate().run_estimate(tmp_path, out="run2")
        assert code1 == code2 == 0
        doc1 = json.loads((out1 / "report.json").read_text())
        doc2 = json.loads((out2 / "report.json").read_text())
        doc1["metadata"].pop("created_at")
        doc2["metadata"].pop("created_at")
        assert doc1 == doc2
        assert (out1 / "ranking.csv").read_bytes() == (out2 / "ranking.csv").read_bytes()
        assert (out1 / "plotdata.csv").read_bytes() == (out2 / "plotdata.csv").read_bytes()
