import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ricdiag import telemetry as tm
from ricdiag.cli import parse_duration


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "ricdiag", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


class TestParseDuration:
    def test_units(self):
        assert parse_duration("250") == 250
        assert parse_duration("250ms") == 250
        assert parse_duration("3s") == 3_000
        assert parse_duration("15m") == 900_000
        assert parse_duration("1h") == 3_600_000
        assert parse_duration("5d") == 432_000_000

    def test_rejects_garbage(self):
        for bad in ("", "ten", "5w", "-3s", "1.5h"):
            with pytest.raises(ValueError):
                parse_duration(bad)


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("scenario")
    result = run_cli("synth", "--seed", 17, "--output-dir", out)
    assert result.returncode == 0, result.stderr
    return out


class TestSynthCommand:
    def test_writes_all_artifacts(self, scenario_dir):
        for name in ("pm.csv", "fm.csv", "cm.csv", "filter.csv", "matrix.csv", "truth.json"):
            assert (scenario_dir / name).exists(), name
        truth = json.loads((scenario_dir / "truth.json").read_text())
        assert truth["kpi"] == "kpi_drop_rate"
        assert truth["cause"]["kind"] in ("PM", "FM", "CM")

    def test_summary_names_the_cause(self, scenario_dir):
        result = run_cli("synth", "--seed", 17, "--output-dir", scenario_dir)
        truth = json.loads((scenario_dir / "truth.json").read_text())
        assert truth["cause"]["column"] in result.stdout


class TestBuildMatrixCommand:
    def test_rebuild_matches_synth_matrix(self, scenario_dir, tmp_path):
        truth = json.loads((scenario_dir / "truth.json").read_text())
        out_csv = tmp_path / "rebuilt.csv"
        result = run_cli(
            "build-matrix",
            "--pm", scenario_dir / "pm.csv",
            "--fm", scenario_dir / "fm.csv",
            "--cm", scenario_dir / "cm.csv",
            "--window-start", truth["window"]["start"],
            "--delta-t", truth["window"]["delta_t"],
            "--window", truth["window"]["delta_t"] * truth["window"]["rows"],
            "--output", out_csv,
        )
        assert result.returncode == 0, result.stderr
        rebuilt = tm.read_matrix_csv(out_csv)
        original = tm.read_matrix_csv(scenario_dir / "matrix.csv")
        assert set(rebuilt.names) == set(original.names)
        for name in original.names:
            np.testing.assert_array_equal(rebuilt.column(name), original.column(name))

    def test_summary_counts(self, scenario_dir, tmp_path):
        truth = json.loads((scenario_dir / "truth.json").read_text())
        result = run_cli(
            "build-matrix",
            "--pm", scenario_dir / "pm.csv",
            "--fm", scenario_dir / "fm.csv",
            "--cm", scenario_dir / "cm.csv",
            "--window-start", truth["window"]["start"],
            "--delta-t", truth["window"]["delta_t"],
            "--window", truth["window"]["delta_t"] * truth["window"]["rows"],
            "--output", tmp_path / "m.csv",
        )
        assert f"m={truth['window']['rows']} rows" in result.stdout
        assert "PM r=" in result.stdout

    def test_operator_window_arithmetic(self, tmp_path):
        # 1 h bins over 5 days: 120 rows
        pm = tmp_path / "pm.csv"
        pm.write_text("timestamp,bs_id,c\n0,b,1.0\n3600000,b,2.0\n")
        result = run_cli(
            "build-matrix", "--pm", pm, "--window-start", 0,
            "--delta-t", "1h", "--window", "5d", "--output", tmp_path / "m.csv",
        )
        assert result.returncode == 0, result.stderr
        assert "m=120 rows" in result.stdout

    def test_malformed_row_exits_2_with_line(self, tmp_path):
        pm = tmp_path / "pm.csv"
        pm.write_text("timestamp,bs_id,c\n0,b,1.0\nnonsense,b,2.0\n")
        result = run_cli(
            "build-matrix", "--pm", pm, "--window-start", 0,
            "--delta-t", "1h", "--window", "1d", "--output", tmp_path / "m.csv",
        )
        assert result.returncode == 2
        assert "line 3" in result.stderr


class TestRcaCommand:
    def test_recovers_injected_cause(self, scenario_dir, tmp_path):
        truth = json.loads((scenario_dir / "truth.json").read_text())
        report_path = tmp_path / "report.json"
        result = run_cli(
            "rca",
            "--matrix", scenario_dir / "matrix.csv",
            "--kpi", truth["kpi"],
            "--threshold", truth["threshold"],
            "--filter", scenario_dir / "filter.csv",
            "--output", report_path,
        )
        assert result.returncode == 0, result.stderr
        report = json.loads(report_path.read_text())
        assert report["root_cause"] == truth["cause"]["column"]
        assert report["score"] > 0.8
        assert report["window"]["rows"] == truth["window"]["rows"]

    def test_stdout_when_no_output_flag(self, scenario_dir):
        truth = json.loads((scenario_dir / "truth.json").read_text())
        result = run_cli(
            "rca", "--matrix", scenario_dir / "matrix.csv",
            "--kpi", truth["kpi"], "--threshold", truth["threshold"],
            "--filter", scenario_dir / "filter.csv",
        )
        assert result.returncode == 0
        assert json.loads(result.stdout)["root_cause"] == truth["cause"]["column"]

    def test_unknown_kpi_exits_2(self, scenario_dir):
        result = run_cli(
            "rca", "--matrix", scenario_dir / "matrix.csv",
            "--kpi", "no_such_kpi", "--threshold", 1.0,
        )
        assert result.returncode == 2
        assert "no_such_kpi" in result.stderr

    def test_everything_masked_exits_3(self, scenario_dir, tmp_path):
        truth = json.loads((scenario_dir / "truth.json").read_text())
        matrix = tm.read_matrix_csv(scenario_dir / "matrix.csv")
        deny_all = tmp_path / "deny.csv"
        with open(deny_all, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kpi_name", "column_name", "allowed"])
            for name in matrix.names:
                writer.writerow([truth["kpi"], name, 0])
        result = run_cli(
            "rca", "--matrix", scenario_dir / "matrix.csv",
            "--kpi", truth["kpi"], "--threshold", truth["threshold"],
            "--filter", deny_all,
        )
        assert result.returncode == 3
        assert json.loads(result.stdout)["root_cause"] is None

    def test_masked_true_cause_is_never_reported(self, scenario_dir, tmp_path):
        truth = json.loads((scenario_dir / "truth.json").read_text())
        deny_cause = tmp_path / "deny_cause.csv"
        deny_cause.write_text(
            "kpi_name,column_name,allowed\n"
            f"{truth['kpi']},{truth['cause']['column']},0\n"
        )
        result = run_cli(
            "rca", "--matrix", scenario_dir / "matrix.csv",
            "--kpi", truth["kpi"], "--threshold", truth["threshold"],
            "--filter", deny_cause,
        )
        assert result.returncode in (0, 3)
        report = json.loads(result.stdout)
        assert report["root_cause"] != truth["cause"]["column"]


class TestReldiscCommand:
    def test_writes_lookup_imputed_and_plot(self, scenario_dir, tmp_path):
        out = tmp_path / "lookup.csv"
        plot = tmp_path / "plot.json"
        result = run_cli(
            "reldisc", "--matrix", scenario_dir / "matrix.csv",
            "--x-col", "pm_active_users", "--y-col", "pm_prb_util",
            "--k", 8, "--gamma", 5, "--output", out, "--plot", plot,
        )
        assert result.returncode == 0, result.stderr
        assert out.exists()
        assert (tmp_path / "lookup.imputed.csv").exists()
        payload = json.loads(plot.read_text())
        assert set(payload) == {"scatter", "lookup"}
        with open(out) as fh:
            assert fh.readline().strip() == "x,y,y_smooth,count"

    def test_event_column_rejected(self, scenario_dir, tmp_path):
        matrix = tm.read_matrix_csv(scenario_dir / "matrix.csv")
        event_col = next(
            n for n, k in zip(matrix.names, matrix.kinds) if k != tm.PM
        )
        result = run_cli(
            "reldisc", "--matrix", scenario_dir / "matrix.csv",
            "--x-col", event_col, "--y-col", "pm_prb_util",
            "--output", tmp_path / "lookup.csv",
        )
        assert result.returncode == 2
        assert event_col in result.stderr


class TestBenchCommand:
    def test_reldisc_mode_writes_timings(self, tmp_path):
        out = tmp_path / "timings.csv"
        result = run_cli(
            "bench", "--mode", "reldisc_vs_m", "--sizes", "500,1000",
            "--repeats", 1, "--output", out,
        )
        assert result.returncode == 0, result.stderr
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "size,seconds"
        assert [r.split(",")[0] for r in rows[1:]] == ["500", "1000"]
        assert "exponent" in result.stdout

    def test_sizes_must_ascend(self, tmp_path):
        result = run_cli(
            "bench", "--mode", "reldisc_vs_m", "--sizes", "1000,500",
            "--output", tmp_path / "t.csv",
        )
        assert result.returncode == 2


def test_missing_subcommand_exits_2():
    result = run_cli()
    assert result.returncode == 2
