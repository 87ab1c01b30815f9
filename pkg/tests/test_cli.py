"""Command-line surface: flags, outputs, exit codes, determinism."""

import json

import pytest
from click.testing import CliRunner

from toruslab.cli import main


@pytest.fixture
def runner():
    return CliRunner()


class TestKernelCommand:
    def test_point_value(self, runner):
        result = runner.invoke(
            main, ["kernel", "--d", "1", "--theta", "1", "--N", "1", "--t", "0", "--x", "0"]
        )
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["value"]["re"] == pytest.approx(3.0)
        assert payload["phi_profile"]

    def test_missing_cutoff_is_usage_error(self, runner):
        result = runner.invoke(main, ["kernel", "--d", "1", "--t", "0"])
        assert result.exit_code == 2
        assert "Usage" in result.output or "Missing" in result.output

    def test_coarse_grid_is_guard_abort(self, runner):
        result = runner.invoke(main, ["kernel", "--d", "1", "--N", "8", "--n-x", "2"])
        assert result.exit_code == 1

    def test_grid_dump(self, runner, tmp_path):
        result = runner.invoke(
            main, ["kernel", "--d", "1", "--N", "2", "--t", "0.25", "--out-dir", str(tmp_path)]
        )
        assert result.exit_code == 0
        csv_lines = (tmp_path / "kernel_grid.csv").read_text().splitlines()
        assert csv_lines[0].startswith("# ")  # embedded meta record
        assert csv_lines[1] == "t,x_1,re,im"
        assert len(csv_lines) > 8
        summary = json.loads((tmp_path / "kernel_summary.json").read_text())
        assert summary["config"]["N"] == 2


class TestArithCommands:
    def test_dirichlet(self, runner):
        result = runner.invoke(main, ["arith", "dirichlet", "--beta", "0.3333333", "--N", "10"])
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["output"] == {"a": 1, "q": 3}

    def test_divisor(self, runner):
        result = runner.invoke(main, ["arith", "divisor", "--n", "12", "--Q", "2"])
        assert json.loads(result.output)["output"]["count"] == 2

    def test_f2hat(self, runner):
        result = runner.invoke(main, ["arith", "f2hat", "--omega", "6", "--Q", "2"])
        assert json.loads(result.output)["output"]["value"] == 5

    def test_major_arc(self, runner):
        result = runner.invoke(
            main, ["arith", "major-arc", "--t", "0.5", "--N", "16", "--sigma", "0.25"]
        )
        payload = json.loads(result.output)
        assert payload["output"]["inside"] is True
        assert payload["output"]["witness"][2] == 2


class TestSweepCommands:
    def test_character_sweep(self, runner, tmp_path):
        result = runner.invoke(main, [
            "strichartz-sweep", "--d", "1", "--p", "8", "--class", "character",
            "--N", "8,16,32,64", "--n-t", "512", "--n-x", "64", "--out-dir", str(tmp_path),
        ])
        assert result.exit_code == 0
        fit = json.loads((tmp_path / "strichartz_fit.json").read_text())["fit"]
        assert abs(fit["slope"]) <= 1e-9
        rows = (tmp_path / "strichartz_sweep.csv").read_text().splitlines()
        assert rows[0].startswith("# ")
        assert rows[1] == "class,d,p,N,norm,ratio"
        assert len(rows) == 6

    def test_dispersive_check(self, runner, tmp_path):
        result = runner.invoke(main, [
            "dispersive-check", "--d", "1", "--N", "8,16", "--n-t", "2048",
            "--dump-grid", "--out-dir", str(tmp_path),
        ])
        assert result.exit_code == 0
        payload = json.loads((tmp_path / "dispersive_report.json").read_text())
        assert len(payload["reports"]) == 2
        assert payload["stability"]["max_ratio_spread"] < 2.0
        dump = (tmp_path / "dispersive_grid_N8.csv").read_text().splitlines()
        assert dump[1] == "t,kernel_max,bound,ratio"

    def test_plot_emission(self, runner, tmp_path):
        result = runner.invoke(main, [
            "strichartz-sweep", "--d", "1", "--p", "8", "--class", "character",
            "--N", "8,16,32,64", "--n-t", "256", "--n-x", "64", "--emit-plot",
            "--out-dir", str(tmp_path),
        ])
        assert result.exit_code == 0
        script = (tmp_path / "strichartz_sweep.gp").read_text()
        assert "logscale" in script and "strichartz_sweep.csv" in script

    def test_bilinear_check(self, runner, tmp_path):
        result = runner.invoke(main, [
            "bilinear-check", "--d", "3", "--N1", "2,4", "--T", "1,0.25",
            "--n-t", "256", "--n-x", "16", "--out-dir", str(tmp_path),
        ])
        assert result.exit_code == 0
        rows = (tmp_path / "bilinear_table.csv").read_text().splitlines()
        assert rows[1] == "N1,N2,T,ratio"


class TestNlsRun:
    def test_plane_wave_run(self, runner, tmp_path):
        result = runner.invoke(main, [
            "nls-run", "--d", "3", "--sign", "defocusing", "--data", "planewave:0.01",
            "--N", "4", "--T", "0.05", "--dt", "1e-3", "--solver", "splitstep",
            "--out-dir", str(tmp_path),
        ])
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report["mass_drift"] <= 1e-8
        lines = (tmp_path / "nls_diagnostics.csv").read_text().splitlines()
        assert lines[0].startswith("# ")
        assert lines[1] == "t,mass,energy,h1,linf"
        assert len(lines) == 53  # meta + header + 51 states

    def test_field_dump(self, runner, tmp_path):
        result = runner.invoke(main, [
            "nls-run", "--d", "3", "--data", "planewave:0.1", "--N", "2", "--T", "0.02",
            "--dt", "1e-2", "--dump-fields", "--out-dir", str(tmp_path),
        ])
        assert result.exit_code == 0
        assert (tmp_path / "state_000000.fld").exists()
        assert (tmp_path / "state_000002.fld").exists()

    def test_budget_abort(self, runner, tmp_path):
        result = runner.invoke(main, [
            "nls-run", "--d", "3", "--N", "8", "--T", "0.25", "--dt", "1e-3",
            "--budget", "1000", "--out-dir", str(tmp_path),
        ])
        assert result.exit_code == 1
        aborted = json.loads((tmp_path / "aborted.json").read_text())
        assert aborted["truncated"] is True


class TestDeterminism:
    def test_seeded_outputs_byte_identical(self, runner, tmp_path):
        args = [
            "strichartz-sweep", "--d", "1", "--p", "8", "--class", "random_gaussian",
            "--N", "4,8,16,32", "--seed", "123", "--n-t", "256", "--n-x", "64",
        ]
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            result = runner.invoke(main, args + ["--out-dir", str(out)])
            assert result.exit_code == 0
            outs.append(
                (out / "strichartz_sweep.csv").read_bytes()
                + (out / "strichartz_fit.json").read_bytes()
            )
        assert outs[0] == outs[1]
