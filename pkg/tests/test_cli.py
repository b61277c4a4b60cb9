import json
import subprocess
import sys

import pytest

from minimax_boundary.cli import EXIT_OK, EXIT_USAGE, run


def out_json(capsys):
    return json.loads(capsys.readouterr().out)


class TestConstants:
    def test_values_and_sources(self, capsys):
        assert run(["constants"]) == EXIT_OK
        doc = out_json(capsys)
        assert abs(doc["y_star"] + 0.12455) < 1e-5
        assert abs(doc["I_star"] - 0.26672) < 1e-5
        assert abs(doc["risk"] - 1.74515) < 1e-5
        assert doc["sources"]["t_bar_display"] == "paper_display"
        assert doc["sources"]["t_bar_recursion"] == "closed_form"
        assert set(doc["sources"]) == set(doc) - {"sources"}

    def test_csv(self, capsys):
        assert run(["constants", "--format", "csv", "--sigma", "2"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "key,value"
        rows = dict(line.split(",", 1) for line in lines[1:])
        assert float(rows["sigma"]) == 2.0
        assert "sources" not in rows

    def test_out_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(["constants", "--out", str(a)]) == EXIT_OK
        assert run(["constants", "--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestKernel:
    def test_stdout_csv(self, capsys):
        assert run(["kernel", "--grid-n", "64"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,psi" and len(lines) == 66
        t0, psi0 = map(float, lines[1].split(","))
        assert t0 == 0.0 and abs(psi0 - 1.74515) < 1e-5
        assert float(lines[-1].split(",")[1]) == 0.0

    def test_json(self, capsys):
        assert run(["kernel", "--format", "json", "--c", "2"]) == EXIT_OK
        doc = out_json(capsys)
        assert doc["side"] == "boundary" and doc["C"] == 2.0
        assert doc["sources"]["side"] == "config"

    def test_out_directory(self, tmp_path):
        for d in ("x", "y"):
            assert run(["rd-kernel", "--out", str(tmp_path / d), "--grid-n", "128"]) == EXIT_OK
        for name in ("rd_kernel.csv", "rd_kernel_risk.json"):
            assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()
        doc = json.loads((tmp_path / "x" / "rd_kernel_risk.json").read_text())
        assert doc["side"] == "rd_antisymmetric"
        assert abs(doc["risk"] - 4.0093) < 1e-4
        rows = (tmp_path / "x" / "rd_kernel.csv").read_text().splitlines()
        assert rows[0] == "t,psi"
        assert float(rows[1].split(",")[0]) < 0


class TestUsage:
    @pytest.mark.parametrize("argv", [[], ["bogus"], ["constants", "--sigma", "0"],
                                      ["constants", "--sigma", "nan"], ["kernel", "--grid-n", "-3"],
                                      ["simulate", "--seed", "-1"],
                                      ["simulate", "--scenario", "other"],
                                      ["constants", "--format", "xml"]])
    def test_invalid_arguments(self, argv, capsys):
        assert run(argv) == EXIT_USAGE

    def test_help(self, capsys):
        assert run(["--help"]) == EXIT_OK

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert run(["constants", "--out", str(blocker / "sub" / "c.json")]) == EXIT_USAGE


class TestSimulate:
    def test_report(self, capsys):
        argv = ["simulate", "--replications", "500", "--grid-n", "512", "--seed", "3"]
        assert run(argv) == EXIT_OK
        doc = out_json(capsys)
        for key in ("scenario", "replications", "empirical_mse", "mse_stderr", "empirical_bias",
                    "analytic_risk", "seed", "delta_t", "horizon", "passed"):
            assert key in doc
        assert doc["passed"] is True and doc["seed"] == 3
        assert doc["sources"]["empirical_mse"] == "monte_carlo"
        assert doc["sources"]["analytic_risk"] == "closed_form"
        assert run(argv) == EXIT_OK
        assert out_json(capsys) == doc

    @pytest.mark.parametrize("scenario", ["minus_f_star", "zero", "rd", "rd_zero_jump"])
    def test_scenarios(self, scenario, capsys):
        argv = ["simulate", "--scenario", scenario, "--replications", "400", "--grid-n", "512"]
        assert run(argv) == EXIT_OK
        assert out_json(capsys)["scenario"] == scenario

    def test_too_few_replications(self, capsys):
        assert run(["simulate", "--replications", "50"]) == EXIT_USAGE


class TestOracle:
    def test_quick_battery(self, capsys):
        assert run(["oracle", "--tolerance-profile", "quick", "--grid-n", "500"]) == EXIT_OK
        doc = out_json(capsys)
        assert doc["passed"] is True
        assert doc["support_adjudication"]["candidates"]["recursion"] == pytest.approx(2.45792,
                                                                                      abs=1e-5)

    def test_coarse_grid_rejected(self, capsys):
        # grids below 500 points are rejected
        code = run(["oracle", "--grid-n", "400"])
        assert code == EXIT_USAGE


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "minimax_boundary.cli", "constants",
                           "--format", "csv"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("key,value\n")
