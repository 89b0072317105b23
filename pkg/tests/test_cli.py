import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from confcal import cli
from confcal.base import NadarayaWatson
from confcal.datagen import read_csv
from confcal.schemas import SCHEMAS, validate_report


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


class TestGen:
    def test_empty(self, tmp_path):
        p = tmp_path / "d.csv"
        assert cli.main(["gen", "--n", "0", "--out", str(p)]) == 0
        assert p.read_bytes() == b"x,y\n"

    def test_three_rows(self, tmp_path):
        p = tmp_path / "d.csv"
        cli.main(["gen", "--n", "3", "--seed", "4", "--out", str(p)])
        assert len(p.read_text().splitlines()) == 4
        assert len(read_csv(p)) == 3

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["gen", "--n", "50", "--seed", "11", "--out", str(a)])
        cli.main(["gen", "--n", "50", "--seed", "11", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_stdout(self, capsys, tmp_path):
        p = tmp_path / "d.csv"
        cli.main(["gen", "--n", "5", "--seed", "2", "--out", str(p)])
        code, out, _ = run(capsys, "gen", "--n", "5", "--seed", "2", "--out", "-")
        assert code == 0 and out == p.read_text()

    def test_io_error(self, tmp_path):
        assert cli.main(["gen", "--n", "3", "--out", str(tmp_path / "missing" / "d.csv")]) == 2


class TestHeatmap:
    ARGS = ("heatmap", "--g", "0.3", "--h", "0.2", "--n-train", "40", "--n-calib", "20", "--n-test", "1")

    def test_single_cell(self, capsys):
        r = report(capsys, *self.ARGS)
        assert r["command"] == "heatmap"
        (cell,) = r["results"]["cells"]
        assert cell["crps_base"] >= 0 and cell["crps_calibrated"] >= 0
        assert set(r) == {"command", "config", "results", "warnings"}

    def test_fixed_tau_deterministic(self, capsys):
        args = (*self.ARGS[:-1], "30", "--tau-mode", "fixed-0.5", "--seed", "5")
        assert run(capsys, *args)[1] == run(capsys, *args)[1]

    def test_cells_sorted_and_jobs_invariant(self, capsys):
        args = ("heatmap", "--g", "0.5", "0.1", "--h", "0.3", "0.05", "--n-train", "60", "--n-calib", "30",
                "--n-test", "20", "--tau-mode", "fixed-0.5")
        a = report(capsys, *args)
        b = report(capsys, *args, "--jobs", "3")
        keys = [(c["g"], c["h"]) for c in a["results"]["cells"]]
        assert keys == sorted(keys) and a == b

    def test_cross_column(self, capsys):
        r = report(capsys, *self.ARGS[:-1], "10", "--folds", "3")
        assert r["results"]["cells"][0]["crps_cross"] >= 0

    @pytest.mark.parametrize("bad", [["--g", "-0.1"], ["--n-test", "0"], ["--grid-points", "1"],
                                     ["--grid-lo", "3", "--grid-hi", "1"], ["--tau-mode", "sometimes"]])
    def test_config_errors(self, capsys, bad):
        assert run(capsys, *self.ARGS, *bad)[0] == 1

    def test_contract_violation(self, capsys, monkeypatch):
        def decreasing(self, training, xs, grid):
            return np.tile(np.linspace(1, 0, len(grid)), (len(xs), 1))

        monkeypatch.setattr(NadarayaWatson, "cdf_matrix", decreasing)
        code, _, err = run(capsys, *self.ARGS)
        assert code == 3 and "contract" in err


class TestProp1:
    def test_single(self, capsys):
        r = report(capsys, "prop1", "--n", "1", "--replications", "1")
        (row,) = r["results"]
        assert row["bound"] == 0.5 and row["max_sup_discrepancy"] <= 0.5 and row["pass"]

    def test_zero_rejected(self, capsys):
        assert run(capsys, "prop1", "--n", "0")[0] == 1


class TestSemiOnline:
    def test_one_test(self, capsys):
        r = report(capsys, "semionline", "--n-train", "30", "--n-calib", "20", "--n-test", "1")
        (run_,) = r["results"]["runs"]
        (u,) = run_["pits"]
        assert run_["ks"] == max(u, 1 - u)

    def test_replication_seeds(self, capsys):
        r = report(capsys, "semionline", "--n-train", "30", "--n-calib", "20", "--n-test", "10",
                   "--replications", "3", "--seed", "7", "--base", "oracle")
        assert [x["seed"] for x in r["results"]["runs"]] == [7, 8, 9]


class TestDemo:
    def test_empty_calibration(self, capsys):
        r = report(capsys, "demo-noniid", "--n-calib", "0", "--n-test", "20", "--tau-mode", "fixed-0.5")
        (row,) = r["results"]
        assert row["crps_conformalized"] >= 0 and r["warnings"]

    def test_constant_tau_closed_form(self, capsys):
        # a constant 0.5 forecast on [-5, 5] scores (y + 5)/4 + (5 - y)/4 = 2.5
        r = report(capsys, "demo-noniid", "--n-calib", "0", "--n-test", "5", "--tau-mode", "fixed-0.5")
        assert r["results"][0]["crps_conformalized"] == pytest.approx(2.5, abs=1e-9)


def test_reports_match_schemas(capsys):
    cases = [
        ("heatmap", "--g", "0.3", "--h", "0.2", "--n-train", "20", "--n-calib", "10", "--n-test", "5"),
        ("prop1", "--n", "3", "--replications", "2"),
        ("semionline", "--n-train", "20", "--n-calib", "10", "--n-test", "5"),
        ("demo-noniid", "--n-calib", "0", "5", "--n-test", "5"),
    ]
    for argv in cases:
        r = report(capsys, *argv)
        jsonschema.validate(r, SCHEMAS[r["command"]])
    broken = dict(r, results="nope")
    with pytest.raises(jsonschema.ValidationError):
        validate_report(broken)


def test_argparse_error_is_config_error(capsys):
    assert run(capsys, "heatmap", "--no-such-flag")[0] == 1
    assert run(capsys)[0] == 1


def test_module_entry_point(tmp_path):
    p = tmp_path / "d.csv"
    done = subprocess.run([sys.executable, "-m", "confcal.cli", "gen", "--n", "2", "--out", str(p)],
                          capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
    assert len(p.read_text().splitlines()) == 3
