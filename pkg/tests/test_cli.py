import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from oracles import FPP0_TAPER_025, LEADING_1
from rpq import __version__, cli
from rpq.exceptions import QuadratureError
from rpq.spde_sim import read_samples


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 0, err
    return json.loads(out)


class TestScanF:
    def test_f_curve(self, tmp_path, capsys):
        prefix = str(tmp_path / "fcurve")
        code, _, _ = run(["scan-f", "--lambda", "1", "--mass", "1", "--t-max", "3", "--t-step", "0.01",
                          "--out", prefix], capsys)
        assert code == 0
        with open(prefix + ".csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "F"] and len(rows) == 302
        assert rows[1] == ["0", "0"]
        rep = json.load(open(prefix + ".json"))
        assert rep["result"]["verdict"] == "RP_VIOLATED"
        assert 0 < rep["result"]["witness_point"] < 1.5
        assert rep["tool"] == {"name": "rpq", "version": __version__}
        assert rep["config"]["lam"] == 1.0 and rep["config"]["t_max"] == 3.0
        assert "violation_factor" in rep["tolerances"]

    def test_single_row(self, tmp_path, capsys):
        prefix = str(tmp_path / "z")
        run(["scan-f", "--lambda", "1", "--mass", "1", "--t-max", "0", "--t-step", "0.01", "--out", prefix], capsys)
        assert open(prefix + ".csv").read() == "t,F\n0,0\n"
        assert json.load(open(prefix + ".json"))["result"]["verdict"] == "NO_VIOLATION_FOUND"

    def test_missing_lambda(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["scan-f", "--mass", "1", "--t-max", "1"])
        assert info.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_bad_value(self, capsys):
        code, _, err = run(["scan-f", "--lambda", "-1", "--mass", "1", "--t-max", "1"], capsys)
        assert code == 2 and "lam" in err

    def test_numeric_failure(self, monkeypatch, capsys):
        def boom(*a, **k):
            raise QuadratureError("no convergence")
        monkeypatch.setattr(cli, "scan_f", boom)
        code, _, err = run(["scan-f", "--lambda", "1", "--mass", "1", "--t-max", "1"], capsys)
        assert code == 3 and "numeric" in err


class TestCoeffs:
    def test_one(self, capsys):
        r = run_json(["coeffs", "--lambda-eff", "1"], capsys)["result"]
        assert r["leading"] == pytest.approx(LEADING_1, rel=1e-13)
        assert r["boundary_case"] is False

    def test_boundary(self, capsys):
        r = run_json(["coeffs", "--lambda-eff", "0.5"], capsys)["result"]
        assert r["boundary_case"] is True and r["leading"] == r["c_lambda"]

    def test_negative(self, capsys):
        assert run(["coeffs", "--lambda-eff", "-1"], capsys)[0] == 2


def test_gram(capsys):
    r = run_json(["gram", "--null-family", "0.2:1.4:0.2", "--lambda", "1", "--mass", "1"], capsys)["result"]
    assert r["family_times"] == [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4]
    assert r["gram_spectrum"][0] < -10 * r["tolerance_used"]
    assert r["verdict"] == "RP_VIOLATED"


class TestDdim:
    def test_fpp0(self, capsys):
        r = run_json(["ddim", "fpp0", "--d", "2", "--lambda", "1", "--mass", "0.5", "--band", "1,2"], capsys)["result"]
        assert r["value"] == pytest.approx(FPP0_TAPER_025, rel=1e-10)
        assert r["positive"] and r["support_condition"]

    def test_nullcheck(self, capsys):
        r = run_json(["ddim", "nullcheck", "--lambda", "1", "--mass", "0.5", "--S", "0", "--T", "0.5"], capsys)
        assert abs(r["result"]["value"]) < 1e-10

    def test_scan(self, tmp_path, capsys):
        prefix = str(tmp_path / "d")
        run(["ddim", "scan", "--lambda", "1", "--mass", "0.5", "--out", prefix], capsys)
        rep = json.load(open(prefix + ".json"))
        assert rep["result"]["verdict"] == "RP_VIOLATED" and rep["result"]["form_value"] < 0
        assert open(prefix + ".csv").readline() == "T,F\n"

    def test_bad_band(self, capsys):
        assert run(["ddim", "fpp0", "--lambda", "1", "--mass", "0.5", "--band", "2"], capsys)[0] == 2
        assert run(["ddim", "fpp0", "--lambda", "1", "--mass", "0.5", "--d", "1"], capsys)[0] == 2


class TestSimulate:
    ARGS = ["simulate", "--n", "64", "--L", "32", "--lambda", "1", "--mass", "1", "--samples", "5000",
            "--seed", "7", "--comb", "null:0:0.5"]

    def test_exact_reproducible(self, tmp_path, capsys):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        run(self.ARGS + ["--out", a], capsys)
        run(self.ARGS + ["--out", b], capsys)
        ja, jb = open(a + ".json").read(), open(b + ".json").read()
        assert ja.replace("/a", "/b") == jb
        r = json.loads(ja)["result"]
        assert r["samples"] == 5000 and r["stderr"] > 0
        assert abs(r["estimate"] - r["exact_lattice"]) <= 4 * r["stderr"]

    def test_save_samples(self, tmp_path, capsys):
        path = tmp_path / "s.bin"
        run(self.ARGS[:-4] + ["--samples", "10", "--seed", "1", "--save-samples", str(path)], capsys)
        header, vals = read_samples(path)
        assert header["count"] == 10 and vals.shape == (10, 64)

    def test_atoms_comb(self, capsys):
        r = run_json(self.ARGS[:-2] + ["--comb", "atoms:0=1"], capsys)["result"]
        assert r["exact_lattice"] > 0 and r["comb"] == {"atoms": [[0.0, 1.0]]}

    def test_em_stability(self, capsys):
        code, _, err = run(["simulate", "--n", "256", "--L", "64", "--lambda", "1", "--mass", "1",
                            "--samples", "10", "--method", "em", "--dlambda", "0.05"], capsys)
        assert code == 4 and "stability" in err

    def test_em_runs(self, capsys):
        r = run_json(["simulate", "--n", "16", "--L", "16", "--lambda", "1", "--mass", "1", "--samples", "1000",
                      "--method", "em", "--dlambda", "0.01", "--comb", "atoms:0=1"], capsys)["result"]
        assert abs(r["estimate"] - r["exact_lattice"]) <= 5 * r["stderr"] + 0.05 * r["exact_lattice"]

    def test_em_needs_step(self, capsys):
        assert run(["simulate", "--lambda", "1", "--mass", "1", "--method", "em"], capsys)[0] == 2

    def test_bad_comb(self, capsys):
        assert run(self.ARGS[:-2] + ["--comb", "spline:1"], capsys)[0] == 2


class TestConfig:
    def test_flags_win(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# experiment\nlambda = 2\nmass = 1\nt-max = 0.05\n")
        rep = run_json(["scan-f", "--config", str(cfg), "--t-max", "0.02"], capsys)
        assert rep["config"]["lam"] == 2.0 and rep["config"]["t_max"] == 0.02

    def test_bool_key(self, tmp_path, capsys):
        cfg = tmp_path / "b.cfg"
        cfg.write_text("adaptive = false\nsamples = 300\n")
        rep = run_json(["simulate", "--config", str(cfg), "--lambda", "1", "--mass", "1", "--n", "16",
                        "--L", "16", "--comb", "atoms:0=1"], capsys)
        assert rep["config"]["adaptive"] is False and rep["result"]["samples"] == 300

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "u.cfg"
        cfg.write_text("colour = red\n")
        assert run(["coeffs", "--lambda-eff", "1", "--config", str(cfg)], capsys)[0] == 2

    def test_bad_line(self, tmp_path, capsys):
        cfg = tmp_path / "x.cfg"
        cfg.write_text("just words\n")
        assert run(["coeffs", "--lambda-eff", "1", "--config", str(cfg)], capsys)[0] == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rpq", "coeffs", "--lambda-eff", "2"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["result"]["leading"] > 0


def test_threads_env_does_not_change_output(tmp_path, monkeypatch, capsys):
    argv = ["scan-f", "--lambda", "1", "--mass", "1", "--t-max", "0.5", "--t-step", "0.05"]
    a = run_json(argv, capsys)
    monkeypatch.setenv("RPQ_THREADS", "4")
    b = run_json(argv, capsys)
    assert a == b
