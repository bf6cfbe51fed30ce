import json
import math
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from butterflylab.cli import main
from butterflylab.pmf import Pmf
from butterflylab.rng import substream
from butterflylab.stats import chi_square, merge_sparse_cells


class TestChiSquare:
    def test_exact_match(self):
        pmf = Pmf(0, [1, 1, 1, 1], "count")
        res = chi_square({0: 25, 1: 25, 2: 25, 3: 25}, pmf)
        assert res.statistic == 0.0
        assert res.df == 3
        assert res.p_value == pytest.approx(1.0)

    def test_fair_die_calibration(self):
        # 100 seeded runs of a fair six-sided die; the 1% test should pass >= 98
        passes = 0
        for run in range(100):
            rng = substream(61, run)
            draws = rng.integers(0, 6, size=6 * 10**4)
            counts = np.bincount(draws, minlength=6)
            if chi_square(counts, [1 / 6] * 6).p_value > 0.01:
                passes += 1
        assert passes >= 98

    def test_detects_skew(self):
        rng = substream(61, 1000)
        draws = rng.integers(0, 6, size=6 * 10**4)
        counts = np.bincount(draws, minlength=6).astype(float)
        counts[2] *= 2.0
        assert chi_square(counts, [1 / 6] * 6).p_value < 1e-6

    def test_support_mismatch(self):
        with pytest.raises(ValueError):
            chi_square({7: 3}, Pmf(0, [1, 1], "count"))
        with pytest.raises(ValueError):
            chi_square([1, 2, 3], [0.5, 0.5])

    def test_zero_expected_rejected(self):
        with pytest.raises(ValueError):
            chi_square([1, 2], [1.0, 0.0])

    def test_merge_sparse_cells(self):
        probs = [0.5, 0.45, 0.04, 0.009, 0.001]
        counts = [50, 45, 4, 1, 0]
        mp, mc = merge_sparse_cells(range(5), probs, counts, min_expected=5.0)
        assert mp.sum() == pytest.approx(1.0)
        assert mc.sum() == 100
        assert (mp * 100 >= 5.0).all()


def run_cli(args, tmp):
    rc = main([*args, "--out", str(tmp)])
    assert rc == 0
    return tmp


class TestCli:
    def test_lis_table_exact(self, tmp_path):
        out = run_cli(["lis-table", "--n", "1..4", "--mode", "exact"], tmp_path / "a")
        rows = (out / "lis_counts.csv").read_text().splitlines()
        assert rows[0] == "n,k,mass,cdf"
        table = {}
        for line in rows[1:]:
            n, k, mass, _ = line.split(",")
            table[(int(n), int(k))] = int(mass)
        assert [table[(3, k)] for k in range(1, 9)] == [1, 25, 32, 35, 18, 12, 4, 1]
        assert table[(4, 2)] == 676
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "lis-table"
        assert "butterflylab" in manifest["versions"]

    def test_bounds_table(self, tmp_path):
        out = run_cli(["bounds", "--m", "2..11"], tmp_path / "b")
        lines = (out / "bounds.csv").read_text().splitlines()
        header = lines[0].split(",")
        rows = {int(l.split(",")[0]): dict(zip(header, l.split(","))) for l in lines[1:]}
        assert abs(float(rows[2]["alpha"]) - 0.58496) < 1e-5
        assert abs(float(rows[2]["beta"]) - 0.89029) < 1e-5
        assert abs(float(rows[2]["beta_star"]) - 0.83255) < 1e-5
        assert rows[2]["n0"] == "3493"
        assert abs(float(rows[11]["beta"]) - 0.90898) < 1e-5

    def test_fit(self, tmp_path):
        out = run_cli(["fit", "--n", "3..12", "--mode", "float"], tmp_path / "c")
        fit = json.loads((out / "fit.json").read_text())
        assert 0.66 < fit["alpha_hat"] < 0.70
        assert fit["r_squared"] > 0.999999

    def test_cycles_table(self, tmp_path):
        out = run_cli(["cycles-table", "--p", "3", "--n", "1..2"], tmp_path / "d")
        lines = (out / "cycle_counts.csv").read_text().splitlines()
        got = [l.split(",") for l in lines[1:] if l.split(",")[1] == "2"]
        assert [int(r[3]) for r in got] == [36, 26, 12, 6, 1]

    def test_moments(self, tmp_path):
        out = run_cli(["moments", "--p", "2", "--k-max", "6"], tmp_path / "e")
        data = json.loads((out / "moments.json").read_text())
        m6 = next(d for d in data if d["k"] == 6)
        assert Fraction(int(m6["numerator"]), int(m6["denominator"])) == Fraction(40435712, 2345265)

    def test_density_and_fixed_points(self, tmp_path):
        out = run_cli(["density", "--p", "2", "--n", "10", "--t", "0.5:1.5:0.5"], tmp_path / "f")
        lines = (out / "density.csv").read_text().splitlines()
        assert lines[0] == "t,f" and len(lines) == 4
        out = run_cli(["fixed-points", "--m", "2,3", "--n", "4"], tmp_path / "g")
        lines = (out / "fixed_points.csv").read_text().splitlines()
        assert lines[0] == "m,n,p_no_fixed_point,p_no_fixed_point_float,x_star"
        row2 = lines[1].split(",")
        assert row2[2] == str(Fraction(no_fp_2_4_num(), 2**16))

    def test_sample_deterministic(self, tmp_path):
        a = run_cli(["sample", "--kind", "nonsimple", "--n", "3", "--trials", "5", "--seed", "7"],
                    tmp_path / "h1")
        b = run_cli(["sample", "--kind", "nonsimple", "--n", "3", "--trials", "5", "--seed", "7"],
                    tmp_path / "h2")
        assert (a / "permutations.txt").read_bytes() == (b / "permutations.txt").read_bytes()
        assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()

    def test_lis_mc_small(self, tmp_path):
        out = run_cli(["lis-mc", "--ensembles", "uniform,ns-scalar,goe", "--n", "3..4",
                       "--trials", "50", "--seed", "3"], tmp_path / "i")
        lines = (out / "lis_mc.csv").read_text().splitlines()
        assert lines[0] == "ensemble,N,sample_mean,sample_std,trials"
        assert len(lines) == 1 + 3 * 2

    def test_lis_mc_all_ensembles_and_determinism(self, tmp_path):
        args = ["lis-mc", "--n", "3", "--trials", "8", "--seed", "11"]
        a = run_cli(args, tmp_path / "j1")
        b = run_cli(args, tmp_path / "j2")
        assert (a / "lis_mc.csv").read_bytes() == (b / "lis_mc.csv").read_bytes()
        lines = (a / "lis_mc.csv").read_text().splitlines()
        assert len(lines) == 9  # all eight ensembles at one size
        for line in lines[1:]:
            mean = float(line.split(",")[2])
            assert 1.0 <= mean <= 8.0

    def test_env_seed_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BUTTERFLYLAB_SEED", "12345")
        out = run_cli(["sample", "--kind", "simple", "--n", "2", "--trials", "2"], tmp_path / "j")
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 12345
        assert manifest["seed_source"] == "env"

    def test_verify_passes(self, capsys):
        assert main(["verify", "--seed", "5"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("ok") >= 10

    def test_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "butterflylab.cli", "bounds", "--m", "2",
             "--out", str(tmp_path / "k")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr


def no_fp_2_4_num():
    # h iterate at depth 4 over denominator 2^16: p4 = 48621/65536
    x = Fraction(0)
    for _ in range(4):
        x = Fraction(1, 2) + Fraction(1, 2) * x * x
    assert x.denominator == 2**16 or (2**16 % x.denominator == 0)
    return x.numerator * (2**16 // x.denominator)
