"""End-to-end acceptance criteria, one test per criterion, with pass lines.

Each test prints "[acceptance] criterion N PASS ..." on success so the
suite doubles as a checklist (run with -v -s or read test_output.txt).
Three printed targets that are internally inconsistent with the structures
that generate them are kept as strict xfails with the analysis in their
reasons; everything else runs at its stated tolerance.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from butterflylab import Permutation, cycle_stats
from butterflylab.cycles import (
    fixed_point_moments,
    limit_moments,
    monte_carlo_w,
    no_fixed_point_prob,
    nonsimple_cycle_counts,
    x_star,
)
from butterflylab.gepp import (
    build_butterfly,
    build_butterfly_batch,
    gepp,
    gepp_perm_batch,
    predicted_factorization,
    sample_spec,
)
from butterflylab.groups import enumerate_group, materialize
from butterflylab.lis import bounds, fit_exponent, nonsimple_lis_counts, nonsimple_lis_moments
from butterflylab.rng import substream
from butterflylab.stats import chi_square, merge_sparse_cells

VAR_SCALING_TABLE = {
    # n: (E X_n, E X_n^2, sqrt(E X_n^2)/E X_n) as printed, with one-ulp tolerances
    1: (1.5, 0.001, 2.5, 0.001, 1.05409),
    2: (2.375, 0.001, 6.375, 0.001, 1.06311),
    3: (3.78906, 1e-5, 16.3359, 1e-4, 1.06670),
    4: (6.07187, 1e-5, 41.9741, 1e-4, 1.06701),
    5: (9.73715, 1e-5, 107.955, 1e-3, 1.06706),
    6: (15.6201, 1e-4, 277.762, 1e-3, 1.06697),
    7: (25.0588, 1e-4, 714.792, 1e-3, 1.06692),
    8: (40.2016, 1e-4, 1839.57, 1e-2, 1.06688),
    9: (64.495, 1e-3, 4734.39, 1e-2, 1.06686),
    10: (103.468, 1e-3, 12184.8, 1e-1, 1.06685),
    11: (165.992, 1e-3, 31359.9, 1e-1, 1.06684),
    12: (266.298, 1e-3, 80710.8, 1e-1, 1.06684),
    13: (427.216, 1e-3, 207725.0, 1.0, 1.06684),
    14: (685.372, 1e-3, 534622.0, 1.0, 1.06683),
    15: (1099.53, 1e-2, 1.37596e6, 1e1, 1.06683),
}


def test_criterion_01_lis_count_triangle():
    t0 = time.perf_counter()
    rows = {n: nonsimple_lis_counts(n) for n in (1, 2, 3, 4)}
    assert [int(v) for v in rows[1].masses] == [1, 1]
    assert [int(v) for v in rows[2].masses] == [1, 4, 2, 1]
    assert [int(v) for v in rows[3].masses] == [1, 25, 32, 35, 18, 12, 4, 1]
    prefix4 = [int(rows[4].mass(k)) for k in range(1, 9)]
    assert prefix4 == [1, 676, 2738, 5974, 5342, 5618, 4164, 3240]
    assert rows[4].mass(15) == 8 and rows[4].mass(16) == 1
    assert rows[4].total == 2**15
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    print(f"[acceptance] criterion 1 PASS: LIS triangle rows n=1..4 exact ({elapsed:.3f}s)")


def test_criterion_02_variance_scaling_table():
    t0 = time.perf_counter()
    for n, (m1, tol1, m2, tol2, ratio) in VAR_SCALING_TABLE.items():
        g1, g2 = nonsimple_lis_moments(n, mode="float")
        assert abs(g1 - m1) <= tol1, (n, g1, m1)
        assert abs(g2 - m2) <= tol2, (n, g2, m2)
        assert abs(math.sqrt(g2) / g1 - ratio) <= 1e-5, (n, math.sqrt(g2) / g1, ratio)
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    print(f"[acceptance] criterion 2 PASS: moment table n=1..15 at printed precision ({elapsed:.1f}s)")


def _fit_3_15():
    pts = [(2.0**n, float(nonsimple_lis_moments(n, mode="float")[0])) for n in range(3, 16)]
    return fit_exponent(pts)


def test_criterion_03_exponent_regression():
    res = _fit_3_15()
    assert abs(res.alpha_hat - 0.681831042) < 1e-6
    print(f"[acceptance] criterion 3 PASS: alpha_hat = {res.alpha_hat:.9f} (+-1e-6), "
          f"R^2 = {res.r_squared:.12f}")


@pytest.mark.xfail(strict=True, reason=(
    "unweighted least squares on these thirteen exact means has a genuine lack "
    "of fit of 1 - R^2 = 3.9e-8 (the early depths carry visible curvature); "
    "no ordinary R^2 of this fit reaches 1 - 1e-9"))
def test_criterion_03_r_squared_printed_target():
    res = _fit_3_15()
    print(f"[acceptance] criterion 3 R^2 target NOT MET: 1 - R^2 = {1 - res.r_squared:.3e}")
    assert res.r_squared >= 1 - 1e-9


def test_criterion_04_bounds_table():
    table = {
        2: (0.58496, 0.89029), 3: (0.77124, 0.89279), 5: (0.82948, 0.89730),
        7: (0.85564, 0.90191), 11: (0.88117, 0.90898), 97: (0.93712, 0.93971),
        997: (0.95833, 0.95856), 9973: (0.96875, 0.96878),
        99991: (0.97501, 0.97501), 999983: (0.97917, 0.97917),
    }
    for p, (ta, tb) in table.items():
        b = bounds(p)
        assert abs(b.alpha - ta) < 1e-5, (p, b.alpha, ta)
        assert abs(b.beta - tb) < 1e-5, (p, b.beta, tb)
    b2 = bounds(2)
    assert abs(b2.c_star - 0.63092) < 1e-5
    assert abs(b2.beta_star - 0.83255) < 1e-5
    assert b2.n0 == 3493 and bounds(3).n0 == 13 and bounds(5).n0 == 9
    print("[acceptance] criterion 4 PASS: alpha/beta for 10 primes, beta*, c*, N0 cutoffs")


def test_criterion_05_stirling_triangles():
    t0 = time.perf_counter()
    s = {n: nonsimple_cycle_counts(2, n) for n in (1, 2, 3, 4)}
    assert [int(v) for v in s[1].masses] == [1, 1]
    assert [int(v) for v in s[2].masses] == [2, 3, 2, 1]
    assert [int(v) for v in s[3].masses] == [16, 28, 28, 25, 16, 10, 4, 1]
    assert [int(s[4].mass(k)) for k in range(1, 9)] == [2048, 3840, 4480, 4880, 4416, 3976, 3128, 2337]
    s3 = nonsimple_cycle_counts(3, 2)
    assert [int(s3.mass(1 + 2 * j)) for j in range(5)] == [36, 26, 12, 6, 1]
    s5 = nonsimple_cycle_counts(5, 2)
    assert [int(s5.mass(1 + 4 * j)) for j in range(7)] == [10000, 3524, 1280, 640, 160, 20, 1]
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    print(f"[acceptance] criterion 5 PASS: butterfly Stirling triangles p=2,3,5 exact ({elapsed:.3f}s)")


def test_criterion_06_moment_engine():
    t0 = time.perf_counter()
    ms = limit_moments(2, 100)
    elapsed = time.perf_counter() - t0
    assert ms[2] == Fraction(4, 3)
    assert ms[3] == Fraction(32, 15)
    assert ms[4] == Fraction(3328, 855)  # printed 3228/885 is a digit swap; see xfail below
    assert ms[5] == Fraction(262144, 33345)
    assert ms[6] == Fraction(40435712, 2345265)
    assert float(ms[23] / 4**23) == pytest.approx(0.0000902136, abs=1e-10)
    assert float(ms[63] / 4**63) == pytest.approx(1.1092, abs=1e-3)
    assert float(ms[100] / 4**100) == pytest.approx(1.95675e8, rel=1e-3)
    assert elapsed < 10.0
    print(f"[acceptance] criterion 6 PASS: m_2..m_6 exact, tail ratios k=23/63/100 ({elapsed:.2f}s)")


@pytest.mark.xfail(strict=True, reason=(
    "target 3228/885 for m_4 is a transposed-digit rendering of 3328/855: the "
    "recursion that produces the accepted m_5 = 262144/33345 and "
    "m_6 = 40435712/2345265 requires m_4 = 3328/855, as does normalization "
    "of the degree-4 moment polynomial"))
def test_criterion_06_m4_printed_target():
    print("[acceptance] criterion 6 m_4 printed form NOT MET: engine gives 3328/855")
    assert limit_moments(2, 4)[4] == Fraction(3228, 885)


def test_criterion_07_exhaustive_oracle_equivalence(nonsimple_census_by_depth, ternary9_census):
    for n, census in nonsimple_census_by_depth.items():
        lp = nonsimple_lis_counts(n)
        cp = nonsimple_cycle_counts(2, n)
        assert all(census.lis_counts.get(k, 0) == lp.mass(k) for k in lp.support)
        assert all(census.cycle_counts.get(k, 0) == cp.mass(k) for k in cp.support)
    from butterflylab.lis import lis as lis_len
    for n in (1, 2):
        lp = nonsimple_lis_counts(n, m=3)
        cp = nonsimple_cycle_counts(3, n)
        lis_census: dict[int, int] = {}
        cyc_census: dict[int, int] = {}
        if n == 2:
            lis_census = ternary9_census.lis_counts
            cyc_census = ternary9_census.cycle_counts
        else:
            for elem in enumerate_group(3, n, simple=False):
                p = materialize(elem)
                lis_census[lis_len(p)] = lis_census.get(lis_len(p), 0) + 1
                c = cycle_stats(p).total_cycles
                cyc_census[c] = cyc_census.get(c, 0) + 1
        assert all(lis_census.get(k, 0) == lp.mass(k) for k in lp.support)
        assert all(cyc_census.get(k, 0) == cp.mass(k) for k in cp.support)
    print("[acceptance] criterion 7 PASS: brute-force censuses equal recursions "
          "(binary n<=4, ternary n<=2)")


def test_criterion_08_gepp_distributional():
    t0 = time.perf_counter()
    # uniformity of the permutation factor over the enumerated groups at N = 8
    for shape, n_cells in (("simple", 8), ("nonsimple", 128)):
        index = {materialize(e): i
                 for i, e in enumerate(enumerate_group(2, 3, simple=shape == "simple"))}
        rng = substream(71, 0 if shape == "simple" else 1)
        counts = np.zeros(n_cells)
        batch = build_butterfly_batch("scalar", shape, 8, 10**5, rng)
        perms = gepp_perm_batch(batch)
        for row in perms:
            counts[index[Permutation(row)]] += 1
        res = chi_square(counts, [1.0 / n_cells] * n_cells)
        assert res.p_value > 0.01, (shape, res)
    # closed-form factorization against elimination
    rng = substream(71, 2)
    worst = 0.0
    for _ in range(10**3):
        n = int(rng.integers(1, 7))
        shape = "simple" if rng.random() < 0.25 else "nonsimple"
        spec = sample_spec("scalar", shape, 2**n, rng)
        pred = predicted_factorization(spec)
        full = gepp(build_butterfly(spec))
        assert pred.perm == full.perm
        worst = max(worst,
                    float(np.abs(pred.lower - full.lower).max()),
                    float(np.abs(pred.upper - full.upper).max()))
    assert worst < 1e-10
    elapsed = time.perf_counter() - t0
    print(f"[acceptance] criterion 8 PASS: chi-square uniformity at N=8 (1e5 draws each), "
          f"predicted == elimination on 1e3 specs to {worst:.1e} ({elapsed:.1f}s)")


def test_criterion_09_monte_carlo_w_moments():
    t0 = time.perf_counter()
    rng = substream(71, 3)
    moments, ses = monte_carlo_w(2, 15, 10**4, rng)
    ms = limit_moments(2, 6)
    for k in range(1, 7):
        assert abs(moments[k - 1] - float(ms[k])) < 5 * ses[k - 1], (k, moments[k - 1], float(ms[k]))
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    print(f"[acceptance] criterion 9 PASS: W moments k=1..6 within 5 SE at n=15, "
          f"1e4 trials ({elapsed:.2f}s)")


def test_criterion_10_fixed_points(nonsimple_census_by_depth, ternary9_census):
    assert x_star(3) == pytest.approx(0.366025, abs=1e-6)
    assert x_star(5) == pytest.approx(0.200257, abs=1e-6)
    assert x_star(7) == pytest.approx(0.142858, abs=1e-6)
    for n, census in nonsimple_census_by_depth.items():
        e2 = Fraction(sum(f * f * c for f, c in census.fixed_point_counts.items()), census.size)
        assert e2 == fixed_point_moments(2, n, 2) == n + 1
    e2 = Fraction(sum(f * f * c for f, c in ternary9_census.fixed_point_counts.items()), 81)
    assert e2 == fixed_point_moments(3, 2, 2) == 5
    fpf = nonsimple_census_by_depth[2].fixed_point_counts.get(0, 0)
    assert Fraction(fpf, 8) == no_fixed_point_prob(2, 2)
    print(f"[acceptance] criterion 10 PASS: x* roots, E T_n^2 censuses, "
          f"depth-2 fixed-point-free census = {fpf}/8 = iteration value")


@pytest.mark.xfail(strict=True, reason=(
    "the depth-2 binary group has 5 fixed-point-free elements out of 8, not 6: "
    "the census is forced by E T^2 = 3 (impossible with 6), and matches the "
    "iteration value h(h(0)) = 5/8"))
def test_criterion_10_b4_census_printed_target(nonsimple_census_by_depth):
    fpf = nonsimple_census_by_depth[2].fixed_point_counts.get(0, 0)
    print(f"[acceptance] criterion 10 census target NOT MET: {fpf}/8 fixed-point-free")
    assert fpf == 6


def test_criterion_11_simple_lis_law():
    from butterflylab.lis import lds, lis, simple_lis_pmf
    for n in range(1, 7):
        pmf = simple_lis_pmf(2, n)
        census: dict[int, int] = {}
        for elem in enumerate_group(2, n, simple=True):
            p = materialize(elem)
            l, d = lis(p), lds(p)
            assert l * d == 2**n
            census[l] = census.get(l, 0) + 1
        for k in range(n + 1):
            assert census.get(2**k, 0) == math.comb(n, k)
        assert all(census.get(v, 0) == pmf.mass(v) for v in pmf.support)
        assert pmf.moment(1) == Fraction(3, 2) ** n
    print("[acceptance] criterion 11 PASS: binomial log2-LIS census, L*D = 2^n, "
          "exact means, n <= 6")


def test_criterion_12_density_mass_and_stability():
    pmf20 = nonsimple_cycle_counts(2, 20, mode="float")
    mass = float(np.asarray(pmf20.masses).sum())
    assert abs(mass - 1.0) < 1e-9
    from butterflylab.cycles import density_grid
    ts = np.arange(0.1, 5.0, 0.05)
    g8 = dict(density_grid(3, 8, ts))
    g9 = dict(density_grid(3, 9, ts))
    worst = max(abs(g8[t] - g9[t]) for t in g8)
    assert worst < 0.05
    print(f"[acceptance] criterion 12 PASS (mass): level-20 float mass = 1 {mass - 1.0:+.1e}; "
          f"depth 8 vs 9 grid gap = {worst:.4f} (printed 0.001 target in xfail)")


@pytest.mark.xfail(strict=True, reason=(
    "plug-in density grids at depths 8 and 9 genuinely differ by ~0.04 near "
    "t = 0.1 (~0.003-0.013 under interpolated or cdf comparisons); the "
    "convergence rate (3/5)^n cannot give 0.001 agreement this early"))
def test_criterion_12_density_stability_printed_target():
    from butterflylab.cycles import density_grid
    ts = np.arange(0.1, 5.0, 0.05)
    g8 = dict(density_grid(3, 8, ts))
    g9 = dict(density_grid(3, 9, ts))
    worst = max(abs(g8[t] - g9[t]) for t in g8)
    print(f"[acceptance] criterion 12 stability target NOT MET: max gap {worst:.4f} >= 0.001")
    assert worst < 0.001


def test_gepp_cycle_linkage():
    # cycle counts of elimination permutations of 1e3 random nonsimple
    # butterflies at N = 16 follow the depth-4 butterfly Stirling law
    rng = substream(71, 4)
    batch = build_butterfly_batch("scalar", "nonsimple", 16, 10**3, rng)
    perms = gepp_perm_batch(batch)
    draws = np.array([cycle_stats(Permutation(r)).total_cycles for r in perms])
    pmf = nonsimple_cycle_counts(2, 4)
    probs = np.array([float(x) for x in pmf.probabilities()])
    counts = np.bincount(draws, minlength=17)[1:]
    mp, mc = merge_sparse_cells(list(pmf.support), probs, counts)
    res = chi_square(mc, mp)
    assert res.p_value > 0.01
    print(f"[acceptance] GEPP-to-cycle-law linkage PASS (chi-square p = {res.p_value:.3f})")
