"""Experiment command line: reproduces the tables and figure data as CSV/JSON.

Every run writes its outputs plus a deterministic ``manifest.json`` (seed,
parameters, versions) into --out. Identical seed and configuration give
byte-identical files; per-trial substreams are derived from (seed, trial),
so aggregation order never matters.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__, cycles, gepp, groups, lis, stats
from .permutations import Permutation, compose, cycle_stats, fisher_yates, kron
from .pmf import Pmf
from .rng import DEFAULT_SEED, substream

SEED_ENV = "BUTTERFLYLAB_SEED"

ENSEMBLES = ("bs-scalar", "ns-scalar", "bs-diag", "ns-diag", "uniform", "goe", "gue", "bernoulli")


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _parse_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",")]


def _parse_grid(text: str) -> np.ndarray:
    lo, hi, step = (float(tok) for tok in text.split(":"))
    return np.arange(lo, hi + step * 0.5, step)


def _resolve_seed(args) -> tuple[int, str]:
    if args.seed is not None:
        return int(args.seed), "flag"
    env = os.environ.get(SEED_ENV)
    if env is not None:
        return int(env), "env"
    return DEFAULT_SEED, "default"


def _write_rows(out: Path, name: str, header: list[str], rows, fmt: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out / f"{name}.json"
        payload = [dict(zip(header, [_fmt(v) for v in row])) for row in rows]
        path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    else:
        path = out / f"{name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    return path


def _write_manifest(out: Path, command: str, seed: int, seed_source: str, params: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "parameters": {k: v for k, v in sorted(params.items())},
        "seed": seed,
        "seed_source": seed_source,
        "versions": {
            "butterflylab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    seed, src = _resolve_seed(args)
    out = Path(args.out)
    lines = []
    for t in range(args.trials):
        rng = substream(seed, t)
        if args.kind == "uniform":
            perm = fisher_yates(args.m**args.n, rng)
        elif args.kind == "simple":
            perm = groups.materialize(groups.sample_simple(args.m, args.n, rng))
        else:
            perm = groups.materialize(groups.sample_nonsimple(args.m, args.n, rng))
        lines.append(perm.to_text())
    out.mkdir(parents=True, exist_ok=True)
    (out / "permutations.txt").write_text("\n".join(lines) + "\n")
    _write_manifest(out, "sample", seed, src,
                    {"kind": args.kind, "m": args.m, "n": args.n, "trials": args.trials})
    return 0


def cmd_lis_table(args) -> int:
    seed, src = _resolve_seed(args)
    out = Path(args.out)
    count_rows, moment_rows = [], []
    for n in _parse_range(args.n):
        pmf = lis.nonsimple_lis_counts(n, mode=args.mode, m=args.m)
        cum = 0.0
        for k, mass in zip(pmf.support, pmf.masses):
            cum += float(mass) / (pmf.total or 1) if pmf.mode == "count" else float(mass)
            count_rows.append((n, k, mass, cum))
        m1, m2 = pmf.moment(1), pmf.moment(2)
        moment_rows.append((n, float(m1), float(m2), args.mode))
    _write_rows(out, "lis_counts", ["n", "k", "mass", "cdf"], count_rows, args.format)
    _write_rows(out, "lis_moments", ["n", "mean", "second_moment", "mode"], moment_rows, args.format)
    _write_manifest(out, "lis-table", seed, src, {"n": args.n, "mode": args.mode, "m": args.m})
    return 0


def _sample_lis(ensemble: str, N: int, trials: int, seed: int) -> tuple[float, float]:
    vals = np.empty(trials)
    n = N.bit_length() - 1
    for t in range(trials):
        rng = substream(seed, ENSEMBLES.index(ensemble), N, t)
        if ensemble == "uniform":
            perm = fisher_yates(N, rng)
        elif ensemble == "bs-scalar":
            perm = groups.materialize(groups.sample_simple(2, n, rng))
        elif ensemble == "ns-scalar":
            perm = groups.materialize(groups.sample_nonsimple(2, n, rng))
        else:
            if ensemble == "bs-diag":
                A = gepp.build_butterfly(gepp.sample_spec("diagonal", "simple", N, rng))
            elif ensemble == "ns-diag":
                A = gepp.build_butterfly(gepp.sample_spec("diagonal", "nonsimple", N, rng))
            else:
                A = gepp.ensemble_sample({"goe": "goe", "gue": "gue", "bernoulli": "bernoulli"}[ensemble], N, rng)
            perm = Permutation(gepp.gepp_perm_batch(A[None])[0])
        vals[t] = lis.lis(perm)
    return float(vals.mean()), float(vals.std(ddof=1)) if trials > 1 else 0.0


def cmd_lis_mc(args) -> int:
    seed, src = _resolve_seed(args)
    out = Path(args.out)
    ensembles = args.ensembles.split(",") if args.ensembles else list(ENSEMBLES)
    for e in ensembles:
        if e not in ENSEMBLES:
            raise SystemExit(f"unknown ensemble {e!r}")
    rows = []
    for ens in ensembles:
        for n in _parse_range(args.n):
            N = 2**n
            if args.trials:
                trials = args.trials
            elif ens in ("uniform", "bs-scalar", "ns-scalar"):
                trials = 1000
            else:
                trials = 100 if n <= 12 else 10
            mean, std = _sample_lis(ens, N, trials, seed)
            rows.append((ens, N, mean, std, trials))
    _write_rows(out, "lis_mc", ["ensemble", "N", "sample_mean", "sample_std", "trials"], rows, args.format)
    _write_manifest(out, "lis-mc", seed, src,
                    {"ensembles": ",".join(ensembles), "n": args.n, "trials": args.trials})
    return 0


def cmd_fit(args) -> int:
    seed, src = _resolve_seed(args)
    out = Path(args.out)
    ns = _parse_range(args.n)
    if args.source:
        points = []
        with open(args.source, newline="") as fh:
            for row in csv.DictReader(fh):
                if int(row["n"]) in ns:
                    points.append((2.0 ** int(row["n"]), float(row["mean"])))
    else:
        points = [(2.0**n, float(lis.nonsimple_lis_counts(n, mode=args.mode).moment(1))) for n in ns]
    res = lis.fit_exponent(points)
    out.mkdir(parents=True, exist_ok=True)
    (out / "fit.json").write_text(json.dumps({
        "alpha_hat": res.alpha_hat,
        "intercept": res.intercept,
        "r_squared": res.r_squared,
        "n_values": ns,
    }, indent=1, sort_keys=True) + "\n")
    _write_manifest(out, "fit", seed, src, {"n": args.n, "mode": args.mode, "source": args.source or ""})
    return 0


def cmd_bounds(args) -> int:
    seed, src = _resolve_seed(args)
    out = Path(args.out)
    rows = []
    for m in _parse_range(args.m):
        b = lis.bounds(m)
        rows.append((m, b.alpha, b.beta,
                     b.beta_star if b.beta_star is not None else "",
                     b.c_star if b.c_star is not None else "",
                     b.mu, b.nu, b.n0))
    _write_rows(out, "bounds", ["m", "alpha", "beta", "beta_star", "c_star", "mu", "nu", "n0"],
                rows, args.format)
    _write_manifest(out, "bounds", seed, src, {"m": args.m})
    return 0


def cmd_cycles_table(args) -> int:
    seed, src = _resolve_seed(args)
    out = Path(args.out)
    rows = []
    for n in _parse_range(args.n):
        pmf = cycles.nonsimple_cycle_counts(args.p, n, mode=args.mode)
        for k, mass in zip(pmf.support, pmf.masses):
            if (k - 1) % (args.p - 1) == 0:
                rows.append((args.p, n, k, mass))
    _write_rows(out, "cycle_counts", ["p", "n", "k", "mass"], rows, args.format)
    _write_manifest(out, "cycles-table", seed, src, {"p": args.p, "n": args.n, "mode": args.mode})
    return 0


def cmd_moments(args) -> int:
    seed, src = _resolve_seed(args)
    out = Path(args.out)
    ms = cycles.limit_moments(args.p, args.k_max)
    payload = [{"p": args.p, "k": k, "numerator": str(m.numerator),
                "denominator": str(m.denominator), "float": float(m)}
               for k, m in enumerate(ms)]
    out.mkdir(parents=True, exist_ok=True)
    (out / "moments.json").write_text(json.dumps(payload, indent=1) + "\n")
    _write_manifest(out, "moments", seed, src, {"p": args.p, "k_max": args.k_max})
    return 0


def cmd_density(args) -> int:
    seed, src = _resolve_seed(args)
    out = Path(args.out)
    grid = cycles.density_grid(args.p, args.n, _parse_grid(args.t))
    _write_rows(out, "density", ["t", "f"], grid, args.format)
    _write_manifest(out, "density", seed, src, {"p": args.p, "n": args.n, "t": args.t})
    return 0


def cmd_fixed_points(args) -> int:
    seed, src = _resolve_seed(args)
    out = Path(args.out)
    rows = []
    for m in _parse_range(args.m):
        p = cycles.no_fixed_point_prob(m, args.n)
        rows.append((m, args.n, p, float(p), cycles.x_star(m)))
    _write_rows(out, "fixed_points",
                ["m", "n", "p_no_fixed_point", "p_no_fixed_point_float", "x_star"],
                rows, args.format)
    _write_manifest(out, "fixed-points", seed, src, {"m": args.m, "n": args.n})
    return 0


# ---------------------------------------------------------------------------
# verify: fast cross-module oracle suite
# ---------------------------------------------------------------------------


def _verify_checks(seed: int):
    rng = substream(seed, 0)

    def random_perm(M):
        return fisher_yates(M, rng)

    def chk_kron_mixed_product():
        for _ in range(25):
            p1, p2 = random_perm(4), random_perm(4)
            q1, q2 = random_perm(3), random_perm(3)
            lhs = compose(kron(p1, q1), kron(p2, q2))
            rhs = kron(compose(p1, p2), compose(q1, q2))
            if lhs != rhs:
                return False
        return True

    def chk_matrix_roundtrip():
        for M in (1, 2, 5, 16, 64):
            p = random_perm(M)
            if Permutation.from_matrix(p.matrix()) != p:
                return False
        return True

    def chk_gepp_recovers_perm():
        for M in (3, 8, 33):
            p = random_perm(M)
            if gepp.gepp(p.matrix().T).perm != p:
                return False
        return True

    def chk_predicted_matches_gepp():
        for _ in range(25):
            spec = gepp.sample_spec("scalar", "nonsimple", 16, rng)
            pred = gepp.predicted_factorization(spec)
            full = gepp.gepp(gepp.build_butterfly(spec))
            if pred.perm != full.perm:
                return False
            if np.abs(pred.lower - full.lower).max() > 1e-10:
                return False
            if np.abs(pred.upper - full.upper).max() > 1e-10:
                return False
        return True

    def chk_batch_gepp_agrees():
        mats = rng.normal(size=(20, 6, 6))
        batch = gepp.gepp_perm_batch(mats)
        return all(gepp.gepp(mats[i]).perm == Permutation(batch[i]) for i in range(20))

    def chk_lis_census():
        pmf = lis.nonsimple_lis_counts(3, mode="exact")
        census = {}
        for elem in groups.enumerate_group(2, 3, simple=False):
            k = lis.lis(groups.materialize(elem))
            census[k] = census.get(k, 0) + 1
        return all(census.get(k, 0) == pmf.mass(k) for k in pmf.support)

    def chk_cycle_census():
        pmf = cycles.nonsimple_cycle_counts(2, 3, mode="exact")
        census = {}
        for elem in groups.enumerate_group(2, 3, simple=False):
            c = cycle_stats(groups.materialize(elem)).total_cycles
            census[c] = census.get(c, 0) + 1
        ok2 = all(census.get(k, 0) == pmf.mass(k) for k in pmf.support)
        pmf3 = cycles.nonsimple_cycle_counts(3, 2, mode="exact")
        census3 = {}
        for elem in groups.enumerate_group(3, 2, simple=False):
            c = cycle_stats(groups.materialize(elem)).total_cycles
            census3[c] = census3.get(c, 0) + 1
        return ok2 and all(census3.get(k, 0) == pmf3.mass(k) for k in pmf3.support)

    def chk_simple_lis_law():
        pmf = lis.simple_lis_pmf(2, 4)
        census = {}
        for elem in groups.enumerate_group(2, 4, simple=True):
            p = groups.materialize(elem)
            if lis.lis(p) * lis.lds(p) != 16:
                return False
            census[lis.lis(p)] = census.get(lis.lis(p), 0) + 1
        return all(census.get(k, 0) == pmf.mass(k) for k in pmf.support)

    def chk_membership_roundtrip():
        for _ in range(50):
            elem = groups.sample_nonsimple(3, 3, rng)
            rec = groups.check_membership(groups.materialize(elem), 3)
            if rec is None:
                return False
            back = rec if isinstance(rec, groups.NonsimpleButterfly) else groups.to_nonsimple(rec)
            if groups.materialize(back) != groups.materialize(elem):
                return False
        return True

    def chk_moment_engine():
        ms = cycles.limit_moments(2, 6)
        return ms[6] == Fraction(40435712, 2345265) and ms[2] == Fraction(4, 3)

    def chk_fixed_points():
        fpf = sum(
            1
            for elem in groups.enumerate_group(2, 2, simple=False)
            if cycle_stats(groups.materialize(elem)).fixed_points == 0
        )
        exact = cycles.no_fixed_point_prob(2, 2)
        closed = abs(cycles.x_star(3) - (math.sqrt(3.0) - 1.0) / 2.0) < 1e-12
        return Fraction(fpf, 8) == exact and closed

    def chk_chi_square_calibration():
        pmf = Pmf(0, [0.25, 0.25, 0.25, 0.25], "float")
        res = stats.chi_square({0: 250, 1: 250, 2: 250, 3: 250}, pmf)
        return res.statistic == 0.0 and abs(res.p_value - 1.0) < 1e-12

    checks = [
        ("kron-mixed-product", chk_kron_mixed_product),
        ("perm-matrix-roundtrip", chk_matrix_roundtrip),
        ("gepp-recovers-permutation", chk_gepp_recovers_perm),
        ("predicted-factorization-vs-gepp", chk_predicted_matches_gepp),
        ("batched-gepp-agrees", chk_batch_gepp_agrees),
        ("nonsimple-lis-census", chk_lis_census),
        ("nonsimple-cycle-census", chk_cycle_census),
        ("simple-lis-law", chk_simple_lis_law),
        ("membership-roundtrip", chk_membership_roundtrip),
        ("moment-engine", chk_moment_engine),
        ("fixed-points", chk_fixed_points),
        ("chi-square-calibration", chk_chi_square_calibration),
    ]
    return checks


def cmd_verify(args) -> int:
    seed, _src = _resolve_seed(args)
    failures = 0
    for name, fn in _verify_checks(seed):
        try:
            ok = fn()
        except Exception as exc:  # noqa: BLE001
            ok = False
            print(f"FAIL {name}: {exc}")
            failures += 1
            continue
        print(("ok   " if ok else "FAIL ") + name)
        failures += 0 if ok else 1
    return 1 if failures else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="butterflylab",
                                 description="butterfly permutation experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help=f"RNG seed (default {DEFAULT_SEED}; env {SEED_ENV} overrides)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("sample", help="emit sampled permutations, one per line")
    common(p)
    p.add_argument("--kind", choices=("uniform", "simple", "nonsimple"), default="nonsimple")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--trials", type=int, default=10)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("lis-table", help="exact/float LIS count triangle, moments, cdf")
    common(p)
    p.add_argument("--n", default="1..4", help="depth or range, e.g. 1..4")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--mode", choices=("exact", "float"), default="exact")
    p.set_defaults(fn=cmd_lis_table)

    p = sub.add_parser("lis-mc", help="sample-mean LIS curves over the comparison ensembles")
    common(p)
    p.add_argument("--ensembles", default="", help=f"comma list from {','.join(ENSEMBLES)}")
    p.add_argument("--n", default="2..8")
    p.add_argument("--trials", type=int, default=0, help="override per-ensemble defaults")
    p.set_defaults(fn=cmd_lis_mc)

    p = sub.add_parser("fit", help="power-law exponent regression on LIS means")
    common(p)
    p.add_argument("--n", default="3..15")
    p.add_argument("--mode", choices=("exact", "float"), default="float")
    p.add_argument("--from", dest="source", default="", help="lis_moments.csv to reuse")
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("bounds", help="alpha/beta/beta*/mu/nu/N0 table")
    common(p)
    p.add_argument("--m", default="2..11", help="bases, range or comma list")
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("cycles-table", help="butterfly Stirling count triangle")
    common(p)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--n", default="1..4")
    p.add_argument("--mode", choices=("exact", "float"), default="exact")
    p.set_defaults(fn=cmd_cycles_table)

    p = sub.add_parser("moments", help="exact limiting moments of the cycle law")
    common(p)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--k-max", type=int, default=10)
    p.set_defaults(fn=cmd_moments)

    p = sub.add_parser("density", help="plug-in density grid for the cycle limit")
    common(p)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--t", default="0.0:4.0:0.05", help="grid lo:hi:step")
    p.set_defaults(fn=cmd_density)

    p = sub.add_parser("fixed-points", help="no-fixed-point probabilities and q_m roots")
    common(p)
    p.add_argument("--m", default="2..7")
    p.add_argument("--n", type=int, default=4,
                   help="depth (exact iterates have degree m^n; keep small)")
    p.set_defaults(fn=cmd_fixed_points)

    p = sub.add_parser("verify", help="run the cross-module oracle suite")
    common(p)
    p.set_defaults(fn=cmd_verify)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
