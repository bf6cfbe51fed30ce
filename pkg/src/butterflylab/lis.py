"""Longest increasing/decreasing subsequence statistics for butterfly groups.

Exact distributions come from the recursive block structure. For the simple
m-nary group the LIS is a product of iid factors max(X, m - X); for the
nonsimple group the per-level update is

    L -> max(sum of m - e child LIS values, sum of e child LIS values)

with e uniform on {0,...,m-1} (e = 0 recovers the full sum). The binary
count triangle b(n, k) = #{sigma : L(sigma) = k} follows the same recursion
with counts in place of probabilities.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .permutations import Permutation
from .pmf import Pmf, int_convolve

__all__ = [
    "lis",
    "lds",
    "lis_oracle",
    "simple_lis_pmf",
    "simple_lds_pmf",
    "BoundsTable",
    "bounds",
    "contraction_step",
    "nonsimple_lis_counts",
    "nonsimple_lis_moments",
    "nonsimple_lis_cdf",
    "FitResult",
    "fit_exponent",
]

EXACT_LEVEL_CAP = 12
FLOAT_LEVEL_CAP = 20
ORACLE_SIZE_CAP = 10**4


def lis(p: Permutation) -> int:
    """Length of the longest increasing subsequence (patience sorting)."""
    tails: list[int] = []
    for x in p.map:
        i = bisect.bisect_left(tails, x)
        if i == len(tails):
            tails.append(x)
        else:
            tails[i] = x
    return len(tails)


def lds(p: Permutation) -> int:
    """Longest decreasing subsequence: LIS of the reversed one-line array."""
    tails: list[int] = []
    for x in p.map[::-1]:
        i = bisect.bisect_left(tails, x)
        if i == len(tails):
            tails.append(x)
        else:
            tails[i] = x
    return len(tails)


def lis_oracle(p: Permutation) -> int:
    """Quadratic dynamic-programming LIS, independent of the patience path."""
    if p.size > ORACLE_SIZE_CAP:
        raise ValueError(f"oracle capped at size {ORACLE_SIZE_CAP}")
    a = p.map
    best = np.zeros(p.size, dtype=np.int64)
    for i in range(p.size):
        mask = a[:i] < a[i]
        best[i] = 1 + (best[:i][mask].max() if mask.any() else 0)
    return int(best.max())


# ---------------------------------------------------------------------------
# Simple-group laws
# ---------------------------------------------------------------------------


def simple_lis_pmf(m: int, n: int) -> Pmf:
    """Exact law of prod_{j=1}^n max(X_j, m - X_j), X_j uniform on [m].

    Counts out of m^n; support values are products of {ceil(m/2)..m-1, m}.
    """
    if m < 2 or n < 0:
        raise ValueError("need m >= 2, n >= 0")
    factors = [max(j, m - j) for j in range(1, m + 1)]
    counts: dict[int, int] = {1: 1}
    for _ in range(n):
        nxt: dict[int, int] = {}
        for v, c in counts.items():
            for f in factors:
                nxt[v * f] = nxt.get(v * f, 0) + c
        counts = nxt
    top = max(counts)
    masses = [counts.get(v, 0) for v in range(1, top + 1)]
    return Pmf(1, masses, "count", total=m**n)


def simple_lds_pmf(m: int, n: int) -> Pmf:
    """Exact law of the simple-group LDS: log2 D is Binom(n, 1 - 1/m).

    The LDS doubles at a level exactly when that level's factor is not the
    identity (probability 1 - 1/m; the circulant block pattern lets a
    decreasing path cross two blocks only). For m = 2 this is the pointwise
    mirror D = 2^n / L of `simple_lis_pmf`.
    """
    if m < 2 or n < 0:
        raise ValueError("need m >= 2, n >= 0")
    counts = {2**k: math.comb(n, k) * (m - 1) ** k for k in range(n + 1)}
    top = 2**n
    masses = [counts.get(v, 0) for v in range(1, top + 1)]
    return Pmf(1, masses, "count", total=m**n)


# ---------------------------------------------------------------------------
# Power-law bound constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundsTable:
    """Expected-LIS growth constants for base m."""

    m: int
    alpha: float
    beta: float
    mu: float
    nu: float
    n0: int
    beta_star: float | None = None
    c_star: float | None = None


def contraction_step(x: float) -> float:
    """One step of the m = 2 variance-ratio contraction c_{k+1} = h(c_k).

    h(x) = 1/9 + (107x - 6 sqrt(2x)) / (9 D)
               + 2 sqrt(2x) sqrt(4 / D^2 + 1 / (9 (3 + sqrt(2x))^2)),
    with D = 18 + 6 sqrt(2x) + x. Fixed point c* ~ 0.63092.
    """
    s = math.sqrt(2.0 * x)
    D = 18.0 + 6.0 * s + x
    term2 = (107.0 * x - 6.0 * s) / (9.0 * D)
    term3 = 2.0 * s * math.sqrt(4.0 / (D * D) + 1.0 / (9.0 * (3.0 + s) ** 2))
    return 1.0 / 9.0 + term2 + term3


def _contraction_fixed_point(tol: float = 1e-15, max_iter: int = 10**4):
    c = 1.0
    iterates = [c]
    for _ in range(max_iter):
        nxt = contraction_step(c)
        iterates.append(nxt)
        if abs(nxt - c) < tol:
            return nxt, iterates
        c = nxt
    raise RuntimeError("contraction iteration failed to converge")


def bounds(m: int) -> BoundsTable:
    """All growth constants for base m, to full double precision.

    alpha: m^alpha = (3 m^2 + r_m) / (4 m) with r_m = m mod 2 (exact
    first moment of the simple-group LIS, and the nonsimple lower bound).
    beta: m^beta = (m+1)/2 + (1/2m) sum_j sqrt(m + (m-2j)^2) (upper bound).
    beta_star (m = 2 only): log2(6 + sqrt(2 c*)) - 2 from the contraction.
    mu, nu: mean and variance of log_m max(X, m - X).
    n0: smallest N with N^alpha > 2 sqrt(N), i.e. ceil(2^(1/(alpha - 1/2))).
    """
    if m < 2:
        raise ValueError("m >= 2")
    r = m % 2
    logm = math.log(m)
    alpha = math.log((3.0 * m * m + r) / (4.0 * m)) / logm
    j = np.arange(1, m, dtype=np.float64)
    beta = math.log(0.5 * (m + 1) + float(np.sqrt(m + (m - 2 * j) ** 2).sum()) / (2.0 * m)) / logm
    logs = np.log(np.maximum(np.arange(1, m + 1), m - np.arange(1, m + 1))) / logm
    mu = float(logs.mean())
    nu = float(((logs - mu) ** 2).mean())
    n0 = math.ceil(2.0 ** (1.0 / (alpha - 0.5)))
    beta_star = c_star = None
    if m == 2:
        c_star, _ = _contraction_fixed_point()
        beta_star = math.log2(6.0 + math.sqrt(2.0 * c_star)) - 2.0
    return BoundsTable(m=m, alpha=alpha, beta=beta, mu=mu, nu=nu, n0=n0,
                       beta_star=beta_star, c_star=c_star)


# ---------------------------------------------------------------------------
# Nonsimple-group exact distribution
# ---------------------------------------------------------------------------


def _max_counts(ca: list[int], cb: list[int]) -> list[int]:
    """Counts of max(S_a, S_b) for independent S_a, S_b given by count arrays.

    Index i holds the count for value i; cb = [1] encodes the empty sum.
    """
    out = [0] * max(len(ca), len(cb))
    Fa = 0
    Fb = 0
    for k in range(len(out)):
        va = ca[k] if k < len(ca) else 0
        vb = cb[k] if k < len(cb) else 0
        Fb = Fb + vb
        out[k] = va * Fb + Fa * vb
        Fa += va
    return out


def nonsimple_lis_counts(n: int, mode: str = "exact", m: int = 2,
                         level_cap: int | None = None) -> Pmf:
    """Law of the nonsimple-group LIS at depth n, values 1..m^n.

    Exact mode returns big-integer counts summing to the group order; float
    mode runs the same recursion on normalized masses (direct convolution,
    switching to FFT with a mass-drift guard above 4096 support points).
    """
    if m < 2 or n < 0:
        raise ValueError("need m >= 2, n >= 0")
    cap = level_cap if level_cap is not None else (EXACT_LEVEL_CAP if mode == "exact" else FLOAT_LEVEL_CAP)
    if n > cap:
        raise ValueError(f"level {n} exceeds the {mode} cap {cap}")
    if mode == "exact":
        return _counts_exact(m, n)
    if mode == "float":
        return _counts_float(m, n)
    raise ValueError(f"unknown mode {mode!r}")


_EXACT_LEVELS: dict[int, list[list[int]]] = {}


def _counts_exact(m: int, n: int) -> Pmf:
    ladder = _EXACT_LEVELS.setdefault(m, [[0, 1]])  # index = value; depth 0: L = 1
    while len(ladder) <= n:
        counts = ladder[-1]
        convs: list[list[int]] = [[1]]
        for _j in range(m):
            convs.append(int_convolve(convs[-1], counts))
        new = [0] * (m * (len(counts) - 1) + 1)
        for e in range(m):
            part = _max_counts(convs[m - e], convs[e])
            for k, v in enumerate(part):
                if v:
                    new[k] += v
        ladder.append(new)
    order = m ** ((m**n - 1) // (m - 1)) if n > 0 else 1
    return Pmf(1, list(ladder[n][1:]), "count", total=order)


_FLOAT_LEVELS: dict[int, list[np.ndarray]] = {}


def _counts_float(m: int, n: int) -> Pmf:
    ladder = _FLOAT_LEVELS.setdefault(m, [np.array([0.0, 1.0])])
    while len(ladder) <= n:
        cur = ladder[-1]
        K = len(cur) - 1
        convs = [np.array([1.0])]
        for _j in range(m):
            prev = convs[-1]
            if max(len(prev), len(cur)) > 4096:
                c = np.clip(fftconvolve(prev, cur), 0.0, None)
            else:
                c = np.convolve(prev, cur)
            convs.append(c)
        new = np.zeros(m * K + 1)
        for e in range(m):
            ca, cb = convs[m - e], convs[e]
            L = max(len(ca), len(cb))
            ca = np.pad(ca, (0, L - len(ca)))
            cb = np.pad(cb, (0, L - len(cb)))
            Fa = np.cumsum(ca)
            Fb = np.cumsum(cb)
            part = ca * Fb + np.concatenate(([0.0], Fa[:-1])) * cb
            new[: len(part)] += part
        new /= float(m)
        drift = abs(new.sum() - 1.0)
        if drift >= 1e-9:
            raise FloatingPointError(f"level mass drift {drift:.3e} exceeds 1e-9")
        ladder.append(new / new.sum())
    return Pmf(1, ladder[n][1:], "float")


def nonsimple_lis_moments(n: int, mode: str = "exact", m: int = 2):
    """(mean, second moment) of the depth-n nonsimple LIS."""
    pmf = nonsimple_lis_counts(n, mode=mode, m=m)
    return pmf.moment(1), pmf.moment(2)


def nonsimple_lis_cdf(n: int, t: float, mode: str = "float", m: int = 2):
    """P(L <= t) at depth n, consistent with the cumulative count sums."""
    return nonsimple_lis_counts(n, mode=mode, m=m).cdf(t)


# ---------------------------------------------------------------------------
# Exponent regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    alpha_hat: float
    intercept: float
    r_squared: float


def fit_exponent(points) -> FitResult:
    """Unweighted OLS of log(mean) on log(N) over (N, mean) pairs."""
    pts = [(float(N), float(v)) for N, v in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if any(N <= 0 or v <= 0 for N, v in pts):
        raise ValueError("N and mean must be positive")
    x = np.log([N for N, _ in pts])
    y = np.log([v for _, v in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise ValueError("degenerate input: zero variance in log(mean)")
    return FitResult(alpha_hat=float(coef[0]), intercept=float(coef[1]),
                     r_squared=1.0 - ss_res / ss_tot)
