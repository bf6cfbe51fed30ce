"""Cycle-count distributions for butterfly permutation groups.

Simple groups have closed two-point laws. Nonsimple prime-base groups obey
the branching recursion Y_{n+1} = Y_n + eta * (Y'_n,2 + ... + Y'_n,p) with
eta ~ Bern(1/p), which drives everything here: the butterfly Stirling
triangles s_B^(p)(n, k), the moment polynomials p_k^(p) with
E Y_n^k = p_k(lambda_p^n) for lambda_p = 2 - 1/p, the limiting moments
m_k^(p), density grids for the limit W^(p), and the Monte Carlo sampler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import fftconvolve

from .pmf import Pmf, int_convolve

__all__ = [
    "simple_cycle_dist",
    "simple_cd_dist",
    "nonsimple_cycle_counts",
    "MomentTable",
    "moment_polynomials",
    "limit_moments",
    "density_grid",
    "no_fixed_point_prob",
    "x_star",
    "fixed_point_moments",
    "sample_cycle_counts",
    "monte_carlo_w",
]

EXACT_SIZE_CAP = 4096
FLOAT_SIZE_CAP = 2**20

_SMALL_PRIMES = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31}


def _require_prime(p: int) -> None:
    if p in _SMALL_PRIMES:
        return
    if p < 2 or any(p % d == 0 for d in range(2, int(math.isqrt(p)) + 1)):
        raise ValueError(f"{p} is not prime")


def lambda_p(p: int) -> Fraction:
    """Per-level growth rate of the expected cycle count: 2 - 1/p."""
    return Fraction(2 * p - 1, p)


# ---------------------------------------------------------------------------
# Simple groups
# ---------------------------------------------------------------------------


def simple_cycle_dist(p: int, n: int) -> Pmf:
    """C(sigma) for the uniform simple p-nary group, p prime, N = p^n.

    Two-point law: N/p (the N-1 nonidentity elements, all products of
    p-cycles) versus N (the identity). Counts out of the group order N.
    """
    _require_prime(p)
    if n < 1:
        raise ValueError("n >= 1")
    N = p**n
    masses = [0] * (N - N // p + 1)
    masses[0] = N - 1
    masses[-1] = 1
    return Pmf(N // p, masses, "count", total=N).trimmed()


def _mobius(n: int) -> int:
    m = 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            m = -m
        d += 1
    if n > 1:
        m = -m
    return m


def simple_cd_dist(m: int, n: int, d: int) -> Pmf:
    """Count of length-d cycles for the uniform simple m-nary group.

    A digit tuple (j_1..j_n) yields a permutation whose cycles all share
    one length: the lcm of the factor orders. All factor orders divide d
    with probability (d/m)^n, so by Moebius inversion over the divisor
    lattice C_d(sigma) = (N/d) Bern(sum_{e | d} mu(d/e) (e/m)^n).
    Two-point Pmf on {0, N/d}; requires d | m with d < m.
    """
    if m < 2 or n < 1:
        raise ValueError("need m >= 2, n >= 1")
    if d <= 0 or m % d or d >= m:
        raise ValueError("d must be a proper divisor of m")
    hit = 0
    e = 1
    while e <= d:
        if d % e == 0:
            hit += _mobius(d // e) * e**n
        e += 1
    N = m**n
    masses = [0] * (N // d + 1)
    masses[0] = m**n - hit
    masses[-1] = hit
    return Pmf(0, masses, "count", total=m**n).trimmed()


# ---------------------------------------------------------------------------
# Nonsimple prime-base groups: butterfly Stirling numbers
# ---------------------------------------------------------------------------


def nonsimple_cycle_counts(p: int, n: int, mode: str = "exact",
                           size_cap: int | None = None) -> Pmf:
    """Law of C(sigma) for the uniform nonsimple p-nary group at depth n.

    Support lives on k = 1 mod (p-1); the recursion runs on the compressed
    index j = (k-1)/(p-1), where one level is

        s_{n+1} = (p-1) p^(p^n - 1) s_n  +  shift_1(s_n^(*p))

    (the p-fold self-convolution for the branching case). Exact mode keeps
    big-integer counts summing to the group order; float mode normalizes,
    with an FFT path and a 1e-9 mass-drift guard on large supports.
    """
    _require_prime(p)
    if n < 0:
        raise ValueError("n >= 0")
    cap = size_cap if size_cap is not None else (EXACT_SIZE_CAP if mode == "exact" else FLOAT_SIZE_CAP)
    if p**n > cap:
        raise ValueError(f"p^n = {p**n} exceeds the {mode} cap {cap}")
    if mode == "exact":
        comp, total = _stirling_exact(p, n)
        masses = [0] * (p**n)
        for j, c in enumerate(comp):
            masses[j * (p - 1)] = c
        return Pmf(1, masses, "count", total=total)
    if mode == "float":
        comp = _stirling_float(p, n)
        masses = np.zeros(p**n)
        masses[(np.arange(len(comp))) * (p - 1)] = comp
        return Pmf(1, masses / masses.sum(), "float")
    raise ValueError(f"unknown mode {mode!r}")


_EXACT_STIRLING: dict[int, list[list[int]]] = {}


def _stirling_exact(p: int, n: int):
    ladder = _EXACT_STIRLING.setdefault(p, [[1]])
    while len(ladder) <= n:
        lev = len(ladder) - 1
        comp = ladder[-1]
        conv = comp
        for _ in range(p - 1):
            conv = int_convolve(conv, comp)
        keep = (p - 1) * p ** (p**lev - 1)
        new = [0] * ((p ** (lev + 1) - 1) // (p - 1) + 1)
        for j, c in enumerate(comp):
            new[j] += keep * c
        for j, c in enumerate(conv):
            new[j + 1] += c
        ladder.append(new)
    total = p ** ((p**n - 1) // (p - 1)) if n > 0 else 1
    return list(ladder[n]), total


_FLOAT_STIRLING: dict[int, list[np.ndarray]] = {}


def _stirling_float(p: int, n: int) -> np.ndarray:
    ladder = _FLOAT_STIRLING.setdefault(p, [np.array([1.0])])
    while len(ladder) <= n:
        lev = len(ladder) - 1
        comp = ladder[-1]
        conv = comp
        for _ in range(p - 1):
            if max(len(conv), len(comp)) > 4096:
                conv = np.clip(fftconvolve(conv, comp), 0.0, None)
            else:
                conv = np.convolve(conv, comp)
        new = np.zeros((p ** (lev + 1) - 1) // (p - 1) + 1)
        new[: len(comp)] += (1 - 1 / p) * comp
        new[1 : 1 + len(conv)] += conv / p
        drift = abs(new.sum() - 1.0)
        if drift >= 1e-9:
            raise FloatingPointError(f"level mass drift {drift:.3e} exceeds 1e-9")
        ladder.append(new / new.sum())
    return ladder[n]


# ---------------------------------------------------------------------------
# Moment polynomials and limiting moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentTable:
    """Exact-rational moment polynomials p_k and their leading coefficients.

    E Y_n^k = p_k(lambda^n); polys[k][j] is the coefficient of x^j; the
    limit moments are m_k = polys[k][k], so E (Y_n lambda^-n)^k -> m_k.
    """

    p: int
    lam: Fraction
    polys: tuple[tuple[Fraction, ...], ...]

    @property
    def limits(self) -> tuple[Fraction, ...]:
        return tuple(poly[-1] for poly in self.polys)

    def moment(self, k: int, n: int) -> Fraction:
        """E Y_n^k, exactly."""
        x = self.lam**n
        return sum((c * x**j for j, c in enumerate(self.polys[k])), Fraction(0))


def _compositions(total: int, parts: int):
    """All tuples of `parts` nonnegative ints summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def moment_polynomials(p: int, k_max: int) -> MomentTable:
    """Moment polynomials of the cycle recursion, exact rationals.

    p_0 = 1, p_1(x) = x; for k >= 2 the source polynomial is
    sum over compositions (i_1..i_p) of k with all parts < k of
    multinomial(k; i) * prod p_{i_l}(x), and a_{kj} = r_{kj} / (p-1) *
    (lam - 1)/(lam^j - lam) for j >= 2 with a_{k1} closing p_k(1) = 1.
    """
    _require_prime(p)
    if k_max < 1:
        raise ValueError("k_max >= 1")
    lam = lambda_p(p)
    polys: list[list[Fraction]] = [[Fraction(1)], [Fraction(0), Fraction(1)]]
    fact = [math.factorial(i) for i in range(k_max + 1)]
    for k in range(2, k_max + 1):
        r = [Fraction(0)] * (k + 1)
        for comp in _compositions(k, p):
            if max(comp) >= k:
                continue
            coeff = fact[k]
            for c in comp:
                coeff //= fact[c]
            prod = [Fraction(1)]
            for c in comp:
                prod = _poly_mul(prod, polys[c])
            for j, v in enumerate(prod):
                if v:
                    r[j] += coeff * v
        coeffs = [Fraction(0)] * (k + 1)
        for j in range(2, k + 1):
            coeffs[j] = r[j] * Fraction(1, p - 1) * (lam - 1) / (lam**j - lam)
        coeffs[1] = 1 - sum(coeffs[2:], Fraction(0))
        polys.append(coeffs)
    return MomentTable(p=p, lam=lam, polys=tuple(tuple(c) for c in polys))


def _poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def limit_moments(p: int, k_max: int) -> list[Fraction]:
    """m_0..m_k_max of the limit W^(p), by the multinomial recursion.

    m_0 = m_1 = 1 and for k >= 2
    m_k = (lam-1) / ((p-1)(lam^k - lam)) * sum_{i_1+..+i_p = k, i_l < k}
          multinomial(k; i) prod m_{i_l}.
    For p = 2 this is the binomial sum over j = 1..k-1.
    """
    _require_prime(p)
    if k_max < 1:
        raise ValueError("k_max >= 1")
    lam = lambda_p(p)
    m = [Fraction(1), Fraction(1)]
    fact = [math.factorial(i) for i in range(k_max + 1)]
    for k in range(2, k_max + 1):
        if p == 2:
            acc = sum(
                (Fraction(math.comb(k, j)) * m[j] * m[k - j] for j in range(1, k)),
                Fraction(0),
            )
        else:
            acc = Fraction(0)
            for comp in _compositions(k, p):
                if max(comp) >= k:
                    continue
                coeff = fact[k]
                prod = Fraction(1)
                for c in comp:
                    coeff //= fact[c]
                    prod *= m[c]
                acc += coeff * prod
        m.append(acc * (lam - 1) / ((p - 1) * (lam**k - lam)))
    return m


# ---------------------------------------------------------------------------
# Limiting density and fixed points
# ---------------------------------------------------------------------------


def density_grid(p: int, n: int, t_values, counts: Pmf | None = None):
    """Plug-in estimates of the W^(p) density at finite depth n.

    f_hat(t) = P(Y_n = k(t)) * lam^n / (p-1) with
    k(t) = floor((t lam^n - 1)/(p-1)) (p-1) + 1, the support atom whose
    cell contains t lam^n.
    """
    if counts is None:
        counts = nonsimple_cycle_counts(p, n, mode="float")
    lam = float(lambda_p(p))
    scale = lam**n
    out = []
    for t in t_values:
        t = float(t)
        if t < 0:
            raise ValueError("t must be >= 0")
        k = math.floor((t * scale - 1) / (p - 1)) * (p - 1) + 1
        f = float(counts.p(k)) * scale / (p - 1) if 1 <= k <= p**n else 0.0
        out.append((t, f))
    return out


def no_fixed_point_prob(m: int, n: int) -> Fraction:
    """P(no fixed point) at depth n, exactly.

    The fixed-point count is a branching variable T_{n+1} = eta (T' + ... )
    with eta ~ Bern(1/m) and m summands, so extinction probabilities obey
    p_{n+1} = (1 - 1/m) + p_n^m / m from p_0 = 0. The process is critical
    (mean offspring 1), so p_n increases to 1 at the slow 1/n branching
    rate. Verified against exhaustive censuses at small depths. Exact
    iterates have degree m^n, so keep n modest.
    """
    if m < 2 or n < 0:
        raise ValueError("need m >= 2, n >= 0")
    x = Fraction(0)
    for _ in range(n):
        x = Fraction(m - 1, m) + x**m / m
    return x


def x_star(m: int, tol: float = 1e-14) -> float:
    """The unique root in (0, 1) of q_m(x) = -1 + (m-1)(x + ... + x^(m-1)).

    Equivalently the interior fixed point of x -> 1/m + (1 - 1/m) x^m for
    m >= 3; x*_m = 1/m + O(m^-m). By convention x*_2 = 1 (q_2(x) = x - 1).
    Note the no-fixed-point iterates of `no_fixed_point_prob` climb past
    this value toward 1; x* is the companion root, not their limit.
    """
    if m < 2:
        raise ValueError("m >= 2")
    if m == 2:
        return 1.0
    def q(x: float) -> float:
        return -1.0 + (m - 1) * sum(x**j for j in range(1, m))
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if q(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fixed_point_moments(m: int, n: int, k: int) -> Fraction:
    """E T_n^k for k in {1, 2}: E T_n = 1 and E T_n^2 = n(m-1) + 1."""
    if k == 1:
        return Fraction(1)
    if k == 2:
        return Fraction(n * (m - 1) + 1)
    raise ValueError("only k = 1, 2 have closed forms here")


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def sample_cycle_counts(p: int, n: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """iid draws of C(sigma_n) via the branching recursion, vectorized.

    Unrolling the recursion top-down, each of the k live level-l nodes
    independently branches into p nodes with probability 1/p, so
    k <- k + (p-1) Binomial(k, 1/p) per level; Y_n is the final leaf count.
    """
    _require_prime(p)
    counts = np.ones(trials, dtype=np.int64)
    for _ in range(n):
        counts = counts + (p - 1) * rng.binomial(counts, 1.0 / p)
    return counts


def monte_carlo_w(p: int, n: int, trials: int, rng: np.random.Generator,
                  k_max: int = 6):
    """Empirical moments of W_n = C(sigma_n) lambda_p^-n from `trials` draws.

    Returns (moments, standard_errors) as arrays indexed k-1 for k = 1..k_max.
    """
    if trials < 1:
        raise ValueError("trials >= 1")
    w = sample_cycle_counts(p, n, trials, rng) * float(lambda_p(p)) ** (-n)
    moments = np.empty(k_max)
    ses = np.empty(k_max)
    for k in range(1, k_max + 1):
        wk = w**k
        moments[k - 1] = wk.mean()
        ses[k - 1] = wk.std(ddof=1) / math.sqrt(trials) if trials > 1 else np.inf
    return moments, ses
