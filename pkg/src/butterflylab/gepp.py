"""Dense Gaussian elimination with partial pivoting and butterfly matrices.

Matrices are plain row-major numpy arrays (float64, or complex128 for the
complex-modulus pivoting used by the GUE experiment). The pivot rule is
``i_k = min(argmax_{j>=k} |A^(k)_{jk}|)``; the returned permutation sigma
satisfies ``P_sigma A = L U`` with ``P_sigma e_k = e_{sigma(k)}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .permutations import Permutation, compose, cycle_count, dsum, identity, kron

__all__ = [
    "GeppResult",
    "ButterflySpec",
    "SingularMatrixError",
    "TieAngleError",
    "gepp",
    "gepp_perm_batch",
    "rotation",
    "perfect_shuffle",
    "angle_count",
    "sample_spec",
    "build_butterfly",
    "build_butterfly_batch",
    "predicted_factorization",
    "ensemble_sample",
    "save_matrix_csv",
    "load_matrix_csv",
]

TIE_RTOL = 2.0**-40
SINGULAR_FLOOR = 1e-300


class SingularMatrixError(ValueError):
    """Every pivot candidate in some column is numerically zero."""


class TieAngleError(ValueError):
    """|tan theta| = 1 within tolerance; the closed-form factorization is undefined."""


@dataclass(frozen=True)
class GeppResult:
    """Factorization P_sigma A = L U plus the pivot-movement count."""

    perm: Permutation
    lower: np.ndarray
    upper: np.ndarray
    pivot_count: int
    tie_encountered: bool


def gepp(A: np.ndarray, tie_rtol: float = TIE_RTOL, step_callback=None) -> GeppResult:
    """Partial-pivoting factorization of a square matrix.

    `step_callback(k, intermediate)` is invoked after elimination step k
    (1-based) with the intermediate form A^(k+1): the working matrix with
    the already-used multipliers zeroed out. Off by default; it copies the
    matrix each step.
    """
    A = np.array(A, dtype=complex) if np.iscomplexobj(A) else np.array(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.isfinite(A).all():
        raise ValueError("matrix has NaN or Inf entries")
    N = A.shape[0]
    rows = np.arange(N)
    tie = False
    for k in range(N):
        col = np.abs(A[k:, k])
        j = int(np.argmax(col))
        mx = col[j]
        if mx < SINGULAR_FLOOR:
            raise SingularMatrixError(f"no usable pivot in column {k + 1}")
        if k < N - 1 and int((col >= mx * (1.0 - tie_rtol)).sum()) > 1:
            tie = True
        ik = k + j
        if ik != k:
            A[[k, ik]] = A[[ik, k]]
            rows[[k, ik]] = rows[[ik, k]]
        if k < N - 1:
            A[k + 1 :, k] /= A[k, k]
            A[k + 1 :, k + 1 :] -= np.outer(A[k + 1 :, k], A[k, k + 1 :])
        if step_callback is not None:
            inter = np.triu(A)
            inter[k + 1 :, k + 1 :] = A[k + 1 :, k + 1 :]
            step_callback(k + 1, inter)
    L = np.tril(A, -1) + np.eye(N)
    U = np.triu(A)
    perm = Permutation(np.argsort(rows, kind="stable"))
    return GeppResult(
        perm=perm,
        lower=L,
        upper=U,
        pivot_count=N - cycle_count(perm),
        tie_encountered=tie,
    )


def gepp_perm_batch(mats: np.ndarray) -> np.ndarray:
    """Permutation factors (0-based one-line arrays) for a stack of matrices.

    Vectorized over the leading axis; returns shape (T, N). A zero pivot
    column contributes no swap and no elimination (min-index convention),
    so singular draws pass through instead of poisoning the batch. Used by
    the Monte Carlo drivers and cross-checked against `gepp` in the tests.
    """
    W = np.array(mats, dtype=complex) if np.iscomplexobj(mats) else np.array(mats, dtype=np.float64)
    T, N, _ = W.shape
    rows = np.tile(np.arange(N), (T, 1))
    tix = np.arange(T)
    for k in range(N - 1):
        j = np.argmax(np.abs(W[:, k:, k]), axis=1) + k
        rk, rj = W[tix, k].copy(), W[tix, j].copy()
        W[tix, k], W[tix, j] = rj, rk
        ok, oj = rows[tix, k].copy(), rows[tix, j].copy()
        rows[tix, k], rows[tix, j] = oj, ok
        piv = W[:, k, k]
        safe = np.where(piv == 0, 1.0, piv)
        mult = W[:, k + 1 :, k] / safe[:, None]
        mult[piv == 0] = 0.0
        W[:, k + 1 :, k + 1 :] -= mult[:, :, None] * W[:, None, k, k + 1 :]
        W[:, k + 1 :, k] = mult
    return np.argsort(rows, axis=1, kind="stable")


def rotation(theta: float) -> np.ndarray:
    """Clockwise rotation [[cos, sin], [-sin, cos]]."""
    if not math.isfinite(theta):
        raise ValueError("angle must be finite")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def perfect_shuffle(N: int) -> Permutation:
    """The shuffle q with q(2j-1) = j and q(2j) = N/2 + j (1-based).

    Its matrix Q satisfies Q (X (x) Y) Q^T = Y (x) X for X of order N/2 and
    Y of order 2; conjugating the direct sum of N/2 rotations by Q produces
    the striped [[C, S], [-S, C]] block with diagonal C, S.
    """
    if N < 2 or N % 2:
        raise ValueError("N must be even")
    h = N // 2
    q = np.empty(N, dtype=np.int64)
    q[0::2] = np.arange(h)
    q[1::2] = h + np.arange(h)
    return Permutation(q)


# ---------------------------------------------------------------------------
# Butterfly matrix specs and constructors
# ---------------------------------------------------------------------------

_FLAVORS = ("scalar", "diagonal")
_SHAPES = ("simple", "nonsimple")


def angle_count(flavor: str, shape: str, N: int) -> int:
    """Number of free angles: scalar n / N-1, diagonal N-1 / n*N/2."""
    n = _log2_exact(N)
    if flavor == "scalar":
        return n if shape == "simple" else N - 1
    if flavor == "diagonal":
        return N - 1 if shape == "simple" else n * N // 2
    raise ValueError(f"unknown flavor {flavor!r}")


def _log2_exact(N: int) -> int:
    n = int(N).bit_length() - 1
    if N < 1 or (1 << n) != N:
        raise ValueError(f"N = {N} is not a power of 2")
    return n


@dataclass(frozen=True)
class ButterflySpec:
    """Angle data for one random butterfly matrix of order N = 2^n.

    ``angles`` is flat, ordered level by level from the top: the simple
    shapes store one level block per level (shared across that level's
    nodes), the nonsimple shapes store one block per node in breadth-first
    order. A block is a single angle for the scalar flavor and size/2
    angles for the diagonal flavor.
    """

    N: int
    flavor: str
    shape: str
    angles: tuple[float, ...]

    def __post_init__(self):
        if self.flavor not in _FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.shape not in _SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        expect = angle_count(self.flavor, self.shape, self.N)
        if len(self.angles) != expect:
            raise ValueError(f"expected {expect} angles, got {len(self.angles)}")
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))

    @property
    def n(self) -> int:
        return _log2_exact(self.N)


def sample_spec(flavor: str, shape: str, N: int, rng: np.random.Generator) -> ButterflySpec:
    """Spec with all angles iid uniform on [0, 2*pi)."""
    count = angle_count(flavor, shape, N)
    return ButterflySpec(N, flavor, shape, tuple(rng.uniform(0.0, 2.0 * math.pi, size=count)))


def _angle_blocks(spec: ButterflySpec) -> list[list[np.ndarray]]:
    """Per-level list of per-node angle blocks (simple levels hold one block)."""
    n = spec.n
    out: list[list[np.ndarray]] = []
    pos = 0
    for d in range(n):
        size = spec.N >> d
        block = 1 if spec.flavor == "scalar" else size // 2
        nodes = 1 if spec.shape == "simple" else 1 << d
        level = []
        for _ in range(nodes):
            level.append(np.asarray(spec.angles[pos : pos + block]))
            pos += block
        out.append(level)
    assert pos == len(spec.angles)
    return out


def build_butterfly(spec: ButterflySpec) -> np.ndarray:
    """Materialize B recursively: B = [[C A1, S A2], [-S A1, C A2]].

    Scalar flavor uses (C, S) = (cos t, sin t) I; diagonal flavor uses
    diagonal (C, S) built from size/2 angles. Simple shapes reuse one
    subblock per level (A1 = A2).
    """
    levels = _angle_blocks(spec)

    def rec(d: int, node: int) -> np.ndarray:
        if d == spec.n:
            return np.ones((1, 1))
        block = levels[d][0 if spec.shape == "simple" else node]
        if spec.shape == "simple":
            A1 = rec(d + 1, 0)
            A2 = A1
        else:
            A1 = rec(d + 1, 2 * node)
            A2 = rec(d + 1, 2 * node + 1)
        c, s = np.cos(block), np.sin(block)
        if spec.flavor == "scalar":
            top = np.hstack([c[0] * A1, s[0] * A2])
            bot = np.hstack([-s[0] * A1, c[0] * A2])
        else:
            top = np.hstack([c[:, None] * A1, s[:, None] * A2])
            bot = np.hstack([-s[:, None] * A1, c[:, None] * A2])
        return np.vstack([top, bot])

    return rec(0, 0)


def build_butterfly_batch(flavor: str, shape: str, N: int, T: int,
                          rng: np.random.Generator) -> np.ndarray:
    """T iid random butterfly matrices, stacked (T, N, N), all angles uniform."""
    def rec(size: int, count_nodes: int) -> np.ndarray:
        if size == 1:
            return np.ones((T, 1, 1))
        if shape == "simple":
            A1 = rec(size // 2, 1)
            A2 = A1
        else:
            A1 = rec(size // 2, 1)
            A2 = rec(size // 2, 1)
        h = size // 2
        if flavor == "scalar":
            th = rng.uniform(0, 2 * math.pi, size=T)
            c = np.cos(th)[:, None, None]
            s = np.sin(th)[:, None, None]
            top = np.concatenate([c * A1, s * A2], axis=2)
            bot = np.concatenate([-s * A1, c * A2], axis=2)
        else:
            th = rng.uniform(0, 2 * math.pi, size=(T, h))
            c = np.cos(th)[:, :, None]
            s = np.sin(th)[:, :, None]
            top = np.concatenate([c * A1, s * A2], axis=2)
            bot = np.concatenate([-s * A1, c * A2], axis=2)
        return np.concatenate([top, bot], axis=1)

    return rec(N, 1)


# ---------------------------------------------------------------------------
# Closed-form factorization of scalar butterfly matrices
# ---------------------------------------------------------------------------


def _pivot_data(theta: float, tie_rtol: float):
    """(e, theta_hat) for the 2x2 rotation; rejects |tan theta| ~ 1."""
    t = math.tan(theta)
    if abs(abs(t) - 1.0) <= tie_rtol * max(1.0, abs(t)):
        raise TieAngleError(f"|tan({theta})| = 1 within tolerance")
    e = 1 if abs(t) > 1.0 else 0
    return e, (math.pi / 2 - theta if e else theta)


def predicted_factorization(spec: ButterflySpec, tie_rtol: float = TIE_RTOL) -> GeppResult:
    """Closed-form GEPP factors of a scalar butterfly matrix, no elimination.

    For B = (R_theta (x) I)(A1 (+) A2) with child factorizations
    P_k A_k = L_k U_k and theta_hat the pivot-adjusted angle:

        P = (P1 (+) P2)(P_theta (x) I)
        L = [[L1, 0], [-tan(theta_hat) P2 P1^T L1, L2]]
        U = [[(-1)^e cos(theta_hat) U1,  sin(theta_hat) U1 A1^T A2],
             [0,                         sec(theta_hat) U2]]

    Simple specs reduce to Kronecker products of the 2x2 factors.
    """
    if spec.flavor != "scalar":
        raise ValueError("closed-form factorization covers the scalar flavor only")
    levels = _angle_blocks(spec)

    def rec(d: int, node: int):
        if d == spec.n:
            one = np.ones((1, 1))
            return identity(1), one, one, one
        theta = float(levels[d][0 if spec.shape == "simple" else node][0])
        if spec.shape == "simple":
            p1, L1, U1, A1 = rec(d + 1, 0)
            p2, L2, U2, A2 = p1, L1, U1, A1
        else:
            p1, L1, U1, A1 = rec(d + 1, 2 * node)
            p2, L2, U2, A2 = rec(d + 1, 2 * node + 1)
        e, that = _pivot_data(theta, tie_rtol)
        m = A1.shape[0]
        c, s = math.cos(that), math.sin(that)
        tn = math.tan(that)
        swap = Permutation([1, 0]) if e else identity(2)
        perm = compose(dsum(p1, p2), kron(swap, identity(m)))
        P1m, P2m = p1.matrix(), p2.matrix()
        Z = np.zeros((m, m))
        L = np.block([[L1, Z], [-tn * (P2m @ P1m.T @ L1), L2]])
        U = np.block([[((-1.0) ** e) * c * U1, s * (U1 @ A1.T @ A2)], [Z, (1.0 / c) * U2]])
        c0, s0 = math.cos(theta), math.sin(theta)
        B = np.block([[c0 * A1, s0 * A2], [-s0 * A1, c0 * A2]])
        return perm, L, U, B

    perm, L, U, _ = rec(0, 0)
    return GeppResult(perm=perm, lower=L, upper=U,
                      pivot_count=spec.N - cycle_count(perm), tie_encountered=False)


# ---------------------------------------------------------------------------
# Comparison ensembles
# ---------------------------------------------------------------------------


def ensemble_sample(kind: str, N: int, rng: np.random.Generator, q: float = 0.5) -> np.ndarray:
    """Standard random-matrix ensembles for the pivot experiments.

    goe: symmetric, N(0, 1 + delta_ij) entries. gue: Hermitian, N(0,1)
    diagonal and complex N(0, 1/2) + i N(0, 1/2) off-diagonal (pivoting uses
    the complex modulus). bernoulli: iid {0,1} with P(1) = q. haar_so2:
    direct sum of N/2 independent uniform rotations (Haar on SO(2) at N=2).
    """
    if kind == "goe":
        G = rng.normal(size=(N, N))
        return (G + G.T) / math.sqrt(2.0)
    if kind == "gue":
        X = rng.normal(size=(N, N), scale=math.sqrt(0.5))
        Y = rng.normal(size=(N, N), scale=math.sqrt(0.5))
        G = X + 1j * Y
        return (G + G.conj().T) / math.sqrt(2.0)
    if kind == "bernoulli":
        return (rng.random((N, N)) < q).astype(np.float64)
    if kind == "haar_so2":
        if N % 2:
            raise ValueError("haar_so2 needs even N")
        out = np.zeros((N, N))
        for j in range(N // 2):
            out[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = rotation(rng.uniform(0, 2 * math.pi))
        return out
    raise ValueError(f"unknown ensemble {kind!r}")


def save_matrix_csv(path, A: np.ndarray) -> None:
    np.savetxt(path, np.asarray(A), delimiter=",", fmt="%.17g")


def load_matrix_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=","))
