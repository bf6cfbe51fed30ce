"""Core permutation arithmetic.

A permutation sigma of [1..M] is stored 0-based as the array ``map`` with
``map[k] = sigma(k+1) - 1``; all user-facing notation (one-line arrays, cycle
output, text serialization) is 1-based. The permutation matrix convention is
the left-regular action, ``P_sigma e_k = e_{sigma(k)}``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Permutation",
    "CycleStats",
    "identity",
    "compose",
    "inverse",
    "kron",
    "dsum",
    "cycle_stats",
    "pivot_movements",
    "fisher_yates",
    "transposition_chain",
    "from_transposition_chain",
]


class Permutation:
    """Immutable permutation in one-line form (0-based internally)."""

    __slots__ = ("map", "_hash")

    def __init__(self, mapping) -> None:
        arr = np.asarray(mapping, dtype=np.int64).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("permutation must be a nonempty 1-d sequence")
        n = arr.size
        seen = np.zeros(n, dtype=bool)
        if arr.min() < 0 or arr.max() >= n:
            raise ValueError("entries must lie in [0, M)")
        seen[arr] = True
        if not seen.all():
            raise ValueError("not a bijection")
        arr.setflags(write=False)
        object.__setattr__(self, "map", arr)
        object.__setattr__(self, "_hash", hash(arr.tobytes()))

    def __setattr__(self, name, value):  # pragma: no cover
        raise AttributeError("Permutation is immutable")

    @property
    def size(self) -> int:
        return int(self.map.size)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self.map, other.map)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Permutation({self.one_line()})"

    def __call__(self, k: int) -> int:
        """Image of the 1-based index k."""
        if not 1 <= k <= self.size:
            raise IndexError(k)
        return int(self.map[k - 1]) + 1

    def one_line(self) -> tuple[int, ...]:
        """1-based one-line array (sigma(1), ..., sigma(M))."""
        return tuple(int(v) + 1 for v in self.map)

    def inverse(self) -> "Permutation":
        return inverse(self)

    def matrix(self) -> np.ndarray:
        """Permutation matrix P with P e_k = e_{sigma(k)}."""
        n = self.size
        P = np.zeros((n, n))
        P[self.map, np.arange(n)] = 1.0
        return P

    def to_text(self) -> str:
        """Comma-separated 1-based one-line form, e.g. "4,8,5,1,3,6,7,2"."""
        return ",".join(str(v + 1) for v in self.map)

    @staticmethod
    def from_text(text: str) -> "Permutation":
        vals = [int(tok) - 1 for tok in text.strip().split(",")]
        return Permutation(vals)

    @staticmethod
    def from_one_line(values) -> "Permutation":
        return Permutation([int(v) - 1 for v in values])

    @staticmethod
    def from_matrix(P: np.ndarray, tol: float = 0.0) -> "Permutation":
        P = np.asarray(P)
        n = P.shape[0]
        if P.shape != (n, n):
            raise ValueError("matrix must be square")
        mapping = np.full(n, -1, dtype=np.int64)
        for k in range(n):
            col = P[:, k]
            i = int(np.argmax(np.abs(col)))
            if abs(col[i] - 1.0) > tol or np.abs(col).sum() - abs(col[i]) > tol:
                raise ValueError("not a permutation matrix")
            mapping[k] = i
        return Permutation(mapping)

    def cycles(self) -> list[tuple[int, ...]]:
        """Disjoint cycles (1-based), each starting at its smallest element."""
        seen = np.zeros(self.size, dtype=bool)
        out = []
        for start in range(self.size):
            if seen[start]:
                continue
            cyc = []
            j = start
            while not seen[j]:
                seen[j] = True
                cyc.append(j + 1)
                j = int(self.map[j])
            out.append(tuple(cyc))
        return out


@dataclass(frozen=True)
class CycleStats:
    """Cycle decomposition summary: C(sigma) and per-length counts."""

    total_cycles: int
    by_length: dict[int, int] = field(compare=False)
    fixed_points: int = 0

    def __post_init__(self):
        assert self.total_cycles == sum(self.by_length.values())


def identity(n: int) -> Permutation:
    return Permutation(np.arange(n))


def compose(p: Permutation, q: Permutation) -> Permutation:
    """(p o q)(k) = p(q(k)); matrices satisfy P_{p o q} = P_p P_q."""
    if p.size != q.size:
        raise ValueError(f"length mismatch: {p.size} vs {q.size}")
    return Permutation(p.map[q.map])


def inverse(p: Permutation) -> Permutation:
    return Permutation(np.argsort(p.map, kind="stable"))


def kron(p: Permutation, q: Permutation) -> Permutation:
    """Kronecker product: P_{kron(p,q)} = P_p (x) P_q.

    On indices, result((i-1)b + r) = (p(i)-1)b + q(r) with b = len(q).
    """
    b = q.size
    return Permutation((p.map[:, None] * b + q.map[None, :]).ravel())


def dsum(p: Permutation, q: Permutation) -> Permutation:
    """Direct sum: block-diagonal permutation matrix P_p (+) P_q."""
    return Permutation(np.concatenate([p.map, q.map + p.size]))


def cycle_stats(p: Permutation) -> CycleStats:
    """Count the disjoint cycles of p by orbit traversal."""
    seen = np.zeros(p.size, dtype=bool)
    by_length: Counter[int] = Counter()
    m = p.map
    for start in range(p.size):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            length += 1
            j = int(m[j])
        by_length[length] += 1
    return CycleStats(
        total_cycles=sum(by_length.values()),
        by_length=dict(by_length),
        fixed_points=by_length.get(1, 0),
    )


def cycle_count(p: Permutation) -> int:
    """C(p) without building the length histogram (fast path)."""
    return _cycle_count_array(p.map)


def _cycle_count_array(m: np.ndarray) -> int:
    seen = np.zeros(m.size, dtype=bool)
    c = 0
    for start in range(m.size):
        if not seen[start]:
            c += 1
            j = start
            while not seen[j]:
                seen[j] = True
                j = int(m[j])
    return c


def pivot_movements(p: Permutation) -> int:
    """Number of GEPP pivot movements of the matrix with permutation factor p.

    Equals M - C(p): in the chain (M i_M)...(1 i_1), step k keeps its pivot
    exactly when k is the largest element of its cycle.
    """
    return p.size - cycle_count(p)


def fisher_yates(M: int, rng: np.random.Generator) -> Permutation:
    """Uniform element of S_M from a seeded stream.

    Realizes the swap chain (M i_M)...(1 i_1) with i_k uniform on {k..M}
    (the Fisher-Yates shuffle, as implemented by numpy's ``permutation``).
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    return Permutation(rng.permutation(M))


def transposition_chain(p: Permutation) -> list[int]:
    """The unique i_k >= k with p = (M i_M) o ... o (2 i_2) o (1 i_1), 1-based.

    Greedy peeling: i_k is the current preimage of k; composing with (k i_k)
    on the right fixes position k.
    """
    cur = list(p.map)
    n = len(cur)
    iks = []
    pos = {v: i for i, v in enumerate(cur)}
    for k in range(n):
        ik = pos[k]
        iks.append(ik + 1)
        vk = cur[k]
        cur[k], cur[ik] = cur[ik], cur[k]
        pos[vk] = ik
        pos[k] = k
    return iks


def from_transposition_chain(iks: list[int]) -> Permutation:
    """Inverse of `transposition_chain`; input is 1-based with iks[k-1] >= k."""
    n = len(iks)
    cur = list(range(n))
    for k in range(n - 1, -1, -1):
        ik = iks[k] - 1
        if ik < k:
            raise ValueError("chain must satisfy i_k >= k")
        cur[k], cur[ik] = cur[ik], cur[k]
    return Permutation(cur)
