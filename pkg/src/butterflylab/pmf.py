"""Integer-supported probability mass functions in three precision modes.

A `Pmf` holds masses for the contiguous value range [offset, offset+len).
Modes:

* ``count``    exact nonnegative big-integer counts plus their total;
* ``rational`` exact `Fraction` probabilities summing to 1;
* ``float``    float64 probabilities (normalized to ~1e-9).

Exact convolutions use Kronecker substitution (pack the coefficient list
into one big integer, multiply once, unpack), which is far faster than
schoolbook convolution once the counts run to thousands of bits.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.signal import fftconvolve

__all__ = ["Pmf", "int_convolve"]

_FFT_THRESHOLD = 4096
_FLOAT_MASS_TOL = 1e-9


def int_convolve(a: list[int], b: list[int]) -> list[int]:
    """Exact convolution of nonnegative integer sequences.

    Packs each sequence into a single integer in base 2**bits with
    bits > log2(len * max_a * max_b) so digit groups of the product cannot
    carry, then reads the product back out digit group by digit group.
    """
    if not a or not b:
        return []
    ma, mb = max(a), max(b)
    if ma == 0 or mb == 0:
        return [0] * (len(a) + len(b) - 1)
    bits = (ma * mb * min(len(a), len(b))).bit_length() + 1
    pa = sum(v << (i * bits) for i, v in enumerate(a))
    pb = sum(v << (i * bits) for i, v in enumerate(b))
    prod = pa * pb
    mask = (1 << bits) - 1
    out = []
    for _ in range(len(a) + len(b) - 1):
        out.append(prod & mask)
        prod >>= bits
    return out


class Pmf:
    """Distribution on integers with contiguous support storage."""

    __slots__ = ("offset", "masses", "mode", "total")

    def __init__(self, offset: int, masses, mode: str, total: int | None = None):
        if mode not in ("count", "rational", "float"):
            raise ValueError(f"unknown mode {mode!r}")
        self.offset = int(offset)
        self.mode = mode
        if mode == "count":
            self.masses = [int(v) for v in masses]
            if any(v < 0 for v in self.masses):
                raise ValueError("negative count")
            s = sum(self.masses)
            self.total = s if total is None else int(total)
            if s != self.total:
                raise ValueError("counts do not sum to the stated total")
        elif mode == "rational":
            self.masses = [Fraction(v) for v in masses]
            if any(v < 0 for v in self.masses):
                raise ValueError("negative mass")
            if sum(self.masses) != 1:
                raise ValueError("rational masses must sum to exactly 1")
            self.total = None
        else:
            arr = np.asarray(masses, dtype=np.float64).copy()
            if (arr < 0).any():
                raise ValueError("negative mass")
            if abs(arr.sum() - 1.0) > _FLOAT_MASS_TOL:
                raise ValueError(f"float masses sum to {arr.sum()!r}, not 1")
            arr.setflags(write=False)
            self.masses = arr
            self.total = None

    # -- basic accessors ---------------------------------------------------

    def __len__(self) -> int:
        return len(self.masses)

    @property
    def support(self) -> range:
        return range(self.offset, self.offset + len(self.masses))

    def mass(self, value: int):
        """Raw stored mass at ``value`` (count, Fraction, or float)."""
        i = value - self.offset
        if 0 <= i < len(self.masses):
            return self.masses[i]
        return 0 if self.mode == "count" else (Fraction(0) if self.mode == "rational" else 0.0)

    def p(self, value: int):
        """Probability of ``value`` (Fraction in exact modes, float otherwise)."""
        m = self.mass(value)
        if self.mode == "count":
            return Fraction(m, self.total)
        return m

    def probabilities(self):
        """All probabilities over the stored range."""
        if self.mode == "count":
            return [Fraction(v, self.total) for v in self.masses]
        if self.mode == "rational":
            return list(self.masses)
        return np.asarray(self.masses)

    def cdf(self, t) -> "Fraction | float":
        """P(X <= t)."""
        k = int(np.floor(t))
        i = min(k - self.offset, len(self.masses) - 1)
        if i < 0:
            return Fraction(0) if self.mode != "float" else 0.0
        if self.mode == "count":
            return Fraction(sum(self.masses[: i + 1]), self.total)
        if self.mode == "rational":
            return sum(self.masses[: i + 1], Fraction(0))
        return float(np.asarray(self.masses)[: i + 1].sum())

    # -- moments -----------------------------------------------------------

    def moment(self, k: int):
        """E X^k, exact in exact modes."""
        if self.mode == "float":
            vals = np.arange(self.offset, self.offset + len(self.masses), dtype=np.float64)
            return float(np.asarray(self.masses) @ vals**k)
        acc = Fraction(0)
        for i, m in enumerate(self.masses):
            if m:
                acc += Fraction(m) * (self.offset + i) ** k
        return acc / self.total if self.mode == "count" else acc

    def mean(self):
        return self.moment(1)

    def variance(self):
        m1 = self.moment(1)
        return self.moment(2) - m1 * m1

    # -- conversions and arithmetic ----------------------------------------

    def to_float(self) -> "Pmf":
        if self.mode == "float":
            return self
        probs = self.probabilities()
        arr = np.array([float(x) for x in probs])
        s = arr.sum()
        return Pmf(self.offset, arr / s, "float")

    def convolve(self, other: "Pmf") -> "Pmf":
        """Distribution of the sum of independent draws."""
        if self.mode != other.mode:
            raise ValueError("mode mismatch")
        off = self.offset + other.offset
        if self.mode == "count":
            return Pmf(off, int_convolve(self.masses, other.masses), "count",
                       total=self.total * other.total)
        if self.mode == "rational":
            out = [Fraction(0)] * (len(self.masses) + len(other.masses) - 1)
            for i, a in enumerate(self.masses):
                if a:
                    for j, b in enumerate(other.masses):
                        if b:
                            out[i + j] += a * b
            return Pmf(off, out, "rational")
        a = np.asarray(self.masses)
        b = np.asarray(other.masses)
        if max(len(a), len(b)) <= _FFT_THRESHOLD:
            c = np.convolve(a, b)
        else:
            c = fftconvolve(a, b)
            c = np.clip(c, 0.0, None)
        drift = abs(c.sum() - 1.0)
        if drift >= _FLOAT_MASS_TOL:
            raise FloatingPointError(f"convolution mass drift {drift:.3e} exceeds 1e-9")
        return Pmf(off, c / c.sum(), "float")

    def trimmed(self) -> "Pmf":
        """Drop leading/trailing zero masses (support endpoints tighten)."""
        lo = 0
        hi = len(self.masses)
        while lo < hi and not self.masses[lo]:
            lo += 1
        while hi > lo and not self.masses[hi - 1]:
            hi -= 1
        return Pmf(self.offset + lo, self.masses[lo:hi], self.mode, total=self.total)

    # -- I/O -----------------------------------------------------------------

    def to_csv_rows(self):
        """(value, mass-string) rows; exact modes stay exact."""
        rows = []
        for i, m in enumerate(self.masses):
            if self.mode == "count":
                rows.append((self.offset + i, str(m)))
            elif self.mode == "rational":
                rows.append((self.offset + i, f"{m.numerator}/{m.denominator}"))
            else:
                rows.append((self.offset + i, f"{m:.17g}"))
        return rows
