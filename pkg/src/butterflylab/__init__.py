"""Butterfly permutation groups and their LIS / cycle-count statistics.

Subpackages:

* `permutations`: composition, Kronecker/direct-sum structure, cycle stats,
  pivot-movement counts, uniform sampling.
* `groups`: simple and nonsimple m-nary butterfly permutations (sampling,
  evaluation, enumeration, membership).
* `gepp`: dense partial-pivoting elimination, butterfly matrix builders,
  closed-form predicted factorizations, comparison ensembles.
* `lis`: LIS/LDS computation and exact distributions, power-law bound
  constants, exponent regression.
* `cycles`: butterfly Stirling triangles, moment polynomials and limits,
  density grids, fixed-point statistics, Monte Carlo.
* `stats`, `rng`, `cli`: chi-square helper, seeded streams, experiments.
"""
from __future__ import annotations

__version__ = "0.1.0"

from . import cycles, gepp, groups, lis, permutations, pmf, rng, stats  # noqa: F401
from .permutations import (  # noqa: F401
    CycleStats,
    Permutation,
    compose,
    cycle_stats,
    dsum,
    fisher_yates,
    identity,
    inverse,
    kron,
    pivot_movements,
)
from .pmf import Pmf  # noqa: F401
