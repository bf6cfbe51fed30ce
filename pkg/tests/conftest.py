"""Shared fixtures: exhaustive censuses over small butterfly groups."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import pytest

from butterflylab import cycle_stats, groups, lis


@dataclass
class GroupCensus:
    m: int
    n: int
    lis_counts: Counter
    lds_counts: Counter
    cycle_counts: Counter
    fixed_point_counts: Counter
    size: int


def _census(m: int, n: int, simple: bool) -> GroupCensus:
    lis_c: Counter = Counter()
    lds_c: Counter = Counter()
    cyc_c: Counter = Counter()
    fp_c: Counter = Counter()
    size = 0
    for elem in groups.enumerate_group(m, n, simple=simple):
        p = groups.materialize(elem)
        lis_c[lis.lis(p)] += 1
        lds_c[lis.lds(p)] += 1
        cs = cycle_stats(p)
        cyc_c[cs.total_cycles] += 1
        fp_c[cs.fixed_points] += 1
        size += 1
    return GroupCensus(m, n, lis_c, lds_c, cyc_c, fp_c, size)


@pytest.fixture(scope="session")
def b16_census() -> GroupCensus:
    """Full census of the depth-4 binary nonsimple group (32768 elements)."""
    return _census(2, 4, simple=False)


@pytest.fixture(scope="session")
def ternary9_census() -> GroupCensus:
    """Full census of the depth-2 ternary nonsimple group (81 elements)."""
    return _census(3, 2, simple=False)


@pytest.fixture(scope="session")
def nonsimple_census_by_depth(b16_census):
    """Censuses of the binary nonsimple groups at depths 1..4."""
    return {n: _census(2, n, simple=False) for n in (1, 2, 3)} | {4: b16_census}
