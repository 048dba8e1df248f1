"""Brute-force references for validating the fast paths.

Everything here trades speed for obviousness: clusterings are enumerated
outright, matrices are scanned row by row, and region masses are summed
directly from the raw histograms instead of going through prefix arrays.
Hard size guards keep the combinatorics honest.

Shipped (not test-only) so users can spot-check a build on small inputs.
"""

from __future__ import annotations

from itertools import combinations
from math import inf, log2

import numpy as np

from .distribution import SegmentedDistribution
from .errors import ValidationError
from .optimizer import (
    BuildConfig,
    RegionPlan,
    bloom_memory_bits,
    ensure_positive_masses,
    expected_fpr,
    optimal_fprs_for_fpr,
    optimal_fprs_for_memory,
)

MAX_ORACLE_SEGMENTS = 12
MAX_ORACLE_REGIONS = 4


def _region_value(dist: SegmentedDistribution, first: int, last: int) -> float:
    # deliberate direct summation: independent of the prefix-sum machinery
    sg = float(np.sum(dist.g[first - 1 : last]))
    if sg <= 0.0:
        return 0.0
    sh = float(np.sum(dist.h[first - 1 : last]))
    if sh <= 0.0:
        return inf
    return sg * log2(sg / sh)


def best_clustering_exhaustive(
    dist: SegmentedDistribution, boundary_segment: int, n_regions: int
) -> tuple[float, tuple[int, ...]]:
    """Best clustering of segments 1..boundary_segment-1 into n_regions-1 regions.

    Tries every placement of the interior region ends and returns
    ``(value, ends)`` where ``ends`` lists the 1-based last segment of each
    region (so its final entry is ``boundary_segment - 1``).  Ties resolve to
    the lexicographically smallest ends, matching the smallest-index rule of
    the DP backtraces.
    """
    j, k = boundary_segment, n_regions
    if j > MAX_ORACLE_SEGMENTS:
        raise ValidationError(
            f"exhaustive clustering is capped at {MAX_ORACLE_SEGMENTS} segments"
        )
    if k > MAX_ORACLE_REGIONS:
        raise ValidationError(
            f"exhaustive clustering is capped at {MAX_ORACLE_REGIONS} regions"
        )
    if not (2 <= k <= j <= dist.n_segments):
        raise ValidationError(
            f"need 2 <= n_regions <= boundary_segment <= n_segments, "
            f"got k={k}, j={j}, n={dist.n_segments}"
        )
    segments = j - 1
    best_value = -inf
    best_ends: tuple[int, ...] | None = None
    for cuts in combinations(range(1, segments), k - 2):
        ends = cuts + (segments,)
        value = 0.0
        first = 1
        for last in ends:
            value += _region_value(dist, first, last)
            first = last + 1
        if value > best_value:
            best_value = value
            best_ends = ends
    assert best_ends is not None
    return best_value, best_ends


def naive_row_maxima(matrix) -> list[tuple[int, float]]:
    """Per-row (argmax column, value) by scanning every entry; smallest-index ties."""
    out = []
    for row in range(matrix.row_count):
        best_c = 0
        best_v = matrix.value(row, 0)
        for col in range(1, matrix.col_count):
            v = matrix.value(row, col)
            if v > best_v:
                best_v = v
                best_c = col
        out.append((best_c, best_v))
    return out


def exhaustive_plan(dist: SegmentedDistribution, config: BuildConfig) -> RegionPlan:
    """Reference planner: enumerate every clustering at every final-region start.

    Mirrors the solver's selection rule (minimize the framework objective,
    ties to the smallest final-region start) but never touches the DP tables.
    """
    n, k = dist.n_segments, config.n_regions
    if n > MAX_ORACLE_SEGMENTS:
        raise ValidationError(
            f"exhaustive planning is capped at {MAX_ORACLE_SEGMENTS} segments"
        )
    if k > MAX_ORACLE_REGIONS:
        raise ValidationError(
            f"exhaustive planning is capped at {MAX_ORACLE_REGIONS} regions"
        )
    config.require_matching(dist)
    dist = ensure_positive_masses(dist)
    scaled = config.effective_scaled_keys(dist)
    best = None
    for j in range(k, n + 1):
        _, ends = best_clustering_exhaustive(dist, j, k)
        bounds = (0,) + ends + (n,)
        key_mass = [float(np.sum(dist.g[lo:hi])) for lo, hi in zip(bounds, bounds[1:])]
        nonkey_mass = [float(np.sum(dist.h[lo:hi])) for lo, hi in zip(bounds, bounds[1:])]
        if config.framework == "fpr":
            fprs = optimal_fprs_for_fpr(key_mass, nonkey_mass, config.target_fpr)
            score = bloom_memory_bits(key_mass, fprs, scaled)
        else:
            fprs = optimal_fprs_for_memory(
                key_mass, nonkey_mass, config.memory_bits, scaled
            )
            score = expected_fpr(nonkey_mass, fprs)
        if best is None or score < best[0]:
            best = (score, bounds, fprs, key_mass, nonkey_mass)
    assert best is not None
    score, bounds, fprs, key_mass, nonkey_mass = best
    return RegionPlan(
        n_regions=k,
        boundaries=bounds,
        fprs=tuple(fprs),
        key_mass=tuple(key_mass),
        nonkey_mass=tuple(nonkey_mass),
        objective=score,
        framework=config.framework,
        algorithm="exhaustive",
    )
