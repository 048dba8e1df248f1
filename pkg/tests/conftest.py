"""Shared test helpers: random inputs, counting wrappers, planted matrices."""

import numpy as np

from plbf import DenseMatrix, SegmentedDistribution


def random_distribution(rng, n_segments, lo=0.05, hi=1.0, n_keys=1000):
    """Strictly positive random masses, normalized."""
    g = rng.uniform(lo, hi, n_segments)
    h = rng.uniform(lo, hi, n_segments)
    return SegmentedDistribution.from_masses(g, h, n_keys=n_keys)


class CountingMatrix:
    """Wraps any matrix and counts value() evaluations."""

    def __init__(self, inner):
        self.inner = inner
        self.row_count = inner.row_count
        self.col_count = inner.col_count
        self.calls = 0

    def value(self, row, col):
        self.calls += 1
        return self.inner.value(row, col)


def planted_monotone_matrix(rng, n_rows, n_cols):
    """Random matrix with a known, non-decreasing argmax column per row.

    Each row peaks at a planted target and falls off linearly on both sides,
    so the row maximum is unique and row argmaxes are sorted: a monotone
    matrix by construction.
    """
    targets = np.sort(rng.integers(0, n_cols, size=n_rows))
    base = rng.uniform(0.0, 10.0, size=n_rows)
    slope = rng.uniform(0.5, 2.0, size=n_rows)
    cols = np.arange(n_cols, dtype=np.float64)
    rows = base[:, None] - slope[:, None] * np.abs(cols[None, :] - targets[:, None])
    return DenseMatrix(rows.tolist()), targets.tolist()
