"""Shared helpers: a brute-force counting oracle and random-basis draws.

Randomized tests use seeded numpy generators in plain loops so every
run exercises the identical sample set.
"""

import numpy as np
import pytest

from latticeball.basis import LatticeBasis

BOX_POINT_LIMIT = 20_000_000


def brute_count(basis: LatticeBasis, t: float) -> int:
    """Box-loop count of integer k with ||X k|| <= t, vectorized.

    Bounds per coordinate come from |k_i| <= t * ||row_i of X^{-1}||.
    Raises ValueError when the bounding box is too large to enumerate,
    so callers can resample rather than stall.
    """
    X = basis.entries
    n = basis.n
    if t == 0:
        return 1
    inv = np.linalg.inv(X)
    bounds = [int(np.floor(t * np.linalg.norm(inv[i]) + 1e-9)) for i in range(n)]
    total_pts = 1
    for b in bounds:
        total_pts *= 2 * b + 1
    if total_pts > BOX_POINT_LIMIT:
        raise ValueError(f"bounding box holds {total_pts} points")
    axes = [np.arange(-b, b + 1) for b in bounds]
    grids = np.meshgrid(*axes, indexing="ij")
    K = np.stack([g.ravel() for g in grids])
    V = X @ K
    d2 = np.sum(V * V, axis=0)
    return int(np.count_nonzero(d2 <= t * t * (1.0 + 1e-12)))


def random_basis(rng: np.random.Generator, n: int, det_floor: float = 0.1,
                 scale: float = 2.0) -> LatticeBasis:
    """Entries uniform in [-scale, scale], determinant bounded away from 0."""
    while True:
        M = rng.uniform(-scale, scale, (n, n))
        if abs(np.linalg.det(M)) > det_floor:
            return LatticeBasis(M)


@pytest.fixture
def rng():
    return np.random.default_rng(20260818)
