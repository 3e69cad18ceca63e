"""Circular band matrices and the band projection of near-commutants.

``D_eps(n)`` is the space of n x n matrices supported on index pairs at
circular distance ``d_n(i, j) <= eps * n``.  Matrices that nearly commute with
the evenly spaced diagonal ``A`` are close in 2-norm to ``D_eps(n)``;
:func:`band_project` produces the explicit witness with

    ||B - P(B)||_2 <= (8 sqrt(pi) / eps) ||[A, B]||_2,   ||P(B)|| <= 3 ||B||.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix

__all__ = [
    "BandPattern",
    "BlockPartition",
    "circular_distance",
    "circular_distance_matrix",
    "band_halfwidth",
    "block_partition",
    "band_project",
    "band_entry_count",
    "band_real_dimension",
    "commutant_bound",
    "covering_log_bound",
    "volumetric_log_bound",
    "greedy_net",
]


def circular_distance(i: int, j: int, n: int) -> int:
    """Distance of 1-based indices ``i`` and ``j`` modulo ``n``."""
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"indices must lie in [1, {n}], got ({i}, {j})")
    d = abs(i - j)
    return min(d, n - d)


def circular_distance_matrix(n: int) -> np.ndarray:
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :])
    return np.minimum(d, n - d)


def band_halfwidth(n: int, epsilon: float) -> int:
    """Largest integer distance allowed in ``D_eps(n)``: ``floor(eps * n)``."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return math.floor(epsilon * n)


@dataclass(frozen=True)
class BandPattern:
    n: int
    epsilon: float

    def allowed(self, i: int, j: int) -> bool:
        return circular_distance(i, j, self.n) <= band_halfwidth(self.n, self.epsilon)

    def mask(self) -> np.ndarray:
        return circular_distance_matrix(self.n) <= band_halfwidth(self.n, self.epsilon)

    def contains(self, M: np.ndarray) -> bool:
        """Exact membership: every entry outside the band is exactly zero."""
        return bool(np.all(M[~self.mask()] == 0))


@dataclass(frozen=True)
class BlockPartition:
    """Consecutive blocks of size ``m`` plus a remainder block of size ``r``.

    ``n = q m + r`` with ``0 <= r < m``; the remainder block is dropped when
    ``r = 0``.  ``slices`` lists the index ranges (0-based, half open).
    """

    n: int
    m: int
    q: int
    r: int

    @property
    def slices(self) -> list[slice]:
        out = [slice(t * self.m, (t + 1) * self.m) for t in range(self.q)]
        if self.r:
            out.append(slice(self.q * self.m, self.n))
        return out

    @property
    def count(self) -> int:
        return self.q + (1 if self.r else 0)


def block_partition(n: int, epsilon: float) -> BlockPartition:
    m = math.floor(n * epsilon / 2)
    if m < 1:
        raise ValueError(f"no block partition for eps * n = {epsilon * n} < 2")
    q, r = divmod(n, m)
    return BlockPartition(n=n, m=m, q=q, r=r)


def band_project(B: np.ndarray, epsilon: float) -> np.ndarray:
    """Project ``B`` into ``D_eps(n)`` keeping cyclically adjacent block pairs.

    For ``eps < 2/n`` this is the diagonal part of ``B``.  Otherwise the
    indices are cut into blocks of size ``m = floor(n eps / 2)`` (plus a
    remainder block) and ``sum P_s B P_t`` is taken over block pairs at cyclic
    distance ``<= 1`` among the blocks.
    """
    B = as_matrix(B)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    n = B.shape[0]
    if epsilon < 2 / n:
        return np.diag(np.diag(B))

    part = block_partition(n, epsilon)
    blocks = part.slices
    N = len(blocks)
    out = np.zeros_like(B)
    for s in range(N):
        for t in {(s - 1) % N, s, (s + 1) % N}:
            out[blocks[s], blocks[t]] = B[blocks[s], blocks[t]]
    return out


def band_entry_count(n: int, epsilon: float) -> int:
    """Number of index pairs with ``d_n(i, j) <= eps * n``."""
    w = band_halfwidth(n, epsilon)
    if w >= n // 2:
        return n * n
    return n * (2 * w + 1)


def band_real_dimension(n: int, epsilon: float) -> int:
    return 2 * band_entry_count(n, epsilon)


def commutant_bound(commutator_two_norm: float, epsilon: float) -> float:
    """Right-hand side ``(8 sqrt(pi) / eps) ||[A, B]||_2`` of the projection bound."""
    return 8 * math.sqrt(math.pi) / epsilon * commutator_two_norm


def covering_log_bound(epsilon: float, R: float) -> float:
    """``2 eps log(3 R / eps)``: bound on ``n^-2 log K_eps`` of the R-ball of ``D_eps(n)``."""
    if not 0 < epsilon < R:
        raise ValueError(f"need 0 < epsilon < R, got epsilon={epsilon}, R={R}")
    return 2 * epsilon * math.log(3 * R / epsilon)


def volumetric_log_bound(real_dim: int, n: int, epsilon: float, R: float) -> float:
    """``(real_dim / n^2) log(3R/eps)``.

    Any eps-separated subset of an R-ball in a ``real_dim``-dimensional normed
    space has at most ``(1 + 2R/eps)^real_dim <= (3R/eps)^real_dim`` points
    (for ``eps <= R``), by disjointness of the ``eps/2`` balls.
    """
    if not 0 < epsilon <= R:
        raise ValueError(f"need 0 < epsilon <= R, got epsilon={epsilon}, R={R}")
    return real_dim / n**2 * math.log(3 * R / epsilon)


def greedy_net(points, epsilon: float) -> list:
    """Greedy maximal eps-separated subset in input order (2-norm).

    A point joins the net iff its distance to every net point so far is at
    least ``epsilon``; hence the net is eps-separated and every input point
    lies within distance ``< epsilon`` of some net point.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    points = list(points)
    if not points:
        return []
    n = points[0].shape[0]
    flat = np.stack([np.asarray(p).ravel() for p in points]) / np.sqrt(n)
    chosen = [0]
    net = np.empty_like(flat)
    net[0] = flat[0]
    size = 1
    for idx in range(1, len(flat)):
        dist = np.linalg.norm(net[:size] - flat[idx], axis=1)
        if np.all(dist >= epsilon):
            net[size] = flat[idx]
            size += 1
            chosen.append(idx)
    return [points[i] for i in chosen]
