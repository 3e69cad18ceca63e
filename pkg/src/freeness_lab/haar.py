"""Seeded Haar unitary sampling and empirical spectral distributions.

Random streams
--------------
An :class:`RngStream` is the pair ``(seed, stream_id)``.  It maps to the
numpy generator ``Generator(PCG64(SeedSequence(seed, spawn_key=(stream_id,))))``,
so identical pairs reproduce identical draws on any machine with the same
numpy bit-generator, and distinct ``stream_id`` values give independent
streams (SeedSequence spawn semantics).

Every sampler accepts either an ``RngStream`` (a fresh generator is built) or
an already running ``numpy.random.Generator`` (draws continue from it).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import (
    EIG_TOL,
    UNITARITY_TOL,
    NumericalFailure,
    unitary_eigendecomposition,
)

__all__ = [
    "RngStream",
    "SpectralMeasure",
    "as_generator",
    "sample_ginibre",
    "sample_haar_unitary",
    "esd",
    "arc_masses",
    "in_neighborhood",
    "write_esd_csv",
]

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def sample_ginibre(n: int, rng) -> np.ndarray:
    """n x n matrix of i.i.d. standard complex Gaussians, ``E|z|^2 = 1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = as_generator(rng)
    z = gen.standard_normal((n, n, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def sample_haar_unitary(n: int, rng, max_retries: int = 8) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix.

    The Q factor of a Ginibre matrix is only Haar once the phases of the
    diagonal of R are moved into Q: ``U = Q diag(R_jj / |R_jj|)``.
    A numerically vanishing ``R_jj`` triggers a redraw.
    """
    gen = as_generator(rng)
    for _ in range(max_retries):
        Z = sample_ginibre(n, gen)
        Q, R = np.linalg.qr(Z)
        d = np.diag(R)
        mag = np.abs(d)
        if np.all(mag > 1e3 * np.finfo(float).eps * np.sqrt(n)):
            return Q * (d / mag)
    raise NumericalFailure(f"QR produced a zero pivot in {max_retries} attempts")


@dataclass(frozen=True)
class SpectralMeasure:
    """Uniform measure on ``n`` eigenvalue phases (sorted, in ``[0, 2 pi)``)."""

    phases: np.ndarray

    @property
    def n(self) -> int:
        return len(self.phases)

    def ks_uniform(self) -> float:
        """Kolmogorov distance to the uniform (Haar) measure on the circle."""
        u = self.phases / (2 * np.pi)
        i = np.arange(1, self.n + 1)
        return float(max(np.max(i / self.n - u), np.max(u - (i - 1) / self.n)))


def esd(U: np.ndarray, eig_tol: float = EIG_TOL, unitarity_tol: float = UNITARITY_TOL) -> SpectralMeasure:
    return SpectralMeasure(unitary_eigendecomposition(U, eig_tol, unitarity_tol).phases)


# Relative tolerance (in units of one arc) under which a phase is treated as
# sitting exactly on an arc endpoint 2*pi*j/k.
BOUNDARY_TOL = 1e-9


def _arc_counts(phases: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    scaled = phases * (k / (2 * np.pi))
    nearest = np.rint(scaled)
    on_edge = np.abs(scaled - nearest) <= BOUNDARY_TOL
    inner = np.floor(scaled[~on_edge]).astype(np.int64) % k
    edges = nearest[on_edge].astype(np.int64) % k

    open_count = np.bincount(inner, minlength=k)
    closed_count = open_count + np.bincount(edges, minlength=k) + np.bincount((edges - 1) % k, minlength=k)
    return open_count, closed_count


def arc_masses(mu: SpectralMeasure, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Open-arc and closed-arc masses of the arcs ``[2 pi j/k, 2 pi (j+1)/k)``.

    An atom on an endpoint belongs to the closure of both adjacent arcs and
    to the interior of neither.  Returns ``(open_mass, closed_mass)``, each of
    length ``k`` (0-based arc index).
    """
    open_count, closed_count = _arc_counts(mu.phases, k)
    return open_count / mu.n, closed_count / mu.n


def in_neighborhood(mu: SpectralMeasure, k: int) -> bool:
    """Membership of ``mu`` in the weak-* neighbourhood ``O_k`` of Haar measure.

    True iff every arc has interior mass ``> 1/k - 1/k^2`` and closed mass
    ``< 1/k + 1/k^2``.  Compared in integers: ``count * k^2`` against
    ``n (k -+ 1)``.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    open_count, closed_count = _arc_counts(mu.phases, k)
    n = mu.n
    return bool(np.all(open_count * k**2 > n * (k - 1)) and np.all(closed_count * k**2 < n * (k + 1)))


def write_esd_csv(path: str | Path, mu: SpectralMeasure) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "phase"])
        for i, phase in enumerate(mu.phases):
            writer.writerow([i, f"{phase:.17g}"])
