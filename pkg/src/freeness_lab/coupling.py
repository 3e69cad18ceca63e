"""Coupling Haar unitaries to conjugates of the evenly spaced diagonal.

Given independent Haar unitaries ``X_j`` and ``Y_j``, diagonalize
``X_j = W_j B_j W_j*`` with the phases of ``B_j`` sorted in ``[0, 2 pi)`` and
put ``U_j = Y_j X_j Y_j*`` and ``V_j = Y_j W_j``.  Then ``U_j = V_j B_j V_j*``
with both ``U_j`` and ``V_j`` Haar distributed, and
``||U_j - V_j A V_j*||_2 = ||B_j - A||_2`` where ``A = diag(1, z, ..., z^(n-1))``,
``z = exp(2 pi i / n)``.  Since the empirical spectral distribution of ``U_j``
approaches the uniform measure, the residual tends to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .haar import SpectralMeasure, as_generator, in_neighborhood, sample_haar_unitary
from .linalg import EIG_TOL, two_norm, unitary_eigendecomposition

__all__ = [
    "CoupledFamily",
    "reference_phases",
    "reference_diagonal",
    "couple",
    "couple_from",
    "residual_certificate",
    "diagonal_distance",
]


def reference_phases(n: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n) / n


def reference_diagonal(n: int) -> np.ndarray:
    """``A = diag(1, z, z^2, ..., z^(n-1))`` with ``z = exp(2 pi i / n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.diag(np.exp(1j * reference_phases(n)))


def diagonal_distance(phases: np.ndarray) -> float:
    """Operator norm of ``diag(exp(i phases)) - A`` for sorted ``phases``."""
    n = len(phases)
    return float(np.max(np.abs(np.exp(1j * phases) - np.exp(1j * reference_phases(n)))))


@dataclass(frozen=True)
class CoupledFamily:
    """``m`` coupled pairs ``(U_j, V_j)`` sharing the reference diagonal ``A``.

    ``phases[j]`` holds the sorted eigenphases of ``U_j`` (the diagonal
    ``B_j``).  ``residuals[j] = ||U_j - V_j A V_j*||_2``;
    ``identity_errors[j] = ||U_j - V_j B_j V_j*||_2``.
    """

    n: int
    m: int
    A: np.ndarray
    U: list
    V: list
    phases: list
    residuals: list = field(default_factory=list)
    identity_errors: list = field(default_factory=list)

    def B(self, j: int) -> np.ndarray:
        return np.diag(np.exp(1j * self.phases[j]))

    def residuals_diag(self) -> list[float]:
        """``||B_j - A||_2`` computed directly on the diagonals."""
        a = np.exp(1j * reference_phases(self.n))
        return [float(np.sqrt(np.mean(np.abs(np.exp(1j * ph) - a) ** 2))) for ph in self.phases]

    def residuals_op(self) -> list[float]:
        """``||B_j - A||`` in operator norm."""
        return [diagonal_distance(ph) for ph in self.phases]


def couple_from(xs, ys, eig_tol: float = EIG_TOL) -> CoupledFamily:
    """Deterministic coupling from given unitaries ``X_j`` and ``Y_j``."""
    if len(xs) != len(ys) or not xs:
        raise ValueError("need equally many X_j and Y_j, at least one")
    n = xs[0].shape[0]
    A = reference_diagonal(n)
    a = np.diag(A)
    U, V, phases, residuals, identity_errors = [], [], [], [], []
    for X, Y in zip(xs, ys):
        system = unitary_eigendecomposition(X, eig_tol)
        Uj = Y @ X @ Y.conj().T
        Vj = Y @ system.W
        Vh = Vj.conj().T
        U.append(Uj)
        V.append(Vj)
        phases.append(system.phases)
        residuals.append(two_norm(Uj - (Vj * a) @ Vh))
        identity_errors.append(two_norm(Uj - (Vj * system.eigenvalues) @ Vh))
    return CoupledFamily(
        n=n, m=len(xs), A=A, U=U, V=V, phases=phases,
        residuals=residuals, identity_errors=identity_errors,
    )


def couple(n: int, m: int, rng, eig_tol: float = EIG_TOL) -> CoupledFamily:
    """Sample ``X_j, Y_j`` (interleaved, ``j = 1..m``) and couple them."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if m < 1:
        raise ValueError("m must be >= 1")
    gen = as_generator(rng)
    xs, ys = [], []
    for _ in range(m):
        xs.append(sample_haar_unitary(n, gen))
        ys.append(sample_haar_unitary(n, gen))
    return couple_from(xs, ys, eig_tol)


def residual_certificate(family: CoupledFamily, k: int) -> list[tuple[bool, float]]:
    """Per member: ``(esd(U_j) in O_k, ||B_j - A||)``.

    The spectral measure of ``U_j`` is read off the stored phases of ``B_j``
    (``U_j`` and ``B_j`` are unitarily conjugate).  Whenever the flag is true
    the distance must not exceed ``4 pi / k``.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    return [
        (in_neighborhood(SpectralMeasure(ph), k), diagonal_distance(ph))
        for ph in family.phases
    ]
