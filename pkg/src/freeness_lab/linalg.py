"""Dense complex matrix primitives.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The helpers
:func:`as_matrix` and :func:`as_unitary` validate the construction
invariants (square, finite, unitary to a tolerance) and every other function
assumes validated input.

Norm conventions follow the tracial picture of ``M_n(C)``:

* ``normalized_trace(M) = Tr(M) / n`` so that the identity has trace 1,
* ``two_norm(M) = normalized_trace(M* M) ** 0.5`` (normalized Frobenius norm),
* ``operator_norm(M)`` is the largest singular value.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

__all__ = [
    "UNITARITY_TOL",
    "EIG_TOL",
    "NumericalFailure",
    "NotUnitaryError",
    "UnitaryEigenSystem",
    "as_matrix",
    "as_unitary",
    "unitarity_defect",
    "normalized_trace",
    "two_norm",
    "operator_norm",
    "commutator",
    "unitary_eigendecomposition",
    "wrap_phases",
    "format_matrix",
    "parse_matrix",
    "save_matrix",
    "load_matrix",
]

UNITARITY_TOL = 1e-10
EIG_TOL = 1e-8

TWO_PI = 2.0 * np.pi


class NumericalFailure(RuntimeError):
    """A numerical routine produced a result outside its certified tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class NotUnitaryError(ValueError):
    def __init__(self, defect: float, tol: float):
        super().__init__(f"matrix is not unitary: ||U*U - I||_2 = {defect:.3e} > {tol:.1e}")
        self.defect = defect
        self.tol = tol


def as_matrix(M) -> np.ndarray:
    """Return ``M`` as a square complex128 array, rejecting NaN/Inf."""
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def unitarity_defect(U: np.ndarray) -> float:
    """``||U*U - I||_2``."""
    n = U.shape[0]
    return two_norm(U.conj().T @ U - np.eye(n))


def as_unitary(U, tol: float = UNITARITY_TOL) -> np.ndarray:
    U = as_matrix(U)
    defect = unitarity_defect(U)
    if defect > tol:
        raise NotUnitaryError(defect, tol)
    return U


def normalized_trace(M: np.ndarray) -> complex:
    return complex(np.trace(M)) / M.shape[0]


def two_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M)) / np.sqrt(M.shape[0])


def operator_norm(M: np.ndarray) -> float:
    # LAPACK gesdd; relative accuracy ~ machine epsilon for the top singular value
    return float(scipy.linalg.svdvals(M, check_finite=False)[0])


def commutator(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    if X.shape != Y.shape:
        raise ValueError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return X @ Y - Y @ X


@dataclass(frozen=True)
class UnitaryEigenSystem:
    """``U = W diag(exp(i phases)) W*`` with phases sorted in ``[0, 2 pi)``."""

    W: np.ndarray
    phases: np.ndarray
    residual: float

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def diagonal(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        return (self.W * self.eigenvalues) @ self.W.conj().T


def wrap_phases(angles: np.ndarray) -> np.ndarray:
    """Map angles to ``[0, 2 pi)``; guards the ``-tiny mod 2 pi == 2 pi`` rounding case."""
    phases = np.mod(angles, TWO_PI)
    phases[phases >= TWO_PI] = 0.0
    return phases


def unitary_eigendecomposition(
    U: np.ndarray,
    eig_tol: float = EIG_TOL,
    unitarity_tol: float = UNITARITY_TOL,
) -> UnitaryEigenSystem:
    """Diagonalize a unitary matrix with phases sorted ascending in ``[0, 2 pi)``.

    Uses the complex Schur form, which for a normal matrix is diagonal up to
    rounding and comes with an exactly unitary basis ``W``.  Eigenvalues are
    projected to the unit circle before the reconstruction check.  Equal
    phases keep the order LAPACK returned them in (stable sort).

    Raises
    ------
    NotUnitaryError
        if ``U`` fails the unitarity check.
    NumericalFailure
        if ``||U - W D W*||_2 > eig_tol``.
    """
    U = as_unitary(U, unitarity_tol)
    T, Z = scipy.linalg.schur(U, output="complex", check_finite=False)
    phases = wrap_phases(np.angle(np.diag(T)))
    order = np.argsort(phases, kind="stable")
    system = UnitaryEigenSystem(W=Z[:, order], phases=phases[order], residual=0.0)
    residual = two_norm(U - system.reconstruct())
    if not residual <= eig_tol:
        raise NumericalFailure(
            f"eigendecomposition residual {residual:.3e} exceeds {eig_tol:.1e}", residual
        )
    return UnitaryEigenSystem(W=system.W, phases=system.phases, residual=residual)


# -- text snapshots --------------------------------------------------------
#
# Format: a header line "n=<int>" followed by n*n lines "<row> <col> <re> <im>"
# in row-major order.  Indices are 1-based; reals use 17 significant digits,
# which round-trips IEEE doubles exactly.


def format_matrix(M: np.ndarray) -> str:
    M = as_matrix(M)
    n = M.shape[0]
    lines = [f"n={n}"]
    for i in range(n):
        for j in range(n):
            z = M[i, j]
            lines.append(f"{i + 1} {j + 1} {z.real:.17g} {z.imag:.17g}")
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise ValueError("missing 'n=<int>' header")
    n = int(lines[0][2:])
    if n < 1 or len(lines) != n * n + 1:
        raise ValueError(f"expected {n * n} entry lines, found {len(lines) - 1}")
    M = np.empty((n, n), dtype=np.complex128)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected '<row> <col> <re> <im>'")
        i, j = int(parts[0]), int(parts[1])
        expected = divmod(lineno - 2, n)
        if (i - 1, j - 1) != expected:
            raise ValueError(f"line {lineno}: entries must be row-major, got ({i}, {j})")
        M[i - 1, j - 1] = complex(float(parts[2]), float(parts[3]))
    return as_matrix(M)


def save_matrix(path: str | Path, M: np.ndarray) -> None:
    Path(path).write_text(format_matrix(M))


def load_matrix(path: str | Path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())
