"""Dense complex linear algebra for the battery simulator.

Everything here is a pure function over numpy arrays. Numerical tolerances
used across the package live in this module so there is a single place to
audit them.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

# Validation tolerances (absolute unless noted).
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10
RECONSTRUCTION_RTOL = 1e-9
ORTHONORMALITY_TOL = 1e-10
TRACE_TOL = 1e-12
PSD_EIGENVALUE_TOL = 1e-12
LEAKAGE_TOL = 1e-6


class NotSquareError(ValueError):
    """Matrix operation received a non-square matrix."""


class NotHermitianError(ValueError):
    """Matrix fails the Hermitian symmetry check."""


class DimensionMismatchError(ValueError):
    """Operand dimensions are inconsistent."""


class EigDecomposition(NamedTuple):
    """Hermitian eigendecomposition with eigenvalues sorted ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermiticity_defect(a: np.ndarray) -> float:
    """Max entrywise deviation of ``a`` from its conjugate transpose."""
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def require_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquareError(f"expected a square matrix, got shape {a.shape}")
    defect = hermiticity_defect(a)
    if defect > tol:
        raise NotHermitianError(
            f"Hermitian symmetry violated: defect {defect:.3e} > {tol:.1e}"
        )
    return a


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product (thin wrapper so call sites stay uniform)."""
    return np.kron(a, b)


def eig_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues come back real and ascending; eigenvector columns are
    orthonormal. Raises :class:`NotHermitianError` / :class:`NotSquareError`
    if ``a`` is not Hermitian within ``tol``.
    """
    a = require_hermitian(a, tol)
    w, q = np.linalg.eigh(a)
    return EigDecomposition(eigenvalues=w, eigenvectors=q)


def propagator(h: np.ndarray, dt: float) -> np.ndarray:
    """Unitary ``exp(-i h dt)`` for Hermitian ``h`` via eigendecomposition."""
    if not np.isfinite(dt):
        raise ValueError(f"dt must be finite, got {dt}")
    w, q = eig_hermitian(h)
    phases = np.exp(-1j * w * dt)
    return (q * phases) @ q.conj().T


def apply_propagator(h: np.ndarray, dt: float, psi: np.ndarray) -> np.ndarray:
    """``exp(-i h dt) @ psi`` without forming the full unitary."""
    w, q = eig_hermitian(h)
    return q @ (np.exp(-1j * w * dt) * (q.conj().T @ psi))


def partial_trace_cavity(
    psi: np.ndarray, battery_dim: int, cavity_dim: int
) -> np.ndarray:
    """Reduced battery density matrix of a joint pure state.

    ``psi`` is indexed battery-major / cavity-minor, so the reduction is a
    contiguous reshape followed by one matrix product.
    """
    psi = np.asarray(psi)
    if psi.size != battery_dim * cavity_dim:
        raise DimensionMismatchError(
            f"state of dim {psi.size} != {battery_dim} * {cavity_dim}"
        )
    m = psi.reshape(battery_dim, cavity_dim)
    return m @ m.conj().T


def norm_defect(psi: np.ndarray) -> float:
    """Deviation of ``sum |psi_i|^2`` from one."""
    return float(abs(np.vdot(psi, psi).real - 1.0))
