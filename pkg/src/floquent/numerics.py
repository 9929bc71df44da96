"""Dense complex linear-algebra contracts the rest of the package builds on.

All operations are pure functions of their inputs; matrices are never
modified in place, so they are safe to call from concurrent workers.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import NumericsError, SymmetryViolationError, UnitarityError

HERMITICITY_TOL = 1e-10
UNITARITY_TOL = 1e-8


def max_abs(m) -> float:
    """Max-entry norm used by all symmetry/unitarity checks."""
    m = np.asarray(m)
    return float(np.abs(m).max()) if m.size else 0.0


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a Hermitian matrix, values ascending, vectors in columns."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class UnitaryEigenDecomposition:
    """Eigenphases E in [-pi, pi) ascending and orthonormal eigenvectors of a
    unitary U, with U v_j = exp(-i E_j) v_j."""

    phases: np.ndarray
    vectors: np.ndarray


def _as_square(m, name):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NumericsError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericsError(f"{name} contains non-finite entries")
    return m


def hermitian_eig(m) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Raises
    ------
    SymmetryViolationError
        If ``m`` deviates from Hermiticity by more than 1e-10 * max|m|.
    NumericsError
        If the solver fails to converge.
    """
    m = _as_square(m, "hermitian_eig input")
    scale = max(1.0, max_abs(m))
    dev = max_abs(m - m.conj().T)
    if dev > HERMITICITY_TOL * scale:
        raise SymmetryViolationError(
            f"matrix is not Hermitian: max|M - M^dag| = {dev:.3e} "
            f"(tolerance {HERMITICITY_TOL * scale:.3e})"
        )
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(
            f"Hermitian eigensolver failed to converge at dimension {m.shape[0]}"
        ) from exc
    return EigenDecomposition(values=values, vectors=vectors)


def unitary_eig(u) -> UnitaryEigenDecomposition:
    """Eigenphases and eigenvectors of a unitary matrix.

    Uses the complex Schur form: for a normal matrix the Schur factor is
    diagonal up to roundoff, so the (exactly unitary) Schur basis is an
    orthonormal eigenbasis even inside degenerate subspaces.  Phases follow
    the convention U v = exp(-i E) v with E = -arg(eigenvalue) in [-pi, pi).

    Raises
    ------
    UnitarityError
        If max|U^dag U - I| exceeds 1e-8.
    NumericsError
        If the residual of the returned eigenpairs exceeds 1e-8.
    """
    u = _as_square(u, "unitary_eig input")
    n = u.shape[0]
    residual = max_abs(u.conj().T @ u - np.eye(n))
    if residual > UNITARITY_TOL:
        raise UnitarityError(
            f"matrix is not unitary: max|U^dag U - I| = {residual:.3e}", residual
        )
    t, z = sla.schur(u, output="complex")
    eigvals = np.diag(t)
    # arg() returns (-pi, pi], so E = -arg() lies in [-pi, pi) with E = -pi
    # attained exactly when the eigenvalue phase is +pi.
    phases = -np.angle(eigvals)
    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    vectors = z[:, order]
    res = max_abs(u @ vectors - vectors * np.exp(-1j * phases)[None, :])
    if res > UNITARITY_TOL:
        raise NumericsError(
            f"unitary eigenpairs exceed residual tolerance: {res:.3e} "
            f"at dimension {n}"
        )
    return UnitaryEigenDecomposition(phases=phases, vectors=vectors)


def exp_hermitian(h, scale: float) -> np.ndarray:
    """Unitary exp(-i * scale * H) of a Hermitian generator, via eigendecomposition."""
    dec = hermitian_eig(h)
    phase = np.exp(-1j * scale * dec.values)
    return (dec.vectors * phase[None, :]) @ dec.vectors.conj().T
