"""Small dense linear algebra for observer design.

Symmetric eigendecomposition, definiteness tests, Lyapunov equation
solving and output-injection eigenvalue assignment, sized for matrices up
to roughly 20 x 20.  Matrices are plain float64 ``numpy`` arrays.

Tolerances are absolute-relative hybrids scaled by ``max(1, |S|_max)``
unless stated otherwise.
"""

from typing import NamedTuple

import numpy as np
from numpy.linalg import LinAlgError
from scipy.signal import place_poles

from .errors import (
    AsymmetricError,
    BadTargetsError,
    NoConvergenceError,
    NonSquareError,
    NotHurwitzError,
    NotObservableError,
)

__all__ = [
    "SymEig",
    "sym_eig",
    "is_negative_semidefinite",
    "is_positive_definite",
    "solve_lyapunov",
    "stabilizing_output_injection",
    "observability_matrix",
    "is_hurwitz",
]


class SymEig(NamedTuple):
    """Eigendecomposition of a symmetric matrix.

    ``eigenvalues`` is ascending; the columns of ``eigenvectors`` are the
    matching orthonormal eigenvectors.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_matrix(S, name="S"):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2:
        raise NonSquareError(f"{name} must be a 2-d array, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError(f"{name} has non-finite entries")
    return S


def _check_square(S, name="S"):
    S = _as_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise NonSquareError(f"{name} must be square, got shape {S.shape}")
    return S


def _check_symmetric(S, tol=1e-9, name="S"):
    S = _check_square(S, name)
    scale = max(1.0, float(np.max(np.abs(S))) if S.size else 0.0)
    if np.max(np.abs(S - S.T), initial=0.0) > tol * scale:
        raise AsymmetricError(f"{name} is not symmetric within {tol:g} relative tolerance")
    return S


def sym_eig(S, tol=1e-9):
    """Eigendecomposition of a symmetric matrix, ascending eigenvalues.

    Parameters
    ----------
    S : (n, n) array_like
        Symmetric matrix (asymmetry up to ``tol`` relative is tolerated
        and symmetrized away).
    tol : float
        Relative asymmetry tolerance.

    Returns
    -------
    SymEig
        Ascending eigenvalues and orthonormal eigenvectors such that
        ``V @ diag(w) @ V.T`` reconstructs ``S``.

    Raises
    ------
    NonSquareError, AsymmetricError, NoConvergenceError
    """
    S = _check_symmetric(S, tol)
    S = 0.5 * (S + S.T)
    try:
        w, V = np.linalg.eigh(S)
    except LinAlgError as exc:  # iteration cap inside LAPACK
        raise NoConvergenceError(f"symmetric eigensolver did not converge: {exc}") from exc
    return SymEig(w, V)


def is_negative_semidefinite(S, tol=0.0):
    """True iff the largest eigenvalue of symmetric ``S`` is <= ``tol``."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    w, _ = sym_eig(S)
    return bool(w[-1] <= tol)


def is_positive_definite(S, tol=0.0):
    """True iff the smallest eigenvalue of symmetric ``S`` is > ``tol``."""
    w, _ = sym_eig(S)
    return bool(w[0] > tol)


def is_hurwitz(A, tol=0.0):
    """True iff every eigenvalue of ``A`` has real part < ``-tol``."""
    A = _check_square(A, "A")
    return bool(np.max(np.linalg.eigvals(A).real) < -tol)


def solve_lyapunov(acl, nu):
    """Solve ``P @ acl + acl.T @ P = -nu * I`` for symmetric P > 0.

    Uses the vectorized Kronecker linear system (n^2 unknowns), which is
    ample for the n <= 20 matrices handled here.

    Parameters
    ----------
    acl : (n, n) array_like
        Hurwitz closed-loop matrix.
    nu : float
        Positive forcing scale.

    Returns
    -------
    (n, n) ndarray
        Symmetric positive definite solution with residual
        ``|P acl + acl.T P + nu I|_max <= 1e-8 * nu``.

    Raises
    ------
    NotHurwitzError
        If ``acl`` has an eigenvalue with nonnegative real part, or the
        solve degenerates numerically.
    """
    acl = _check_square(acl, "acl")
    if nu <= 0:
        raise ValueError("nu must be > 0")
    n = acl.shape[0]
    if not is_hurwitz(acl):
        raise NotHurwitzError("acl has an eigenvalue with nonnegative real part")
    eye = np.eye(n)
    # vec(P acl) = (acl.T kron I) vec(P); vec(acl.T P) = (I kron acl.T) vec(P)
    K = np.kron(acl.T, eye) + np.kron(eye, acl.T)
    try:
        vecP = np.linalg.solve(K, (-nu * eye).ravel())
    except LinAlgError as exc:
        raise NotHurwitzError(f"Lyapunov system is singular: {exc}") from exc
    P = vecP.reshape(n, n)
    P = 0.5 * (P + P.T)
    residual = np.max(np.abs(P @ acl + acl.T @ P + nu * eye))
    if residual > 1e-8 * nu:
        raise NotHurwitzError(f"Lyapunov residual {residual:g} exceeds 1e-8 * nu")
    if sym_eig(P).eigenvalues[0] <= 0:
        raise NotHurwitzError("Lyapunov solution is not positive definite")
    return P


def observability_matrix(A, C):
    """Stacked observability matrix ``[C; CA; ...; CA^(n-1)]``."""
    A = _check_square(A, "A")
    C = _as_matrix(C, "C")
    if C.ndim == 1:
        C = C.reshape(1, -1)
    n = A.shape[0]
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def _validate_targets(targets):
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    if np.any(targets.real >= 0):
        raise BadTargetsError("all target eigenvalues must have negative real part")
    # closed under conjugation
    remaining = list(targets)
    for t in targets:
        if abs(t.imag) < 1e-12:
            continue
        conj_found = any(abs(s - np.conj(t)) < 1e-9 * max(1.0, abs(t)) for s in remaining)
        if not conj_found:
            raise BadTargetsError("complex targets must come in conjugate pairs")
    return targets


def _sorted_complex(vals):
    vals = np.asarray(vals, dtype=complex)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def _ackermann_output_injection(A, C, targets):
    # single-output Ackermann: L = -q(A) @ O^-1 @ e_n
    n = A.shape[0]
    coeffs = np.real(np.poly(targets))  # q(s) = s^n + c1 s^(n-1) + ... + cn
    qA = np.zeros_like(A)
    for c in coeffs:
        qA = qA @ A + c * np.eye(n)
    O = observability_matrix(A, C)
    en = np.zeros(n)
    en[-1] = 1.0
    L = -qA @ np.linalg.solve(O, en)
    return L.reshape(n, 1)


def stabilizing_output_injection(A, C, target_eigs):
    """Gain L such that ``A + L @ C`` has the requested spectrum.

    Requires ``(A, C)`` observable (stricter than detectability; all
    shipped examples are observable).  Single-output pairs use
    Ackermann's formula, which tolerates repeated targets; multi-output
    pairs use :func:`scipy.signal.place_poles`.

    Parameters
    ----------
    A : (n, n) array_like
    C : (q, n) array_like
    target_eigs : sequence of complex
        Desired spectrum; closed under conjugation, real parts < 0.

    Returns
    -------
    (n, q) ndarray
        Gain with ``eig(A + L C)`` matching the targets within 1e-6
        relative.

    Raises
    ------
    NotObservableError, BadTargetsError
    """
    A = _check_square(A, "A")
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C.reshape(1, -1)
    n = A.shape[0]
    if C.shape[1] != n:
        raise NonSquareError(f"C has {C.shape[1]} columns, expected {n}")
    targets = _validate_targets(target_eigs)
    if targets.size != n:
        raise BadTargetsError(f"expected {n} target eigenvalues, got {targets.size}")

    if np.linalg.matrix_rank(observability_matrix(A, C)) < n:
        raise NotObservableError("(A, C) is not observable")

    # identity case: spectrum already in place
    eigA = _sorted_complex(np.linalg.eigvals(A))
    tsorted = _sorted_complex(targets)
    scale = max(1.0, float(np.max(np.abs(tsorted))))
    if np.max(np.abs(eigA - tsorted)) <= 1e-12 * scale:
        return np.zeros((n, C.shape[0]))

    if C.shape[0] == 1:
        L = _ackermann_output_injection(A, C, targets)
    else:
        try:
            placed = place_poles(A.T, C.T, np.sort_complex(targets))
        except ValueError as exc:
            raise BadTargetsError(f"pole placement rejected the targets: {exc}") from exc
        L = -placed.gain_matrix.T

    achieved = _sorted_complex(np.linalg.eigvals(A + L @ C))
    if np.max(np.abs(achieved - tsorted)) > 1e-6 * scale:
        raise BadTargetsError(
            f"placed spectrum {achieved} misses targets {tsorted} beyond 1e-6 relative"
        )
    return L
