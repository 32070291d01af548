"""Small dense symmetric-matrix utilities.

Everything here works on plain ``numpy`` arrays. Dimensions are desk scale
(d up to ~16), so eigendecompositions are used throughout.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg as spla

from .errors import AsymmetryError, NotHurwitz, NotSPD

DEFAULT_TOL = 1e-9


class Inertia(NamedTuple):
    n_pos: int
    n_zero: int
    n_neg: int


def as_sym(M, tol: float = 1e-12) -> np.ndarray:
    """Return ``(M + M.T) / 2`` as a float array.

    Raises
    ------
    AsymmetryError
        If ``M`` is not square or its relative asymmetry exceeds ``tol``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise AsymmetryError(f"expected a non-empty square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > tol * scale:
        raise AsymmetryError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def is_symmetric(M, tol: float = 1e-12) -> bool:
    M = np.asarray(M, dtype=float)
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    return M.ndim == 2 and M.shape[0] == M.shape[1] and bool(np.max(np.abs(M - M.T)) <= tol * scale)


def spec_norm(M) -> float:
    """Largest eigenvalue modulus of a symmetric matrix."""
    w = np.linalg.eigvalsh(as_sym(M))
    return float(np.max(np.abs(w)))


def inertia(M, tol: float = DEFAULT_TOL) -> Inertia:
    """Counts of eigenvalues above ``tol``, within ``±tol`` and below ``-tol``.

    ``M`` need not be symmetric: products ``H @ K`` of a symmetric and an SPD
    matrix have real spectra, and only the real parts are classified.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if is_symmetric(M):
        w = np.linalg.eigvalsh(0.5 * (M + M.T))
    else:
        w = np.linalg.eigvals(M).real
    n_pos = int(np.sum(w > tol))
    n_neg = int(np.sum(w < -tol))
    return Inertia(n_pos, len(w) - n_pos - n_neg, n_neg)


def min_eig(M) -> float:
    return float(np.linalg.eigvalsh(as_sym(M))[0])


def is_spd(M, tol: float = DEFAULT_TOL) -> bool:
    try:
        return min_eig(M) > tol
    except AsymmetryError:
        return False


def sqrt_spd(M, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Principal square root of a symmetric positive definite matrix."""
    M = as_sym(M)
    w, U = np.linalg.eigh(M)
    if w[0] <= tol:
        raise NotSPD(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    S = (U * np.sqrt(w)) @ U.T
    return 0.5 * (S + S.T)


def is_hurwitz(F, tol: float = DEFAULT_TOL) -> bool:
    F = np.atleast_2d(np.asarray(F, dtype=float))
    return bool(np.max(np.linalg.eigvals(F).real) < -tol)


def solve_lyapunov(F, W, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Solve ``F X + X F^T + W = 0`` for Hurwitz ``F`` and symmetric ``W``.

    The solution is the stationary covariance of ``dX = F X dt + G dW`` when
    ``W = G G^T``.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    W = as_sym(W)
    if F.shape != W.shape:
        raise ValueError(f"shape mismatch {F.shape} vs {W.shape}")
    if not is_hurwitz(F, tol):
        raise NotHurwitz("F has an eigenvalue with real part >= -tol")
    X = spla.solve_continuous_lyapunov(F, -W)
    X = 0.5 * (X + X.T)
    res = np.linalg.norm(F @ X + X @ F.T + W, 2)
    if res > 1e-10 * max(spec_norm(W), 1.0) * max(1.0, np.linalg.cond(F)):
        raise ArithmeticError(f"Lyapunov residual too large: {res:.3e}")
    return X
