"""Discounted infinite-horizon games.

The inverse covariance solves

    Sigma R_cal Sigma + A_l Sigma + Sigma A_l - Q_l = 0,
    R_cal = (k^2 r / 2) I,  A_l = (l k r / 4) I,  Q_l = Q + r A^2 / 2 - l r A / 2,

and must be positive definite. For large discounts it is not, and the game
has no quadratic-Gaussian solution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ergodic import (QGSolution, ensure_assumptions, mean_system, player_constants,
                      solve_ergodic, solve_mean)
from .errors import (BNotInvertible, DimensionMismatch, DiscountTooLarge, ImaginaryEigenvalues,
                     InfeasibleAtZero, NoSymmetricSolution)
from .game_model import GameSpec
from .matalg import as_sym, min_eig
from .riccati import AREProblem, SpectrumReport, build_hamiltonian, classify_spectrum, solve_are_selected

MIN_ELL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscountedARE:
    calR: np.ndarray
    calA: np.ndarray
    calQ: np.ndarray

    @classmethod
    def from_params(cls, k, r, ell, A, Q) -> "DiscountedARE":
        A = np.asarray(A, dtype=float)
        d = A.shape[0]
        I = np.eye(d)
        calQ = as_sym(Q + r * A.T @ A / 2.0 - ell * r * A / 2.0, tol=1e-10)
        return cls(calR=(k * k * r / 2.0) * I, calA=(ell * k * r / 4.0) * I, calQ=calQ)

    @classmethod
    def from_spec(cls, spec: GameSpec, ell: float | None = None) -> "DiscountedARE":
        return cls.from_params(spec.k, spec.r, spec.ell if ell is None else ell, spec.A, spec.Qown)

    @property
    def problem(self) -> AREProblem:
        return AREProblem(self.calA, self.calR, self.calQ)

    @property
    def hamiltonian(self) -> np.ndarray:
        return build_hamiltonian(self.problem)


@dataclass
class FeasibilityReport:
    feasible: bool
    reason: str  # OK | ImaginaryEigs | NoSPDSolution | BNotInvertible
    spectrum: SpectrumReport | None
    detail: str = ""


def _inverse_covariance(spec: GameSpec, tol: float = 1e-9):
    are = DiscountedARE.from_spec(spec)
    spectrum = classify_spectrum(are.hamiltonian, tol)
    if spectrum.has_imaginary:
        raise ImaginaryEigenvalues(f"discount ell={spec.ell} gives imaginary Hamiltonian eigenvalues")
    try:
        Y = solve_are_selected(are.problem, tol=tol)
    except NoSymmetricSolution as exc:
        raise DiscountTooLarge(f"no symmetric selected solution at ell={spec.ell}: {exc}") from exc
    lo = min_eig(Y)
    if lo <= tol:
        raise DiscountTooLarge(f"inverse covariance not positive definite at ell={spec.ell} "
                               f"(min eigenvalue {lo:.3e})")
    return Y, spectrum


def solve_discounted(spec: GameSpec, check: bool = True) -> QGSolution:
    """QG solution of the discounted N-player or mean-field system.

    ``per_player`` holds the constant terms ``c^i``; ``ell * c^i`` tends to the
    ergodic constants as the discount vanishes.
    """
    ell = spec.ell
    if ell < MIN_ELL:
        raise ValueError("discount too small for the discounted solver; use solve_ergodic")
    if check:
        ensure_assumptions(spec)
    k, r, A = spec.k, spec.r, spec.A
    Sigma, spectrum = _inverse_covariance(spec)
    Bcal, P = mean_system(spec, ell)
    mu, cond = solve_mean(Bcal, P)
    Lambda = r * (k * Sigma + A)
    Lambda = 0.5 * (Lambda + Lambda.T)
    rho = -r * k * Sigma @ mu
    c = player_constants(spec, Sigma, mu) / ell
    return QGSolution(Lambda=Lambda, Sigma=Sigma, rho=rho, mu=mu, per_player=c,
                      mode="mf-discounted" if spec.mean_field else "discounted", ell=ell,
                      diagnostics={"cond_B": cond, "hamiltonian_min_pos": spectrum.min_pos,
                                   "hamiltonian_eigenvalues": spectrum.eigenvalues})


def solve(spec: GameSpec, check: bool = True) -> QGSolution:
    """Dispatch on the discount: ergodic below 1e-12, discounted otherwise."""
    if spec.ell < MIN_ELL:
        return solve_ergodic(spec.replace(ell=0.0), check=check)
    return solve_discounted(spec, check=check)


def check_feasibility(spec: GameSpec) -> FeasibilityReport:
    spectrum = None
    try:
        spectrum = classify_spectrum(DiscountedARE.from_spec(spec).hamiltonian)
        solve_discounted(spec, check=False)
    except ImaginaryEigenvalues as exc:
        return FeasibilityReport(False, "ImaginaryEigs", spectrum, str(exc))
    except DiscountTooLarge as exc:
        return FeasibilityReport(False, "NoSPDSolution", spectrum, str(exc))
    except BNotInvertible as exc:
        return FeasibilityReport(False, "BNotInvertible", spectrum, str(exc))
    return FeasibilityReport(True, "OK", spectrum)


def feasibility_threshold(spec: GameSpec, ell_max: float = 10.0, tol: float = 1e-7) -> float:
    """Bisection estimate of the largest discount with a QG solution.

    Returns ``ell_max`` if every discount up to it is feasible.
    """
    ensure_assumptions(spec.replace(ell=0.0))
    try:
        solve_ergodic(spec.replace(ell=0.0), check=False)
    except BNotInvertible as exc:
        raise InfeasibleAtZero(str(exc)) from exc
    lo = min(1e-8, ell_max / 2.0)
    if not check_feasibility(spec.replace(ell=lo)).feasible:
        raise InfeasibleAtZero(f"no QG solution even at ell={lo}")
    hi = ell_max
    if check_feasibility(spec.replace(ell=hi)).feasible:
        return ell_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if check_feasibility(spec.replace(ell=mid)).feasible:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class HeteroBlocks:
    Btilde: np.ndarray
    cond: float
    invertible: bool


def assemble_hetero_blocks(Qblocks, A, r: float, ell: float = 0.0) -> HeteroBlocks:
    """Stacked mean-system matrix for players with arbitrary cost matrices.

    ``Qblocks`` is a sequence of the N players' full ``Nd x Nd`` cost
    matrices. Block ``(a, b)`` is player a's block ``(a, b)``, plus
    ``A^T R A / 2 - ell R A / 2`` on the diagonal.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = A.shape[0]
    Qs = [np.atleast_2d(np.asarray(Q, dtype=float)) for Q in Qblocks]
    N = len(Qs)
    for a, Q in enumerate(Qs):
        if Q.shape != (N * d, N * d):
            raise DimensionMismatch(f"Q^{a} has shape {Q.shape}, expected {(N * d, N * d)}")
        if np.max(np.abs(Q - Q.T)) > 1e-12 * max(1.0, np.max(np.abs(Q))):
            raise ValueError(f"Q^{a} is not symmetric")
    corr = r * A.T @ A / 2.0 - ell * r * A / 2.0
    Bt = np.empty((N * d, N * d))
    for a in range(N):
        sa = slice(a * d, (a + 1) * d)
        Bt[sa, :] = Qs[a][sa, :]
        Bt[sa, sa] = Bt[sa, sa] + corr
    cond = float(np.linalg.cond(Bt))
    return HeteroBlocks(Btilde=Bt, cond=cond, invertible=bool(np.isfinite(cond) and cond <= 1e12))


def closed_form_inverse_covariance(spec: GameSpec) -> np.ndarray:
    """Inverse covariance from the eigenvalues of ``Q_l`` (independent of the ARE engine).

    With scalar ``nu`` and ``R`` the equation reduces to
    ``(k^2 r / 2) Y^2 + (l k r / 2) Y = Q_l``, solved eigenvalue by eigenvalue:
    ``y = -l / (2k) + sqrt(l^2 / (4 k^2) + 2 q / (k^2 r))``. For ``l = 0``
    this is the ergodic ``Sigma``.
    """
    k, r, ell = spec.k, spec.r, spec.ell
    calQ = DiscountedARE.from_spec(spec).calQ
    q, U = np.linalg.eigh(calQ)
    disc = ell * ell / (4.0 * k * k) + 2.0 * q / (k * k * r)
    if np.any(disc < 0):
        raise ImaginaryEigenvalues("negative discriminant in the closed-form inverse covariance")
    y = -ell / (2.0 * k) + np.sqrt(disc)
    if np.any(y <= 0):
        raise DiscountTooLarge(f"closed-form inverse covariance not positive definite at ell={ell}")
    Y = U @ np.diag(y) @ U.T
    return 0.5 * (Y + Y.T)
