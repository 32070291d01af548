"""Quadratic-Gaussian solutions of the ergodic HJB-KFP system.

With ``v(x) = x^T Lambda x / 2 + rho x`` and ``m = N(mu, Sigma^{-1})`` the PDE
system collapses to algebraic relations:

    Sigma (k^2 r / 2) Sigma = r A^2 / 2 + Q
    B_cal mu = Q H + (N - 1) B Delta / 2,  B_cal = Q + r A^2 / 2 + (N - 1) B / 2
    Lambda = r (k Sigma + A),  rho = -r k Sigma mu

and the ergodic constant of each player follows from the constant terms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolation, BNotInvertible
from .game_model import Gaussian, GameSpec, eval_Fi, running_cost, validate_assumptions
from .matalg import sqrt_spd

COND_MAX = 1e12


@dataclass(eq=False)
class QGSolution:
    """Coefficients of a quadratic value function and Gaussian invariant law.

    ``per_player`` holds the ergodic constants (``mode`` ending in
    "ergodic") or the constant terms ``c^i`` of the discounted value
    functions.
    """
    Lambda: np.ndarray
    Sigma: np.ndarray
    rho: np.ndarray
    mu: np.ndarray
    per_player: np.ndarray
    mode: str
    ell: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def discounted(self) -> bool:
        return self.mode.endswith("discounted")

    @property
    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.Sigma)

    @property
    def measure(self) -> Gaussian:
        return Gaussian(self.mu, self.Sigma)

    def value(self, x, player: int = 0):
        x = np.asarray(x, dtype=float)
        c = self.per_player[player] if self.discounted else 0.0
        if x.ndim == 1:
            return float(0.5 * x @ self.Lambda @ x + self.rho @ x + c)
        return 0.5 * np.einsum("ni,ij,nj->n", x, self.Lambda, x) + x @ self.rho + c

    def gradient(self, x):
        return np.asarray(x, dtype=float) @ self.Lambda + self.rho


def ensure_assumptions(spec: GameSpec) -> None:
    rep = validate_assumptions(spec)
    if not rep.ok:
        raise AssumptionViolation(rep.failures)


def mean_system(spec: GameSpec, ell: float = 0.0):
    """Matrix and right-hand side of the linear system for the mean."""
    A, r = spec.A, spec.r
    drift = r * A.T @ A / 2.0 - ell * r * A / 2.0
    cost = spec.cost
    if spec.mean_field:
        Bcal = cost.Qhat + drift + cost.Bhat / 2.0
        P = cost.Qhat @ cost.H + cost.Bhat @ cost.Delta / 2.0
    else:
        n1 = spec.N - 1
        Bcal = cost.Q + drift + n1 * cost.B / 2.0
        P = cost.Q @ cost.H + n1 * cost.B @ cost.Delta / 2.0
    return Bcal, P


def solve_mean(Bcal, P) -> tuple[np.ndarray, float]:
    cond = float(np.linalg.cond(Bcal))
    if not np.isfinite(cond) or cond > COND_MAX:
        raise BNotInvertible(cond)
    return np.linalg.solve(Bcal, P), cond


def player_constants(spec: GameSpec, Sigma, mu) -> np.ndarray:
    """``F^i(Sigma, mu) + k r tr(k Sigma + A) - (k^2 r / 2) mu^T Sigma^2 mu``.

    Equals the ergodic constant, or ``ell * c^i`` in the discounted game.
    """
    k, r, A = spec.k, spec.r, spec.A
    d = spec.d
    nu, R = k * np.eye(d), r * np.eye(d)
    cov = np.linalg.inv(Sigma)
    common = (np.trace(nu @ R @ nu @ Sigma + nu @ R @ A)
              - mu @ (Sigma @ nu @ R @ nu @ Sigma / 2.0) @ mu)
    if spec.mean_field:
        return np.array([eval_Fi(spec.cost, None, cov, mu) + common])
    if spec.cost.per_player:
        return np.array([eval_Fi(spec.cost, spec.N, cov, mu, i) + common for i in range(spec.N)])
    return np.full(spec.N, eval_Fi(spec.cost, spec.N, cov, mu) + common)


def solve_ergodic(spec: GameSpec, check: bool = True) -> QGSolution:
    """Unique QG solution of the ergodic N-player or mean-field system.

    Raises
    ------
    AssumptionViolation
        The spec fails the standing assumptions (noise, control cost, cost
        symmetry and positivity, symmetric drift).
    BNotInvertible
        The mean system is singular (condition number above 1e12).
    """
    if spec.ell != 0.0:
        raise ValueError("solve_ergodic needs ell == 0; use solve_discounted")
    if check:
        ensure_assumptions(spec)
    k, r, A = spec.k, spec.r, spec.A
    Sigma = sqrt_spd((2.0 / (k * k * r)) * (r * A.T @ A / 2.0 + spec.Qown))
    Bcal, P = mean_system(spec)
    mu, cond = solve_mean(Bcal, P)
    Lambda = r * (k * Sigma + A)
    Lambda = 0.5 * (Lambda + Lambda.T)
    rho = -r * k * Sigma @ mu
    lam = player_constants(spec, Sigma, mu)
    return QGSolution(Lambda=Lambda, Sigma=Sigma, rho=rho, mu=mu, per_player=lam,
                      mode="mf-ergodic" if spec.mean_field else "ergodic",
                      diagnostics={"cond_B": cond})


def hjb_kfp_residual(sol: QGSolution, spec: GameSpec, xs, players=None) -> tuple[float, float]:
    """Max pointwise residuals of the HJB and KFP equations over ``xs``.

    Each residual is divided by ``1 + |x|^2``; the KFP residual is also
    divided by the (positive) density, which leaves the equation unchanged
    and avoids underflow far from the mean.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    k, r, A = spec.k, spec.r, spec.A
    Lam, rho, Sig, mu = sol.Lambda, sol.rho, sol.Sigma, sol.mu
    weight = 1.0 + np.sum(xs * xs, axis=1)
    grad = xs @ Lam.T + rho
    m = Gaussian(mu, Sig)
    if players is None:
        players = range(spec.n_players) if (not spec.mean_field and spec.cost.per_player) else [0]

    hjb = 0.0
    for i in players:
        f = running_cost(spec, m, i)(xs)
        lhs = (-k * np.trace(Lam) + np.sum(grad * grad, axis=1) / (2.0 * r)
               - np.einsum("ni,ij,nj->n", grad, A, xs))
        if sol.discounted:
            lhs = lhs + sol.ell * sol.value(xs, i)
        else:
            lhs = lhs + sol.per_player[i]
        hjb = max(hjb, float(np.max(np.abs(lhs - f) / weight)))

    z = xs - mu
    Sz = z @ Sig.T
    drift_mat = Lam / r - A
    b = xs @ drift_mat.T + rho / r
    kfp_over_m = (-k * (np.sum(Sz * Sz, axis=1) - np.trace(Sig))
                  + np.sum(Sz * b, axis=1) - np.trace(drift_mat))
    kfp = float(np.max(np.abs(kfp_over_m) / weight))
    return hjb, kfp
