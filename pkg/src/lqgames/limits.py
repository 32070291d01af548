"""Singular limits: vanishing discount, vanishing noise, cheap control, N -> inf.

For ergodic games the substitution ``V = k sqrt(r) Sigma`` gives

    V^2 = 2 Q + r A^2,   (V^2 + (N-1) B) mu = 2 Q H + (N-1) B Delta,
    Lambda = sqrt(r) (V + sqrt(r) A),   rho = -sqrt(r) V mu,

none of which involve ``k``. Only the ergodic constant and the Gaussian
precision ``V / (k sqrt(r))`` depend on the noise level, so the ``k -> 0``
limit is explicit. As ``r -> 0`` the value function vanishes and ``V`` tends
to ``sqrt(2 Q)``. In both cases the invariant law collapses to a Dirac mass.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .discounted import solve, solve_discounted
from .ergodic import QGSolution, ensure_assumptions, solve_ergodic, solve_mean
from .game_model import Dirac, GameSpec, QuadraticForm, eval_Fi, finite_game
from .matalg import spec_norm, sqrt_spd

N_GRID = 9


def default_sequence(param: str, n: int = N_GRID) -> np.ndarray:
    """Default grids: ell = 0.2 * 2^-j, k = r = 2^-j, N = 10 * 2^j."""
    j = np.arange(n)
    if param in ("discount", "ell"):
        return 0.2 * 2.0 ** -j
    if param in ("noise", "k", "cheap", "r"):
        return 2.0 ** -j
    if param == "N":
        return 10 * 2 ** j
    raise ValueError(f"unknown parameter {param!r}")


@dataclass(eq=False)
class LimitTriple:
    """Limit value function, invariant measure and ergodic constant.

    ``value_fn`` is ``x^T (Lambda / 2) x + rho x``; its gradient is
    ``sqrt(r) V (x - mu) + r A x`` in the noise limit and zero in the
    cheap-control limit.
    """
    value_fn: QuadraticForm
    measure: Dirac
    lam: float
    V: np.ndarray
    Lambda: np.ndarray
    rho: np.ndarray

    @property
    def mu(self) -> np.ndarray:
        return self.measure.point


def _coupling(spec: GameSpec):
    """(Q, effective B, F-evaluator) for either N players or the mean field."""
    cost = spec.cost
    if spec.mean_field:
        return cost.Qhat, cost.Bhat, lambda cov, mu, i=0: eval_Fi(cost, None, cov, mu)
    n1 = spec.N - 1
    return cost.Q, n1 * cost.B, lambda cov, mu, i=0: eval_Fi(cost, spec.N, cov, mu, i)


def _mean_from_V(spec: GameSpec, V2):
    Q, Beff, _ = _coupling(spec)
    H, Delta = spec.cost.H, spec.cost.Delta
    return solve_mean(V2 + Beff, 2.0 * Q @ H + Beff @ Delta)


def v_family_solve(spec: GameSpec, check: bool = True) -> QGSolution:
    """Ergodic QG solution computed through ``V = k sqrt(r) Sigma``.

    ``diagnostics["V"]`` holds ``V``; ``Sigma`` is ``V / (k sqrt(r))``.
    """
    if spec.ell != 0.0:
        raise ValueError("the V-parameterization covers the ergodic game only")
    if check:
        ensure_assumptions(spec)
    k, r, A = spec.k, spec.r, spec.A
    sr = np.sqrt(r)
    Q, _, F = _coupling(spec)
    V = sqrt_spd(2.0 * Q + r * A @ A)
    mu, cond = _mean_from_V(spec, V @ V)
    Lambda = sr * (V + sr * A)
    Lambda = 0.5 * (Lambda + Lambda.T)
    rho = -sr * V @ mu
    cov = k * sr * np.linalg.inv(V)
    tail = -0.5 * mu @ V @ V @ mu + k * sr * np.trace(V + sr * A)
    n = 1 if spec.mean_field or not spec.cost.per_player else spec.N
    lam = np.array([F(cov, mu, i) + tail for i in range(n)])
    if n == 1 and not spec.mean_field:
        lam = np.full(spec.N, lam[0])
    return QGSolution(Lambda=Lambda, Sigma=V / (k * sr), rho=rho, mu=mu, per_player=lam,
                      mode="mf-ergodic" if spec.mean_field else "ergodic",
                      diagnostics={"V": V, "cond_B": cond})


def _dirac_triple(spec: GameSpec, V, Lambda, rho, mu) -> LimitTriple:
    _, _, F = _coupling(spec)
    lam = F(None, mu) - 0.5 * mu @ V @ V @ mu
    return LimitTriple(value_fn=QuadraticForm(0.5 * Lambda, rho, 0.0), measure=Dirac(mu),
                       lam=float(lam), V=V, Lambda=Lambda, rho=rho)


def deterministic_limit(spec: GameSpec) -> LimitTriple:
    """Ergodic solution as the noise level ``k -> 0``."""
    r, A = spec.r, spec.A
    sr = np.sqrt(r)
    Q, _, _ = _coupling(spec)
    V = sqrt_spd(2.0 * Q + r * A @ A)
    mu, _ = _mean_from_V(spec, V @ V)
    Lambda = sr * (V + sr * A)
    return _dirac_triple(spec, V, 0.5 * (Lambda + Lambda.T), -sr * V @ mu, mu)


def cheap_control_limit(spec: GameSpec) -> LimitTriple:
    """Ergodic solution as the control cost ``r -> 0``."""
    Q, _, _ = _coupling(spec)
    V = sqrt_spd(2.0 * Q)
    mu, _ = _mean_from_V(spec, V @ V)
    d = spec.d
    return _dirac_triple(spec, V, np.zeros((d, d)), np.zeros(d), mu)


# ---------------------------------------------------------------------------
# convergence reports

COEFFS_DISCOUNT = ("Sigma", "mu", "Lambda", "rho", "lam")
COEFFS_DIRAC = ("V", "mu", "Lambda", "rho", "lam")


def _distance(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.ndim == 2:
        D = a - b
        return spec_norm(0.5 * (D + D.T))
    return float(np.max(np.abs(a - b))) if a.size else 0.0


@dataclass
class ConvergenceReport:
    param: str
    values: list
    errors: dict
    tol: float = 1e-3
    N: int | None = None

    @property
    def decayed(self) -> dict:
        """Final error below ``tol`` and no step grows by more than a factor 2."""
        out = {}
        for name, errs in self.errors.items():
            e = np.asarray(errs)
            steps_ok = bool(np.all(e[1:] <= 2.0 * e[:-1] + 1e-15))
            out[name] = bool(e[-1] <= self.tol and steps_ok)
        return out

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf)
        w.writerow(["param", "N", "coefficient", "error"])
        for name, errs in self.errors.items():
            for v, e in zip(self.values, errs):
                w.writerow([repr(float(v)), "mf" if self.N is None else self.N, name, repr(float(e))])
        return buf.getvalue() if fh is None else ""


def _coeffs(sol: QGSolution, lam_key: str = "lam") -> dict:
    lam = sol.per_player * sol.ell if sol.discounted else sol.per_player
    return {"Sigma": sol.Sigma, "mu": sol.mu, "Lambda": sol.Lambda, "rho": sol.rho, lam_key: lam}


def vanishing_discount_limit(spec: GameSpec, ell_seq=None, tol: float = 1e-3) -> ConvergenceReport:
    """Distances of discounted solutions from the ergodic one along ``ell_seq``.

    The ``ell_c`` entry is ``max_i |ell c^i - lambda^i|``.
    """
    ell_seq = default_sequence("ell") if ell_seq is None else np.asarray(ell_seq, dtype=float)
    base = spec.replace(ell=0.0)
    erg = solve_ergodic(base)
    target = _coeffs(erg, "ell_c")
    errors = {name: [] for name in target}
    for ell in ell_seq:
        got = _coeffs(solve_discounted(base.replace(ell=float(ell)), check=False), "ell_c")
        for name in errors:
            errors[name].append(_distance(got[name], target[name]))
    return ConvergenceReport(param="ell", values=list(map(float, ell_seq)), errors=errors,
                             tol=tol, N=spec.N)


def _family_coeffs(spec: GameSpec, param: str, value: float) -> dict:
    """Coefficients of the ergodic/discounted solution at one parameter value."""
    if param == "discount":
        sol = solve_discounted(spec.replace(ell=value), check=False)
        c = _coeffs(sol)
    else:
        s = spec.replace(ell=0.0, **({"k": value} if param == "noise" else {"r": value}))
        sol = v_family_solve(s, check=False)
        c = _coeffs(sol)
        c["V"] = sol.diagnostics["V"]
    c["lam"] = np.max(c["lam"]) if not spec.mean_field else c["lam"][0]
    return c


def _limit_coeffs(spec: GameSpec, param: str) -> dict:
    if param == "discount":
        sol = solve_ergodic(spec.replace(ell=0.0), check=False)
        c = _coeffs(sol)
        c["lam"] = np.max(c["lam"])
        return c
    trip = deterministic_limit(spec) if param == "noise" else cheap_control_limit(spec)
    return {"V": trip.V, "mu": trip.mu, "Lambda": trip.Lambda, "rho": trip.rho, "lam": trip.lam}


@dataclass
class CommutingReport:
    param: str
    param_values: list
    N_values: list
    limit: dict           # analytic mean-field limit (N first, then param)
    path_param: dict      # mean-field family along param_values, errors to the limit
    path_N: dict          # finite N at the smallest param, errors to the limit
    path_N_exact: dict    # finite-N analytic limit along N_values, errors to the limit
    discrepancy: dict     # coefficientwise gap at the finest grid point
    tol: float = 1e-3

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.discrepancy.values())

    def to_rows(self):
        for name, errs in self.path_param.items():
            for p, e in zip(self.param_values, errs):
                yield (p, "mf", name, e)
        pmin = self.param_values[-1]
        for name, errs in self.path_N.items():
            for n, e in zip(self.N_values, errs):
                yield (pmin, n, name, e)


def commuting_diagram_check(spec: GameSpec, param: str, param_seq=None, N_seq=None,
                            tol: float = 1e-3, q_scaling: str = "inverse_n") -> CommutingReport:
    """Compare the two iterated limits (N -> inf, param -> 0) of a mean-field family.

    ``param`` is one of "discount", "noise", "cheap". Path one takes the
    analytic mean-field limit; path two solves the scaled N-player game at
    the smallest parameter value and takes the largest N.
    """
    if not spec.mean_field:
        raise ValueError("commuting_diagram_check expects a mean-field spec")
    if param not in ("discount", "noise", "cheap"):
        raise ValueError(f"unknown limit parameter {param!r}")
    ensure_assumptions(spec.replace(ell=0.0))
    ps = np.sort(np.asarray(default_sequence(param) if param_seq is None else param_seq, dtype=float))[::-1]
    Ns = sorted(int(n) for n in (default_sequence("N") if N_seq is None else N_seq))

    limit = _limit_coeffs(spec, param)
    names = list(limit)
    path_param = {n: [] for n in names}
    for p in ps:
        got = _family_coeffs(spec, param, float(p))
        for n in names:
            path_param[n].append(_distance(got[n], limit[n]))

    path_N = {n: [] for n in names}
    path_N_exact = {n: [] for n in names}
    finest = None
    for N in Ns:
        fg = finite_game(spec, N, q_scaling)
        got = _family_coeffs(fg, param, float(ps[-1]))
        exact = _limit_coeffs(fg, param)
        for n in names:
            path_N[n].append(_distance(got[n], limit[n]))
            path_N_exact[n].append(_distance(exact[n], limit[n]))
        finest = got
    discrepancy = {n: _distance(finest[n], limit[n]) for n in names}
    return CommutingReport(param=param, param_values=list(map(float, ps)), N_values=Ns,
                           limit=limit, path_param=path_param, path_N=path_N,
                           path_N_exact=path_N_exact, discrepancy=discrepancy, tol=tol)


@dataclass
class MeanFieldReport:
    """Distances of the scaled N-player solutions from the mean-field one."""
    N_values: list
    errors: dict
    mode: str

    def ratios(self) -> dict:
        """``err(N_{j+1}) / err(N_j)`` per coefficient (0.5 for first-order decay when N doubles)."""
        return {n: list(np.asarray(e[1:]) / np.asarray(e[:-1])) for n, e in self.errors.items()}

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf)
        w.writerow(["param", "N", "coefficient", "error"])
        for name, errs in self.errors.items():
            for n, e in zip(self.N_values, errs):
                w.writerow([self.mode, n, name, repr(float(e))])
        return buf.getvalue() if fh is None else ""


def mean_field_convergence(spec: GameSpec, N_seq=None, q_scaling: str = "inverse_n") -> MeanFieldReport:
    """Solve the scaled N-player games along ``N_seq`` and measure the gap to the mean field.

    The mode (ergodic or discounted) follows ``spec.ell``. The ``lam`` entry
    is the ergodic constant, or ``ell c`` in the discounted game.
    """
    if not spec.mean_field:
        raise ValueError("mean_field_convergence expects a mean-field spec")
    Ns = sorted(int(n) for n in (default_sequence("N") if N_seq is None else N_seq))
    target = _coeffs(solve(spec))
    errors = {n: [] for n in target}
    for N in Ns:
        got = _coeffs(solve(finite_game(spec, N, q_scaling), check=False))
        for n in errors:
            errors[n].append(_distance(got[n], target[n]))
    mode = "discounted" if spec.ell > 0 else "ergodic"
    return MeanFieldReport(N_values=Ns, errors=errors, mode=mode)


def parameter_limit(spec: GameSpec, param: str, seq=None, tol: float = 1e-3) -> ConvergenceReport:
    """Distances of the ergodic family along ``seq`` from its analytic limit.

    ``param`` is "noise" (``k -> 0``) or "cheap" (``r -> 0``); coefficients
    are ``V, mu, Lambda, rho, lam``.
    """
    if param not in ("noise", "cheap"):
        raise ValueError(f"unknown limit parameter {param!r}")
    seq = default_sequence(param) if seq is None else np.asarray(seq, dtype=float)
    base = spec.replace(ell=0.0)
    ensure_assumptions(base)
    limit = _limit_coeffs(base, param)
    errors = {n: [] for n in limit}
    for p in seq:
        got = _family_coeffs(base, param, float(p))
        for n in errors:
            errors[n].append(_distance(got[n], limit[n]))
    return ConvergenceReport(param="k" if param == "noise" else "r", values=list(map(float, seq)),
                             errors=errors, tol=tol, N=spec.N)
