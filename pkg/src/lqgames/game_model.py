"""Game instances, standing-assumption checks and closed-form cost terms.

A game has dynamics ``dX = (A X - alpha) dt + sqrt(2k) dW`` per player,
control cost ``r |alpha|^2 / 2`` and a quadratic running cost in which the
other players enter only through their invariant measures. Costs follow the
"nearly identical players" block layout:

* own block ``Q`` around the reference state ``H``;
* pairwise coupling ``B / 2`` between own deviation and each opponent's
  deviation from the shared reference state ``Delta``;
* ``C_i`` on each opponent's own deviation, ``D_i`` on distinct opponent pairs.

The mean-field family uses the limits ``Qhat, Bhat, Chat, Dhat`` of
``Q^N, (N-1) B^N, (N-1) C^N, (N-1)^2 D^N``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .errors import DimensionMismatch, SingularConversion
from .matalg import is_spd, is_symmetric

Matrix = np.ndarray


def _mat(M, d: int | None = None, name: str = "matrix") -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    if d is not None and M.shape[0] != d:
        raise DimensionMismatch(f"{name} has dimension {M.shape[0]}, expected {d}")
    M = M.copy()
    M.setflags(write=False)
    return M


def _vec(v, d: int, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
    if v.shape != (d,):
        raise DimensionMismatch(f"{name} has length {v.size}, expected {d}")
    v = v.copy()
    v.setflags(write=False)
    return v


def _mats(M, d: int, name: str):
    """A single matrix or a per-player list of matrices."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 3:
        return tuple(_mat(m, d, f"{name}[{i}]") for i, m in enumerate(arr))
    return _mat(M, d, name)


@dataclass(frozen=True, eq=False)
class CostStructure:
    """Cost blocks of an N-player game with nearly identical players.

    ``C`` and ``D`` may be per-player tuples; everything else is shared.
    """
    Q: Matrix
    B: Matrix
    C: Union[Matrix, tuple]
    D: Union[Matrix, tuple]
    H: np.ndarray
    Delta: np.ndarray

    def __post_init__(self):
        Q = _mat(self.Q, name="Q")
        d = Q.shape[0]
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "B", _mat(self.B, d, "B"))
        object.__setattr__(self, "C", _mats(self.C, d, "C"))
        object.__setattr__(self, "D", _mats(self.D, d, "D"))
        object.__setattr__(self, "H", _vec(self.H, d, "H"))
        object.__setattr__(self, "Delta", _vec(self.Delta, d, "Delta"))

    @property
    def d(self) -> int:
        return self.Q.shape[0]

    @property
    def per_player(self) -> bool:
        return isinstance(self.C, tuple) or isinstance(self.D, tuple)

    def C_i(self, i: int) -> Matrix:
        return self.C[i] if isinstance(self.C, tuple) else self.C

    def D_i(self, i: int) -> Matrix:
        return self.D[i] if isinstance(self.D, tuple) else self.D

    def n_listed(self) -> int | None:
        lens = {len(x) for x in (self.C, self.D) if isinstance(x, tuple)}
        if len(lens) > 1:
            raise DimensionMismatch("per-player C and D lists differ in length")
        return lens.pop() if lens else None


@dataclass(frozen=True, eq=False)
class MFCost:
    Qhat: Matrix
    Bhat: Matrix
    Chat: Matrix
    Dhat: Matrix
    H: np.ndarray
    Delta: np.ndarray

    def __post_init__(self):
        Q = _mat(self.Qhat, name="Qhat")
        d = Q.shape[0]
        object.__setattr__(self, "Qhat", Q)
        for name in ("Bhat", "Chat", "Dhat"):
            object.__setattr__(self, name, _mat(getattr(self, name), d, name))
        object.__setattr__(self, "H", _vec(self.H, d, "H"))
        object.__setattr__(self, "Delta", _vec(self.Delta, d, "Delta"))

    @property
    def d(self) -> int:
        return self.Qhat.shape[0]


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A full game instance. ``N=None`` marks the mean-field game.

    ``A`` is stored as given (not symmetrized) so that validation can report
    an asymmetric drift. The noise is ``sigma = sqrt(2k) I`` so that
    ``sigma^T sigma / 2 = k I``.
    """
    A: Matrix
    k: float
    r: float
    cost: Union[CostStructure, MFCost]
    N: int | None = 1
    ell: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "A", _mat(self.A, self.cost.d, "A"))
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "ell", float(self.ell))
        if self.N is None and not isinstance(self.cost, MFCost):
            raise TypeError("mean-field spec (N=None) needs an MFCost")
        if self.N is not None and not isinstance(self.cost, CostStructure):
            raise TypeError("N-player spec needs a CostStructure")

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def mean_field(self) -> bool:
        return self.N is None

    @property
    def n_players(self) -> int:
        return 1 if self.N is None else int(self.N)

    @property
    def sigma(self) -> Matrix:
        return np.sqrt(2.0 * self.k) * np.eye(self.d)

    @property
    def Qown(self) -> Matrix:
        """Own-state cost block (``Q`` or ``Qhat``)."""
        return self.cost.Qhat if self.mean_field else self.cost.Q

    def replace(self, **changes) -> "GameSpec":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """``x -> x^T M x + b^T x + c``; accepts a single point or a batch (n, d)."""
    M: Matrix
    b: np.ndarray
    c: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(x @ self.M @ x + self.b @ x + self.c)
        return np.einsum("ni,ij,nj->n", x, self.M, x) + x @ self.b + self.c

    def gradient(self, x):
        return 2.0 * np.asarray(x) @ self.M + self.b


@dataclass(frozen=True, eq=False)
class Gaussian:
    mean: np.ndarray
    inv_cov: Matrix

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        inv_cov = np.atleast_2d(np.asarray(self.inv_cov, dtype=float))
        if not is_spd(inv_cov):
            raise ValueError("Gaussian inverse covariance must be positive definite")
        object.__setattr__(self, "inv_cov", inv_cov)

    @property
    def covariance(self) -> Matrix:
        return np.linalg.inv(self.inv_cov)

    def pdf(self, x):
        x = np.atleast_2d(x)
        d = self.mean.size
        z = x - self.mean
        q = np.einsum("ni,ij,nj->n", z, self.inv_cov, z)
        norm = np.sqrt(np.linalg.det(self.inv_cov) / (2 * np.pi) ** d)
        return norm * np.exp(-0.5 * q)


@dataclass(frozen=True, eq=False)
class Dirac:
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.atleast_1d(np.asarray(self.point, dtype=float)))

    @property
    def mean(self) -> np.ndarray:
        return self.point

    @property
    def covariance(self) -> Matrix:
        return np.zeros((self.point.size, self.point.size))


DistributionDesc = Union[Gaussian, Dirac]


# ---------------------------------------------------------------------------
# validation

@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [f"{c.name}: {c.detail}" if c.detail else c.name
                for c in self.checks if not c.passed]

    def add(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))


def validate_assumptions(spec: GameSpec, tol: float = 1e-9) -> ValidationReport:
    """Itemized check of the standing assumptions for ``spec``."""
    from .riccati import riccati_sylvester_check

    rep = ValidationReport()
    rep.add("sigma invertible", spec.k > 0, f"k={spec.k}")
    rep.add("R positive definite", spec.r > 0, f"r={spec.r}")
    rep.add("discount nonnegative", spec.ell >= 0, f"ell={spec.ell}")

    cost = spec.cost
    if spec.mean_field:
        blocks = {"Qhat": cost.Qhat, "Bhat": cost.Bhat, "Chat": cost.Chat, "Dhat": cost.Dhat}
        rep.add("cost blocks symmetric", all(is_symmetric(M) for M in blocks.values()))
        rep.add("Qhat positive definite", is_spd(cost.Qhat, tol))
    else:
        N = spec.N
        rep.add("N positive integer", isinstance(N, (int, np.integer)) and N >= 1, f"N={N}")
        listed = cost.n_listed()
        if listed is not None:
            rep.add("per-player C/D lists match N", listed == N, f"{listed} entries for N={N}")
        mats = [cost.Q, cost.B]
        n = listed or 1
        mats += [cost.C_i(i) for i in range(n)] + [cost.D_i(i) for i in range(n)]
        rep.add("cost blocks symmetric", all(is_symmetric(M) for M in mats))
        rep.add("Q positive definite", is_spd(cost.Q, tol))

    a_sym = is_symmetric(spec.A)
    rep.add("A symmetric", a_sym)
    rep.add("nu, R scalar multiples of identity", True, "nu = k I, R = r I by construction")

    Qown = spec.Qown
    if a_sym and spec.k > 0 and spec.r > 0 and is_spd(Qown, tol):
        if spec.d <= 6:
            d = spec.d
            sylv = riccati_sylvester_check(spec.A, spec.k * np.eye(d), spec.r * np.eye(d), Qown, tol=tol)
            rep.add("Riccati-Sylvester property", sylv.holds,
                    f"max residual {max(sylv.residuals, default=0.0):.1e} over {len(sylv.solutions)} SPD solution(s)")
        else:
            rep.add("Riccati-Sylvester property", True, "automatic for symmetric A and scalar nu, R; enumeration skipped for d > 6")
    else:
        rep.add("Riccati-Sylvester property", False, "not checked: prerequisites failed")
    return rep


# ---------------------------------------------------------------------------
# scaling

def scaled_costs(mf: MFCost, N: int, q_scaling: str = "inverse_n") -> CostStructure:
    """Finite-N cost blocks whose natural scaling converges to ``mf``.

    ``q_scaling="inverse_n"`` uses ``Q^N = Qhat (1 + 1/N)``; ``"constant"``
    keeps ``Q^N = Qhat``.
    """
    if N < 2:
        raise ValueError("scaled costs need N >= 2")
    if q_scaling == "inverse_n":
        sQ = 1.0 + 1.0 / N
    elif q_scaling == "constant":
        sQ = 1.0
    else:
        raise ValueError(f"unknown q_scaling {q_scaling!r}")
    return CostStructure(Q=mf.Qhat * sQ, B=mf.Bhat / (N - 1), C=mf.Chat / (N - 1),
                         D=mf.Dhat / (N - 1) ** 2, H=mf.H, Delta=mf.Delta)


def finite_game(mf_spec: GameSpec, N: int, q_scaling: str = "inverse_n") -> GameSpec:
    """The N-player member of the scaled family converging to ``mf_spec``."""
    if not mf_spec.mean_field:
        raise ValueError("finite_game expects a mean-field spec")
    return GameSpec(A=mf_spec.A, k=mf_spec.k, r=mf_spec.r, ell=mf_spec.ell, N=N,
                    cost=scaled_costs(mf_spec.cost, N, q_scaling))


# ---------------------------------------------------------------------------
# closed-form cost terms

def eval_Fi(cost, N: int | None, cov, mu, player: int = 0) -> float:
    """Constant term of the averaged running cost at a symmetric profile.

    ``cov`` is the opponents' covariance (the inverse of the Gaussian's
    precision); pass ``None`` or zeros for Dirac opponents. With an
    ``MFCost`` the mean-field counterpart is returned and ``N`` is ignored.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    H, Delta = cost.H, cost.Delta
    e = mu - Delta
    d = H.size
    cov = np.zeros((d, d)) if cov is None else np.atleast_2d(np.asarray(cov, dtype=float))
    if isinstance(cost, MFCost):
        return float(H @ cost.Qhat @ H - H @ cost.Bhat @ e
                     + np.trace(cost.Chat @ cov) + e @ (cost.Chat + cost.Dhat) @ e)
    C, D = cost.C_i(player), cost.D_i(player)
    n1 = N - 1
    return float(H @ cost.Q @ H - n1 * (H @ cost.B @ e)
                 + n1 * np.trace(C @ cov) + n1 * (e @ C @ e) + n1 * (N - 2) * (e @ D @ e))


def fi_quadratic(cost: CostStructure, N: int, others: DistributionDesc, player: int = 0) -> QuadraticForm:
    """Running cost of ``player`` as a quadratic in its own state, with every
    opponent distributed as ``others``."""
    mu, cov = others.mean, others.covariance
    e = mu - cost.Delta
    H, Q, B = cost.H, cost.Q, cost.B
    C, D = cost.C_i(player), cost.D_i(player)
    n1 = N - 1
    b = -2.0 * Q @ H + n1 * B @ e
    c = (H @ Q @ H - n1 * (H @ B @ e) + n1 * (np.trace(C @ cov) + e @ C @ e)
         + n1 * (N - 2) * (e @ D @ e))
    return QuadraticForm(Q, b, float(c))


def eval_fi_gaussian(cost: CostStructure, N: int, x, others: DistributionDesc, player: int = 0):
    return fi_quadratic(cost, N, others, player)(x)


def vhat_quadratic(mf: MFCost, m: DistributionDesc) -> QuadraticForm:
    """Mean-field cost operator applied to ``m``, as a quadratic in ``x``."""
    mu, cov = m.mean, m.covariance
    e = mu - mf.Delta
    H = mf.H
    b = -2.0 * mf.Qhat @ H + mf.Bhat @ e
    c = (H @ mf.Qhat @ H - H @ mf.Bhat @ e + np.trace(mf.Chat @ cov)
         + e @ (mf.Chat + mf.Dhat) @ e)
    return QuadraticForm(mf.Qhat, b, float(c))


def running_cost(spec: GameSpec, m: DistributionDesc, player: int = 0) -> QuadraticForm:
    """``f^i`` (N players) or ``Vhat[m]`` (mean field) as a quadratic form."""
    if spec.mean_field:
        return vhat_quadratic(spec.cost, m)
    return fi_quadratic(spec.cost, spec.N, m, player)


# ---------------------------------------------------------------------------
# conversion from costs coupled through the empirical mean

@dataclass(frozen=True, eq=False)
class HCMConversion:
    """Blocks of ``(X^i - Gamma mean(X) - eta)^T Qb (...)`` in the per-player layout.

    ``own_ref`` is the reference state for the player's own block; opponent
    references are zero.
    """
    N: int
    Qii: Matrix
    Qij: Matrix
    Qjk: Matrix
    own_ref: np.ndarray

    def block_matrix(self, i: int = 0) -> Matrix:
        """Full ``Nd x Nd`` cost matrix of player ``i``."""
        d = self.Qii.shape[0]
        M = np.tile(self.Qjk, (self.N, self.N))
        sl = slice(i * d, (i + 1) * d)
        for j in range(self.N):
            sj = slice(j * d, (j + 1) * d)
            M[sl, sj] = self.Qij
            M[sj, sl] = self.Qij.T
        M[sl, sl] = self.Qii
        return M

    def reference(self, i: int = 0) -> np.ndarray:
        d = self.Qii.shape[0]
        ref = np.zeros(self.N * d)
        ref[i * d:(i + 1) * d] = self.own_ref
        return ref

    def to_cost_structure(self) -> CostStructure:
        """Nearly-identical form; requires a symmetric cross block."""
        if not is_symmetric(self.Qij, 1e-12):
            raise ValueError("cross block is not symmetric; no nearly-identical form")
        return CostStructure(Q=self.Qii, B=2.0 * self.Qij, C=self.Qjk, D=self.Qjk,
                             H=self.own_ref, Delta=np.zeros_like(self.own_ref))


def convert_hcm_cost(Gamma, eta, Qb, N: int) -> HCMConversion:
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    Qb = _mat(Qb, Gamma.shape[0], "Qb")
    d = Qb.shape[0]
    eta = _vec(eta, d, "eta")
    if Gamma.shape != (d, d):
        raise DimensionMismatch("Gamma must be d x d")
    M = np.eye(d) - Gamma / N
    if np.linalg.cond(M) > 1e12:
        raise SingularConversion("I - Gamma/N is singular")
    G = Gamma / N
    Qii = M.T @ Qb @ M
    Qij = -M.T @ Qb @ G
    Qjk = G.T @ Qb @ G
    own_ref = np.linalg.solve(M, eta)
    return HCMConversion(N=N, Qii=0.5 * (Qii + Qii.T), Qij=Qij, Qjk=0.5 * (Qjk + Qjk.T), own_ref=own_ref)


def hcm_cost_direct(Gamma, eta, Qb, X: Sequence, i: int) -> float:
    """Direct evaluation of the empirical-mean cost for player ``i`` (oracle)."""
    X = np.asarray(X, dtype=float)
    xi = X[i] - np.asarray(Gamma) @ X.mean(axis=0) - np.asarray(eta)
    return float(xi @ np.asarray(Qb) @ xi)
