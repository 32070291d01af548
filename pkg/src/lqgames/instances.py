"""Random and benchmark game instances for tests and experiments."""
from __future__ import annotations

import numpy as np

from .game_model import CostStructure, GameSpec, MFCost
from .riccati import AREProblem


def random_sym(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    M = rng.standard_normal((d, d))
    return scale * 0.5 * (M + M.T)


def random_spd(rng: np.random.Generator, d: int, lo: float = 0.5, hi: float = 2.0) -> np.ndarray:
    """Random orthogonal eigenbasis with eigenvalues uniform in ``[lo, hi]``."""
    U, _ = np.linalg.qr(rng.standard_normal((d, d)))
    M = U @ np.diag(rng.uniform(lo, hi, d)) @ U.T
    return 0.5 * (M + M.T)


def random_psd(rng: np.random.Generator, d: int, hi: float = 0.5) -> np.ndarray:
    return random_spd(rng, d, 0.0, hi)


def random_are(rng: np.random.Generator, d: int) -> AREProblem:
    """ARE with zero drift term and SPD quadratic and constant terms."""
    return AREProblem(np.zeros((d, d)), random_spd(rng, d, 0.2, 3.0), random_spd(rng, d, 0.2, 3.0))


def _dyn(rng, d, a_scale):
    return (random_sym(rng, d, a_scale), float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)))


def random_game(rng: np.random.Generator, d: int, N: int = 3, ell: float = 0.0,
                a_scale: float = 0.5, per_player: bool = False) -> GameSpec:
    """Random N-player instance satisfying the standing assumptions.

    Coupling blocks are positive semidefinite and small, which keeps the
    mean system well conditioned; ``a_scale`` bounds the drift.
    """
    A, k, r = _dyn(rng, d, a_scale)
    n1 = max(N - 1, 1)
    C = tuple(random_psd(rng, d) / n1 for _ in range(N)) if per_player else random_psd(rng, d) / n1
    D = tuple(random_psd(rng, d) / n1 ** 2 for _ in range(N)) if per_player else random_psd(rng, d) / n1 ** 2
    cost = CostStructure(Q=random_spd(rng, d), B=random_psd(rng, d) / n1, C=C, D=D,
                         H=rng.standard_normal(d), Delta=rng.standard_normal(d))
    return GameSpec(A=A, k=k, r=r, cost=cost, N=N, ell=ell)


def random_mf_game(rng: np.random.Generator, d: int, ell: float = 0.0,
                   a_scale: float = 0.5) -> GameSpec:
    A, k, r = _dyn(rng, d, a_scale)
    cost = MFCost(Qhat=random_spd(rng, d), Bhat=random_psd(rng, d), Chat=random_psd(rng, d),
                  Dhat=random_psd(rng, d), H=rng.standard_normal(d), Delta=rng.standard_normal(d))
    return GameSpec(A=A, k=k, r=r, cost=cost, N=None, ell=ell)


def _scalar_cost(Q=0.5, H=0.0, B=0.0, C=0.0, D=0.0, Delta=0.0):
    m = lambda v: np.array([[float(v)]])
    return CostStructure(Q=m(Q), B=m(B), C=m(C), D=m(D), H=[H], Delta=[Delta])


def scalar_game(k=1.0, r=1.0, A=0.0, Q=0.5, H=0.0, ell=0.0, N=1, **cost) -> GameSpec:
    """Scalar benchmark; defaults give Sigma = Lambda = lambda = 1, mu = rho = 0."""
    return GameSpec(A=[[A]], k=k, r=r, cost=_scalar_cost(Q=Q, H=H, **cost), N=N, ell=ell)


def scalar_mf_game(k=1.0, r=1.0, A=0.0, Qhat=0.5, H=0.0, ell=0.0,
                   Bhat=0.0, Chat=0.0, Dhat=0.0, Delta=0.0) -> GameSpec:
    m = lambda v: np.array([[float(v)]])
    cost = MFCost(Qhat=m(Qhat), Bhat=m(Bhat), Chat=m(Chat), Dhat=m(Dhat), H=[H], Delta=[Delta])
    return GameSpec(A=[[A]], k=k, r=r, cost=cost, N=None, ell=ell)
