"""Monte Carlo verification of equilibria by Euler-Maruyama simulation.

A player using the affine control ``alpha(x) = K x + c`` follows

    dX = ((A - K) X - c) dt + sqrt(2k) dW.

Every path ``p`` draws its noise from its own Philox stream keyed by
``(seed, p)``, so results do not depend on how paths are split into blocks
or spread over threads. All per-path arithmetic is elementwise in a fixed
order and sums over paths are taken on the assembled per-path array, which
makes reruns bit-identical.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .discounted import solve
from .ergodic import QGSolution
from .errors import NotAdmissible, TruncationTooCoarse, UnstableStep
from .game_model import Gaussian, GameSpec, QuadraticForm, running_cost
from .matalg import is_hurwitz, spec_norm

N_BATCHES = 20
CHUNK_STEPS = 1000
SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class FeedbackLaw:
    """Affine control ``alpha(x) = K x + c``."""
    K: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if K.shape != (c.size, c.size):
            raise ValueError(f"K has shape {K.shape}, c has size {c.size}")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "c", c)

    def closed_loop(self, A) -> np.ndarray:
        return np.asarray(A, dtype=float) - self.K

    def admissible(self, A) -> bool:
        return is_hurwitz(self.closed_loop(A))

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.K.T + self.c

    def perturbed(self, dK=0.0, dc=0.0) -> "FeedbackLaw":
        d = self.c.size
        return FeedbackLaw(self.K + dK * np.eye(d), self.c + dc)


def equilibrium_law(sol: QGSolution, r: float) -> FeedbackLaw:
    """The equilibrium feedback ``K = Lambda / r``, ``c = rho / r``."""
    return FeedbackLaw(sol.Lambda / r, sol.rho / r)


@dataclass(frozen=True)
class SimConfig:
    dt: float
    T: float
    n_paths: int
    seed: int
    x0: tuple | np.ndarray | float = 0.0
    block_size: int = 2500
    n_workers: int = 1

    def __post_init__(self):
        if not self.dt > 0 or not self.T > 0:
            raise ValueError("dt and T must be positive")
        if self.T < self.dt:
            raise ValueError("horizon shorter than one step")
        if int(self.n_paths) < 2:
            raise ValueError("n_paths must be at least 2")
        if self.block_size < 1 or self.n_workers < 1:
            raise ValueError("block_size and n_workers must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def start(self, d: int) -> np.ndarray:
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.size == 1:
            return np.full(d, x0[0])
        if x0.size != d:
            raise ValueError(f"x0 has {x0.size} entries, state dimension is {d}")
        return x0


@dataclass
class SimReport:
    """Monte Carlo summary. ``estimate`` is None for pure moment runs."""
    estimate: float | None
    std_error: float | None
    n_paths: int
    elapsed: float
    mean: np.ndarray
    cov: np.ndarray
    mean_se: np.ndarray
    cov_se: np.ndarray
    seed: int
    mode: str = "moments"
    bias_bound: float = 0.0
    per_path: np.ndarray | None = field(default=None, repr=False)

    def summary(self) -> str:
        if self.estimate is None:
            return f"mean {self.mean} cov {self.cov.ravel()} (n_paths={self.n_paths}, seed={self.seed})"
        return (f"{self.estimate:.6g} ± {self.std_error:.2g} "
                f"(n_paths={self.n_paths}, seed={self.seed})")


def _check_law(spec: GameSpec, law: FeedbackLaw, cfg: SimConfig) -> None:
    F = law.closed_loop(spec.A)
    if not is_hurwitz(F):
        raise NotAdmissible(f"A - K has eigenvalues {np.linalg.eigvals(F)}")
    bound = 1.0 / (2.0 * spec_norm(F))
    if cfg.dt >= bound:
        raise UnstableStep(f"dt={cfg.dt} violates the step guard dt < {bound:.4g}")


def path_generators(seed: int, start: int, stop: int) -> list[np.random.Generator]:
    """Independent Philox streams for paths ``start..stop-1``."""
    s = np.uint64(seed & SEED_MASK)
    return [np.random.Generator(np.random.Philox(key=np.array([s, p], dtype=np.uint64)))
            for p in range(start, stop)]


def _noise_chunk(gens, steps: int, d: int) -> np.ndarray:
    # shape (steps, n_block, d)
    out = np.empty((steps, len(gens), d))
    for j, g in enumerate(gens):
        out[:, j, :] = g.standard_normal((steps, d))
    return out


def _affine(M, v, X):
    """``X M^T + v`` for X of shape (L, B, d), M (L, d, d), v (L, d), elementwise."""
    d = X.shape[-1]
    out = np.empty_like(X)
    for i in range(d):
        acc = v[:, i, None] + M[:, i, 0, None] * X[:, :, 0]
        for j in range(1, d):
            acc = acc + M[:, i, j, None] * X[:, :, j]
        out[:, :, i] = acc
    return out


def _quad(f: QuadraticForm, X):
    """``x^T M x + b x + c`` per path, elementwise."""
    d = X.shape[-1]
    val = np.full(X.shape[:-1], f.c)
    for i in range(d):
        val = val + f.b[i] * X[..., i]
        for j in range(d):
            val = val + f.M[i, j] * X[..., i] * X[..., j]
    return val


def _run_block(spec, laws, cfg, start, stop, cost_fn, mode, keep_every=0):
    """Simulate paths ``start..stop-1`` under every law with shared noise.

    Returns (per-path accumulated cost (L, B) or None, terminal states (L, B, d),
    optional trajectory samples).
    """
    d = spec.d
    L = len(laws)
    F = np.stack([law.closed_loop(spec.A) for law in laws])
    negc = np.stack([-law.c for law in laws])
    Ks = np.stack([law.K for law in laws])
    cs = np.stack([law.c for law in laws])
    sig = np.sqrt(2.0 * spec.k * cfg.dt)
    dt, n_steps = cfg.dt, cfg.n_steps
    gens = path_generators(cfg.seed, start, stop)
    X = np.broadcast_to(cfg.start(d), (L, stop - start, d)).copy()
    acc = np.zeros((L, stop - start)) if cost_fn is not None else None
    ergo_from = n_steps - n_steps // 2
    traj = []
    step = 0
    while step < n_steps:
        m = min(CHUNK_STEPS, n_steps - step)
        noise = _noise_chunk(gens, m, d) if spec.k > 0 else None
        for s in range(m):
            n = step + s
            if keep_every and n % keep_every == 0:
                traj.append((n * dt, X[0].copy()))
            if cost_fn is not None:
                alpha = _affine(Ks, cs, X)
                run = 0.5 * spec.r * np.sum(alpha * alpha, axis=-1) + cost_fn(X)
                if mode == "discounted":
                    acc = acc + (np.exp(-spec.ell * n * dt) * dt) * run
                elif n >= ergo_from:
                    acc = acc + dt * run
            X = X + dt * _affine(F, negc, X)
            if noise is not None:
                X = X + sig * noise[s]
        step += m
    if keep_every and n_steps % keep_every == 0:
        traj.append((n_steps * dt, X[0].copy()))
    if acc is not None and mode == "ergodic":
        acc = acc / (dt * (n_steps - ergo_from))
    return acc, X, traj


def _simulate(spec, laws, cfg, cost_fn=None, mode="moments"):
    n = int(cfg.n_paths)
    bounds = [(a, min(a + cfg.block_size, n)) for a in range(0, n, cfg.block_size)]
    job = lambda ab: _run_block(spec, laws, cfg, ab[0], ab[1], cost_fn, mode)
    if cfg.n_workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_workers) as pool:
            parts = list(pool.map(job, bounds))
    else:
        parts = [job(ab) for ab in bounds]
    X = np.concatenate([p[1] for p in parts], axis=1)
    acc = np.concatenate([p[0] for p in parts], axis=1) if cost_fn is not None else None
    return acc, X


def _moments(X):
    """Mean and covariance of X (B, d) with batch standard errors.

    Uses up to ``N_BATCHES`` batches of at least two paths each.
    """
    nb = max(2, min(N_BATCHES, X.shape[0] // 2))
    mean = np.mean(X, axis=0)
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    batches = np.array_split(X, nb)
    bm = np.array([np.mean(b, axis=0) for b in batches])
    bc = np.array([np.atleast_2d(np.cov(b, rowvar=False)) for b in batches])
    se = lambda a: np.std(a, axis=0, ddof=1) / np.sqrt(nb)
    return mean, cov, se(bm), se(bc)


def _mean_se(v):
    return float(np.mean(v)), float(np.std(v, ddof=1) / np.sqrt(v.size))


def simulate_closed_loop(spec: GameSpec, law: FeedbackLaw, cfg: SimConfig) -> SimReport:
    """Terminal mean and covariance of the closed loop at time ``T``."""
    _check_law(spec, law, cfg)
    t0 = time.perf_counter()
    _, X = _simulate(spec, [law], cfg)
    mean, cov, mse, cse = _moments(X[0])
    return SimReport(estimate=None, std_error=None, n_paths=int(cfg.n_paths),
                     elapsed=time.perf_counter() - t0, mean=mean, cov=cov,
                     mean_se=mse, cov_se=cse, seed=cfg.seed)


def _resolve_mode(spec: GameSpec, mode: str) -> str:
    mode = mode.lower()
    if mode == "auto":
        return "discounted" if spec.ell > 0 else "ergodic"
    if mode not in ("discounted", "ergodic"):
        raise ValueError(f"unknown cost mode {mode!r}")
    if mode == "discounted" and not spec.ell > 0:
        raise ValueError("discounted cost needs ell > 0")
    return mode


def _others_cost(spec: GameSpec, others, player: int) -> QuadraticForm:
    if others is None:
        sol = solve(spec)
        others = Gaussian(sol.mu, sol.Sigma)
    return running_cost(spec, others, player)


def _truncation(spec, cfg, mode, truncation_tol):
    if mode != "discounted":
        return 0.0
    tail = np.exp(-spec.ell * cfg.T)
    if tail > truncation_tol:
        raise TruncationTooCoarse(f"exp(-ell T) = {tail:.3e} exceeds {truncation_tol:.1e}; "
                                  f"increase T to at least {np.log(1.0 / truncation_tol) / spec.ell:.4g}")
    return float(tail)


def estimate_cost(spec: GameSpec, law: FeedbackLaw, cfg: SimConfig, mode: str = "auto",
                  player: int = 0, others=None, truncation_tol: float = 1e-6) -> SimReport:
    """Monte Carlo estimate of the discounted or ergodic cost of ``law``.

    The running cost is evaluated with the opponents' laws frozen at
    ``others`` (a Gaussian or Dirac; default: the equilibrium invariant law).
    ``bias_bound`` estimates the truncated discounted tail as
    ``exp(-ell T)`` times the terminal mean running cost over ``ell``.
    """
    mode = _resolve_mode(spec, mode)
    _check_law(spec, law, cfg)
    tail = _truncation(spec, cfg, mode, truncation_tol)
    f = _others_cost(spec, others, player)
    t0 = time.perf_counter()
    acc, X = _simulate(spec, [law], cfg, cost_fn=lambda Y: _quad(f, Y), mode=mode)
    est, se = _mean_se(acc[0])
    mean, cov, mse, cse = _moments(X[0])
    bias = 0.0
    if mode == "discounted":
        alpha = law(X[0])
        final = np.mean(0.5 * spec.r * np.sum(alpha * alpha, axis=1) + f(X[0]))
        bias = float(tail * abs(final) / spec.ell)
    return SimReport(estimate=est, std_error=se, n_paths=int(cfg.n_paths),
                     elapsed=time.perf_counter() - t0, mean=mean, cov=cov, mean_se=mse,
                     cov_se=cse, seed=cfg.seed, mode=mode, bias_bound=bias, per_path=acc[0])


@dataclass
class DeviationResult:
    law: FeedbackLaw
    gap: float
    std_error: float
    equilibrium_cost: float
    deviation_cost: float

    @property
    def passed(self) -> bool:
        return self.gap >= -3.0 * self.std_error


@dataclass
class NashReport:
    results: list
    elapsed: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)


def default_deviations(law: FeedbackLaw) -> list[FeedbackLaw]:
    """Six unilateral deviations: gain +-0.1, offset +-0.5, gain x1.5, no change."""
    return [law.perturbed(dK=0.1), law.perturbed(dK=-0.1), law.perturbed(dc=0.5),
            law.perturbed(dc=-0.5), FeedbackLaw(1.5 * law.K, law.c), law]


def nash_deviation_test(spec: GameSpec, equilibrium: QGSolution, deviations, cfg: SimConfig,
                        mode: str = "auto", player: int = 0,
                        truncation_tol: float = 1e-6) -> NashReport:
    """Cost gaps of unilateral deviations against the equilibrium law.

    All laws share each path's noise (common random numbers), so the gap's
    standard error is the paired one.
    """
    mode = _resolve_mode(spec, mode)
    eq_law = equilibrium_law(equilibrium, spec.r)
    laws = [eq_law] + list(deviations)
    for law in laws:
        _check_law(spec, law, cfg)
    _truncation(spec, cfg, mode, truncation_tol)
    f = _others_cost(spec, Gaussian(equilibrium.mu, equilibrium.Sigma), player)
    t0 = time.perf_counter()
    acc, _ = _simulate(spec, laws, cfg, cost_fn=lambda Y: _quad(f, Y), mode=mode)
    base = acc[0]
    results = []
    for law, a in zip(laws[1:], acc[1:]):
        gap, se = _mean_se(a - base)
        results.append(DeviationResult(law, gap, se, float(np.mean(base)), float(np.mean(a))))
    return NashReport(results, time.perf_counter() - t0)


def sample_paths(spec: GameSpec, law: FeedbackLaw, cfg: SimConfig, n_keep: int = 10,
                 every: int = 100):
    """Trajectories of the first ``n_keep`` paths, recorded every ``every`` steps.

    Returns (times (m,), states (m, n_keep, d)); paths use the same streams
    as the full simulation.
    """
    _check_law(spec, law, cfg)
    n_keep = min(n_keep, int(cfg.n_paths))
    _, _, traj = _run_block(spec, [law], cfg, 0, n_keep, None, "moments", keep_every=every)
    return np.array([t for t, _ in traj]), np.stack([x for _, x in traj])


def write_paths_csv(path, times, states) -> None:
    """CSV with columns t, path_id, x0..x{d-1}."""
    d = states.shape[-1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "path_id"] + [f"x{i}" for i in range(d)])
        for t, X in zip(times, states):
            for p, x in enumerate(X):
                w.writerow([repr(float(t)), p] + [repr(float(v)) for v in x])
