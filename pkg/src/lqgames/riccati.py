"""Algebraic Riccati equations ``Y R Y + Y A + A^T Y - Q = 0``.

Solutions correspond to d-dimensional invariant graph subspaces
``Im [I; Y]`` of the Hamiltonian ``[[A, R], [Q, -A^T]]``. Two routes are
provided: the selected solution (invariant subspace of the eigenvalues with
positive real part, via an ordered real Schur form) and brute-force
enumeration of eigenvector subsets, which finds every symmetric solution
when the spectrum is simple.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.linalg as spla

from .errors import (DegenerateSpectrum, DimensionTooLarge, ImaginaryEigenvalues,
                     NoSymmetricSolution)
from .matalg import DEFAULT_TOL, as_sym, is_spd, spec_norm

GRAPH_COND_MAX = 1e10


@dataclass(frozen=True)
class AREProblem:
    calA: np.ndarray
    calR: np.ndarray
    calQ: np.ndarray

    def __post_init__(self):
        calA = np.atleast_2d(np.asarray(self.calA, dtype=float))
        calR = as_sym(self.calR)
        calQ = as_sym(self.calQ)
        if not (calA.shape == calR.shape == calQ.shape):
            raise ValueError("ARE coefficients must share one square shape")
        if not is_spd(calR):
            raise ValueError("R coefficient must be positive definite")
        object.__setattr__(self, "calA", calA)
        object.__setattr__(self, "calR", calR)
        object.__setattr__(self, "calQ", calQ)

    @property
    def d(self) -> int:
        return self.calA.shape[0]

    def residual(self, Y) -> np.ndarray:
        return Y @ self.calR @ Y + Y @ self.calA + self.calA.T @ Y - self.calQ

    def residual_norm(self, Y) -> float:
        return float(np.linalg.norm(self.residual(Y), 2))

    def residual_bound(self, rel: float) -> float:
        return rel * (1.0 + spec_norm(self.calQ))


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    has_imaginary: bool
    all_real: bool
    min_pos: float | None

    @property
    def positive(self) -> np.ndarray:
        """Sorted real parts of eigenvalues with positive real part."""
        w = self.eigenvalues
        return np.sort(w.real[w.real > 0])


def build_hamiltonian(p: AREProblem) -> np.ndarray:
    return np.block([[p.calA, p.calR], [p.calQ, -p.calA.T]])


def classify_spectrum(H, tol: float = DEFAULT_TOL) -> SpectrumReport:
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = np.linalg.eigvals(np.asarray(H, dtype=float))
    re, im = np.abs(w.real), np.abs(w.imag)
    has_imag = bool(np.any((re <= tol) & (im > tol)))
    pos = w.real[w.real > tol]
    return SpectrumReport(
        eigenvalues=w,
        has_imaginary=has_imag,
        all_real=bool(np.all(im <= tol)),
        min_pos=float(pos.min()) if pos.size else None,
    )


def _graph(X: np.ndarray, d: int) -> np.ndarray | None:
    """``X2 X1^{-1}`` for a 2d x d basis, or None if not a graph subspace."""
    X1, X2 = X[:d], X[d:]
    if np.linalg.cond(X1) > GRAPH_COND_MAX:
        return None
    return np.linalg.solve(X1.T, X2.T).T


def solve_are_selected(p: AREProblem, tol: float = DEFAULT_TOL,
                       rel_residual: float = 1e-10) -> np.ndarray:
    """Unique symmetric solution with spec(A + R Y) = spec(H) ∩ {Re > 0}.

    Raises
    ------
    ImaginaryEigenvalues
        The Hamiltonian has purely imaginary nonzero eigenvalues.
    NoSymmetricSolution
        The positive-real-part invariant subspace is not a graph of a
        symmetric matrix, or the certificate fails.
    """
    d = p.d
    H = build_hamiltonian(p)
    rep = classify_spectrum(H, tol)
    if rep.has_imaginary:
        raise ImaginaryEigenvalues("Hamiltonian has purely imaginary nonzero eigenvalues")
    _, Z, sdim = spla.schur(H, output="real", sort=lambda re, im: re > tol)
    if sdim != d:
        raise NoSymmetricSolution(f"{sdim} eigenvalues with positive real part, expected {d}")
    Y = _graph(Z[:, :d], d)
    if Y is None:
        raise NoSymmetricSolution("stable invariant subspace is not a graph subspace")
    if np.max(np.abs(Y - Y.T)) > 1e-8 * (1.0 + np.max(np.abs(Y))):
        raise NoSymmetricSolution("graph subspace yields a non-symmetric matrix")
    Y = 0.5 * (Y + Y.T)

    res = p.residual_norm(Y)
    if res > p.residual_bound(rel_residual):
        raise NoSymmetricSolution(f"ARE residual {res:.3e} fails certification")
    closed = np.sort(np.linalg.eigvals(p.calA + p.calR @ Y).real)
    if closed.shape != rep.positive.shape or np.max(np.abs(closed - rep.positive)) > 1e-8 * max(1.0, closed.max()):
        raise NoSymmetricSolution("closed-loop spectrum does not match the positive Hamiltonian spectrum")
    return Y


def _eigen_blocks(H: np.ndarray, tol: float):
    """Real column blocks spanning each eigenvalue (1 col) or conjugate pair (2 cols)."""
    w, V = np.linalg.eig(H)
    scale = max(1.0, float(np.max(np.abs(w))))
    gaps = np.abs(w[:, None] - w[None, :])
    np.fill_diagonal(gaps, np.inf)
    if np.min(gaps) <= 1e-8 * scale:
        raise DegenerateSpectrum("Hamiltonian has repeated eigenvalues")
    order = np.lexsort((w.imag, -w.real))
    blocks = []
    for idx in order:
        lam, v = w[idx], V[:, idx]
        if abs(lam.imag) <= tol * scale:
            col = v.real if np.linalg.norm(v.real) >= np.linalg.norm(v.imag) else v.imag
            blocks.append((lam, col[:, None] / np.linalg.norm(col)))
        elif lam.imag > 0:
            blocks.append((lam, np.column_stack([v.real, v.imag])))
    return blocks


def enumerate_symmetric_solutions(p: AREProblem, dim_limit: int = 6,
                                  tol: float = DEFAULT_TOL,
                                  rel_residual: float = 1e-9) -> list[np.ndarray]:
    """All symmetric solutions from d-dimensional eigenvector subsets.

    The list is ordered lexicographically by subset index, with eigenvalues
    ranked by decreasing real part, so the selected solution (if any) comes
    first.
    """
    d = p.d
    if d > dim_limit:
        raise DimensionTooLarge(f"d={d} exceeds enumeration limit {dim_limit}")
    blocks = _eigen_blocks(build_hamiltonian(p), tol)
    sizes = [b[1].shape[1] for b in blocks]
    bound = p.residual_bound(rel_residual)
    out = []
    for subset in _subsets_of_size(sizes, d):
        X = np.hstack([blocks[j][1] for j in subset])
        Y = _graph(X, d)
        if Y is None:
            continue
        if np.max(np.abs(Y - Y.T)) > 1e-8 * (1.0 + np.max(np.abs(Y))):
            continue
        Y = 0.5 * (Y + Y.T)
        if p.residual_norm(Y) <= bound:
            out.append(Y)
    return out


def _subsets_of_size(sizes: list[int], target: int):
    """Index subsets (lexicographic) whose block sizes sum to ``target``."""
    n = len(sizes)
    results = []
    for m in range(1, n + 1):
        for combo in combinations(range(n), m):
            if sum(sizes[j] for j in combo) == target:
                results.append(combo)
    results.sort()
    return results


@dataclass
class SylvesterReport:
    holds: bool
    residuals: list[float] = field(default_factory=list)
    solutions: list[np.ndarray] = field(default_factory=list)
    method: str = "enumeration"


def riccati_sylvester_check(A, nu, R, Q, tol: float = DEFAULT_TOL,
                            dim_limit: int = 6) -> SylvesterReport:
    """Check that every SPD solution of ``Y (nu R nu / 2) Y = A^T R A / 2 + Q``
    also solves ``Y nu R - R nu Y = R A - A^T R``.

    SPD solutions come from eigenvector enumeration. When the Hamiltonian
    spectrum is degenerate the selected solution is used instead: with a
    zero drift term and positive definite coefficients it is the only SPD
    solution.
    """
    A = as_sym(A)
    nu, R, Q = as_sym(nu), as_sym(R), as_sym(Q)
    p = AREProblem(np.zeros_like(A), 0.5 * nu @ R @ nu, 0.5 * A.T @ R @ A + Q)
    try:
        candidates = enumerate_symmetric_solutions(p, dim_limit=dim_limit, tol=tol)
        method = "enumeration"
    except DegenerateSpectrum:
        try:
            candidates = [solve_are_selected(p, tol=tol)]
        except NoSymmetricSolution:
            candidates = []
        method = "selected"
    spd = [Y for Y in candidates if is_spd(Y, tol)]
    rhs = R @ A - A.T @ R
    residuals = []
    for Y in spd:
        lhs = (Y @ nu) @ R - R @ (nu @ Y)
        residuals.append(float(np.max(np.abs(lhs - rhs))))
    return SylvesterReport(holds=all(r <= tol for r in residuals),
                           residuals=residuals, solutions=spd, method=method)
