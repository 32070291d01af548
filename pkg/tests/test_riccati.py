import numpy as np
import pytest
from hypothesis import given

from lqgames.errors import DegenerateSpectrum, DimensionTooLarge, ImaginaryEigenvalues
from lqgames.instances import random_are, random_spd, random_sym
from lqgames.matalg import is_spd
from lqgames.riccati import (AREProblem, build_hamiltonian, classify_spectrum,
                             enumerate_symmetric_solutions, riccati_sylvester_check,
                             solve_are_selected)

from strategies import seeds

m = lambda v: np.array([[float(v)]])


def test_hamiltonian_scalar():
    H = build_hamiltonian(AREProblem(m(0), m(0.5), m(0.5)))
    np.testing.assert_array_equal(H, [[0, 0.5], [0.5, 0]])
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(H).real), [-0.5, 0.5])


def test_hamiltonian_nilpotent():
    H = build_hamiltonian(AREProblem(np.zeros((2, 2)), np.eye(2), np.zeros((2, 2))))
    np.testing.assert_allclose(np.linalg.eigvals(H), 0.0, atol=1e-14)


def test_hamiltonian_eigs_square_to_RQ(rng):
    k, r = 0.7, 1.3
    A = random_sym(rng, 3)
    Q = random_spd(rng, 3)
    calR, calQ = (k * k * r / 2) * np.eye(3), Q + r * A @ A / 2
    w = np.linalg.eigvals(build_hamiltonian(AREProblem(np.zeros((3, 3)), calR, calQ)))
    sq = np.sort(np.linalg.eigvals(calR @ calQ).real)
    np.testing.assert_allclose(np.sort((w[w.real > 0] ** 2).real), sq, rtol=1e-10)


def test_classify_spectrum_examples():
    rep = classify_spectrum(np.array([[0, 0.5], [0.5, 0]]))
    assert rep.all_real and not rep.has_imaginary and rep.min_pos == pytest.approx(0.5)
    assert classify_spectrum(np.array([[0.0, 1.0], [-1.0, 0.0]])).has_imaginary
    assert not classify_spectrum(np.zeros((2, 2))).has_imaginary


def test_selected_examples():
    assert solve_are_selected(AREProblem(m(0), m(0.5), m(0.5)))[0, 0] == pytest.approx(1.0, abs=1e-12)
    # 0.5 Y^2 + 0.1 Y - 0.45 = 0
    Y = solve_are_selected(AREProblem(m(0.05), m(0.5), m(0.45)))[0, 0]
    assert Y == pytest.approx((-0.1 + np.sqrt(0.01 + 0.9)) / 1.0, abs=1e-12)
    assert Y == pytest.approx(0.8539392014169456, abs=1e-12)
    I = np.eye(2)
    np.testing.assert_allclose(solve_are_selected(AREProblem(0 * I, 0.5 * I, 0.5 * I)), I, atol=1e-12)


def test_imaginary_spectrum_raises():
    with pytest.raises(ImaginaryEigenvalues):
        solve_are_selected(AREProblem(m(0), m(1.0), m(-1.0)))


def test_enumeration_examples():
    sols = enumerate_symmetric_solutions(AREProblem(m(0), m(0.5), m(0.5)))
    assert sorted(float(Y[0, 0]) for Y in sols) == pytest.approx([-1.0, 1.0])
    with pytest.raises(DegenerateSpectrum):
        enumerate_symmetric_solutions(AREProblem(np.zeros((2, 2)), np.eye(2), np.zeros((2, 2))))
    p = AREProblem(np.zeros((2, 2)), 0.5 * np.eye(2), np.diag([0.5, 2.0]))
    got = sorted(tuple(np.round(np.diag(Y), 10)) for Y in enumerate_symmetric_solutions(p))
    assert got == [(-1.0, -2.0), (-1.0, 2.0), (1.0, -2.0), (1.0, 2.0)]
    with pytest.raises(DimensionTooLarge):
        enumerate_symmetric_solutions(AREProblem(np.zeros((7, 7)), np.eye(7), np.eye(7)))


@given(seeds)
def test_selected_is_certified_and_enumerated(seed):
    rng = np.random.default_rng(seed)
    p = random_are(rng, int(rng.integers(1, 5)))
    Y = solve_are_selected(p)
    assert is_spd(Y)
    assert p.residual_norm(Y) <= 1e-9 * (1 + np.linalg.norm(p.calQ, 2))
    closed = np.sort(np.linalg.eigvals(p.calA + p.calR @ Y).real)
    assert np.all(closed > 0)
    try:
        sols = enumerate_symmetric_solutions(p)
    except DegenerateSpectrum:
        return
    assert any(np.allclose(S, Y, atol=1e-8) for S in sols)
    spd = [S for S in sols if np.all(np.linalg.eigvals(p.calA + p.calR @ S).real > 0)]
    assert len(spd) == 1


def test_scalar_oracle_larger_root(rng):
    for _ in range(50):
        a, R, Q = rng.uniform(-1, 1), rng.uniform(0.1, 3), rng.uniform(0.1, 3)
        Y = solve_are_selected(AREProblem(m(a), m(R), m(Q)))[0, 0]
        assert Y == pytest.approx((-2 * a + np.sqrt(4 * a * a + 4 * R * Q)) / (2 * R), abs=1e-12)


def test_sylvester_holds_under_symmetric_drift(rng):
    for _ in range(20):
        d = int(rng.integers(1, 5))
        k, r = rng.uniform(0.5, 2, 2)
        rep = riccati_sylvester_check(random_sym(rng, d), k * np.eye(d), r * np.eye(d), random_spd(rng, d))
        assert rep.holds and rep.solutions and max(rep.residuals) == 0.0
    assert riccati_sylvester_check(np.zeros((2, 2)), np.eye(2), np.eye(2), np.eye(2)).holds
    assert riccati_sylvester_check(m(0.7), m(2.0), m(0.3), m(1.5)).holds


def test_sylvester_fails_without_commuting_noise():
    rep = riccati_sylvester_check(np.array([[0.0, 1.0], [1.0, 0.0]]), np.diag([1.0, 2.0]), np.eye(2),
                                  np.array([[1.0, 0.5], [0.5, 2.0]]))
    assert not rep.holds
    assert max(rep.residuals) > 1e-3
