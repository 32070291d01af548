import io

import numpy as np
import pytest
from hypothesis import given

from lqgames.ergodic import solve_ergodic
from lqgames.game_model import Dirac, finite_game
from lqgames.instances import random_game, random_mf_game, scalar_game, scalar_mf_game
from lqgames.limits import (cheap_control_limit, commuting_diagram_check, default_sequence,
                            deterministic_limit, mean_field_convergence, parameter_limit,
                            v_family_solve, vanishing_discount_limit)

from strategies import games, mf_games

FINE = {"discount": 0.2 * 10.0 ** -np.arange(8), "noise": 10.0 ** -np.arange(9),
        "cheap": 10.0 ** -np.arange(11)}
FINE_N = 10 * 2 ** np.arange(15)


def test_default_sequences():
    np.testing.assert_allclose(default_sequence("ell")[[0, -1]], [0.2, 0.2 / 256])
    np.testing.assert_allclose(default_sequence("noise")[[0, -1]], [1.0, 1 / 256])
    assert list(default_sequence("N")[[0, -1]]) == [10, 2560]


def test_v_family_scalar_examples():
    for k in (1.0, 0.1, 0.01):
        sol = v_family_solve(scalar_game(k=k))
        assert sol.diagnostics["V"][0, 0] == pytest.approx(1.0)
        assert sol.per_player[0] == pytest.approx(k, abs=1e-15)
    sol = v_family_solve(scalar_game())
    assert sol.Sigma[0, 0] == pytest.approx(1.0)


@given(games(max_d=5))
def test_v_family_matches_ergodic(spec):
    a, b = v_family_solve(spec), solve_ergodic(spec)
    for name in ("Sigma", "mu", "Lambda", "rho", "per_player"):
        np.testing.assert_allclose(getattr(a, name), getattr(b, name), atol=1e-12 * (1 + np.max(np.abs(getattr(b, name)))))


def test_v_family_k_structure(rng):
    spec = random_game(rng, 3, N=4)
    sols = [v_family_solve(spec.replace(k=k)) for k in (1.0, 0.1, 0.01)]
    for name in ("Lambda", "rho", "mu"):
        for s in sols[1:]:
            np.testing.assert_allclose(getattr(s, name), getattr(sols[0], name), atol=1e-12)
    lam = np.array([s.per_player[0] for s in sols])
    ks = np.array([1.0, 0.1, 0.01])
    assert (lam[0] - lam[1]) / 0.9 == pytest.approx((lam[0] - lam[2]) / 0.99, abs=1e-10)
    mins = [np.linalg.eigvalsh(s.Sigma).min() for s in sols]
    np.testing.assert_allclose(np.array(mins) * ks, mins[0], rtol=1e-12)
    trip = deterministic_limit(spec)
    assert (lam[-1] - trip.lam) / 0.01 == pytest.approx((lam[0] - trip.lam) / 1.0, rel=1e-8)


def test_deterministic_limit_examples():
    trip = deterministic_limit(scalar_mf_game(H=1.0))
    assert isinstance(trip.measure, Dirac)
    assert (trip.V[0, 0], trip.mu[0], trip.lam) == pytest.approx((1.0, 1.0, 0.0), abs=1e-12)
    trip = deterministic_limit(scalar_game(A=0.4, r=2.0))
    assert trip.mu[0] == 0 and trip.lam == 0
    x = np.array([1.3])
    expected = np.sqrt(2.0) * trip.V @ x + 2.0 * 0.4 * x
    np.testing.assert_allclose(trip.value_fn.gradient(x), expected, atol=1e-12)


def test_cheap_control_examples():
    for A in (0.0, 0.7, -1.5):
        trip = cheap_control_limit(scalar_mf_game(H=1.0, A=A))
        assert (trip.V[0, 0], trip.mu[0], trip.lam) == pytest.approx((1.0, 1.0, 0.0), abs=1e-12)
        assert not trip.Lambda.any() and trip.value_fn([3.0]) == 0.0
    lams = [v_family_solve(scalar_game(A=0.5, r=r)).Lambda[0, 0] for r in (1e-4, 1e-6, 1e-8)]
    np.testing.assert_allclose(np.array(lams[1:]) / np.array(lams[:-1]), 0.1, rtol=0.02)


def test_vanishing_discount_scalar():
    rep = vanishing_discount_limit(scalar_game())
    e = rep.errors["Sigma"]
    assert e[0] == pytest.approx(0.0950124379, abs=1e-9)
    assert all(rep.decayed.values())
    for ell, err in zip(rep.values, e):
        assert 0.5 * ell / 2 <= err <= 2 * ell / 2
    assert max(rep.errors["mu"]) == 0.0
    np.testing.assert_allclose(rep.errors["ell_c"], e, atol=1e-12)
    text = rep.to_csv()
    assert text.splitlines()[0] == "param,N,coefficient,error"
    assert len(text.splitlines()) == 1 + 5 * 9


@given(games(max_d=4))
def test_vanishing_discount_first_order(spec):
    rep = vanishing_discount_limit(spec, ell_seq=[1e-3, 5e-4, 2.5e-4])
    for name, e in rep.errors.items():
        if e[0] > 1e-10:
            assert e[2] / e[1] == pytest.approx(0.5, abs=0.05), name


def test_mean_field_convergence_scalar():
    for ell in (0.0, 0.2):
        rep = mean_field_convergence(scalar_mf_game(H=1.0, Bhat=0.5, Chat=0.3, Dhat=0.2, Delta=0.4, ell=ell))
        for name, r in rep.ratios().items():
            np.testing.assert_allclose(r, 0.5, rtol=0.2, err_msg=name)


@given(mf_games(max_d=3))
def test_mean_field_first_order_bound(spec):
    rep = mean_field_convergence(spec, N_seq=[1000, 4000])
    for name, e in rep.errors.items():
        assert e[1] <= 0.3 * e[0] + 1e-13, name


def test_commuting_scalar_discount():
    rep = commuting_diagram_check(scalar_mf_game(), "discount", FINE["discount"], FINE_N)
    got = [rep.limit[n] for n in ("Sigma", "mu", "Lambda", "rho", "lam")]
    np.testing.assert_allclose(np.ravel([np.ravel(g) for g in got]), [1, 0, 1, 0, 1], atol=1e-9)
    assert rep.passed


@pytest.mark.parametrize("param", ["noise", "cheap"])
def test_commuting_scalar_dirac(param):
    rep = commuting_diagram_check(scalar_mf_game(H=1.0), param, FINE[param], FINE_N)
    np.testing.assert_allclose([rep.limit["V"][0, 0], rep.limit["mu"][0], rep.limit["lam"]],
                               [1.0, 1.0, 0.0], atol=1e-9)
    assert rep.passed


def test_commuting_default_grid_residual_is_first_order():
    # with the default grids plain evaluation leaves an O(param) + O(1/N) gap
    spec = scalar_mf_game(H=1.0, A=0.5)
    coarse = commuting_diagram_check(spec, "cheap")
    fine = commuting_diagram_check(spec, "cheap", FINE["cheap"], FINE_N)
    assert max(fine.discrepancy.values()) < max(coarse.discrepancy.values())
    assert max(coarse.discrepancy.values()) > 1e-3


def test_commuting_random(rng):
    for _ in range(3):
        spec = random_mf_game(rng, int(rng.integers(1, 4)))
        for p in FINE:
            assert commuting_diagram_check(spec, p, FINE[p], FINE_N).passed


def test_commuting_rejects_bad_input():
    with pytest.raises(ValueError):
        commuting_diagram_check(scalar_game(), "noise")
    with pytest.raises(ValueError):
        commuting_diagram_check(scalar_mf_game(), "drift")


def test_parameter_limit_report():
    rep = parameter_limit(scalar_mf_game(H=1.0, A=0.5), "noise", seq=[1e-1, 1e-2, 1e-3])
    assert rep.param == "k"
    lam = rep.errors["lam"]
    assert lam[1] / lam[0] == pytest.approx(0.1, rel=1e-6)
    assert rep.errors["V"] == [0.0, 0.0, 0.0]
