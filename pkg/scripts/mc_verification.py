"""Monte Carlo check of equilibrium costs and unilateral deviations.

Estimates the equilibrium cost of a scalar discounted and a scalar ergodic
game, runs the six-law deviation battery and prints one line per run.
"""
from __future__ import annotations

import argparse

from lqgames.discounted import solve
from lqgames.instances import scalar_game
from lqgames.simulator import SimConfig, default_deviations, equilibrium_law, estimate_cost, \
    nash_deviation_test


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--truncation-tol", type=float, default=1e-4)
    args = p.parse_args(argv)
    cfg = SimConfig(dt=args.dt, T=args.T, n_paths=args.paths, seed=args.seed, n_workers=args.workers)

    for spec in (scalar_game(A=0.3, H=1.0, ell=0.2), scalar_game(A=0.3, H=1.0)):
        sol = solve(spec)
        law = equilibrium_law(sol, spec.r)
        rep = estimate_cost(spec, law, cfg, truncation_tol=args.truncation_tol)
        exact = sol.per_player[0]
        print(f"{rep.mode:10s} MC {rep.summary()}  exact {exact:.6g}  "
              f"z {(rep.estimate - exact) / rep.std_error:+.2f}  [{rep.elapsed:.1f} s]")
        nash = nash_deviation_test(spec, sol, default_deviations(law), cfg,
                                   truncation_tol=args.truncation_tol)
        for r in nash.results:
            print(f"  K={r.law.K[0, 0]:.3f} c={r.law.c[0]:+.3f}  gap {r.gap:+.4f} ± {r.std_error:.2g}"
                  f"  {'ok' if r.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
