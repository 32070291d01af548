"""Convergence tables for the singular limits and random-family statistics.

Writes CSV tables to ``--outdir`` and prints a short summary:

* vanishing discount on the scalar benchmark and on random instances,
* mean-field convergence (ergodic and discounted) on the coupled scalar game
  and on random mean-field instances,
* commuting-diagram discrepancies on random mean-field instances.
"""
from __future__ import annotations

import argparse
import csv
import os

import numpy as np

from lqgames.instances import random_game, random_mf_game, scalar_game, scalar_mf_game
from lqgames.limits import commuting_diagram_check, default_sequence, mean_field_convergence, \
    vanishing_discount_limit

FINE = {"discount": 0.2 * 10.0 ** -np.arange(8), "noise": 10.0 ** -np.arange(9),
        "cheap": 10.0 ** -np.arange(11)}
FINE_N = 10 * 2 ** np.arange(15)


def discount_family(rng, n):
    """Per instance: final error, largest error/ell constant, monotone flag."""
    ell = default_sequence("ell")
    rows = []
    for i in range(n):
        spec = random_game(rng, int(rng.integers(1, 7)), N=int(rng.integers(1, 6)))
        rep = vanishing_discount_limit(spec, ell)
        final = max(e[-1] for e in rep.errors.values())
        const = max(e[-1] / ell[-1] for e in rep.errors.values())
        mono = all(np.all(np.diff(e) <= 0) for e in rep.errors.values())
        rows.append((i, spec.d, spec.N, final, const, mono))
    return rows


def meanfield_family(rng, n):
    """Per instance and mode: worst deviation of the halving ratio from 1/2."""
    N = default_sequence("N")
    rows = []
    for i in range(n):
        for ell in (0.0, 0.2):
            spec = random_mf_game(rng, int(rng.integers(1, 4)), ell=ell)
            rep = mean_field_convergence(spec, N)
            dev = max(float(np.max(np.abs(np.asarray(r) - 0.5))) for r in rep.ratios().values())
            rows.append((i, spec.d, "ergodic" if ell == 0 else "discounted", dev))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--outdir", default="results")
    p.add_argument("--n", type=int, default=50, help="random instances per family")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    os.makedirs(args.outdir, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    rep = vanishing_discount_limit(scalar_game())
    with open(os.path.join(args.outdir, "discount_scalar.csv"), "w", newline="") as fh:
        rep.to_csv(fh)
    for ell in (0.0, 0.2):
        rep = mean_field_convergence(scalar_mf_game(H=1.0, A=0.3, Bhat=0.5, Chat=0.3, Dhat=0.2,
                                                    Delta=0.4, ell=ell))
        with open(os.path.join(args.outdir, f"meanfield_scalar_{rep.mode}.csv"), "w", newline="") as fh:
            rep.to_csv(fh)
        print(f"mean field ({rep.mode}) ratios:",
              {k: np.round(v, 3).tolist() for k, v in rep.ratios().items()})

    rows = discount_family(rng, args.n)
    with open(os.path.join(args.outdir, "discount_family.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "d", "N", "final_error", "error_over_ell", "monotone"])
        w.writerows(rows)
    finals = np.array([r[3] for r in rows])
    consts = np.array([r[4] for r in rows])
    print(f"vanishing discount: {np.sum(finals > 1e-3)}/{len(rows)} above 1e-3 at ell={default_sequence('ell')[-1]:.2e}; "
          f"error/ell in [{consts.min():.2f}, {consts.max():.2f}], "
          f"{sum(r[5] for r in rows)} monotone")

    rows = meanfield_family(rng, args.n)
    with open(os.path.join(args.outdir, "meanfield_family.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "d", "mode", "max_ratio_deviation"])
        w.writerows(rows)
    devs = np.array([r[3] for r in rows])
    print(f"mean field: {np.sum(devs > 0.1)}/{len(rows)} runs leave 0.5 +- 20%; max deviation {devs.max():.3f}")

    with open(os.path.join(args.outdir, "commuting_family.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "param", "coefficient", "discrepancy", "passed"])
        fails = 0
        for i in range(min(args.n, 20)):
            spec = random_mf_game(rng, int(rng.integers(1, 4)))
            for param in FINE:
                rep = commuting_diagram_check(spec, param, FINE[param], FINE_N)
                fails += not rep.passed
                for name, gap in rep.discrepancy.items():
                    w.writerow([i, param, name, repr(float(gap)), rep.passed])
    print(f"commuting diagrams: {fails} failures")


if __name__ == "__main__":
    main()
