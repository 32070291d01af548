"""Command-line front end.

Exit codes: 0 success, 1 verification checks failed, 2 invalid config or
options, 3 infeasible instance, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import secrets
import sys

import numpy as np

from . import limits
from .config import KINDS, MODES, dump_json, load_config, solution_to_dict
from .discounted import closed_form_inverse_covariance, solve_discounted
from .ergodic import QGSolution, hjb_kfp_residual, solve_ergodic
from .errors import (INFEASIBLE, AssumptionViolation, ConfigValidationError, NotAdmissible,
                     ParseError, TruncationTooCoarse, UnstableStep)
from .game_model import GameSpec, validate_assumptions
from .matalg import solve_lyapunov, spec_norm
from .simulator import (SimConfig, default_deviations, equilibrium_law, estimate_cost,
                        nash_deviation_test, sample_paths, write_paths_csv)

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3, 4
RESIDUAL_TOL = 1e-9
N_SAMPLE = 100


# ---------------------------------------------------------------------------
# solving

def resolve_mode(spec: GameSpec, mode: str | None, ell: float | None) -> GameSpec:
    """Apply ``--mode``/``--ell`` to ``spec``; the mode must match the player count."""
    if ell is not None:
        if ell < 0:
            raise ValueError("--ell must be nonnegative")
        spec = spec.replace(ell=float(ell))
    if mode is None:
        return spec
    if mode.startswith("mf-") != spec.mean_field:
        raise ValueError(f"mode {mode!r} does not match N={'mf' if spec.mean_field else spec.N}")
    if mode.endswith("ergodic") and spec.ell != 0.0:
        if ell is not None:
            raise ValueError("ergodic mode needs ell = 0")
        spec = spec.replace(ell=0.0)
    if mode.endswith("discounted") and not spec.ell > 0:
        raise ValueError("discounted mode needs ell > 0 (set ell or pass --ell)")
    return spec


def solve_spec(spec: GameSpec) -> QGSolution:
    return solve_discounted(spec) if spec.ell > 0 else solve_ergodic(spec)


def sample_points(sol: QGSolution, n: int = N_SAMPLE, seed: int = 0) -> np.ndarray:
    """Points spread around the mean on the scale of the invariant law."""
    rng = np.random.default_rng(seed)
    scale = np.sqrt(max(spec_norm(sol.covariance), 1.0))
    return sol.mu + 2.0 * scale * rng.standard_normal((n, sol.mu.size))


def residuals(sol: QGSolution, spec: GameSpec) -> dict:
    hjb, kfp = hjb_kfp_residual(sol, spec, sample_points(sol))
    return {"hjb": hjb, "kfp": kfp}


def oracle_checks(sol: QGSolution, spec: GameSpec) -> dict:
    """Independent cross-checks: closed-form inverse covariance and Lyapunov identity."""
    k = spec.k
    closed = closed_form_inverse_covariance(spec)
    stat = solve_lyapunov(-k * sol.Sigma, 2.0 * k * np.eye(spec.d))
    return {"closed_form_Sigma": float(np.max(np.abs(closed - sol.Sigma))),
            "lyapunov_covariance": float(np.max(np.abs(stat - sol.covariance)))}


# ---------------------------------------------------------------------------
# output

def _human_solution(sol: QGSolution, res: dict) -> str:
    label = "c" if sol.discounted else "lambda"
    lines = [f"mode {sol.mode}" + (f" (ell={sol.ell})" if sol.discounted else ""),
             f"Sigma  {np.array2string(sol.Sigma, precision=10)}",
             f"mu     {np.array2string(sol.mu, precision=10)}",
             f"Lambda {np.array2string(sol.Lambda, precision=10)}",
             f"rho    {np.array2string(sol.rho, precision=10)}",
             f"{label:6s} {np.array2string(np.asarray(sol.per_player), precision=12)}"]
    lines += [f"residual {k}: {v:.3e}" for k, v in res.items()]
    return "\n".join(lines)


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _convergence_rows(rep):
    if isinstance(rep, limits.CommutingReport):
        return [(repr(float(p)), n, name, repr(float(e))) for p, n, name, e in rep.to_rows()]
    if isinstance(rep, limits.MeanFieldReport):
        return [(rep.mode, n, name, repr(float(e)))
                for name, errs in rep.errors.items() for n, e in zip(rep.N_values, errs)]
    tag = "mf" if rep.N is None else rep.N
    return [(repr(float(v)), tag, name, repr(float(e)))
            for name, errs in rep.errors.items() for v, e in zip(rep.values, errs)]


def emit_report(result, fmt: str = "human", out=None) -> str:
    """Render a result as text (human), JSON or CSV; write to ``out`` if given."""
    if fmt == "json":
        text = json.dumps(_to_dict(result), indent=2)
    elif fmt == "csv":
        import io
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["param", "N", "coefficient", "error"])
        w.writerows(_convergence_rows(result))
        text = buf.getvalue()
    elif fmt == "human":
        text = _human(result)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    return text


def _to_dict(result):
    if isinstance(result, QGSolution):
        return solution_to_dict(result)
    if isinstance(result, limits.ConvergenceReport):
        return {"param": result.param, "values": result.values, "errors": result.errors,
                "decayed": result.decayed}
    if isinstance(result, limits.MeanFieldReport):
        return {"mode": result.mode, "N": result.N_values, "errors": result.errors,
                "ratios": result.ratios()}
    if isinstance(result, limits.CommutingReport):
        return {"param": result.param, "discrepancy": result.discrepancy, "passed": result.passed,
                "limit": {k: np.asarray(v).tolist() for k, v in result.limit.items()}}
    if hasattr(result, "summary"):
        return {"estimate": result.estimate, "std_error": result.std_error, "n_paths": result.n_paths,
                "seed": result.seed, "mean": result.mean.tolist(), "cov": result.cov.tolist()}
    return result


def _human(result) -> str:
    if isinstance(result, QGSolution):
        return _human_solution(result, {})
    if isinstance(result, limits.ConvergenceReport):
        dec = result.decayed
        return "\n".join(f"{name:7s} final error {errs[-1]:.3e}  decayed={dec[name]}"
                         for name, errs in result.errors.items())
    if isinstance(result, limits.MeanFieldReport):
        return "\n".join(f"{name:7s} final error {errs[-1]:.3e}  last ratio {r[-1]:.4f}"
                         for (name, errs), r in zip(result.errors.items(), result.ratios().values()))
    if isinstance(result, limits.CommutingReport):
        gaps = ", ".join(f"{k}={v:.2e}" for k, v in result.discrepancy.items())
        return f"{result.param}: {'pass' if result.passed else 'FAIL'} ({gaps})"
    if hasattr(result, "summary"):
        return result.summary()
    return str(result)


# ---------------------------------------------------------------------------
# commands

def _floats(values):
    return None if values is None else [float(v) for v in values]


def cmd_validate(args, spec, run) -> int:
    rep = validate_assumptions(spec)
    for c in rep.checks:
        print(f"[{'ok' if c.passed else 'FAIL'}] {c.name}" + (f" ({c.detail})" if c.detail else ""))
    if args.out:
        dump_json({"ok": rep.ok, "checks": [c.__dict__ for c in rep.checks]}, args.out)
    return EXIT_OK if rep.ok else EXIT_INVALID


def cmd_solve(args, spec, run) -> int:
    spec = resolve_mode(spec, args.mode or run.get("mode"), args.ell)
    sol = solve_spec(spec)
    res = residuals(sol, spec)
    print(_human_solution(sol, res))
    if args.out:
        dump_json(solution_to_dict(sol, res), args.out)
    return EXIT_OK


def cmd_limit(args, spec, run) -> int:
    kind = args.kind or run.get("kind") or "discount"
    seq = _floats(args.seq) or run.get("seq")
    N_seq = args.N_seq or run.get("N_seq")
    tol = run.get("tol", 1e-3)
    if kind == "discount":
        reports = [limits.vanishing_discount_limit(spec, seq, tol=tol)]
    elif kind in ("noise", "cheap"):
        reports = [limits.parameter_limit(spec, kind, seq, tol=tol)]
    elif kind == "meanfield":
        reports = [limits.mean_field_convergence(spec, N_seq or seq, run.q_scaling)]
    else:
        params = [args.param or run.get("param")] if (args.param or run.get("param")) else \
            ["discount", "noise", "cheap"]
        reports = [limits.commuting_diagram_check(spec, p, seq, N_seq, tol=tol, q_scaling=run.q_scaling)
                   for p in params]
    for rep in reports:
        print(_human(rep))
    if args.csv:
        _write_rows(args.csv, ["param", "N", "coefficient", "error"],
                    [row for rep in reports for row in _convergence_rows(rep)])
    if args.out:
        dump_json([_to_dict(rep) for rep in reports] if len(reports) > 1 else _to_dict(reports[0]),
                  args.out)
    if kind == "commute":
        return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED
    return EXIT_OK


def _sim_config(args, run, spec) -> SimConfig:
    seed = args.seed if args.seed is not None else run.get("seed")
    if seed is None:
        seed = secrets.randbits(63)
    paths = args.paths or run.get("paths", 2000)
    dt = args.dt or run.get("dt", 1e-2)
    T = args.T or run.get("T")
    if T is None:
        T = np.log(1e6) / spec.ell if spec.ell > 0 else 50.0
    x0 = args.x0 if args.x0 is not None else run.get("x0", 0.0)
    return SimConfig(dt=float(dt), T=float(T), n_paths=int(paths), seed=int(seed), x0=np.asarray(x0, dtype=float))


def cmd_simulate(args, spec, run) -> int:
    spec = resolve_mode(spec, args.mode or run.get("mode"), args.ell)
    cfg = _sim_config(args, run, spec)
    sol = solve_spec(spec)
    law = equilibrium_law(sol, spec.r)
    trunc = args.truncation_tol or run.get("truncation_tol", 1e-6)
    rep = estimate_cost(spec, law, cfg, truncation_tol=trunc)
    target = sol.value(cfg.start(spec.d)) if sol.discounted else float(sol.per_player[0])
    print(rep.summary())
    print(f"analytic {target:.6g}; z-score {(rep.estimate - target) / rep.std_error:+.2f}")
    if args.csv:
        times, states = sample_paths(spec, law, cfg)
        write_paths_csv(args.csv, times, states)
    if args.out:
        d = _to_dict(rep)
        d.update(mode=rep.mode, analytic=target, bias_bound=rep.bias_bound, elapsed=rep.elapsed)
        dump_json(d, args.out)
    return EXIT_OK


def cmd_verify(args, spec, run) -> int:
    spec = resolve_mode(spec, args.mode or run.get("mode"), args.ell)
    sol = solve_spec(spec)
    report = {"residuals": residuals(sol, spec), "oracles": oracle_checks(sol, spec)}
    ok = all(v <= RESIDUAL_TOL for v in report["residuals"].values())
    ok &= all(v <= RESIDUAL_TOL for v in report["oracles"].values())
    cfg = _sim_config(args, run, spec)
    trunc = args.truncation_tol or run.get("truncation_tol", 1e-6)
    nash = nash_deviation_test(spec, sol, default_deviations(equilibrium_law(sol, spec.r)), cfg,
                               truncation_tol=trunc)
    report["nash"] = [{"K": r.law.K.tolist(), "c": r.law.c.tolist(), "gap": r.gap,
                       "std_error": r.std_error, "passed": r.passed} for r in nash.results]
    report["seed"] = cfg.seed
    ok &= nash.passed
    for k, v in {**report["residuals"], **report["oracles"]}.items():
        print(f"[{'ok' if v <= RESIDUAL_TOL else 'FAIL'}] {k}: {v:.3e}")
    for r in nash.results:
        print(f"[{'ok' if r.passed else 'FAIL'}] deviation gap {r.gap:+.4g} ± {r.std_error:.2g}")
    print(f"seed {cfg.seed}")
    report["passed"] = bool(ok)
    if args.out:
        dump_json(report, args.out)
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve, "limit": cmd_limit,
            "simulate": cmd_simulate, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lqgames", description="Solve and verify linear-quadratic N-player and mean-field games.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="game-spec config file (TOML)")
    common.add_argument("--out", help="write a JSON report here")
    common.add_argument("--csv", help="write a CSV table here")

    sub.add_parser("validate", parents=[common], help="check the standing assumptions")

    def sim_opts(sp):
        sp.add_argument("--mode", choices=MODES)
        sp.add_argument("--ell", type=float)
        sp.add_argument("--paths", type=int)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--T", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--x0", type=float, nargs="+")
        sp.add_argument("--truncation-tol", dest="truncation_tol", type=float)

    sp = sub.add_parser("solve", parents=[common], help="solve for the QG equilibrium")
    sp.add_argument("--mode", choices=MODES)
    sp.add_argument("--ell", type=float)

    sp = sub.add_parser("limit", parents=[common], help="singular-limit convergence tables")
    sp.add_argument("--kind", choices=KINDS)
    sp.add_argument("--seq", type=float, nargs="+", help="parameter values (discount, k, r or N)")
    sp.add_argument("--N-seq", dest="N_seq", type=int, nargs="+", help="player counts for commute")
    sp.add_argument("--param", choices=("discount", "noise", "cheap"), help="commute: one parameter only")

    sim_opts(sub.add_parser("simulate", parents=[common], help="Monte Carlo cost of the equilibrium"))
    sim_opts(sub.add_parser("verify", parents=[common], help="residual, oracle and deviation checks"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec, run = load_config(args.spec, validate=args.command != "validate")
        return COMMANDS[args.command](args, spec, run)
    except (ParseError, ConfigValidationError, AssumptionViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except INFEASIBLE as exc:
        print(f"infeasible: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NotAdmissible, UnstableStep, TruncationTooCoarse, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
