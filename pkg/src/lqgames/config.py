"""Game-spec config files and machine-readable reports.

Configs are TOML with flat top-level keys and matrix literals as nested
bracketed rows::

    A = [[0.0]]
    k = 1.0
    r = 1.0
    ell = 0.0
    N = 1            # or "mf" for the mean-field game
    Q = [[0.5]]      # Qhat, Bhat, ... when N = "mf"
    B = [[0.0]]
    C = [[0.0]]      # or one matrix per player
    D = [[0.0]]
    H = [0.0]
    Delta = [0.0]

    [run]            # optional command defaults
    seed = 7

Every top-level key except ``q_scaling`` is required, and unknown keys are
errors.
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .ergodic import QGSolution
from .errors import ConfigValidationError, DimensionMismatch, ParseError
from .game_model import CostStructure, GameSpec, MFCost, validate_assumptions

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

REQUIRED = ("A", "k", "r", "ell", "N", "Q", "B", "C", "D", "H", "Delta")
OPTIONAL = ("q_scaling",)
RUN_KEYS = {"mode": str, "kind": str, "param": str, "seq": list, "N_seq": list,
            "paths": int, "dt": float, "T": float, "seed": int, "x0": list,
            "tol": float, "truncation_tol": float}
MODES = ("ergodic", "discounted", "mf-ergodic", "mf-discounted")
KINDS = ("discount", "noise", "cheap", "meanfield", "commute")


@dataclass
class RunConfig:
    """Command defaults from the ``[run]`` table; CLI flags override them."""
    options: dict = field(default_factory=dict)
    q_scaling: str = "inverse_n"

    def get(self, key, default=None):
        return self.options.get(key, default)


def _number(doc, key, kind=float):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"key '{key}': expected a number, got {v!r}")
    return kind(v)


def _array(doc, key, ndim):
    v = doc[key]
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"key '{key}': not a numeric array ({exc})") from exc
    if a.ndim not in ndim:
        raise ParseError(f"key '{key}': expected {' or '.join(f'{n}-level' for n in ndim)} "
                         f"nesting, got {a.ndim}")
    return a


def _players(doc) -> int | None:
    N = doc["N"]
    if N == "mf":
        return None
    if isinstance(N, bool) or not isinstance(N, int):
        raise ParseError(f"key 'N': expected a positive integer or \"mf\", got {N!r}")
    return N


def parse_config(text: str, validate: bool = True) -> tuple[GameSpec, RunConfig]:
    """Parse config text into a game spec and run defaults.

    Raises
    ------
    ParseError
        Malformed text (with line and column), missing or unknown keys,
        wrong types or inconsistent dimensions.
    ConfigValidationError
        The spec fails the standing assumptions (only if ``validate``).
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"malformed config: {exc}") from exc
    run = doc.pop("run", {})
    if not isinstance(run, dict):
        raise ParseError("key 'run': expected a table")
    unknown = sorted(set(doc) - set(REQUIRED) - set(OPTIONAL))
    if unknown:
        raise ParseError(f"unknown keys: {', '.join(unknown)}")
    missing = [k for k in REQUIRED if k not in doc]
    if missing:
        raise ParseError(f"missing keys: {', '.join(missing)}")
    bad_run = sorted(set(run) - set(RUN_KEYS))
    if bad_run:
        raise ParseError(f"unknown keys in [run]: {', '.join(bad_run)}")
    for key, typ in RUN_KEYS.items():
        if key in run:
            v = run[key]
            ok = isinstance(v, typ) or (typ is float and isinstance(v, int) and not isinstance(v, bool))
            if not ok or isinstance(v, bool):
                raise ParseError(f"key 'run.{key}': expected {typ.__name__}, got {v!r}")
    if run.get("mode", MODES[0]) not in MODES:
        raise ParseError(f"key 'run.mode': expected one of {MODES}")
    if run.get("kind", KINDS[0]) not in KINDS:
        raise ParseError(f"key 'run.kind': expected one of {KINDS}")

    N = _players(doc)
    q_scaling = doc.get("q_scaling", "inverse_n")
    if q_scaling not in ("inverse_n", "constant"):
        raise ParseError(f"key 'q_scaling': expected \"inverse_n\" or \"constant\", got {q_scaling!r}")
    mats = {k: _array(doc, k, (2,)) for k in ("A", "Q", "B")}
    for k in ("C", "D"):
        mats[k] = _array(doc, k, (2,) if N is None else (2, 3))
    vecs = {k: _array(doc, k, (1,)) for k in ("H", "Delta")}
    try:
        if N is None:
            cost = MFCost(Qhat=mats["Q"], Bhat=mats["B"], Chat=mats["C"], Dhat=mats["D"], **vecs)
        else:
            cost = CostStructure(Q=mats["Q"], B=mats["B"], C=mats["C"], D=mats["D"], **vecs)
        spec = GameSpec(A=mats["A"], k=_number(doc, "k"), r=_number(doc, "r"), cost=cost, N=N,
                        ell=_number(doc, "ell"))
    except DimensionMismatch as exc:
        raise ParseError(f"dimension mismatch: {exc}") from exc
    if validate:
        rep = validate_assumptions(spec)
        if not rep.ok:
            raise ConfigValidationError(rep.failures)
    return spec, RunConfig(options=dict(run), q_scaling=q_scaling)


def load_config(path, validate: bool = True) -> tuple[GameSpec, RunConfig]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), validate=validate)


# ---------------------------------------------------------------------------
# JSON

def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def solution_to_dict(sol: QGSolution, residuals: dict | None = None) -> dict:
    """Full-precision coefficients; Python floats round-trip exactly through JSON."""
    return {"mode": sol.mode, "ell": sol.ell, "Lambda": sol.Lambda.tolist(),
            "Sigma": sol.Sigma.tolist(), "rho": sol.rho.tolist(), "mu": sol.mu.tolist(),
            "per_player": np.asarray(sol.per_player).tolist(),
            "residuals": _jsonable(residuals or {})}


def solution_from_dict(d: dict) -> QGSolution:
    try:
        return QGSolution(Lambda=np.array(d["Lambda"], dtype=float), Sigma=np.array(d["Sigma"], dtype=float),
                          rho=np.array(d["rho"], dtype=float), mu=np.array(d["mu"], dtype=float),
                          per_player=np.array(d["per_player"], dtype=float), mode=d["mode"],
                          ell=float(d.get("ell", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"not a solution report: {exc}") from exc


def solution_from_json(text: str) -> QGSolution:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    return solution_from_dict(d.get("solution", d))


def dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2)
        fh.write("\n")
