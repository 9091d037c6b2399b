"""Command-line front-end: analyze / simulate / signature / hopf / sweep.

Exit codes: 0 success, 2 condition-check failure, 3 numerical failure,
4 configuration error.  All outputs are deterministic given the same
configuration (fixed iteration orders, no wall-clock content).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .core import PairState
from .dynamics import Trajectory, default_mmo_ic, discard_transient, integrate
from .errors import ConfigError, CuspkitError, HopfNotFoundError
from .manifold import cusp_test, find_symmetric_fold
from .models import build_model
from .reduction import (check_conditions, desingularized_eigenvalues,
                        reduction_coefficients)
from .signature import classify_mmo
from .spectra import (find_symmetric_equilibrium, jacobian_blocks,
                      locate_singular_hopf)

SCHEMA_VERSION = 1

_DEFAULT_BRACKETS = {
    "curtu": (0.5, 0.99),
    "morris_lecar": (-50.0, -10.0),
}
_DEFAULT_T_END = {"curtu": 3000.0, "morris_lecar": 20000.0}

_CONFIG_KEYS = {
    "model", "epsilon", "params", "bracket", "t_end", "rtol", "atol",
    "max_step", "sao_threshold", "transient_fraction", "param",
    "hopf_bracket", "out",
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit 4)."""

    def error(self, message):
        raise ConfigError(message)


def _load_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {args.config}: {exc}") from exc
        unknown = set(cfg) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _parse_sets(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, val = item.partition("=")
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise ConfigError(f"--set {key}: {val!r} is not a number") from exc
    return out


def _resolve_model(args, cfg):
    name = args.model or cfg.get("model")
    if not name:
        raise ConfigError("no model given (use --model or a config file)")
    params = dict(cfg.get("params", {}))
    params.update(_parse_sets(getattr(args, "set", None)))
    epsilon = args.epsilon if args.epsilon is not None else cfg.get("epsilon")
    return build_model(name, params, epsilon)


def _emit_json(payload: dict, out_path):
    text = json.dumps(payload, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _parse_pair(text, what):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except Exception as exc:
        raise ConfigError(f"{what} expects 'lo,hi', got {text!r}") from exc
    return lo, hi


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _analysis_payload(model, bracket):
    roots = find_symmetric_fold(model, bracket)
    if not roots:
        raise CuspkitError(
            f"no symmetric fold in bracket {bracket} for model {model.name!r}")
    # the fold of interest is the one the default brackets isolate; with
    # several roots keep them all and analyze the last (upper) one
    x_star = roots[-1]
    cusp = cusp_test(model, x_star)
    rc = reduction_coefficients(model, x_star)
    conditions = check_conditions(model, x_star, rc=rc)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "model": model.name,
        "epsilon": model.epsilon,
        "params": dict(model.params),
        "bracket": list(bracket),
        "fold_roots": roots,
        "cusp": cusp.to_dict(),
        "reduced": rc.to_dict(),
        "conditions": conditions.to_dict(),
    }
    sao = None
    if conditions.all_satisfied:
        sao = desingularized_eigenvalues(rc, conditions=conditions)
        payload["sao"] = sao.to_dict()
    else:
        payload["sao"] = None
    try:
        eq = find_symmetric_equilibrium(model)
        blocks = jacobian_blocks(model, eq[0], eq[1])
        payload["equilibrium"] = {
            "x_eq": eq[0],
            "y_eq": eq[1],
            "w_eq": eq[1] - cusp.y_star,
            "classification": blocks.classification,
        }
    except CuspkitError as exc:
        payload["equilibrium"] = {"error": str(exc)}
    return payload, conditions


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    model = _resolve_model(args, cfg)
    bracket = (_parse_pair(args.bracket, "--bracket") if args.bracket
               else tuple(cfg.get("bracket", _DEFAULT_BRACKETS.get(model.name))))
    if bracket is None or bracket[0] is None:
        raise ConfigError("no fold bracket known for this model; pass --bracket")
    payload, conditions = _analysis_payload(model, bracket)
    _emit_json(payload, args.out or cfg.get("out"))
    return 0 if conditions.all_satisfied else 2


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    model = _resolve_model(args, cfg)
    t_end = args.t_end or cfg.get("t_end") or _DEFAULT_T_END.get(model.name, 1000.0)
    rtol = args.rtol or cfg.get("rtol", 1e-9)
    atol = args.atol or cfg.get("atol", 1e-11)
    max_step = args.max_step or cfg.get("max_step") or math.inf
    if args.ic:
        vals = [float(v) for v in args.ic.split(",")]
        if len(vals) != 4:
            raise ConfigError("--ic expects four comma-separated values")
        s0 = PairState(*vals)
    elif args.symmetric_ic:
        eq = find_symmetric_equilibrium(model)
        s0 = PairState(eq[0], eq[0], eq[1], eq[1])
    else:
        s0 = default_mmo_ic(model)
    traj = integrate(model, s0, (0.0, float(t_end)), rtol=rtol, atol=atol,
                     max_step=max_step)
    channels = (model.channel_names if args.model_names
                else ("x1", "x2", "y1", "y2"))
    out = args.out or cfg.get("out")
    if not out:
        raise ConfigError("simulate needs an output path (--out)")
    traj.to_csv(out, channels=channels)
    return 0


def cmd_signature(args) -> int:
    cfg = _load_config(args)
    traj = Trajectory.from_csv(args.input)
    thr = args.sao_threshold or cfg.get("sao_threshold", 0.25)
    frac = (args.transient_fraction if args.transient_fraction is not None
            else cfg.get("transient_fraction", 0.0))
    if frac:
        t_cut = traj.t[0] + frac * (traj.t[-1] - traj.t[0])
        keep = traj.t >= t_cut
        traj = Trajectory(t=traj.t[keep], states=traj.states[keep],
                          derivs=None, meta=traj.meta)
    if len(traj) < 3:
        sig_payload = {"schema_version": SCHEMA_VERSION, "events": [],
                       "signature_string": "", "alternating_cells": None,
                       "sao_counts_per_epoch": [], "n_lao_events": 0,
                       "sao_threshold": thr,
                       "warning": "too few samples for analysis"}
        _emit_json(sig_payload, args.out or cfg.get("out"))
        return 0
    sig = classify_mmo(traj, sao_threshold=thr)
    payload = {"schema_version": SCHEMA_VERSION, **sig.to_dict()}
    _emit_json(payload, args.out or cfg.get("out"))
    if args.events_csv:
        sig.events_to_csv(args.events_csv)
    return 0


def cmd_hopf(args) -> int:
    cfg = _load_config(args)
    model = _resolve_model(args, cfg)
    param = args.param or cfg.get("param")
    if not param:
        raise ConfigError("hopf needs --param")
    btext = args.bracket or cfg.get("hopf_bracket")
    if not btext:
        raise ConfigError("hopf needs --bracket lo,hi")
    bracket = _parse_pair(btext, "--bracket") if isinstance(btext, str) \
        else tuple(btext)
    try:
        result = locate_singular_hopf(model, param, bracket)
    except HopfNotFoundError as exc:
        payload = {"schema_version": SCHEMA_VERSION, "model": model.name,
                   "parameter_name": param, "bracket": list(bracket),
                   "found": False, "reason": str(exc)}
        _emit_json(payload, args.out or cfg.get("out"))
        return 3
    payload = {"schema_version": SCHEMA_VERSION, "model": model.name,
               "found": True, **result.to_dict()}
    _emit_json(payload, args.out or cfg.get("out"))
    return 0


def _sweep_cell(model_name, base_params, epsilon, overrides, bracket, t_end,
                sao_threshold):
    """Analysis + bounded simulation summary for one grid cell."""
    row = dict(overrides)
    try:
        params = dict(base_params)
        params.update(overrides)
        model = build_model(model_name, params, epsilon)
        roots = find_symmetric_fold(model, bracket)
        if not roots:
            row["error"] = "no fold in bracket"
            return row
        x_star = roots[-1]
        rc = reduction_coefficients(model, x_star)
        conditions = check_conditions(model, x_star, rc=rc)
        row.update({
            "x_star": x_star,
            "gamma": rc.gamma,
            "omega": rc.omega,
            "g0": rc.g0,
            "all_satisfied": conditions.all_satisfied,
        })
        for key in ("c1", "c2", "c3", "c4", "c5", "c6"):
            row[key] = getattr(conditions, key)
        eq = find_symmetric_equilibrium(model)
        row["w_eq"] = eq[1] - rc.y_star
        traj = integrate(model, default_mmo_ic(model), (0.0, t_end))
        sig = classify_mmo(discard_transient(traj), sao_threshold=sao_threshold)
        kinds = {e.kind for e in sig.events}
        row["n_lao_events"] = sig.n_lao_events
        row["signature"] = sig.signature_string
        row["alternating_cells"] = sig.alternating_cells
        row["mmo_present"] = ("SAO" in kinds and "LAO" in kinds)
        row["error"] = ""
    except CuspkitError as exc:
        row["error"] = str(exc).replace(",", ";")
    return row


_SWEEP_COLUMNS = [
    "x_star", "gamma", "omega", "g0",
    "c1", "c2", "c3", "c4", "c5", "c6", "all_satisfied",
    "w_eq", "n_lao_events", "signature", "alternating_cells", "mmo_present",
    "error",
]


def _parse_grid(spec_text):
    """name=lo:hi:n -> (name, [values])."""
    try:
        name, _, rng = spec_text.partition("=")
        lo, hi, num = rng.split(":")
        values = np.linspace(float(lo), float(hi), int(num))
    except Exception as exc:
        raise ConfigError(
            f"grid expects name=lo:hi:n, got {spec_text!r}") from exc
    return name.strip(), [float(v) for v in values]


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    model_name = args.model or cfg.get("model")
    if not model_name:
        raise ConfigError("sweep needs --model")
    probe = build_model(model_name, _parse_sets(args.set), args.epsilon
                        if args.epsilon is not None else cfg.get("epsilon"))
    bracket = (_parse_pair(args.bracket, "--bracket") if args.bracket
               else _DEFAULT_BRACKETS.get(model_name))
    if bracket is None:
        raise ConfigError("no fold bracket known; pass --bracket")
    t_end = float(args.t_end or cfg.get("t_end") or 2000.0)
    thr = args.sao_threshold or cfg.get("sao_threshold", 0.25)

    name1, vals1 = _parse_grid(args.grid)
    grids = [(name1, vals1)]
    if args.grid2:
        grids.append(_parse_grid(args.grid2))
    cells = [{}]
    for name, vals in grids:
        if name not in probe.params:
            raise ConfigError(f"unknown sweep parameter {name!r}")
        cells = [dict(c, **{name: v}) for c in cells for v in vals]

    jobs = args.jobs or 1
    cap = os.environ.get("CUSPKIT_THREADS")
    if cap:
        jobs = min(jobs, max(1, int(cap)))

    base_params = _parse_sets(args.set)
    eps = args.epsilon if args.epsilon is not None else cfg.get("epsilon")

    def work(cell):
        return _sweep_cell(model_name, base_params, eps, cell, bracket,
                           t_end, thr)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(work, cells))
    else:
        rows = [work(c) for c in cells]

    param_names = [g[0] for g in grids]
    header = param_names + _SWEEP_COLUMNS
    lines = [",".join(header)]
    for row in rows:
        fields = []
        for col in header:
            val = row.get(col, "")
            if isinstance(val, float):
                fields.append(f"{val:.17g}")
            elif isinstance(val, bool):
                fields.append(str(val).lower())
            elif val is None:
                fields.append("")
            else:
                fields.append(str(val))
        lines.append(",".join(fields))
    text = "\n".join(lines) + "\n"
    out = args.out or cfg.get("out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--model", help="model name (curtu | morris_lecar)")
    sub.add_argument("--epsilon", type=float, default=None)
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="parameter override (repeatable)")
    sub.add_argument("--out", "-o", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cuspkit",
                     description="cusped-singularity / MMO analysis toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("analyze", parents=[], help="full condition pipeline")
    _add_common(p)
    p.add_argument("--bracket", help="fold search bracket 'lo,hi'")
    p.set_defaults(func=cmd_analyze)

    p = subs.add_parser("simulate", help="integrate the full system to CSV")
    _add_common(p)
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--atol", type=float, default=None)
    p.add_argument("--max-step", dest="max_step", type=float, default=None)
    p.add_argument("--ic", help="initial state 'x1,x2,y1,y2'")
    p.add_argument("--symmetric-ic", action="store_true",
                   help="start exactly on the symmetric equilibrium")
    p.add_argument("--model-names", action="store_true",
                   help="use model-specific channel names in the CSV header")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("signature", help="SAO/LAO decomposition of a CSV")
    _add_common(p)
    p.add_argument("--input", "-i", required=True, help="trajectory CSV")
    p.add_argument("--sao-threshold", dest="sao_threshold", type=float,
                   default=None)
    p.add_argument("--transient-fraction", dest="transient_fraction",
                   type=float, default=None)
    p.add_argument("--events-csv", help="also write the event table CSV")
    p.set_defaults(func=cmd_signature)

    p = subs.add_parser("hopf", help="locate the singular Hopf point")
    _add_common(p)
    p.add_argument("--param", help="parameter to continue in")
    p.add_argument("--bracket", help="parameter bracket 'lo,hi'")
    p.set_defaults(func=cmd_hopf)

    p = subs.add_parser("sweep", help="parameter-grid batch analysis")
    _add_common(p)
    p.add_argument("--grid", required=True, metavar="NAME=LO:HI:N")
    p.add_argument("--grid2", metavar="NAME=LO:HI:N")
    p.add_argument("--bracket", help="fold search bracket 'lo,hi'")
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--sao-threshold", dest="sao_threshold", type=float,
                   default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except CuspkitError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
