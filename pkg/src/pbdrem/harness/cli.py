"""Command line entry point: ``pbdrem run|list|check``."""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..lre_gen import check_excitation_floor
from .io import load_config_file, write_csv
from .scenarios import CATALOG, ESTIMATORS, INPUTS, PARAMETERIZATIONS, ConfigError, IntegrationError, get_scenario, simulate

DEFAULT_OUT = "pbdrem-out"


def summarize(result) -> dict:
    cfg = result.config
    d = np.abs(result["delta"])
    rep = check_excitation_floor(result.t, result["phi11_1"], result["phi21_1"], cfg.pump_damp, slope_tol=1e-3)
    out = {
        "scenario": cfg.name,
        "input": cfg.input,
        "parameterization": cfg.parameterization,
        "estimator": cfg.estimator,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "theta_tilde_abs": [float(v) for v in np.abs(result.theta_tilde()[-1])],
        "theta_rel_err_max": float(result.relative_error()[-1].max()),
        "int_delta_sq": float(result["int_delta_sq"][-1]),
        "int_abs_alpha_delta": float(result["int_abs_alpha_delta"][-1]),
        "int_phi21_sq": float(result["int_phi21_sq_1"][-1]),
        "phi21_sq_slope": rep.phi21_sq_slope,
        "phi21_not_l2": rep.phi21_not_l2,
        "delta_peak": float(d.max()),
        "delta_final": float(d[-1]),
        "wall_time": result.wall_time,
    }
    if cfg.closed_loop:
        out["qtilde_norm"] = float(np.hypot(result["qtilde1"][-1], result["qtilde2"][-1]))
    return out


def format_summary(s: dict) -> str:
    lines = [
        f"== {s['scenario']} ({s['input']}, {s['parameterization']}, {s['estimator']}; dt={s['dt']:g}, T={s['horizon']:g})",
        "   |theta~_i(T)|  " + "  ".join(f"{v:.3e}" for v in s["theta_tilde_abs"]),
        f"   max rel err    {s['theta_rel_err_max']:.3e}",
    ]
    if "qtilde_norm" in s:
        lines.append(f"   |q~(T)|        {s['qtilde_norm']:.3e} rad")
    lines += [
        f"   int Delta^2    {s['int_delta_sq']:.4e}   |Delta| peak {s['delta_peak']:.3e}, final {s['delta_final']:.3e}",
        f"   int |a Delta|  {s['int_abs_alpha_delta']:.4e}",
        f"   int Phi21^2    {s['int_phi21_sq']:.4e}   final-window slope {s['phi21_sq_slope']:.3e}"
        f" ({'still growing' if s['phi21_not_l2'] else 'flat'})",
        f"   wall time      {s['wall_time']:.2f} s",
    ]
    return "\n".join(lines)


def _resolve(target: str):
    path = Path(target)
    if target in CATALOG:
        return [get_scenario(target)]
    if path.is_file():
        return load_config_file(path)
    raise ConfigError({"scenario": f"{target!r} is neither a catalog scenario nor a config file; see `pbdrem list`"})


def _overrides(args) -> dict:
    keys = ("dt", "horizon", "estimator", "parameterization", "input")
    return {k: getattr(args, k) for k in keys if getattr(args, k) is not None}


def _out_path(cfg, out: str | None, many: bool) -> Path:
    target = out or cfg.out
    if target and target.endswith(".csv") and not many:
        return Path(target)
    return Path(target or DEFAULT_OUT) / f"{cfg.name}.csv"


def _run_one(cfg, path):
    result = simulate(cfg)
    write_csv(result, path)
    return summarize(result)


def _fail(kind: str, errors) -> int:
    print(json.dumps({"status": "error", "kind": kind, "errors": errors}, sort_keys=True))
    return 2


def cmd_run(args) -> int:
    try:
        cfgs = []
        for target in args.scenarios:
            cfgs += _resolve(target)
        changes = _overrides(args)
        cfgs = [c.replace(**changes) for c in cfgs]
    except ConfigError as exc:
        return _fail("config", exc.errors)
    except (OSError, ValueError) as exc:
        return _fail("config", {"file": str(exc)})

    many = len(cfgs) > 1
    paths = [_out_path(c, args.out, many) for c in cfgs]
    summaries = []
    try:
        if args.jobs > 1 and many:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                summaries = list(pool.map(_run_one, cfgs, paths))
        else:
            summaries = [_run_one(c, p) for c, p in zip(cfgs, paths)]
    except IntegrationError as exc:
        return _fail("integration", {"message": str(exc)})

    for s, p in zip(summaries, paths):
        if args.json:
            print(json.dumps({**s, "csv": str(p)}, sort_keys=True))
        else:
            print(format_summary(s))
            print(f"   csv            {p}")
    return 0


def cmd_list(args) -> int:
    for name, cfg in CATALOG.items():
        print(f"{name:<18} {cfg.input:<24} {cfg.parameterization:<14} {cfg.estimator:<12} T={cfg.horizon:g}s")
    return 0


def cmd_check(args) -> int:
    from .checks import CHECKS, run_checks

    keys = [k.upper() for k in args.keys] or list(CHECKS)
    unknown = [k for k in keys if k not in CHECKS]
    if unknown:
        return _fail("config", {"keys": f"unknown checks {unknown}; choose from {list(CHECKS)}"})
    results = run_checks(keys)
    for r in results:
        print(r.line())
    failed = [r.as_dict() for r in results if not r.passed]
    print(json.dumps({"status": "fail" if failed else "ok", "passed": len(results) - len(failed), "failures": failed}, sort_keys=True))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pbdrem", description="Power-balance DREM estimation and adaptive control simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate catalog scenarios or INI scenario files and write CSV")
    r.add_argument("scenarios", nargs="+", metavar="SCENARIO|CONFIG")
    r.add_argument("--dt", type=float)
    r.add_argument("--horizon", type=float)
    r.add_argument("--out", help=f"CSV file (single scenario) or directory (default {DEFAULT_OUT}/)")
    r.add_argument("--estimator", choices=sorted(ESTIMATORS))
    r.add_argument("--parameterization", choices=sorted(PARAMETERIZATIONS))
    r.add_argument("--input", choices=sorted(INPUTS))
    r.add_argument("--jobs", type=int, default=1, help="worker processes when running several scenarios")
    r.add_argument("--json", action="store_true", help="print summaries as JSON lines")
    r.set_defaults(func=cmd_run)

    ls = sub.add_parser("list", help="list the scenario catalog")
    ls.set_defaults(func=cmd_list)

    c = sub.add_parser("check", help="run the acceptance checks")
    c.add_argument("keys", nargs="*", metavar="ACn")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
