"""Command-line front end.

Subcommands: perron, sweep, growth, trajectory, criteria, ergodic-set,
contraction, preset.  Models come from a built-in preset (--preset) or a
JSON model file (--model).  Artifacts (summary.json plus command-specific
CSVs) are written atomically into --out; a one-line summary goes to
stdout.  Exit codes: 0 success, 2 validation error, 3 solver
non-convergence; failures are reported as JSON on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .criteria import build_report, find_alpha_star, perron_derivative
from .dynamics import growth_rate
from .ergodic_set import invariance_check, trace_boundary
from .errors import (
    NoConvergenceError,
    SwitchGrowthError,
    WrongVariantError,
)
from .hilbert import contraction_rate_bound, verify_contraction
from .hj import (
    SimplexGrid,
    classify_attractor,
    dump_solution,
    feedback_trajectory,
    lambda_vs_constant,
    solve_ergodic,
)
from .matrices import Segment, control_set_to_dict, load_control_set, spectral, vertices
from .models import PRESET_NAMES, preset

__all__ = ["main"]

_DEFAULT_SEED = 0


def _atomic_write(path: str, writer) -> None:
    """Write via a temp file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _np_default(obj):
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_json(path: str, data: dict) -> None:
    _atomic_write(path, lambda fh: json.dump(data, fh, indent=2,
                                             sort_keys=True,
                                             default=_np_default))


def _write_csv(path: str, header, rows) -> None:
    def writer(fh):
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    _atomic_write(path, writer)


def _load_model(args):
    if args.preset is not None:
        return preset(args.preset).control_set
    return load_control_set(args.model)


def _default_grid(cs) -> int:
    return 2000 if cs.n == 2 else 200


def _solve(cs, args):
    n_grid = args.grid or _default_grid(cs)
    grid = SimplexGrid.build(cs.n, n_grid)
    return solve_ergodic(cs, grid, dt_cfl=args.dt, tol=args.tol)


def _traj_rows(traj):
    for t, y, lm in zip(traj.times, traj.states, traj.logmass):
        yield [repr(float(t))] + [repr(float(c)) for c in y] + [repr(float(lm))]


def _random_start(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng([seed, 1]).dirichlet(np.ones(n))


def _cmd_perron(args, out):
    cs = _load_model(args)
    summary = {"command": "perron", "vertices": []}
    for k, m in enumerate(vertices(cs)):
        s = spectral(m)
        summary["vertices"].append({
            "index": k,
            "lambda": s.lambda1,
            "e1": [float(v) for v in s.e1],
            "phi1": [float(v) for v in s.phi1],
        })
    if isinstance(cs, Segment):
        star = find_alpha_star(cs)
        summary["alphaStar"] = star.alpha
        summary["lambdaStar"] = star.value
        summary["boundary"] = star.boundary
    best = max(v["lambda"] for v in summary["vertices"])
    line = f"perron: max vertex lambda={best:.6g}"
    if "lambdaStar" in summary:
        line += (f" alphaStar={summary['alphaStar']:.6g}"
                 f" lambdaStar={summary['lambdaStar']:.6g}")
    return summary, line


def _cmd_sweep(args, out):
    cs = _load_model(args)
    if not isinstance(cs, Segment):
        raise WrongVariantError("sweep requires a segment model")
    npts = args.grid or 100
    alphas = (np.array([cs.a]) if cs.a == cs.A
              else np.linspace(cs.a, cs.A, npts))
    rows = []
    for alpha in alphas:
        lam = spectral(_segment_at(cs, alpha)).lambda1
        dlam = perron_derivative(cs, float(alpha))
        rows.append([repr(float(alpha)), repr(lam), repr(dlam)])
    _write_csv(os.path.join(out, "lambda_sweep.csv"),
               ["alpha", "lambda", "dlambda_dalpha"], rows)
    star = find_alpha_star(cs)
    summary = {"command": "sweep", "points": len(rows),
               "alphaStar": star.alpha, "lambdaStar": star.value,
               "boundary": star.boundary}
    return summary, (f"sweep: {len(rows)} points, alphaStar={star.alpha:.6g} "
                     f"lambdaStar={star.value:.6g}")


def _segment_at(cs: Segment, alpha: float):
    from .matrices import at
    return at(cs, float(alpha))


def _tol_fix(sol) -> float:
    """Fixed-point tolerance: the bang-bang feedback chatters at the grid
    scale near an equilibrium, so allow a few cells of residual motion."""
    return max(1e-4, 4.0 * sol.grid.spacing)


def _cmd_growth(args, out):
    cs = _load_model(args)
    sol = _solve(cs, args)
    dump_solution(sol, os.path.join(out, "hj_solution.csv"))
    slack = lambda_vs_constant(sol, cs)
    y0 = _random_start(cs.n, args.seed)
    traj = feedback_trajectory(sol, y0, horizon=args.horizon,
                               dt=args.dt or 0.01, record_every=10)
    att = classify_attractor(traj, transient=args.horizon / 4.0,
                             tol_fix=_tol_fix(sol), tol_cycle=1e-2)
    summary = {
        "command": "growth",
        "lambda": sol.lam,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "gridN": sol.grid.resolution,
        "slack": slack.to_dict(),
        "attractor": {"kind": att.kind,
                      "point": None if att.point is None
                      else [float(v) for v in att.point],
                      "period": att.period},
    }
    line = (f"growth: lambda={sol.lam:.6g} slack={slack.slack:.3g} "
            f"certified={slack.certified} attractor={att.kind}")
    return summary, line


def _cmd_trajectory(args, out):
    cs = _load_model(args)
    sol = _solve(cs, args)
    y0 = _random_start(cs.n, args.seed)
    dt = args.dt or 0.01
    traj = feedback_trajectory(sol, y0, horizon=args.horizon, dt=dt,
                               record_every=10)
    att = classify_attractor(traj, transient=args.horizon / 4.0,
                             tol_fix=_tol_fix(sol), tol_cycle=1e-2)
    header = ["t"] + [f"y{k + 1}" for k in range(cs.n)] + ["logmass"]
    _write_csv(os.path.join(out, "trajectory.csv"), header, _traj_rows(traj))
    rate = float(traj.logmass[-1] / traj.times[-1])
    summary = {"command": "trajectory", "lambda": sol.lam,
               "trajectoryRate": rate,
               "attractor": {"kind": att.kind, "period": att.period}}
    return summary, (f"trajectory: rate={rate:.6g} lambda={sol.lam:.6g} "
                     f"attractor={att.kind}")


def _cmd_criteria(args, out):
    cs = _load_model(args)
    if not isinstance(cs, Segment):
        raise WrongVariantError("criteria requires a segment model")
    report = build_report(cs, omegas=args.omega or ())
    _write_json(os.path.join(out, "criteria.json"), report.to_dict())
    summary = {"command": "criteria", **report.to_dict()}
    regime = "periodic-improves" if report.high_freq > 0 else "constant-optimal"
    return summary, (f"criteria: alphaStar={report.alpha_star:.6g} "
                     f"highFreq={report.high_freq:.3e} ({regime}) "
                     f"identityResidual={report.identity_residual:.1e}")


def _cmd_ergodic_set(args, out):
    cs = _load_model(args)
    if not isinstance(cs, Segment):
        raise WrongVariantError("ergodic-set requires a segment model")
    dt = args.dt or 0.01
    b = trace_boundary(cs, horizon=args.horizon, dt=dt)
    _write_csv(os.path.join(out, "ergodic_boundary.csv"),
               [f"y{k + 1}" for k in range(cs.n)],
               ([repr(float(c)) for c in row] for row in b.closed_polyline))
    report = invariance_check(b, cs, trials=args.trials, horizon=args.horizon,
                              seed=args.seed)
    summary = {"command": "ergodic-set", **report.to_dict(),
               "zLow": [float(v) for v in b.z_low],
               "zHigh": [float(v) for v in b.z_high]}
    return summary, (f"ergodic-set: inside {report.inside_pass}/{report.trials} "
                     f"attract {report.attract_pass}/{report.trials} "
                     f"delta={report.delta_boundary:.3g}")


def _cmd_contraction(args, out):
    cs = _load_model(args)
    mu = contraction_rate_bound(cs)
    summary = {"command": "contraction", "mu": mu, "checks": []}
    line = f"contraction: mu={mu}"
    if mu is not None:
        for t in (0.5, 1.0, 5.0):
            rep = verify_contraction(cs, t=t, trials=args.trials, seed=args.seed)
            summary["checks"].append(rep.to_dict())
        worst = min(c["passes"] for c in summary["checks"])
        line += (f" passes>={worst}/{args.trials} at t in (0.5, 1, 5)")
    return summary, line


def _cmd_preset(args, out):
    if args.action == "list":
        summary = {"command": "preset", "presets": list(PRESET_NAMES)}
        return summary, "presets: " + ", ".join(PRESET_NAMES)
    p = preset(args.name)
    model = control_set_to_dict(p.control_set)
    path = os.path.join(out, f"{args.name}.json")
    _write_json(path, model)
    summary = {"command": "preset", "exported": args.name, "path": path,
               "parameters": p.parameters}
    return summary, f"preset: exported {args.name} to {path}"


def _add_model_flags(p):
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--model", help="path to a JSON model file")
    p.add_argument("--grid", type=int, default=None, metavar="N")
    p.add_argument("--dt", type=float, default=None, metavar="X")
    p.add_argument("--tol", type=float, default=1e-9, metavar="X")
    p.add_argument("--horizon", type=float, default=500.0, metavar="T")
    p.add_argument("--omega", type=lambda s: [float(w) for w in s.split(",")],
                   default=None, metavar="W[,W...]")
    p.add_argument("--seed", type=int, default=_DEFAULT_SEED, metavar="S")
    p.add_argument("--trials", type=int, default=200, metavar="K")
    p.add_argument("--out", default=".", metavar="DIR")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="switchgrowth",
        description="Growth-rate optimization of switched positive linear systems")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {}
    for name, fn in [("perron", _cmd_perron), ("sweep", _cmd_sweep),
                     ("growth", _cmd_growth), ("trajectory", _cmd_trajectory),
                     ("criteria", _cmd_criteria),
                     ("ergodic-set", _cmd_ergodic_set),
                     ("contraction", _cmd_contraction)]:
        p = sub.add_parser(name)
        _add_model_flags(p)
        handlers[name] = fn
    p = sub.add_parser("preset")
    p.add_argument("action", choices=["list", "export"])
    p.add_argument("name", nargs="?", choices=PRESET_NAMES)
    p.add_argument("--out", default=".", metavar="DIR")
    handlers["preset"] = _cmd_preset
    return parser, handlers


def main(argv=None) -> int:
    parser, handlers = _build_parser()
    args = parser.parse_args(argv)
    if args.command != "preset":
        if (args.preset is None) == (args.model is None):
            _emit_error("UsageError",
                        "exactly one of --preset or --model is required")
            return 2
    elif args.action == "export" and args.name is None:
        _emit_error("UsageError", "preset export requires a preset name")
        return 2
    out = args.out
    os.makedirs(out, exist_ok=True)
    try:
        summary, line = handlers[args.command](args, out)
    except NoConvergenceError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 3
    except (SwitchGrowthError, json.JSONDecodeError, OSError, KeyError,
            ValueError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 2
    _write_json(os.path.join(out, "summary.json"), summary)
    print(line)
    return 0


def _emit_error(kind: str, message: str) -> None:
    json.dump({"error": kind, "message": message}, sys.stderr)
    sys.stderr.write("\n")


if __name__ == "__main__":
    sys.exit(main())
