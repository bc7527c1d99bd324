"""Command-line front end.

Every subcommand writes ``report.json`` (deterministic: no timestamps or run
times, which go to ``timing.json``), CSV field dumps and SVG plots into
``--out``.  Exit status: 0 success, 1 solver error or failed check, 2 invalid
configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion import C2_MAX, C2_MIN, K0, Params, dispersion_eval, inversion_constants, kernel_roots
from .errors import FKWaveError, InvalidParams
from .fields import Grid, solver_grid
from .waves import SolverConfig, check_conditions, full_residual, solve_stage2, stage1_for

SCHEMA_VERSION = "1.0"
SUBCOMMANDS = ("dispersion", "stage1", "solve", "two-trans", "validate", "sweep", "check")
_DEFAULT_GRID = solver_grid()


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--c2", type=float, default=0.9, help="squared wave speed, in [0.83, 1]")
    sp.add_argument("--eps", type=float, default=0.01, help="mollification half-width")
    sp.add_argument("--gamma", type=float, default=0.0, help="kernel-mode amplitude")
    sp.add_argument("--x0", type=int, default=12, help="transition location (even integer)")
    sp.add_argument("--X", type=int, default=_DEFAULT_GRID.X, help="grid half-length")
    sp.add_argument("--m", type=int, default=_DEFAULT_GRID.m, help="grid points per unit length")
    sp.add_argument("--omega", type=float, default=1.0, help="Picard damping in (0, 1]")
    sp.add_argument("--tol-residual", type=float, default=1e-8)
    sp.add_argument("--tol-outer", type=float, default=1e-10)
    sp.add_argument("--out", type=Path, default=Path("fkwave_out"))
    sp.add_argument("--seed", type=int, default=20240611)
    sp.add_argument("--no-plots", action="store_true", help="skip SVG output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fkwave", description="Travelling waves of the advance-delay chain equation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "dispersion": "dispersion table, kernel roots and inversion constants over c^2",
        "stage1": "sgn-force wave and corrector amplitude bounds",
        "solve": "mollified wave (stage 2) and condition checks",
        "two-trans": "two-transition wave at --x0",
        "validate": "propagate the stage-2 wave on the chain",
        "sweep": "independent solves over eps, gamma, c2 or x0",
        "check": "run acceptance targets",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        _add_common(sp)
        if name == "validate":
            sp.add_argument("--K", type=int, default=64)
            sp.add_argument("--T", type=float, default=20.0)
            sp.add_argument("--dt", type=float, default=0.01)
            sp.add_argument("--force", choices=("psi_eps", "sgn"), default="psi_eps")
        if name == "sweep":
            sp.add_argument("--over", choices=("eps", "gamma", "c2", "x0"), required=True)
            sp.add_argument("--values", type=float, nargs="+", required=True)
        if name == "check":
            sp.add_argument("targets", nargs="*", default=["all"], help="criterion numbers or names (default: all)")
        if name == "dispersion":
            sp.add_argument("--points", type=int, default=18, help="number of c^2 samples")
    return parser


# -- configuration ------------------------------------------------------------

def _config(args):
    grid = Grid(args.X, args.m)
    cfg = SolverConfig(outer_tol=args.tol_outer, residual_tol=args.tol_residual, omega=args.omega)
    p = Params.from_c2(args.c2, epsilon=args.eps, gamma=args.gamma)
    return p, grid, cfg


def _given(action, argv) -> bool:
    if not action.option_strings:
        return any(not a.startswith("-") for a in argv[1:])
    return any(a == o or a.startswith(o + "=") for a in argv for o in action.option_strings)


def _echo(args, parser, argv) -> dict:
    """Flag values plus which of them were not given on the command line."""
    sub = parser._subparsers._group_actions[0].choices[args.command]
    values, defaulted = {}, []
    for action in sub._actions:
        if action.dest in ("help",):
            continue
        v = getattr(args, action.dest, None)
        values[action.dest] = str(v) if isinstance(v, Path) else v
        if not _given(action, argv):
            defaulted.append(action.dest)
    return {"command": args.command, "flags": values, "defaults_used": sorted(defaulted)}


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, columns: dict) -> None:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")


def _plot(path: Path, x, curves: dict, title: str, window: float = 24.0) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "fkwave"
    sel = np.abs(x) <= window
    fig, axes = plt.subplots(len(curves), 1, figsize=(7, 2.2 * len(curves)), sharex=True, squeeze=False)
    for ax, (name, y) in zip(axes[:, 0], curves.items()):
        ax.plot(x[sel], np.asarray(y)[sel], lw=1.0)
        ax.set_ylabel(name)
        ax.grid(alpha=0.3)
    axes[0, 0].set_title(title)
    axes[-1, 0].set_xlabel("x")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# -- subcommands --------------------------------------------------------------

def cmd_dispersion(args, p, grid, cfg, out: Path) -> dict:
    rows = []
    for c2 in np.linspace(C2_MIN, C2_MAX, args.points):
        q = Params.from_c2(float(c2))
        d0, _ = dispersion_eval(0.0, q)
        dpi, _ = dispersion_eval(math.pi, q)
        dk, dpk = dispersion_eval(K0, q)
        cert = kernel_roots(q)
        try:
            ic = inversion_constants(q)
            c1, bf = ic.C1, ic.bound_factor
        except FKWaveError:
            c1 = bf = math.inf
        rows.append({"c2": float(c2), "alpha": q.alpha, "D(0)": float(d0), "D(pi)": float(dpi), "D(k0)": float(dk),
                     "D'(k0)": float(dpk), "certified": cert.certified, "C1": c1, "bound_factor": bf})
    bfs = [r["bound_factor"] for r in rows]
    monotone = all(b2 <= b1 for b1, b2 in zip(bfs, bfs[1:]))
    _write_csv(out / "dispersion.csv", {k: [r[k] for r in rows] for k in ("c2", "alpha", "D(0)", "D(pi)", "C1",
                                                                         "bound_factor")})
    if not args.no_plots:
        zeta = np.linspace(0, 1.5 * math.pi, 600)
        d, _ = dispersion_eval(zeta, p)
        _plot(out / "dispersion.svg", zeta, {"D(zeta)": d}, f"dispersion, c^2={p.c2:g}", window=10)
    return {"table": rows, "bound_factor_monotone_nonincreasing": monotone,
            "note": "bound_factor has a pole where D'(k0/2) vanishes (c^2 ~ 0.9003); reported, not asserted"}


def cmd_stage1(args, p, grid, cfg, out: Path) -> dict:
    s1 = stage1_for(p, grid, cfg)
    x = grid.x
    res = full_residual(s1.u_p, p, "sgn")
    _write_csv(out / "fields.csv", {"x": x, "u_p": s1.samples, "r": s1.r.grid_part, "residual": res})
    if not args.no_plots:
        _plot(out / "stage1.svg", x, {"u_p": s1.samples, "r": s1.r.grid_part, "residual": res},
              f"stage 1, c^2={p.c2:g}")
    return {"stage1": s1.diagnostics}


def _wave_report(sol) -> dict:
    cr = check_conditions(sol)
    hist = [{k: v for k, v in h.items()} for h in sol.history]
    return {"wave": sol.diagnostics, "beta": sol.beta, "gamma": sol.gamma, "iterations": sol.iterations,
            "history": hist, "conditions": cr.as_dict(), "stage1": sol.stage1.diagnostics}


def cmd_solve(args, p, grid, cfg, out: Path) -> dict:
    sol = solve_stage2(p, grid, cfg)
    x = grid.x
    res = full_residual(sol.u, p)
    _write_csv(out / "fields.csv", {"x": x, "u": sol.samples, "u_p": sol.stage1.samples, "r": sol.r.grid_part,
                                    "residual": res})
    if not args.no_plots:
        _plot(out / "solve.svg", x, {"u": sol.samples, "r": sol.r.grid_part, "residual": res},
              f"stage 2, c^2={p.c2:g}, eps={p.epsilon:g}")
    return _wave_report(sol)


def cmd_two_trans(args, p, grid, cfg, out: Path) -> dict:
    from .twotrans import solve_two_transition

    s = solve_two_transition(args.x0, p, grid, cfg=cfg)
    x = grid.x
    from .fields import apply_L
    from .waves import sgn

    us = s.u.samples()
    res = apply_L(s.u, p).samples() - p.alpha * sgn(us)
    _write_csv(out / "fields.csv", {"x": x, "u": us, "v_p": s.vp.samples(), "r_tilde": s.r_tilde.grid_part,
                                    "residual": res})
    if not args.no_plots:
        _plot(out / "two_trans.svg", x, {"u": us, "r_tilde": s.r_tilde.grid_part, "residual": res},
              f"two transitions, c^2={p.c2:g}, x0={s.x0}", window=s.x0 + 12)
    return {"two_transition": s.diagnostics, "x0": s.x0, "beta_e": s.beta_e, "gamma_tilde": s.gamma_tilde}


def cmd_validate(args, p, grid, cfg, out: Path) -> dict:
    from .lattice import simulate

    sol = solve_stage2(p, grid, cfg)
    run = simulate(sol.u, p, K=args.K, T=args.T, dt=args.dt, force=args.force)
    tr = run.trajectory
    _write_csv(out / "trajectory.csv", {"t": tr.t, "max_error": tr.max_error, "energy": tr.energy})
    if not args.no_plots:
        _plot(out / "trajectory.svg", tr.t, {"max_error": tr.max_error, "energy": tr.energy},
              "chain translation error", window=math.inf)
    return {"max_error": run.max_error, "steps": run.steps, "dt": run.dt, "K": args.K, "T": args.T,
            "error_growth_ratio": tr.error_growth_ratio(), "wave": sol.diagnostics}


def _threads() -> int:
    env = os.environ.get("FKWAVE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParams(f"FKWAVE_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _sweep_point(over: str, value: float, args, grid, cfg) -> dict:
    from .twotrans import solve_two_transition

    kw = {"c2": args.c2, "epsilon": args.eps, "gamma": args.gamma}
    row = {over: value}
    try:
        if over == "x0":
            s = solve_two_transition(int(value), Params.from_c2(kw["c2"]), grid, cfg=cfg)
            row.update({k: s.diagnostics[k] for k in ("beta_e", "gamma_tilde", "residual_l2", "vp_defect_weighted",
                                                      "sign_changes", "vp_slope_at_x0")})
        else:
            key = {"eps": "epsilon", "gamma": "gamma", "c2": "c2"}[over]
            kw[key] = value
            q = Params.from_c2(kw.pop("c2"), **kw)
            sol = solve_stage2(q, grid, cfg)
            cr = check_conditions(sol)
            row.update({"beta": sol.beta, "iterations": sol.iterations, "residual_l2": sol.diagnostics["residual_l2"],
                        "r_h2": sol.diagnostics["r_h2"], "rho": sol.rho, "c1_pass": cr.c1_pass,
                        "c2p_pass": cr.c2p_pass, "c2p_left": cr.c2p_left, "c2p_right": cr.c2p_right})
        row["error"] = None
    except FKWaveError as exc:
        row["error"] = type(exc).__name__
        row["message"] = str(exc)
    return row


def cmd_sweep(args, p, grid, cfg, out: Path) -> dict:
    values = list(args.values)
    with ThreadPoolExecutor(max_workers=min(_threads(), len(values))) as pool:
        rows = list(pool.map(lambda v: _sweep_point(args.over, v, args, grid, cfg), values))
    numeric = [k for k in rows[0] if all(isinstance(r.get(k), (int, float, bool)) for r in rows)]
    _write_csv(out / "sweep.csv", {k: [float(r[k]) for r in rows] for k in numeric})
    result = {"over": args.over, "rows": rows}
    if args.over == "eps":
        ok = [r for r in rows if r["error"] is None and r["beta"] != 0]
        if len(ok) >= 2:
            e = np.log([r["eps"] for r in ok])
            b = np.log([abs(r["beta"]) for r in ok])
            result["beta_loglog_slope"] = float(np.polyfit(e, b, 1)[0])
    failed = any(r["error"] for r in rows)
    result["_failed"] = failed
    return result


def cmd_check(args, p, grid, cfg, out: Path) -> dict:
    from . import acceptance

    targets = args.targets
    if targets == ["all"]:
        targets = list(acceptance.CRITERIA)
    results = []
    for t in targets:
        if isinstance(t, str) and t.isdigit():
            t = int(t)
        if t not in acceptance.CRITERIA and t not in acceptance.CHECK_NAMES:
            raise InvalidParams(f"unknown check target {t!r}; choose from {sorted(acceptance.CHECK_NAMES)}")
        if t in (4, "inverse-bound"):
            r = acceptance.criterion_4(seed=args.seed)
        else:
            r = acceptance.run_check(t)
        print(r.line())
        results.append(r)
    return {"checks": [{k: v for k, v in r.as_dict().items() if k != "runtime"} for r in results],
            "_timing": {r.name: r.runtime for r in results},
            "_failed": not all(r.passed for r in results)}


HANDLERS = {
    "dispersion": cmd_dispersion,
    "stage1": cmd_stage1,
    "solve": cmd_solve,
    "two-trans": cmd_two_trans,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "check": cmd_check,
}


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    out: Path = args.out
    report = {"schema_version": SCHEMA_VERSION, "fkwave_version": __version__, "config": _echo(args, parser, argv)}
    t0 = time.perf_counter()
    try:
        p, grid, cfg = _config(args)
    except (InvalidParams, ValueError) as exc:
        out.mkdir(parents=True, exist_ok=True)
        report.update(status="invalid-config", error={"name": type(exc).__name__, "message": str(exc)})
        _write_json(out / "report.json", report)
        print(f"fkwave: invalid configuration: {exc}", file=sys.stderr)
        return 2
    out.mkdir(parents=True, exist_ok=True)
    report.update(params=p.as_dict(), grid=grid.as_dict(), solver=cfg.__dict__)
    code = 0
    timing = {}
    try:
        result = HANDLERS[args.command](args, p, grid, cfg, out)
        failed = result.pop("_failed", False)
        timing.update(result.pop("_timing", {}))
        report.update(status="failed" if failed else "ok", result=result)
        code = 1 if failed else 0
    except InvalidParams as exc:
        report.update(status="invalid-config", error={"name": type(exc).__name__, "message": str(exc)})
        code = 2
    except FKWaveError as exc:
        report.update(status="error", error={"name": type(exc).__name__, "message": str(exc)})
        code = 1
    timing["total_seconds"] = time.perf_counter() - t0
    _write_json(out / "report.json", report)
    _write_json(out / "timing.json", timing)
    if code:
        err = report.get("error", {}).get("name", "check failure")
        print(f"fkwave {args.command}: {err}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
