"""Command-line experiment runner.

Usage::

    idedyn SUBCOMMAND [--config run.toml] [--out DIR] [--threads K]
                      [--alpha A] [--n-ref N] [--depth S]

Subcommands: ``simulate``, ``pullback``, ``convergence``, ``forward-limit``,
``check-invariants``. Exit codes: 0 success, 1 invariant failures, 2 config or
I/O error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import absorbing_radius, convergence_table, forward_limit_experiment
from .config import ConfigError, compile_expression, load_config
from .dynamics import Discretization, pullback_state, trajectory
from .errors import InputError, NumericalError, PreconditionError
from .invariants import run_all
from .model import BevertonHolt

SUBCOMMANDS = ("simulate", "pullback", "convergence", "forward-limit", "check-invariants")


# ---------------------------------------------------------------------------
# CSV


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def emit_csv(rows, path, header):
    """Write ``rows`` under ``header``: LF line endings, 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    """Inverse of :func:`emit_csv`; returns ``(header, rows)`` with numbers parsed."""
    def conv(s):
        try:
            return int(s)
        except ValueError:
            try:
                return float(s)
            except ValueError:
                return s
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [tuple(conv(s) for s in row) for row in r]


# ---------------------------------------------------------------------------
# helpers


def version_string():
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"],
                             cwd=here, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _make_disc(cfg, n=None):
    d = cfg.discretization
    n = int(n if n is not None else d.get("n", 64))
    degree = int(d.get("degree", 1))
    if d.get("grid", "points") == "points":
        return Discretization.from_points(cfg.model.habitat, n, degree)
    return Discretization.uniform(cfg.model.habitat, n, degree)


def _state_spec(spec, where):
    if isinstance(spec, (int, float)):
        return float(spec)
    return compile_expression(spec, ("x",), where)


def _grid_rows(prefix, state):
    x = state.disc.grid.nodes
    u = state(x)
    return [(*prefix, j, xj, uj) for j, (xj, uj) in enumerate(zip(x, u))]


def _seed_value(cfg, t, depth, meta):
    exp = cfg.experiment
    if "seed_function" in exp:
        return _state_spec(exp["seed_function"], "experiment.seed_function")
    r = absorbing_radius(cfg.model, 1.0, "pullback", t - depth)
    meta["absorbing_radius"] = {"tau": t - depth, "R": r.R, "rho": r.rho,
                                "truncation_depth": r.truncation_depth}
    return r.radius


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg, args, out, meta):
    exp = cfg.experiment
    tau, T = int(exp.get("tau", 0)), int(exp.get("T", 10))
    disc = _make_disc(cfg)
    u0 = _state_spec(exp.get("initial", 1.0), "experiment.initial")
    traj = trajectory(cfg.model, disc, tau, T, u0)
    rows = [r for s in traj for r in _grid_rows((s.time,), s)]
    emit_csv(rows, out / "trajectory.csv", ["t", "node", "x", "u"])
    meta["steps"] = T - tau
    return 0


def _levels(cfg):
    d = cfg.discretization
    return [int(n) for n in d.get("n_list", [d.get("n", 64)])]


def cmd_pullback(cfg, args, out, meta):
    exp = cfg.experiment
    t = int(exp.get("t", 0))
    depth = int(args.depth if args.depth is not None else exp.get("depth", 15))
    seed = _seed_value(cfg, t, depth, meta)
    rows = []
    for n in _levels(cfg):
        xi = pullback_state(cfg.model, _make_disc(cfg, n), t, depth, seed)
        rows += _grid_rows((n,), xi)
    emit_csv(rows, out / "pullback.csv", ["n", "node", "x", "u"])
    meta["pullback_depth"] = depth
    return 0


def cmd_convergence(cfg, args, out, meta):
    exp = cfg.experiment
    if not isinstance(cfg.model.growth, BevertonHolt):
        raise ConfigError("convergence needs Beverton-Holt growth", "model.growth.type")
    alphas = [args.alpha] if args.alpha is not None else \
        exp.get("alphas", [cfg.model.growth.alpha])
    t = int(exp.get("t", 0))
    depth = int(args.depth if args.depth is not None else exp.get("depth", 15))
    d = cfg.discretization
    n_ref = int(args.n_ref if args.n_ref is not None else d.get("n_ref", 4096))
    n_list = d.get("n_list", [16, 32, 64, 128, 256, 512, 1024])
    tables = {}
    meta["seeds"] = {}
    for alpha in alphas:
        sub = cfg.with_alpha(alpha)
        m = {}
        seed = _seed_value(sub, t, depth, m)
        tab = convergence_table(sub.model, n_list, depth, t, seed, d.get("grid", "points"),
                                n_ref, threads=args.threads)
        tables[alpha] = tab
        meta["seeds"][str(alpha)] = {"seed": seed, **m}
        emit_csv([(r.n, r.err, r.c) for r in tab.rows],
                 out / f"convergence_alpha={_fmt(float(alpha))}.csv", ["n", "err_n", "c_n"])
    head = f"{'n':>6} || " + " | ".join(f"alpha={_fmt(float(a)):<17}" for a in alphas)
    lines = [head, "-" * len(head)]
    for i, n in enumerate(n_list):
        lines.append(f"{n:>6} || " + " | ".join(
            f"{tables[a].rows[i].c:.15f}  " for a in alphas))
    text = "\n".join(lines) + "\n"
    (out / "table.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    meta.update({"pullback_depth": depth, "n_ref": n_ref,
                 "norm": "exact sup of piecewise-linear differences"})
    return 0


def cmd_forward_limit(cfg, args, out, meta):
    exp = cfg.experiment
    tau = int(exp.get("tau", 0))
    horizon = int(exp.get("horizon", 30))
    seeds = [_state_spec(s, "experiment.seeds") for s in exp.get("seeds", [1.0])]
    tol = float(exp.get("tol", 1e-12))
    levels = [int(n) for n in exp.get("levels", _levels(cfg))]
    degree = int(cfg.discretization.get("degree", 1))
    discs = [Discretization.uniform(cfg.model.habitat, n, degree) for n in levels]
    res = forward_limit_experiment(cfg.model, discs, tau, horizon, seeds, tol)
    emit_csv([(lv.level, s, dist) for lv in res for s, dist in lv.distances],
             out / "forward_distances.csv", ["n", "s", "distance"])
    emit_csv([r for lv in res for r in _grid_rows((lv.level,), lv.u_star)],
             out / "ustar.csv", ["n", "node", "x", "u"])
    meta["fixed_point_iterations"] = {str(lv.level): lv.fixed_point_info["iterations"]
                                      for lv in res}
    return 0


def cmd_check_invariants(cfg, args, out, meta):
    exp = cfg.experiment
    d = cfg.discretization
    results = run_all(cfg.model, int(d.get("n", 64)), int(d.get("degree", 1)),
                      int(exp.get("t", 0)), int(exp.get("trials", 100)), cfg.seed)
    emit_csv([(r.name, r.trials, r.failures, r.worst) for r in results],
             out / "invariants.csv", ["check", "trials", "failures", "worst"])
    failures = sum(r.failures for r in results)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.failures}/{r.trials} failures")
    print(f"{len(results) - sum(not r.ok for r in results)} checks passed, "
          f"{failures} failures")
    meta["invariant_failures"] = failures
    return 0 if failures == 0 else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "pullback": cmd_pullback,
    "convergence": cmd_convergence,
    "forward-limit": cmd_forward_limit,
    "check-invariants": cmd_check_invariants,
}


def build_parser():
    p = argparse.ArgumentParser(prog="idedyn", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="TOML run configuration (default: built-in setup)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--alpha", type=float, help="override the Beverton-Holt exponent")
    p.add_argument("--n-ref", type=int, dest="n_ref", help="finest admissible level")
    p.add_argument("--depth", type=int, help="pullback depth s")
    return p


def _origin(exc):
    tb = exc.__traceback__
    name = "idedyn"
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("idedyn."):
            name = mod
        tb = tb.tb_next
    return name


def main(argv=None):
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load_config(args.config)
        if args.alpha is not None and args.subcommand != "convergence":
            cfg = cfg.with_alpha(args.alpha)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1", "--threads")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        meta = {}
        status = COMMANDS[args.subcommand](cfg, args, out, meta)
    except InputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, PreconditionError, FloatingPointError) as exc:
        print(f"numerical error [{_origin(exc)}]: {exc}", file=sys.stderr)
        return 3
    meta = {
        "version": version_string(),
        "subcommand": args.subcommand,
        "overrides": {k: getattr(args, k) for k in ("alpha", "n_ref", "depth", "threads")},
        "wall_time_s": round(time.perf_counter() - start, 3),
        **meta,
    }
    try:
        with open(out / "metadata.txt", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(meta, indent=2, default=_fmt) + "\n")
            fh.write("--- config ---\n")
            fh.write(cfg.text if cfg.text.endswith("\n") else cfg.text + "\n")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
