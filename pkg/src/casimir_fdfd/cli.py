"""Command-line interface.

::

    casimir-fdfd force CONFIG [-o out.csv] [--no-timing] [--jobs N]
    casimir-fdfd integrand CONFIG --at VALUE [-o out.csv]
    casimir-fdfd stressmap CONFIG --at VALUE --w W --component xy [--pol TM] [-o map.txt]
    casimir-fdfd validate [--quick]
    casimir-fdfd run CONFIG            # dispatch on the config's "mode"

Forces are per polarization sums along ``force_axis`` of the target,
positive toward increasing coordinate, in the units given in the header.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ConfigError, load_config
from .force import ForceProblem, compute_force_modes, force_unit
from .green_stress import stress_map, write_raster
from .linear_solver import SolveOptions

__all__ = ["main", "run_sweep", "run_integrand", "run_stressmap", "run_validate"]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return repr(float(x))


def _problem(cfg, value):
    scene = cfg.scene(value)
    options = SolveOptions(rel_tol=cfg.solve_rel_tol) if cfg.solver == "cg" else None
    return scene, ForceProblem(scene, cfg.dx(value), cfg.polarizations, subtract=cfg.subtract, solver=cfg.solver,
                               options=options)


def _sweep_point(cfg, value):
    """One CSV row's worth of numbers (or an error marker)."""
    t0 = time.perf_counter()
    try:
        scene, problem = _problem(cfg, value)
        mode = cfg.quadrature_mode
        res = compute_force_modes(scene, problem.dx, cfg.polarizations, cfg.quad, modes=(mode,),
                                  problem=problem)[mode]
        ax = cfg.force_axis
        parts = {p: float(res.parts[p][ax]) for p in res.parts}
        total = float(res.F[ax])
        pfa = cfg.pfa(value)
        return {
            "status": "ok",
            "TM": parts.get("TM"),
            "TE": parts.get("TE"),
            "total": total,
            "ratio": None if pfa is None else total / pfa,
            "error": res.error,
            "n_evals": res.n_evals,
            "dx": problem.dx,
            "unit": res.unit,
            "seconds": time.perf_counter() - t0,
        }
    except Exception as exc:  # noqa: BLE001 - recorded as a row-level error marker
        msg = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        return {"status": f"error: {msg}", "seconds": time.perf_counter() - t0}


def run_sweep(cfg, out, timing=True, jobs=1):
    """Write one CSV row per sweep value to ``out``, flushing after each."""
    var = cfg.sweep_variable or "point"
    values = cfg.sweep_values if cfg.sweep_variable else (None,)
    dim = cfg.scene(values[0] if values else None).dimension
    unit = force_unit(dim, cfg.quadrature_mode)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([var, f"F_TM [{unit}]", f"F_TE [{unit}]", f"F_total [{unit}]", "F/F_PFA",
                     f"quad_error [{unit}]", "n_evals", "dx [a]", "wall_clock [s]", "status"])
    out.flush()
    if not values:
        return []
    rows = []
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = pool.map(_sweep_point, [cfg] * len(values), values)
            for v, r in zip(values, results):
                rows.append(_write_row(writer, out, v, r, timing))
    else:
        for v in values:
            rows.append(_write_row(writer, out, v, _sweep_point(cfg, v), timing))
    return rows


def _write_row(writer, out, value, r, timing):
    label = "" if value is None else _fmt(value)
    if r["status"] != "ok":
        writer.writerow([label, "nan", "nan", "nan", "nan", "nan", "", "", _fmt(r["seconds"]) if timing else "",
                         r["status"]])
    else:
        writer.writerow([label, _fmt(r["TM"]), _fmt(r["TE"]), _fmt(r["total"]), _fmt(r["ratio"]), _fmt(r["error"]),
                         str(r["n_evals"]), _fmt(r["dx"]), f"{r['seconds']:.3f}" if timing else "", "ok"])
    out.flush()
    return r


def run_integrand(cfg, value, out, ws=None):
    """CSV of the force integrand at the sweep value ``value``.

    Without ``ws`` the rows are the adaptive quadrature's own samples.
    """
    scene, problem = _problem(cfg, value)
    ax = cfg.force_axis
    mode = cfg.quadrature_mode
    if ws is None:
        res = compute_force_modes(scene, problem.dx, cfg.polarizations, cfg.quad, modes=(mode,), problem=problem)[mode]
        samples = [(w, {p: res.integrand[p][i][ax] for p in cfg.polarizations}) for i, w in enumerate(res.w_samples)]
    else:
        samples = []
        for w in ws:
            v = problem.stacked(w, cfg.quad).reshape(len(cfg.polarizations), -1)
            samples.append((w, {p: v[i][ax] for i, p in enumerate(cfg.polarizations)}))
    unit = force_unit(scene.dimension, "2d")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["xi [c/a]", "w [2*pi*c/a]", f"integrand_TM [{unit} per c/a]", f"integrand_TE [{unit} per c/a]"])
    for w, vals in samples:
        writer.writerow([_fmt(w), _fmt(w / (2 * math.pi)), _fmt(vals.get("TM")), _fmt(vals.get("TE"))])
    out.flush()


def run_stressmap(cfg, value, w, component, polarization, path):
    """Interaction-stress raster at ``w`` (units of 2 pi c/a)."""
    scene = cfg.scene(value)
    dx = cfg.dx(value)
    values = stress_map(scene, dx, 2 * math.pi * w, polarization, component)
    write_raster(path, values, dx, w, component)
    return values


def run_validate(quick=False, out=None):
    """1D three-method suite plus the vacuum and Newton invariants.

    Each line reads ``PASS``/``FAIL``, the check, the measured value and
    the bound.  Returns the number of failures.
    """
    from . import validation

    out = sys.stdout if out is None else out
    failures = 0
    for name, ok, detail in validation.run_checks(quick=quick):
        failures += 0 if ok else 1
        out.write(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}\n")
        out.flush()
    return failures


def _parser():
    p = argparse.ArgumentParser(prog="casimir-fdfd", description="Casimir forces from grid Green's functions")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("force", help="force for every sweep value (CSV)")
    f.add_argument("config")
    f.add_argument("-o", "--output", help="CSV path (default stdout)")
    f.add_argument("--no-timing", action="store_true", help="leave the wall-clock column empty (byte-reproducible)")
    f.add_argument("--jobs", type=int, default=1, help="sweep points run in parallel processes")

    g = sub.add_parser("integrand", help="force integrand samples (CSV)")
    g.add_argument("config")
    g.add_argument("--at", type=float, default=None, help="sweep value")
    g.add_argument("--xi", default=None, help="comma-separated angular frequencies instead of the adaptive samples")
    g.add_argument("-o", "--output")

    s = sub.add_parser("stressmap", help="interaction stress raster")
    s.add_argument("config")
    s.add_argument("--at", type=float, default=None, help="sweep value")
    s.add_argument("--w", type=float, required=True, help="imaginary frequency in units of 2 pi c/a")
    s.add_argument("--component", default="xx", choices=["xx", "xy", "yy"])
    s.add_argument("--pol", default="TM", choices=["TM", "TE"])
    s.add_argument("-o", "--output", default="stressmap.txt")

    v = sub.add_parser("validate", help="1D method agreement and invariants")
    v.add_argument("--quick", action="store_true", help="skip the grid-refinement study")

    r = sub.add_parser("run", help="run a config according to its mode")
    r.add_argument("config")
    r.add_argument("-o", "--output")
    r.add_argument("--no-timing", action="store_true")
    return p


def _open(path):
    return sys.stdout if path is None else open(path, "w", newline="")


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "validate":
            return 1 if run_validate(quick=args.quick) else 0
        cfg = load_config(args.config)
        command = args.command
        if command == "run":
            command = {"force2d": "force", "force3d-zinv": "force", "integrand-dump": "integrand",
                       "stress-map": "stressmap", "validate-1d": "validate"}[cfg.mode]
            if command == "validate":
                return 1 if run_validate() else 0
            if command == "stressmap":
                raw = cfg.raw.get("stress_map", {})
                run_stressmap(cfg, raw.get("at"), float(raw.get("w", 1.0)), raw.get("component", "xx"),
                              raw.get("polarization", "TM"), args.output or "stressmap.txt")
                return 0
            if command == "integrand":
                out = _open(args.output)
                run_integrand(cfg, cfg.raw.get("integrand_at"), out)
                return 0
            out = _open(args.output)
            rows = run_sweep(cfg, out, timing=not args.no_timing)
            return 1 if any(r["status"] != "ok" for r in rows) else 0
        if command == "force":
            out = _open(args.output)
            rows = run_sweep(cfg, out, timing=not args.no_timing, jobs=args.jobs)
            return 1 if any(r["status"] != "ok" for r in rows) else 0
        if command == "integrand":
            ws = None if args.xi is None else [float(x) for x in args.xi.split(",")]
            run_integrand(cfg, args.at, _open(args.output), ws)
            return 0
        if command == "stressmap":
            run_stressmap(cfg, args.at, args.w, args.component, args.pol, args.output)
            return 0
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
