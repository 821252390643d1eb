"""Command-line harness: solvers, bath tables, divisibility scans and parameter sweeps.

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 64 usage error,
66 unreadable input, 73 output cannot be created.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bath as bathmod
from .core import NumericalError, Trajectory, ValidationError
from .exact import compare_exact_vs_master, discretize
from .lindblad import DEFAULT_DELTA, check_cp_divisibility, solve_lindblad
from .model import ModelSpec, parse_model, validate_scales
from .redfield import compare_to_lindblad, solve_redfield, trajectory_distances

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
EXIT_USAGE, EXIT_NOINPUT, EXIT_CANTCREAT = 64, 66, 73
OUTDIR_ENV = "MICROMODEL_OUTDIR"
CORRELATION_CHOICES = {"closed": "closed", "numeric": "numeric",
                       "closed-minus-remainder": "closed-minus-remainder", "delta": "delta"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(x: float) -> str:
    return f"{x:.16e}"


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


class Outputs:
    def __init__(self, directory: Path):
        self.dir = directory
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise _CannotCreate(str(exc)) from None

    def csv(self, name: str, header: list[str], rows) -> Path:
        path = self.dir / name
        try:
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
        except OSError as exc:
            raise _CannotCreate(str(exc)) from None
        return path

    def json(self, name: str, doc: dict) -> Path:
        path = self.dir / name
        try:
            path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")
        except OSError as exc:
            raise _CannotCreate(str(exc)) from None
        return path


class _CannotCreate(Exception):
    pass


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def trajectory_rows(traj: Trajectory):
    n = traj.samples.shape[1]
    header = ["t"] + [f"{p}_{i}{j}" for i in range(n) for j in range(n) for p in ("re", "im")]
    rows = []
    for t, rho in zip(traj.grid, traj.samples):
        row = [float(t)]
        for z in rho.ravel():
            row += [float(z.real), float(z.imag)]
        rows.append(row)
    return header, rows


def _grid(spec: ModelSpec, points: int, t_end: float | None = None) -> np.ndarray:
    if points < 2:
        raise UsageError("--grid-points must be at least 2")
    return np.linspace(0.0, spec.horizon if t_end is None else t_end, points)


def _solver_kwargs(args) -> dict:
    return {"rtol": args.rtol, "atol": args.atol, "fixed_step": args.fixed_step}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(spec, args, out):
    report = validate_scales(spec)
    for line in report.lines():
        print(line)
    out.json("validate.json", report.to_dict())
    return EXIT_OK


def cmd_lindblad(spec, args, out):
    traj = solve_lindblad(spec, _grid(spec, args.grid_points), **_solver_kwargs(args))
    out.csv("lindblad.csv", *trajectory_rows(traj))
    out.json("summary.json", {"command": "lindblad", "flags": traj.flags,
                              "max_trace_error": traj.trace_error.max(),
                              "min_eigenvalue": traj.min_eigenvalue.min()})
    for f in traj.flags:
        print(f"FLAG {f}")
    return EXIT_OK


def cmd_redfield(spec, args, out):
    grid = _grid(spec, args.grid_points)
    kw = _solver_kwargs(args)
    lind = solve_lindblad(spec, grid, **kw)
    red = solve_redfield(spec, grid, mode=args.correlation, **kw)
    dist = trajectory_distances(lind, red)
    out.csv("redfield.csv", *trajectory_rows(red))
    out.csv("distance.csv", ["t", "trace_distance"], [[float(t), float(d)] for t, d in zip(grid, dist)])
    out.json("summary.json", {"command": "redfield", "correlation": args.correlation or bathmod.default_mode(spec.bath),
                              "sup_trace_distance": dist.max(), "min_eigenvalue": red.min_eigenvalue.min(),
                              "flags": red.flags})
    print(f"sup trace distance Redfield-Lindblad: {dist.max():.6e}")
    return EXIT_OK


def cmd_exact(spec, args, out):
    db = discretize(spec.bath, args.modes, args.half_window * spec.bath.lam)
    grid = _grid(spec, args.grid_points)
    cmp = compare_exact_vs_master(spec, db, grid)
    p_exact = cmp.exact.excited_population
    rows = [[float(t), float(p), float(a), float(b), float(c)]
            for t, p, a, b, c in zip(grid, p_exact, cmp.exact_lindblad, cmp.exact_redfield,
                                     cmp.redfield_lindblad)]
    out.csv("exact.csv", ["t", "p_excited_exact", "d_exact_lindblad", "d_exact_redfield",
                          "d_redfield_lindblad"], rows)
    out.json("summary.json", {"command": "exact", "modes": args.modes, "half_window": db.half_window,
                              "valid_until": db.valid_until, **cmp.sups})
    for k, v in cmp.sups.items():
        print(f"sup {k}: {v:.6e}")
    return EXIT_OK


def cmd_bath(spec, args, out):
    b = spec.bath
    lam, w0 = b.lam, b.omega0
    omegas = np.linspace(max(0.0, w0 - 20 * lam), w0 + 20 * lam, args.grid_points)
    out.csv("spectral_density.csv", ["omega", "I"],
            [[float(w), float(v)] for w, v in zip(omegas, bathmod.spectral_density(b, omegas))])
    taus = np.linspace(0.0, 20.0 / lam, args.grid_points)
    rows = []
    for tau in taus:
        closed = complex(bathmod.correlation_closed_form(b, tau))
        num = bathmod.correlation_numeric(b, tau)
        rem = bathmod.remainder_numeric(b, tau)
        kh = complex(math.nan, math.nan)
        if b.family == "lorentzian" and tau > 0 and tau * math.hypot(w0, lam) >= 10:
            kh = bathmod.khalfin_asymptotic(b, tau)
        rows.append([float(tau), closed.real, closed.imag, num.real, num.imag, rem.real, rem.imag,
                     kh.real, kh.imag])
    out.csv("correlation.csv", ["tau", "re_closed", "im_closed", "re_numeric", "im_numeric",
                                "re_remainder", "im_remainder", "re_khalfin", "im_khalfin"], rows)
    diag = bathmod.delta_diagnostics(b)
    doc = {"command": "bath", "weight": diag.weight, "correlation_time": diag.correlation_time,
           "sup_width": diag.sup_width, "inverse_width": diag.inverse_width}
    out.json("summary.json", doc)
    print(f"weight {diag.weight:.12g}  correlation time {diag.correlation_time:.6g}  "
          f"support {diag.sup_width:.6g}  1/lambda {diag.inverse_width:.6g}")
    return EXIT_OK


def cmd_divisibility(spec, args, out):
    delta = args.delta
    report = check_cp_divisibility(spec, delta=delta, workers=args.workers)
    out.csv("divisibility.csv", ["t", "t_end", "min_choi_eigenvalue"],
            [[float(t), float(t + delta), float(e)] for t, e in zip(report.times, report.min_eigenvalues)])
    out.json("summary.json", {"command": "divisibility", "delta": delta, "tol": report.tol,
                              "verdict": report.verdict, "min_eigenvalue": report.min_eigenvalues.min(),
                              "negative_intervals": report.negative_intervals})
    print(f"delta = {delta:g}, min Choi eigenvalue = {report.min_eigenvalues.min():.6e}")
    print(f"verdict: {report.verdict}")
    return EXIT_OK


def fit_slope(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    ok = np.isfinite(y) & (y > 0) & (x > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def _sweep_point(spec: ModelSpec, axis: str, value: float, args) -> list[float]:
    t0 = time.perf_counter()
    grid = _grid(spec, args.grid_points)
    kw = _solver_kwargs(args)
    try:
        if axis == "lambda":
            s = spec.with_bath(lam=value, omega0=args.omega0_ratio * value)
            row = [compare_to_lindblad(s, grid, mode=args.correlation, **kw).sup, math.nan]
        elif axis == "omega0":
            s = spec.with_bath(omega0=value)
            lind = solve_lindblad(s, grid, **kw)
            with_rem = solve_redfield(s, grid, mode="closed-minus-remainder", **kw)
            without = solve_redfield(s, grid, mode="closed", **kw)
            row = [trajectory_distances(lind, with_rem).max(),
                   trajectory_distances(with_rem, without).max()]
        else:
            db = discretize(spec.bath, int(value), args.half_window * spec.bath.lam)
            row = [compare_exact_vs_master(spec, db, grid).sups["exact_lindblad"], math.nan]
    except (ValidationError, NumericalError) as exc:
        print(f"sweep point {axis}={value:g} failed: {exc}", file=sys.stderr)
        row = [math.nan, math.nan]
    return [float(value), *row, time.perf_counter() - t0]


def cmd_sweep(spec, args, out):
    values = args.values
    if values is None or len(values) < 2:
        raise UsageError("sweep needs at least two --values")
    with ThreadPoolExecutor(max(1, args.workers)) as pool:
        rows = list(pool.map(lambda v: _sweep_point(spec, args.axis, v, args), values))
    out.csv("sweep.csv", ["parameter", "sup_trace_distance", "remainder_shift", "runtime_s"], rows)
    arr = np.array(rows)
    column = 2 if args.axis == "omega0" else 1
    slope = fit_slope(arr[:, 0], arr[:, column])
    errors = arr[:, column]
    decreasing = bool(np.all(np.diff(errors) < 0))
    out.json("summary.json", {"command": "sweep", "axis": args.axis, "values": values,
                              "errors": errors, "slope": slope, "strictly_decreasing": decreasing,
                              "omega0_ratio": args.omega0_ratio})
    print(f"sweep {args.axis}: log-log slope {slope:.4f}, strictly decreasing: {decreasing}")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "lindblad": cmd_lindblad, "redfield": cmd_redfield,
            "exact": cmd_exact, "bath": cmd_bath, "divisibility": cmd_divisibility, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="micromodel", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("model", type=Path, help="model JSON file")
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUTDIR_ENV} or .)")
    p.add_argument("--grid-points", type=int, default=501)
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--atol", type=float, default=None)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="divisibility interval")
    p.add_argument("--correlation", choices=sorted(CORRELATION_CHOICES), default=None)
    p.add_argument("--allow-negative-rates", action="store_true")
    p.add_argument("--omega0-ratio", type=float, default=100.0)
    p.add_argument("--fixed-step", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--modes", type=int, default=1000, help="bath modes for the exact run")
    p.add_argument("--half-window", type=float, default=20.0, help="bath window half-width in units of lambda")
    p.add_argument("--axis", choices=("lambda", "omega0", "N_modes"), default="lambda")
    p.add_argument("--values", type=float, nargs="+", default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        text = args.model.read_text()
    except OSError as exc:
        print(f"cannot read model file: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    try:
        spec = parse_model(text, allow_negative_rates=args.allow_negative_rates)
        outdir = args.out or Path(os.environ.get(OUTDIR_ENV, "."))
        return COMMANDS[args.command](spec, args, Outputs(outdir))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _CannotCreate as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CANTCREAT
    except ValidationError as exc:
        for d in exc.diagnostics:
            print(f"invalid: {d}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
