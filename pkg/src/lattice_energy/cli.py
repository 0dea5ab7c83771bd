"""Command-line front end.

Subcommands: energy, sweep, optimize, curves, render, verify.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 numeric failure (convergence or optimizer).

Configuration arguments are preset strings (``hexagonal@1``,
``union3:1/3,1/3;2/3,2/3``, ``tensor:<1|0,1/2>x<2|0>``) or JSON documents
with keys ``basis`` (list of generator columns), ``shifts`` and
``shift_coords`` (``cartesian`` or ``lattice``).

Set ``LATTICE_ENERGY_THREADS`` to cap the number of worker threads used by
``sweep``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .configs import parse_config
from .energy import PATHS, energy
from .exceptions import (
    ConvergenceError,
    DomainError,
    OptimizationError,
    ParseError,
    ValidationError,
)
from .geometry import GaussianPotential, Lattice
from .verify import compare_configs

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

SWEEP_HELP = """CSV columns: alpha, then E_i and err_i for each configuration i (in the
order given), then margin_i and margin_err_i for i >= 1. margin_i is
E_i - E_0 for equal densities, computed from dual fluctuations in the
wide-Gaussian regime so that it keeps full relative precision. Lines
starting with '#' are metadata."""

CURVES_HELP = """CSV columns: x1, x2, curve_id, polyline. curve_id is c1, c2 or
intersection; polyline numbers the traced pieces (or the intersection).
Lines starting with '#' are metadata, including the intersection count."""


def _threads() -> int:
    raw = os.environ.get("LATTICE_ENERGY_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"LATTICE_ENERGY_THREADS must be an integer, got {raw!r}") from None


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _meta(lines: dict) -> str:
    out = [f"# generated {_timestamp()}", f"# lattice_energy {__version__}"]
    out += [f"# {k}: {v}" for k, v in lines.items()]
    return "\n".join(out) + "\n"


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _alpha_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ParseError("alpha grid must be lo:hi:n or lo:hi:n:log", 0)
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ParseError(f"bad alpha grid {text!r}", 0) from None
    if not (lo > 0 and hi >= lo and n >= 1):
        raise ValidationError("alpha grid needs 0 < lo <= hi and n >= 1")
    if len(parts) == 4:
        if parts[3] != "log":
            raise ParseError("the fourth alpha-grid field may only be 'log'", len(text) - len(parts[3]))
        return np.logspace(math.log10(lo), math.log10(hi), n)
    return np.linspace(lo, hi, n)


# --- energy -------------------------------------------------------------------


def cmd_energy(args) -> int:
    cfg = parse_config(args.config)
    pot = GaussianPotential(args.alpha, args.pi_scaled)
    res = energy(cfg, pot, args.tol, path=args.path)
    out = {
        "config": args.config,
        "alpha": args.alpha,
        "pi_scaled": args.pi_scaled,
        "value": res.value,
        "error_bound": res.trunc_error,
        "path": res.path,
        "radius": res.radius,
        "tol": args.tol,
    }
    if args.json:
        print(json.dumps(out))
    else:
        for k, v in out.items():
            print(f"{k}: {v!r}" if isinstance(v, float) else f"{k}: {v}")
    return EXIT_OK


# --- sweep --------------------------------------------------------------------


def sweep_rows(configs, alphas, pi_scaled: bool, tol: float, threads: int = 1):
    """One row per alpha: energies, error bounds, then margins against the first configuration."""

    def row(alpha):
        pot = GaussianPotential(alpha, pi_scaled)
        vals = [energy(c, pot, tol) for c in configs]
        out = [float(alpha)]
        for v in vals:
            out += [v.value, v.trunc_error]
        for c, v in zip(configs[1:], vals[1:]):
            if abs(c.density - configs[0].density) <= 1e-9 * configs[0].density:
                m, e, _ = compare_configs(configs[0], c, pot)
            else:
                m, e = v.value - vals[0].value, v.trunc_error + vals[0].trunc_error
            out += [m, e]
        return out

    if threads <= 1:
        return [row(a) for a in alphas]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(row, alphas))


def cmd_sweep(args) -> int:
    configs = [parse_config(s) for s in args.configs]
    alphas = _alpha_grid(args.alpha_grid)
    rows = sweep_rows(configs, alphas, args.pi_scaled, args.tol, _threads())
    header = ["alpha"]
    for i in range(len(configs)):
        header += [f"E_{i}", f"err_{i}"]
    for i in range(1, len(configs)):
        header += [f"margin_{i}", f"margin_err_{i}"]
    meta = {f"config_{i}": s for i, s in enumerate(args.configs)}
    meta.update({"alpha_grid": args.alpha_grid, "pi_scaled": args.pi_scaled, "tol": args.tol})
    if args.json:
        _write(json.dumps({"meta": meta, "columns": header, "rows": rows}) + "\n", args.out)
    else:
        _write(_meta(meta) + _csv_text(header, rows), args.out)
    return EXIT_OK


# --- optimize -----------------------------------------------------------------


def _base_lattice(name: str) -> Lattice:
    from .configs import hexagonal_lattice

    if name == "square":
        return Lattice(np.eye(2))
    if name == "hexagonal":
        return hexagonal_lattice()
    if name.startswith("rect="):
        return Lattice(np.diag([1.0, float(name[5:])]))
    raise ParseError(f"unknown base lattice {name!r}; use square, hexagonal or rect=a", 0)


def cmd_optimize(args) -> int:
    from .optimize import gaps_1d, minimize_1d, minimize_shift_union2, minimize_union3

    out = {"target": args.target, "alpha": args.alpha, "pi_scaled": args.pi_scaled}
    if args.target == "union2":
        r = minimize_shift_union2(_base_lattice(args.base), args.alpha, pi_scaled=args.pi_scaled)
        out.update(base=args.base, argmin=r.x.tolist(), value=r.energy.value, heuristic=r.heuristic)
    elif args.target == "union3":
        if not args.pi_scaled:
            raise ValidationError("union3 optimization is defined for the pi-scaled convention")
        r = minimize_union3(args.alpha)
        out.update(argmin=[r.x.tolist(), r.y.tolist()], value=r.energy.value, F=r.F, heuristic=r.heuristic)
    else:
        s = minimize_1d(args.n, args.alpha, pi_scaled=args.pi_scaled, seed=args.seed)
        out.update(n=args.n, argmin=s.tolist(), gaps=gaps_1d(s).tolist(), heuristic=True)
    if args.json:
        print(json.dumps(out))
    else:
        for k, v in out.items():
            print(f"{k}: {v}")
    return EXIT_OK


# --- SVG helpers ------------------------------------------------------------------

MARKERS = (
    '<circle cx="{x:.4f}" cy="{y:.4f}" r="{r:.4f}" fill="#1f4e79"/>',
    '<circle cx="{x:.4f}" cy="{y:.4f}" r="{r:.4f}" fill="none" stroke="#c0392b" stroke-width="{w:.4f}"/>',
    '<rect x="{x0:.4f}" y="{y0:.4f}" width="{s:.4f}" height="{s:.4f}" fill="#27ae60"/>',
    '<path d="M{x:.4f},{yt:.4f} L{xr:.4f},{yb:.4f} L{xl:.4f},{yb:.4f} Z" fill="#8e44ad"/>',
)


def _svg(width: float, height: float, body: list[str], view: tuple[float, float, float, float]) -> str:
    vb = " ".join(f"{v:.4f}" for v in view)
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" viewBox="{vb}">'
    return "\n".join([head, *body, "</svg>"]) + "\n"


def render_svg(points: np.ndarray, labels: np.ndarray, radius: float) -> str:
    r = radius * 0.012
    body = [f'<circle cx="0" cy="0" r="{radius:.4f}" fill="none" stroke="#999" stroke-width="{r / 3:.4f}"/>']
    for (x, y), lab in zip(points, labels):
        y = -y  # SVG y axis points down
        tmpl = MARKERS[int(lab) % len(MARKERS)]
        body.append(
            tmpl.format(x=x, y=y, r=r, w=r / 2, x0=x - r, y0=y - r, s=2 * r, yt=y - r, yb=y + r, xl=x - r, xr=x + r)
        )
    m = radius * 1.05
    return _svg(600, 600, body, (-m, -m, 2 * m, 2 * m))


def curves_svg(cs) -> str:
    body = ['<rect x="0" y="0" width="1" height="1" fill="none" stroke="#000" stroke-width="0.002"/>']
    styles = {"c1": 'stroke="#1f4e79"', "c2": 'stroke="#c0392b" stroke-dasharray="0.01,0.006"'}
    for name, curves in (("c1", cs.c1), ("c2", cs.c2)):
        for c in curves:
            pts = " ".join(f"{x:.5f},{1 - y:.5f}" for x, y in c)
            body.append(f'<polyline points="{pts}" fill="none" {styles[name]} stroke-width="0.003"/>')
    for x, y in cs.intersections:
        body.append(f'<circle cx="{x:.5f}" cy="{1 - y:.5f}" r="0.008" fill="#000" class="intersection"/>')
    return _svg(600, 600, body, (-0.02, -0.02, 1.04, 1.04))


# --- curves -------------------------------------------------------------------------


def cmd_curves(args) -> int:
    from .optimize import curve_rows, curves_to_dict, trace_curves

    if not args.alpha > 0:
        raise ValidationError("alpha must be positive")
    cs = trace_curves(args.alpha, args.grid)
    n = cs.n_intersections
    meta = {"alpha": args.alpha, "grid": args.grid, "pi_scaled": True, "n_intersections": n}
    if n != 4:
        meta["note"] = f"intersection count {n} differs from 4"
    if args.out_csv:
        _write(_meta(meta) + _csv_text(["x1", "x2", "curve_id", "polyline"], curve_rows(cs)), args.out_csv)
    if args.out_svg:
        _write(curves_svg(cs), args.out_svg)
    summary = {**meta, "intersections": cs.intersections.tolist(), "max_residual": float(cs.residuals.max(initial=0.0))}
    if args.json:
        summary.update(curves_to_dict(cs))
        print(json.dumps(summary))
    elif not args.out_csv or args.out_csv != "-":
        for k, v in summary.items():
            print(f"{k}: {v}")
    return EXIT_OK


# --- render ---------------------------------------------------------------------------


def cmd_render(args) -> int:
    cfg = parse_config(args.config)
    if cfg.dimension != 2:
        raise ValidationError("render draws planar configurations only")
    if not args.radius > 0:
        raise ValidationError("radius must be positive")
    pts, labels = cfg.points_within(args.radius)
    _write(render_svg(pts, labels, args.radius), args.out_svg)
    counts = np.bincount(labels, minlength=cfg.n_shifts).tolist()
    out = {
        "config": args.config,
        "radius": args.radius,
        "n_points": int(len(pts)),
        "per_shift_class": counts,
        "expected": cfg.density * math.pi * args.radius**2,
    }
    if args.out_svg not in (None, "-"):
        print(json.dumps(out) if args.json else "\n".join(f"{k}: {v}" for k, v in out.items()))
    return EXIT_OK


# --- verify -----------------------------------------------------------------------------


def cmd_verify(args) -> int:
    from .verify import run_all

    reports = run_all(args.tol, only=args.only)
    data = {
        "generated": _timestamp(),
        "tol": args.tol,
        "all_passed": all(r.passed for r in reports),
        "checks": [r.to_dict() for r in reports],
    }
    if args.report:
        _write(json.dumps(data, indent=2) + "\n", args.report)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: margin={r.margin:.3e} budget={r.error_budget:.3e}")
    return EXIT_OK if data["all_passed"] else EXIT_VERIFY


# --- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lattice-energy", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, pi_default: bool, tol: bool = True):
        sp.add_argument(
            "--pi-scaled",
            action=argparse.BooleanOptionalAction,
            default=pi_default,
            help="Gaussian exp(-pi alpha r^2) instead of exp(-alpha r^2)",
        )
        if tol:
            sp.add_argument("--tol", type=float, default=1e-12, help="absolute truncation tolerance (default 1e-12)")
        sp.add_argument("--json", action="store_true", help="JSON output")

    e = sub.add_parser("energy", help="energy of one configuration")
    e.add_argument("config")
    e.add_argument("--alpha", type=float, required=True)
    e.add_argument("--path", choices=PATHS, default="auto")
    common(e, False)
    e.set_defaults(func=cmd_energy)

    s = sub.add_parser(
        "sweep", help="energies over an alpha grid", epilog=SWEEP_HELP, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    s.add_argument("configs", nargs="+")
    s.add_argument("--alpha-grid", default="0.01:100:200:log", help="lo:hi:n[:log] (default 0.01:100:200:log)")
    s.add_argument("--out", default=None, help="output file (default stdout)")
    s.add_argument("--csv", action="store_true", help="CSV output (the default)")
    common(s, True)
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("optimize", help="optimize shift parameters")
    o.add_argument("target", choices=("union2", "union3", "1d"))
    o.add_argument("--alpha", type=float, required=True)
    o.add_argument("--base", default="square", help="union2 base lattice: square, hexagonal or rect=a")
    o.add_argument("--n", type=int, default=3, help="number of points per period for 1d")
    o.add_argument("--seed", type=int, default=0)
    common(o, True, tol=False)
    o.set_defaults(func=cmd_optimize)

    c = sub.add_parser(
        "curves", help="trace the critical-point curves", epilog=CURVES_HELP, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    c.add_argument("--alpha", type=float, required=True, help="pi-scaled width")
    c.add_argument("--grid", type=int, default=512)
    c.add_argument("--out-csv", default=None)
    c.add_argument("--out-svg", default=None)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_curves)

    r = sub.add_parser("render", help="SVG scatter of a configuration")
    r.add_argument("config")
    r.add_argument("--radius", type=float, default=3.0)
    r.add_argument("--out-svg", default=None, help="output file (default stdout)")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_render)

    v = sub.add_parser("verify", help="run all numerical checks")
    v.add_argument("--tol", type=float, default=1e-12, help="requested relative accuracy (default 1e-12)")
    v.add_argument("--report", default=None, help="write a JSON report here")
    v.add_argument("--only", nargs="+", default=None, help="run only the named checks")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, OptimizationError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
