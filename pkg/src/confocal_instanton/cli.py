"""Command-line driver.

Exit codes: 0 success, 1 a verification check failed, 2 configuration error.
Reals are written as the shortest decimal that round-trips (``repr``); CSV
files use a header row, commas and LF line endings.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
import time

import numpy as np

from . import checks
from .confocal import EllipsoidalPoint, FocalTriple, from_cartesian, to_cartesian
from .dynamics import ReducedState, Trajectory, guard_zone, integrate
from .errors import DomainError
from .field import connection_cartesian, potential_cartesian
from .waves import BRANCHES, BranchODE, box_points, integrate_branch, pde_residual

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


# --- parsing helpers ------------------------------------------------------------


def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected {n} comma-separated numbers, got {text!r}")
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{what}: expected {n} finite comma-separated numbers, got {text!r}")
    return vals


def _triple(text: str) -> FocalTriple:
    try:
        return FocalTriple(*_floats(text, 3, "--lambdas"))
    except DomainError as exc:
        raise ConfigError(str(exc))


def _axis(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid axis must be lo:hi:count, got {spec!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid axis must be lo:hi:count, got {spec!r}")
    if count < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or (count > 1 and hi <= lo):
        raise ConfigError(f"bad grid axis {spec!r}")
    return np.linspace(lo, hi, count)


def parse_grid(spec: str) -> list[np.ndarray]:
    """``lo:hi:count`` for all three axes, or three such specs separated by commas."""
    axes = spec.split(",")
    if len(axes) == 1:
        axes = axes * 3
    if len(axes) != 3:
        raise ConfigError(f"grid spec needs one or three axes, got {spec!r}")
    return [_axis(a) for a in axes]


def _positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(f"{name} must be positive, got {value}")


# --- output ---------------------------------------------------------------------


def _num(v):
    """JSON-safe number: NaN and infinities become null."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else None


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (float, int, np.floating, np.integer, bool, np.bool_)):
        return _num(obj)
    return obj


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _records(header, rows) -> list[dict]:
    return [dict(zip(header, row)) for row in rows]


# --- commands -------------------------------------------------------------------


def run_checks(f: FocalTriple, samples: int, seed: int, h: float, tol: float,
               timing: bool = False) -> list[checks.CheckResult]:
    """The verify suite.  Flat triples run only the flat-limit oracles.

    A stage that raises is recorded as a failed check carrying the error
    message, so a report is always produced.
    """
    rng = np.random.default_rng(seed)
    n_big = 10 * samples
    stages = [
        ("special", lambda: checks.check_special(f, samples, seed)),
        ("fields", lambda: checks.check_fields(f, samples, seed, h)),
    ]
    if f.lam1 != f.lam3:
        stages = [
            ("group", lambda: checks.check_group(n_big, rng)),
            ("profile", lambda: [checks.check_profile_ode(f)]),
            ("equivalence", lambda: [checks.check_potential_equivalence(f, n_big, rng)]),
        ] + stages
    if f.is_strict:
        stages += [
            ("coordinates", lambda: checks.check_coordinates(f, n_big, rng)),
            ("geodesics", lambda: checks.check_geodesics(f, rng, tol=tol)),
            ("waves", lambda: checks.check_waves(f, rng, h=h)),
        ]
    results = []
    for name, stage in stages:
        t0 = time.perf_counter()
        try:
            out = stage()
        except (DomainError, OverflowError, ValueError) as exc:
            out = [checks.CheckResult(name, math.inf, math.nan, 0, {"error": str(exc)})]
        if timing:
            dt = time.perf_counter() - t0
            for r in out:
                r.extra["wall_time"] = dt
        results += out
    return results


def cmd_verify(args) -> int:
    f = _triple(args.lambdas)
    if args.samples < 1:
        raise ConfigError("--samples must be at least 1")
    _positive("--h", args.h)
    _positive("--tol", args.tol)
    results = run_checks(f, args.samples, args.seed, args.h, args.tol, args.timing)
    passed = all(r.passed for r in results)
    rows = [r.as_dict() for r in results]
    if args.format == "csv":
        header = ["name", "max_residual", "tolerance", "passed", "samples"]
        text = to_csv(header, [[d[k] for k in header] for d in rows])
    else:
        text = to_json({
            "lambdas": f.values.tolist(),
            "samples": args.samples,
            "seed": args.seed,
            "h": args.h,
            "tol": args.tol,
            "passed": passed,
            "checks": rows,
        })
    _emit(text, args.output)
    return EXIT_OK if passed else EXIT_FAILED


def cmd_transform(args) -> int:
    f = _triple(args.lambdas)
    f.require_strict()
    if (args.point is None) == (args.ellipsoidal is None):
        raise ConfigError("give exactly one of --point and --ellipsoidal")
    if args.point is not None:
        c = np.array(_floats(args.point, 3, "--point"))
        p = from_cartesian(c, f)
    else:
        lam, mu, nu = _floats(args.ellipsoidal, 3, "--ellipsoidal")
        signs = tuple(1 if s >= 0 else -1 for s in _floats(args.signs, 3, "--signs"))
        p = EllipsoidalPoint(lam, mu, nu, signs)
        c = to_cartesian(p, f)
    _emit(to_json({
        "lambdas": f.values.tolist(),
        "cartesian": c.tolist(),
        "ellipsoidal": {
            "lambda": p.lam,
            "mu": p.mu,
            "nu": p.nu,
            "signs": list(p.signs),
            "degenerate": list(p.degenerate),
        },
    }), args.output)
    return EXIT_OK


POTENTIAL_COLUMNS = ("x", "y", "z", "V", "omega_1", "omega_2", "omega_3", "masked")


def potential_rows(f: FocalTriple, axes) -> list[tuple]:
    """Grid samples of ``V`` and ``omega``.  Nodes where ``V`` (or, for a strict
    triple, ``omega``) is undefined are kept with ``masked = 1``."""
    rows = []
    for x in axes[0]:
        for y in axes[1]:
            for z in axes[2]:
                c = np.array([x, y, z])
                V, omega, masked = math.nan, np.full(3, math.nan), False
                try:
                    V = potential_cartesian(c, f)
                    if not math.isfinite(V):
                        raise DomainError("non-finite potential")
                    if f.is_strict:
                        omega = connection_cartesian(c, f)
                except DomainError:
                    masked = True
                rows.append((x, y, z, V, *omega, masked))
    return rows


def cmd_potential(args) -> int:
    f = _triple(args.lambdas)
    rows = potential_rows(f, parse_grid(args.grid))
    if args.format == "json":
        text = to_json({"lambdas": f.values.tolist(), "rows": _records(POTENTIAL_COLUMNS, rows)})
    else:
        text = to_csv(POTENTIAL_COLUMNS, rows)
    _emit(text, args.output)
    return EXIT_OK


def _initial_state(f: FocalTriple, args) -> ReducedState:
    x0 = np.array(_floats(args.x0, 3, "--x0"))
    if args.p0 is not None:
        return ReducedState(x0, _floats(args.p0, 3, "--p0"), args.e)
    try:
        return checks.on_shell_state(x0, x0, f, args.e)
    except ValueError as exc:
        raise ConfigError(str(exc))


def cmd_geodesic(args) -> int:
    f = _triple(args.lambdas)
    f.require_strict()
    _positive("--tol", args.tol)
    if not math.isfinite(args.t):
        raise ConfigError("--t must be finite")
    s0 = _initial_state(f, args)
    if guard_zone(s0.position, f, s0.e, args.guard) <= 0:
        raise ConfigError(f"initial point {s0.position.tolist()} lies in the guard zone")
    traj = integrate(s0, f, args.t, tol=args.tol, guard=args.guard, n_out=args.samples)
    header = Trajectory.COLUMNS + ("status",)
    rows = [(*row, traj.status) for row in traj.rows()]
    if args.format == "json":
        text = to_json({"lambdas": f.values.tolist(), "e": s0.e, "status": traj.status,
                        "rows": _records(Trajectory.COLUMNS, traj.rows())})
    else:
        text = to_csv(header, rows)
    _emit(text, args.output)
    return EXIT_OK


def cmd_waves(args) -> int:
    f = _triple(args.lambdas)
    f.require_strict()
    _positive("--h", args.h)
    if args.samples < 1:
        raise ConfigError("--samples must be at least 1")
    centre, half = checks.default_wave_box(f)
    if args.centre is not None:
        lam, mu, nu = _floats(args.centre, 3, "--centre")
        centre = EllipsoidalPoint(lam, mu, nu)
    rng = np.random.default_rng(args.seed)
    pts = box_points(centre, half, args.samples, f, rng)
    resid = pde_residual(args.E, args.a, args.b, f, pts, h=args.h)
    resid_off = pde_residual(args.E, args.a, args.b, f, pts, h=args.h,
                             perturb={"mu": (0.1, 0.0)})
    rows = []
    statuses = {}
    for name, xi0, hw in zip(BRANCHES, centre.coords, half):
        ode = BranchODE(name, (xi0 - hw, xi0 + hw), args.E, args.a, args.b, f)
        sol = integrate_branch(ode, 1.0, 0.0, n=args.points)
        statuses[name] = sol.status
        rows += [(name, xi, u, du) for xi, u, du in zip(sol.xi, sol.u, sol.du)]
    summary = {
        "lambdas": f.values.tolist(),
        "E": args.E,
        "a": args.a,
        "b": args.b,
        "h": args.h,
        "points": args.samples,
        "pde_residual": resid,
        "pde_residual_offset_a": resid_off,
        "tolerance": checks.TOLERANCES["wave_residual"],
        "passed": bool(resid <= checks.TOLERANCES["wave_residual"] and resid_off > resid),
        "branch_status": statuses,
    }
    header = ("branch", "xi", "u", "du")
    if args.format == "json":
        summary["samples"] = _records(header, rows)
        _emit(to_json(summary), args.output)
    else:
        _emit(to_csv(header, rows), args.output)
        sys.stderr.write(to_json(summary))
    return EXIT_OK


# --- argument parser ------------------------------------------------------------


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    # Options that describe their own default in words keep that wording only.
    def _get_help_string(self, action):
        if "(default:" in (action.help or ""):
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    parser = argparse.ArgumentParser(
        prog="confocal-instanton", formatter_class=fmt,
        description="Self-dual metrics over confocal quadrics: checks, transforms, "
                    "field grids, geodesics and separated waves.",
        epilog="exit codes: 0 success, 1 failed check, 2 configuration error",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default):
        p.add_argument("--lambdas", default="0,1,4", help="focal constants lam1,lam2,lam3")
        p.add_argument("--output", default="-", help="output path ('-' for stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=fmt_default)

    p = sub.add_parser("verify", formatter_class=fmt, help="run the verification suite")
    common(p, "json")
    p.add_argument("--samples", type=int, default=100,
                   help="field sample points; group, round-trip and equivalence checks use 10x")
    p.add_argument("--seed", type=int, default=7, help="random seed")
    p.add_argument("--h", type=float, default=1e-3, help="finite-difference step")
    p.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance")
    p.add_argument("--timing", action="store_true", help="add wall times (not reproducible)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("transform", formatter_class=fmt,
                       help="convert a point between Cartesian and ellipsoidal coordinates")
    common(p, "json")
    p.add_argument("--point", help="Cartesian point x,y,z")
    p.add_argument("--ellipsoidal", help="ellipsoidal point lam,mu,nu")
    p.add_argument("--signs", default="1,1,1", help="octant signs for --ellipsoidal")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("potential", formatter_class=fmt, help="sample V and omega on a grid")
    common(p, "csv")
    p.add_argument("--grid", default="-5:5:21",
                   help="lo:hi:count for every axis, or three comma-separated axes")
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("geodesic", formatter_class=fmt, help="integrate the reduced geodesic flow")
    common(p, "csv")
    p.add_argument("--x0", default="1.118034,0.816497,0.763763", help="initial position")
    p.add_argument("--p0", default=None,
                   help="initial momentum (default: radial with H = 1/2)")
    p.add_argument("--e", type=float, default=0.0, help="fibre charge")
    p.add_argument("--t", type=float, default=10.0, help="time horizon (negative runs backwards)")
    p.add_argument("--tol", type=float, default=1e-10, help="integrator rtol = atol")
    p.add_argument("--guard", type=float, default=0.05,
                   help="guard-zone width as a fraction of lam3 - lam1")
    p.add_argument("--samples", type=int, default=None,
                   help="evenly spaced output times (default: every accepted step)")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("waves", formatter_class=fmt,
                       help="integrate separated wave equations and certify the product")
    common(p, "csv")
    p.add_argument("--E", type=float, default=1.0, help="energy parameter")
    p.add_argument("--a", type=float, default=0.0, help="separation constant a")
    p.add_argument("--b", type=float, default=0.0, help="separation constant b")
    p.add_argument("--centre", default=None,
                   help="box centre lam,mu,nu (default: inside every branch range)")
    p.add_argument("--samples", type=int, default=50, help="PDE residual sample points")
    p.add_argument("--points", type=int, default=101, help="samples per branch")
    p.add_argument("--seed", type=int, default=7, help="random seed")
    p.add_argument("--h", type=float, default=1e-3, help="finite-difference step")
    p.set_defaults(func=cmd_waves)
    return parser


VALUE_FLAGS = ("--lambdas", "--grid", "--x0", "--p0", "--point", "--ellipsoidal", "--signs",
               "--centre")


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Join ``--grid -5:5:21`` into ``--grid=-5:5:21`` so argparse does not read
    the value as an option."""
    out = []
    k = 0
    while k < len(argv):
        tok = argv[k]
        if tok in VALUE_FLAGS and k + 1 < len(argv) and re.match(r"-[\d.]", argv[k + 1]):
            out.append(f"{tok}={argv[k + 1]}")
            k += 2
            continue
        out.append(tok)
        k += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_attach_negative_values(argv))
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, DomainError, OverflowError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
