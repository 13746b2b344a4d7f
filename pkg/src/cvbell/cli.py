"""Command-line front end.

Commands
--------
threshold      critical transmission or detection efficiency for one setup
region         violation-region boundary eta_t*(eta_d) for optimal or fixed states
source-amp     region boundary for the amplified source
local-amp      critical transmission with local filters
multi-filter   threshold versus number of filter applications
reproduce-all  run every reference check and fail on any miss

Configuration may be given as ``--config file.ini`` with one section per
command (``key = value``); command-line flags override file values.  Every
run writes a CSV result table and a JSON sidecar describing the effective
configuration, conventions and tolerances.  Exit codes: 0 success,
1 invalid configuration, 2 reproduction-gate failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys

import numpy as np

from .bell import ASYMMETRIC, SYMMETRIC, critical_efficiency, region_boundary
from .local_amp import (
    filtered_critical_transmission,
    multi_filter_curve,
    psi2_state,
)
from .reproduce import reproduce_all
from .source_amp import source_region_boundary
from .sweep import sidecar_path, write_csv, write_sidecar


class ValidationError(Exception):
    """Invalid configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def parse_grid(text: str) -> list[float]:
    """Parse "start:stop:count" or a comma-separated list (may be empty)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid {text!r} must be start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValidationError("grid count must be positive")
        return [float(x) for x in np.linspace(start, stop, count)]
    return [float(x) for x in text.split(",")]


def _config_line_number(path: str, key: str) -> int | None:
    try:
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                stripped = line.split("=")[0].split(":")[0].strip()
                if stripped == key:
                    return lineno
    except OSError:
        return None
    return None


def load_config(path: str, command: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        read = parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    if not read:
        raise ValidationError(f"config file {path!r} not found")
    if command not in parser:
        return {}
    out = {}
    for key, value in parser[command].items():
        out[key.replace("-", "_")] = value
    return out


def _coerce(path, key, value, kind):
    try:
        return kind(value)
    except (TypeError, ValueError):
        line = _config_line_number(path, key) if path else None
        location = f"{path}:{line}: " if line else ""
        raise ValidationError(
            f"{location}invalid value {value!r} for {key}"
        ) from None


def build_parser() -> _Parser:
    parser = _Parser(prog="cvbell", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI file with one section per command")
        p.add_argument("--output", "-o", help="CSV output path")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=0,
                       help="reserved; all solvers are deterministic")
        p.add_argument("--cutoff", type=int, default=2)
        p.add_argument("--tol", type=float, default=1e-4)

    p = sub.add_parser("threshold", help="single critical-efficiency solve")
    common(p)
    p.add_argument("--symmetric", dest="symmetry", action="store_const",
                   const=SYMMETRIC, default=SYMMETRIC)
    p.add_argument("--asymmetric", dest="symmetry", action="store_const",
                   const=ASYMMETRIC)
    p.add_argument("--target", choices=["eta-t", "eta-d"], default="eta-t")
    p.add_argument("--eta-d", type=float, default=1.0)
    p.add_argument("--eta-t", type=float, default=1.0)
    p.add_argument("--state", choices=["optimal", "psi2"], default="optimal")

    p = sub.add_parser("region", help="violation-region boundary")
    common(p)
    p.add_argument("--symmetric", dest="symmetry", action="store_const",
                   const=SYMMETRIC, default=SYMMETRIC)
    p.add_argument("--asymmetric", dest="symmetry", action="store_const",
                   const=ASYMMETRIC)
    p.add_argument("--eta-d-grid", default="0.6:1.0:9")
    p.add_argument("--state", choices=["optimal", "psi2"], default="optimal")

    p = sub.add_parser("source-amp", help="amplified-source region boundary")
    common(p)
    p.set_defaults(cutoff=6)
    p.add_argument("--symmetric", dest="symmetry", action="store_const",
                   const=SYMMETRIC, default=SYMMETRIC)
    p.add_argument("--asymmetric", dest="symmetry", action="store_const",
                   const=ASYMMETRIC)
    p.add_argument("--eta-d-grid", default="0.8:1.0:3")
    p.add_argument("--eta-c", type=float, default=1.0)

    p = sub.add_parser("local-amp", help="filtered critical transmission")
    common(p)
    p.add_argument("--g", type=float, default=2.0)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--eta-d", type=float, default=1.0)
    p.add_argument("--eta-c", type=float, default=1.0)

    p = sub.add_parser("multi-filter", help="threshold vs filter applications")
    common(p)
    p.add_argument("--g", type=float, default=2.0)
    p.add_argument("--m-max", type=int, default=4)
    p.add_argument("--eta-d", type=float, default=1.0)

    p = sub.add_parser("reproduce-all", help="run every reference check")
    common(p)
    p.set_defaults(cutoff=6)
    p.add_argument("--skip-source", action="store_true",
                   help="skip the slow amplified-source checks")
    return parser


def _explicit_keys(argv) -> set:
    """Option names the user actually passed on the command line."""
    parser = build_parser()
    actions = list(parser._actions)
    for sub_action in parser._subparsers._group_actions:
        for sub in sub_action.choices.values():
            actions.extend(sub._actions)
    for action in actions:
        action.default = argparse.SUPPRESS
    return set(vars(parser.parse_args(argv)))


def _apply_config(args: argparse.Namespace, explicit: set) -> None:
    """Overlay config-file values for options not given on the command line."""
    if not args.config:
        return
    file_values = load_config(args.config, args.command)
    coercions = {
        "eta_d": float, "eta_t": float, "eta_c": float, "tol": float,
        "g": float, "m": int, "m_max": int, "cutoff": int, "workers": int,
        "seed": int,
    }
    for key, value in file_values.items():
        if not hasattr(args, key):
            line = _config_line_number(args.config, key)
            location = f"{args.config}:{line}: " if line else ""
            raise ValidationError(f"{location}unknown option {key!r}")
        if key in explicit:
            continue  # explicit flag wins
        kind = coercions.get(key, str)
        setattr(args, key, _coerce(args.config, key, value, kind))


def _echo(args: argparse.Namespace) -> dict:
    skip = {"config", "command"}
    return {
        k: v for k, v in sorted(vars(args).items()) if k not in skip
    }


def _emit(args, fieldnames, rows, extra=None) -> str:
    path = args.output or f"cvbell-{args.command}.csv"
    write_csv(path, fieldnames, rows)
    write_sidecar(sidecar_path(path), args.command, _echo(args), extra)
    return path


def _run_threshold(args) -> int:
    state = None if args.state == "optimal" else psi2_state(args.cutoff)
    value = critical_efficiency(
        args.target.replace("-", "_"),
        symmetry=args.symmetry,
        eta_t=args.eta_t,
        eta_d=args.eta_d,
        state=state,
        cutoff=args.cutoff,
        tol=args.tol,
    )
    row = {
        "symmetry": args.symmetry,
        "target": args.target,
        "eta_d": args.eta_d,
        "eta_t": args.eta_t,
        "state": args.state,
        "cutoff": args.cutoff,
        "threshold": value,
        "no_violation": value is None,
        "bisection_tol": args.tol,
    }
    path = _emit(args, list(row.keys()), [row])
    label = "no violation" if value is None else f"{value:.6f}"
    print(f"critical {args.target} ({args.symmetry}, state={args.state}): {label}")
    print(f"wrote {path}")
    return 0


def _run_region(args) -> int:
    grid = parse_grid(args.eta_d_grid)
    state = None if args.state == "optimal" else psi2_state(args.cutoff)
    points = region_boundary(
        grid,
        symmetry=args.symmetry,
        state=state,
        cutoff=args.cutoff,
        tol=args.tol,
        workers=args.workers,
    )
    rows = [
        {
            "symmetry": args.symmetry,
            "state": args.state,
            "cutoff": args.cutoff,
            "eta_d": p.eta_d,
            "eta_t_star": p.eta_t_star,
            "no_violation": p.eta_t_star is None,
            "bisection_tol": args.tol,
        }
        for p in points
    ]
    fields = ["symmetry", "state", "cutoff", "eta_d", "eta_t_star",
              "no_violation", "bisection_tol"]
    path = _emit(args, fields, rows)
    print(f"{len(rows)} grid points -> {path}")
    return 0


def _run_source_amp(args) -> int:
    grid = parse_grid(args.eta_d_grid)
    points = source_region_boundary(
        grid,
        eta_c=args.eta_c,
        symmetry=args.symmetry,
        cutoff=args.cutoff,
        tol=max(args.tol, 1e-3),
        workers=args.workers,
    )
    rows = []
    for p in points:
        row = {
            "symmetry": args.symmetry,
            "eta_c": args.eta_c,
            "cutoff": args.cutoff,
            "eta_d": p.eta_d,
            "eta_t_star": p.eta_t_star,
            "no_violation": p.eta_t_star is None,
            "squeezing": None,
            "amp_transmission": None,
            "delta": None,
        }
        if p.optimum is not None:
            row.update(
                squeezing=p.optimum.squeezing,
                amp_transmission=p.optimum.amp_transmission,
                delta=p.optimum.delta,
            )
        rows.append(row)
    fields = ["symmetry", "eta_c", "cutoff", "eta_d", "eta_t_star",
              "no_violation", "squeezing", "amp_transmission", "delta"]
    path = _emit(args, fields, rows)
    print(f"{len(rows)} grid points -> {path}")
    return 0


def _run_local_amp(args) -> int:
    if args.g < 1.0:
        raise ValidationError("--g must be >= 1")
    value = filtered_critical_transmission(
        args.g, args.m, eta_d=args.eta_d, eta_c=args.eta_c,
        cutoff=max(args.cutoff, 2), tol=args.tol,
    )
    row = {
        "g": args.g,
        "m": args.m,
        "eta_d": args.eta_d,
        "eta_c": args.eta_c,
        "cutoff": max(args.cutoff, 2),
        "eta_t_star": value,
        "no_violation": value is None,
        "bisection_tol": args.tol,
    }
    path = _emit(args, list(row.keys()), [row])
    label = "no violation" if value is None else f"{value:.6f}"
    print(f"critical eta_t with g={args.g}, m={args.m}: {label}")
    print(f"wrote {path}")
    return 0


def _run_multi_filter(args) -> int:
    curve = multi_filter_curve(
        args.g, args.m_max, eta_d=args.eta_d,
        cutoff=max(args.cutoff, 2), tol=args.tol, workers=args.workers,
    )
    rows = [
        {
            "g": args.g,
            "eta_d": args.eta_d,
            "m": m,
            "eta_t_star": thr,
            "no_violation": thr is None,
            "bisection_tol": args.tol,
        }
        for m, thr in curve
    ]
    fields = ["g", "eta_d", "m", "eta_t_star", "no_violation", "bisection_tol"]
    path = _emit(args, fields, rows)
    print(f"{len(rows)} filter counts -> {path}")
    return 0


def _run_reproduce_all(args) -> int:
    report = reproduce_all(
        include_source=not args.skip_source, source_cutoff=args.cutoff
    )
    for line in report.lines():
        print(line)
    rows = [
        {
            "name": r.name,
            "target": r.target,
            "computed": r.computed,
            "passed": r.passed,
            "detail": r.detail,
        }
        for r in report.rows
    ]
    # No timing column: result files must be bitwise stable across runs.
    fields = ["name", "target", "computed", "passed", "detail"]
    _emit(args, fields, rows, extra={"all_passed": report.all_passed})
    return 0 if report.all_passed else 2


_RUNNERS = {
    "threshold": _run_threshold,
    "region": _run_region,
    "source-amp": _run_source_amp,
    "local-amp": _run_local_amp,
    "multi-filter": _run_multi_filter,
    "reproduce-all": _run_reproduce_all,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args, _explicit_keys(argv))
        return _RUNNERS[args.command](args)
    except ValidationError as exc:
        print(f"cvbell: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
