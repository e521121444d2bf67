"""Command-line front end: ``popdyn {classify,simulate,rotation,scan,gamma}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, circle, linkage as lk, pops, render
from .errors import DriftExceeded, InfeasibleLinkage, MonotonicityViolation, OutsideLambda, PopDynError

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_INFEASIBLE = 2
EXIT_DRIFT = 3
EXIT_OUTSIDE_LAMBDA = 4
EXIT_MONOTONICITY = 5


class UsageError(PopDynError):
    pass


def _load_json(arg: str):
    """Inline JSON, or a path to a JSON file."""
    text = arg.strip()
    if not text.startswith(("{", "[")):
        p = Path(arg)
        if not p.exists():
            raise UsageError(f"neither JSON nor an existing file: {arg!r}")
        text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from None


def _settings(args) -> dict:
    """Config-file values overlaid by whatever was given on the command line."""
    conf = _load_json(args.config) if getattr(args, "config", None) else {}
    for key, value in vars(args).items():
        if key in ("func", "config", "command") or value is None:
            continue
        conf[key] = value
    return conf


def _linkage(conf: dict, need_ground: bool = True) -> lk.Linkage:
    raw = conf.get("linkage")
    if raw is None:
        raise UsageError("--linkage is required")
    d = _load_json(raw) if isinstance(raw, str) else raw
    if not need_ground and "L" not in d:
        d = dict(d, L=d["l1"] + d["l2"] + d["l3"] - 1e-9)
    return lk.Linkage.from_dict(d)


def _start(conf: dict, linkage: lk.Linkage) -> lk.AngleConfig:
    theta = conf.get("start_theta")
    phi = conf.get("start_phi")
    if (theta is None) == (phi is None):
        raise UsageError("give exactly one of --start-theta or --start-phi")
    if theta is not None:
        d = _load_json(theta) if isinstance(theta, str) else theta
        start = lk.AngleConfig(d["theta1"], d["theta2"])
    else:
        start = circle.from_polar(linkage.lengths, linkage.L, float(phi))
    tol = float(conf.get("tol") or 1e-9)
    if not lk.on_gamma(linkage, start, tol):
        res = abs(lk.lbar(linkage.lengths, start) - linkage.L)
        raise UsageError(f"start is not on the closure curve: |Lbar - L| = {res:.3e} > {tol:.1e}")
    return start


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_classify(conf: dict) -> int:
    link = _linkage(conf)
    mc = lk.classify(link)
    violation = link.feasibility_violation()
    print(f"T1={mc.t1:.17g}")
    print(f"T2={mc.t2:.17g}")
    print(f"T3={mc.t3:.17g}")
    print(f"grashof={str(mc.grashof).lower()}")
    print(f"kind={mc.kind.value}")
    if violation is not None:
        print(f"error: infeasible linkage: {violation}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"theorem={str(lk.theorem_conditions(link)).lower()}")
    if mc.kind is lk.MotionKind.DEGENERATE_BOUNDARY:
        print("warning: a T term vanishes; the linkage sits on a classification boundary", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(conf: dict) -> int:
    link = _linkage(conf).check_feasible()
    start = _start(conf, link)
    n = int(conf.get("n") if conf.get("n") is not None else 10)
    first = {"p12": pops.P12, "p23": pops.P23}[str(conf.get("first") or "p12").lower()]
    trace = pops.orbit(link, start, n, first=first, renormalize=bool(conf.get("renormalize")))
    _emit(trace.to_csv(), conf.get("csv"))
    if conf.get("svg"):
        states = trace.states()
        picks = sorted(set(np.linspace(0, len(states) - 1, min(len(states), 12)).round().astype(int)))
        Path(conf["svg"]).write_text(render.chains_svg(link, [states[i] for i in picks]))
    return EXIT_OK


def cmd_rotation(conf: dict) -> int:
    link = _linkage(conf).check_feasible()
    lengths, L = link.lengths, link.L
    circle.check_lambda(lengths, L)
    n = int(conf.get("n") or 1_000_000)
    qmax = int(conf.get("qmax") or 50)
    tol = float(conf.get("tol") or 1e-10)
    phi0 = float(conf.get("start_phi") or 0.0)
    orb = circle.rotation_number_orbit(lengths, L, n, phi0)
    integ = circle.rotation_number_integral(lengths, L, phi0, tol)
    per = circle.detect_periodicity(lengths, L, qmax, 1e-9)
    print(f"rho_orbit={orb.rho:.12f} error_bound={orb.error_bound:.3e} n={orb.iterations_or_nodes}")
    print(f"rho_integral={integ.rho:.12f} error_bound={integ.error_bound:.3e} nodes={integ.iterations_or_nodes}")
    print(f"agreement={abs(orb.rho - integ.rho):.3e}")
    if per.rational:
        p, q = per.rational
        print(f"periodic=true p={p} q={q} max_defect={per.max_defect:.3e}")
    else:
        print(f"periodic=false qmax={qmax}")
    return EXIT_OK


def _grid(text: str):
    try:
        lo, hi, count = text.split(":")
        return np.linspace(float(lo), float(hi), int(count)).tolist()
    except ValueError:
        raise UsageError(f"--grid expects min:max:count, got {text!r}") from None


def cmd_scan(conf: dict) -> int:
    link = _linkage(conf, need_ground=False)
    if not conf.get("grid"):
        raise UsageError("--grid min:max:count is required")
    grid = _grid(conf["grid"])
    res = analysis.scan_rotation(
        link.lengths,
        grid,
        method=conf.get("method") or analysis.INTEGRAL,
        n=int(conf.get("n") or 100_000),
        tol=float(conf.get("tol") or 1e-10),
        qmax=int(conf.get("qmax") or 0),
    )
    _emit(res.to_csv(), conf.get("csv"))
    out = sys.stdout if conf.get("csv") else sys.stderr
    print(f"monotonicity: {res.verdict}", file=out)
    if res.violation is not None:
        print(f"error: {res.violation}", file=sys.stderr)
        return EXIT_MONOTONICITY
    return EXIT_OK


def cmd_gamma(conf: dict) -> int:
    link = _linkage(conf).check_feasible()
    geom = analysis.gamma_geometry(link, int(conf.get("resolution") or analysis.DEFAULT_RESOLUTION))
    print(f"components={geom.components} resolution={geom.resolution} max_residual={geom.max_residual:.3e}")
    if conf.get("csv"):
        Path(conf["csv"]).write_text(geom.to_csv())
    if conf.get("svg"):
        Path(conf["svg"]).write_text(render.torus_svg(geom.polylines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="popdyn", description="Pop dynamics of four-bar linkages.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--linkage", help='JSON object {"l1":..,"l2":..,"l3":..,"L":..} or a path to one')
        p.add_argument("--config", help="JSON file with default values for any flag")
        p.add_argument("--tol", type=float)
        p.add_argument("--csv")
        p.add_argument("--svg")
        return p

    p = common(sub.add_parser("classify", help="motion class and theorem conditions"))
    p.set_defaults(func=cmd_classify)

    p = common(sub.add_parser("simulate", help="alternating pop orbit as CSV (and SVG)"))
    p.add_argument("--start-theta", dest="start_theta")
    p.add_argument("--start-phi", dest="start_phi", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--first", choices=["p12", "p23"])
    p.add_argument("--renormalize", action="store_true", default=None)
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("rotation", help="rotation number by both methods, periodicity"))
    p.add_argument("--start-phi", dest="start_phi", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--qmax", type=int)
    p.set_defaults(func=cmd_rotation)

    p = common(sub.add_parser("scan", help="rotation number over a grid of ground lengths"))
    p.add_argument("--grid")
    p.add_argument("--n", type=int)
    p.add_argument("--qmax", type=int)
    p.add_argument("--method", choices=[analysis.INTEGRAL, analysis.ORBIT])
    p.set_defaults(func=cmd_scan)

    p = common(sub.add_parser("gamma", help="components of the closure curve on the angle torus"))
    p.add_argument("--resolution", type=int)
    p.set_defaults(func=cmd_gamma)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(_settings(args))
    except InfeasibleLinkage as exc:
        print(f"error: infeasible linkage: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DriftExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DRIFT
    except OutsideLambda as exc:
        print(f"error: L outside the admissible range: {exc}", file=sys.stderr)
        return EXIT_OUTSIDE_LAMBDA
    except MonotonicityViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MONOTONICITY
    except (PopDynError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
