"""Batch experiment runner.

Usage examples::

    ergoshift minmean --system g.json --obs f.json --out out.json
    ergoshift subaction --system g.json --max-pre 3 --max-cycle 3 --out rows.csv
    ergoshift sweep --system shift2.json --u u0.json --eps-list 0.1,0.01,0.001
    ergoshift oscillate --system shift2.json --u u0.json --n1 9 --pmax 3 --out osc.csv

Exit codes: 0 on success, 1 when a verification fails (the output names
witnesses), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import asymptotics, discounted, ergopt, subaction
from .random_systems import random_point
from .systems import (
    EdgeWeights,
    FiniteSystem,
    Fourier,
    RotationSystem,
    SymbolicPoint,
    SystemSpecError,
    coboundary,
    enumerate_points,
    higher_block,
    lift_observable,
    lift_point,
    load_json,
    observable_from_spec,
    point_from_spec,
    system_from_spec,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _threads() -> int | None:
    n = int(os.environ.get("ERGOPT_THREADS", "0") or 0)
    return None if n <= 0 else n


def parallel_map(fn, items):
    items = list(items)
    workers = _threads()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _plain(x):
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _cell(x) -> str:
    x = _plain(x)
    if x is None:
        return ""
    return repr(x) if isinstance(x, float) else str(x)


def render(payload, fmt: str, columns=None) -> str:
    if fmt == "json":
        return json.dumps(_plain(payload), indent=2) + "\n"
    rows = payload if isinstance(payload, list) else payload.get("rows", [payload])
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def emit(args, payload, default_fmt: str, columns=None) -> None:
    text = render(payload, args.format or default_fmt, columns)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# input
# ---------------------------------------------------------------------------


def _load(path):
    if path is None:
        raise UsageError("missing required file argument")
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    return load_json(path)


def load_system(args):
    return system_from_spec(_load(args.system))


def load_observable(args, system, embedded, attr="obs"):
    path = getattr(args, attr, None)
    if path:
        obs = observable_from_spec(_load(path))
    elif embedded is not None:
        obs = embedded
    else:
        raise UsageError(f"no observable: pass --{attr} or put weights in the system file")
    if isinstance(system, FiniteSystem):
        if not isinstance(obs, EdgeWeights):
            raise UsageError("finite systems need an edge-weight observable")
        obs.bind(system)
    elif not isinstance(obs, Fourier):
        raise UsageError("rotations need a Fourier observable")
    return obs


def parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse number list {text!r}") from exc


def load_points(args, system):
    if isinstance(system, RotationSystem):
        if getattr(args, "angles", None):
            return np.asarray(parse_floats(args.angles))
        return system.grid_angles(getattr(args, "grid", None) or system.grid)
    spec = getattr(args, "points", None)
    if spec and spec.startswith("random:"):
        rng = random.Random(args.seed)
        return [random_point(rng, system, args.max_pre).validate(system) for _ in range(int(spec[7:]))]
    if spec:
        doc = _load(spec)
        if isinstance(doc, dict) and "points" in doc:
            doc = doc["points"]
        docs = doc if isinstance(doc, list) else [doc]
        return [point_from_spec(d).validate(system) for d in docs]
    return enumerate_points(system, args.max_pre, args.max_cycle)


def _label(point) -> str:
    return point.label() if isinstance(point, SymbolicPoint) else f"x={float(point)!r}"


def _finite(system):
    if not isinstance(system, FiniteSystem):
        raise UsageError("this command needs a finite_shift system")
    return system


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_minmean(args) -> int:
    system, emb = load_system(args)
    f = load_observable(args, _finite(system), emb)
    emit(args, ergopt.min_mean(system, f, args.method).to_dict(), "json")
    return EXIT_OK


def cmd_mather(args) -> int:
    system, emb = load_system(args)
    f = load_observable(args, _finite(system), emb)
    res = ergopt.karp_min_mean(system, f)
    emit(args, ergopt.critical_subgraph(system, f, res.fbar).to_dict(), "json")
    return EXIT_OK


def cmd_morris(args) -> int:
    system, emb = load_system(args)
    f = load_observable(args, _finite(system), emb)
    res = ergopt.karp_min_mean(system, f)
    try:
        point = ergopt.morris_point(system, f, res)
    except ergopt.ConsistencyError as exc:
        emit(args, {"pass": False, "witnesses": [str(exc)]}, "json")
        return EXIT_FAIL
    emit(args, {"pass": True, "fbar": res.fbar, "point": point.to_dict()}, "json")
    return EXIT_OK


def cmd_balance(args) -> int:
    system, emb = load_system(args)
    u = load_observable(args, _finite(system), emb, "u")
    emit(args, ergopt.balance_check(system, u).to_dict(), "json")
    return EXIT_OK


def _fbar(args, system, f):
    return Fraction(args.fbar) if args.fbar is not None else ergopt.karp_min_mean(system, f).fbar


def cmd_subaction(args) -> int:
    system, emb = load_system(args)
    f = load_observable(args, _finite(system), emb)
    fbar = _fbar(args, system, f)
    points = load_points(args, system)
    rows = parallel_map(lambda ip: subaction.point_row(ip[0], ip[1], system, f, fbar), enumerate(points))
    for r, p in zip(rows, points):
        r["point_id"] = f"{r['point_id']}:{p.label()}"
    report = subaction.verify_subcohomology(points, system, f, fbar)
    if args.format == "json":
        emit(args, report.to_dict() | {"fbar": fbar}, "json")
    else:
        emit(args, rows, "csv", ["point_id", "u", "u_plus", "defect", "exactness", "attained_n"])
    if not report.passed:
        print(f"defect below zero at {report.witnesses}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_corollary(args) -> int:
    system, emb = load_system(args)
    system = _finite(system)
    if args.u:
        u0 = load_observable(args, system, None, "u")
        f = coboundary(u0, system)
    else:
        f = load_observable(args, system, emb)
    # the critical subgraph needs an edge-weight observable: recode on the 2-block graph
    big, lifted = higher_block(system), lift_observable(f, system)
    points = [lift_point(p) for p in enumerate_points(system, args.max_pre, args.max_cycle)]
    fbar = ergopt.karp_min_mean(big, lifted).fbar
    bound = subaction.estimate_C(points, big, lifted, fbar)
    if not bound.finite:
        emit(args, {"pass": False, "fbar": fbar, "C": None, "witnesses": list(bound.unbounded)}, "json")
        return EXIT_FAIL
    crit = ergopt.critical_subgraph(big, lifted, fbar)
    report = subaction.verify_corollary_bounds(crit, big, lifted, fbar, bound.C, args.max_cycle, args.horizon)
    emit(args, report.to_dict() | {"fbar": fbar, "C_witness": bound.witness}, "json")
    return EXIT_OK if report.passed else EXIT_FAIL


def _target(args, system, emb):
    if getattr(args, "u", None):
        return coboundary(load_observable(args, system, None, "u"), system)
    return load_observable(args, system, emb)


def cmd_discounted(args) -> int:
    system, emb = load_system(args)
    f = _target(args, system, emb)
    points = load_points(args, system)
    eps_list = parse_floats(args.eps_list)
    rows = []
    for p in points:
        for eps in eps_list:
            ev = discounted.discounted_value(p, system, f, eps, args.tol, args.method)
            rows.append({"point_id": _label(p)} | ev.to_dict())
    emit(args, rows, "csv", ["point_id", "epsilon", "value", "method", "horizon", "tail_bound"])
    return EXIT_OK


def cmd_dce_check(args) -> int:
    system, emb = load_system(args)
    f = _target(args, system, emb)
    points = list(load_points(args, system))
    worst, witnesses, ok = 0.0, [], True
    for eps in parse_floats(args.eps_list):
        def one(p):
            ev = discounted.discounted_value(p, system, f, eps, args.tol, args.method)
            r = discounted.dce_residual(p, system, f, eps, args.tol, args.method)
            return p, r, 2 * ev.tail_bound + 1e-12 * max(1.0, abs(ev.value))
        for p, r, allowed in parallel_map(one, points):
            worst = max(worst, r)
            if r > allowed:
                ok = False
                witnesses.append({"point": _label(p), "epsilon": eps, "residual": r, "allowed": allowed})
    emit(args, {"pass": ok, "max_residual": worst, "witnesses": witnesses[:20]}, "json")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_lemma2(args) -> int:
    system, emb = load_system(args)
    u0 = load_observable(args, system, emb, "u")
    points = list(load_points(args, system))
    worst, witnesses = 0.0, []
    for eps in parse_floats(args.eps_list):
        gaps = parallel_map(lambda p: discounted.coboundary_identity_gap(p, system, u0, eps, args.tol, args.method), points)
        for p, g in zip(points, gaps):
            worst = max(worst, g)
            if g > args.threshold:
                witnesses.append({"point": _label(p), "epsilon": eps, "gap": g})
    ok = not witnesses
    emit(args, {"pass": ok, "max_gap": worst, "threshold": args.threshold, "witnesses": witnesses[:20]}, "json")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args) -> int:
    system, emb = load_system(args)
    u0 = load_observable(args, system, emb, "u")
    points = load_points(args, system)
    try:
        table = discounted.convergence_sweep(points, system, u0, parse_floats(args.eps_list), args.tol, args.method)
    except discounted.NotBalancedError as exc:
        print(f"refusing to claim convergence: {exc}", file=sys.stderr)
        return EXIT_FAIL
    emit(args, table.rows, "csv", ["epsilon", "sup_error", "argmax_point"])
    if args.plot:
        from .plots import sweep_plot

        sweep_plot(table.rows, args.plot)
    ok = discounted.eventually_decreasing(table.errors, args.allowed_violations)
    if args.threshold is not None:
        ok = ok and table.errors[-1] < args.threshold
    if not ok:
        print(f"sweep did not converge as required; last row {table.rows[-1]}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_decompose(args) -> int:
    system, emb = load_system(args)
    g = load_observable(args, _finite(system), emb)
    points = load_points(args, system)
    rows, ok = [], True
    for n in (int(float(x)) for x in args.n.split(",")):
        eps_list = parse_floats(args.eps) if args.eps else [math.log(n) / n, 2 * math.log(n) / n, 0.01]
        for eps in eps_list:
            for p in points:
                rep = asymptotics.decomposition_report(p, system, g, eps, n)
                row = {"point_id": p.label()} | rep.to_dict()
                rows.append(row)
                if rep.identity_gap > 1e-10 or rep.remainder_mass > rep.bound:
                    ok = False
                    print(f"decomposition check failed: {row}", file=sys.stderr)
    emit(args, rows, "csv", ["point_id", "n", "epsilon", "alpha", "remainder_mass", "bound", "identity_gap"])
    return EXIT_OK if ok else EXIT_FAIL


def _word(text, fallback):
    return tuple(x for x in text.split(",") if x) if text else fallback


def cmd_oscillate(args) -> int:
    system, emb = load_system(args)
    system = _finite(system)
    u0 = load_observable(args, system, emb, "u")
    report = ergopt.balance_check(system, u0)
    if report.balanced:
        print("u0 is balanced: no oscillation expected", file=sys.stderr)
        return EXIT_FAIL
    w0, w1 = _word(args.w0, report.min_witness), _word(args.w1, report.max_witness)
    schedule = asymptotics.build_oscillation_schedule(system, w0, w1, args.n1, args.pmax)
    if args.schedule_out:
        Path(args.schedule_out).write_text(json.dumps(schedule.to_dict(), indent=2) + "\n", encoding="utf-8")
    table = asymptotics.oscillation_experiment(schedule, system, u0)
    emit(args, table.rows, "csv", ["p", "eps_p", "U_value", "target", "abs_error", "contamination_estimate"])
    if args.plot:
        from .plots import oscillation_plot

        oscillation_plot(table.rows, args.plot)
    if not table.passed:
        bad = [r for r in table.rows if r["abs_error"] >= asymptotics.tolerance_for(r["p"])]
        print(f"oscillation errors above tolerance: {bad}", file=sys.stderr)
    return EXIT_OK if table.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", required=True, help="system spec (JSON)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    common.add_argument("--plot", help="write a static SVG figure here")

    obs = argparse.ArgumentParser(add_help=False)
    obs.add_argument("--obs", help="observable spec (JSON); defaults to weights in the system file")

    u = argparse.ArgumentParser(add_help=False)
    u.add_argument("--u", help="transfer function u0 (JSON); the observable is u0 o sigma - u0")

    pts = argparse.ArgumentParser(add_help=False)
    pts.add_argument("--points", help="point spec file, or random:N")
    pts.add_argument("--max-pre", type=int, default=2)
    pts.add_argument("--max-cycle", type=int, default=2)
    pts.add_argument("--angles", help="comma-separated angles (rotations)")
    pts.add_argument("--grid", type=int, help="number of grid angles (rotations)")

    eps = argparse.ArgumentParser(add_help=False)
    eps.add_argument("--eps-list", default="0.1,0.01,0.001")
    eps.add_argument("--tol", type=float, default=1e-8)
    eps.add_argument("--method", choices=["direct", "closed"], default="closed")

    parser = argparse.ArgumentParser(prog="ergoshift", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("minmean", parents=[common, obs], help="ergodic minimizing value and witness cycle")
    p.add_argument("--method", choices=["karp", "brute"], default="karp")
    p.set_defaults(fn=cmd_minmean)
    sub.add_parser("mather", parents=[common, obs], help="critical subgraph").set_defaults(fn=cmd_mather)
    sub.add_parser("morris", parents=[common, obs], help="periodic point with nonpositive reduced sums").set_defaults(fn=cmd_morris)
    sub.add_parser("balance", parents=[common, u], help="extreme integrals of u0 over invariant measures").set_defaults(fn=cmd_balance)

    p = sub.add_parser("subaction", parents=[common, obs, pts], help="transfer values and defects per point")
    p.add_argument("--fbar", help="override the minimizing value (exact decimal or p/q)")
    p.set_defaults(fn=cmd_subaction)

    p = sub.add_parser("corollary", parents=[common, obs, u], help="two-sided Birkhoff bounds on the critical subgraph")
    p.add_argument("--max-pre", type=int, default=3)
    p.add_argument("--max-cycle", type=int, default=3)
    p.add_argument("--horizon", type=int, default=10**4)
    p.set_defaults(fn=cmd_corollary)

    sub.add_parser("discounted", parents=[common, obs, u, pts, eps], help="discounted transfer values").set_defaults(fn=cmd_discounted)
    sub.add_parser("dce-check", parents=[common, obs, u, pts, eps], help="residual of the discounted equation").set_defaults(fn=cmd_dce_check)

    p = sub.add_parser("lemma2", parents=[common, u, pts, eps], help="coboundary identity for discounted values")
    p.add_argument("--threshold", type=float, default=1e-10)
    p.set_defaults(fn=cmd_lemma2)

    p = sub.add_parser("sweep", parents=[common, u, pts, eps], help="convergence of balanced discounted values")
    p.add_argument("--threshold", type=float, help="required bound on the last sup-error")
    p.add_argument("--allowed-violations", type=int, default=0)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("decompose", parents=[common, obs, pts], help="empirical-measure decomposition check")
    p.add_argument("--n", default="100,1000,10000,100000")
    p.add_argument("--eps", help="comma-separated rates (default: ln(n)/n, 2 ln(n)/n, 0.01)")
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("oscillate", parents=[common, u], help="oscillation experiment for non-balanced u0")
    p.add_argument("--n1", type=int, default=9)
    p.add_argument("--pmax", type=int, default=3)
    p.add_argument("--w0", help="comma-separated edge ids (default: minimizing witness of u0)")
    p.add_argument("--w1", help="comma-separated edge ids (default: maximizing witness of u0)")
    p.add_argument("--schedule-out", help="write the schedule JSON here")
    p.set_defaults(fn=cmd_oscillate)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.fn(args)
    except (UsageError, SystemSpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except subaction.UnboundedError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
