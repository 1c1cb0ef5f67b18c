"""``holonomy-lab``: scenario-driven command line frontend.

Every subcommand loads a scenario file, runs one operation and writes a report
(JSON by default, CSV with ``--format csv``). Verdict lines go to stderr as
well as into the report. Exit status: 0 pass, 2 fail or numerical error,
1 usage or scenario error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from holonomy_lab import __version__
from holonomy_lab.curvature import curvature, slope_report_row, default_eps_list
from holonomy_lab.errors import HolonomyLabError, ScenarioError
from holonomy_lab.gauge import (
    compare_holonomies,
    equivariance_residual,
    holonomy_equivariance_residual,
    induce_gauge_connection,
    pushforward_curvature,
)
from holonomy_lab.groupconn import (
    add_cocycle,
    affine_roundtrip,
    cocycle_check,
    connection_difference,
    flow_trivialization,
    group_connection_check,
)
from holonomy_lab.moduli import AnnulusBase, build_from_representation, compare_automorphisms, estimate_automorphism, monodromy, roundtrip_check
from holonomy_lab.report import render
from holonomy_lab.scenario import Workspace, load
from holonomy_lab.transport import holonomy, lift_path

EXIT_PASS, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
MAX_LIFT_ROWS = 101


def _verdict(label: str, ok: bool, **values) -> str:
    detail = ", ".join(f"{k}={v:.3e}" for k, v in values.items())
    return f"{label}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")


def _loop(ws: Workspace, args):
    name = args.loop or ws.model.run.loop
    if name is None:
        if len(ws.model.paths) == 1:
            name = next(iter(ws.model.paths))
        else:
            raise ScenarioError("choose a path with --loop or run.loop", "run.loop")
    return ws.path(name)


def _loops(ws: Workspace, args):
    if args.loop:
        return [ws.path(args.loop)]
    names = ws.model.run.loops or ([ws.model.run.loop] if ws.model.run.loop else sorted(ws.model.paths))
    if not names:
        raise ScenarioError("scenario defines no paths", "paths")
    return [ws.path(n) for n in names]


# --- commands ------------------------------------------------------------------
# Each returns (report, verdict lines, passed); passed is None for pure computations.


def cmd_lift(ws, args):
    conn = ws.connection(args.connection)
    path = _loop(ws, args)
    g0 = ws.fiber_points(conn.bundle)[0]
    steps = ws.steps(args.steps)
    curve = lift_path(conn, path, g0, steps, verify=True)
    stride = max(1, (len(curve.params) - 1) // (MAX_LIFT_ROWS - 1))
    idx = list(range(0, len(curve.params), stride))
    if idx[-1] != len(curve.params) - 1:
        idx.append(len(curve.params) - 1)
    rows = [{"t": float(curve.params[k]), "g": curve.points[k].tolist()} for k in idx]
    report = {
        "connection": conn.name, "path": path.name, "steps": steps, "g0": g0.tolist(),
        "endpoint": curve.endpoint.tolist(), "doubling_delta": curve.doubling_delta,
        "closed": path.is_closed(), "rows": rows,
    }
    return report, [], None


def cmd_holonomy(ws, args):
    conn = ws.connection(args.connection)
    loop = _loop(ws, args)
    g = ws.fiber_points(conn.bundle)
    steps = ws.steps(args.steps)
    out = holonomy(conn, loop, steps).transport(g)
    rows = [{"index": k, "g": g[k].tolist(), "endpoint": out[k].tolist()} for k in range(len(g))]
    report = {"connection": conn.name, "loop": loop.name, "steps": steps, "closed": loop.is_closed(), "endpoint": out[0].tolist(), "rows": rows}
    return report, [], None


def cmd_curvature(ws, args):
    conn = ws.connection(args.connection)
    x = ws.point()
    g = ws.fiber_points(conn.bundle)
    rows = []
    for i, j in ws.pairs():
        val = curvature(conn, x, i, j, g)
        rows += [{"i": i, "j": j, "g": g[k].tolist(), "value": val[k].tolist()} for k in range(len(g))]
    return {"connection": conn.name, "x": x.tolist(), "rows": rows}, [], None


def cmd_as_slope(ws, args):
    conn = ws.connection(args.connection)
    x = ws.point()
    steps = ws.steps(args.steps)
    tol = ws.tol(args.tol, 1e-4)
    eps = default_eps_list(ws.model.run.eps0)
    rows = [slope_report_row(conn, x, i, j, g, eps, steps) for i, j in ws.pairs() for g in ws.fiber_points(conn.bundle)]
    worst = max(r["abs_error"] for r in rows)
    ok = worst < tol
    return {"connection": conn.name, "steps": steps, "eps": eps, "tol": tol, "max_abs_error": worst, "rows": rows}, [_verdict("AS_SLOPE", ok, max_abs_error=worst)], ok


def _region(ws):
    return ws.model.run.region


def cmd_check_group(ws, args):
    conn = ws.connection(args.connection)
    rep = group_connection_check(conn, seed=ws.seed(args.seed), tol=ws.tol(args.tol), region=_region(ws))
    report = {"connection": conn.name, "tol": rep.tol, "max_residual": rep.max_residual, **rep.details, "rows": rep.rows}
    return report, [rep.verdict()], rep.passed


def _cocycle_name(ws, args):
    name = args.cocycle or ws.model.run.cocycle
    if name is None:
        if len(ws.model.cocycles) == 1:
            return next(iter(ws.model.cocycles))
        raise ScenarioError("choose a cocycle with --cocycle or run.cocycle", "run.cocycle")
    return name


def cmd_cocycle(ws, args):
    form = ws.cocycle(_cocycle_name(ws, args))
    rep = cocycle_check(form, seed=ws.seed(args.seed), tol=ws.tol(args.tol))
    return {"cocycle": form.name, "tol": rep.tol, "max_residual": rep.max_residual, **rep.details, "rows": rep.rows}, [rep.verdict()], rep.passed


def _other(ws, args):
    if args.other:
        return args.other
    names = [n for n in sorted(ws.model.connections) if n != (args.connection or ws.default_connection)]
    if not names:
        raise ScenarioError("a second connection is needed (--other)", "connections")
    return names[0]


def cmd_difference(ws, args):
    c1, c2 = ws.connection(args.connection), ws.connection(_other(ws, args))
    seed, tol = ws.seed(args.seed), ws.tol(args.tol)
    form = connection_difference(c1, c2, seed=seed)
    rep = cocycle_check(form, seed=seed, tol=tol)
    trip = affine_roundtrip(c2, form, seed=seed)
    worst = max(trip.values())
    ok = rep.passed and worst < tol
    report = {"first": c1.name, "second": c2.name, "tol": tol, "max_residual": rep.max_residual, "roundtrip": trip, **rep.details, "rows": rep.rows}
    return report, [rep.verdict(), _verdict("AFFINE_ROUNDTRIP", worst < tol, max_error=worst)], ok


def cmd_add_cocycle(ws, args):
    conn = ws.connection(args.connection)
    form = ws.cocycle(_cocycle_name(ws, args))
    seed, tol = ws.seed(args.seed), ws.tol(args.tol)
    coc = cocycle_check(form, seed=seed, tol=tol)
    shifted = add_cocycle(conn, form)
    grp = group_connection_check(shifted, seed=seed, tol=tol)
    trip = affine_roundtrip(conn, form, seed=seed)
    worst = max(trip.values())
    ok = coc.passed and grp.passed and worst < tol
    report = {
        "connection": conn.name, "cocycle": form.name, "tol": tol,
        "cocycle_residual": coc.max_residual, "result_group_residual": grp.max_residual,
        "roundtrip": trip, "rows": grp.rows,
    }
    return report, [coc.verdict(), grp.verdict(), _verdict("AFFINE_ROUNDTRIP", worst < tol, max_error=worst)], ok


def cmd_trivialize(ws, args):
    conn = ws.connection(args.connection)
    run = ws.model.run
    cube = np.asarray(run.cube, dtype=float) if run.cube else _half_box(ws)
    T = flow_trivialization(conn, cube, run.anchor, ws.steps(args.steps))
    seed, tol = ws.seed(args.seed), ws.tol(args.tol)
    x = ws.point() if run.point is not None else T.anchor + 0.5 * (cube[:, 1] - T.anchor)
    g = ws.fiber_points(conn.bundle)
    gp, _ = T.psi(g, x)
    trip = T.roundtrip_residual(count=3, samples=run.samples, seed=seed)
    hom = T.homomorphism_residual(count=3, samples=run.samples, seed=seed) if conn.bundle.has_group_law else None
    ok = trip < tol and (hom is None or hom < tol)
    rows = [{"index": k, "g": g[k].tolist(), "psi": gp[k].tolist()} for k in range(len(g))]
    report = {"connection": conn.name, "cube": cube.tolist(), "anchor": T.anchor.tolist(), "x": np.asarray(x).tolist(),
              "roundtrip_residual": trip, "homomorphism_residual": hom, "tol": tol, "rows": rows}
    values = {"roundtrip": trip} if hom is None else {"roundtrip": trip, "homomorphism": hom}
    return report, [_verdict("TRIVIALIZATION", ok, **values)], ok


def _half_box(ws):
    if isinstance(ws.base, AnnulusBase):
        raise ScenarioError("trivialize on an annulus needs run.cube", "run.cube")
    box = ws.base.box
    mid, half = box.mean(axis=1), 0.25 * (box[:, 1] - box[:, 0])
    return np.stack([mid - half, mid + half], axis=1)


def cmd_gauge(ws, args):
    pc = ws.principal
    seed, tol = ws.seed(args.seed), ws.tol(args.tol)
    curv_tol = ws.tol(args.tol, 1e-5)
    gauge = induce_gauge_connection(pc)
    grp = group_connection_check(gauge, seed=seed, tol=tol)
    eq = equivariance_residual(pc, seed=seed)
    x = ws.point()
    q = pc.group.sample(ws.model.run.samples, np.random.default_rng(seed))
    rows, worst = [], 0.0
    for i, j in ws.pairs():
        push = pushforward_curvature(pc, x, i, j, q)
        val = curvature(gauge, x, i, j, q)
        for k in range(len(q)):
            d = float(np.max(np.abs(val[k] - push[k])))
            worst = max(worst, d)
            rows.append({"i": i, "j": j, "q": q[k].tolist(), "gauge_curvature": val[k].tolist(), "pushforward": push[k].tolist(), "discrepancy": d})
    ok_curv = worst < curv_tol
    ok = grp.passed and ok_curv and eq < 1e-8
    report = {"principal": pc.name, "group": pc.group.name, "x": x.tolist(), "gauge_group_residual": grp.max_residual,
              "equivariance_residual": eq, "curvature_discrepancy": worst, "abelian": pc.group.abelian, "rows": rows}
    lines = [grp.verdict(), _verdict("GAUGE_PUSHFORWARD", ok_curv, curvature_discrepancy=worst), _verdict("EQUIVARIANCE", eq < 1e-8, residual=eq)]
    return report, lines, ok


def cmd_compare_hol(ws, args):
    pc = ws.principal
    seed, tol, steps = ws.seed(args.seed), ws.tol(args.tol), ws.steps(args.steps)
    rows = []
    for loop in _loops(ws, args):
        d = compare_holonomies(pc, loop, ws.model.run.samples, seed, steps)
        e = holonomy_equivariance_residual(pc, loop, ws.model.run.samples, seed, steps)
        rows.append({"loop": loop.name, "discrepancy": d, "equivariance_residual": e})
    worst = max(r["discrepancy"] for r in rows)
    eq = max(r["equivariance_residual"] for r in rows)
    ok = worst < tol and eq < tol
    return {"principal": pc.name, "steps": steps, "tol": tol, "max_discrepancy": worst, "max_equivariance_residual": eq, "rows": rows}, [
        _verdict("GAUGE_PUSHFORWARD", worst < tol, max_discrepancy=worst),
        _verdict("EQUIVARIANCE", eq < tol, residual=eq),
    ], ok


def _flat_connection(ws, args):
    if args.connection or ws.model.connections:
        return ws.connection(args.connection)
    if not isinstance(ws.base, AnnulusBase):
        raise ScenarioError("monodromy needs an annulus base", "annulus")
    return build_from_representation(ws.representation, ws.base, seed=ws.seed(args.seed))


def cmd_monodromy(ws, args):
    if not isinstance(ws.base, AnnulusBase):
        raise ScenarioError("monodromy needs an annulus base", "annulus")
    conn = _flat_connection(ws, args)
    seed, steps = ws.seed(args.seed), ws.steps(args.steps)
    tol = ws.tol(args.tol, 1e-5)
    est = monodromy(conn, steps, ws.model.run.grid, seed)
    hom = est.extra["max_homotopy_discrepancy"]
    con = est.extra["contractible_identity_error"]
    ok = est.invariants_hold() and hom < tol and con < 1e-6
    rows = [{"index": k, "g": est.grid[k].tolist(), "value": est.values[k].tolist()} for k in range(len(est.grid))]
    summary = est.summary()
    summary.pop("grid")
    summary.pop("values")
    report = {"connection": conn.name, "steps": steps, "tol": tol, **summary, "rows": rows}
    return report, [_verdict("MONODROMY", ok, homotopy=hom, contractible=con, homomorphism=est.homomorphism_residual)], ok


def cmd_roundtrip(ws, args):
    if not isinstance(ws.base, AnnulusBase):
        raise ScenarioError("roundtrip needs an annulus base", "annulus")
    res = roundtrip_check(ws.representation, ws.base, ws.steps(args.steps), ws.model.run.grid, ws.seed(args.seed), ws.tol(args.tol, 1e-5))
    extra = res.estimate.extra
    report = {"representation": ws.representation.name, "sup_error": res.sup_error, "tol": res.tol,
              "dId": res.estimate.dId.tolist(), "homotopy_discrepancy": extra["homotopy_discrepancy"],
              "contractible_identity_error": extra["contractible_identity_error"], "rows": res.rows}
    return report, [res.verdict()], res.passed


def _automorphism(ws, args, name, seed):
    G = ws.fiber_group()
    count = ws.model.run.grid
    if name == "flow":
        rep = ws.representation
        return estimate_automorphism(G, rep.flow_at, count, seed, name="flow")
    if name == "monodromy":
        return monodromy(_flat_connection(ws, args), ws.steps(args.steps), count, seed)
    fn, _ = ws.automorphism(name)
    return estimate_automorphism(G, fn, count, seed, name=name)


def cmd_compare_aut(ws, args):
    seed = ws.seed(args.seed)
    tol = ws.tol(args.tol)
    a1 = _automorphism(ws, args, args.first, seed)
    a2 = _automorphism(ws, args, args.second, seed)
    conj = None
    if args.conj:
        fn, inv = ws.automorphism(args.conj)
        if inv is None:
            raise ScenarioError("conjugating automorphism needs an inverse", f"automorphisms.{args.conj}.inverse")
        conj = (fn, inv)
    d = compare_automorphisms(a1, a2, conj)
    ok = d < tol
    report = {"first": args.first, "second": args.second, "conj": args.conj, "distance": d, "tol": tol,
              "grid": a1.grid.tolist(), "first_values": a1.values.tolist()}
    return report, [_verdict("SAME_CLASS", ok, distance=d)], ok


COMMANDS = {
    "lift": (cmd_lift, "horizontal lift of a path"),
    "holonomy": (cmd_holonomy, "transport map along a loop"),
    "curvature": (cmd_curvature, "curvature values at a point"),
    "as-slope": (cmd_as_slope, "bracket value vs. commutator-loop holonomy slope"),
    "check-group": (cmd_check_group, "group-connection residual grid"),
    "cocycle": (cmd_cocycle, "cocycle identity residual grid"),
    "difference": (cmd_difference, "difference of two group connections"),
    "add-cocycle": (cmd_add_cocycle, "shift a group connection by a cocycle form"),
    "trivialize": (cmd_trivialize, "flow trivialization over a cube"),
    "gauge": (cmd_gauge, "induced gauge connection and curvature pushforward"),
    "compare-hol": (cmd_compare_hol, "gauge holonomy vs. conjugation by principal holonomy"),
    "monodromy": (cmd_monodromy, "monodromy of a flat connection on the annulus"),
    "roundtrip": (cmd_roundtrip, "representation -> connection -> monodromy"),
    "compare-aut": (cmd_compare_aut, "distance between two fiber automorphisms"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario JSON file")
    common.add_argument("--steps", type=int, default=None, help="RK4 steps per path (default 10000)")
    common.add_argument("--tol", type=float, default=None, help="pass/fail tolerance (default 1e-6; some checks use their own)")
    common.add_argument("--seed", type=int, default=None, help="sampling seed (default 42)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", default=None, help="report path (default stdout)")
    common.add_argument("--connection", default=None, help="connection name (default: run.connection or first)")

    parser = argparse.ArgumentParser(prog="holonomy-lab", description="Numerical experiments with connections on group bundles.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name in ("lift", "holonomy", "compare-hol"):
            p.add_argument("--loop", default=None, help="path name")
        if name in ("cocycle", "add-cocycle"):
            p.add_argument("--cocycle", default=None, help="cocycle name")
        if name == "difference":
            p.add_argument("--other", default=None, help="second connection name")
        if name == "compare-aut":
            p.add_argument("--first", default="monodromy", help="automorphism name, 'monodromy' or 'flow'")
            p.add_argument("--second", default="flow", help="automorphism name, 'monodromy' or 'flow'")
            p.add_argument("--conj", default=None, help="conjugating automorphism name")
    acc = sub.add_parser("acceptance", help="run the acceptance suite")
    acc.add_argument("--steps", type=int, default=None)
    acc.add_argument("--format", choices=("json", "csv"), default="json")
    acc.add_argument("--output", default=None)
    return parser


def _emit(text: str, output):
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _run_acceptance(args) -> int:
    from holonomy_lab.acceptance import run_all

    results = run_all(steps=args.steps)
    for r in results:
        print(r.line(), file=sys.stderr)
    report = {"command": "acceptance", "rows": [r.as_row() for r in results], "passed": all(r.passed for r in results)}
    _emit(render(report, args.format), args.output)
    return EXIT_PASS if report["passed"] else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_PASS
    if args.command == "acceptance":
        return _run_acceptance(args)
    fn = COMMANDS[args.command][0]
    try:
        ws = load(args.scenario)
        with np.errstate(all="ignore"):
            report, lines, passed = fn(ws, args)
    except ScenarioError as exc:
        print(f"holonomy-lab: scenario error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HolonomyLabError as exc:
        report = {"command": args.command, "scenario": args.scenario, "error": exc.context()}
        print(f"ERROR: {exc}", file=sys.stderr)
        _emit(render(report, args.format), args.output)
        return EXIT_FAIL
    full = {"command": args.command, "scenario": ws.model.name, "verdicts": lines, **report}
    if passed is not None:
        full["passed"] = passed
    for line in lines:
        print(line, file=sys.stderr)
    _emit(render(full, args.format), args.output)
    return EXIT_PASS if passed in (None, True) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
