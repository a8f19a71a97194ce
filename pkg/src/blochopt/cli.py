"""Command-line front end: trajectories, syntheses, reachable sets, checks.

Exit codes: 0 success, 1 configuration error, 2 numerical-invariant failure,
3 infeasible query.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import (
    AsymptoticTargetError,
    BlochOptError,
    ConfigError,
    SingularLocusError,
    UnreachableTargetError,
)
from .model import (
    CASE_PARAMS,
    ModelParams,
    accessibility_dimension,
    delta_a,
    loci,
)
from .words import ControlWord
from .flows import (
    event_crossings,
    flow_const,
    propagate_word,
    rk_oracle_batch,
)
from .clockform import alpha_at, mirror_x2, stokes_compare, time_via_alpha
from .pmp import theta_profile
from .synthesis import (
    SynthesisChart,
    brute_force_oracle,
    build_synthesis,
    grid_times,
    min_time_query,
    reach_time_field,
    reachable_set,
)
from . import svg


def _add_model_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--case", choices=sorted(CASE_PARAMS), help="benchmark parameter set")
    sp.add_argument("--Gamma", type=float, help="total dephasing rate")
    sp.add_argument("--gamma12", type=float)
    sp.add_argument("--gamma21", type=float)
    sp.add_argument("--from", dest="start", default=None, help="initial state x2,x3")
    sp.add_argument("--horizon", type=float, default=40.0)
    sp.add_argument("--grid", type=int, default=201)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--out", default=".", help="output directory")


def _parse_params(args) -> ModelParams:
    explicit = [args.Gamma, args.gamma12, args.gamma21]
    has_explicit = any(v is not None for v in explicit)
    if args.case and has_explicit:
        raise ConfigError("give either --case or explicit rates, not both")
    if args.case:
        return CASE_PARAMS[args.case]
    if not all(v is not None for v in explicit):
        raise ConfigError("explicit rates need --Gamma, --gamma12 and --gamma21")
    return ModelParams(args.Gamma, args.gamma12, args.gamma21)


def _parse_state(args, default=(0.0, 1.0)) -> np.ndarray:
    if args.start is None:
        return np.array(default, dtype=float)
    try:
        x2, x3 = (float(v) for v in args.start.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse --from {args.start!r}") from exc
    if x2 * x2 + x3 * x3 > 1.0 + 1e-9:
        raise ConfigError(f"initial state ({x2}, {x3}) outside the Bloch disk")
    return np.array([x2, x3])


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_traj(args) -> int:
    p = _parse_params(args)
    s0 = _parse_state(args)
    word = ControlWord.parse(args.word)
    traj = propagate_word(s0, p, word)
    out = _outdir(args)
    with open(out / "traj.csv", "w") as fh:
        traj.write_csv(fh, p)
    lc = loci(p)
    curves = [("CA", arc) for arc in lc.ca_arcs if len(arc) > 1]
    curves += [("CB", line.samples()) for line in lc.cb_lines]
    (out / "traj.svg").write_text(
        svg.render_curves(curves, markers=[(s0, "start")], trajectories=[traj.x])
    )
    print(f"wrote {out / 'traj.csv'} and traj.svg; final state "
          f"({traj.final_state[0]:.12g}, {traj.final_state[1]:.12g}); "
          f"realized word {traj.word.label()}")
    if traj.events:
        print("events: " + "; ".join(f"{e.kind}@{e.time:.6g}" for e in traj.events))
    return 0


def cmd_synthesis(args) -> int:
    p = _parse_params(args)
    s0 = _parse_state(args)
    chart = build_synthesis(s0, p, horizon=args.horizon)
    out = _outdir(args)
    (out / "chart.json").write_text(chart.to_json() + "\n")
    (out / "chart.svg").write_text(svg.render_chart(chart))
    with open(out / "grid_times.csv", "w") as fh:
        fh.write("x2,x3,time,word\n")
        for x2, x3, t, label in grid_times(chart, n=args.grid):
            tv = "inf" if math.isinf(t) else f"{t:.17g}"
            fh.write(f"{x2:.17g},{x3:.17g},{tv},{label}\n")
    print(f"case {chart.case_tag}: wrote chart.json, chart.svg, grid_times.csv "
          f"to {out}")
    bad = [r.label for r in chart.regions if r.ambiguous]
    if bad:
        print(f"ambiguous regions: {bad}", file=sys.stderr)
        return 2
    return 0


def cmd_reachable(args) -> int:
    p = _parse_params(args)
    s0 = _parse_state(args)
    rs = reachable_set(s0, p, horizon=args.horizon)
    out = _outdir(args)
    payload = {
        "initial_state": [float(s0[0]), float(s0[1])],
        "case": rs.case.value,
        "arcs": [
            {
                "tag": arc.tag,
                "attained": bool(arc.attained),
                "points": [[float(a), float(b)] for a, b in arc.samples[::5]],
            }
            for arc in rs.arcs
        ],
    }
    (out / "reachable.json").write_text(json.dumps(payload) + "\n")
    n = args.grid
    axis = np.linspace(-1.0, 1.0, n)
    with open(out / "reachable_grid.csv", "w") as fh:
        fh.write("x2,x3,inside\n")
        for x2 in axis:
            for x3 in axis:
                fh.write(f"{x2:.17g},{x3:.17g},{int(rs.contains((x2, x3)))}\n")
    curves = [(("boundary" if arc.attained else "CB"), arc.samples) for arc in rs.arcs]
    (out / "reachable.svg").write_text(
        svg.render_curves(curves, markers=[(s0, "start")])
    )
    print(f"wrote reachable.json, reachable_grid.csv, reachable.svg to {out}")
    return 0


def cmd_compare(args) -> int:
    p = _parse_params(args)
    s0 = _parse_state(args)
    w1 = ControlWord.parse(args.word)
    w2 = ControlWord.parse(args.word2)
    path1 = propagate_word(s0, p, w1)
    path2 = propagate_word(s0, p, w2)
    if args.mirror:
        path2 = mirror_x2(path2)
    try:
        report = stokes_compare(path1, path2, p)
        print(report.to_json())
        if not report.agreement:
            print("two-route disagreement beyond tolerance", file=sys.stderr)
            return 2
    except SingularLocusError:
        # paths or enclosed region touch the collinearity locus; compare clocks
        t1, t2 = path1.duration, path2.duration
        d = t1 - t2
        winner = "tie" if abs(d) <= 1e-8 else ("path1" if d < 0 else "path2")
        print(json.dumps({
            "T1": t1, "T2": t2,
            "difference_line_integral": d,
            "difference_surface_integral": d,
            "winner": winner,
            "method": "direct-durations",
        }))
    return 0


def cmd_oracle(args) -> int:
    p = _parse_params(args)
    s0 = _parse_state(args)
    try:
        x2, x3 = (float(v) for v in args.target.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse --target {args.target!r}") from exc
    field = reach_time_field(s0, p, n=args.grid if args.grid <= 201 else 101,
                             dt=args.dt, horizon=min(args.horizon, 12.0),
                             levels=args.levels)
    t_oracle = field.query((x2, x3))
    chart = build_synthesis(s0, p, horizon=args.horizon)
    try:
        word, t_chart = min_time_query(chart, (x2, x3))
        label = word.label()
    except (UnreachableTargetError, AsymptoticTargetError) as exc:
        label, t_chart = str(exc), math.inf
    gap = (t_oracle - t_chart if math.isfinite(t_oracle) and math.isfinite(t_chart)
           else math.inf)
    print(json.dumps({
        "target": [x2, x3],
        "oracle_time": t_oracle if math.isfinite(t_oracle) else "inf",
        "chart_time": t_chart if math.isfinite(t_chart) else "inf",
        "chart_word": label,
        "gap": gap if math.isfinite(gap) else "inf",
    }))
    if math.isfinite(t_chart) != math.isfinite(t_oracle):
        return 3
    return 0


def cmd_selfcheck(args) -> int:
    failures = []
    rng = np.random.default_rng(20240901)

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    for tag, p in CASE_PARAMS.items():
        pts = rng.normal(size=(20, 2))
        pts /= np.maximum(1.0, np.linalg.norm(pts, axis=1))[:, None] / rng.uniform(
            0.2, 0.95, 20
        )[:, None]
        pts = np.clip(pts, -0.99, 0.99)
        for eps in (-1.0, 1.0):
            cf = flow_const(pts, p, eps, 3.0)
            rk = rk_oracle_batch(pts, p, eps, 3.0, tol=1e-10)
            check(f"[{tag}] bang flow vs oracle (eps={eps:+.0f})",
                  float(np.abs(cf - rk).max()) < 1e-8)
        # purity law along a random piecewise-bang word
        word = ControlWord.make([("Y", 0.7), ("X", 0.9)])
        traj = propagate_word((0.0, 0.9), p, word, max_dt=1e-3)
        pur = 0.5 * (1.0 + np.einsum("ti,ti->t", traj.x, traj.x))
        dnum = np.gradient(pur, traj.t)
        da = delta_a(traj.x, p)
        mask = np.abs(da) > 1e-4
        mask[:2] = mask[-2:] = False
        check(f"[{tag}] purity rate equals collinearity determinant",
              float(np.abs(dnum[mask] - da[mask]).max()) < 1e-4)
        # clock identities
        ok = True
        for pt in pts[:10]:
            if abs(float(delta_a(pt, p))) < 1e-2:
                continue
            a2, a3 = alpha_at(pt, p)
            f = [-p.Gamma * pt[0], p.gamma_minus - p.gamma_plus * pt[1]]
            g = [-pt[1], pt[0]]
            ok &= abs(a2 * f[0] + a3 * f[1] - 1.0) < 1e-10
            ok &= abs(a2 * g[0] + a3 * g[1]) < 1e-12
        check(f"[{tag}] clock form pairings", ok)
        # theta sign law on a bang run
        start = (0.0, 0.9) if tag != "c" else (0.3, -0.3)
        traj = propagate_word(start, p, ControlWord.make([("Y", 2.0)]),
                              with_frames=True)
        prof = theta_profile(traj, p)
        from .model import delta_b as _db

        db = _db(traj.x, p)
        td = prof.theta_dot
        m = (np.abs(db) > 1e-5) & (np.abs(td) > 1e-5)
        m[:2] = m[-2:] = False
        check(f"[{tag}] theta rate sign law",
              bool(np.all(np.sign(td[m]) == np.sign(db[m]))))
        dim = accessibility_dimension(p)
        check(f"[{tag}] accessibility dimension",
              dim == (4 if p.gamma_minus == 0.0 else 6))
    if failures:
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blochopt",
                                 description="time-optimal control on the "
                                             "dissipative Bloch disk")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("traj", help="propagate a control word")
    _add_model_args(sp)
    sp.add_argument("--word", required=True, help="e.g. Y:2.0,X:1.0")
    sp.set_defaults(func=cmd_traj)

    sp = sub.add_parser("synthesis", help="build the optimal synthesis chart")
    _add_model_args(sp)
    sp.set_defaults(func=cmd_synthesis)

    sp = sub.add_parser("reachable", help="compute the reachable set")
    _add_model_args(sp)
    sp.set_defaults(func=cmd_reachable)

    sp = sub.add_parser("compare", help="compare two words between shared endpoints")
    _add_model_args(sp)
    sp.add_argument("--word", required=True)
    sp.add_argument("--word2", required=True)
    sp.add_argument("--mirror", action="store_true",
                    help="reflect the second path across x2=0 before comparing")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("oracle", help="cross-check a chart query against the "
                                       "value-iteration oracle")
    _add_model_args(sp)
    sp.add_argument("--target", required=True, help="target state x2,x3")
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--levels", type=int, default=1)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("selfcheck", help="run the numerical invariant suite")
    _add_model_args(sp)
    sp.set_defaults(func=cmd_selfcheck)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (UnreachableTargetError, AsymptoticTargetError) as exc:
        print(f"infeasible query: {exc}", file=sys.stderr)
        return 3
    except BlochOptError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
