"""Reachable sets, switch curve, optimal synthesis charts and queries.

The synthesis for one (parameter set, initial state) pair is assembled from
word families whose durations are solved by bisection and damped Newton
against closed-form flows; the winning word per target is decided by a direct
time tournament (clock-form comparisons are available through
:mod:`blochopt.clockform` and used by the tests).  An independent
dynamic-programming oracle over a disk grid provides the ground truth the
chart is validated against.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    AsymptoticTargetError,
    DegenerateModelError,
    UnreachableTargetError,
)
from .flows import (
    DEFAULT_MAX_DT,
    Event,
    Trajectory,
    event_crossings,
    flow_const,
    flow_const_times,
    free_flow,
    propagate_word,
    singular_control,
    stationary_point,
)
from .model import (
    BlochState,
    LineKind,
    ModelParams,
    control_field,
    delta_a,
    drift_field,
    free_fixed_point,
    loci,
)
from .words import ArcKind, ControlWord, EMPTY_WORD

#: targets closer than this to an infinite-time structure are rejected
ASYMPTOTIC_EPS = 1e-4


class CaseClass(str, Enum):
    UNITAL_APERIODIC = "unital_aperiodic"      # case (a)
    UNITAL_MIXED = "unital_mixed"              # case (b)
    AFFINE_PURIFICATION = "affine_purification"  # case (c)
    AFFINE_GENERAL = "affine_general"          # case (d)
    OTHER = "other"


CASE_TAG = {
    CaseClass.UNITAL_APERIODIC: "a",
    CaseClass.UNITAL_MIXED: "b",
    CaseClass.AFFINE_PURIFICATION: "c",
    CaseClass.AFFINE_GENERAL: "d",
    CaseClass.OTHER: "other",
}


def classify_case(p: ModelParams, rel_tol: float = 1e-12) -> CaseClass:
    """Parameter regime of the four benchmark syntheses.

    Unital rates split on the strict aperiodicity threshold; the full
    population-inversion ratio admits the threshold itself (the benchmark
    purification rates sit exactly on it and stay aperiodic there).
    """
    gp = p.gamma_plus
    if gp <= 0:
        return CaseClass.OTHER
    ratio = p.gamma_minus / gp
    if abs(ratio) <= rel_tol:
        if p.Gamma > gp + 2.0:
            return CaseClass.UNITAL_APERIODIC
        if gp - 2.0 < p.Gamma < gp + 2.0:
            return CaseClass.UNITAL_MIXED
        return CaseClass.OTHER
    if abs(ratio + 1.0) <= rel_tol and p.Gamma >= gp + 2.0:
        return CaseClass.AFFINE_PURIFICATION
    if -1.0 < ratio < 0.0 and p.Gamma > gp + 2.0:
        return CaseClass.AFFINE_GENERAL
    return CaseClass.OTHER


# ---------------------------------------------------------------------------
# brute-force minimum-time oracle (value iteration)
# ---------------------------------------------------------------------------

_INF = 1e9


@dataclass
class ReachTimeField:
    """Grid of minimum times from a fixed initial state (forward DP)."""

    axis: np.ndarray
    w: np.ndarray  # w[i, j] = min time to reach (axis[i], axis[j])
    s0: np.ndarray
    dt: float
    controls: tuple[float, ...]
    sweeps: int
    horizon: float

    @property
    def spacing(self) -> float:
        return float(self.axis[1] - self.axis[0])

    def query(self, target, ball: float | None = None) -> float:
        """Minimum grid time within a ball around the target (inf if none).

        The default ball radius of 1.5 cells covers the interpolation cell of
        the target including its diagonal.
        """
        tgt = np.asarray(target, dtype=float)
        r = 1.5 * self.spacing if ball is None else ball
        i0 = np.searchsorted(self.axis, tgt[0] - r - 1e-12)
        i1 = np.searchsorted(self.axis, tgt[0] + r + 1e-12, side="right")
        j0 = np.searchsorted(self.axis, tgt[1] - r - 1e-12)
        j1 = np.searchsorted(self.axis, tgt[1] + r + 1e-12, side="right")
        block = self.w[i0:i1, j0:j1]
        if block.size == 0:
            return math.inf
        xg, yg = np.meshgrid(self.axis[i0:i1], self.axis[j0:j1], indexing="ij")
        mask = (xg - tgt[0]) ** 2 + (yg - tgt[1]) ** 2 <= r * r
        vals = block[mask]
        if vals.size == 0:
            return math.inf
        best = float(vals.min())
        return best if best < 0.95 * self.horizon else math.inf


def reach_time_field(
    s0,
    p: ModelParams,
    n: int = 101,
    dt: float = 1e-3,
    horizon: float = 12.0,
    levels: int = 1,
) -> ReachTimeField:
    """Forward value iteration for minimum arrival times on a disk grid.

    Controls are the bang/free triple, refined with half-amplitude values at
    ``levels >= 2``.  The Bellman update pulls each node back along every
    control for one Euler step of length ``dt`` and interpolates bilinearly.
    The iteration runs on the bounded transform ``v = 1 - exp(-lam * V)``
    (unreachable nodes sit at v = 1), which keeps the interpolation stable
    across the jump to unreachable regions; the weight a node places on its
    own predecessor cell corner is divided out so every sweep solves the
    per-node fixed point exactly.  Accuracy is first order, O(dt + spacing).
    """
    controls = (-1.0, 0.0, 1.0) if levels < 2 else (-1.0, -0.5, 0.0, 0.5, 1.0)
    x0 = s0.as_array() if isinstance(s0, BlochState) else np.asarray(s0, dtype=float)
    lam = 1.0
    h = 2.0 / (n - 1)
    pad = 3  # keep disk-boundary seeds interior to the grid
    n = n + 2 * pad
    axis = np.linspace(-1.0 - pad * h, 1.0 + pad * h, n)
    xg, yg = np.meshgrid(axis, axis, indexing="ij")

    # The grid covers a padded bounding square; the disk is forward invariant,
    # so square-only nodes never support a faster path into the disk.
    v = np.ones((n, n))
    seed = (xg - x0[0]) ** 2 + (yg - x0[1]) ** 2 <= (0.75 * h) ** 2
    if not seed.any():
        i = int(np.argmin(np.abs(axis - x0[0])))
        j = int(np.argmin(np.abs(axis - x0[1])))
        seed = np.zeros((n, n), dtype=bool)
        seed[i, j] = True
    v[seed] = 0.0

    # Predecessor stencils: for each control, every node is pulled back by
    # explicit Euler substeps of length dt until it has crossed about one
    # cell (interpolating once per cell keeps the truncation O(dt + h);
    # interpolating every dt would add an O(h^2/dt) smearing term).  The
    # node's own corner weight is divided out so each sweep solves the
    # per-node Bellman fixed point exactly.
    node_flat = (np.arange(n)[:, None] * n + np.arange(n)[None, :]).ravel()
    # a hop ends after crossing about one cell; slow nodes (near stationary
    # points) are cut off after tau_cap time units instead
    tau_cap = 2.0
    k_cap = max(1, int(math.ceil(tau_cap / dt)))
    stencils = []
    for u in controls:
        px = xg.copy().ravel()
        py = yg.copy().ravel()
        steps = np.zeros(px.shape, dtype=np.int64)
        active = np.ones(px.shape, dtype=bool)
        x_ref, y_ref = xg.ravel(), yg.ravel()
        for _ in range(k_cap):
            fx = -p.Gamma * px[active] - u * py[active]
            fy = p.gamma_minus - p.gamma_plus * py[active] + u * px[active]
            px[active] = px[active] - dt * fx
            py[active] = py[active] - dt * fy
            steps[active] += 1
            moved = (px - x_ref) ** 2 + (py - y_ref) ** 2 >= h * h
            active &= ~moved
            if not active.any():
                break
        tau = steps * dt
        gi = np.clip((px - axis[0]) / h, 0.0, n - 1 - 1e-9)
        gj = np.clip((py - axis[0]) / h, 0.0, n - 1 - 1e-9)
        i0 = gi.astype(np.int64)
        j0 = gj.astype(np.int64)
        si = gi - i0
        sj = gj - j0
        base = i0 * n + j0
        corner_flats = np.stack([base, base + 1, base + n, base + n + 1])
        weights = np.stack(
            [(1 - si) * (1 - sj), (1 - si) * sj, si * (1 - sj), si * sj]
        )
        self_w = np.zeros(n * n)
        for c in range(4):
            at_self = corner_flats[c] == node_flat
            self_w[at_self] += weights[c][at_self]
            weights[c][at_self] = 0.0
        beta = np.exp(-lam * tau)
        denom = 1.0 - beta * self_w
        offgrid = (
            (px < axis[0]) | (px > axis[-1]) | (py < axis[0]) | (py > axis[-1])
        )
        stencils.append((corner_flats, weights, beta, denom, offgrid))

    max_sweeps = int(math.ceil(horizon / dt))
    sweeps = 0
    for sweep in range(max_sweeps):
        sweeps = sweep + 1
        vf = v.ravel()
        best = vf.copy()
        for corner_flats, weights, beta, denom, off in stencils:
            interp = (
                weights[0] * vf[corner_flats[0]]
                + weights[1] * vf[corner_flats[1]]
                + weights[2] * vf[corner_flats[2]]
                + weights[3] * vf[corner_flats[3]]
            )
            cand = (1.0 - beta + beta * interp) / denom
            cand[off] = 1.0
            np.minimum(best, cand, out=best)
        best[vf == 0.0] = 0.0
        changed = float(np.max(np.abs(best - vf)))
        v = best.reshape(n, n)
        if changed < 1e-14:
            break
    with np.errstate(divide="ignore"):
        w = -np.log1p(-np.minimum(v, 1.0 - 1e-300)) / lam
    w[v >= 1.0 - 1e-12] = _INF
    return ReachTimeField(axis, w, x0, dt, controls, sweeps, horizon)


def brute_force_oracle(
    s0,
    p: ModelParams,
    target,
    dt: float = 1e-3,
    levels: int = 1,
    n: int = 101,
    horizon: float = 12.0,
    field: ReachTimeField | None = None,
) -> float:
    """Discretized minimum time from s0 to the target ball (inf if missed)."""
    if field is None:
        field = reach_time_field(s0, p, n=n, dt=dt, horizon=horizon, levels=levels)
    return field.query(target)


# ---------------------------------------------------------------------------
# reachable sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryArc:
    """One boundary piece of a reachable set."""

    samples: np.ndarray
    tag: str
    attained: bool


@dataclass
class ReachableSet:
    """Closed boundary chain plus parity membership test."""

    arcs: list[BoundaryArc]
    chain: np.ndarray  # concatenated closed polyline
    s0: np.ndarray
    case: CaseClass

    def contains(self, target) -> bool:
        tgt = np.asarray(target, dtype=float)
        if float(tgt @ tgt) > 1.0 + 1e-9:
            return False
        return _point_in_polygon(tgt, self.chain)


def _point_in_polygon(pt: np.ndarray, poly: np.ndarray) -> bool:
    x, y = float(pt[0]), float(pt[1])
    xs = poly[:, 0]
    ys = poly[:, 1]
    x0, y0 = xs[:-1], ys[:-1]
    x1, y1 = xs[1:], ys[1:]
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (xint > x)
    return bool(np.count_nonzero(hits) % 2 == 1)


def _bang_arc_samples(s0: np.ndarray, p: ModelParams, u: float, horizon: float,
                      max_dt: float = DEFAULT_MAX_DT) -> np.ndarray:
    n = max(2, int(math.ceil(horizon / max_dt)) + 1)
    ts = np.linspace(0.0, horizon, n)
    return flow_const_times(s0, p, u, ts)


def _first_ca_crossing(s0: np.ndarray, p: ModelParams, u: float,
                       horizon: float) -> tuple[float, np.ndarray] | None:
    word = ControlWord.make([("Y" if u > 0 else "X", horizon)])
    traj = propagate_word(s0, p, word)
    for ev in event_crossings(traj, p):
        if ev.kind == "deltaA" and ev.time > 1e-9 and not ev.grazing:
            return ev.time, ev.state
    return None


def reachable_set(s0, p: ModelParams, horizon: float = 40.0) -> ReachableSet:
    """Boundary of the reachable set from ``s0`` built from bang arcs.

    Unital cases close with the two bang arcs alone; the affine cases add the
    bang arcs that emanate from the free fixed point, which are approached
    only asymptotically and therefore tagged as not attained.  For the
    general affine case the initial arcs stop being boundary at their first
    collinearity-locus crossing and continue with the opposite bang arc.
    """
    x0 = s0.as_array() if isinstance(s0, BlochState) else np.asarray(s0, dtype=float)
    case = classify_case(p)
    arcs: list[BoundaryArc] = []

    if case in (CaseClass.UNITAL_APERIODIC, CaseClass.UNITAL_MIXED):
        y_arc = _bang_arc_samples(x0, p, 1.0, horizon)
        x_arc = _bang_arc_samples(x0, p, -1.0, horizon)
        # pseudo-periodic arcs spiral; the boundary is each arc up to their
        # first mutual crossing (the rest winds inside the closed region)
        hits = [
            (i, j, ta, tb)
            for i, j, ta, tb in _segment_intersections(y_arc, x_arc)
            if i + ta > 1e-9 and j + tb > 1e-9
        ]
        if hits:
            i, j, ta, tb = min(hits, key=lambda r: r[0] + r[2])
            meet = y_arc[i] + ta * (y_arc[i + 1] - y_arc[i])
            y_arc = np.vstack([y_arc[: i + 1], meet[None, :]])
            x_arc = np.vstack([x_arc[: j + 1], meet[None, :]])
        arcs.append(BoundaryArc(y_arc, "Y from s0", True))
        arcs.append(BoundaryArc(x_arc[::-1], "X from s0", True))
        chain = np.vstack([y_arc, x_arc[::-1], x0[None, :]])
    elif case is CaseClass.AFFINE_PURIFICATION:
        fp = free_fixed_point(p).as_array()
        y0_arc = _bang_arc_samples(x0, p, 1.0, horizon)
        x0_arc = _bang_arc_samples(x0, p, -1.0, horizon)
        yf_arc = _bang_arc_samples(fp, p, 1.0, horizon)
        xf_arc = _bang_arc_samples(fp, p, -1.0, horizon)
        arcs.append(BoundaryArc(y0_arc, "Y from s0", True))
        arcs.append(BoundaryArc(yf_arc[::-1], "Y from fixed point", False))
        arcs.append(BoundaryArc(xf_arc, "X from fixed point", False))
        arcs.append(BoundaryArc(x0_arc[::-1], "X from s0", True))
        chain = np.vstack([y0_arc, yf_arc[::-1], xf_arc, x0_arc[::-1], x0[None, :]])
    elif case is CaseClass.AFFINE_GENERAL:
        fp = free_fixed_point(p).as_array()
        cy = _first_ca_crossing(x0, p, 1.0, horizon)
        cx = _first_ca_crossing(x0, p, -1.0, horizon)
        y_arc = _bang_arc_samples(x0, p, 1.0, horizon if cy is None else cy[0])
        x_arc = _bang_arc_samples(x0, p, -1.0, horizon if cx is None else cx[0])
        arcs.append(BoundaryArc(y_arc, "Y from s0", True))
        parts = [y_arc]
        if cy is not None:
            cont = _bang_arc_samples(cy[1], p, -1.0, horizon)
            arcs.append(BoundaryArc(cont, "X continuation", True))
            parts.append(cont)
        yf_arc = _bang_arc_samples(fp, p, 1.0, horizon)
        xf_arc = _bang_arc_samples(fp, p, -1.0, horizon)
        arcs.append(BoundaryArc(xf_arc[::-1], "X from fixed point", False))
        arcs.append(BoundaryArc(yf_arc, "Y from fixed point", False))
        parts.extend([xf_arc[::-1], yf_arc])
        if cx is not None:
            cont = _bang_arc_samples(cx[1], p, 1.0, horizon)
            arcs.append(BoundaryArc(cont[::-1], "Y continuation", True))
            parts.append(cont[::-1])
        arcs.append(BoundaryArc(x_arc[::-1], "X from s0", True))
        parts.append(x_arc[::-1])
        parts.append(x0[None, :])
        chain = np.vstack(parts)
    else:
        y_arc = _bang_arc_samples(x0, p, 1.0, horizon)
        x_arc = _bang_arc_samples(x0, p, -1.0, horizon)
        arcs.append(BoundaryArc(y_arc, "Y from s0 (unclassified regime)", True))
        arcs.append(BoundaryArc(x_arc[::-1], "X from s0 (unclassified regime)", True))
        chain = np.vstack([y_arc, x_arc[::-1], x0[None, :]])
    return ReachableSet(arcs, chain, x0, case)


# ---------------------------------------------------------------------------
# switch curve (general affine case)
# ---------------------------------------------------------------------------


@dataclass
class SwitchCurve:
    """Second-switch locus built from the pi-variation rule.

    ``seed`` is the first crossing of the generating bang arc with the
    singular locus (construction metadata).  ``points[k]`` is the state where
    the extremal switching first at ``t1[k]`` is forced to switch again, with
    the backward variational angle having moved by exactly pi; the locus
    terminates at the origin.  ``residuals`` store |delta theta| - pi at the
    recorded switches.
    """

    points: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    seed: np.ndarray
    seed_time: float
    initial_kind: ArcKind
    residuals: np.ndarray

    def tangency_angle_at_origin(self) -> float:
        """Angle (rad) between the locus and the vertical line at the origin."""
        k = int(np.argmin(np.linalg.norm(self.points, axis=1)))
        ref = self.points[k - 1] if k > 0 else self.points[min(k + 1, len(self.points) - 1)]
        d = ref - self.points[k]
        nrm = float(np.linalg.norm(d))
        if nrm == 0.0:
            return math.nan
        return float(math.asin(min(1.0, abs(d[0]) / nrm)))


def _second_switch_shot(s0: np.ndarray, p: ModelParams, kind: ArcKind,
                        t1: float, horizon: float):
    """Second forced switch of the extremal whose first switch is at t1."""
    from .pmp import propagate_extremal

    u1 = 1.0 if kind is ArcKind.Y else -1.0
    tr = propagate_word(s0, p, ControlWord.make([(kind.value, t1)]),
                        with_frames=True)
    x1 = tr.final_state
    vt1 = tr.frames[-1] @ np.array([-x1[1], x1[0]])
    a0 = np.array([vt1[1], -vt1[0]])
    phi0 = -a0[0] * s0[1] + a0[1] * s0[0]
    if phi0 * u1 < 0:
        a0 = -a0
    try:
        ext = propagate_extremal(s0, a0, p, horizon, stop_at_forbidden=False,
                                 max_switches=40, stop_after_switches=2)
    except Exception:
        return None
    if len(ext.switch_times) < 2:
        return None
    t2 = ext.switch_times[1]
    k = int(np.argmin(np.abs(ext.t - t2)))
    dth = abs(float(ext.theta[k] - np.interp(t1, ext.t, ext.theta)))
    return t2, ext.x[k].copy(), dth - math.pi


def switch_curve(p: ModelParams, s0, initial_kind: ArcKind = ArcKind.Y,
                 n_sweep: int = 48, horizon: float = 30.0) -> SwitchCurve:
    """Construct the switch curve of the general affine synthesis.

    First-switch times are swept over the admissible range of the initial
    bang arc; each shot records where the angle variation since the first
    switch reaches pi (a forced, permitted second switch).  The sweep is
    refined toward the end of the family, where the locus runs into the
    origin.
    """
    x0 = s0.as_array() if isinstance(s0, BlochState) else np.asarray(s0, dtype=float)
    word = ControlWord.make([(initial_kind.value, horizon)])
    tr = propagate_word(x0, p, word)
    seed_time = math.nan
    seed = np.array([math.nan, math.nan])
    for ev in event_crossings(tr, p):
        if ev.kind == "deltaB" and ev.time > 1e-9 and not ev.grazing:
            seed_time, seed = ev.time, ev.state.copy()
            break
    t_hi = seed_time if seed_time == seed_time else horizon

    rows = []
    for t1 in np.linspace(0.02 * t_hi, 0.999 * t_hi, n_sweep):
        hit = _second_switch_shot(x0, p, initial_kind, float(t1), horizon)
        if hit is not None:
            rows.append((float(t1), hit[0], hit[1], hit[2]))
    if not rows:
        raise UnreachableTargetError("no pi-variation switches found; "
                                     "switch curve empty for these parameters")
    # refine toward the origin end of the family (largest feasible t1)
    lo = rows[-1][0]
    hi = min(t_hi, lo + (rows[-1][0] - rows[-2][0]) if len(rows) > 1 else t_hi)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        hit = _second_switch_shot(x0, p, initial_kind, mid, horizon)
        if hit is None:
            hi = mid
        else:
            lo = mid
            rows.append((mid, hit[0], hit[1], hit[2]))
        if hi - lo < 1e-10:
            break
    rows.sort(key=lambda r: r[0])
    t1s = np.array([r[0] for r in rows])
    t2s = np.array([r[1] for r in rows])
    pts = np.array([r[2] for r in rows])
    res = np.array([r[3] for r in rows])
    return SwitchCurve(pts, t1s, t2s, seed, seed_time, initial_kind, res)


# ---------------------------------------------------------------------------
# word-family solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WordSolution:
    word: ControlWord
    time: float
    endpoint: np.ndarray

    @property
    def label(self) -> str:
        return self.word.label()


def _segment_intersections(a: np.ndarray, b: np.ndarray):
    """Proper crossings between two polylines; yields (i, j, ta, tb)."""
    a0, a1 = a[:-1], a[1:]
    b0, b1 = b[:-1], b[1:]
    r = a1 - a0
    s = b1 - b0
    denom = r[:, None, 0] * s[None, :, 1] - r[:, None, 1] * s[None, :, 0]
    qp = b0[None, :, :] - a0[:, None, :]
    cross_qp_s = qp[..., 0] * s[None, :, 1] - qp[..., 1] * s[None, :, 0]
    cross_qp_r = qp[..., 0] * r[:, None, 1] - qp[..., 1] * r[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = cross_qp_s / denom
        uu = cross_qp_r / denom
    ok = (np.abs(denom) > 1e-14) & (tt >= -1e-12) & (tt <= 1 + 1e-12) \
        & (uu >= -1e-12) & (uu <= 1 + 1e-12)
    out = []
    for i, j in zip(*np.nonzero(ok)):
        out.append((int(i), int(j), float(tt[i, j]), float(uu[i, j])))
    return out


def _forward_samples(x0: np.ndarray, p: ModelParams, u: float, horizon: float,
                     dt: float = 0.02):
    n = max(2, int(math.ceil(horizon / dt)) + 1)
    ts = np.linspace(0.0, horizon, n)
    return ts, flow_const_times(x0, p, u, ts)


def _backward_samples(target: np.ndarray, p: ModelParams, u: float,
                      horizon: float, dt: float = 0.02, rmax: float = 1.25):
    n = max(2, int(math.ceil(horizon / dt)) + 1)
    ts = np.linspace(0.0, horizon, n)
    pts = flow_const_times(target, p, u, -ts)
    r2 = np.einsum("ti,ti->t", pts, pts)
    beyond = np.nonzero(r2 > rmax * rmax)[0]
    if len(beyond):
        k = max(2, int(beyond[0]) + 1)
        ts, pts = ts[:k], pts[:k]
    return ts, pts


def _newton_two_arc(s0, p, u1, u2, target, seed, horizon, tol=1e-11):
    t1, t2 = seed

    def res(v):
        mid = flow_const(s0, p, u1, max(v[0], 0.0))
        return flow_const(mid, p, u2, max(v[1], 0.0)) - target

    v = np.array([t1, t2], dtype=float)
    for _ in range(40):
        r0 = res(v)
        if max(abs(r0[0]), abs(r0[1])) < tol:
            break
        jac = np.empty((2, 2))
        eps = 1e-7
        for k in range(2):
            dv = v.copy()
            dv[k] += eps
            jac[:, k] = (res(dv) - r0) / eps
        try:
            step = np.linalg.solve(jac, r0)
        except np.linalg.LinAlgError:
            return None
        v = v - np.clip(step, -0.5, 0.5)
        if not (np.all(np.isfinite(v))):
            return None
    r0 = res(v)
    if max(abs(r0[0]), abs(r0[1])) >= 1e-9 or v[0] < -1e-10 or v[1] < -1e-10 \
            or v[0] > horizon or v[1] > horizon:
        return None
    return float(max(v[0], 0.0)), float(max(v[1], 0.0))


_BANG = {ArcKind.X: -1.0, ArcKind.Y: 1.0}


class _Solver:
    """Per-chart candidate-word solver with cached forward structures."""

    def __init__(self, p: ModelParams, s0: np.ndarray, case: CaseClass,
                 horizon: float, curves: dict[str, "np.ndarray | None"]):
        self.p = p
        self.s0 = s0
        self.case = case
        self.horizon = horizon
        self.fwd = {
            kind: _forward_samples(s0, p, _BANG[kind], horizon)
            for kind in (ArcKind.X, ArcKind.Y)
        }
        self.switch_curves: dict[ArcKind, SwitchCurve] = {}
        self.vertical_attractor = None
        if p.gamma_plus > 0:
            self.vertical_attractor = p.gamma_minus / p.gamma_plus
        # entry points of the initial arcs into each singular line
        self.line_entries: dict[tuple[ArcKind, LineKind], tuple[float, np.ndarray]] = {}
        for kind in (ArcKind.X, ArcKind.Y):
            word = ControlWord.make([(kind.value, horizon)])
            tr = propagate_word(s0, p, word)
            got_v = got_h = False
            for ev in event_crossings(tr, p):
                if ev.time <= 1e-9 or ev.grazing:
                    continue
                if ev.kind == "x2" and not got_v:
                    self.line_entries[(kind, LineKind.VERTICAL)] = (ev.time, ev.state)
                    got_v = True
                if ev.kind == "deltaB" and not got_h and abs(ev.state[0]) > 1e-9:
                    self.line_entries[(kind, LineKind.HORIZONTAL)] = (ev.time, ev.state)
                    got_h = True

    # -- helpers -----------------------------------------------------------

    def _on_vertical(self, x) -> bool:
        return abs(float(x[0])) <= 1e-9

    def _z_time_vertical(self, x3_from: float, x3_to: float) -> float | None:
        lim = self.vertical_attractor
        if lim is None:
            return None
        a, b = x3_from - lim, x3_to - lim
        if a == 0.0 or b == 0.0 or (a > 0) != (b > 0):
            return None
        if abs(b) > abs(a):
            return 0.0 if abs(b) <= abs(a) * (1 + 1e-12) else None
        return math.log(a / b) / self.p.gamma_plus

    def _z_time_horizontal(self, x2_from: float, x2_to: float) -> float | None:
        # only the unital horizontal line (phi = 0) supports optimal sliding
        if self.p.gamma_minus != 0.0:
            return None
        a, b = x2_from, x2_to
        if a == 0.0 or b == 0.0 or (a > 0) != (b > 0):
            return None
        if abs(b) > abs(a):
            return 0.0 if abs(b) <= abs(a) * (1 + 1e-12) else None
        return math.log(a / b) / self.p.Gamma

    # -- pattern solvers ----------------------------------------------------

    def pure(self, kind: ArcKind, target: np.ndarray) -> list[WordSolution]:
        u = _BANG[kind]
        ts, pts = self.fwd[kind]
        d2 = np.einsum("ti,ti->t", pts - target, pts - target)
        k = int(np.argmin(d2))
        lo = ts[max(k - 1, 0)]
        hi = ts[min(k + 1, len(ts) - 1)]
        for _ in range(80):
            m1 = lo + (hi - lo) / 3
            m2 = hi - (hi - lo) / 3
            f1 = float(np.sum((flow_const(self.s0, self.p, u, m1) - target) ** 2))
            f2 = float(np.sum((flow_const(self.s0, self.p, u, m2) - target) ** 2))
            if f1 < f2:
                hi = m2
            else:
                lo = m1
            if hi - lo < 1e-13:
                break
        t = 0.5 * (lo + hi)
        end = flow_const(self.s0, self.p, u, t)
        if float(np.max(np.abs(end - target))) < 1e-8:
            return [WordSolution(ControlWord.make([(kind.value, t)]), t, end)]
        return []

    def two_bang(self, k1: ArcKind, k2: ArcKind, target: np.ndarray):
        u1, u2 = _BANG[k1], _BANG[k2]
        tsA, ptsA = self.fwd[k1]
        tsB, ptsB = _backward_samples(target, self.p, u2, self.horizon)
        sols = []
        for i, j, ta, tb in _segment_intersections(ptsA, ptsB):
            seed = (tsA[i] + ta * (tsA[i + 1] - tsA[i]),
                    tsB[j] + tb * (tsB[j + 1] - tsB[j]))
            ref = _newton_two_arc(self.s0, self.p, u1, u2, target, seed,
                                  self.horizon)
            if ref is None:
                continue
            t1, t2 = ref
            if t1 < 1e-12 or t2 < 1e-12:
                continue  # degenerates to a pure arc, handled separately
            word = ControlWord.make([(k1.value, t1), (k2.value, t2)])
            end = flow_const(flow_const(self.s0, self.p, u1, t1), self.p, u2, t2)
            sols.append(WordSolution(word, t1 + t2, end))
        return _dedupe(sols)

    def bang_sing_bang(self, k1: ArcKind, line: LineKind, k3: ArcKind | None,
                       target: np.ndarray):
        """k1 to the line, slide, optionally exit with k3 (or end on the line)."""
        entry = self.line_entries.get((k1, line))
        if entry is None:
            return []
        t1, e = entry
        sols = []
        if line is LineKind.VERTICAL:
            pos_from = float(e[1])
        else:
            pos_from = float(e[0])
        if k3 is None:
            # target must lie on the line, between entry and attractor
            if line is LineKind.VERTICAL:
                if abs(target[0]) > 1e-9:
                    return []
                tz = self._z_time_vertical(pos_from, float(target[1]))
            else:
                if abs(target[1]) > 1e-9:
                    return []
                tz = self._z_time_horizontal(pos_from, float(target[0]))
            if tz is None or tz < 0:
                return []
            word = ControlWord.make([(k1.value, t1), ("Z", tz)])
            return [WordSolution(word, t1 + tz, np.asarray(target, dtype=float))]
        u3 = _BANG[k3]
        tsB, ptsB = _backward_samples(target, self.p, u3, self.horizon)
        coord = 0 if line is LineKind.VERTICAL else 1
        level = 0.0 if line is LineKind.VERTICAL else float(e[1])
        vals = ptsB[:, coord] - level
        for j in range(len(vals) - 1):
            if vals[j] == 0.0 or vals[j] * vals[j + 1] < 0.0:
                lo, hi, flo = tsB[j], tsB[j + 1], vals[j]
                for _ in range(90):
                    mid = 0.5 * (lo + hi)
                    fm = float(flow_const(target, self.p, u3, -mid)[coord] - level)
                    if flo * fm <= 0.0:
                        hi = mid
                    else:
                        lo, flo = mid, fm
                    if hi - lo < 1e-14:
                        break
                t3 = 0.5 * (lo + hi)
                cpt = flow_const(target, self.p, u3, -t3)
                if line is LineKind.VERTICAL:
                    tz = self._z_time_vertical(pos_from, float(cpt[1]))
                else:
                    tz = self._z_time_horizontal(pos_from, float(cpt[0]))
                if tz is None or tz < 1e-12 or t3 < 1e-12:
                    continue
                word = ControlWord.make([(k1.value, t1), ("Z", tz),
                                         (k3.value, t3)])
                sols.append(WordSolution(word, t1 + tz + t3,
                                         np.asarray(target, dtype=float)))
        return _dedupe(sols)

    def sing_then_bang(self, k2: ArcKind | None, target: np.ndarray):
        """Start sliding from s0 (must lie on the vertical line)."""
        if not self._on_vertical(self.s0):
            return []
        if k2 is None:
            if abs(target[0]) > 1e-9:
                return []
            tz = self._z_time_vertical(float(self.s0[1]), float(target[1]))
            if tz is None or tz < 0:
                return []
            return [WordSolution(ControlWord.make([("Z", tz)]), tz,
                                 np.asarray(target, dtype=float))]
        u2 = _BANG[k2]
        tsB, ptsB = _backward_samples(target, self.p, u2, self.horizon)
        vals = ptsB[:, 0]
        sols = []
        for j in range(len(vals) - 1):
            if vals[j] == 0.0 or vals[j] * vals[j + 1] < 0.0:
                lo, hi, flo = tsB[j], tsB[j + 1], vals[j]
                for _ in range(90):
                    mid = 0.5 * (lo + hi)
                    fm = float(flow_const(target, self.p, u2, -mid)[0])
                    if flo * fm <= 0.0:
                        hi = mid
                    else:
                        lo, flo = mid, fm
                    if hi - lo < 1e-14:
                        break
                t2 = 0.5 * (lo + hi)
                cpt = flow_const(target, self.p, u2, -t2)
                tz = self._z_time_vertical(float(self.s0[1]), float(cpt[1]))
                if tz is None or tz < 1e-12 or t2 < 1e-12:
                    continue
                word = ControlWord.make([("Z", tz), (k2.value, t2)])
                sols.append(WordSolution(word, tz + t2,
                                         np.asarray(target, dtype=float)))
        return _dedupe(sols)

    def _line_arrival_table(self):
        """Minimum bang-word times onto the vertical turnpike segment (cached).

        Entries below the initial arcs' own crossing can be reached faster by
        a one-switch word than by sliding, because the slide speed collapses
        near the free fixed point; the table records, per line ordinate, the
        best bang word and its time.
        """
        if hasattr(self, "_line_tbl"):
            return self._line_tbl
        lim = self.vertical_attractor
        entry = self.line_entries.get((ArcKind.Y, LineKind.VERTICAL))
        c_top = float(entry[1][1]) if entry is not None else min(0.0, self.s0[1])
        if self._on_vertical(self.s0):
            c_top = float(self.s0[1])
        lo = lim + 0.02 * abs(lim) if lim is not None else -0.98
        cs = np.linspace(c_top - 1e-6, lo, 90)
        times = np.full(len(cs), math.inf)
        patterns: list[tuple[ArcKind, ...] | None] = [None] * len(cs)
        for i, c in enumerate(cs):
            tgt = np.array([0.0, float(c)])
            best_t, best_p = math.inf, None
            for kind in (ArcKind.X, ArcKind.Y):
                for s in self.pure(kind, tgt):
                    if s.time < best_t:
                        best_t, best_p = s.time, (kind,)
            for k1, k2 in ((ArcKind.Y, ArcKind.X), (ArcKind.X, ArcKind.Y)):
                for s in self.two_bang(k1, k2, tgt):
                    if s.time < best_t:
                        best_t, best_p = s.time, (k1, k2)
            # baseline: slide down from the topmost entry
            if entry is not None:
                tz = self._z_time_vertical(c_top, float(c))
                if tz is not None and entry[0] + tz < best_t:
                    best_t = entry[0] + tz
                    best_p = (ArcKind.Y, ArcKind.Z)
            if self._on_vertical(self.s0):
                tz = self._z_time_vertical(float(self.s0[1]), float(c))
                if tz is not None and tz < best_t:
                    best_t, best_p = tz, (ArcKind.Z,)
            times[i] = best_t
            patterns[i] = best_p
        self._line_tbl = (cs, times, patterns)
        return self._line_tbl

    def _entry_word_to(self, c: float, pattern) -> tuple[ControlWord, float] | None:
        """Exact word realizing a table pattern onto the line point (0, c)."""
        tgt = np.array([0.0, c])
        if pattern == (ArcKind.Z,):
            tz = self._z_time_vertical(float(self.s0[1]), c)
            if tz is None:
                return None
            return ControlWord.make([("Z", tz)]), tz
        if pattern == (ArcKind.Y, ArcKind.Z):
            entry = self.line_entries[(ArcKind.Y, LineKind.VERTICAL)]
            tz = self._z_time_vertical(float(entry[1][1]), c)
            if tz is None:
                return None
            return (ControlWord.make([("Y", entry[0]), ("Z", tz)]),
                    entry[0] + tz)
        if pattern is not None and len(pattern) == 1:
            sols = self.pure(pattern[0], tgt)
        elif pattern is not None:
            sols = self.two_bang(pattern[0], pattern[1], tgt)
        else:
            return None
        if not sols:
            return None
        s = min(sols, key=lambda s: s.time)
        return s.word, s.time

    def slide_families(self, k3: ArcKind | None, target: np.ndarray):
        """Best word reaching the target through a vertical-line slide.

        Covers entries by any bang word from the arrival table followed by a
        singular slide and an optional exit bang; subsumes entries lower than
        the initial arcs' own crossing.
        """
        lim = self.vertical_attractor
        if lim is None:
            return []
        cs, times, patterns = self._line_arrival_table()
        exits: list[tuple[float, float]] = []  # (t3, c_out)
        if k3 is None:
            if abs(float(target[0])) > 1e-9:
                return []
            exits.append((0.0, float(target[1])))
        else:
            u3 = _BANG[k3]
            tsB, ptsB = _backward_samples(target, self.p, u3, self.horizon)
            vals = ptsB[:, 0]
            for j in range(len(vals) - 1):
                if vals[j] == 0.0 or vals[j] * vals[j + 1] < 0.0:
                    lo, hi, flo = tsB[j], tsB[j + 1], vals[j]
                    for _ in range(90):
                        mid = 0.5 * (lo + hi)
                        fm = float(flow_const(target, self.p, u3, -mid)[0])
                        if flo * fm <= 0.0:
                            hi = mid
                        else:
                            lo, flo = mid, fm
                        if hi - lo < 1e-14:
                            break
                    t3 = 0.5 * (lo + hi)
                    c_out = float(flow_const(target, self.p, u3, -t3)[1])
                    exits.append((t3, c_out))
        sols = []
        for t3, c_out in exits:
            if k3 is not None and t3 < 1e-12:
                continue
            slide = np.array([
                self._z_time_vertical(float(c), c_out)
                if (self._z_time_vertical(float(c), c_out)) is not None else math.inf
                for c in cs
            ])
            total = times + slide + t3
            i = int(np.argmin(total))
            if not math.isfinite(total[i]):
                continue
            # parabolic refinement of the entry ordinate on the table grid
            c_best = cs[i]
            if 0 < i < len(cs) - 1 and math.isfinite(total[i - 1]) \
                    and math.isfinite(total[i + 1]):
                y0, y1, y2 = total[i - 1], total[i], total[i + 1]
                denom = y0 - 2 * y1 + y2
                if abs(denom) > 1e-14:
                    shift = 0.5 * (y0 - y2) / denom
                    shift = float(np.clip(shift, -1.0, 1.0))
                    c_best = cs[i] + shift * (cs[min(i + 1, len(cs) - 1)] - cs[i])
            made = self._entry_word_to(float(c_best), patterns[i])
            if made is None:
                continue
            entry_word, t_in = made
            tz = self._z_time_vertical(float(c_best), c_out)
            if tz is None:
                continue
            pairs = [(a.kind.value, a.duration) for a in entry_word.arcs]
            if pairs and pairs[-1][0] == "Z":
                pairs[-1] = ("Z", pairs[-1][1] + tz)
            elif tz > 1e-12:
                pairs.append(("Z", tz))
            if k3 is not None:
                pairs.append((k3.value, t3))
            word = ControlWord.make(pairs)
            sols.append(WordSolution(word, t_in + tz + t3,
                                     np.asarray(target, dtype=float)))
        return _dedupe(sols)

    def three_bang(self, k1: ArcKind, target: np.ndarray):
        """k1, opposite bang, k1 again with the middle switch on the curve."""
        curve = self.switch_curves.get(k1)
        if curve is None or len(curve.points) < 3:
            return []
        u3 = _BANG[k1]
        tsB, ptsB = _backward_samples(target, self.p, u3, self.horizon)
        sols = []
        for i, j, ta, tb in _segment_intersections(curve.points, ptsB):
            t1 = curve.t1[i] + ta * (curve.t1[i + 1] - curve.t1[i])
            hit = _second_switch_shot(self.s0, self.p, k1, float(t1),
                                      self.horizon)
            if hit is None:
                continue
            t2, cpt, _res = hit
            # final-arc duration from the (refined) curve point to the target
            t3 = tsB[j] + tb * (tsB[j + 1] - tsB[j])
            end = flow_const(cpt, self.p, u3, t3)
            for _ in range(30):
                err = end - target
                if float(np.max(np.abs(err))) < 1e-9:
                    break
                vel = (drift_field(end, self.p)
                       + u3 * np.array([-end[1], end[0]]))
                denom = float(vel @ vel)
                if denom < 1e-16:
                    break
                t3 -= float(err @ vel) / denom
                if t3 < -1e-9 or t3 > self.horizon:
                    break
                end = flow_const(cpt, self.p, u3, t3)
            if t3 < 1e-12 or float(np.max(np.abs(end - target))) > 1e-7:
                continue
            k2dur = t2 - t1
            word = ControlWord.make([(k1.value, t1),
                                     ("X" if k1 is ArcKind.Y else "Y", k2dur),
                                     (k1.value, t3)])
            sols.append(WordSolution(word, t1 + k2dur + t3,
                                     np.asarray(target, dtype=float)))
        return _dedupe(sols)

    # -- tournament ---------------------------------------------------------

    def candidates(self, target: np.ndarray) -> list[WordSolution]:
        sols: list[WordSolution] = []
        for kind in (ArcKind.X, ArcKind.Y):
            sols += self.pure(kind, target)
        sols += self.two_bang(ArcKind.Y, ArcKind.X, target)
        sols += self.two_bang(ArcKind.X, ArcKind.Y, target)
        if self.case in (CaseClass.UNITAL_MIXED,):
            for k1 in (ArcKind.X, ArcKind.Y):
                for k3 in (ArcKind.X, ArcKind.Y, None):
                    sols += self.bang_sing_bang(k1, LineKind.HORIZONTAL, k3, target)
        if self.case in (CaseClass.AFFINE_PURIFICATION, CaseClass.AFFINE_GENERAL):
            for k1 in (ArcKind.X, ArcKind.Y):
                for k3 in (ArcKind.X, ArcKind.Y, None):
                    sols += self.bang_sing_bang(k1, LineKind.VERTICAL, k3, target)
            for k3 in (ArcKind.X, ArcKind.Y, None):
                sols += self.slide_families(k3, target)
        for k2 in (ArcKind.X, ArcKind.Y, None):
            sols += self.sing_then_bang(k2, target)
        if self.case is CaseClass.AFFINE_GENERAL:
            sols += self.three_bang(ArcKind.Y, target)
            sols += self.three_bang(ArcKind.X, target)
        return sols


def _dedupe(sols: list[WordSolution], tol: float = 1e-7) -> list[WordSolution]:
    out: list[WordSolution] = []
    for s in sorted(sols, key=lambda s: s.time):
        if all(abs(s.time - o.time) > tol or s.label != o.label for o in out):
            out.append(s)
    return out


# ---------------------------------------------------------------------------
# synthesis chart
# ---------------------------------------------------------------------------


@dataclass
class Region:
    label: str
    polygon: np.ndarray
    verified: bool
    ambiguous: bool = False


@dataclass
class SynthesisChart:
    """Labeled optimal synthesis for one parameter set and initial state."""

    p: ModelParams
    s0: np.ndarray
    case: CaseClass
    reachable: ReachableSet
    curves: list[tuple[str, np.ndarray]]   # (kind in {CA,CB,S,C,K,boundary}, polyline)
    regions: list[Region]
    solver: _Solver
    horizon: float
    flags: set[str] = field(default_factory=set)

    @property
    def case_tag(self) -> str:
        return CASE_TAG[self.case]

    def to_json(self) -> str:
        return json.dumps(
            {
                "case": self.case_tag,
                "params": {"Gamma": self.p.Gamma, "gamma12": self.p.gamma12,
                            "gamma21": self.p.gamma21},
                "initial_state": [float(self.s0[0]), float(self.s0[1])],
                "regions": [
                    {
                        "label": r.label,
                        "verified": bool(r.verified),
                        "ambiguous": bool(r.ambiguous),
                        "polygon": [[float(a), float(b)] for a, b in r.polygon],
                    }
                    for r in self.regions
                ],
                "curves": [
                    {
                        "kind": kind,
                        "points": [[float(a), float(b)] for a, b in pts],
                    }
                    for kind, pts in self.curves
                ],
                "flags": sorted(self.flags),
            }
        )


def _distance_to_polyline(pt: np.ndarray, poly: np.ndarray) -> float:
    a = poly[:-1]
    b = poly[1:]
    ab = b - a
    ap = pt[None, :] - a
    denom = np.einsum("ti,ti->t", ab, ab)
    denom[denom == 0.0] = 1.0
    s = np.clip(np.einsum("ti,ti->t", ap, ab) / denom, 0.0, 1.0)
    proj = a + s[:, None] * ab
    d = np.linalg.norm(proj - pt[None, :], axis=1)
    return float(d.min())


def min_time_query(chart: SynthesisChart, target) -> tuple[ControlWord, float]:
    """Optimal word and time to a target strictly inside the reachable set.

    Candidates from the case's word families are solved by shooting and the
    fastest verified one wins; ties are broken lexicographically by label so
    results are deterministic.  Targets on asymptotic structures (the free
    fixed point and the boundary arcs emanating from it) are rejected, as is
    anything outside the reachable set.
    """
    tgt = np.asarray(target, dtype=float)
    if float(np.max(np.abs(tgt - chart.s0))) < 1e-9:
        return EMPTY_WORD, 0.0
    if chart.case in (CaseClass.AFFINE_PURIFICATION, CaseClass.AFFINE_GENERAL):
        fp = free_fixed_point(chart.p).as_array()
        if float(np.linalg.norm(tgt - fp)) < ASYMPTOTIC_EPS:
            raise AsymptoticTargetError(
                "target within the ball around the free fixed point; "
                "reached only as t -> infinity"
            )
        for arc in chart.reachable.arcs:
            if not arc.attained and _distance_to_polyline(tgt, arc.samples) < ASYMPTOTIC_EPS:
                raise AsymptoticTargetError(
                    "target on an asymptotic boundary arc; infinite time needed"
                )
    near_attained = any(
        arc.attained and _distance_to_polyline(tgt, arc.samples) < 1e-7
        for arc in chart.reachable.arcs
    )
    if not chart.reachable.contains(tgt) and not near_attained:
        raise UnreachableTargetError(f"target {tgt.tolist()} outside the reachable set")
    sols = chart.solver.candidates(tgt)
    if not sols:
        raise UnreachableTargetError(
            f"no candidate word reached {tgt.tolist()}; region ambiguous"
        )
    best = min(sols, key=lambda s: (s.time, s.label))
    # verification: re-simulate through the trajectory machinery
    tr = propagate_word(chart.s0, chart.p, best.word, max_dt=0.005)
    if float(np.max(np.abs(tr.final_state - tgt))) > 1e-5:
        raise UnreachableTargetError(
            f"winning word {best.label} failed re-simulation to {tgt.tolist()}"
        )
    return best.word, best.time


def grid_times(chart: SynthesisChart, n: int = 41):
    """Optimal times and word labels over an n x n grid (inf/'-' outside)."""
    axis = np.linspace(-1.0, 1.0, n)
    rows = []
    for x2 in axis:
        for x3 in axis:
            tgt = np.array([x2, x3])
            try:
                word, t = min_time_query(chart, tgt)
                rows.append((x2, x3, t, word.label()))
            except (UnreachableTargetError, AsymptoticTargetError):
                rows.append((x2, x3, math.inf, "-"))
    return rows


def _region_polygon(*parts: np.ndarray) -> np.ndarray:
    return np.vstack([np.atleast_2d(q) for q in parts])


def build_synthesis(s0, p: ModelParams, horizon: float = 40.0,
                    resolution: int = 201) -> SynthesisChart:
    """Assemble the labeled synthesis chart for a classified case (a)-(d).

    Region polygons are built from the organizing curves; every region label
    is verified by querying an interior sample through the tournament and is
    flagged ambiguous when the check disagrees.  ``resolution`` controls the
    default sampling density of exported grids and boundary curves.
    """
    x0 = s0.as_array() if isinstance(s0, BlochState) else np.asarray(s0, dtype=float)
    case = classify_case(p)
    if case is CaseClass.OTHER:
        raise DegenerateModelError(
            "synthesis charts are constructed for the four classified regimes only"
        )
    reach = reachable_set(x0, p, horizon)
    lc = loci(p, resolution)
    curves: list[tuple[str, np.ndarray]] = []
    for arc in lc.ca_arcs:
        curves.append(("CA", arc))
    for line in lc.cb_lines:
        curves.append(("CB", line.samples(resolution)))
    for arc in reach.arcs:
        curves.append(("boundary", arc.samples))

    solver = _Solver(p, x0, case, horizon, {})
    flags: set[str] = set()
    regions: list[Region] = []

    def vertical_segment(y_from: float, y_to: float, n: int = 64) -> np.ndarray:
        ys = np.linspace(y_from, y_to, n)
        return np.stack([np.zeros(n), ys], axis=-1)

    y_arc = next(a.samples for a in reach.arcs if a.tag.startswith("Y from s0"))
    x_arc_rev = next(a.samples for a in reach.arcs if a.tag.startswith("X from s0"))

    if case is CaseClass.UNITAL_APERIODIC:
        k_seg = vertical_segment(0.0, x0[1])
        curves.append(("K", k_seg))
        regions.append(Region("Y*X", _region_polygon(y_arc, k_seg), False))
        regions.append(Region("X*Y", _region_polygon(x_arc_rev[::-1], k_seg), False))
    elif case is CaseClass.UNITAL_MIXED:
        wv = solver.line_entries.get((ArcKind.Y, LineKind.HORIZONTAL))
        wx = solver.line_entries.get((ArcKind.Y, LineKind.VERTICAL))
        if wv is not None:
            c = abs(float(wv[1][0]))
            s_seg = np.stack([np.linspace(-c, c, 64), np.zeros(64)], axis=-1)
            curves.append(("S", s_seg))
        k_seg = vertical_segment(0.0, x0[1])
        curves.append(("K", k_seg))
        t_w = wv[0] if wv is not None else horizon
        t_v = wx[0] if wx is not None else horizon
        y_upper = flow_const_times(x0, p, 1.0, np.linspace(0, t_w, 128))
        y_lower = flow_const_times(x0, p, 1.0, np.linspace(t_w, t_v, 128))
        regions.append(Region("Y*X", _region_polygon(
            y_upper, np.stack([np.linspace(y_upper[-1][0], 0, 32), np.zeros(32)], -1),
            k_seg), False))
        regions.append(Region("X*Y", _region_polygon(
            y_upper * np.array([-1.0, 1.0]),
            np.stack([np.linspace(-y_upper[-1][0], 0, 32), np.zeros(32)], -1),
            k_seg), False))
        regions.append(Region("Y*Z*Y", _region_polygon(
            y_lower, vertical_segment(y_lower[-1][1], 0.0),
            np.stack([np.linspace(0, y_upper[-1][0], 32), np.zeros(32)], -1)),
            False))
        regions.append(Region("X*Z*X", _region_polygon(
            y_lower * np.array([-1.0, 1.0]), vertical_segment(y_lower[-1][1], 0.0),
            np.stack([np.linspace(0, -y_upper[-1][0], 32), np.zeros(32)], -1)),
            False))
    elif case is CaseClass.AFFINE_PURIFICATION:
        fp = free_fixed_point(p).as_array()
        s_seg = vertical_segment(x0[1], fp[1])
        curves.append(("S", s_seg))
        xa = next(a.samples for a in reach.arcs if a.tag == "X from s0")
        xf = next(a.samples for a in reach.arcs if a.tag == "X from fixed point")
        ya = next(a.samples for a in reach.arcs if a.tag == "Y from s0")
        yf = next(a.samples for a in reach.arcs if a.tag == "Y from fixed point")
        regions.append(Region("Z*X", _region_polygon(xa, xf[::-1], s_seg[::-1]),
                              False))
        regions.append(Region("Z*Y", _region_polygon(ya, yf, s_seg[::-1]), False))
    else:  # AFFINE_GENERAL
        for kind in (ArcKind.Y, ArcKind.X):
            try:
                sc = switch_curve(p, x0, kind, horizon=min(horizon, 30.0))
                solver.switch_curves[kind] = sc
                curves.append(("C", sc.points))
            except UnreachableTargetError:
                flags.add(f"switch_curve_{kind.value}_missing")
        wv = solver.line_entries.get((ArcKind.Y, LineKind.VERTICAL))
        fp = free_fixed_point(p).as_array()
        if wv is not None:
            s_seg = vertical_segment(wv[1][1], fp[1])
            curves.append(("S", s_seg))
        k_seg = vertical_segment(0.0, x0[1])
        curves.append(("K", k_seg))
        wh = solver.line_entries.get((ArcKind.Y, LineKind.HORIZONTAL))
        t_h = wh[0] if wh is not None else horizon
        t_v = wv[0] if wv is not None else horizon
        y_upper = flow_const_times(x0, p, 1.0, np.linspace(0, t_h, 128))
        y_mid = flow_const_times(x0, p, 1.0, np.linspace(t_h, t_v, 96))
        h_level = float(wh[1][1]) if wh is not None else 0.0
        regions.append(Region("Y*X", _region_polygon(
            y_upper,
            np.stack([np.linspace(y_upper[-1][0], 0, 32),
                      np.full(32, h_level)], -1), k_seg), False))
        regions.append(Region("X*Y", _region_polygon(
            y_upper * np.array([-1.0, 1.0]),
            np.stack([np.linspace(-y_upper[-1][0], 0, 32),
                      np.full(32, h_level)], -1), k_seg), False))
        regions.append(Region("X*Y*X", _region_polygon(
            y_mid, vertical_segment(y_mid[-1][1], h_level),
            np.stack([np.linspace(0, y_mid[0][0], 32),
                      np.full(32, h_level)], -1)), False))
        regions.append(Region("Y*X*Y", _region_polygon(
            y_mid * np.array([-1.0, 1.0]),
            vertical_segment(y_mid[-1][1], h_level),
            np.stack([np.linspace(0, -y_mid[0][0], 32),
                      np.full(32, h_level)], -1)), False))
        if wv is not None:
            regions.append(Region("Y*Z*X", _region_polygon(
                flow_const_times(wv[1], p, -1.0, np.linspace(0, 6.0, 96)),
                vertical_segment(fp[1] + ASYMPTOTIC_EPS, wv[1][1])), False))
            regions.append(Region("Y*Z*Y", _region_polygon(
                flow_const_times(wv[1], p, 1.0, np.linspace(0, 6.0, 96)),
                vertical_segment(fp[1] + ASYMPTOTIC_EPS, wv[1][1])), False))

    chart = SynthesisChart(p, x0, case, reach, curves, regions, solver,
                           horizon, flags)
    _verify_regions(chart)
    return chart


def _region_probe(region: Region) -> np.ndarray:
    poly = region.polygon
    centroid = poly.mean(axis=0)
    if _point_in_polygon(centroid, np.vstack([poly, poly[:1]])):
        return centroid
    # fall back to sampling segment midpoints shifted inward
    for frac in (0.35, 0.5, 0.65):
        cand = poly[int(frac * len(poly))] * 0.8 + 0.2 * centroid
        if _point_in_polygon(cand, np.vstack([poly, poly[:1]])):
            return cand
    return centroid


def _region_probes(region: Region) -> list[np.ndarray]:
    poly = region.polygon
    closed = np.vstack([poly, poly[:1]])
    centroid = poly.mean(axis=0)
    cands = [centroid]
    for frac in (0.3, 0.55, 0.8):
        cands.append(poly[int(frac * (len(poly) - 1))] * 0.7 + 0.3 * centroid)
    return [c for c in cands if _point_in_polygon(c, closed)] or [centroid]


def _verify_regions(chart: SynthesisChart) -> None:
    """Decide every region label by querying interior probes.

    A region whose probes agree carries that word pattern (verified); probes
    that disagree or fail leave the region explicitly ambiguous.  The label a
    region was constructed with is kept in the flags when the tournament
    overrules it.
    """
    for region in chart.regions:
        winners = set()
        failed = 0
        for probe in _region_probes(region):
            try:
                word, _t = min_time_query(chart, probe)
                winners.add(word.label())
            except (UnreachableTargetError, AsymptoticTargetError):
                failed += 1
        if len(winners) == 1 and not failed:
            winner = winners.pop()
            if winner != region.label:
                chart.flags.add(
                    f"region_{region.label}_relabeled_{winner}"
                )
                region.label = winner
            region.verified = True
        else:
            region.ambiguous = True
            chart.flags.add(
                f"region_{region.label}_ambiguous_{'|'.join(sorted(winners)) or 'none'}"
            )
