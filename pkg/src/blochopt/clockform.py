"""Clock one-form: travel-time line integrals and Stokes comparisons.

The clock form ``alpha`` satisfies ``alpha(F) = 1`` and ``alpha(G) = 0``
wherever the drift and control fields are independent, so its line integral
along any admissible run equals the elapsed time regardless of the control.
The exterior derivative density ``g`` vanishes exactly on the singular locus
and keeps a constant sign inside each of the four quadrants the singular
lines cut out, which turns time comparison of two candidate paths with shared
endpoints into a signed area integral.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EndpointMismatchError, SingularLocusError
from .model import (
    LineKind,
    ModelParams,
    SingularLine,
    control_field,
    delta_a,
    delta_b,
    drift_field,
    loci,
)
from .flows import Trajectory
from .words import Arc, ArcKind, ControlWord

#: alpha is declared undefined inside this |delta_a| guard band
ALPHA_GUARD = 1e-9

#: paths and regions handed to integrals must stay outside this band
PATH_GUARD = 1e-6

#: two-route agreement expected from stokes_compare
STOKES_AGREEMENT = 1e-5

_GAUSS_NODES = np.array(
    [0.069431844202973714, 0.330009478207571868, 0.669990521792428132, 0.930568155797026286]
)
_GAUSS_WEIGHTS = np.array(
    [0.173927422568726929, 0.326072577431273071, 0.326072577431273071, 0.173927422568726929]
)

# symmetric 7-point triangle rule, exact to degree 5 (barycentric, weight)
_TRI_RULE = []
_TRI_RULE.append(((1 / 3, 1 / 3, 1 / 3), 0.225))
for _a, _w in (
    (0.059715871789769820, 0.132394152788506181),
    (0.797426985353087322, 0.125939180544827153),
):
    _b = 0.5 * (1.0 - _a)
    for _perm in ((_a, _b, _b), (_b, _a, _b), (_b, _b, _a)):
        _TRI_RULE.append((_perm, _w))


def alpha_at(s, p: ModelParams, guard: float = ALPHA_GUARD) -> tuple[float, float]:
    """Components of the clock form at a state off the collinearity locus."""
    x = np.asarray(s, dtype=float) if not hasattr(s, "as_array") else s.as_array()
    da = float(delta_a(x, p))
    if abs(da) <= guard:
        raise SingularLocusError(
            f"clock form undefined within |delta_a| <= {guard} (got {da})"
        )
    denom = -da  # Gamma*x2^2 - gamma_minus*x3 + gamma_plus*x3^2
    return -float(x[0]) / denom, -float(x[1]) / denom


def g_density(s, p: ModelParams, guard: float = ALPHA_GUARD):
    """Density of d(alpha); equals delta_b / delta_a^2."""
    x = np.asarray(s, dtype=float) if not hasattr(s, "as_array") else s.as_array()
    x2, x3 = x[..., 0], x[..., 1]
    num = 2.0 * p.Gamma * x2 * x3 + p.gamma_minus * x2 - 2.0 * p.gamma_plus * x2 * x3
    den = p.Gamma * x2 * x2 - p.gamma_minus * x3 + p.gamma_plus * x3 * x3
    if np.any(np.abs(den) <= guard):
        raise SingularLocusError("g density evaluated inside the |delta_a| guard band")
    return num / (den * den)


def _hermite_batch(traj: Trajectory, s: np.ndarray):
    """Positions and d/ds tangents of every segment at fractions ``s``."""
    x0, x1 = traj.x[:-1, None, :], traj.x[1:, None, :]
    h = (traj.t[1:] - traj.t[:-1])[:, None, None]
    f0, f1 = traj.xdot[:-1, None, :] * h, traj.xdot[1:, None, :] * h
    ss = s[None, :, None]
    h00 = (1 + 2 * ss) * (1 - ss) ** 2
    h10 = ss * (1 - ss) ** 2
    h01 = ss * ss * (3 - 2 * ss)
    h11 = ss * ss * (ss - 1)
    pos = h00 * x0 + h10 * f0 + h01 * x1 + h11 * f1
    d00 = 6 * ss * ss - 6 * ss
    d10 = 3 * ss * ss - 4 * ss + 1
    d01 = -d00
    d11 = 3 * ss * ss - 2 * ss
    tan = d00 * x0 + d10 * f0 + d01 * x1 + d11 * f1
    return pos, tan


def time_via_alpha(traj: Trajectory, p: ModelParams,
                   guard: float = PATH_GUARD) -> float:
    """Line integral of the clock form along a sampled path.

    Gauss quadrature on the cubic Hermite interpolant of each segment; the
    result equals the elapsed time for any control program.  Raises if the
    path enters the guard band around the collinearity locus.
    """
    if len(traj) < 2:
        return 0.0
    pos, tan = _hermite_batch(traj, _GAUSS_NODES)
    da = delta_a(pos, p)
    if np.min(np.abs(da)) <= guard:
        raise SingularLocusError(
            "path crosses the collinearity guard band; clock form unusable"
        )
    x2, x3 = pos[..., 0], pos[..., 1]
    denom = -da
    integrand = (-x2 * tan[..., 0] - x3 * tan[..., 1]) / denom
    return float(np.sum(integrand @ _GAUSS_WEIGHTS))


def _resample_by_arclength(traj: Trajectory, m: int) -> np.ndarray:
    """m points along the path at equal fractions of chord arc length."""
    seg = np.linalg.norm(np.diff(traj.x, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total == 0.0:
        return np.repeat(traj.x[:1], m, axis=0)
    fracs = np.linspace(0.0, total, m)
    ts = np.interp(fracs, cum, traj.t)
    return np.array([traj.state_at(t) for t in ts])


@dataclass(frozen=True)
class ComparisonReport:
    """Outcome of a two-path time comparison."""

    t1: float
    t2: float
    difference_line_integral: float
    difference_surface_integral: float
    winner: str
    agreement: bool
    multi_quadrant: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "T1": self.t1,
                "T2": self.t2,
                "difference_line_integral": self.difference_line_integral,
                "difference_surface_integral": self.difference_surface_integral,
                "winner": self.winner,
            }
        )


def stokes_compare(
    path1: Trajectory,
    path2: Trajectory,
    p: ModelParams,
    guard: float = PATH_GUARD,
    endpoint_tol: float = 1e-6,
    tie_tol: float = 1e-8,
    resample: int = 400,
) -> ComparisonReport:
    """Signed time difference T1 - T2 computed along two independent routes.

    The line route subtracts the clock-form integrals; the surface route
    integrates the density ``g`` over the oriented region swept between the
    two paths (matched arc-length strips, degree-5 triangle quadrature).  A
    region spanning several singular-locus quadrants is allowed but flagged.
    """
    for a, b in ((path1.x[0], path2.x[0]), (path1.x[-1], path2.x[-1])):
        if float(np.max(np.abs(a - b))) > endpoint_tol:
            raise EndpointMismatchError(f"paths do not share endpoints: {a} vs {b}")
    t1 = path1.duration
    t2 = path2.duration
    diff_line = time_via_alpha(path1, p, guard) - time_via_alpha(path2, p, guard)

    a_pts = _resample_by_arclength(path1, resample)
    b_pts = _resample_by_arclength(path2, resample)
    diff_surf = 0.0
    g_signs: set[int] = set()
    for k in range(resample - 1):
        quads = (
            (a_pts[k], a_pts[k + 1], b_pts[k + 1]),
            (a_pts[k], b_pts[k + 1], b_pts[k]),
        )
        for tri in quads:
            v0, v1, v2 = tri
            area2 = (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0])
            if area2 == 0.0:
                continue
            acc = 0.0
            for bary, w in _TRI_RULE:
                pt = bary[0] * v0 + bary[1] * v1 + bary[2] * v2
                da = float(delta_a(pt, p))
                if abs(da) <= guard:
                    raise SingularLocusError(
                        "comparison region touches the collinearity guard band"
                    )
                db = float(delta_b(pt, p))
                acc += w * db / (da * da)
                if abs(db) > 1e-12:
                    g_signs.add(1 if db > 0 else -1)
            diff_surf += 0.5 * area2 * acc
    # orientation: boundary path1 forward, path2 backward encloses the region
    # with the sign produced by the signed triangle areas above; Stokes then
    # gives diff_surf = T1 - T2 directly.
    if diff_line < -tie_tol:
        winner = "path1"
    elif diff_line > tie_tol:
        winner = "path2"
    else:
        winner = "tie"
    return ComparisonReport(
        t1,
        t2,
        diff_line,
        diff_surf,
        winner,
        abs(diff_line - diff_surf) <= STOKES_AGREEMENT,
        len(g_signs) > 1,
    )


_MIRROR_KIND = {ArcKind.X: ArcKind.Y, ArcKind.Y: ArcKind.X,
                ArcKind.Z: ArcKind.Z, ArcKind.F0: ArcKind.F0}


def mirror_x2(traj: Trajectory) -> Trajectory:
    """Reflect a trajectory across x2 = 0.

    The dynamics is equivariant under (x2, u) -> (-x2, -u), so the image of a
    run is again a run with X and Y arcs exchanged.  Useful for bringing two
    comparison candidates into a single quadrant.
    """
    x = traj.x.copy()
    x[:, 0] = -x[:, 0]
    xd = traj.xdot.copy()
    xd[:, 0] = -xd[:, 0]
    word = traj.word
    if word is not None:
        word = ControlWord(tuple(Arc(_MIRROR_KIND[a.kind], a.duration) for a in word.arcs))
    frames = None
    if traj.frames is not None:
        s = np.diag([-1.0, 1.0])
        frames = np.einsum("ij,tjk,kl->til", s, traj.frames, s)
    return Trajectory(traj.t.copy(), x, -traj.u, xd, word, traj.arc_bounds,
                      traj.events, frames)


# ---------------------------------------------------------------------------
# turnpike classification of the singular lines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TurnpikeArc:
    """One sub-arc of a singular line with its optimality label."""

    line: LineKind
    position: float  # coordinate of the line itself
    lo: float        # running coordinate range along the line
    hi: float
    label: str       # "turnpike" | "anti_turnpike" | "unlabeled"

    def contains(self, s, tol: float = 1e-9) -> bool:
        x = np.asarray(s, dtype=float) if not hasattr(s, "as_array") else s.as_array()
        if self.line is LineKind.VERTICAL:
            on = abs(x[0] - self.position) <= tol
            run = x[1]
        else:
            on = abs(x[1] - self.position) <= tol
            run = x[0]
        return bool(on and self.lo - tol <= run <= self.hi + tol)


def _line_breakpoints(line: SingularLine, p: ModelParams) -> list[float]:
    pts = {line.lo, line.hi}
    if line.kind is LineKind.VERTICAL:
        # delta_a on x2=0: x3*(gamma_minus - gamma_plus*x3)
        pts.add(0.0)
        if p.gamma_plus > 0:
            r = p.gamma_minus / p.gamma_plus
            if line.lo < r < line.hi:
                pts.add(r)
        if not p.is_degenerate:
            from .model import horizontal_cb_position

            h = horizontal_cb_position(p)
            if line.lo < h < line.hi:
                pts.add(h)
    else:
        h = line.position
        pts.add(0.0)
        arg = (p.gamma_minus * h - p.gamma_plus * h * h) / p.Gamma if p.Gamma > 0 else -1.0
        if arg > 0:
            w = math.sqrt(arg)
            for v in (-w, w):
                if line.lo < v < line.hi:
                    pts.add(v)
    return sorted(v for v in pts if line.lo <= v <= line.hi)


def classify_turnpike(p: ModelParams, offset: float = 1e-4) -> list[TurnpikeArc]:
    """Label every singular sub-arc as turnpike, anti-turnpike or neither.

    The bang fields X = F - G and Y = F + G must point to opposite sides of
    the line; the label then follows the sign of ``f = -delta_b/delta_a`` on
    the side each field points into (positive on the Y side and negative on
    the X side for a turnpike).
    """
    arcs: list[TurnpikeArc] = []
    for line in loci(p).cb_lines:
        breaks = _line_breakpoints(line, p)
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            if hi - lo < 4 * offset:
                arcs.append(TurnpikeArc(line.kind, line.position, lo, hi, "unlabeled"))
                continue
            mid = 0.5 * (lo + hi)
            if line.kind is LineKind.VERTICAL:
                point = np.array([line.position, mid])
                normal = np.array([1.0, 0.0])
            else:
                point = np.array([mid, line.position])
                normal = np.array([0.0, 1.0])
            f = drift_field(point, p)
            g = control_field(point)
            sx = float((f - g) @ normal)
            sy = float((f + g) @ normal)
            label = "unlabeled"
            if sx * sy < 0.0:
                px = point + math.copysign(offset, sx) * normal
                py = point + math.copysign(offset, sy) * normal
                dax, day = float(delta_a(px, p)), float(delta_a(py, p))
                if abs(dax) > ALPHA_GUARD and abs(day) > ALPHA_GUARD:
                    fx = -float(delta_b(px, p)) / dax
                    fy = -float(delta_b(py, p)) / day
                    if fy > 0.0 and fx < 0.0:
                        label = "turnpike"
                    elif fy < 0.0 and fx > 0.0:
                        label = "anti_turnpike"
            arcs.append(TurnpikeArc(line.kind, line.position, lo, hi, label))
    return arcs


def is_turnpike_at(p: ModelParams, s, tol: float = 1e-7) -> bool:
    """True when the state sits on a sub-arc labeled turnpike."""
    for arc in classify_turnpike(p):
        if arc.label == "turnpike" and arc.contains(s, tol):
            return True
    return False
