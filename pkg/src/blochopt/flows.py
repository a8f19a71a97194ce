"""Exact arc propagation and an independent adaptive integrator.

For a constant control ``u`` the planar dynamics is affine,
``xdot = A(u) x + b`` with ``A(u) = [[-Gamma, -u], [u, -gamma_plus]]`` and
``b = (0, gamma_minus)``.  Writing ``A = -sigma*I + B`` with
``sigma = (Gamma + gamma_plus)/2`` gives ``B^2 = (Delta_u/4) I`` where
``Delta_u = (Gamma - gamma_plus)^2 - 4 u^2``, so the matrix exponential has a
closed form in the three regimes of ``Delta_u`` (hyperbolic, trigonometric,
confluent).  The flow is evaluated as the deviation from the stationary point
of ``F + u G`` propagated homogeneously.

The adaptive Dormand-Prince 5(4) integrator below is an independent oracle:
it never touches the closed forms, and it is what singular (state-feedback)
arcs are integrated with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import (
    InadmissibleSingularError,
    IntegrationError,
    StateDomainError,
)
from .model import (
    BlochState,
    LineKind,
    ModelParams,
    control_field,
    delta_a,
    delta_b,
    drift_field,
    horizontal_cb_position,
)
from .words import ARC_CONTROL, Arc, ArcKind, ControlWord

#: |Delta_u| below this evaluates the confluent (series) branch of the flow
CRITICAL_BAND = 1e-9

#: |Delta| below this is labeled critical when classifying parameters
CLASS_TOL = 1e-12

#: default spacing of dense trajectory samples
DEFAULT_MAX_DT = 0.01

#: tolerance for "state lies on a singular line" checks
ON_LINE_TOL = 1e-9


class DiscriminantKind(str, Enum):
    APERIODIC = "aperiodic"
    CRITICAL = "critical"
    PSEUDO_PERIODIC = "pseudo_periodic"


@dataclass(frozen=True)
class DiscriminantClass:
    delta: float
    kind: DiscriminantKind


def discriminant(p: ModelParams) -> DiscriminantClass:
    """Discriminant ``(Gamma - gamma_plus)^2 - 4`` of the bang dynamics."""
    d = (p.Gamma - p.gamma_plus) ** 2 - 4.0
    if d > CLASS_TOL:
        kind = DiscriminantKind.APERIODIC
    elif d < -CLASS_TOL:
        kind = DiscriminantKind.PSEUDO_PERIODIC
    else:
        kind = DiscriminantKind.CRITICAL
    return DiscriminantClass(d, kind)


def _cs(delta_u: float, ts):
    """Entire functions c = cosh(w t), s = sinh(w t)/w with w^2 = delta_u/4.

    Valid for every sign of ``delta_u``; the confluent band uses a series that
    is exact to machine precision for |delta_u| below ``CRITICAL_BAND``.
    """
    ts = np.asarray(ts, dtype=float)
    if delta_u > CRITICAL_BAND:
        w = 0.5 * math.sqrt(delta_u)
        return np.cosh(w * ts), np.sinh(w * ts) / w
    if delta_u < -CRITICAL_BAND:
        w = 0.5 * math.sqrt(-delta_u)
        return np.cos(w * ts), np.sin(w * ts) / w
    d4 = 0.25 * delta_u
    t2 = ts * ts
    c = 1.0 + d4 * t2 * (0.5 + d4 * t2 / 24.0)
    s = ts * (1.0 + d4 * t2 * (1.0 / 6.0 + d4 * t2 / 120.0))
    return c, s


def stationary_point(p: ModelParams, u: float) -> np.ndarray:
    """Stationary point of ``F + u G`` as an array; (0, 0) for unital rates."""
    if p.gamma_minus == 0.0:
        return np.zeros(2)
    det = p.Gamma * p.gamma_plus + u * u
    return np.array([-u * p.gamma_minus / det, p.Gamma * p.gamma_minus / det])


def _propagators(p: ModelParams, u: float, ts, inverse: bool = False) -> np.ndarray:
    """exp(A(u) t) (or its inverse) for an array of times; shape (m, 2, 2)."""
    sigma = 0.5 * (p.Gamma + p.gamma_plus)
    a = 0.5 * (p.Gamma - p.gamma_plus)
    delta_u = (p.Gamma - p.gamma_plus) ** 2 - 4.0 * u * u
    ts = np.asarray(ts, dtype=float)
    if inverse:
        ts = -ts
    c, s = _cs(delta_u, ts)
    env = np.exp(-sigma * ts)
    out = np.empty(ts.shape + (2, 2))
    out[..., 0, 0] = env * (c - s * a)
    out[..., 0, 1] = env * (-s * u)
    out[..., 1, 0] = env * (s * u)
    out[..., 1, 1] = env * (c + s * a)
    return out


def const_propagator(p: ModelParams, u: float, t: float) -> np.ndarray:
    """Matrix exponential ``exp(A(u) t)`` of the homogeneous part."""
    return _propagators(p, u, float(t))


def const_propagator_inv(p: ModelParams, u: float, t: float) -> np.ndarray:
    """Inverse ``exp(-A(u) t)``; exact since ``c^2 - (delta_u/4) s^2 = 1``."""
    return _propagators(p, u, float(t), inverse=True)


def flow_const(s0, p: ModelParams, u: float, t: float) -> np.ndarray:
    """Propagate state(s) for time t under constant control u.

    Accepts a single state ``(2,)`` or a batch ``(n, 2)``.
    """
    x0 = np.asarray(s0, dtype=float)
    q = stationary_point(p, u)
    m = const_propagator(p, u, t)
    return q + (x0 - q) @ m.T


def flow_const_times(s0, p: ModelParams, u: float, ts) -> np.ndarray:
    """Propagate one state over an array of times; returns ``(len(ts), 2)``."""
    x0 = np.asarray(s0, dtype=float)
    q = stationary_point(p, u)
    z = x0 - q
    ms = _propagators(p, u, ts)
    return q + np.einsum("tij,j->ti", ms, z)


def bang_flow(s0, p: ModelParams, eps: float, t: float) -> BlochState:
    """Closed-form bang arc (u = eps = +/-1) of duration ``t >= 0``."""
    if t < 0:
        raise ValueError(f"bang arc duration must be >= 0, got {t}")
    if float(eps) not in (-1.0, 1.0):
        raise ValueError(f"bang control must be +/-1, got {eps}")
    x0 = s0.as_array() if isinstance(s0, BlochState) else np.asarray(s0, dtype=float)
    x = flow_const(x0, p, float(eps), t)
    return BlochState(float(x[0]), float(x[1]))


def free_flow(s0, p: ModelParams, t: float):
    """Uncontrolled decay; componentwise exponentials, independent of _cs.

    ``x2(t) = x2(0) exp(-Gamma t)``; ``x3`` relaxes toward
    ``gamma_minus/gamma_plus`` at rate ``gamma_plus`` (constant when
    ``gamma_plus = 0``, which forces ``gamma_minus = 0``).
    """
    if t < 0:
        raise ValueError(f"free arc duration must be >= 0, got {t}")
    blochin = isinstance(s0, BlochState)
    x0 = s0.as_array() if blochin else np.asarray(s0, dtype=float)
    x2 = x0[..., 0] * math.exp(-p.Gamma * t)
    if p.gamma_plus > 0:
        limit = p.gamma_minus / p.gamma_plus
        x3 = limit + (x0[..., 1] - limit) * math.exp(-p.gamma_plus * t)
    else:
        x3 = x0[..., 1] + 0.0 * x2
    out = np.stack([x2, x3], axis=-1)
    return BlochState(float(out[0]), float(out[1])) if blochin else out


# ---------------------------------------------------------------------------
# singular feedback
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularControl:
    """Feedback value on a singular line plus its admissibility verdict."""

    phi: float
    admissible: bool
    line: LineKind

    def require(self) -> float:
        if not self.admissible:
            raise InadmissibleSingularError(
                f"singular feedback |phi| = {abs(self.phi)} exceeds 1"
            )
        return self.phi


def singular_control(s, p: ModelParams, tol: float = ON_LINE_TOL) -> SingularControl:
    """Feedback keeping the state on its singular line.

    On the vertical line the feedback vanishes.  On the horizontal line it is
    ``gamma_minus (gamma_plus - 2 Gamma) / (2 (Gamma - gamma_plus) x2)``,
    admissible only where it stays within the unit control bound.
    """
    x = s.as_array() if isinstance(s, BlochState) else np.asarray(s, dtype=float)
    x2, x3 = float(x[0]), float(x[1])
    if abs(x2) <= tol:
        return SingularControl(0.0, True, LineKind.VERTICAL)
    if not p.is_degenerate:
        h = horizontal_cb_position(p)
        if abs(x3 - h) <= tol:
            if p.gamma_minus == 0.0:
                return SingularControl(0.0, True, LineKind.HORIZONTAL)
            phi = (
                p.gamma_minus
                * (p.gamma_plus - 2.0 * p.Gamma)
                / (2.0 * (p.Gamma - p.gamma_plus) * x2)
            )
            return SingularControl(phi, abs(phi) <= 1.0, LineKind.HORIZONTAL)
    raise StateDomainError(f"state ({x2}, {x3}) is not on a singular line")


def singular_admissibility_threshold(p: ModelParams) -> float:
    """Minimal |x2| with admissible feedback on the horizontal singular line."""
    if p.is_degenerate:
        raise StateDomainError("no horizontal singular line for Gamma = gamma_plus")
    return abs(
        p.gamma_minus * (p.gamma_plus - 2.0 * p.Gamma) / (2.0 * (p.Gamma - p.gamma_plus))
    )


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    """Refined crossing found along a trajectory."""

    time: float
    state: np.ndarray
    kind: str
    grazing: bool = False


@dataclass(frozen=True)
class Trajectory:
    """Dense samples of one run: times, states, controls and derivatives.

    ``xdot`` holds the exact right-hand side at each sample, which makes the
    cubic Hermite interpolation in :meth:`state_at` self-contained.  ``u`` is
    the control active on the segment starting at that sample (the last entry
    repeats).  ``arc_bounds`` are the cumulative arc boundary times and
    ``frames`` optionally stores the inverse fundamental matrices used by the
    backward variational angle.
    """

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    xdot: np.ndarray
    word: ControlWord | None
    arc_bounds: tuple[float, ...] = ()
    events: tuple[Event, ...] = ()
    frames: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.t)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def final_state(self) -> np.ndarray:
        return self.x[-1]

    def state_at(self, time: float) -> np.ndarray:
        """Cubic Hermite interpolation between the two bracketing samples."""
        if time <= self.t[0]:
            return self.x[0].copy()
        if time >= self.t[-1]:
            return self.x[-1].copy()
        i = int(np.searchsorted(self.t, time, side="right") - 1)
        i = min(max(i, 0), len(self.t) - 2)
        h = self.t[i + 1] - self.t[i]
        if h == 0.0:
            return self.x[i].copy()
        return _hermite(
            self.t[i], self.x[i], self.xdot[i],
            self.t[i + 1], self.x[i + 1], self.xdot[i + 1], time,
        )

    def write_csv(self, stream, p: ModelParams) -> None:
        """Rows ``t,x2,x3,u,deltaA,deltaB`` at 17 significant digits."""
        stream.write("t,x2,x3,u,deltaA,deltaB\n")
        da = np.atleast_1d(delta_a(self.x, p))
        db = np.atleast_1d(delta_b(self.x, p))
        for k in range(len(self.t)):
            row = (self.t[k], self.x[k, 0], self.x[k, 1], self.u[k], da[k], db[k])
            stream.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _concat(parts: list[Trajectory], word: ControlWord,
            events: tuple[Event, ...]) -> Trajectory:
    ts, xs, us, xds, frames = [], [], [], [], []
    bounds = [0.0]
    offset = 0.0
    with_frames = all(prt.frames is not None for prt in parts)
    frame0 = np.eye(2)
    for k, prt in enumerate(parts):
        sl = slice(0 if k == 0 else 1, None)  # drop duplicated joint sample
        ts.append(prt.t[sl] + offset)
        xs.append(prt.x[sl])
        us.append(prt.u[sl])
        xds.append(prt.xdot[sl])
        if with_frames:
            frames.append(np.einsum("ij,tjk->tik", frame0, prt.frames[sl]))
            frame0 = frame0 @ prt.frames[-1]
        offset += float(prt.t[-1])
        bounds.append(offset)
    return Trajectory(
        np.concatenate(ts),
        np.concatenate(xs),
        np.concatenate(us),
        np.concatenate(xds),
        word,
        tuple(bounds),
        events,
        np.concatenate(frames) if with_frames else None,
    )


def _const_arc(x0: np.ndarray, p: ModelParams, u: float, tau: float,
               max_dt: float, with_frames: bool) -> Trajectory:
    n = max(2, int(math.ceil(tau / max_dt)) + 1)
    ts = np.linspace(0.0, tau, n)
    xs = flow_const_times(x0, p, u, ts)
    us = np.full(n, u)
    xds = drift_field(xs, p) + u * control_field(xs)
    frames = _propagators(p, u, ts, inverse=True) if with_frames else None
    return Trajectory(ts, xs, us, xds, None, (0.0, tau), (), frames)


def _singular_arc(x0: np.ndarray, p: ModelParams, tau: float, max_dt: float,
                  with_frames: bool, tol: float = 1e-12) -> Trajectory:
    """Integrate the feedback arc; terminates early on admissibility loss."""
    ctl = singular_control(x0, p)
    ctl.require()
    line = ctl.line

    def phi_of(x2: float) -> float:
        if line is LineKind.VERTICAL or p.gamma_minus == 0.0:
            return 0.0
        return (
            p.gamma_minus
            * (p.gamma_plus - 2.0 * p.Gamma)
            / (2.0 * (p.Gamma - p.gamma_plus) * x2)
        )

    def rhs(t, y):
        u = phi_of(y[0])
        return np.array(
            [
                -p.Gamma * y[0] - u * y[1],
                p.gamma_minus - p.gamma_plus * y[1] + u * y[0],
            ]
        )

    events: list[tuple[str, Callable[[float, np.ndarray], float]]] = []
    if line is LineKind.HORIZONTAL and p.gamma_minus != 0.0:
        thresh = singular_admissibility_threshold(p)
        events.append(("singular_admissibility", lambda t, y: abs(y[0]) - thresh))
    events.append(("disk", lambda t, y: 1.0 + 1e-12 - y[0] ** 2 - y[1] ** 2))

    sol = integrate(rhs, x0, tau, rtol=tol, atol=tol, max_step=max_dt, events=events)
    us = np.array([phi_of(x[0]) for x in sol.y])
    traj_events: tuple[Event, ...] = ()
    if sol.event is not None:
        name, t_ev, y_ev = sol.event
        traj_events = (Event(t_ev, y_ev[:2], name),)
    frames = _frames_along(sol.t, us, p) if with_frames else None
    return Trajectory(sol.t, sol.y, us, sol.f, None, (0.0, float(sol.t[-1])),
                      traj_events, frames)


def _frames_along(ts: np.ndarray, us: np.ndarray, p: ModelParams) -> np.ndarray:
    """Inverse fundamental matrices along a sampled arc, stepwise product.

    Uses the closed-form constant-control propagator on each sample interval
    with the midpoint feedback value; adequate because the feedback varies
    slowly on the dense grid.
    """
    n = len(ts)
    frames = np.empty((n, 2, 2))
    frames[0] = np.eye(2)
    for k in range(1, n):
        dt = float(ts[k] - ts[k - 1])
        u_mid = 0.5 * (us[k - 1] + us[k])
        frames[k] = frames[k - 1] @ const_propagator_inv(p, u_mid, dt)
    return frames


def propagate_word(s0, p: ModelParams, word: ControlWord,
                   max_dt: float = DEFAULT_MAX_DT,
                   with_frames: bool = False) -> Trajectory:
    """Propagate a control word arc by arc (closed forms for constant arcs).

    A singular arc that loses admissibility or reaches the disk boundary ends
    the trajectory early; the realized word reflects the truncation.
    """
    x = s0.as_array() if isinstance(s0, BlochState) else np.asarray(s0, dtype=float)
    if not word.arcs:
        xd = drift_field(x, p)
        return Trajectory(
            np.zeros(1), x[None, :], np.zeros(1), xd[None, :], word, (0.0,), (),
            np.eye(2)[None] if with_frames else None,
        )
    parts: list[Trajectory] = []
    realized: list[Arc] = []
    events: tuple[Event, ...] = ()
    for arc in word.arcs:
        if arc.kind is ArcKind.Z:
            part = _singular_arc(x, p, arc.duration, max_dt, with_frames)
        else:
            part = _const_arc(x, p, ARC_CONTROL[arc.kind], arc.duration, max_dt,
                              with_frames)
        parts.append(part)
        if part.t[-1] > 0.0:
            realized.append(Arc(arc.kind, float(part.t[-1])))
        x = part.final_state
        if part.events:
            offset = sum(a.duration for a in realized) - float(part.t[-1])
            events = tuple(
                Event(e.time + offset, e.state, e.kind, e.grazing) for e in part.events
            )
            break
    return _concat(parts, ControlWord(tuple(realized)), events)


def singular_flow(s0, p: ModelParams, t: float,
                  max_dt: float = DEFAULT_MAX_DT) -> Trajectory:
    """Singular arc from a state on a C_B line (early-terminating)."""
    return propagate_word(s0, p, ControlWord.make([(ArcKind.Z, t)]), max_dt)


# ---------------------------------------------------------------------------
# adaptive Dormand-Prince 5(4) integrator
# ---------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DP_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
)
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


@dataclass
class SolveResult:
    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    event: tuple[str, float, np.ndarray] | None = None


def _hermite(t0, y0, f0, t1, y1, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float | None = None,
    events: Sequence[tuple[str, Callable[[float, np.ndarray], float]]] = (),
    record: bool = True,
) -> SolveResult:
    """Adaptive embedded 5(4) integration from t=0 to ``t_end``.

    Error per step is controlled against ``atol + rtol*|y|`` with a PI
    step-size controller.  Terminal ``events`` are located by bisection on the
    cubic Hermite interpolant of the accepted step.  Batched states (n, k) are
    supported when no events are given.
    """
    if t_end < 0:
        raise IntegrationError("integration horizon must be >= 0")
    y = np.asarray(y0, dtype=float).copy()
    t = 0.0
    f = rhs(t, y)
    ts, ys, fs = [0.0], [y.copy()], [f.copy()]
    if t_end == 0.0:
        return SolveResult(np.array(ts), np.array(ys), np.array(fs))
    h_cap = t_end if max_step is None else min(max_step, t_end)
    h = min(h_cap, max(1e-6, 0.01 * t_end))
    err_prev = 1.0
    k = np.empty((7,) + y.shape)
    while t < t_end:
        h = min(h, h_cap)
        final = h >= t_end - t
        if final:
            h = t_end - t
        elif h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t = {t}")
        k[0] = f
        for i, arow in enumerate(_DP_A):
            yi = y + h * np.tensordot(arow, k[: i + 1], axes=(0, 0))
            k[i + 1] = rhs(t + _DP_C[i + 1] * h, yi)
        y_new = y + h * np.tensordot(_DP_B, k[:6], axes=(0, 0))
        f_new = rhs(t + h, y_new)
        k[6] = f_new
        err_vec = h * np.tensordot(_DP_E, k, axes=(0, 0))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = err_vec / scale
        err = float(np.max(np.sqrt(np.mean(ratio * ratio, axis=-1))))
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        t_new = t + h
        hit = None
        for name, g in events:
            g0, g1 = g(t, y), g(t_new, y_new)
            crossed = g0 * g1 < 0.0 or (g1 == 0.0 and g0 != 0.0)
            immediate = g0 == 0.0 and g1 < 0.0 and t > 0.0
            if immediate:
                hit = (name, t, y.copy())
                break
            if crossed:
                lo, hi, glo = t, t_new, g0
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    ym = _hermite(t, y, f, t_new, y_new, f_new, mid)
                    gm = g(mid, ym)
                    if glo * gm <= 0.0:
                        hi = mid
                    else:
                        lo, glo = mid, gm
                    if hi - lo < 1e-13 * max(1.0, abs(hi)):
                        break
                t_ev = 0.5 * (lo + hi)
                y_ev = _hermite(t, y, f, t_new, y_new, f_new, t_ev)
                hit = (name, t_ev, y_ev)
                break
        if hit is not None:
            name, t_ev, y_ev = hit
            if record and t_ev > ts[-1]:
                ts.append(t_ev)
                ys.append(y_ev)
                fs.append(rhs(t_ev, y_ev))
            return SolveResult(np.array(ts), np.array(ys), np.array(fs),
                               (name, t_ev, y_ev))
        t, y, f = t_new, y_new, f_new
        if record:
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
        fac = 0.9 * err ** -0.14 * err_prev ** 0.08 if err > 0 else 5.0
        h *= min(5.0, max(0.2, fac))
        err_prev = max(err, 1e-10)
    if not record:
        return SolveResult(np.array([t]), np.array([y]), np.array([f]))
    return SolveResult(np.array(ts), np.array(ys), np.array(fs))


def rk_oracle(
    s0,
    p: ModelParams,
    u_fn: Callable[[float], float],
    t: float,
    tol: float = 1e-10,
    max_dt: float = DEFAULT_MAX_DT,
) -> Trajectory:
    """Reference integration of the planar dynamics with a control signal.

    Independent of every closed form in this module; used to validate them.
    """
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError(f"oracle tolerance {tol} outside [1e-12, 1e-6]")

    def rhs(tt, y):
        u = u_fn(tt)
        return np.array(
            [
                -p.Gamma * y[0] - u * y[1],
                p.gamma_minus - p.gamma_plus * y[1] + u * y[0],
            ]
        )

    x0 = s0.as_array() if isinstance(s0, BlochState) else np.asarray(s0, dtype=float)
    sol = integrate(rhs, x0, t, rtol=tol, atol=tol, max_step=max_dt)
    us = np.array([u_fn(tt) for tt in sol.t])
    return Trajectory(sol.t, sol.y, us, sol.f, None, (0.0, t), ())


def rk_oracle_batch(s0_batch, p: ModelParams, u: float, t: float,
                    tol: float = 1e-10) -> np.ndarray:
    """Endpoints of constant-control integration for a batch of states."""

    def rhs(tt, y):
        return np.stack(
            [
                -p.Gamma * y[..., 0] - u * y[..., 1],
                p.gamma_minus - p.gamma_plus * y[..., 1] + u * y[..., 0],
            ],
            axis=-1,
        )

    sol = integrate(rhs, np.asarray(s0_batch, dtype=float), t, rtol=tol, atol=tol,
                    record=False)
    return sol.y[-1]


def rk_oracle_3d(s0, p: ModelParams, u1_fn, u2_fn, t: float,
                 tol: float = 1e-10) -> SolveResult:
    """Reference integration of the full coherence-vector dynamics."""

    def rhs(tt, y):
        u1, u2 = u1_fn(tt), u2_fn(tt)
        return np.array(
            [
                -p.Gamma * y[0] + u2 * y[2],
                -p.Gamma * y[1] - u1 * y[2],
                p.gamma_minus - p.gamma_plus * y[2] + u1 * y[1] - u2 * y[0],
            ]
        )

    return integrate(rhs, np.asarray(s0, dtype=float), t, rtol=tol, atol=tol)


# ---------------------------------------------------------------------------
# event scanning along trajectories
# ---------------------------------------------------------------------------


def event_crossings(traj: Trajectory, p: ModelParams,
                    time_tol: float = 1e-10) -> list[Event]:
    """Sign changes of delta_a, delta_b, x2 and disk contact along a run.

    Crossings are refined by bisection on the Hermite interpolant; local
    near-zero extrema without a sign flip are reported as grazing events.
    """
    funcs = {
        "deltaA": lambda x: float(delta_a(x, p)),
        "deltaB": lambda x: float(delta_b(x, p)),
        "x2": lambda x: float(x[0]),
        "disk": lambda x: float(1.0 - x[0] ** 2 - x[1] ** 2),
    }
    out: list[Event] = []
    for kind, g in funcs.items():
        vals = np.array([g(x) for x in traj.x])
        for i in range(len(vals) - 1):
            a, b = vals[i], vals[i + 1]
            if a == 0.0:
                if i == 0 or vals[i - 1] != 0.0:
                    out.append(Event(float(traj.t[i]), traj.x[i].copy(), kind))
                continue
            if a * b < 0.0:
                lo, hi = float(traj.t[i]), float(traj.t[i + 1])
                ga = a
                while hi - lo > time_tol:
                    mid = 0.5 * (lo + hi)
                    gm = g(traj.state_at(mid))
                    if ga * gm <= 0.0:
                        hi = mid
                    else:
                        lo, ga = mid, gm
                tm = 0.5 * (lo + hi)
                out.append(Event(tm, traj.state_at(tm), kind))
        # grazing: interior |g| minimum near zero without a sign change
        scale = max(1e-12, float(np.max(np.abs(vals))))
        for i in range(1, len(vals) - 1):
            if (
                0.0 < abs(vals[i]) < 1e-9 * scale
                and vals[i - 1] * vals[i] > 0.0
                and vals[i] * vals[i + 1] > 0.0
                and abs(vals[i]) <= abs(vals[i - 1])
                and abs(vals[i]) <= abs(vals[i + 1])
            ):
                out.append(Event(float(traj.t[i]), traj.x[i].copy(), kind, True))
    out.sort(key=lambda e: e.time)
    return out
