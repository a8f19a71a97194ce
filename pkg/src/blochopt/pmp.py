"""Extremal machinery: adjoint propagation, switching logic, variational angle.

Extremals maximize the pseudo-Hamiltonian ``p . (F + u G) + p0`` pointwise,
so off the zero set of the switching function ``Phi = p . G`` the control is
``u = sign(Phi)``.  Between switches both the state and the adjoint evolve
under constant-control linear dynamics and are propagated in closed form; a
switch is a bisected zero of the closed-form ``Phi``.  When ``Phi`` and its
derivative vanish together on a turnpike singular arc with admissible
feedback, the extremal continues singularly.

The backward variational angle ``theta`` gives the same switching structure
without reference to any particular adjoint: ``Phi(t) = p(0) . vt(t)`` where
``vt(t)`` is the control field at the current state pulled back to time zero
through the inverse fundamental matrix of the variational flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChatteringError, IntegrationError
from .clockform import is_turnpike_at
from .flows import (
    DEFAULT_MAX_DT,
    Trajectory,
    _cs,
    _propagators,
    integrate,
    propagate_word,
    singular_admissibility_threshold,
    singular_control,
    stationary_point,
)
from .model import (
    BlochState,
    LineKind,
    ModelParams,
    control_field,
    delta_b,
    drift_field,
)
from .words import Arc, ArcKind, ControlWord

#: |Phi| below SWITCH_SCALE * (|p| |x| + 1) counts as zero
SWITCH_SCALE = 1e-11

#: default chattering guard
MAX_SWITCHES = 50


@dataclass(frozen=True)
class AdjointState:
    """PMP covector with the abnormal constant (p0 <= 0, p0 = -1 normal)."""

    p2: float
    p3: float
    p0: float = -1.0

    def __post_init__(self):
        if self.p0 > 0:
            raise ValueError(f"abnormal constant must be <= 0, got {self.p0}")
        if self.p2 == 0.0 and self.p3 == 0.0:
            raise ValueError("adjoint covector must be nontrivial")

    def as_array(self) -> np.ndarray:
        return np.array([self.p2, self.p3])


@dataclass(frozen=True)
class ExtremalPoint:
    t: float
    s: BlochState
    a: AdjointState
    u: float
    phi: float


def _cov(a) -> np.ndarray:
    if isinstance(a, AdjointState):
        return a.as_array()
    return np.asarray(a, dtype=float)


def pseudo_hamiltonian(s, a, u: float, p: ModelParams) -> float:
    """p . (F + u G) + p0."""
    pv = _cov(a)
    p0 = a.p0 if isinstance(a, AdjointState) else -1.0
    x = s.as_array() if isinstance(s, BlochState) else np.asarray(s, dtype=float)
    vel = drift_field(x, p) + u * control_field(x)
    return float(pv @ vel) + p0


def adjoint_rhs(a, u: float, p: ModelParams) -> np.ndarray:
    """Covector dynamics (Gamma p2 - u p3, gamma_plus p3 + u p2)."""
    pv = _cov(a)
    return np.array([p.Gamma * pv[0] - u * pv[1], p.gamma_plus * pv[1] + u * pv[0]])


def switching_function(s, a) -> float:
    """Phi = p . G = -p2 x3 + p3 x2."""
    pv = _cov(a)
    x = s.as_array() if isinstance(s, BlochState) else np.asarray(s, dtype=float)
    return float(-pv[0] * x[1] + pv[1] * x[0])


def bracket_fg(s, p: ModelParams) -> np.ndarray:
    """Commutator [F, G](x) = (-gamma_minus + (gamma_plus - Gamma) x3,
    (gamma_plus - Gamma) x2)."""
    x = s.as_array() if isinstance(s, BlochState) else np.asarray(s, dtype=float)
    k = p.gamma_plus - p.Gamma
    return np.array([-p.gamma_minus + k * x[..., 1], k * x[..., 0]])


def switching_rate(s, a, p: ModelParams) -> float:
    """d(Phi)/dt = p . [F, G](x); independent of the running control."""
    pv = _cov(a)
    br = bracket_fg(s, p)
    return float(pv @ br)


# ---------------------------------------------------------------------------
# closed-form joint propagation of one constant-control arc
# ---------------------------------------------------------------------------


class _ArcState:
    """Scalars of one bang/free arc for fast repeated evaluation."""

    __slots__ = ("p", "u", "q2", "q3", "z2", "z3", "p2", "p3", "sigma", "a", "du")

    def __init__(self, p: ModelParams, u: float, x: np.ndarray, pv: np.ndarray):
        self.p = p
        self.u = u
        q = stationary_point(p, u)
        self.q2, self.q3 = float(q[0]), float(q[1])
        self.z2, self.z3 = float(x[0]) - self.q2, float(x[1]) - self.q3
        self.p2, self.p3 = float(pv[0]), float(pv[1])
        self.sigma = 0.5 * (p.Gamma + p.gamma_plus)
        self.a = 0.5 * (p.Gamma - p.gamma_plus)
        self.du = (p.Gamma - p.gamma_plus) ** 2 - 4.0 * u * u

    def eval(self, tau: float):
        """State, adjoint and switching data after time ``tau`` on this arc."""
        c, s = _cs(self.du, tau)
        c, s = float(c), float(s)
        env = math.exp(-self.sigma * tau)
        envi = math.exp(self.sigma * tau)
        a, u = self.a, self.u
        x2 = self.q2 + env * (c * self.z2 + s * (-a * self.z2 - u * self.z3))
        x3 = self.q3 + env * (c * self.z3 + s * (u * self.z2 + a * self.z3))
        p2 = envi * ((c + s * a) * self.p2 - s * u * self.p3)
        p3 = envi * (s * u * self.p2 + (c - s * a) * self.p3)
        phi = -p2 * x3 + p3 * x2
        return x2, x3, p2, p3, phi

    def phi(self, tau: float) -> float:
        return self.eval(tau)[4]

    def phidot(self, tau: float) -> float:
        x2, x3, p2, p3, _ = self.eval(tau)
        k = self.p.gamma_plus - self.p.Gamma
        return p2 * (-self.p.gamma_minus + k * x3) + p3 * (k * x2)


def _bisect(f, lo: float, hi: float, flo: float, tol: float = 1e-12) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


@dataclass
class Extremal:
    """Sampled extremal: state, adjoint, control, switching function, angle."""

    t: np.ndarray
    x: np.ndarray
    pv: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    word: ControlWord
    p0: float
    switch_times: tuple[float, ...]
    flags: frozenset[str]
    theta: np.ndarray | None = None
    frames: np.ndarray | None = None

    @property
    def endpoint(self) -> np.ndarray:
        return self.x[-1]

    def points(self) -> list[ExtremalPoint]:
        return [
            ExtremalPoint(
                float(self.t[k]),
                BlochState(float(self.x[k, 0]), float(self.x[k, 1])),
                AdjointState(float(self.pv[k, 0]), float(self.pv[k, 1]), self.p0),
                float(self.u[k]),
                float(self.phi[k]),
            )
            for k in range(len(self.t))
        ]

    def to_trajectory(self, p: ModelParams) -> Trajectory:
        xd = drift_field(self.x, p) + self.u[:, None] * control_field(self.x)
        bounds = (0.0,) + self.switch_times + (float(self.t[-1]),)
        return Trajectory(self.t, self.x, self.u, xd, self.word, bounds, (),
                          self.frames)

    def write_csv(self, stream, theta: np.ndarray | None = None) -> None:
        """Rows ``t,x2,x3,p2,p3,u,Phi,theta`` at 17 significant digits."""
        stream.write("t,x2,x3,p2,p3,u,Phi,theta\n")
        if theta is None:
            theta = self.theta
        th = theta if theta is not None else np.full(len(self.t), math.nan)
        for k in range(len(self.t)):
            row = (self.t[k], self.x[k, 0], self.x[k, 1], self.pv[k, 0],
                   self.pv[k, 1], self.u[k], self.phi[k], th[k])
            stream.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _phi_zero_tol(x: np.ndarray, pv: np.ndarray) -> float:
    return SWITCH_SCALE * (
        math.hypot(pv[0], pv[1]) * math.hypot(x[0], x[1]) + 1.0
    )


def _singular_entry_ok(p: ModelParams, x: np.ndarray) -> bool:
    try:
        ctl = singular_control(x, p, tol=1e-7)
    except Exception:
        return False
    return ctl.admissible and is_turnpike_at(p, x, tol=1e-7)


def propagate_extremal(
    s0,
    a0,
    p: ModelParams,
    t_max: float,
    switch_tol: float | None = None,
    z_exit: tuple[float, float] | None = None,
    max_switches: int = MAX_SWITCHES,
    max_dt: float = DEFAULT_MAX_DT,
    scan_dt: float = 0.02,
    stop_at_forbidden: bool = True,
    stop_after_switches: int | None = None,
) -> Extremal:
    """Forward extremal from (state, covector) under the maximum principle.

    Bang arcs are propagated in closed form with switch times bisected on the
    closed-form switching function.  A tangential zero of ``Phi`` on an
    admissible turnpike arc enters a singular segment; ``z_exit = (duration,
    sign)`` optionally leaves it after ``duration`` with the given bang sign,
    otherwise the singular arc runs until it loses admissibility or the
    horizon ends.

    The backward variational angle is accumulated along the run.  With
    ``stop_at_forbidden`` (default) propagation ends at a switch violating
    the angle rule, since the continuation is provably non-optimal; pass
    ``False`` for the raw extremal flow.
    """
    x = s0.as_array() if isinstance(s0, BlochState) else np.asarray(s0, dtype=float)
    pv = _cov(a0).copy()
    p0 = a0.p0 if isinstance(a0, AdjointState) else -1.0
    if pv[0] == 0.0 and pv[1] == 0.0:
        raise ValueError("adjoint covector must be nontrivial")

    flags: set[str] = set()
    frame = np.eye(2)
    ts = [0.0]
    xs = [x.copy()]
    pvs = [pv.copy()]
    phis = [switching_function(x, pv)]
    thetas = [0.0]
    frames = [frame.copy()]
    us_seg: list[float] = []
    switch_times: list[float] = []
    arcs: list[Arc] = []

    # theta reference direction; deferred when starting at the disk center
    g0 = control_field(x)
    n0 = float(np.linalg.norm(g0))
    prev_unit = g0 / n0 if n0 > 1e-13 else None
    if prev_unit is None:
        flags.add("theta_origin_start")

    def phi_tol() -> float:
        if switch_tol is not None:
            return switch_tol
        return _phi_zero_tol(x, pv)

    def push_block(dts, xs_b, pvs_b, phis_b, frames_b, u_b) -> None:
        """Append a block of samples (times relative to current t)."""
        nonlocal x, pv, frame, prev_unit
        t_base = ts[-1]
        g = control_field(xs_b)
        vt = np.einsum("tij,tj->ti", frames_b, g)
        norms = np.linalg.norm(vt, axis=1)
        for i in range(len(dts)):
            ts.append(t_base + float(dts[i]))
            xs.append(xs_b[i])
            pvs.append(pvs_b[i])
            phis.append(float(phis_b[i]))
            frames.append(frames_b[i])
            us_seg.append(float(u_b[i]))
            if norms[i] <= 1e-13:
                thetas.append(thetas[-1])
                continue
            unit = vt[i] / norms[i]
            if prev_unit is None:
                prev_unit = unit
                thetas.append(thetas[-1])
                continue
            cr = prev_unit[0] * unit[1] - prev_unit[1] * unit[0]
            dt_prod = float(prev_unit @ unit)
            thetas.append(thetas[-1] + math.atan2(cr, dt_prod))
            prev_unit = unit
        x = xs[-1].copy()
        pv = pvs[-1].copy()
        frame = frames[-1].copy()

    def initial_control() -> float | None:
        phi0 = switching_function(x, pv)
        tol = phi_tol()
        if abs(phi0) > tol:
            return float(np.sign(phi0))
        pd = switching_rate(x, pv, p)
        if abs(pd) > 1e3 * tol:
            return float(np.sign(pd))
        if _singular_entry_ok(p, x):
            return None
        flags.add("degenerate_start")
        return 1.0

    h0 = float(pv @ (drift_field(x, p) + np.sign(phis[0] or 1.0) * control_field(x)))
    if abs(h0) <= 1e-9 * (float(np.linalg.norm(pv)) + 1.0):
        flags.add("abnormal_candidate")

    t = 0.0
    u = initial_control()
    guard = 0
    while t < t_max - 1e-12:
        guard += 1
        if guard > 4 * max_switches + 8:
            raise ChatteringError(f"extremal did not settle after {guard} arcs")

        if u is None:
            z_cap = t_max - t
            exit_sign = None
            if z_exit is not None:
                z_cap = min(z_cap, z_exit[0])
                exit_sign = z_exit[1]
            seg = _singular_segment(x, pv, frame, p, z_cap, max_dt)
            if len(seg.t) > 1:
                push_block(seg.t[1:], seg.x[1:], seg.pv[1:], seg.phi[1:],
                           seg.frames[1:], seg.u[:-1])
                arcs.append(Arc(ArcKind.Z, float(seg.t[-1])))
                t += float(seg.t[-1])
                flags.add("singular_arc")
            elif not seg.lost_admissibility:
                flags.add("stalled_singular")
                break
            if seg.lost_admissibility:
                u = float(np.sign(singular_control(x, p, tol=1e-6).phi)) or 1.0
                switch_times.append(t)
            elif exit_sign is not None and t < t_max - 1e-12:
                u = float(exit_sign)
                switch_times.append(t)
            else:
                break
            continue

        arc = _ArcState(p, u, x, pv)
        horizon = t_max - t
        t_switch, graze, singular = _next_switch(arc, horizon, phi_tol(), scan_dt)
        if graze:
            flags.add("grazing")
        tau_end = horizon if t_switch is None else t_switch
        dt_arc = max_dt
        for _ in range(8):
            n = max(2, int(math.ceil(tau_end / dt_arc)) + 1)
            taus = np.linspace(0.0, tau_end, n)[1:]
            m_fwd = _propagators(p, u, taus)
            m_inv = _propagators(p, u, taus, inverse=True)
            q = stationary_point(p, u)
            xs_b = q + np.einsum("tij,j->ti", m_fwd, x - q)
            pvs_b = np.einsum("tji,j->ti", m_inv, pv)
            frames_b = np.einsum("ij,tjk->tik", frame, m_inv)
            phis_b = -pvs_b[:, 0] * xs_b[:, 1] + pvs_b[:, 1] * xs_b[:, 0]
            # the variational angle must stay resolved (< pi/2 per sample)
            vt_b = np.einsum("tij,tj->ti", frames_b, control_field(xs_b))
            nb = np.linalg.norm(vt_b, axis=1)
            ok = np.all(nb > 0.0)
            if ok and prev_unit is not None:
                ub = vt_b / nb[:, None]
                chain = np.vstack([prev_unit, ub])
                cr = chain[:-1, 0] * chain[1:, 1] - chain[:-1, 1] * chain[1:, 0]
                dp = np.einsum("ti,ti->t", chain[:-1], chain[1:])
                ok = not np.any(np.abs(np.arctan2(cr, dp)) >= 0.5 * math.pi)
            if ok:
                break
            dt_arc *= 0.25
        push_block(taus, xs_b, pvs_b, phis_b, frames_b, np.full(len(taus), u))
        arcs.append(Arc(ArcKind(_KIND_OF[u]), tau_end))
        t += tau_end
        if t_switch is None:
            break

        if singular and _singular_entry_ok(p, x):
            switch_times.append(t)
            u = None
            continue

        # optimal-switch rule at the located zero of Phi
        db = float(delta_b(x, p))
        th = thetas[-1]
        boundary = abs(th) <= 1e-9 or abs(db) <= 1e-9
        permitted = (db > 0.0 and th > 0.0) or (db < 0.0 and th < 0.0)
        if boundary:
            flags.add("theta_boundary")
        if stop_at_forbidden and not permitted and not boundary:
            flags.add("stopped_forbidden_switch")
            break
        switch_times.append(t)
        if stop_after_switches is not None and len(switch_times) >= stop_after_switches:
            break
        if len(switch_times) > max_switches:
            raise ChatteringError(
                f"more than {max_switches} switches before t = {t:.3g}; "
                "numerical pathology suspected"
            )
        u = -u

    us = us_seg + [us_seg[-1] if us_seg else 0.0]
    word = ControlWord(tuple(a for a in arcs if a.duration > 0.0))
    return Extremal(
        np.array(ts), np.array(xs), np.array(pvs), np.array(us), np.array(phis),
        word, p0, tuple(switch_times), frozenset(flags), np.array(thetas),
        np.array(frames),
    )


_KIND_OF = {1.0: "Y", -1.0: "X", 0.0: "F0"}


def _next_switch(arc: _ArcState, horizon: float, tol0: float, scan_dt: float):
    """First zero of Phi on (0, horizon]; returns (time | None, graze, singular).

    ``singular`` marks a tangential zero (Phi and its derivative vanishing
    together within tolerance).  A start inside the zero band (fresh switch)
    is skipped until the sign is re-established.
    """
    n = int(math.ceil(horizon / scan_dt))
    t_ref = 0.0
    phi_ref = arc.phi(0.0)
    sign_ref = 0 if abs(phi_ref) <= tol0 else (1 if phi_ref > 0 else -1)
    t_prev, pd_prev = 0.0, arc.phidot(0.0)
    pd_tol = 1e4 * tol0 * (1.0 + arc.p.Gamma + arc.p.gamma_plus)
    graze = False
    for k in range(1, n + 1):
        tk = min(k * scan_dt, horizon)
        phik = arc.phi(tk)
        pdk = arc.phidot(tk)
        sk = 0 if abs(phik) <= tol0 else (1 if phik > 0 else -1)
        if sign_ref != 0 and sk != 0 and sk != sign_ref:
            tz = _bisect(arc.phi, t_ref, tk, phi_ref, 1e-13)
            return tz, graze, abs(arc.phidot(tz)) <= pd_tol
        if sign_ref != 0 and pd_prev * pdk < 0.0:
            te = _bisect(arc.phidot, t_prev, tk, pd_prev, 1e-13)
            phie = arc.phi(te)
            se = 0 if abs(phie) <= tol0 else (1 if phie > 0 else -1)
            if se != 0 and se != sign_ref:
                tz = _bisect(arc.phi, t_ref, te, phi_ref, 1e-13)
                return tz, graze, abs(arc.phidot(tz)) <= pd_tol
            if se == 0:
                return te, graze, True
            if abs(phie) <= 1e3 * tol0:
                graze = True
        if sk != 0:
            sign_ref, t_ref, phi_ref = sk, tk, phik
        t_prev, pd_prev = tk, pdk
    return None, graze, False


@dataclass
class _SingularSegment:
    t: np.ndarray
    x: np.ndarray
    pv: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    frames: np.ndarray
    lost_admissibility: bool


def _singular_segment(x0, pv0, frame0, p: ModelParams, tau: float,
                      max_dt: float) -> _SingularSegment:
    """Joint integration of state, adjoint and inverse frame on a Z arc."""
    ctl = singular_control(x0, p, tol=1e-7)
    line = ctl.line

    def phi_of(x2: float) -> float:
        if line is LineKind.VERTICAL or p.gamma_minus == 0.0:
            return 0.0
        return (
            p.gamma_minus * (p.gamma_plus - 2.0 * p.Gamma)
            / (2.0 * (p.Gamma - p.gamma_plus) * x2)
        )

    def rhs(t, y):
        u = phi_of(y[0])
        n00, n01, n10, n11 = y[4], y[5], y[6], y[7]
        return np.array(
            [
                -p.Gamma * y[0] - u * y[1],
                p.gamma_minus - p.gamma_plus * y[1] + u * y[0],
                p.Gamma * y[2] - u * y[3],
                p.gamma_plus * y[3] + u * y[2],
                p.Gamma * n00 - u * n01,
                u * n00 + p.gamma_plus * n01,
                p.Gamma * n10 - u * n11,
                u * n10 + p.gamma_plus * n11,
            ]
        )

    events = []
    if line is LineKind.HORIZONTAL and p.gamma_minus != 0.0:
        thresh = singular_admissibility_threshold(p)
        events.append(("singular_admissibility", lambda t, y: abs(y[0]) - thresh))
    y0 = np.concatenate([x0, pv0, np.asarray(frame0, dtype=float).ravel()])
    sol = integrate(rhs, y0, tau, rtol=1e-12, atol=1e-12, max_step=max_dt,
                    events=events)
    us = np.array([phi_of(v[0]) for v in sol.y])
    phis = -sol.y[:, 2] * sol.y[:, 1] + sol.y[:, 3] * sol.y[:, 0]
    frames = sol.y[:, 4:].reshape(-1, 2, 2)
    lost = sol.event is not None and sol.event[0] == "singular_admissibility"
    return _SingularSegment(sol.t, sol.y[:, :2], sol.y[:, 2:4], us, phis, frames,
                            lost)


# ---------------------------------------------------------------------------
# backward variational angle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaProfile:
    """Unwrapped angle of the pulled-back control field along a run."""

    t: np.ndarray
    theta: np.ndarray
    vt: np.ndarray  # raw pulled-back vectors, one per sample

    @property
    def theta_dot(self) -> np.ndarray:
        return np.gradient(self.theta, self.t)

    def at(self, time: float) -> tuple[float, float]:
        th = float(np.interp(time, self.t, self.theta))
        td = float(np.interp(time, self.t, self.theta_dot))
        return th, td


def theta_profile(traj: Trajectory, p: ModelParams,
                  max_dt: float = DEFAULT_MAX_DT) -> ThetaProfile:
    """Backward-propagated variational angle theta(t), theta(0) = 0.

    Requires the trajectory frames (inverse fundamental matrices); if absent,
    the run is re-propagated from its word with frames enabled.  The angle
    can turn quickly where the path approaches the disk center (the pulled
    back control field becomes short there), so the sampling is refined until
    every increment stays below pi/2.
    """
    if traj.frames is None:
        if traj.word is None:
            raise ValueError("theta needs trajectory frames or a control word")
        traj = propagate_word(traj.x[0], p, traj.word, max_dt=max_dt,
                              with_frames=True)
    for _ in range(8):
        g = control_field(traj.x)
        vt = np.einsum("tij,tj->ti", traj.frames, g)
        norms = np.linalg.norm(vt, axis=1)
        if norms[0] < 1e-13:
            raise IntegrationError(
                "pulled-back control field vanishes at t = 0 (start on the disk "
                "center); theta is undefined from this initial state"
            )
        if np.any(norms == 0.0):
            raise IntegrationError("pulled-back control field vanished along the run")
        unit = vt / norms[:, None]
        cross = unit[:-1, 0] * unit[1:, 1] - unit[:-1, 1] * unit[1:, 0]
        dot = np.einsum("ti,ti->t", unit[:-1], unit[1:])
        incr = np.arctan2(cross, dot)
        if not np.any(np.abs(incr) >= 0.5 * math.pi):
            theta = np.concatenate([[0.0], np.cumsum(incr)])
            return ThetaProfile(traj.t.copy(), theta, vt)
        if traj.word is None:
            raise IntegrationError(
                "theta increment exceeded pi/2 between supplied samples"
            )
        max_dt *= 0.25
        traj = propagate_word(traj.x[0], p, traj.word, max_dt=max_dt,
                              with_frames=True)
    raise IntegrationError("theta sampling failed to resolve the angle rate")


def switch_permitted(profile: ThetaProfile, time: float) -> bool:
    """Optimal-switch rule: (theta_dot>0 and theta>0) or (theta_dot<0 and theta<0)."""
    th, td = profile.at(time)
    return bool((td > 0.0 and th > 0.0) or (td < 0.0 and th < 0.0))


# ---------------------------------------------------------------------------
# extremal fan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FanShot:
    angle: float
    a0: np.ndarray
    word: ControlWord
    endpoint: np.ndarray
    flags: frozenset[str]


def shoot_extremal_fan(
    s0,
    p: ModelParams,
    n_directions: int,
    t_max: float,
    z_exit: tuple[float, float] | None = None,
    z_exit_variants: tuple[float, ...] = (0.3, 1.0),
    max_dt: float = DEFAULT_MAX_DT,
) -> list[FanShot]:
    """Sweep unit initial covectors and propagate each extremal.

    The trajectory of an extremal depends only on the direction of the
    initial covector (the abnormal constant never enters the switching rule),
    so unit covectors enumerate all extremal runs; shots whose conserved
    ``p.(F+uG)`` is near zero are flagged as abnormal candidates.  Results
    are ordered by direction angle.

    A shot ending on a singular arc is non-unique: it may leave the arc with
    either bang sign at any time.  Unless a fixed ``z_exit`` policy is given,
    such shots are supplemented by exit variants at the ``z_exit_variants``
    durations, flagged ``singular_exit_variant``.
    """
    shots = []
    for k in range(n_directions):
        ang = 2.0 * math.pi * k / n_directions
        a0 = np.array([math.cos(ang), math.sin(ang)])
        ext = propagate_extremal(s0, a0, p, t_max, z_exit=z_exit, max_dt=max_dt)
        shots.append(FanShot(ang, a0, ext.word, ext.endpoint.copy(), ext.flags))
        if (
            z_exit is None
            and ext.word.arcs
            and ext.word.arcs[-1].kind is ArcKind.Z
        ):
            for dur in z_exit_variants:
                for sign in (-1.0, 1.0):
                    var = propagate_extremal(
                        s0, a0, p, t_max, z_exit=(dur, sign), max_dt=max_dt
                    )
                    shots.append(
                        FanShot(ang, a0, var.word, var.endpoint.copy(),
                                var.flags | {"singular_exit_variant"})
                    )
    return shots


def word_alphabet(shots) -> set[str]:
    """Distinct arc-kind sequences realized by a list of fan shots."""
    return {shot.word.label() for shot in shots}
