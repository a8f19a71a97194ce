"""Model layer: dissipation parameters, Bloch-disk states, vector fields and loci.

The controlled dynamics on the disk is ``xdot = F(x) + u*G(x)`` with a
dissipative drift ``F`` and the orthoradial control field ``G``.  Everything
downstream (flows, extremals, clock form, synthesis) consumes the functions
defined here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateModelError, ParameterError, StateDomainError

#: slack used when checking disk membership; absorbs integrator rounding
DISK_TOL = 1e-9

#: relative tolerance for the numerical rank in the Lie-closure computation
LIE_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ModelParams:
    """Dissipation rates of the two-level system.

    ``Gamma`` is the total dephasing rate, ``gamma12`` and ``gamma21`` the two
    population relaxation rates.  Validity of the underlying master equation
    requires ``Gamma >= (gamma12 + gamma21) / 2`` (nonnegative pure dephasing)
    and nonnegative population rates.
    """

    Gamma: float
    gamma12: float
    gamma21: float

    def __post_init__(self):
        if self.gamma12 < 0:
            raise ParameterError(f"gamma12 must be >= 0, got {self.gamma12}")
        if self.gamma21 < 0:
            raise ParameterError(f"gamma21 must be >= 0, got {self.gamma21}")
        if self.Gamma < 0.5 * (self.gamma12 + self.gamma21):
            raise ParameterError(
                "Lindblad validity requires Gamma >= (gamma12 + gamma21)/2 "
                f"(pure dephasing {self.pure_dephasing} < 0)"
            )

    @property
    def gamma_plus(self) -> float:
        return self.gamma12 + self.gamma21

    @property
    def gamma_minus(self) -> float:
        return self.gamma12 - self.gamma21

    @property
    def pure_dephasing(self) -> float:
        return self.Gamma - 0.5 * (self.gamma12 + self.gamma21)

    @property
    def is_unital(self) -> bool:
        """True when the free dynamics fixes the disk center."""
        return self.gamma_minus == 0.0

    @property
    def is_degenerate(self) -> bool:
        """True when ``Gamma == gamma_plus`` (single-line singular locus)."""
        return self.Gamma == self.gamma_plus

    def to_json(self) -> str:
        return json.dumps(
            {"Gamma": self.Gamma, "gamma12": self.gamma12, "gamma21": self.gamma21}
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        data = json.loads(text)
        try:
            return cls(float(data["Gamma"]), float(data["gamma12"]), float(data["gamma21"]))
        except KeyError as exc:
            raise ParameterError(f"missing parameter field {exc}") from exc


#: benchmark parameter sets used throughout tests and the CLI
CASE_PARAMS = {
    "a": ModelParams(3.0, 0.3, 0.3),
    "b": ModelParams(1.5, 0.3, 0.3),
    "c": ModelParams(3.0, 0.0, 1.0),
    "d": ModelParams(3.0, 0.1, 0.3),
}


@dataclass(frozen=True)
class BlochState:
    """Point of the closed unit disk in the (x2, x3) plane."""

    x2: float
    x3: float

    def __post_init__(self):
        r2 = self.x2 * self.x2 + self.x3 * self.x3
        if r2 > 1.0 + DISK_TOL:
            raise StateDomainError(f"state ({self.x2}, {self.x3}) outside Bloch disk")

    def as_array(self) -> np.ndarray:
        return np.array([self.x2, self.x3])

    @property
    def radius2(self) -> float:
        return self.x2 * self.x2 + self.x3 * self.x3


@dataclass(frozen=True)
class Bloch3State:
    """Point of the closed unit ball in coherence-vector coordinates."""

    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        r2 = self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3
        if r2 > 1.0 + DISK_TOL:
            raise StateDomainError(
                f"state ({self.x1}, {self.x2}, {self.x3}) outside Bloch ball"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])


@dataclass(frozen=True)
class Control:
    """Bounded control amplitude, |u| <= 1."""

    u: float

    def __post_init__(self):
        if abs(self.u) > 1.0:
            raise ParameterError(f"control amplitude |{self.u}| exceeds 1")


def _coords(s) -> tuple[np.ndarray, np.ndarray]:
    """Split a state (BlochState, pair, or (..., 2) array) into x2, x3."""
    if isinstance(s, BlochState):
        return np.asarray(s.x2), np.asarray(s.x3)
    arr = np.asarray(s, dtype=float)
    return arr[..., 0], arr[..., 1]


def drift_field(s, p: ModelParams) -> np.ndarray:
    """Dissipative drift F(x) = (-Gamma*x2, gamma_minus - gamma_plus*x3)."""
    x2, x3 = _coords(s)
    return np.stack([-p.Gamma * x2, p.gamma_minus - p.gamma_plus * x3], axis=-1)


def control_field(s) -> np.ndarray:
    """Orthoradial control field G(x) = (-x3, x2); satisfies G(x).x = 0."""
    x2, x3 = _coords(s)
    return np.stack([-x3, x2], axis=-1)


def delta_a(s, p: ModelParams):
    """Det(F, G): collinearity indicator of the drift and control fields.

    Its zero set C_A separates the disk into regions of increasing and
    decreasing purity; it also equals the time derivative of Tr[rho^2].
    """
    x2, x3 = _coords(s)
    return -p.Gamma * x2 * x2 + p.gamma_minus * x3 - p.gamma_plus * x3 * x3


def delta_b(s, p: ModelParams):
    """Det(G, [F, G]): its zero set C_B carries all singular arcs."""
    x2, x3 = _coords(s)
    return 2.0 * (p.Gamma - p.gamma_plus) * x2 * x3 + p.gamma_minus * x2


def purity_rate(s, p: ModelParams):
    """d(Tr[rho^2])/dt, control independent; identical to :func:`delta_a`."""
    x2, x3 = _coords(s)
    return -p.Gamma * x2 * x2 + p.gamma_minus * x3 - p.gamma_plus * x3 * x3


def free_fixed_point(p: ModelParams) -> BlochState:
    """Fixed point (0, gamma_minus/gamma_plus) of the uncontrolled flow."""
    if p.gamma_plus == 0.0:
        if p.Gamma == 0.0:
            raise DegenerateModelError(
                "gamma_plus = Gamma = 0: every state is an equilibrium"
            )
        raise DegenerateModelError(
            "gamma_plus = 0: free dynamics has the whole line x2 = 0 as equilibria"
        )
    return BlochState(0.0, p.gamma_minus / p.gamma_plus)


def controlled_limit_point(p: ModelParams, u: float) -> BlochState:
    """Stationary point of F + u*G for a constant control u.

    Defined whenever ``Gamma*gamma_plus + u**2 != 0``; the residual of the
    controlled field vanishes there exactly.
    """
    det = p.Gamma * p.gamma_plus + u * u
    if det == 0.0:
        raise DegenerateModelError(
            "F + u*G is singular (Gamma*gamma_plus + u^2 = 0); no limit point"
        )
    return BlochState(-u * p.gamma_minus / det, p.Gamma * p.gamma_minus / det)


def rhs_3d(s, p: ModelParams, u1: float, u2: float) -> np.ndarray:
    """Full coherence-vector dynamics with both control quadratures."""
    if isinstance(s, Bloch3State):
        x1, x2, x3 = s.x1, s.x2, s.x3
    else:
        x1, x2, x3 = np.asarray(s, dtype=float)
    return np.array(
        [
            -p.Gamma * x1 + u2 * x3,
            -p.Gamma * x2 - u1 * x3,
            p.gamma_minus - p.gamma_plus * x3 + u1 * x2 - u2 * x1,
        ]
    )


class LineKind(str, Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"


@dataclass(frozen=True)
class SingularLine:
    """One straight component of the singular locus C_B, clipped to the disk."""

    kind: LineKind
    position: float  # x2 value for vertical, x3 value for horizontal
    lo: float
    hi: float

    def samples(self, n: int = 128) -> np.ndarray:
        span = np.linspace(self.lo, self.hi, n)
        if self.kind is LineKind.VERTICAL:
            return np.stack([np.full(n, self.position), span], axis=-1)
        return np.stack([span, np.full(n, self.position)], axis=-1)

    def contains(self, s, tol: float = 1e-9) -> bool:
        x2, x3 = _coords(s)
        if self.kind is LineKind.VERTICAL:
            return bool(abs(x2 - self.position) <= tol)
        return bool(abs(x3 - self.position) <= tol)


@dataclass(frozen=True)
class Loci:
    """Sampled organizing curves of the synthesis.

    ``ca_arcs`` are polyline samples of the zero set of :func:`delta_a` inside
    the disk (a single point for unital rates); ``cb_lines`` the straight
    components of the zero set of :func:`delta_b`.  Degenerate rate
    combinations are reported through explicit flags instead of being guessed
    around.
    """

    ca_arcs: tuple[np.ndarray, ...]
    cb_lines: tuple[SingularLine, ...]
    ca_is_point: bool
    single_cb_line: bool


def horizontal_cb_position(p: ModelParams) -> float:
    """x3 ordinate of the horizontal C_B line; requires Gamma != gamma_plus."""
    if p.is_degenerate:
        raise DegenerateModelError(
            "Gamma = gamma_plus: the singular locus has no horizontal line"
        )
    return -p.gamma_minus / (2.0 * (p.Gamma - p.gamma_plus))


def loci(p: ModelParams, resolution: int = 512) -> Loci:
    """Sample C_A and C_B inside the closed unit disk.

    C_A is the ellipse ``Gamma*x2^2 + gamma_plus*(x3 - c)^2 = gamma_minus^2 /
    (4*gamma_plus)`` around ``c = gamma_minus/(2*gamma_plus)``; it always
    passes through the origin and the free fixed point and degenerates to the
    origin alone for unital rates.
    """
    if p.gamma_plus < 0:
        raise ParameterError("gamma_plus must be >= 0")

    # C_A: zero set of delta_a.
    if p.gamma_minus == 0.0 or p.gamma_plus == 0.0:
        ca_arcs: tuple[np.ndarray, ...] = (np.zeros((1, 2)),)
        ca_is_point = True
    else:
        c = p.gamma_minus / (2.0 * p.gamma_plus)
        r = p.gamma_minus * p.gamma_minus / (4.0 * p.gamma_plus)
        a2 = math.sqrt(r / p.Gamma) if p.Gamma > 0 else 0.0
        a3 = math.sqrt(r / p.gamma_plus)
        theta = np.linspace(0.0, 2.0 * np.pi, resolution)
        arc = np.stack([a2 * np.cos(theta), c + a3 * np.sin(theta)], axis=-1)
        ca_arcs = (arc,)
        ca_is_point = False

    lines = [SingularLine(LineKind.VERTICAL, 0.0, -1.0, 1.0)]
    single = p.is_degenerate
    if not single:
        x3_line = horizontal_cb_position(p)
        if abs(x3_line) <= 1.0:
            half = math.sqrt(max(0.0, 1.0 - x3_line * x3_line))
            lines.append(SingularLine(LineKind.HORIZONTAL, x3_line, -half, half))
    return Loci(ca_arcs, tuple(lines), ca_is_point, single)


def generator_matrices(p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """3x3 matrices generating the dynamical Lie algebra.

    The planar affine dynamics acts on homogeneous coordinates (1, x2, x3);
    the drift and control parts give the two generators below.
    """
    lf = np.array(
        [
            [0.0, 0.0, 0.0],
            [0.0, -p.Gamma, 0.0],
            [p.gamma_minus, 0.0, -p.gamma_plus],
        ]
    )
    lg = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    return lf, lg


def accessibility_dimension(p: ModelParams, tol: float = LIE_RANK_TOL,
                            max_generations: int = 20) -> int:
    """Dimension of the Lie algebra generated by the two dynamics matrices.

    Bracket closure with numerical rank deflation: at each generation all
    pairwise commutators are appended and an orthonormal basis is re-extracted
    by SVD, keeping singular directions above ``tol`` relative to the largest.
    The dimension is 4 for unital rates and 6 otherwise (away from the
    degenerate ``Gamma == gamma_plus`` combination).
    """
    lf, lg = generator_matrices(p)
    basis = [lf, lg]
    rank = 0
    for _ in range(max_generations):
        cands = list(basis)
        for a in basis:
            for b in basis:
                cands.append(a @ b - b @ a)
        vecs = np.array([m.ravel() for m in cands])
        u, sing, vt = np.linalg.svd(vecs, full_matrices=False)
        new_rank = int((sing > tol * sing[0]).sum())
        basis = [vt[i].reshape(3, 3) for i in range(new_rank)]
        if new_rank == rank:
            return rank
        rank = new_rank
    raise RuntimeError("Lie bracket closure did not stabilize within "
                       f"{max_generations} generations")
