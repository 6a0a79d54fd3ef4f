"""Domain types, forcing models, and raw vector fields of the switched oscillator.

The system is ``x' = 1, y' = -a*y - f(x, lambda)`` with ``lambda = sign(y)``
off the threshold ``y = 0``.  Two forcing models exist: a convex (linear in
lambda) combination of two sinusoids, and a single sinusoid whose frequency is
a (nonlinear) function of lambda.  They agree for y != 0 and differ only in
threshold semantics, which is what the rest of the library is about.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

TWO_THIRDS = 2.0 / 3.0

OMEGA_PLUS = Fraction(3, 2)
OMEGA_MINUS = Fraction(1, 2)


class OscillatorError(Exception):
    """Base class for library errors."""


class DomainError(OscillatorError, ValueError):
    """An argument lies outside an operation's domain."""


class SolverError(OscillatorError, RuntimeError):
    """A numerical routine failed to meet its contract."""


class NoOrbitError(OscillatorError, RuntimeError):
    """A requested periodic orbit does not exist in this parameter regime."""


def sinpi(u: float) -> float:
    """sin(pi*u) with argument reduction mod 2.

    fmod is exact for doubles, so the reduction keeps full precision for the
    large x reached by ageing runs (x ~ 1e3), where a naive sin(pi*x) loses
    digits.
    """
    r = math.fmod(u, 2.0)
    if r > 1.0:
        r -= 2.0
    elif r < -1.0:
        r += 2.0
    if r == 0.0 or r == 1.0 or r == -1.0:
        return 0.0
    return math.sin(math.pi * r)


def cospi(u: float) -> float:
    """cos(pi*u) with argument reduction mod 2."""
    r = math.fmod(abs(u), 2.0)
    if r > 1.0:
        r = 2.0 - r
    if r == 0.5:
        return 0.0
    return math.cos(math.pi * r)


class SwitchingModel(enum.Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"


class Mode(enum.Enum):
    FLOW_PLUS = "flow+"
    FLOW_MINUS = "flow-"
    SLIDING = "sliding"
    LAYER = "layer"


class Region(enum.Enum):
    ATTRACTING = "attracting"
    REPELLING = "repelling"
    CROSSING = "crossing"
    TANGENCY_PLUS = "tangency+"
    TANGENCY_MINUS = "tangency-"


@dataclass(frozen=True)
class OscillatorParams:
    """Damping, the two driving frequencies, and the regularization width.

    epsilon = 0 selects the discontinuous system.  omega_plus/omega_minus may
    be overridden, but every closed-form region/branch formula in the library
    assumes the standard 3/2, 1/2 pair; non-standard values are flagged and
    rejected by those operations.
    """

    a: float
    omega_plus: float = float(OMEGA_PLUS)
    omega_minus: float = float(OMEGA_MINUS)
    epsilon: float = 0.0
    psi: str = "cubic"

    def __post_init__(self) -> None:
        if not self.a > 0.0:
            raise DomainError(f"damping a must be > 0, got {self.a}")
        if self.epsilon < 0.0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.epsilon > 0.0 and not self.a * self.epsilon < 1.0:
            raise DomainError(
                f"layer analysis assumes a*epsilon < 1, got {self.a * self.epsilon}"
            )

    def omega(self, sign: int) -> float:
        return self.omega_plus if sign > 0 else self.omega_minus

    @property
    def standard_frequencies(self) -> bool:
        return self.omega_plus == float(OMEGA_PLUS) and self.omega_minus == float(
            OMEGA_MINUS
        )

    def require_standard(self) -> None:
        if not self.standard_frequencies:
            raise DomainError(
                "operation requires the standard frequencies 3/2, 1/2 "
                f"(got {self.omega_plus}, {self.omega_minus})"
            )

    def with_epsilon(self, epsilon: float) -> "OscillatorParams":
        return OscillatorParams(
            a=self.a,
            omega_plus=self.omega_plus,
            omega_minus=self.omega_minus,
            epsilon=epsilon,
            psi=self.psi,
        )


def params_from_circuit(R: float, L: float) -> OscillatorParams:
    """RL-circuit parameters: a = R/L with the standard frequency pair."""
    if not (R > 0.0 and L > 0.0):
        raise DomainError(f"need R > 0 and L > 0, got R={R}, L={L}")
    return OscillatorParams(a=R / L)


@dataclass(frozen=True)
class HybridState:
    """A phase point tagged with its dynamical mode.

    ``y`` holds the vertical coordinate; in layer scale callers divide by
    epsilon themselves (the regularization module has its own LayerState).
    """

    x: float
    y: float
    mode: Mode
    branch: int | None = None

    def __post_init__(self) -> None:
        if self.mode is Mode.FLOW_PLUS and not self.y > 0.0:
            raise DomainError("mode flow+ requires y > 0")
        if self.mode is Mode.FLOW_MINUS and not self.y < 0.0:
            raise DomainError("mode flow- requires y < 0")
        if self.mode is Mode.SLIDING and self.y != 0.0:
            raise DomainError("sliding states sit exactly on y = 0")


def forcing(model: SwitchingModel, x: float, lam: float,
            params: OscillatorParams | None = None) -> float:
    """Forcing value f_i(x, lambda), lambda in [-1, 1].

    Linear: the convex combination of sin(w+ pi x) and sin(w- pi x).
    Nonlinear: one sinusoid at the lambda-interpolated frequency.
    Both reduce to sin(w+- pi x) at lambda = +-1.
    """
    if not -1.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [-1, 1], got {lam}")
    wp = params.omega_plus if params else float(OMEGA_PLUS)
    wm = params.omega_minus if params else float(OMEGA_MINUS)
    if model is SwitchingModel.LINEAR:
        return 0.5 * (1.0 + lam) * sinpi(wp * x) + 0.5 * (1.0 - lam) * sinpi(wm * x)
    return sinpi(((1.0 + lam) * wp + (1.0 - lam) * wm) * x / 2.0)


def forcing_dlam(model: SwitchingModel, x: float, lam: float,
                 params: OscillatorParams | None = None) -> float:
    """d f_i / d lambda, used for fast-direction stability of threshold roots."""
    wp = params.omega_plus if params else float(OMEGA_PLUS)
    wm = params.omega_minus if params else float(OMEGA_MINUS)
    if model is SwitchingModel.LINEAR:
        return 0.5 * (sinpi(wp * x) - sinpi(wm * x))
    u = ((1.0 + lam) * wp + (1.0 - lam) * wm) * x / 2.0
    return math.pi * x * (wp - wm) / 2.0 * cospi(u)


def vector_field(model: SwitchingModel, params: OscillatorParams,
                 state: HybridState) -> tuple[float, float]:
    """(dx, dy) off the threshold; rejects y = 0 where lambda is set-valued."""
    if state.y == 0.0:
        raise DomainError("vector_field is undefined on y = 0; use the sliding module")
    lam = 1.0 if state.y > 0.0 else -1.0
    return 1.0, -params.a * state.y - forcing(model, state.x, lam, params)


def classify_threshold_point(x: float, tol: float = 1e-12) -> Region:
    """Region of the threshold point (x, 0), from the signs of -sin(w+- pi x).

    The pattern is 4-periodic: attracting on (8/3, 10/3), repelling on
    (2/3, 4/3), tangent where either field has sin(w pi x) = 0, crossing
    elsewhere.  Tangency detection uses ``tol`` on the reduced argument;
    points x = 2n are tangent for both fields and report TANGENCY_MINUS.
    """
    sm = sinpi(x / 2.0)
    sp = sinpi(3.0 * x / 2.0)
    if abs(sm) < tol:
        return Region.TANGENCY_MINUS
    if abs(sp) < tol:
        return Region.TANGENCY_PLUS
    if sp > 0.0 and sm < 0.0:
        return Region.ATTRACTING
    if sp < 0.0 and sm > 0.0:
        return Region.REPELLING
    return Region.CROSSING


@dataclass
class TrajectoryEvent:
    x: float
    kind: str  # cross | slide-entry | slide-exit | fold | layer-entry | layer-exit
    branch: int | None = None


@dataclass
class TrajectorySegment:
    mode: Mode
    xs: list[float]
    ys: list[float]
    branch: int | None = None


@dataclass
class Trajectory:
    """Ordered mode-tagged path segments with the events separating them."""

    segments: list[TrajectorySegment] = field(default_factory=list)
    events: list[TrajectoryEvent] = field(default_factory=list)

    def validate(self, gap_tol: float = 1e-9) -> None:
        """Check segment abutment and monotone x; raises SolverError on breach."""
        prev = None
        for seg in self.segments:
            if len(seg.xs) != len(seg.ys) or not seg.xs:
                raise SolverError("segment sample arrays malformed")
            for i in range(1, len(seg.xs)):
                if not seg.xs[i] >= seg.xs[i - 1]:
                    raise SolverError("x not increasing within a segment")
            if prev is not None:
                if abs(seg.xs[0] - prev[0]) > gap_tol or abs(seg.ys[0] - prev[1]) > gap_tol:
                    raise SolverError(
                        f"segments do not abut at x={seg.xs[0]} (gap "
                        f"{abs(seg.ys[0] - prev[1]):.2e})"
                    )
            prev = (seg.xs[-1], seg.ys[-1])

    @property
    def x_end(self) -> float:
        return self.segments[-1].xs[-1] if self.segments else math.nan

    def rows(self):
        """Flat (x, y, mode, branch, event) rows for CSV emission."""
        ev = {round(e.x, 12): e.kind for e in self.events}
        for seg in self.segments:
            for x, y in zip(seg.xs, seg.ys):
                yield x, y, seg.mode.value, seg.branch, ev.get(round(x, 12), "")
