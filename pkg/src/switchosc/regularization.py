"""Switching-layer dynamics for epsilon > 0.

The threshold is blown up into the strip |v| <= 1, v = y/epsilon, where the
multiplier sign(y) is replaced by a smooth monotone transition psi(v).  Inside
the strip the dynamics is the stiff scalar ODE

    dv/dx = (-a eps v - f_i(x, psi(v))) / eps,

integrated with an error-controlled implicit scheme and exact event location
on |v| = 1; outside it psi is saturated, so the exterior flow is the closed
form of the half-plane system and no numerical integration is used there.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import (
    DomainError,
    NoOrbitError,
    OscillatorParams,
    SolverError,
    SwitchingModel,
    Trajectory,
    TrajectoryEvent,
    TrajectorySegment,
    Mode,
    forcing,
    forcing_dlam,
    sinpi,
)
from .analytic_flow import flow_from, flow_from_deriv
from .sliding import SlidingBranch, _linear_branch, _nonlinear_branch

_NUDGE = 1e-12


def capture_threshold(epsilon: float) -> float:
    """Layer spans beyond this indicate slow-manifold capture, not a transit.

    Transversal transits cost O(eps) in x (an order of magnitude at most for
    the fields here); captured segments ride a branch for O(1).
    """
    return max(25.0 * epsilon, 0.02)


class CaptureError(SolverError):
    """A layer transit was captured by a slow manifold where that is not allowed."""


# ---------------------------------------------------------------------------
# transition functions


@dataclass(frozen=True)
class TransitionFunction:
    """Smooth monotone switch profile psi on [-1, 1] with psi(+-1) = +-1."""

    name: str
    psi: callable
    psi_prime: callable
    psi_second: callable

    def inverse(self, lam: float, tol: float = 1e-13) -> float:
        """Monotone inverse by a safeguarded Newton/bisection hybrid.

        Newton from a bisection-maintained bracket; psi' -> 0 at +-1 makes a
        pure Newton iteration fragile exactly where branch endpoints live.
        """
        if not -1.0 <= lam <= 1.0:
            raise DomainError(f"psi inverse needs lambda in [-1, 1], got {lam}")
        lo, hi = -1.0, 1.0
        v = lam  # decent seed for any odd-ish profile
        for _ in range(200):
            err = self.psi(v) - lam
            if abs(err) < tol:
                return v
            if err > 0.0:
                hi = v
            else:
                lo = v
            dp = self.psi_prime(v)
            v_newton = v - err / dp if dp > 0.0 else None
            v = v_newton if v_newton is not None and lo < v_newton < hi else 0.5 * (lo + hi)
        raise SolverError(f"psi inverse did not converge for lambda={lam}")

    def validate(self, samples: int = 2001) -> None:
        """Property suite: boundary values, interior monotonicity, edge curvature."""
        if abs(self.psi(1.0) - 1.0) > 1e-12 or abs(self.psi(-1.0) + 1.0) > 1e-12:
            raise DomainError(f"psi({self.name}) must satisfy psi(+-1) = +-1")
        for i in range(1, samples - 1):
            v = -1.0 + 2.0 * i / (samples - 1)
            if not self.psi_prime(v) > 0.0:
                raise DomainError(f"psi'({v}) <= 0: transition not monotone")
        if not self.psi_second(1.0) < 0.0 or not self.psi_second(-1.0) > 0.0:
            raise DomainError("sign(psi'') at +-1 must be -+ (fold curvature)")


def cubic_transition() -> TransitionFunction:
    """The cubic profile v (3 - v^2) / 2, the paper's concrete instance."""
    return TransitionFunction(
        name="cubic",
        psi=lambda v: 0.5 * v * (3.0 - v * v),
        psi_prime=lambda v: 1.5 * (1.0 - v * v),
        psi_second=lambda v: -3.0 * v,
    )


_TRANSITIONS = {"cubic": cubic_transition}


def get_transition(params: OscillatorParams) -> TransitionFunction:
    try:
        tf = _TRANSITIONS[params.psi]()
    except KeyError:
        raise DomainError(f"unknown transition function {params.psi!r}") from None
    return tf


def register_transition(name: str, tf: TransitionFunction) -> None:
    """Register a user profile; the property suite runs at registration time."""
    tf.validate()
    _TRANSITIONS[name] = lambda: tf


# ---------------------------------------------------------------------------
# layer geometry


@dataclass(frozen=True)
class LayerState:
    x: float
    v: float


def layer_field(model: SwitchingModel, params: OscillatorParams,
                state: LayerState,
                tf: TransitionFunction | None = None) -> tuple[float, float]:
    """(dx, dv) inside the layer; epsilon = 0 is rejected."""
    if params.epsilon <= 0.0:
        raise DomainError("layer_field needs epsilon > 0")
    tf = tf or get_transition(params)
    e = params.epsilon
    lam = tf.psi(state.v)
    return 1.0, (-params.a * e * state.v - forcing(model, state.x, lam, params)) / e


@dataclass(frozen=True)
class CriticalBranchReg:
    """Graph v0(x) of one critical-manifold branch inside the layer."""

    model: SwitchingModel
    index: int
    domain: tuple[float, float]
    stability: str

    def v0(self, x: float, params: OscillatorParams) -> float:
        return critical_branch(self.model, self.index, x, params)


def critical_branch_info(model: SwitchingModel, index: int) -> CriticalBranchReg:
    b: SlidingBranch = (_linear_branch(index) if model is SwitchingModel.LINEAR
                        else _nonlinear_branch(index))
    return CriticalBranchReg(model=model, index=index, domain=b.domain,
                             stability=b.stability)


def critical_branch(model: SwitchingModel, index: int, x: float,
                    params: OscillatorParams,
                    tf: TransitionFunction | None = None) -> float:
    """v0 with psi(v0) = branch lambda(x); the layer image of a sliding branch."""
    tf = tf or get_transition(params)
    b = _linear_branch(index) if model is SwitchingModel.LINEAR else _nonlinear_branch(index)
    return tf.inverse(b.lambda_of(x))


def fold_points(sign: int, n: int, params: OscillatorParams) -> float:
    """x at which the layer boundary v = sign*1 is tangent to the field.

    x^+-_(eps,n) = x_n^+- +- (-1)^(n+1) arcsin(a eps) / (pi w+-) with
    x_n^+ = 2n/3, x_n^- = 2n; requires a*eps < 1.
    """
    if sign not in (-1, 1):
        raise DomainError("sign must be +-1")
    if not params.a * params.epsilon < 1.0:
        raise DomainError("fold points need a*eps < 1")
    w = params.omega(sign)
    base = 2.0 * n / 3.0 if sign > 0 else 2.0 * n
    shift = ((-1) ** (n + 1)) * math.asin(params.a * params.epsilon) / (math.pi * w)
    return base + (shift if sign > 0 else -shift)


# ---------------------------------------------------------------------------
# the regularized hybrid engine


@dataclass
class RegSegment:
    kind: str            # "layer" | "ext"
    side: int            # exterior half-plane sign; 0 for layer
    x0: float
    x1: float
    _eval: callable

    def eval(self, x: float) -> float:
        return self._eval(x)


@dataclass
class RegTrajectory:
    """Piecewise trajectory in (x, v): stiff layer arcs plus analytic exteriors."""

    params: OscillatorParams
    model: SwitchingModel
    segments: list[RegSegment] = field(default_factory=list)
    events: list[TrajectoryEvent] = field(default_factory=list)
    section_x: float | None = None  # where a requested section stop fired
    log_sensitivity: float | None = None

    def eval(self, xq) -> np.ndarray:
        """v(x) on query points inside the simulated range."""
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        starts = [s.x0 for s in self.segments]
        out = np.empty(xq.shape)
        for i, x in enumerate(xq):
            j = min(max(bisect_right(starts, x) - 1, 0), len(self.segments) - 1)
            s = self.segments[j]
            out[i] = s.eval(min(max(x, s.x0), s.x1))
        return out

    @property
    def x_start(self) -> float:
        return self.segments[0].x0

    @property
    def x_end(self) -> float:
        return self.segments[-1].x1

    def layer_spans(self) -> list[tuple[float, float]]:
        return [(s.x0, s.x1) for s in self.segments if s.kind == "layer"]

    def captured_spans(self, threshold: float | None = None) -> list[tuple[float, float]]:
        if threshold is None:
            threshold = capture_threshold(self.params.epsilon)
        return [sp for sp in self.layer_spans() if sp[1] - sp[0] > threshold]

    def to_trajectory(self, samples_per_unit: int = 200) -> Trajectory:
        """Sampled core Trajectory (v units) for CSV/plot emission."""
        traj = Trajectory(events=list(self.events))
        for s in self.segments:
            n = max(8, int(round((s.x1 - s.x0) * samples_per_unit)))
            xs = [s.x0 + (s.x1 - s.x0) * i / n for i in range(n + 1)]
            ys = [s.eval(x) for x in xs]
            mode = Mode.LAYER if s.kind == "layer" else (
                Mode.FLOW_PLUS if s.side > 0 else Mode.FLOW_MINUS)
            traj.segments.append(TrajectorySegment(mode=mode, xs=xs, ys=ys))
        return traj


def _ext_return(side: int, x0: float, v0: float, params: OscillatorParams) -> float:
    """Next x > x0 where the exterior flow from (x0, eps*v0) re-reaches y = side*eps."""
    w = params.omega(side)
    a = params.a
    e = params.epsilon
    y0 = e * v0
    target = side * e
    g = lambda x: flow_from(side, x, x0, y0, params) - target
    step = min(1.0 / (8.0 * w), 1.0 / (4.0 * a))
    amp = 1.0 / math.hypot(w * math.pi, a)
    horizon = x0 + 8.0 / w + (math.log(max(abs(y0) / amp, 1.0)) / a if a > 0 else 0.0)
    t, gp = x0 + step, g(x0 + step)
    if gp == 0.0:
        return t
    t2 = t
    while t2 < horizon:
        t2 = t + step
        g2 = g(t2)
        if (g2 > 0.0) != (gp > 0.0):
            return brentq(g, t, t2, xtol=1e-14)
        t, gp = t2, g2
    raise SolverError(f"no exterior return to the layer from ({x0}, v={v0})")


def simulate_regularized(model: SwitchingModel, params: OscillatorParams,
                         x0: float, v0: float, x_end: float,
                         rtol: float = 1e-10, atol: float = 1e-12,
                         stop_at_downward_v0_after: float | None = None,
                         with_sensitivity: bool = False,
                         max_step: float | None = None) -> RegTrajectory:
    """Full regularized trajectory from (x0, v0) to x_end.

    Alternates stiff layer integration (Radau, analytic Jacobian, terminal
    events on |v| = 1) with closed-form exterior arcs.  When
    ``stop_at_downward_v0_after`` is set, the run terminates at the first
    downward v = 0 crossing past that abscissa (the Poincare section used by
    the regularized return map).  ``with_sensitivity`` co-integrates
    J = d/dv (dv/dx) along the path, yielding the log-derivative of the flow
    map for contraction estimates.
    """
    if params.epsilon <= 0.0:
        raise DomainError("regularized simulation needs epsilon > 0")
    tf = get_transition(params)
    e = params.epsilon
    a = params.a
    traj = RegTrajectory(params=params, model=model)
    log_sens = 0.0

    def layer_rate(x, v):
        return (-a * e * v - forcing(model, x, _clip(tf.psi(v)), params)) / e

    def layer_rate_dv(x, v):
        return (-a * e - forcing_dlam(model, x, _clip(tf.psi(v)), params)
                * tf.psi_prime(v)) / e

    def rhs(x, yv):
        dv = layer_rate(x, yv[0])
        if with_sensitivity:
            return [dv, layer_rate_dv(x, yv[0])]
        return [dv]

    def jac(x, yv):
        d = layer_rate_dv(x, yv[0])
        return [[d, 0.0], [0.0, 0.0]] if with_sensitivity else [[d]]

    hit_up = lambda x, yv: yv[0] - 1.0
    hit_up.terminal, hit_up.direction = True, +1
    hit_dn = lambda x, yv: yv[0] + 1.0
    hit_dn.terminal, hit_dn.direction = True, -1
    mid = lambda x, yv: yv[0]
    mid.terminal, mid.direction = True, -1

    x, v = x0, v0
    mode = "layer" if abs(v) <= 1.0 else "ext"
    side = 0 if mode == "layer" else (1 if v > 0 else -1)
    for _guard in range(6000):
        if x >= x_end:
            break
        if mode == "layer":
            v_in = min(max(v, -1.0 + _NUDGE), 1.0 - _NUDGE)
            y_init = [v_in, 0.0] if with_sensitivity else [v_in]
            events = [hit_up, hit_dn] + ([mid] if stop_at_downward_v0_after is not None else [])
            sol = solve_ivp(rhs, (x, x_end), y_init, method="Radau", jac=jac,
                            rtol=rtol, atol=atol, events=events,
                            dense_output=True, max_step=max_step or np.inf)
            if sol.status < 0:
                raise SolverError(f"layer integration failed at x={sol.t[-1]}: {sol.message}")
            x1 = sol.t[-1]
            traj.segments.append(RegSegment(
                kind="layer", side=0, x0=x, x1=x1,
                _eval=(lambda s: (lambda q: float(s(q)[0])))(sol.sol)))
            if sol.status == 1:
                # section-map log-derivative: rate-in/rate-out factors plus
                # the integrated dF/dv along the arc
                if stop_at_downward_v0_after is not None and len(sol.t_events[2]):
                    xc = float(sol.t_events[2][0])
                    if with_sensitivity:
                        log_sens += (float(sol.y_events[2][0][1])
                                     + math.log(abs(layer_rate(x, v_in)))
                                     - math.log(abs(layer_rate(xc, 0.0))))
                    if xc > stop_at_downward_v0_after:
                        traj.section_x = xc
                        break
                    x, v = xc, -_NUDGE
                    continue
                if len(sol.t_events[0]):
                    xe, ve, side = float(sol.t_events[0][0]), 1.0, +1
                    j_end = float(sol.y_events[0][0][1]) if with_sensitivity else 0.0
                else:
                    xe, ve, side = float(sol.t_events[1][0]), -1.0, -1
                    j_end = float(sol.y_events[1][0][1]) if with_sensitivity else 0.0
                if with_sensitivity:
                    log_sens += (j_end + math.log(abs(layer_rate(x, v_in)))
                                 - math.log(abs(layer_rate(xe, ve))))
                x, v = xe, ve
                traj.events.append(TrajectoryEvent(x=x, kind="layer-exit", branch=side))
                mode = "ext"
            else:
                x = x1
        else:
            xr = _ext_return(side, x, v, params)
            seg_end = min(xr, x_end)
            traj.segments.append(RegSegment(
                kind="ext", side=side, x0=x, x1=seg_end,
                _eval=(lambda s_, xa, va: (lambda q: flow_from(
                    s_, q, xa, e * va, params) / e))(side, x, v)))
            if with_sensitivity and xr <= x_end:
                r_out = abs(flow_from_deriv(side, x, x, e * v, params))
                r_in = abs(flow_from_deriv(side, xr, x, e * v, params))
                log_sens += math.log(r_out) - math.log(r_in) - a * (xr - x)
            if xr > x_end:
                x = x_end
                break
            traj.events.append(TrajectoryEvent(x=xr, kind="layer-entry", branch=side))
            x, v, mode = xr, float(side), "layer"
    else:
        raise SolverError("regularized event budget exhausted")
    if with_sensitivity:
        traj.log_sensitivity = log_sens
    return traj


def _clip(lam: float) -> float:
    return -1.0 if lam < -1.0 else (1.0 if lam > 1.0 else lam)


def integrate_layer(model: SwitchingModel, params: OscillatorParams,
                    initial: "LayerState | tuple[float, float]", x_end: float,
                    tol: float = 1e-10) -> RegTrajectory:
    """Spec-facing wrapper: trajectory through the layer with exterior concatenation."""
    if isinstance(initial, LayerState):
        x0, v0 = initial.x, initial.v
    else:
        x0, v0 = initial
    return simulate_regularized(model, params, x0, v0, x_end,
                                rtol=tol, atol=tol * 1e-2)


# ---------------------------------------------------------------------------
# slow manifolds, exit points, scaling fits (nonlinear model)


def slow_manifold_expansion(n: int, x: float, params: OscillatorParams,
                            guard: float = 0.1) -> dict:
    """First-order slow manifold of the attracting branch 2n: v0 + eps*v1.

    v1 = (-1)^(2n+1) * 2 (v0' + a v0) / (pi x psi'(v0)) = -2(v0' + a v0)/(pi x psi'),
    with v0' = lambda'(x)/psi'(v0) computed analytically.  Valid away from the
    folds: psi'(v0) > ``guard`` is enforced.
    """
    tf = get_transition(params)
    nu = 2 * n
    b = _nonlinear_branch(nu)
    v0 = tf.inverse(b.lambda_of(x))
    sp = tf.psi_prime(v0)
    if not sp > guard:
        raise DomainError(f"fold proximity: psi'(v0)={sp} <= guard {guard} at x={x}")
    v0p = b.lambda_prime(x) / sp
    v1 = -2.0 * (v0p + params.a * v0) / (math.pi * x * sp)
    return {"v0": v0, "v1": v1,
            "v_first_order": v0 + params.epsilon * v1,
            "v0_prime": v0p}


@dataclass
class ExitMeasurement:
    n: int
    x_e: float
    fold_x: float
    delay: float
    trajectory: RegTrajectory


def capture_start(n: int, params: OscillatorParams,
                  offset_frac: float = 0.25) -> tuple[float, float]:
    """A start state just above the attracting branch 2n, inside its basin.

    The basin ceiling is the adjacent repelling branch, a lambda-gap of 2/x
    away (ageing packs branches ~1/n apart), so the offset scales with it.
    """
    tf = get_transition(params)
    nu = 2 * n
    xs = float(nu)  # lambda = 0 there; mid-branch
    v0 = tf.inverse(_nonlinear_branch(nu).lambda_of(xs))
    gap = (2.0 / xs) / tf.psi_prime(v0)
    return xs, v0 + offset_frac * gap


def measure_exit_point(n: int, params: OscillatorParams,
                       rtol: float = 1e-10, atol: float = 1e-12,
                       start: tuple[float, float] | None = None) -> ExitMeasurement:
    """Layer exit point x_e of a trajectory captured on the attracting branch 2n.

    Integrates from the first-order slow manifold at x = 3n (well inside the
    branch) to the v = -1 exit event; the delay past the boundary fold
    x^-_(eps,2n) is the Riccati-scaling observable (expected (eps^2/n)^(1/3)).
    """
    nu = 2 * n
    if start is None:
        xs = 1.5 * nu
        sm = slow_manifold_expansion(n, xs, params)
        vs = sm["v_first_order"]
    else:
        xs, vs = start
    traj = simulate_regularized(SwitchingModel.NONLINEAR, params, xs, vs,
                                x_end=2.0 * nu + 1.0, rtol=rtol, atol=atol)
    exits = [ev.x for ev in traj.events if ev.kind == "layer-exit" and ev.branch == -1]
    if not exits:
        raise SolverError(f"trajectory was not captured/did not exit for n={n}")
    fold = fold_points(-1, nu, params)
    if not exits[0] > fold:
        raise SolverError(f"exit {exits[0]} not past the fold {fold}; not captured")
    return ExitMeasurement(n=n, x_e=exits[0], fold_x=fold,
                           delay=exits[0] - fold, trajectory=traj)


@dataclass
class ScalingFit:
    """Log-log regression of a power law; r_squared is reported, never assumed."""

    exponent: float
    intercept: float
    r_squared: float
    samples: list[tuple[float, float]]

    @property
    def decades(self) -> float:
        xs = [s[0] for s in self.samples]
        return math.log10(max(xs) / min(xs))


def fit_power_law(samples: list[tuple[float, float]],
                  min_samples: int = 4, min_decades: float = 0.0) -> ScalingFit:
    if len(samples) < min_samples:
        raise DomainError(f"need >= {min_samples} samples, got {len(samples)}")
    lx = np.log([s[0] for s in samples])
    ly = np.log([s[1] for s in samples])
    if (lx.max() - lx.min()) / math.log(10.0) < min_decades - 1e-9:
        raise DomainError(
            f"samples span {(lx.max() - lx.min()) / math.log(10):.2f} decades, "
            f"need >= {min_decades}")
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(exponent=float(slope), intercept=float(intercept),
                      r_squared=r2, samples=list(samples))


def exit_scaling_fit(a: float, eps_grid: list[float], n_fixed: int,
                     n_grid: list[int], eps_fixed: float,
                     rtol: float = 1e-10) -> tuple[ScalingFit, ScalingFit]:
    """Exit-delay scaling in eps (fixed n) and in n (fixed eps).

    Expected exponents 2/3 and -1/3.  The smallest branches (n < 3) and large
    a*eps (> 0.01) sit outside the asymptotic regime and are excluded.
    """
    eps_samples = []
    for eps in sorted(eps_grid):
        if a * eps > 0.01:
            continue
        m = measure_exit_point(n_fixed, OscillatorParams(a=a, epsilon=eps), rtol=rtol)
        eps_samples.append((eps, m.delay))
    n_samples = []
    for n in sorted(n_grid):
        if n < 3:
            continue
        m = measure_exit_point(n, OscillatorParams(a=a, epsilon=eps_fixed), rtol=rtol)
        n_samples.append((float(n), m.delay))
    fit_eps = fit_power_law(eps_samples, min_samples=4, min_decades=2.0)
    fit_n = fit_power_law(n_samples, min_samples=4)
    return fit_eps, fit_n


# ---------------------------------------------------------------------------
# boundary return map and the regularized linear maps


def boundary_return_map(sign: int, x_start: float, params: OscillatorParams) -> float:
    """Next intersection with v = sign*1 of the exterior flow leaving x_start.

    The start must have an outward field (sign * dv/dx >= 0 at the boundary);
    fold points themselves, where the field is tangent, are accepted as the
    canonical departure states.
    """
    e = params.epsilon
    if e <= 0.0:
        raise DomainError("boundary_return_map needs epsilon > 0")
    dv = -params.a * e * sign - sinpi(params.omega(sign) * x_start)
    if sign * dv < -1e-9:
        raise DomainError(f"field at ({x_start}, v={sign}) points into the layer")
    return _ext_return(sign, x_start, float(sign), params)


def regularized_poincare_linear(x: float, params: OscillatorParams,
                                rtol: float = 1e-11, atol: float = 1e-13,
                                allow_capture: bool = False) -> float:
    """P_eps(x): return map of the regularized linear system on {v = 0, downward}.

    Follows the full hybrid trajectory (layer transits plus exterior arcs)
    until the next downward v = 0 crossing.  Without ``allow_capture`` a layer
    transit longer than CAPTURE_SPAN raises CaptureError: the orbit left the
    non-sliding regime.
    """
    if params.epsilon <= 0.0:
        raise DomainError("regularized map needs epsilon > 0")
    traj = simulate_regularized(SwitchingModel.LINEAR, params, x, 0.0,
                                x_end=x + 12.0, rtol=rtol, atol=atol,
                                stop_at_downward_v0_after=x + 0.5)
    if traj.section_x is None:
        raise SolverError(f"P_eps: no section return from x={x}")
    if not allow_capture and traj.captured_spans():
        raise CaptureError(
            f"layer capture at {traj.captured_spans()}; non-sliding regime violated")

    return traj.section_x


def regularized_fixed_point(params: OscillatorParams, bracket: tuple[float, float],
                            rtol: float = 1e-11, allow_capture: bool = False,
                            xtol: float = 1e-12) -> float:
    """Fixed point of P_eps(x) - (x + 4) inside ``bracket``.

    The return map stays total when an iterate brushes a sliding branch, so
    bracketing tolerates capture; without ``allow_capture`` the orbit at the
    located fixed point is then required to be capture-free (the non-sliding
    regime check applies to the orbit, not to probe points).
    """
    g = lambda x: regularized_poincare_linear(
        x, params, rtol=rtol, allow_capture=True) - (x + 4.0)
    fp = brentq(g, bracket[0], bracket[1], xtol=xtol)
    if not allow_capture:
        regularized_poincare_linear(fp, params, rtol=rtol, allow_capture=False)
    return fp


@dataclass
class RegSlidingOrbit:
    fixed_point: float
    trajectory: RegTrajectory
    contraction_fd: float
    log_contraction: float
    sliding_span: tuple[float, float]


def find_regularized_sliding_orbit_linear(a: float, params: OscillatorParams,
                                          fd_step: float = 1e-4,
                                          rtol: float = 1e-11) -> RegSlidingOrbit:
    """Regularized sliding period-4 orbit of the linear model (large-a regime).

    Locates the fixed point of P_eps, verifies the orbit carries a captured
    layer segment (the slide along the attracting critical branch), and
    measures its contraction two ways: the spec's central finite difference
    of P_eps (which underflows once the contraction drops below double
    precision; values then read 0) and the variational log-derivative
    accumulated along the orbit, which resolves the exponential smallness.
    """
    if params.a != a:
        raise DomainError("params.a must equal a")
    fp = regularized_fixed_point(params, (0.02, 0.64), rtol=rtol, allow_capture=True)
    orbit = simulate_regularized(SwitchingModel.LINEAR, params, fp, 0.0,
                                 x_end=fp + 12.0, rtol=rtol, atol=rtol * 1e-2,
                                 stop_at_downward_v0_after=fp + 0.5,
                                 with_sensitivity=True)
    captured = orbit.captured_spans()
    if not captured:
        raise NoOrbitError(
            f"no sliding (captured) segment on the orbit at a={a}, "
            f"eps={params.epsilon}: not in the sliding regime")
    pp = regularized_poincare_linear(fp + fd_step, params, rtol=rtol, allow_capture=True)
    pm = regularized_poincare_linear(fp - fd_step, params, rtol=rtol, allow_capture=True)
    return RegSlidingOrbit(
        fixed_point=fp,
        trajectory=orbit,
        contraction_fd=abs(pp - pm) / (2.0 * fd_step),
        log_contraction=orbit.log_sensitivity,
        sliding_span=captured[0],
    )


# ---------------------------------------------------------------------------
# the asymptotic periodic object v_r (nonlinear model)


@dataclass
class VrReference:
    """One 4-window of the asymptotic periodic object.

    Piece 1 is the exterior dip v_-(x) from the fold (x^-_(eps,2n), -1);
    piece 2 clamps to -1 until the window ends at x^-_(eps,2n+2).
    """

    n: int
    x_start: float
    x_reentry: float
    x_eps_a: float
    params: OscillatorParams

    def eval(self, xq) -> np.ndarray:
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        e = self.params.epsilon
        out = np.empty(xq.shape)
        for i, x in enumerate(xq):
            if x <= self.x_reentry:
                out[i] = flow_from(-1, max(x, self.x_start), self.x_start,
                                   -e, self.params) / e
            else:
                out[i] = -1.0
        return out


def v_r_reference(n: int, params: OscillatorParams) -> VrReference:
    if params.epsilon <= 0.0:
        raise DomainError("v_r needs epsilon > 0")
    xs = fold_points(-1, 2 * n, params)
    xr = _ext_return(-1, xs, -1.0, params)
    x_eps_a = xr - xs
    lo = 2.0 - 2.0 * math.asin(params.a * params.epsilon)
    if not lo < x_eps_a < 4.0:
        raise SolverError(f"x_eps_a={x_eps_a} outside ({lo}, 4)")
    return VrReference(n=n, x_start=xs, x_reentry=xr, x_eps_a=x_eps_a, params=params)


def convergence_to_vr(traj: RegTrajectory, n_lo: int, n_hi: int,
                      grid: int = 1200) -> list[dict]:
    """Per-window sup distance to v_r plus distinctness of consecutive windows."""
    params = traj.params
    rows = []
    for n in range(n_lo, n_hi + 1):
        vr = v_r_reference(n, params)
        xs = np.linspace(vr.x_start, vr.x_start + 4.0, grid)
        if xs[0] < traj.x_start or xs[-1] + 4.0 > traj.x_end:
            raise DomainError(
                f"trajectory [{traj.x_start}, {traj.x_end}] does not cover window n={n}")
        v = traj.eval(xs)
        rows.append({
            "n": n,
            "sup_distance": float(np.max(np.abs(v - vr.eval(xs)))),
            "consecutive_distance": float(np.max(np.abs(v - traj.eval(xs + 4.0)))),
        })
    return rows
