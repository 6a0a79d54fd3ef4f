"""Crossing-to-crossing maps and the non-sliding period-4 orbit (linear model).

The next threshold contact after a departure at (x_i, 0) is the first positive
zero of the crossing function h.  h has a trivial zero at 0 (double when the
departure is tangent), so the solver never probes near 0: it walks a grid
whose step resolves both the oscillation (1/(8w)) and the decay (1/(4a)),
with the explicit h0/hinf lattice zeros inserted as mandatory probes, then
polishes the first sign change with a bracketed root finder.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .core import (
    DomainError,
    NoOrbitError,
    OscillatorParams,
    Region,
    SolverError,
    classify_threshold_point,
    cospi,
    sinpi,
)
from .analytic_flow import h, h_dxbar, h0_zero_iter, hinf_zero_iter

GRAZING_DERIV_TOL = 1e-8
BRACKET_WIDTH = 1e-13

#: Window of crossing departures into S_- for the composite map (mod 4).
I_MINUS = (0.0, 2.0 / 3.0)


@dataclass
class PoincareResult:
    x_next: float
    residual: float
    bracket: tuple[float, float]
    iterations: int
    grazing_suspect: bool = False
    sign: int = 0
    x_start: float = math.nan

    @property
    def xbar(self) -> float:
        return self.x_next - self.x_start


def _departure_ok(sign: int, x_i: float, params: OscillatorParams) -> bool:
    """Field at (x_i, 0) permits leaving into S_sign (transversally or tangentially)."""
    w = params.omega(sign)
    dy = -sinpi(w * x_i)
    if abs(dy) <= 1e-12:
        # tangent departure: the curvature -w pi cos(w pi x_i) must bend into S_sign
        return sign * (-w * math.pi * cospi(w * x_i)) > 0.0
    return sign * dy > 0.0


def _probe_points(sign: int, x_i: float, params: OscillatorParams, horizon: float):
    """Sorted scan abscissae: uniform grid merged with the comparison-lattice zeros."""
    w = params.omega(sign)
    step = min(1.0 / (8.0 * w), 1.0 / (4.0 * params.a))
    uniform = itertools.takewhile(
        lambda t: t <= horizon, (k * step for k in itertools.count(1))
    )
    lattice = itertools.takewhile(
        lambda t: t <= horizon,
        itertools.chain(h0_zero_iter(sign, x_i, params), hinf_zero_iter(sign, x_i, params)),
    )
    pts = sorted(set(itertools.chain(uniform, lattice)))
    floor = min(step * 1e-3, 1e-4)
    return [t for t in pts if t > floor]


def next_crossing(sign: int, x_i: float, params: OscillatorParams,
                  tol: float = 1e-12, horizon: float | None = None) -> PoincareResult:
    """First return to y = 0 of the flow leaving (x_i, 0) into S_sign.

    Raises DomainError when the field at x_i does not allow that departure and
    SolverError when no sign change appears within the horizon (which cannot
    happen for a > 0 unless the horizon is set too small).
    """
    if sign not in (-1, 1):
        raise DomainError(f"sign must be +-1, got {sign}")
    if not _departure_ok(sign, x_i, params):
        raise DomainError(
            f"departure into S_{'+' if sign > 0 else '-'} at x={x_i} is inconsistent "
            "with the field direction"
        )
    w = params.omega(sign)
    if horizon is None:
        horizon = 6.0 / w
    f = lambda u: h(sign, u, x_i, params)
    prev_t = 0.0
    prev_sign = sign  # h carries the sign of y, which is `sign` until the first zero
    root = None
    iters = 0
    for t in _probe_points(sign, x_i, params, horizon):
        val = f(t)
        if val == 0.0:
            lo, hi = prev_t, t
            root = t
            break
        if (val > 0.0) != (prev_sign > 0):
            lo, hi = prev_t, t
            root, info = brentq(f, lo, hi, xtol=BRACKET_WIDTH / 2, full_output=True)
            iters = info.iterations
            break
        prev_t, prev_sign = t, 1 if val > 0.0 else -1
    if root is None:
        raise SolverError(
            f"no crossing located within horizon {horizon} from x_i={x_i} "
            f"(sign={sign}, a={params.a})"
        )
    residual = abs(f(root))
    if residual > tol:
        # bracket has collapsed below 1e-13; a residual above tol means the
        # slope is enormous, not that the root is wrong, but report it anyway
        raise SolverError(f"crossing residual {residual} exceeds tol {tol}")
    grazing = abs(h_dxbar(sign, root, x_i, params)) < GRAZING_DERIV_TOL
    return PoincareResult(
        x_next=x_i + root,
        residual=residual,
        bracket=(lo, hi),
        iterations=iters,
        grazing_suspect=grazing,
        sign=sign,
        x_start=x_i,
    )


def composite_map(x: float, a: float, params: OscillatorParams | None = None,
                  tol: float = 1e-12) -> float:
    """P(x, a) = P_+^a(P_-^a(x)) for departures x in I_- = (0, 2/3) mod 4."""
    p = params or OscillatorParams(a=a)
    if p.a != a:
        raise DomainError("params.a must match the map's a")
    frac = math.fmod(x, 4.0)
    if not I_MINUS[0] < frac < I_MINUS[1]:
        raise DomainError(f"composite map needs x in (0, 2/3) mod 4, got {x}")
    x1 = next_crossing(-1, x, p, tol=tol).x_next
    return next_crossing(+1, x1, p, tol=tol).x_next


def dP_da_at_zero(x0: float) -> float:
    """dP/da at a = 0 for departures in (0, 2/3); pole at 2/3 reported as -inf."""
    if not 0.0 < x0 <= 2.0 / 3.0:
        raise DomainError(f"x0 must lie in (0, 2/3], got {x0}")
    s3 = sinpi(1.5 * x0)
    s1 = sinpi(0.5 * x0)
    if s3 == 0.0 or abs(x0 - 2.0 / 3.0) < 1e-12:
        return -math.inf
    cot3 = cospi(1.5 * x0) / s3
    cot1 = cospi(0.5 * x0) / s1
    return (2.0 / math.pi) * (
        32.0 / (9.0 * math.pi) + (2.0 * x0 / 3.0) * cot3 + (4.0 - 2.0 * x0) * cot1
    )


def solve_x0() -> float:
    """Root of dP/da(., 0) in (1/2, 2/3): the a -> 0 limit of the fixed point."""
    return brentq(dP_da_at_zero, 0.5, 2.0 / 3.0 - 1e-12, xtol=1e-12)


def dP_dx(x: float, a: float, mode: str = "closed-form",
          params: OscillatorParams | None = None) -> float:
    """Derivative of the composite map.

    closed-form assumes x is a fixed point of P(x) - (x + 4) and uses the
    triple-angle reduction; finite-difference is a central difference with
    step 1e-6 and is valid anywhere in the domain.
    """
    p = params or OscillatorParams(a=a)
    if mode == "finite-difference":
        d = 1e-6
        return (composite_map(x + d, a, p) - composite_map(x - d, a, p)) / (2.0 * d)
    if mode != "closed-form":
        raise DomainError(f"unknown mode {mode!r}")
    pm = next_crossing(-1, x, p).x_next
    den = 3.0 - 4.0 * sinpi(x / 2.0) ** 2
    if abs(den) < 1e-9:
        raise SolverError(f"dP_dx denominator ~ 0 at x={x} (x near 2/3 mod 4)")
    num = 3.0 - 4.0 * sinpi(pm / 2.0) ** 2
    return (num / den) * math.exp(-4.0 * a)


def find_nonsliding_period4(a: float, tol: float = 1e-12,
                            params: OscillatorParams | None = None,
                            subdivisions: int = 64) -> tuple[float, float]:
    """Fixed point x* of P(x, a) - (x + 4) on (0, 2/3) and its multiplier.

    Brackets on `subdivisions` subintervals, then refines by bisection-backed
    root finding.  Raises NoOrbitError when no transversal fixed point exists
    (no sign change, or an intermediate contact falls outside a crossing
    region, which is how the orbit dies as `a` grows), SolverError on a
    numerical failure.
    """
    p = params or OscillatorParams(a=a)
    lo, hi = 1e-4, 2.0 / 3.0 - 1e-4
    delta = lambda x: composite_map(x, a, p, tol=tol) - (x + 4.0)
    xs = [lo + (hi - lo) * k / subdivisions for k in range(subdivisions + 1)]
    vals = []
    for x in xs:
        try:
            vals.append(delta(x))
        except (DomainError, SolverError):
            vals.append(math.nan)
    root = None
    for (x1, v1), (x2, v2) in zip(zip(xs, vals), zip(xs[1:], vals[1:])):
        if math.isnan(v1) or math.isnan(v2):
            continue
        if v1 == 0.0:
            root = x1
            break
        if (v1 > 0.0) != (v2 > 0.0):
            root = brentq(delta, x1, x2, xtol=1e-12)
            break
    if root is None:
        raise NoOrbitError(f"no non-sliding period-4 fixed point found for a={a}")
    mid = next_crossing(-1, root, p)
    for contact in (mid.x_next, composite_map(root, a, p)):
        if classify_threshold_point(contact) is not Region.CROSSING:
            raise NoOrbitError(
                f"fixed point candidate x={root} touches a non-crossing region at "
                f"x={contact}; the transversal orbit does not exist at a={a}"
            )
    multiplier = dP_dx(root, a, "closed-form", p)
    return root, multiplier
