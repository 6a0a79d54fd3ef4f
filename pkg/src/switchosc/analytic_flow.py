"""Closed-form half-plane solutions and the transcendental crossing functions.

In either half plane the flow from (x_i, 0) is an explicitly solvable damped
driven linear ODE.  Its zero set is governed by

    h(xbar, x_i) = exp(-a*xbar) sin(varphi(x_i)) - sin(w*pi*xbar + varphi(x_i)),

whose own zeros cannot be written down, but are sandwiched between the zeros
of the two explicit comparison functions h0 (drop the decay) and hinf (drop
the transient).  Those lattices drive bracketing in the Poincare module.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

from .core import DomainError, OscillatorParams, cospi, sinpi


def flow_scale(sign: int, params: OscillatorParams) -> float:
    """sqrt(w^2 pi^2 + a^2); h is the threshold-leaving solution times this."""
    w = params.omega(sign)
    return math.hypot(w * math.pi, params.a)


@dataclass(frozen=True)
class PhaseConstants:
    """phi+- = arctan(w+- pi / a), the phase lag of the particular solution."""

    phi_plus: float
    phi_minus: float

    def phi(self, sign: int) -> float:
        return self.phi_plus if sign > 0 else self.phi_minus


def phase_constants(params: OscillatorParams) -> PhaseConstants:
    a = params.a
    return PhaseConstants(
        phi_plus=math.atan2(params.omega_plus * math.pi, a),
        phi_minus=math.atan2(params.omega_minus * math.pi, a),
    )


def varphi_over_pi(sign: int, x_i: float, params: OscillatorParams) -> float:
    """(w*pi*x_i - phi)/pi reduced mod 2, so trig of it stays exact at large x."""
    w = params.omega(sign)
    phi = phase_constants(params).phi(sign)
    return math.fmod(w * x_i, 2.0) - phi / math.pi


def particular_solution(sign: int, x: float, params: OscillatorParams) -> float:
    """Steady-state response y_p(x) = [w pi cos(w pi x) - a sin(w pi x)] / (w^2 pi^2 + a^2)."""
    w = params.omega(sign)
    a = params.a
    return (w * math.pi * cospi(w * x) - a * sinpi(w * x)) / (
        (w * math.pi) ** 2 + a**2
    )


def flow_from(sign: int, x: float, x0: float, y0: float,
              params: OscillatorParams) -> float:
    """General half-plane solution through (x0, y0), valid while it stays in S_sign."""
    yp = particular_solution(sign, x, params)
    yp0 = particular_solution(sign, x0, params)
    return yp + math.exp(-params.a * (x - x0)) * (y0 - yp0)


def flow_from_deriv(sign: int, x: float, x0: float, y0: float,
                    params: OscillatorParams) -> float:
    """dy/dx of the general half-plane solution (equals -a y - sin(w pi x))."""
    return -params.a * flow_from(sign, x, x0, y0, params) - sinpi(
        params.omega(sign) * x
    )


def flow_solution(sign: int, x: float, x_i: float, params: OscillatorParams) -> float:
    """Y_+-(x, x_i): the half-plane solution leaving the threshold at (x_i, 0).

    Evaluated in the phase-shifted form, which avoids cancellation between
    large-x sines and makes Y exactly h / flow_scale.
    """
    if x < x_i:
        raise DomainError(f"flow is evaluated forward only (x={x} < x_i={x_i})")
    return h(sign, x - x_i, x_i, params) / flow_scale(sign, params)


def h(sign: int, xbar: float, x_i: float, params: OscillatorParams) -> float:
    """Crossing function; its first positive zero is the next threshold contact."""
    if xbar < 0.0:
        raise DomainError(f"xbar must be >= 0, got {xbar}")
    w = params.omega(sign)
    vq = varphi_over_pi(sign, x_i, params)
    return math.exp(-params.a * xbar) * sinpi(vq) - sinpi(w * xbar + vq)


def h_dxbar(sign: int, xbar: float, x_i: float, params: OscillatorParams) -> float:
    """dh/dxbar, used for grazing detection at located roots."""
    w = params.omega(sign)
    vq = varphi_over_pi(sign, x_i, params)
    return -params.a * math.exp(-params.a * xbar) * sinpi(vq) - w * math.pi * cospi(
        w * xbar + vq
    )


def _arithmetic(start: float, step: float):
    """Nonnegative arithmetic progression start + k*step, k >= 0, shifted into xbar >= 0."""
    if step <= 0:
        raise ValueError("step must be positive")
    k0 = 0 if start >= 0 else math.ceil(-start / step)
    for k in itertools.count(k0):
        v = start + k * step
        if v >= 0.0:
            yield v


def h0_zero_iter(sign: int, x_i: float, params: OscillatorParams):
    """Sorted nonnegative zeros of h0 = sin(varphi) - sin(w pi xbar + varphi).

    Two interleaved lattices: xbar = 2n/w, and xbar = (2n+1)/w + 2 phi/(w pi) - 2 x_i.
    Lazy merge so bracket scans can look arbitrarily far ahead.
    """
    w = params.omega(sign)
    phi = phase_constants(params).phi(sign)
    fam_a = _arithmetic(0.0, 2.0 / w)
    start_b = 1.0 / w + 2.0 * phi / (w * math.pi) - 2.0 * math.fmod(x_i, 2.0 / w)
    fam_b = _arithmetic(start_b, 2.0 / w)
    return heapq.merge(fam_a, fam_b)


def hinf_zero_iter(sign: int, x_i: float, params: OscillatorParams):
    """Sorted nonnegative zeros of hinf = -sin(w pi xbar + varphi): one lattice of pitch 1/w."""
    w = params.omega(sign)
    phi = phase_constants(params).phi(sign)
    start = phi / (w * math.pi) - math.fmod(x_i, 1.0 / w)
    return _arithmetic(start, 1.0 / w)


def h0_zeros(sign: int, x_i: float, params: OscillatorParams, count: int) -> list[float]:
    if count < 1:
        raise DomainError("count must be >= 1")
    return list(itertools.islice(h0_zero_iter(sign, x_i, params), count))


def hinf_zeros(sign: int, x_i: float, params: OscillatorParams, count: int) -> list[float]:
    if count < 1:
        raise DomainError("count must be >= 1")
    return list(itertools.islice(hinf_zero_iter(sign, x_i, params), count))


def p0_map(sign: int, x_i: float, params: OscillatorParams | None = None) -> float:
    """Undamped (a = 0) crossing map: (2/w)(1 + floor(w x_i)) - x_i."""
    w = (params or OscillatorParams(a=1.0)).omega(sign)
    return (2.0 / w) * (1.0 + math.floor(w * x_i)) - x_i
