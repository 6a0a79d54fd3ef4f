import math

import numpy as np
import pytest
from scipy.optimize import brentq

from switchosc.analytic_flow import flow_solution
from switchosc.core import DomainError, OscillatorParams, SwitchingModel, forcing, sinpi
from switchosc.poincare import composite_map, find_nonsliding_period4, next_crossing
from switchosc.regularization import (
    CaptureError,
    LayerState,
    TransitionFunction,
    boundary_return_map,
    capture_start,
    convergence_to_vr,
    critical_branch,
    cubic_transition,
    exit_scaling_fit,
    find_regularized_sliding_orbit_linear,
    fit_power_law,
    fold_points,
    integrate_layer,
    layer_field,
    measure_exit_point,
    regularized_fixed_point,
    regularized_poincare_linear,
    simulate_regularized,
    slow_manifold_expansion,
    v_r_reference,
)
from switchosc.sliding import find_sliding_period4_nonlinear

LIN = SwitchingModel.LINEAR
NONLIN = SwitchingModel.NONLINEAR


def test_cubic_psi_properties_and_inverse():
    tf = cubic_transition()
    tf.validate()
    # inverse against plain bisection on the monotone cubic
    for lam in (-0.999, -0.5, 0.0, 0.5, 0.97):
        ref = brentq(lambda v: tf.psi(v) - lam, -1.0, 1.0, xtol=1e-15)
        assert tf.inverse(lam) == pytest.approx(ref, abs=1e-13)
    assert tf.inverse(1.0) == pytest.approx(1.0, abs=1e-7)


def test_bad_transition_rejected():
    bad = TransitionFunction(name="shrunk", psi=lambda v: 0.5 * v,
                             psi_prime=lambda v: 0.5, psi_second=lambda v: 0.0)
    with pytest.raises(DomainError):
        bad.validate()


def test_layer_field_values():
    p = OscillatorParams(a=0.7, epsilon=1e-3)
    # on a critical branch the forcing vanishes and dv = -a v0
    v0 = critical_branch(LIN, 1, 3.0, p)
    _, dv = layer_field(LIN, p, LayerState(x=3.0, v=v0))
    assert dv == pytest.approx(-p.a * v0, abs=1e-9)
    _, dv2 = layer_field(NONLIN, p, LayerState(x=2.0, v=0.0))
    assert dv2 == pytest.approx(0.0, abs=1e-12)
    # generic point agrees with the core forcing scaled by 1/eps
    tf = cubic_transition()
    st = LayerState(x=1.234, v=0.4)
    _, dv3 = layer_field(NONLIN, p, st)
    expected = (-p.a * p.epsilon * st.v - forcing(NONLIN, st.x, tf.psi(st.v))) / p.epsilon
    assert dv3 == pytest.approx(expected, rel=1e-12)
    with pytest.raises(DomainError):
        layer_field(LIN, OscillatorParams(a=1.0), LayerState(x=0.0, v=0.0))


def test_critical_branch_values():
    p = OscillatorParams(a=1.0, epsilon=1e-3)
    assert critical_branch(LIN, 1, 3.0, p) == pytest.approx(0.0, abs=1e-13)
    assert critical_branch(NONLIN, 2, 2.0, p) == pytest.approx(0.0, abs=1e-13)
    # psi(v0) = 0.5 at x = 0.8 on branch 1: bisection oracle on the cubic
    ref = brentq(lambda v: 0.5 * v * (3 - v * v) - 0.5, -1, 1, xtol=1e-15)
    assert critical_branch(NONLIN, 1, 0.8, p) == pytest.approx(ref, abs=1e-13)
    with pytest.raises(DomainError):
        critical_branch(NONLIN, 1, 2.5, p)


def test_fold_points_formula():
    # eps -> 0 limit is the tangency lattice
    p0 = OscillatorParams(a=0.01, epsilon=1e-12)
    assert fold_points(+1, 2, p0) == pytest.approx(4.0 / 3.0, abs=1e-9)
    assert fold_points(-1, 2, p0) == pytest.approx(4.0, abs=1e-9)
    # formula matches the bisection root of the boundary equation
    p = OscillatorParams(a=0.01, epsilon=0.0025)
    for sign, w in ((+1, 1.5), (-1, 0.5)):
        for n in (1, 2, 5):
            base = 2.0 * n / 3.0 if sign > 0 else 2.0 * n
            g = lambda x: -p.a * p.epsilon * sign - sinpi(w * x)
            ref = brentq(g, base - 0.2, base + 0.2, xtol=1e-15)
            assert fold_points(sign, n, p) == pytest.approx(ref, abs=1e-12)
    # offsets alternate with n through the (-1)^(n+1) factor
    d1 = fold_points(+1, 1, p) - 2.0 / 3.0
    d2 = fold_points(+1, 2, p) - 4.0 / 3.0
    assert d1 > 0.0 > d2
    # a*eps >= 1 is already rejected at parameter construction
    with pytest.raises(DomainError):
        OscillatorParams(a=1.2, epsilon=0.9)


def test_attracting_branch_capture_rate():
    # distance to the slow manifold decays exponentially at the linearized
    # fast rate |df/dv| / eps once the transient is in the linear regime
    p = OscillatorParams(a=0.01, epsilon=1e-3)
    tf = cubic_transition()
    n = 4
    x0, v_start = capture_start(n, p, offset_frac=0.1)
    traj = integrate_layer(NONLIN, p, (x0, v_start), x0 + 0.01, tol=1e-12)
    v0 = critical_branch(NONLIN, 2 * n, x0, p)
    rate = math.pi * x0 / 2.0 * tf.psi_prime(v0) / p.epsilon
    xs = np.linspace(x0 + 5e-5, x0 + 2.5e-4, 7)
    ref = np.array([slow_manifold_expansion(n, float(x), p)["v_first_order"]
                    for x in xs])
    d = np.abs(traj.eval(xs) - ref)
    slope = np.polyfit(xs, np.log(d), 1)[0]
    assert slope == pytest.approx(-rate, rel=0.35)


def test_slow_manifold_expansion_values():
    # near-zero damping: v1 = -2 v0' / (pi x psi'(v0)) with the chain-rule v0'
    p = OscillatorParams(a=1e-12, epsilon=1e-3)
    n = 5
    x = 2.0 * n
    sm = slow_manifold_expansion(n, x, p)
    assert sm["v0"] == pytest.approx(0.0, abs=1e-12)
    v0p = (-2.0 * (2 * n) / x**2) / 1.5
    assert sm["v0_prime"] == pytest.approx(v0p, rel=1e-9)
    assert sm["v1"] == pytest.approx(-2.0 * v0p / (math.pi * x * 1.5), rel=1e-9)
    # O(1/n) bound at branch centers
    pa = OscillatorParams(a=0.01, epsilon=1e-3)
    for n in range(2, 21):
        assert abs(slow_manifold_expansion(n, 2.0 * n, pa)["v1"]) <= 0.2 / n
    with pytest.raises(DomainError):
        slow_manifold_expansion(3, 12.0 - 1e-6, pa)  # fold proximity


def test_measured_trajectory_matches_first_order_expansion():
    # sup |v - v0| <= 2 eps |v1| inside the flat window, and the signed
    # deviation agrees with eps*v1
    p = OscillatorParams(a=0.01, epsilon=1e-3)
    n = 8
    x0, v_start = capture_start(n, p)
    traj = simulate_regularized(NONLIN, p, x0, v_start, 3.0 * n + 2.0,
                                rtol=1e-11, atol=1e-13)
    for x in np.linspace(7.0 * n / 3.0, 3.0 * n + 2.0, 50):
        sm = slow_manifold_expansion(n, float(x), p)
        v = float(traj.eval([x])[0])
        assert abs(v - sm["v0"]) <= 2.0 * p.epsilon * abs(sm["v1"])
        assert (v - sm["v0"]) * sm["v1"] > 0.0  # same side as the expansion


def test_exit_point_measurement_and_eps_limit():
    p = OscillatorParams(a=0.01, epsilon=1e-3)
    m = measure_exit_point(10, p)
    assert m.x_e > m.fold_x
    assert m.delay == pytest.approx((p.epsilon**2 / 10) ** (1.0 / 3.0), rel=0.65)
    # eps -> 0 at fixed n: x_e -> 4n
    delays = [measure_exit_point(5, OscillatorParams(a=0.01, epsilon=e)).x_e - 20.0
              for e in (1e-3, 1e-4, 1e-5)]
    assert delays[0] > delays[1] > delays[2] > 0.0


def test_fit_power_law_guards():
    with pytest.raises(DomainError):
        fit_power_law([(1.0, 1.0), (2.0, 2.0)])
    with pytest.raises(DomainError):
        fit_power_law([(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)],
                      min_decades=2.0)


def test_exit_scaling_fit_short_grid():
    fit_eps, fit_n = exit_scaling_fit(
        a=0.01, eps_grid=[1e-2, 1e-3, 3e-4, 1e-4], n_fixed=6,
        n_grid=[4, 6, 10, 16], eps_fixed=1e-3)
    assert fit_eps.exponent == pytest.approx(2.0 / 3.0, abs=0.07)
    assert fit_n.exponent == pytest.approx(-1.0 / 3.0, abs=0.07)
    assert fit_eps.r_squared > 0.98 and fit_n.r_squared > 0.98
    assert fit_eps.decades >= 2.0


def test_boundary_return_map_windows():
    p = OscillatorParams(a=1.0, epsilon=1e-3)
    r_plus = boundary_return_map(+1, fold_points(+1, 1, p), p)
    assert fold_points(+1, 2, p) < r_plus < fold_points(+1, 3, p)
    r_minus = boundary_return_map(-1, fold_points(-1, 0, p), p)
    assert fold_points(-1, 1, p) < r_minus < fold_points(-1, 2, p)
    with pytest.raises(DomainError):
        boundary_return_map(-1, 2.5, p)  # inward field at v = -1 there


def test_boundary_return_map_eps_limit_is_next_crossing():
    p = OscillatorParams(a=1.0, epsilon=1e-8)
    ref = next_crossing(-1, 0.0, OscillatorParams(a=1.0)).x_next
    assert boundary_return_map(-1, fold_points(-1, 0, p), p) == pytest.approx(
        ref, abs=1e-5)


def test_regularized_map_converges_to_discontinuous():
    a = 0.01
    x = 0.6
    pd = composite_map(x, a)
    gaps = []
    for eps in (4e-3, 2e-3, 1e-3):
        gaps.append(abs(regularized_poincare_linear(
            x, OscillatorParams(a=a, epsilon=eps)) - pd))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 4e-3 * 1.0  # O(eps) magnitude


def test_regularized_fixed_point_near_discontinuous():
    a = 0.01
    eps = 0.0025
    x_star, _ = find_nonsliding_period4(a)
    fp = regularized_fixed_point(OscillatorParams(a=a, epsilon=eps),
                                 (x_star - 0.08, x_star + 0.08))
    assert abs(fp - x_star) < 5.0 * eps
    # derivative of P_eps at the fixed point stays contracting
    d = 1e-5
    p = OscillatorParams(a=a, epsilon=eps)
    der = (regularized_poincare_linear(fp + d, p)
           - regularized_poincare_linear(fp - d, p)) / (2 * d)
    assert 0.0 < der < 1.0


def test_capture_reported_outside_nonsliding_regime():
    with pytest.raises(CaptureError):
        regularized_poincare_linear(0.3, OscillatorParams(a=2.0, epsilon=1e-3))
    with pytest.raises(CaptureError):
        regularized_poincare_linear(0.28, OscillatorParams(a=2.0, epsilon=1e-2))


def test_regularized_sliding_orbit_linear():
    a = 2.0
    orb = find_regularized_sliding_orbit_linear(a, OscillatorParams(a=a, epsilon=2.5e-3))
    # period-4 closure of the section map
    res = regularized_poincare_linear(orb.fixed_point,
                                      OscillatorParams(a=a, epsilon=2.5e-3),
                                      allow_capture=True)
    assert res == pytest.approx(orb.fixed_point + 4.0, abs=1e-8)
    assert orb.sliding_span[1] - orb.sliding_span[0] > 0.3
    assert orb.log_contraction < -40.0  # exponentially strong contraction
    assert orb.contraction_fd <= 1e-9


def test_vr_reference_properties():
    p = OscillatorParams(a=0.01, epsilon=0.0025)
    vr = v_r_reference(4, p)
    lo = 2.0 - 2.0 * math.asin(p.a * p.epsilon)
    assert lo < vr.x_eps_a < 4.0
    # continuity at the junction: piece 1 lands back on the boundary value
    at_junction = float(vr.eval([vr.x_reentry])[0])
    assert at_junction == pytest.approx(-1.0, abs=1e-10)
    # starts on the boundary
    assert float(vr.eval([vr.x_start])[0]) == pytest.approx(-1.0, abs=1e-12)


def test_vr_eps_limit_is_discontinuous_orbit():
    # eps * v_r converges to the discontinuous sliding orbit y_d
    a = 0.5
    orbit = find_sliding_period4_nonlinear(a)
    sup_gaps = []
    for eps in (1e-3, 1e-4):
        p = OscillatorParams(a=a, epsilon=eps)
        vr = v_r_reference(3, p)
        xs = np.linspace(vr.x_start + 1e-9, vr.x_start + 4.0 - 1e-9, 300)
        y_vr = eps * vr.eval(xs)
        # y_d on the same window: flow from (12, 0) until 12 + x_a, zero after
        y_d = np.array([
            flow_solution(-1, float(x), 12.0, OscillatorParams(a=a))
            if x <= 12.0 + orbit.x_a else 0.0
            for x in xs])
        sup_gaps.append(float(np.max(np.abs(y_vr - y_d))))
    assert sup_gaps[0] < 0.02 and sup_gaps[1] < sup_gaps[0]


def test_convergence_to_vr_windows_smoke():
    p = OscillatorParams(a=0.01, epsilon=0.0025)
    traj = simulate_regularized(NONLIN, p, 14.1, 1.1, 14.1 + 4 * 12)
    rows = convergence_to_vr(traj, 6, 10)
    sups = [r["sup_distance"] for r in rows]
    assert all(s1 >= s2 for s1, s2 in zip(sups, sups[1:]))
    assert all(r["consecutive_distance"] > 1e-12 for r in rows)


def test_normal_hyperbolicity_signs():
    # d f/dv = psi'(v0) * df/dlambda carries the branch stability: positive on
    # attracting branches, negative on repelling ones, for both models
    from switchosc.core import forcing_dlam
    from switchosc.sliding import linear_branches, nonlinear_branches

    tf = cubic_transition()
    for model, branches in ((LIN, linear_branches((0.0, 12.0))),
                            (NONLIN, nonlinear_branches((0.0, 20.0)))):
        for b in branches:
            for t in (0.2, 0.5, 0.8):
                x = b.domain[0] + t * b.width
                lam = b.lambda_of(x)
                v0 = tf.inverse(lam)
                dfdv = tf.psi_prime(v0) * forcing_dlam(model, x, lam)
                if b.stability == "attracting":
                    assert dfdv > 0.0, (model, b.index, x)
                else:
                    assert dfdv < 0.0, (model, b.index, x)


def test_riccati_window_dominance():
    # in the fold blow-up coordinates the field reduces to -(xt + vt^2); the
    # dropped terms must stay below 10% of the dominant ones in the window
    a = 0.01
    eps = 1e-3
    n = 10
    p = OscillatorParams(a=a, epsilon=eps)
    tf = cubic_transition()
    m = measure_exit_point(n, p, rtol=1e-11)
    alpha = (math.pi / 2.0 * math.asin(a * eps)
             + n * math.pi**2 * tf.psi_second(-1.0) / 2.0) ** (1.0 / 3.0)
    x_scale = eps ** (2.0 / 3.0) / alpha
    v_scale = math.pi * eps ** (1.0 / 3.0) / (2.0 * alpha**2)
    worst = 0.0
    for xt in np.linspace(-2.0, -0.5, 12):
        x = m.fold_x + x_scale * xt
        v = float(m.trajectory.eval([x])[0])
        vt = (v + 1.0) / v_scale
        dvdx = (-a * eps * v - forcing(NONLIN, x, tf.psi(v))) / eps
        vt_prime = dvdx * x_scale / v_scale
        dominant = xt + vt * vt
        resid = abs(vt_prime + dominant)
        worst = max(worst, resid / max(abs(xt), vt * vt, 1.0))
    assert worst < 0.10, worst


def test_layer_exit_events_are_exact():
    p = OscillatorParams(a=0.01, epsilon=1e-3)
    m = measure_exit_point(6, p)
    v_at_exit = float(m.trajectory.eval([m.x_e])[0])
    assert v_at_exit == pytest.approx(-1.0, abs=1e-9)


def test_funnel_windows_capture_onto_branch_2n():
    # layer entries through the stated fold windows end up tracking the
    # attracting branch 2n: from V+ through (x+_{eps,2n}, x+_{2n+1}), from
    # V- through (x-_{eps,2n-1}, x-_{2n}); here 2n = 6
    p = OscillatorParams(a=0.5, epsilon=1e-3)
    lo_p, hi_p = fold_points(+1, 6, p), 14.0 / 3.0 - 0.05
    lo_m, hi_m = fold_points(-1, 5, p), 12.0 - 0.4
    for lo, hi, v_in in ((lo_p, hi_p, 1.0 - 1e-9), (lo_m, hi_m, -1.0 + 1e-9)):
        for frac in (0.1, 0.5, 0.9):
            x_in = lo + 1e-4 + frac * (hi - lo - 1e-4)
            traj = simulate_regularized(NONLIN, p, x_in, v_in, x_in + 0.6,
                                        rtol=1e-10, atol=1e-12)
            xq = x_in + 0.5
            v = float(traj.eval([xq])[0])
            v0 = critical_branch(NONLIN, 6, xq, p)
            assert abs(v - v0) < 0.01, (x_in, v_in, v, v0)
