"""Simulation and analysis of a first-order oscillator with switched forcing.

Linear (Filippov) and nonlinear (hidden-dynamics) switching models, in
discontinuous and regularized (switching-layer) form: closed-form half-plane
flows, crossing maps and periodic-orbit search, sliding branches with ageing,
stiff layer integration, slow-manifold and exit-point asymptotics.
"""

from .core import (
    HybridState,
    Mode,
    OscillatorParams,
    Region,
    SwitchingModel,
    Trajectory,
    classify_threshold_point,
    forcing,
    params_from_circuit,
    vector_field,
)
from .analytic_flow import (
    PhaseConstants,
    flow_solution,
    h,
    h0_zeros,
    hinf_zeros,
    p0_map,
    phase_constants,
)
from .poincare import (
    PoincareResult,
    composite_map,
    dP_da_at_zero,
    dP_dx,
    find_nonsliding_period4,
    next_crossing,
    solve_x0,
)
from .sliding import (
    SlidingBranch,
    ageing_metrics,
    check_no_nonsliding_periodic_nonlinear,
    confinement_check,
    find_sliding_period4_linear,
    find_sliding_period4_nonlinear,
    linear_branches,
    nonlinear_branches,
    select_branch_on_entry,
    simulate_discontinuous,
)
from .regularization import (
    LayerState,
    ScalingFit,
    TransitionFunction,
    boundary_return_map,
    convergence_to_vr,
    critical_branch,
    cubic_transition,
    exit_scaling_fit,
    find_regularized_sliding_orbit_linear,
    fold_points,
    integrate_layer,
    layer_field,
    measure_exit_point,
    regularized_poincare_linear,
    simulate_regularized,
    slow_manifold_expansion,
    v_r_reference,
)

__version__ = "1.0.0"
