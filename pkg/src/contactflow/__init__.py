"""Solvers and diagnostics for the one-parameter contact momentum equation

    g_t - g_yyt + 4 g^2 - 4 g g_yy = y g g_yyy - y g_y g_yy

on the real line.  The momentum phi = g - g_yy is transported along the
characteristics gamma_t = gamma * g(t, gamma) with a closed-form Jacobian
factor, which the particle solver integrates directly; an independent
upwind grid solver evolves phi on a truncated domain for cross-validation.

Nonnegative momentum keeps solutions bounded for all time (sup |g| never
exceeds half the initial momentum mass); even initial data with g(0) < 0
drives g(t, 0) to -infinity no later than 1/(sqrt(6) |g0(0)|).
"""

from .diagnostics import (
    CheckRecord,
    DiagnosticsReport,
    FieldSnapshot,
    check_envelope,
    check_factorization_identity,
    check_gradient_bound,
    check_mass_decay,
    check_riccati,
    check_sign_preservation,
    check_sup_bound,
    check_transport_consistency,
    run_standard_checks,
    snapshots_from_grid,
    snapshots_from_particles,
)
from .eulerian import (
    EulerianResult,
    GridState,
    eulerian_integrate,
    eulerian_rhs,
    main_equation_residual,
    nonlocal_gt,
)
from .initdata import (
    MomentumProfile,
    blowup_profile,
    load_profile,
    momentum_from_velocity,
    rational_bump,
    tabulated_profile,
    velocity_from_momentum,
)
from .kernel import (
    FieldSample,
    WeightedSamples,
    centered_grid,
    direct_field,
    evaluate_field_at,
    helmholtz_apply,
    reconstruct_field,
    scan_accumulators,
    trapezoid_weights,
)
from .lagrangian import (
    IntegrationResult,
    ParticleEnsemble,
    effective_samples,
    integrate,
    momentum_along_flow,
    rhs,
    step,
)

__version__ = "0.1.0"
