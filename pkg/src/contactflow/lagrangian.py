"""Particle solver for the characteristic flow of the momentum equation.

Each particle carries a label z_j, its current position gamma_j and flow
derivative gamma_y_j, and the frozen initial momentum phi0(z_j).  The
momentum along trajectories is algebraic,

    phi(t, gamma(t,z)) = phi0(z) * (z / gamma(t,z))^5 * gamma_y(t,z),

so the only ODEs are the flow equations

    d gamma / dt   = gamma * g(t, gamma)
    d gamma_y / dt = gamma_y * (g + gamma * g_y)(t, gamma),

with (g, g_y) reconstructed from the transported momentum by the kernel
scan.  gamma stays a strictly increasing map fixing 0, and gamma_y stays
positive; the integrator treats any violation as a failed step.

Blowup shows up as g(t, 0) -> -inf; the integrator stops once |g(t,0)|
crosses a threshold and reports t + 1/(sqrt(6) |g(t,0)|) as the blowup
estimate, which bounds the true blowup time from above to within
1/(sqrt(6) * threshold).
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import (
    DegeneracyError,
    EnsembleInvariantError,
    OrderingError,
    ParameterError,
)
from .initdata import MomentumProfile
from .kernel import (
    FieldSample,
    WeightedSamples,
    centered_grid,
    reconstruct_field,
    trapezoid_weights,
)

__all__ = [
    "ParticleEnsemble",
    "IntegrationResult",
    "Snapshot",
    "momentum_along_flow",
    "effective_samples",
    "rhs",
    "step",
    "integrate",
    "COMPLETED",
    "BLOWUP_DETECTED",
    "VALIDITY_EXIT",
    "STEP_UNDERFLOW",
]

SQRT6 = np.sqrt(6.0)

COMPLETED = "completed"
BLOWUP_DETECTED = "blowup_detected"
VALIDITY_EXIT = "validity_exit"
STEP_UNDERFLOW = "step_underflow"

# Tolerance on |gamma(t, 0)|.  The zero label is an exact fixed point of
# every Runge-Kutta stage, so anything beyond round-off is a bug.
_ZERO_PIN_TOL = 1e-12


@dataclass
class ParticleEnsemble:
    """Lagrangian state: labels, quadrature weights, positions, flow
    derivatives, frozen initial momentum, and current time.

    log_gamma_y also accumulates int_0^t (g + gamma g_y) dtau with the same
    time stepper, so `log(gamma_y) - log_gamma_y` measures how well the
    evolved derivative tracks its exponential solution formula.
    """

    labels: np.ndarray
    weights: np.ndarray
    gamma: np.ndarray
    gamma_y: np.ndarray
    phi0: np.ndarray
    time: float = 0.0
    log_gamma_y: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        for name in ("labels", "weights", "gamma", "gamma_y", "phi0"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.log_gamma_y is None:
            self.log_gamma_y = np.zeros_like(self.gamma)
        else:
            self.log_gamma_y = np.asarray(self.log_gamma_y, dtype=float)
        n = self.labels.size
        sizes = {arr.size for arr in (self.weights, self.gamma, self.gamma_y,
                                      self.phi0, self.log_gamma_y)}
        if sizes != {n}:
            raise EnsembleInvariantError("ensemble arrays must share one length")
        if not np.all(np.diff(self.labels) > 0.0):
            raise EnsembleInvariantError("labels must be strictly increasing")
        zero = np.flatnonzero(self.labels == 0.0)
        if zero.size != 1:
            raise EnsembleInvariantError("labels must contain 0 exactly once")
        self.zero_index = int(zero[0])
        self.validate()

    @classmethod
    def from_profile(cls, profile: MomentumProfile, half_width: float, n_particles: int,
                     ) -> "ParticleEnsemble":
        """Identity flow at t = 0 on a centered uniform label grid."""
        z = centered_grid(half_width, n_particles)
        return cls(
            labels=z,
            weights=trapezoid_weights(z),
            gamma=z.copy(),
            gamma_y=np.ones_like(z),
            phi0=profile(z),
            time=0.0,
        )

    @property
    def label_spacing(self) -> float:
        return float(np.min(np.diff(self.labels)))

    def copy(self) -> "ParticleEnsemble":
        return replace(
            self,
            gamma=self.gamma.copy(),
            gamma_y=self.gamma_y.copy(),
            log_gamma_y=self.log_gamma_y.copy(),
        )

    def validate(self) -> None:
        """Raise EnsembleInvariantError (with the offending index) if the
        state left the admissible set: ordering lost, gamma_y <= 0, the
        zero label unpinned, or any non-finite entry."""
        bad = np.flatnonzero(~np.isfinite(self.gamma) | ~np.isfinite(self.gamma_y))
        if bad.size:
            raise EnsembleInvariantError("non-finite particle state", int(bad[0]))
        d = np.diff(self.gamma)
        if np.any(d <= 0.0):
            raise EnsembleInvariantError(
                "particle ordering lost", int(np.flatnonzero(d <= 0.0)[0])
            )
        if np.any(self.gamma_y <= 0.0):
            raise EnsembleInvariantError(
                "flow derivative not positive", int(np.flatnonzero(self.gamma_y <= 0.0)[0])
            )
        if abs(self.gamma[self.zero_index]) > _ZERO_PIN_TOL:
            raise EnsembleInvariantError("zero label moved off the origin", self.zero_index)


def momentum_along_flow(ensemble: ParticleEnsemble) -> np.ndarray:
    """phi at the particle positions, from the transport formula.

    The quintic ratio (z/gamma)^5 is evaluated as exp(5(log|z|-log|gamma|))
    (z and gamma share signs away from 0), and the zero label uses the
    analytic limit phi0(0) * gamma_y^{-4}.
    """
    z = ensemble.labels
    gam = ensemble.gamma
    i0 = ensemble.zero_index
    off = np.arange(z.size) != i0
    if np.any(gam[off] == 0.0):
        j = int(np.flatnonzero(off & (gam == 0.0))[0])
        raise DegeneracyError(
            f"gamma vanished at nonzero label z={z[j]:g} (index {j}); "
            "the flow map degenerated - increase resolution"
        )
    phi = np.empty_like(gam)
    ratio5 = np.exp(5.0 * (np.log(np.abs(z[off])) - np.log(np.abs(gam[off]))))
    phi[off] = ensemble.phi0[off] * ratio5 * ensemble.gamma_y[off]
    phi[i0] = ensemble.phi0[i0] * ensemble.gamma_y[i0] ** -4
    return phi


def effective_samples(ensemble: ParticleEnsemble) -> WeightedSamples:
    """Momentum samples seen by the kernel: positions gamma_j, values
    phi(t, gamma_j) * gamma_y_j (the label-space change of variables),
    label quadrature weights."""
    return WeightedSamples(
        positions=ensemble.gamma,
        values=momentum_along_flow(ensemble) * ensemble.gamma_y,
        weights=ensemble.weights,
    )


class _RhsEval(NamedTuple):
    d_gamma: np.ndarray
    d_gamma_y: np.ndarray
    d_log: np.ndarray
    field: FieldSample


def _eval_rhs(ensemble: ParticleEnsemble) -> _RhsEval:
    f = reconstruct_field(effective_samples(ensemble))
    bracket = f.g + ensemble.gamma * f.g_y
    return _RhsEval(ensemble.gamma * f.g, ensemble.gamma_y * bracket, bracket, f)


def rhs(ensemble: ParticleEnsemble) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives (d gamma/dt, d gamma_y/dt) of the particle system."""
    ev = _eval_rhs(ensemble)
    return ev.d_gamma, ev.d_gamma_y


def _shifted(ensemble: ParticleEnsemble, ev: _RhsEval, dt: float) -> ParticleEnsemble:
    out = ensemble.copy()
    out.gamma = ensemble.gamma + dt * ev.d_gamma
    out.gamma_y = ensemble.gamma_y + dt * ev.d_gamma_y
    out.log_gamma_y = ensemble.log_gamma_y + dt * ev.d_log
    out.time = ensemble.time + dt
    return out


def _rk4(ensemble: ParticleEnsemble, dt: float, k1: _RhsEval | None = None,
         ) -> ParticleEnsemble:
    """One classical Runge-Kutta step; intermediate states are not
    validated (the caller validates the result)."""
    if k1 is None:
        k1 = _eval_rhs(ensemble)
    k2 = _eval_rhs(_shifted(ensemble, k1, 0.5 * dt))
    k3 = _eval_rhs(_shifted(ensemble, k2, 0.5 * dt))
    k4 = _eval_rhs(_shifted(ensemble, k3, dt))
    out = ensemble.copy()
    w = dt / 6.0
    out.gamma = ensemble.gamma + w * (k1.d_gamma + 2 * k2.d_gamma + 2 * k3.d_gamma + k4.d_gamma)
    out.gamma_y = ensemble.gamma_y + w * (
        k1.d_gamma_y + 2 * k2.d_gamma_y + 2 * k3.d_gamma_y + k4.d_gamma_y
    )
    out.log_gamma_y = ensemble.log_gamma_y + w * (k1.d_log + 2 * k2.d_log + 2 * k3.d_log + k4.d_log)
    out.time = ensemble.time + dt
    return out


def step(ensemble: ParticleEnsemble, dt: float) -> ParticleEnsemble:
    """Advance one RK4 step of size dt and re-validate the invariants."""
    if not dt > 0.0:
        raise ParameterError(f"dt must be positive, got {dt}")
    out = _rk4(ensemble, dt)
    out.validate()
    return out


class Snapshot(NamedTuple):
    time: float
    ensemble: ParticleEnsemble
    field: FieldSample


@dataclass
class IntegrationResult:
    snapshots: list[Snapshot]
    termination: str
    final_time: float
    blowup_estimate: float | None = None

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]


def _error_ratio(big: ParticleEnsemble, fine: ParticleEnsemble) -> float:
    """Scaled step-doubling error estimate (already divided by 2^4 - 1)."""
    num = 0.0
    for a, b in ((big.gamma, fine.gamma), (big.gamma_y, fine.gamma_y)):
        num = max(num, float(np.max(np.abs(a - b) / (1.0 + np.abs(b)))))
    return num / 15.0


def integrate(
    ensemble: ParticleEnsemble,
    t_end: float,
    *,
    output_interval: float | None = None,
    rk_tolerance: float = 1e-8,
    a_min: float = 1e-4,
    b_max: float = 1e4,
    blow_threshold: float = 1e3,
    dt_min: float = 1e-10,
    dt_max: float = 0.1,
) -> IntegrationResult:
    """Advance the particle system to t_end with step-doubling control.

    The step is halved whenever the error estimate exceeds
    rk_tolerance * dt or a trial state breaks an ensemble invariant, and
    doubled after a few consecutive accepted steps.  Termination:

      completed        reached t_end,
      blowup_detected  |g(t, 0)| crossed blow_threshold (estimate attached),
      validity_exit    some gamma_y left [a_min, b_max],
      step_underflow   dt fell below dt_min.

    Snapshots are emitted at t = 0, at every multiple of output_interval
    (hit exactly), and at the termination time.
    """
    if not t_end > ensemble.time:
        raise ParameterError("t_end must exceed the ensemble's current time")
    if output_interval is not None and not 0.0 < output_interval <= t_end:
        raise ParameterError("output_interval must lie in (0, t_end]")

    state = ensemble.copy()
    t0 = state.time
    k1 = _eval_rhs(state)
    snapshots = [Snapshot(state.time, state.copy(), k1.field)]
    out_dt = output_interval if output_interval is not None else t_end
    out_count = 1
    next_out = t0 + out_dt

    dt = min(dt_max, out_dt, t_end - state.time)
    streak = 0
    termination = COMPLETED
    blowup_estimate = None

    while state.time < t_end:
        dt_try = min(dt, t_end - state.time, next_out - state.time)
        accepted = None
        try:
            big = _rk4(state, dt_try, k1)
            half = _rk4(state, 0.5 * dt_try, k1)
            fine = _rk4(half, 0.5 * dt_try)
            fine.validate()
            if _error_ratio(big, fine) <= rk_tolerance * dt_try:
                accepted = fine
        except (EnsembleInvariantError, DegeneracyError, OrderingError, FloatingPointError):
            accepted = None
        if accepted is None:
            streak = 0
            dt = 0.5 * dt_try
            if dt < dt_min:
                termination = STEP_UNDERFLOW
                break
            continue

        state = accepted
        state.time = min(state.time, t_end)  # guard accumulated round-off
        k1 = _eval_rhs(state)
        streak += 1
        if streak >= 3:
            dt = min(2.0 * dt, dt_max)
            streak = 0

        g0 = float(k1.field.g[state.zero_index])
        emit = False
        if state.time >= next_out - 1e-12 * max(1.0, abs(next_out)):
            emit = True
            out_count += 1
            next_out = t0 + out_count * out_dt
        if np.any(state.gamma_y < a_min) or np.any(state.gamma_y > b_max):
            termination = VALIDITY_EXIT
            break
        if abs(g0) >= blow_threshold:
            termination = BLOWUP_DETECTED
            blowup_estimate = state.time + 1.0 / (SQRT6 * abs(g0))
            break
        if emit:
            snapshots.append(Snapshot(state.time, state.copy(), k1.field))

    if state.time > snapshots[-1].time:
        snapshots.append(Snapshot(state.time, state.copy(), k1.field))
    return IntegrationResult(
        snapshots=snapshots,
        termination=termination,
        final_time=float(state.time),
        blowup_estimate=blowup_estimate,
    )
