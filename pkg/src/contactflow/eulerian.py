"""Fixed-grid solver for the momentum transport form.

Evolves phi on a uniform truncated grid by the method of lines:

    phi_t = -y g phi_y + (y g_y - 4 g) phi,

with (g, g_y) reconstructed from phi through the exponential kernel each
stage.  The advection derivative is first-order upwind, selected by the
sign of the speed y*g, which keeps single-signed momentum single-signed
up to a spacing-sized tolerance; boundary nodes use the one-sided
difference pointing into the interior (the speed points outward for
decaying data, so no ghost values are needed).

This solver is the cross-validation oracle for the particle solver, not
the production path; accuracy is recovered by grid refinement.
"""

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import ParameterError, ShapeError
from .kernel import (
    FieldSample,
    WeightedSamples,
    centered_grid,
    reconstruct_field,
    trapezoid_weights,
)

__all__ = [
    "GridState",
    "GridSnapshot",
    "EulerianResult",
    "eulerian_rhs",
    "eulerian_integrate",
    "nonlocal_gt",
    "main_equation_residual",
    "ResidualSeries",
    "COMPLETED",
    "DIVERGED",
    "STEP_UNDERFLOW",
]

COMPLETED = "completed"
DIVERGED = "diverged"
STEP_UNDERFLOW = "step_underflow"


@dataclass
class GridState:
    """phi on the uniform grid of n (odd) points covering [-L, L]."""

    half_width: float
    n: int
    phi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.y = centered_grid(self.half_width, self.n)  # validates L, n
        if self.phi.shape != self.y.shape:
            raise ShapeError(f"phi must have length {self.n}, got {self.phi.size}")
        self.weights = trapezoid_weights(self.y)

    @classmethod
    def from_profile(cls, profile, half_width: float, n: int) -> "GridState":
        y = centered_grid(half_width, n)
        return cls(half_width=half_width, n=n, phi=profile(y), time=0.0)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def zero_index(self) -> int:
        return (self.n - 1) // 2

    def copy(self) -> "GridState":
        return replace(self, phi=self.phi.copy())

    def field(self) -> FieldSample:
        """(g, g_y) reconstructed from the current momentum."""
        return reconstruct_field(WeightedSamples(self.y, self.phi, self.weights))


def _upwind_derivative(phi: np.ndarray, speed: np.ndarray, h: float) -> np.ndarray:
    """First-order one-sided difference selected by the speed sign;
    boundary nodes always difference into the interior."""
    d = np.empty_like(phi)
    backward = (phi[1:-1] - phi[:-2]) / h
    forward = (phi[2:] - phi[1:-1]) / h
    d[1:-1] = np.where(speed[1:-1] > 0.0, backward, forward)
    d[0] = (phi[1] - phi[0]) / h
    d[-1] = (phi[-1] - phi[-2]) / h
    return d


def eulerian_rhs(state: GridState) -> np.ndarray:
    """d phi / dt on the grid (the advection term vanishes identically at
    the y = 0 node, which therefore obeys phi_t = -4 g phi exactly)."""
    f = state.field()
    speed = state.y * f.g
    dphi = _upwind_derivative(state.phi, speed, state.spacing)
    return -speed * dphi + (state.y * f.g_y - 4.0 * f.g) * state.phi


def _rk4(state: GridState, dt: float) -> GridState:
    k1 = eulerian_rhs(state)
    s2 = replace(state, phi=state.phi + 0.5 * dt * k1, time=state.time + 0.5 * dt)
    k2 = eulerian_rhs(s2)
    s3 = replace(state, phi=state.phi + 0.5 * dt * k2, time=state.time + 0.5 * dt)
    k3 = eulerian_rhs(s3)
    s4 = replace(state, phi=state.phi + dt * k3, time=state.time + dt)
    k4 = eulerian_rhs(s4)
    return replace(
        state,
        phi=state.phi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4),
        time=state.time + dt,
    )


class GridSnapshot(NamedTuple):
    time: float
    state: GridState
    field: FieldSample


@dataclass
class EulerianResult:
    snapshots: list[GridSnapshot]
    termination: str
    final_time: float

    @property
    def final(self) -> GridSnapshot:
        return self.snapshots[-1]


def eulerian_integrate(
    state: GridState,
    t_end: float,
    *,
    output_interval: float | None = None,
    cfl: float = 0.5,
    dt_min: float = 1e-10,
    dt_max: float = 0.1,
) -> EulerianResult:
    """March to t_end with RK4 and a CFL-limited step dt <= cfl*h/max|y g|.

    Stops with termination DIVERGED (keeping the last finite snapshot) if
    phi leaves the representable range, or STEP_UNDERFLOW if the CFL
    constraint pushes dt below dt_min.
    """
    if not t_end > state.time:
        raise ParameterError("t_end must exceed the state's current time")
    if not 0.0 < cfl <= 1.0:
        raise ParameterError(f"cfl must lie in (0, 1], got {cfl}")
    if output_interval is not None and not 0.0 < output_interval <= t_end:
        raise ParameterError("output_interval must lie in (0, t_end]")

    cur = state.copy()
    t0 = cur.time
    snapshots = [GridSnapshot(cur.time, cur.copy(), cur.field())]
    out_dt = output_interval if output_interval is not None else t_end
    out_count = 1
    next_out = t0 + out_dt
    termination = COMPLETED

    while cur.time < t_end:
        speed_max = float(np.max(np.abs(cur.y * cur.field().g)))
        dt = dt_max if speed_max == 0.0 else min(dt_max, cfl * cur.spacing / speed_max)
        if dt < dt_min:
            termination = STEP_UNDERFLOW
            break
        dt = min(dt, t_end - cur.time, next_out - cur.time)
        trial = _rk4(cur, dt)
        if not np.all(np.isfinite(trial.phi)):
            termination = DIVERGED
            break
        cur = trial
        if cur.time >= next_out - 1e-12 * max(1.0, abs(next_out)):
            snapshots.append(GridSnapshot(cur.time, cur.copy(), cur.field()))
            out_count += 1
            next_out = t0 + out_count * out_dt

    if cur.time > snapshots[-1].time:
        snapshots.append(GridSnapshot(cur.time, cur.copy(), cur.field()))
    return EulerianResult(snapshots, termination, float(cur.time))


def _central(values: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    out[0] = (values[1] - values[0]) / h
    out[-1] = (values[-1] - values[-2]) / h
    return out


def nonlocal_gt(g_values, spacing: float) -> np.ndarray:
    """Velocity tendency in the nonlocal form

        g_t = -g^2 - y g g_y - p * [4 g_y^2 + 3 g^2 + y d_y(2 g_y^2 - g^2/2)],

    with p(y) = exp(-|y|)/2 applied through the kernel scan (uniform
    rectangle weights).  Derivatives are central in the interior and
    one-sided at the two boundary nodes; only interior values are
    consistent with the evolution.
    """
    g = np.asarray(g_values, dtype=float)
    if g.ndim != 1 or g.size < 5:
        raise ShapeError("nonlocal_gt needs at least 5 uniform grid values")
    if g.size % 2 == 0:
        raise ParameterError("nonlocal_gt expects an odd, zero-centered grid")
    if not spacing > 0.0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    n = g.size
    y = (np.arange(n) - (n - 1) // 2) * spacing
    g_y = _central(g, spacing)
    bracket = 4.0 * g_y**2 + 3.0 * g**2 + y * _central(2.0 * g_y**2 - 0.5 * g**2, spacing)
    conv = reconstruct_field(
        WeightedSamples(y, bracket, np.full(n, spacing))
    ).g
    return -g * g - y * g * g_y - conv


class ResidualSeries(NamedTuple):
    """Interior residuals of the second-order evolution equation."""

    times: np.ndarray      # interior snapshot times
    positions: np.ndarray  # interior grid nodes
    values: np.ndarray     # (len(times), len(positions)) residual matrix


def main_equation_residual(snapshots) -> ResidualSeries:
    """Finite-difference residual of

        g_t - g_yyt + 4 g^2 - 4 g g_yy - y g g_yyy + y g_y g_yy = 0

    on stored snapshots at uniform time intervals.  All derivatives are
    central: time from neighboring snapshots, space from neighboring
    nodes, so the residual lives on interior times and nodes 2..n-3.
    """
    snaps = list(snapshots)
    if len(snaps) < 3:
        raise ShapeError("need at least 3 snapshots for the time derivative")
    times = np.array([s.time for s in snaps])
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-8, atol=1e-12):
        raise ShapeError("snapshots must be uniformly spaced in time")
    dt = float(dts[0])
    first = snaps[0]
    grid = first.state.y
    h = first.state.spacing
    g_mat = np.stack([s.field.g for s in snaps])

    def d_yy(row):
        return (row[2:] - 2.0 * row[1:-1] + row[:-2]) / h**2

    inner = slice(2, -2)
    vals = []
    for k in range(1, len(snaps) - 1):
        g = g_mat[k]
        g_t = (g_mat[k + 1] - g_mat[k - 1]) / (2.0 * dt)
        g_yyt = (d_yy(g_mat[k + 1]) - d_yy(g_mat[k - 1])) / (2.0 * dt)
        g_y = (g[2:] - g[:-2]) / (2.0 * h)
        g_yy = d_yy(g)
        g_yyy = (g[4:] - 2.0 * g[3:-1] + 2.0 * g[1:-3] - g[:-4]) / (2.0 * h**3)
        res = (
            g_t[inner]
            - g_yyt[1:-1]
            + 4.0 * g[inner] ** 2
            - 4.0 * g[inner] * g_yy[1:-1]
            - grid[inner] * g[inner] * g_yyy
            + grid[inner] * g_y[1:-1] * g_yy[1:-1]
        )
        vals.append(res)
    return ResidualSeries(times[1:-1], grid[inner], np.stack(vals))
