"""Velocity reconstruction through the exponential Green's function.

The velocity g is recovered from momentum samples by discretizing the
convolution

    g(y) = 1/2 * integral exp(-|y - y'|) phi(y') dy',

which inverts the operator (1 - d^2/dy^2).  With samples (y_j, v_j) and
quadrature weights w_j the discrete field and its derivative are

    g_i   = 1/2 * sum_j exp(-|y_i - y_j|) v_j w_j
    gy_i  = 1/2 * sum_j sgn(y_j - y_i) exp(-|y_i - y_j|) v_j w_j,

with the j = i term contributing fully to g_i and nothing to gy_i (the
kernel derivative has a sign jump at y' = y; the symmetric split cancels).

Instead of the O(N^2) double sum, both fields come from two exponentially
decayed running sums

    A_i = A_{i-1} * exp(-(y_i - y_{i-1})) + v_i w_i
    B_i = B_{i+1} * exp(-(y_{i+1} - y_i)) + v_i w_i

so that g_i = (A_i + B_i - v_i w_i)/2 and gy_i = (B_i - A_i)/2.  Only
non-positive exponents appear, so the scan cannot overflow for any
position range, and the cost is O(N).  `direct_field` keeps the quadratic
reference sum around as an independent cross-check.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import OrderingError, ParameterError, ShapeError

__all__ = [
    "WeightedSamples",
    "FieldSample",
    "HelmholtzResult",
    "scan_accumulators",
    "reconstruct_field",
    "evaluate_field_at",
    "direct_field",
    "helmholtz_apply",
    "centered_grid",
    "trapezoid_weights",
]

# Width (in position units) of one scan block.  Raised exponents stay below
# exp(100) ~ 2.7e43, far from the float64 overflow threshold, while the
# default [-40, 40] domain fits in a single block.
_BLOCK_WIDTH = 100.0


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def _require_strictly_increasing(positions: np.ndarray, name: str = "positions") -> None:
    if positions.size > 1 and not np.all(np.diff(positions) > 0.0):
        bad = int(np.flatnonzero(np.diff(positions) <= 0.0)[0])
        raise OrderingError(f"{name} must be strictly increasing (violated at index {bad})")


@dataclass(frozen=True)
class WeightedSamples:
    """Momentum samples v_j at strictly increasing positions y_j with
    positive quadrature weights w_j."""

    positions: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", _as_float_array(self.positions, "positions"))
        object.__setattr__(self, "values", _as_float_array(self.values, "values"))
        object.__setattr__(self, "weights", _as_float_array(self.weights, "weights"))
        n = self.positions.size
        if n < 1:
            raise ShapeError("need at least one sample")
        if self.values.size != n or self.weights.size != n:
            raise ShapeError(
                f"length mismatch: positions {n}, values {self.values.size}, "
                f"weights {self.weights.size}"
            )
        _require_strictly_increasing(self.positions)
        if not np.all(self.weights > 0.0):
            raise ParameterError("quadrature weights must be strictly positive")

    @property
    def loads(self) -> np.ndarray:
        """Pointwise products v_j * w_j entering the kernel sums."""
        return self.values * self.weights


@dataclass(frozen=True)
class FieldSample:
    """g and g_y evaluated at an ordered set of positions."""

    positions: np.ndarray
    g: np.ndarray
    g_y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", _as_float_array(self.positions, "positions"))
        object.__setattr__(self, "g", _as_float_array(self.g, "g"))
        object.__setattr__(self, "g_y", _as_float_array(self.g_y, "g_y"))
        if not (self.positions.size == self.g.size == self.g_y.size):
            raise ShapeError("positions, g and g_y must have equal length")


class HelmholtzResult(NamedTuple):
    phi: np.ndarray
    interior: np.ndarray  # bool mask; False where the value was copied, not computed


def _decayed_prefix(positions: np.ndarray, loads: np.ndarray) -> np.ndarray:
    """A_i = sum_{j<=i} exp(positions[j] - positions[i]) * loads[j].

    Evaluated blockwise: inside a block the sum is a cumulative sum of
    loads raised by exp(y_j - ref); the carry from earlier blocks decays
    across the block boundary.  No raised exponent exceeds _BLOCK_WIDTH.
    """
    n = positions.size
    out = np.empty(n)
    block = np.floor((positions - positions[0]) / _BLOCK_WIDTH).astype(np.int64)
    starts = np.flatnonzero(np.r_[True, block[1:] != block[:-1]])
    bounds = np.append(starts, n)
    carry = 0.0
    prev_edge = positions[0]
    for k in range(starts.size):
        lo, hi = bounds[k], bounds[k + 1]
        ref = positions[lo]
        raised = np.exp(positions[lo:hi] - ref)
        acc = np.cumsum(raised * loads[lo:hi])
        out[lo:hi] = (acc + carry * np.exp(prev_edge - ref)) / raised
        carry = out[hi - 1]
        prev_edge = positions[hi - 1]
    return out


def scan_accumulators(positions, loads) -> tuple[np.ndarray, np.ndarray]:
    """One-sided exponential sums (A_i, B_i), both including the diagonal:

        A_i = sum_{j<=i} exp(y_j - y_i) * loads_j
        B_i = sum_{j>=i} exp(y_i - y_j) * loads_j
    """
    positions = np.asarray(positions, dtype=float)
    loads = np.asarray(loads, dtype=float)
    a = _decayed_prefix(positions, loads)
    b = _decayed_prefix(-positions[::-1], loads[::-1])[::-1]
    return a, b


def reconstruct_field(samples: WeightedSamples) -> FieldSample:
    """Evaluate g and g_y at the sample positions via the linear-time scan."""
    loads = samples.loads
    a, b = scan_accumulators(samples.positions, loads)
    g = 0.5 * (a + b - loads)
    g_y = 0.5 * (b - a)
    return FieldSample(samples.positions, g, g_y)


def evaluate_field_at(samples: WeightedSamples, query_positions) -> FieldSample:
    """Same sums as `reconstruct_field`, evaluated at sorted query points.

    A query that coincides with a sample position reproduces the diagonal
    convention (full weight in g, none in g_y).
    """
    q = _as_float_array(query_positions, "query_positions")
    if q.size > 1 and np.any(np.diff(q) < 0.0):
        raise OrderingError("query positions must be sorted")
    pos = samples.positions
    loads = samples.loads
    a, b = scan_accumulators(pos, loads)

    left = np.searchsorted(pos, q, side="right") - 1  # last sample <= q
    right = np.searchsorted(pos, q, side="left")      # first sample >= q
    aq = np.zeros_like(q)
    bq = np.zeros_like(q)
    has_left = left >= 0
    has_right = right < pos.size
    aq[has_left] = a[left[has_left]] * np.exp(pos[left[has_left]] - q[has_left])
    bq[has_right] = b[right[has_right]] * np.exp(q[has_right] - pos[right[has_right]])

    # exact ties count the diagonal once in g and cancel in g_y
    tie = np.zeros_like(q)
    tied = has_left & (pos[np.clip(left, 0, pos.size - 1)] == q)
    tie[tied] = loads[left[tied]]

    g = 0.5 * (aq + bq - tie)
    g_y = 0.5 * (bq - aq)
    return FieldSample(q, g, g_y)


def direct_field(samples: WeightedSamples) -> FieldSample:
    """O(N^2) reference evaluation of the same sums.

    Kept as the independent oracle for the scan; do not use in solvers.
    """
    pos = samples.positions
    loads = samples.loads
    diff = pos[:, None] - pos[None, :]
    kern = np.exp(-np.abs(diff))
    g = 0.5 * kern.dot(loads)
    g_y = 0.5 * (np.sign(-diff) * kern).dot(loads)
    return FieldSample(pos, g, g_y)


def helmholtz_apply(g_values, spacing: float) -> HelmholtzResult:
    """phi_i = g_i - (g_{i+1} - 2 g_i + g_{i-1}) / spacing^2 on a uniform grid.

    Endpoint values are copied from the nearest interior node and flagged
    False in the returned mask so that downstream residual checks can skip
    boundary artifacts.
    """
    g = _as_float_array(g_values, "g_values")
    if g.size < 3:
        raise ShapeError("helmholtz_apply needs at least 3 grid values")
    if not spacing > 0.0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    phi = np.empty_like(g)
    phi[1:-1] = g[1:-1] - (g[2:] - 2.0 * g[1:-1] + g[:-2]) / spacing**2
    phi[0] = phi[1]
    phi[-1] = phi[-2]
    interior = np.ones(g.size, dtype=bool)
    interior[0] = interior[-1] = False
    return HelmholtzResult(phi, interior)


def centered_grid(half_width: float, n: int) -> np.ndarray:
    """Uniform grid of n points on [-half_width, half_width] with 0 an exact node.

    n must be odd so the midpoint lands on zero; the grid is built around
    the center so that the zero node is exactly 0.0 in floating point.
    """
    if not half_width > 0.0:
        raise ParameterError(f"half_width must be positive, got {half_width}")
    if n < 3 or n % 2 == 0:
        raise ParameterError(f"need an odd number of nodes >= 3, got {n}")
    h = 2.0 * half_width / (n - 1)
    return (np.arange(n) - (n - 1) // 2) * h


def trapezoid_weights(positions) -> np.ndarray:
    """Trapezoid-rule quadrature weights for an increasing point set."""
    pos = _as_float_array(positions, "positions")
    if pos.size < 2:
        raise ShapeError("trapezoid weights need at least 2 points")
    _require_strictly_increasing(pos)
    w = np.empty_like(pos)
    w[0] = 0.5 * (pos[1] - pos[0])
    w[-1] = 0.5 * (pos[-1] - pos[-2])
    w[1:-1] = 0.5 * (pos[2:] - pos[:-2])
    return w
