"""Theorem-derived invariant checks on solver output.

Every check is a pure function of snapshot data (never of solver
internals): time derivatives come from central differences of stored
snapshots, spatial integrals from the trapezoid rule over the snapshot's
own positions.  Each check returns records carrying the compared values,
the residual, an explicit tolerance, and a verdict; checks whose
hypotheses are unmet (wrong sign class, uneven data) report
not_applicable rather than pass.

Checked statements, for momentum phi = g - g_yy transported by the flow:

  * sign preservation: single-signed phi0 keeps phi and g single-signed;
  * gradient bound: |g_y| <= |g| whenever phi0 does not change sign;
  * factorization: g^2 - g_y^2 equals the product of the two one-sided
    exponential sums (exact algebra on the kernel accumulators);
  * mass decay: d/dt int g = -2 (2 int g^2 + int g_y^2) < 0, and
    int phi(t) <= int phi0;
  * sup bound: nonnegative phi0 gives sup |g| <= ||phi0||_L1 / 2;
  * Riccati: for even data, dg(t,0)/dt <= -sqrt(6) g(t,0)^2, hence
    g(t,0) <= g0(0)/(1 + sqrt(6) g0(0) t) when g0(0) < 0, and the blowup
    time is at most 1/(sqrt(6) |g0(0)|);
  * envelope: nonpositive even data satisfies
    |g(t,0)| e^{-|y|} <= |g(t,y)| <= |g(t,0)| e^{|y|};
  * transport consistency: particle momentum along trajectories agrees
    with the fixed-grid momentum interpolated to the particle positions.
"""

import hashlib
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ShapeError, UsageError
from .initdata import (
    SIGN_MIXED,
    SIGN_NONNEGATIVE,
    SIGN_NONPOSITIVE,
    MomentumProfile,
)
from .kernel import FieldSample, WeightedSamples, reconstruct_field, scan_accumulators

__all__ = [
    "FieldSnapshot",
    "CheckRecord",
    "DiagnosticsReport",
    "PASS",
    "FAIL",
    "NOT_APPLICABLE",
    "check_sign_preservation",
    "check_gradient_bound",
    "check_factorization_identity",
    "check_mass_decay",
    "check_sup_bound",
    "check_riccati",
    "check_envelope",
    "check_transport_consistency",
    "run_standard_checks",
]

SQRT6 = np.sqrt(6.0)

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class FieldSnapshot:
    """Solver-agnostic snapshot: positions with g, g_y and phi values.

    For the particle solver the positions are the current particle
    locations; for the grid solver they are the grid nodes.
    """

    time: float
    positions: np.ndarray
    g: np.ndarray
    g_y: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        for name in ("positions", "g", "g_y", "phi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.positions.size
        if not (self.g.size == self.g_y.size == self.phi.size == n):
            raise ShapeError("snapshot arrays must share one length")


@dataclass(frozen=True)
class CheckRecord:
    name: str
    time: float
    lhs_value: float
    rhs_value: float
    residual: float
    tolerance: float
    verdict: str

    @staticmethod
    def judged(name, time, lhs, rhs, residual, tolerance) -> "CheckRecord":
        verdict = PASS if residual <= tolerance else FAIL
        return CheckRecord(name, float(time), float(lhs), float(rhs),
                           float(residual), float(tolerance), verdict)

    @staticmethod
    def skipped(name, reason_time=float("nan")) -> "CheckRecord":
        return CheckRecord(name, reason_time, float("nan"), float("nan"),
                           float("nan"), float("nan"), NOT_APPLICABLE)


@dataclass
class DiagnosticsReport:
    checks: list[CheckRecord] = dc_field(default_factory=list)
    run_metadata: dict = dc_field(default_factory=dict)

    def extend(self, records) -> None:
        self.checks.extend(records)

    @property
    def n_failed(self) -> int:
        return sum(1 for c in self.checks if c.verdict == FAIL)

    @property
    def passed(self) -> bool:
        return self.n_failed == 0

    def worst(self, name: str) -> CheckRecord | None:
        recs = [c for c in self.checks if c.name == name and c.verdict != NOT_APPLICABLE]
        if not recs:
            return None
        return max(recs, key=lambda c: c.residual)

    def to_text(self) -> str:
        lines = [f"# diagnostics: {len(self.checks)} checks, {self.n_failed} failed"]
        for k in sorted(self.run_metadata):
            lines.append(f"# {k} {self.run_metadata[k]}")
        for c in self.checks:
            lines.append(
                f"{c.name} {c.time:.16e} {c.residual:.16e} {c.tolerance:.16e} {c.verdict}"
            )
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        lines = ["name,time,lhs_value,rhs_value,residual,tolerance,verdict"]
        for c in self.checks:
            lines.append(
                f"{c.name},{c.time:.16e},{c.lhs_value:.16e},{c.rhs_value:.16e},"
                f"{c.residual:.16e},{c.tolerance:.16e},{c.verdict}"
            )
        return "\n".join(lines) + "\n"


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# individual checks


def check_sign_preservation(snapshots, phi0_sign_class: str, *,
                            tolerance: float = 1e-10) -> list[CheckRecord]:
    """Per snapshot: largest violation of the claimed sign of phi and g."""
    if phi0_sign_class not in (SIGN_NONNEGATIVE, SIGN_NONPOSITIVE):
        return [CheckRecord.skipped("sign_phi"), CheckRecord.skipped("sign_g")]
    flip = 1.0 if phi0_sign_class == SIGN_NONNEGATIVE else -1.0
    records = []
    for s in snapshots:
        viol_phi = max(0.0, float(np.max(-flip * s.phi, initial=0.0)))
        viol_g = max(0.0, float(np.max(-flip * s.g, initial=0.0)))
        records.append(CheckRecord.judged("sign_phi", s.time, viol_phi, 0.0, viol_phi, tolerance))
        records.append(CheckRecord.judged("sign_g", s.time, viol_g, 0.0, viol_g, tolerance))
    return records


def check_gradient_bound(fieldlike, *, time: float = float("nan"),
                         tolerance: float = 1e-8) -> CheckRecord:
    """max(|g_y| - |g|) clipped at zero; applicable to single-signed momentum."""
    resid = max(0.0, float(np.max(np.abs(fieldlike.g_y) - np.abs(fieldlike.g))))
    t = getattr(fieldlike, "time", time)
    return CheckRecord.judged("gradient_bound", t, resid, 0.0, resid, tolerance)


def check_factorization_identity(samples: WeightedSamples, field: FieldSample,
                                 *, tolerance: float | None = None) -> CheckRecord:
    """g_i^2 - g_{y,i}^2 == (A_i - c_i/2)(B_i - c_i/2) with A, B the one-sided
    kernel accumulators and c the loads; exact algebra, so the default
    tolerance is a round-off allowance."""
    if not np.array_equal(samples.positions, field.positions):
        raise UsageError("field positions do not match the sample positions")
    check = reconstruct_field(samples)
    if not (np.array_equal(check.g, field.g) and np.array_equal(check.g_y, field.g_y)):
        raise UsageError("field was not produced from these samples")
    loads = samples.loads
    a, b = scan_accumulators(samples.positions, loads)
    product = (a - 0.5 * loads) * (b - 0.5 * loads)
    lhs = field.g**2 - field.g_y**2
    resid = float(np.max(np.abs(lhs - product)))
    if tolerance is None:
        scale = float(np.max(np.abs(product)))
        tolerance = 1e-12 * max(scale, 1e-300)
    return CheckRecord.judged("factorization", float("nan"),
                              float(np.max(np.abs(lhs))), float(np.max(np.abs(product))),
                              resid, tolerance)


def _uniform_triples(times: np.ndarray) -> np.ndarray:
    """Mask over interior indices: True where the two bracketing intervals
    match, so a central difference is second-order there."""
    dt = np.diff(times)
    if dt.size < 2:
        return np.zeros(0, dtype=bool)
    return np.abs(dt[1:] - dt[:-1]) <= 1e-9 * np.maximum(dt[1:], dt[:-1])


def _trapz_series(snapshots):
    rows = []
    for s in snapshots:
        x = s.positions
        rows.append((
            s.time,
            float(np.trapezoid(s.g, x)),
            float(np.trapezoid(s.g**2, x)),
            float(np.trapezoid(s.g_y**2, x)),
            float(np.trapezoid(s.phi, x)),
        ))
    return np.array(rows)


def check_mass_decay(snapshots, *, rate_safety: float = 10.0,
                     monotone_tolerance: float = 1e-12,
                     budget_tolerance: float | None = None) -> list[CheckRecord]:
    """Three families of records from the snapshot integrals:

      mass_rate      |d/dt int g + 2(2 int g^2 + int g_y^2)| by central
                     differences at interior times; the per-time tolerance
                     is O(dt_out^2 + spacing^2) with the dt_out^2 constant
                     estimated from the series' own curvature, so the check
                     stays meaningful when the solution steepens;
      mass_monotone  increments of int g (must be <= 0);
      mass_budget    max(0, int phi(t) - int phi(0)).
    """
    snaps = list(snapshots)
    if len(snaps) < 2:
        raise ShapeError("mass decay needs at least 2 snapshots")
    arr = _trapz_series(snaps)
    t, ig, ig2, igy2, iphi = arr.T
    records = []

    rate = -2.0 * (2.0 * ig2 + igy2)
    uniform = _uniform_triples(t)
    if len(snaps) >= 3 and np.any(uniform):
        dt_out = float(np.median(np.diff(t)))
        h = float(np.max(np.diff(snaps[0].positions)))
        rate_scale = float(np.max(np.abs(rate)))
        # d^3/dt^3 int g per time, measured as the second difference of the rate
        m3 = np.zeros_like(rate)
        if rate.size >= 3:
            m3[1:-1] = np.abs(rate[2:] - 2.0 * rate[1:-1] + rate[:-2]) / dt_out**2
            m3[0], m3[-1] = m3[1], m3[-2]
        d = (ig[2:] - ig[:-2]) / (t[2:] - t[:-2])
        for k in range(d.size):
            if not uniform[k]:
                continue
            resid = abs(d[k] - rate[k + 1])
            tol = rate_safety * (
                dt_out**2 * m3[k + 1] / 6.0 + h**2 * max(abs(rate[k + 1]), rate_scale * 1e-3)
            )
            records.append(CheckRecord.judged(
                "mass_rate", t[k + 1], d[k], rate[k + 1], resid, tol))

    inc = np.diff(ig)
    worst = float(np.max(inc))
    k = int(np.argmax(inc))
    records.append(CheckRecord.judged(
        "mass_monotone", t[k + 1], ig[k + 1], ig[k], max(0.0, worst), monotone_tolerance))

    if budget_tolerance is None:
        h = float(np.max(np.diff(snaps[0].positions)))
        budget_tolerance = 10.0 * h**2 * max(1.0, float(np.max(np.abs(iphi))))
    over = iphi - iphi[0]
    k = int(np.argmax(over))
    records.append(CheckRecord.judged(
        "mass_budget", t[k], iphi[k], iphi[0], max(0.0, float(over[k])), budget_tolerance))
    return records


def check_sup_bound(snapshots, phi0: MomentumProfile, *,
                    tolerance: float = 1e-3) -> CheckRecord:
    """sup over snapshots of (sup |g| - ||phi0||_L1 / 2), clipped at zero."""
    if phi0.sign_class != SIGN_NONNEGATIVE:
        return CheckRecord.skipped("sup_bound")
    bound = 0.5 * phi0.l1_upper_bound()
    sup = -np.inf
    t_at = float("nan")
    for s in snapshots:
        m = float(np.max(np.abs(s.g)))
        if m > sup:
            sup, t_at = m, s.time
    resid = max(0.0, sup - bound)
    return CheckRecord.judged("sup_bound", t_at, sup, bound, resid, tolerance)


def check_riccati(series, g0_at_zero: float, *, even: bool,
                  blow_threshold: float = 1e3,
                  rate_tolerance: float | None = None,
                  comparison_tolerance: float = 1e-3) -> list[CheckRecord]:
    """Checks on the time series of (t, g(t, 0)) for even initial data:

      riccati_rate        central-difference dg/dt <= -sqrt(6) g^2;
      riccati_comparison  g(t,0) <= g0(0)/(1 + sqrt(6) g0(0) t)  [g0(0)<0];
      riccati_estimate    t_last + 1/(sqrt(6)|g_last|) does not exceed the
                          a-priori bound 1/(sqrt(6)|g0(0)|)  [g0(0)<0].
    """
    names = ("riccati_rate", "riccati_comparison", "riccati_estimate")
    if not even:
        return [CheckRecord.skipped(n) for n in names]
    pts = np.asarray(series, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ShapeError("series must be rows of (t, g(t,0)) with at least 2 rows")
    t, g0 = pts[:, 0], pts[:, 1]
    records = []

    uniform = _uniform_triples(t)
    if pts.shape[0] >= 3 and np.any(uniform):
        dt_out = float(np.median(np.diff(t)))
        d = (g0[2:] - g0[:-2]) / (t[2:] - t[:-2])
        for k in range(d.size):
            if not uniform[k]:
                continue
            gk = g0[k + 1]
            # third time derivative of the comparison dynamics scales like
            # 36 sqrt(6) g^4; the tolerance follows that local scale
            tol = rate_tolerance
            if tol is None:
                tol = 10.0 * dt_out**2 * 6.0 * SQRT6 * max(1.0, abs(gk)) ** 4 + 1e-12
            viol = d[k] + SQRT6 * gk**2
            records.append(CheckRecord.judged(
                "riccati_rate", t[k + 1], d[k], -SQRT6 * gk**2,
                max(0.0, float(viol)), tol))

    if g0_at_zero < 0.0:
        t_star = 1.0 / (SQRT6 * abs(g0_at_zero))
        valid = t < t_star
        w = g0_at_zero / (1.0 + SQRT6 * g0_at_zero * t[valid])
        over = g0[valid] - w
        k = int(np.argmax(over))
        records.append(CheckRecord.judged(
            "riccati_comparison", t[valid][k], g0[valid][k], w[k],
            max(0.0, float(over[k])), comparison_tolerance))
        estimate = t[-1] + 1.0 / (SQRT6 * abs(g0[-1])) if g0[-1] != 0.0 else float("inf")
        slack = 1.0 / (SQRT6 * blow_threshold) + comparison_tolerance
        records.append(CheckRecord.judged(
            "riccati_estimate", t[-1], estimate, t_star,
            max(0.0, estimate - t_star), slack))
    else:
        records.append(CheckRecord.skipped("riccati_comparison"))
        records.append(CheckRecord.skipped("riccati_estimate"))
    return records


def check_envelope(snapshot: FieldSnapshot, *, applicable: bool = True,
                   tolerance: float = 1e-5) -> CheckRecord:
    """For nonpositive even data: violations of
    |g(t,0)| e^{-|y|} <= |g(t,y)| <= |g(t,0)| e^{|y|},
    measured relative to |g(t,0)|."""
    if not applicable:
        return CheckRecord.skipped("envelope", snapshot.time)
    pos = snapshot.positions
    absg = np.abs(snapshot.g)
    i0 = int(np.argmin(np.abs(pos)))
    g0 = float(absg[i0])
    if g0 == 0.0:
        resid = float(np.max(absg))  # zero field passes; otherwise meaningless
        return CheckRecord.judged("envelope", snapshot.time, resid, 0.0, resid, tolerance)
    r = np.abs(pos)
    viol = np.maximum(g0 * np.exp(-r) - absg, absg - g0 * np.exp(r))
    resid = max(0.0, float(np.max(viol))) / g0
    return CheckRecord.judged("envelope", snapshot.time, resid, 0.0, resid, tolerance)


def check_transport_consistency(lagrangian_snapshots, eulerian_snapshots, *,
                                tolerance: float | None = None) -> list[CheckRecord]:
    """L-infinity relative difference between the particle momentum and the
    grid momentum interpolated to the particle positions, per common time.

    Particles outside the grid window are excluded (the grid solver never
    sees them); the difference is normalized by the grid solution's sup.
    The default tolerance is 5e-3 at grid spacing 0.04 and scales linearly
    with the spacing (the upwind oracle converges at first order).
    """
    lag = list(lagrangian_snapshots)
    eul = list(eulerian_snapshots)
    if len(lag) != len(eul):
        raise UsageError(f"snapshot counts differ: {len(lag)} vs {len(eul)}")
    if tolerance is None and eul:
        h = float(np.max(np.diff(eul[0].positions)))
        tolerance = 5e-3 * (h / 0.04)
    elif tolerance is None:
        tolerance = 5e-3
    records = []
    for sl, se in zip(lag, eul):
        if abs(sl.time - se.time) > 1e-9 * max(1.0, abs(se.time)):
            raise UsageError(f"snapshot times differ: {sl.time} vs {se.time}")
        lo, hi = se.positions[0], se.positions[-1]
        inside = (sl.positions >= lo) & (sl.positions <= hi)
        phi_e = np.interp(sl.positions[inside], se.positions, se.phi)
        diff = float(np.max(np.abs(sl.phi[inside] - phi_e), initial=0.0))
        scale = float(np.max(np.abs(se.phi)))
        rel = diff / scale if scale > 0.0 else diff
        records.append(CheckRecord.judged(
            "transport_consistency", se.time, rel, 0.0, rel, tolerance))
    return records


# ---------------------------------------------------------------------------
# solver output -> neutral snapshots


def snapshots_from_particles(result) -> list[FieldSnapshot]:
    """Convert a particle IntegrationResult to neutral field snapshots,
    with phi evaluated along the flow."""
    from .lagrangian import momentum_along_flow

    out = []
    for t, ens, fld in result.snapshots:
        out.append(FieldSnapshot(t, ens.gamma, fld.g, fld.g_y, momentum_along_flow(ens)))
    return out


def snapshots_from_grid(result) -> list[FieldSnapshot]:
    """Convert a grid EulerianResult to neutral field snapshots."""
    out = []
    for t, state, fld in result.snapshots:
        out.append(FieldSnapshot(t, state.y, fld.g, fld.g_y, state.phi))
    return out


# ---------------------------------------------------------------------------
# orchestration


def run_standard_checks(
    profile: MomentumProfile,
    snapshots: list[FieldSnapshot],
    *,
    solver: str,
    spacing: float,
    rk_tolerance: float = 1e-8,
    blow_threshold: float = 1e3,
    metadata: dict | None = None,
) -> DiagnosticsReport:
    """Apply every check computable from snapshots alone.

    Sign and gradient tolerances depend on the solver: the particle
    transport formula preserves signs to round-off, while the upwind grid
    solver is allowed a spacing-sized undershoot.
    """
    report = DiagnosticsReport(run_metadata=dict(metadata or {}))
    single = profile.sign_class in (SIGN_NONNEGATIVE, SIGN_NONPOSITIVE)

    if solver == "lagrangian":
        sign_tol = 1e-10
    else:
        sign_tol = max(1e-12, 2.5e-5 * spacing * max(1.0, abs(profile.amplitude)))
    report.extend(check_sign_preservation(snapshots, profile.sign_class,
                                          tolerance=sign_tol))

    grad_tol = 10.0 * (spacing**2 * max(1.0, abs(profile.amplitude)) + rk_tolerance)
    for s in snapshots:
        if single:
            report.checks.append(check_gradient_bound(s, time=s.time, tolerance=grad_tol))
        else:
            report.checks.append(CheckRecord.skipped("gradient_bound", s.time))

    if len(snapshots) >= 2:
        report.extend(check_mass_decay(snapshots))

    report.checks.append(check_sup_bound(snapshots, profile))

    series = []
    for s in snapshots:
        i0 = int(np.argmin(np.abs(s.positions)))
        series.append((s.time, s.g[i0]))
    g0_at_zero = series[0][1]
    report.extend(check_riccati(series, g0_at_zero, even=profile.even,
                                blow_threshold=blow_threshold))

    env_ok = profile.even and profile.sign_class == SIGN_NONPOSITIVE
    for s in snapshots:
        report.checks.append(check_envelope(s, applicable=env_ok))
    return report
