"""Command-line front end: run solvers, cross-validate them, and re-check
existing output directories.

Subcommands:

  run            integrate the configured solver(s), run all applicable
                 diagnostics, write snapshots / time series / reports
  compare        run both solvers on matched settings and cross-validate;
                 with `resolutions` set, also write a convergence table
  diagnose       re-run the file-computable checks on an output directory
  list-profiles  show the built-in initial-momentum families

Exit codes: 0 completed with all checks passing, 1 configuration error,
2 blowup detected, 3 validity exit or step underflow without a declared
expectation, 4 diagnostic failure.

Everything is deterministic: the same configuration produces byte-identical
output files, and each output directory carries the fully resolved
configuration (config.echo) used for the run.
"""

import argparse
import shutil
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import eulerian as eu
from . import lagrangian as lg
from .config import SolverConfig, config_echo, parse_config
from .errors import ConfigError, ContactFlowError
from .initdata import MomentumProfile, blowup_profile, load_profile, rational_bump
from .kernel import WeightedSamples
from .output import (
    read_snapshot,
    snapshot_filename,
    write_diagnostics,
    write_snapshot,
    write_timeseries,
)

__all__ = ["main", "execute_run", "execute_compare", "execute_diagnose", "build_profile"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BLOWUP = 2
EXIT_INCOMPLETE = 3
EXIT_DIAG_FAIL = 4

_PRIORITY = {EXIT_OK: 0, EXIT_BLOWUP: 1, EXIT_INCOMPLETE: 2, EXIT_DIAG_FAIL: 3}


def build_profile(cfg: SolverConfig) -> MomentumProfile:
    if cfg.family == "rational_bump":
        return rational_bump(cfg.amplitude)
    if cfg.family == "scaled_rational_bump":
        return blowup_profile(cfg.target_g0, cfg.L, cfg.n)
    return load_profile(cfg.profile_path)


@dataclass
class RunArtifacts:
    solver: str
    snapshots: list[diag.FieldSnapshot]
    termination: str
    final_time: float
    blowup_estimate: float | None
    gamma_y_ranges: list[tuple[float, float]] | None  # None for the grid solver
    factorization: diag.CheckRecord | None = None


def _solve(cfg: SolverConfig, solver: str, profile: MomentumProfile,
           n: int | None = None) -> RunArtifacts:
    n = cfg.n if n is None else n
    if solver == "lagrangian":
        ens = lg.ParticleEnsemble.from_profile(profile, cfg.L, n)
        res = lg.integrate(
            ens, cfg.t_end,
            output_interval=cfg.output_interval,
            rk_tolerance=cfg.rk_tolerance,
            a_min=cfg.a_min, b_max=cfg.b_max,
            blow_threshold=cfg.blow_threshold,
            dt_min=cfg.dt_min, dt_max=cfg.dt_max,
        )
        ranges = [(float(s.ensemble.gamma_y.min()), float(s.ensemble.gamma_y.max()))
                  for s in res.snapshots]
        # the stored field was reconstructed from exactly these samples, so
        # the algebraic factorization of g^2 - g_y^2 must hold to round-off
        fact = diag.check_factorization_identity(
            lg.effective_samples(res.final.ensemble), res.final.field)
        return RunArtifacts(solver, diag.snapshots_from_particles(res),
                            res.termination, res.final_time, res.blowup_estimate,
                            ranges, fact)
    state = eu.GridState.from_profile(profile, cfg.L, n)
    res = eu.eulerian_integrate(
        state, cfg.t_end,
        output_interval=cfg.output_interval,
        cfl=cfg.cfl, dt_min=cfg.dt_min, dt_max=cfg.dt_max,
    )
    fin = res.final.state
    fact = diag.check_factorization_identity(
        WeightedSamples(fin.y, fin.phi, fin.weights), res.final.field)
    return RunArtifacts(solver, diag.snapshots_from_grid(res),
                        res.termination, res.final_time, None, None, fact)


def _timeseries_rows(art: RunArtifacts) -> list[tuple]:
    rows = []
    for k, s in enumerate(art.snapshots):
        x = s.positions
        i0 = int(np.argmin(np.abs(x)))
        if art.gamma_y_ranges is not None:
            gy_lo, gy_hi = art.gamma_y_ranges[k]
        else:
            gy_lo = gy_hi = float("nan")
        rows.append((
            s.time,
            float(s.g[i0]),
            float(np.trapezoid(s.g, x)),
            float(np.trapezoid(s.g**2, x)),
            float(np.trapezoid(s.g_y**2, x)),
            float(np.min(s.phi)),
            float(np.max(s.phi)),
            gy_lo,
            gy_hi,
        ))
    return rows


def _spacing(cfg: SolverConfig, n: int | None = None) -> float:
    n = cfg.n if n is None else n
    return 2.0 * cfg.L / (n - 1)


def _termination_exit(termination: str, expect_blowup: bool) -> int:
    if termination == lg.BLOWUP_DETECTED:
        return EXIT_BLOWUP
    if termination in (lg.VALIDITY_EXIT, lg.STEP_UNDERFLOW, eu.DIVERGED):
        return EXIT_BLOWUP if expect_blowup else EXIT_INCOMPLETE
    return EXIT_OK


def _combine(codes) -> int:
    return max(codes, key=lambda c: _PRIORITY[c], default=EXIT_OK)


def _write_run_dir(out: Path, cfg: SolverConfig, art: RunArtifacts,
                   profile: MomentumProfile) -> diag.DiagnosticsReport:
    out.mkdir(parents=True, exist_ok=True)
    echo = config_echo(replace(cfg, solver=art.solver))
    (out / "config.echo").write_text(echo)
    if cfg.family == "tabulated":
        shutil.copyfile(cfg.profile_path, out / "profile_table.dat")
    for k, snap in enumerate(art.snapshots):
        write_snapshot(out / snapshot_filename(k), snap,
                       solver=art.solver, n=cfg.n, half_width=cfg.L)
    write_timeseries(out / "timeseries.dat", _timeseries_rows(art))
    report = diag.run_standard_checks(
        profile, art.snapshots,
        solver=art.solver,
        spacing=_spacing(cfg),
        rk_tolerance=cfg.rk_tolerance,
        blow_threshold=cfg.blow_threshold,
        metadata={
            "config_hash": diag.config_hash(echo),
            "solver": art.solver,
            "n": cfg.n,
            "L": cfg.L,
        },
    )
    if art.factorization is not None:
        report.checks.append(art.factorization)
    write_diagnostics(report, out)
    lines = [
        f"termination {art.termination}",
        f"final_time {float(art.final_time)!r}",
        f"blowup_estimate "
        f"{'' if art.blowup_estimate is None else repr(float(art.blowup_estimate))}",
    ]
    (out / "summary.dat").write_text("\n".join(lines) + "\n")
    return report


def _common_prefix(a: list[diag.FieldSnapshot], b: list[diag.FieldSnapshot]):
    """Longest leading run of snapshot pairs with matching times (a blowup
    run is shorter; comparison truncates to the last common time)."""
    m = 0
    for sa, sb in zip(a, b):
        if abs(sa.time - sb.time) > 1e-9 * max(1.0, abs(sa.time)):
            break
        m += 1
    return a[:m], b[:m]


def _comparison_records(lag: RunArtifacts, eul: RunArtifacts):
    la, eb = _common_prefix(lag.snapshots, eul.snapshots)
    records = diag.check_transport_consistency(la, eb)
    rows = []
    for (sl, se, rec) in zip(la, eb, records):
        inside = (sl.positions >= se.positions[0]) & (sl.positions <= se.positions[-1])
        g_lag = np.interp(se.positions, sl.positions[inside], sl.g[inside])
        field_diff = float(np.max(np.abs(g_lag - se.g)))
        rows.append((se.time, rec.residual, field_diff))
    return records, rows


def execute_run(cfg: SolverConfig, out_dir) -> int:
    out = Path(out_dir)
    profile = build_profile(cfg)
    solvers = ["lagrangian", "eulerian"] if cfg.solver == "both" else [cfg.solver]
    arts = []
    codes = []
    for solver in solvers:
        art = _solve(cfg, solver, profile)
        sub = out if len(solvers) == 1 else out / solver
        report = _write_run_dir(sub, cfg, art, profile)
        arts.append(art)
        code = _termination_exit(art.termination, cfg.expect_blowup)
        if not report.passed:
            code = EXIT_DIAG_FAIL
        codes.append(code)
    if len(arts) == 2:
        (out / "config.echo").write_text(config_echo(cfg))
        records, rows = _comparison_records(arts[0], arts[1])
        cross = diag.DiagnosticsReport(checks=records)
        write_diagnostics(cross, _ensure_dir(out / "comparison"))
        _write_comparison_rows(out / "comparison" / "fields.dat", rows)
        if not cross.passed:
            codes.append(EXIT_DIAG_FAIL)
    return _combine(codes)


def _ensure_dir(p: Path) -> Path:
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_comparison_rows(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("# t transport_rel field_linf\n")
        for row in rows:
            fh.write(" ".join(f"{v:.16e}" for v in row) + "\n")


def execute_compare(cfg: SolverConfig, out_dir) -> int:
    """Both solvers on matched settings, optionally over several resolutions."""
    out = Path(out_dir)
    cfg = replace(cfg, solver="both")
    code = execute_run(cfg, out)
    resolutions = cfg.resolution_list()
    if resolutions:
        profile = build_profile(cfg)
        lines = ["# n transport_rel field_linf  (at final common time)"]
        for m in resolutions:
            lag = _solve(cfg, "lagrangian", profile, n=m)
            eul = _solve(cfg, "eulerian", profile, n=m)
            _records, rows = _comparison_records(lag, eul)
            t, rel, fdiff = rows[-1]
            lines.append(f"{m} {rel:.16e} {fdiff:.16e}")
        (out / "convergence.dat").write_text("\n".join(lines) + "\n")
    return code


def _load_run_dir(path: Path):
    cfg = parse_config(path / "config.echo")
    snaps = []
    for f in sorted(path.glob("snapshot_*.dat")):
        snap, _meta = read_snapshot(f)
        snaps.append(snap)
    return cfg, snaps


def execute_diagnose(out_dir) -> int:
    """Recompute every snapshot-computable check from the files alone."""
    out = Path(out_dir)
    run_dirs = [d for d in (out / "lagrangian", out / "eulerian") if d.is_dir()]
    if not run_dirs:
        run_dirs = [out]
    codes = []
    all_snaps = {}
    for d in run_dirs:
        cfg, snaps = _load_run_dir(d)
        if cfg.family == "tabulated":
            cfg = replace(cfg, profile_path=str(d / "profile_table.dat"))
        profile = build_profile(cfg)
        echo = config_echo(cfg)
        report = diag.run_standard_checks(
            profile, snaps,
            solver=cfg.solver,
            spacing=_spacing(cfg),
            rk_tolerance=cfg.rk_tolerance,
            blow_threshold=cfg.blow_threshold,
            metadata={
                "config_hash": diag.config_hash(echo),
                "solver": cfg.solver,
                "n": cfg.n,
                "L": cfg.L,
            },
        )
        write_diagnostics(report, d)
        all_snaps[cfg.solver] = snaps
        codes.append(EXIT_OK if report.passed else EXIT_DIAG_FAIL)
    if {"lagrangian", "eulerian"} <= set(all_snaps):
        la, eb = _common_prefix(all_snaps["lagrangian"], all_snaps["eulerian"])
        cross = diag.DiagnosticsReport(checks=diag.check_transport_consistency(la, eb))
        write_diagnostics(cross, _ensure_dir(out / "comparison"))
        codes.append(EXIT_OK if cross.passed else EXIT_DIAG_FAIL)
    return _combine(codes)


def list_profiles() -> str:
    return "\n".join([
        "rational_bump          phi0(y) = amplitude / (1+y^2)^2;",
        "                       amplitude > 0 decays globally, amplitude < 0 blows up",
        "scaled_rational_bump   nonpositive bump scaled so that g0(0) = target_g0 (< 0)",
        "tabulated              two-column text file (position value) via profile_path",
    ]) + "\n"


# ---------------------------------------------------------------------------
# argument parsing

_OVERRIDE_KEYS = (
    "solver", "t_end", "output_interval", "expect_blowup",
    "family", "amplitude", "target_g0", "profile_path",
    "L", "n", "resolutions",
    "rk_tolerance", "cfl", "a_min", "b_max", "blow_threshold", "dt_min", "dt_max",
)

_BOOL_KEYS = {"expect_blowup"}
_INT_KEYS = {"n"}
_FLOAT_KEYS = {
    "t_end", "output_interval", "amplitude", "target_g0", "L",
    "rk_tolerance", "cfl", "a_min", "b_max", "blow_threshold", "dt_min", "dt_max",
}


def _add_override_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="configuration file (flat key = value with sections)")
    sub.add_argument("--out", required=True, help="output directory")
    for key in _OVERRIDE_KEYS:
        if key in _BOOL_KEYS:
            sub.add_argument(f"--{key}", choices=("true", "false"), default=None)
        elif key in _INT_KEYS:
            sub.add_argument(f"--{key}", type=int, default=None)
        elif key in _FLOAT_KEYS:
            sub.add_argument(f"--{key}", type=float, default=None)
        else:
            sub.add_argument(f"--{key}", default=None)


def _config_from_args(args) -> SolverConfig:
    cfg = parse_config(args.config) if args.config else SolverConfig()
    for key in _OVERRIDE_KEYS:
        val = getattr(args, key, None)
        if val is None:
            continue
        if key in _BOOL_KEYS:
            val = val == "true"
        setattr(cfg, key, val)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="contactflow",
        description="particle and grid solvers for the contact momentum equation",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    _add_override_flags(subs.add_parser("run", help="integrate and diagnose"))
    _add_override_flags(subs.add_parser("compare", help="run both solvers and cross-validate"))
    d = subs.add_parser("diagnose", help="re-run checks on an output directory")
    d.add_argument("--out", required=True)
    subs.add_parser("list-profiles", help="show built-in momentum families")
    args = parser.parse_args(argv)

    try:
        if args.command == "list-profiles":
            sys.stdout.write(list_profiles())
            return EXIT_OK
        if args.command == "diagnose":
            return execute_diagnose(args.out)
        cfg = _config_from_args(args)
        if args.command == "run":
            return execute_run(cfg, args.out)
        return execute_compare(cfg, args.out)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except ContactFlowError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
