"""Stable on-disk formats for snapshots, time series, and diagnostics.

All floating-point values are written with 17 significant digits
(%.16e), which round-trips binary64 exactly, so re-running a deterministic
configuration reproduces every output file byte for byte.
"""

from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsReport, FieldSnapshot
from .errors import ShapeError

__all__ = [
    "snapshot_filename",
    "write_snapshot",
    "read_snapshot",
    "write_timeseries",
    "read_timeseries",
    "write_diagnostics",
    "TIMESERIES_COLUMNS",
]

TIMESERIES_COLUMNS = (
    "t",
    "g_at_zero",
    "int_g",
    "int_g2",
    "int_gy2",
    "min_phi",
    "max_phi",
    "min_gamma_y",
    "max_gamma_y",
)

FMT = "%.16e"


def snapshot_filename(index: int) -> str:
    return f"snapshot_{index:06d}.dat"


def write_snapshot(path, snap: FieldSnapshot, *, solver: str, n: int, half_width: float) -> None:
    with open(path, "w") as fh:
        fh.write(f"# time {FMT % snap.time}\n")
        fh.write(f"# solver {solver}\n")
        fh.write(f"# n {n}\n")
        fh.write(f"# L {FMT % half_width}\n")
        fh.write("# position g g_y phi\n")
        for row in zip(snap.positions, snap.g, snap.g_y, snap.phi):
            fh.write(" ".join(FMT % v for v in row) + "\n")


def read_snapshot(path) -> tuple[FieldSnapshot, dict]:
    meta: dict = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            parts = line[1:].split()
            if len(parts) == 2:
                meta[parts[0]] = parts[1]
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 4:
        raise ShapeError(f"{path}: expected 4 columns (position g g_y phi)")
    snap = FieldSnapshot(
        time=float(meta.get("time", "nan")),
        positions=data[:, 0],
        g=data[:, 1],
        g_y=data[:, 2],
        phi=data[:, 3],
    )
    return snap, meta


def write_timeseries(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("# " + " ".join(TIMESERIES_COLUMNS) + "\n")
        for row in rows:
            if len(row) != len(TIMESERIES_COLUMNS):
                raise ShapeError("time-series row has wrong number of columns")
            fh.write(" ".join(FMT % v for v in row) + "\n")


def read_timeseries(path) -> np.ndarray:
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != len(TIMESERIES_COLUMNS):
        raise ShapeError(f"{path}: expected {len(TIMESERIES_COLUMNS)} columns")
    return data


def write_diagnostics(report: DiagnosticsReport, directory) -> None:
    directory = Path(directory)
    (directory / "diagnostics.txt").write_text(report.to_text())
    (directory / "diagnostics.csv").write_text(report.to_table())
