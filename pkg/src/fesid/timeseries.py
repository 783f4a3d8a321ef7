"""Uniformly sampled time series and its CSV form.

The CSV layout is ``t,value,unit`` with one row per sample.  Times are
written with 17 significant digits and values with shortest round-trip
notation, so write-then-read reproduces every double exactly.  Readers
refuse files whose time column is not a uniform grid: the analysis code
assumes a single ``dt`` throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError, DataFormatError
from .fileio import atomic_write_text, parse_float, read_text

UNITS = ("volt", "ampere", "newton", "dimensionless")

# largest tolerated deviation from a uniform time grid, in seconds
GRID_TOLERANCE = 1e-9

CSV_HEADER = "t,value,unit"


@dataclass(frozen=True)
class TimeSeries:
    """Immutable uniformly sampled signal.

    ``samples`` is stored as a read-only float64 array; transforming
    operations return new instances instead of mutating.
    """

    t0: float
    dt: float
    samples: np.ndarray = field(repr=False)
    unit: str

    def __post_init__(self) -> None:
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise ArgumentError(f"dt must be positive and finite, got {self.dt}")
        if self.unit not in UNITS:
            raise ArgumentError(f"unknown unit {self.unit!r}, expected one of {UNITS}")
        arr = np.asarray(self.samples, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size < 1:
            raise ArgumentError("samples must be a 1-d array with at least one element")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def n(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.n * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def with_samples(self, samples: np.ndarray, unit: str | None = None) -> "TimeSeries":
        """New series on the same grid, optionally relabelled."""
        return replace(self, samples=samples, unit=unit if unit is not None else self.unit)


def write_timeseries_csv(ts: TimeSeries, path: str) -> None:
    """Serialize to ``t,value,unit`` rows with LF endings, atomically."""
    times = ts.times
    rows = [CSV_HEADER]
    unit = ts.unit
    for t, v in zip(times.tolist(), ts.samples.tolist()):
        rows.append(f"{t:.16e},{v!r},{unit}")
    rows.append("")
    atomic_write_text(path, "\n".join(rows))


def read_timeseries_csv(path: str) -> TimeSeries:
    """Parse a ``t,value,unit`` file, enforcing grid uniformity.

    A single-row file is rejected: ``dt`` cannot be recovered from one
    sample in this layout.
    """
    text = read_text(path)
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise DataFormatError(f"{path}: expected header {CSV_HEADER!r}")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) < 2:
        raise DataFormatError(f"{path}: need at least two samples to recover dt")
    times = np.empty(len(body))
    values = np.empty(len(body))
    unit = None
    for i, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != 3:
            raise DataFormatError(f"{path}: line {i + 2}: expected 3 fields, got {len(parts)}")
        times[i] = parse_float(parts[0], f"{path}: line {i + 2}")
        values[i] = parse_float(parts[1], f"{path}: line {i + 2}")
        if unit is None:
            unit = parts[2]
        elif parts[2] != unit:
            raise DataFormatError(f"{path}: line {i + 2}: unit changed from {unit!r} to {parts[2]!r}")
    if unit not in UNITS:
        raise DataFormatError(f"{path}: unknown unit {unit!r}")
    if not np.all(np.isfinite(values)) or not np.all(np.isfinite(times)):
        raise DataFormatError(f"{path}: non-finite entries")
    n = len(body)
    dt = (times[-1] - times[0]) / (n - 1)
    if dt <= 0:
        raise DataFormatError(f"{path}: time column is not increasing")
    grid = times[0] + dt * np.arange(n)
    worst = float(np.max(np.abs(times - grid)))
    if worst > GRID_TOLERANCE:
        raise DataFormatError(
            f"{path}: non-uniform sampling, worst grid deviation {worst:.3e} s"
        )
    return TimeSeries(t0=float(times[0]), dt=float(dt), samples=values, unit=unit)
