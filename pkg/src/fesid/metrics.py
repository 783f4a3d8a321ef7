"""Agreement metrics between measured and predicted force records."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DataFormatError
from .fileio import atomic_write_text, parse_float, read_text
from .signals import lowpass
from .timeseries import TimeSeries

METRICS_KEYS = ("rmse", "fit_percent", "steady_start", "steady_end", "steady_rmse")


@dataclass(frozen=True)
class ValidationMetrics:
    """Whole-record and post-settling agreement numbers."""

    rmse: float
    fit_percent: float
    steady_state_window: tuple[float, float]
    steady_rmse: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "rmse", float(self.rmse))
        object.__setattr__(self, "fit_percent", float(self.fit_percent))
        object.__setattr__(
            self, "steady_state_window", tuple(float(v) for v in self.steady_state_window)
        )
        object.__setattr__(self, "steady_rmse", float(self.steady_rmse))
        if math.isnan(self.rmse) or self.rmse < 0:
            raise ArgumentError(f"rmse must be >= 0, got {self.rmse}")
        if self.fit_percent > 100.0:
            raise ArgumentError(f"fit_percent cannot exceed 100, got {self.fit_percent}")
        start, end = self.steady_state_window
        if not (0 <= start < end):
            raise ArgumentError(f"bad steady-state window {self.steady_state_window}")


def validate(
    measured: TimeSeries,
    predicted: TimeSeries,
    settle_time: float,
    lpf_hz: float | None = None,
) -> ValidationMetrics:
    """Compare prediction with measurement, optionally band-limited.

    The low-pass, when given, is applied identically to both series
    before any metric.  The steady window runs from ``settle_time``
    after record start to the end, so transient mismatch is reported
    separately from settled agreement.
    """
    if abs(measured.dt - predicted.dt) > 1e-12 * measured.dt:
        raise ArgumentError(f"sample intervals differ: {measured.dt} vs {predicted.dt}")
    if measured.n != predicted.n:
        raise ArgumentError(f"record lengths differ: {measured.n} vs {predicted.n}")
    if not 0 <= settle_time < measured.duration:
        raise ArgumentError(
            f"settle_time {settle_time} s outside record of {measured.duration} s"
        )
    if lpf_hz is not None:
        measured = lowpass(measured, lpf_hz)
        predicted = lowpass(predicted, lpf_hz)
    m = measured.samples
    p = predicted.samples
    err = m - p
    rmse = float(np.sqrt(np.mean(err**2)))
    spread = float(np.linalg.norm(m - np.mean(m)))
    if spread == 0:
        fit = 100.0 if rmse == 0 else -math.inf
    else:
        fit = 100.0 * (1.0 - float(np.linalg.norm(err)) / spread)
    start_idx = int(math.ceil(settle_time / measured.dt - 1e-9))
    steady_rmse = float(np.sqrt(np.mean(err[start_idx:] ** 2)))
    return ValidationMetrics(
        rmse=rmse,
        fit_percent=fit,
        steady_state_window=(settle_time, measured.duration),
        steady_rmse=steady_rmse,
    )


def write_validation_metrics(metrics: ValidationMetrics, path: str) -> None:
    values = {
        "rmse": metrics.rmse,
        "fit_percent": metrics.fit_percent,
        "steady_start": metrics.steady_state_window[0],
        "steady_end": metrics.steady_state_window[1],
        "steady_rmse": metrics.steady_rmse,
    }
    lines = [f"{key} = {values[key]!r}" for key in METRICS_KEYS]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_validation_metrics(path: str) -> ValidationMetrics:
    text = read_text(path)
    values: dict[str, float] = {}
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, raw = stripped.partition("=")
        if not sep:
            raise DataFormatError(f"{path}:{i}: expected 'key = value'")
        key = key.strip()
        if key not in METRICS_KEYS:
            raise DataFormatError(f"{path}:{i}: unknown key {key!r}")
        if key in values:
            raise DataFormatError(f"{path}:{i}: duplicate key {key!r}")
        values[key] = parse_float(raw.strip(), f"{path}:{i}: {key}")
    missing = [k for k in METRICS_KEYS if k not in values]
    if missing:
        raise DataFormatError(f"{path}: missing keys: {', '.join(missing)}")
    try:
        return ValidationMetrics(
            rmse=values["rmse"],
            fit_percent=values["fit_percent"],
            steady_state_window=(values["steady_start"], values["steady_end"]),
            steady_rmse=values["steady_rmse"],
        )
    except ArgumentError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
