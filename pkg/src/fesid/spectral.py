"""Discrete transforms and transfer-function estimation.

The estimator is the Welch-style cross/auto spectral ratio: both records
are cut into Hann-windowed overlapping segments, per-bin cross and auto
powers are summed over segments, and the gain at each bin is their
ratio.  Bins whose summed auto power falls below a floor are dropped, as
is DC.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateInputError, DomainError
from .fileio import atomic_write_text, parse_float, read_text
from .timeseries import TimeSeries

# auto-power floor relative to the strongest bin; quieter bins carry no
# usable excitation and are omitted from the estimate
POWER_FLOOR = 1e-12

FREQUENCY_RESPONSE_HEADER = "f_hz,re,im"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ComplexSpectrum:
    """Forward DFT bins at spacing ``df``; bin k sits at k*df."""

    df: float
    bins: np.ndarray
    source_samples: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.df) or self.df <= 0:
            raise ArgumentError(f"df must be positive and finite, got {self.df}")
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.ndim != 1 or bins.size < 1:
            raise ArgumentError("bins must be a non-empty 1-d array")
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)

    @property
    def n(self) -> int:
        return self.bins.size


@dataclass(frozen=True)
class FrequencyResponse:
    """Complex gain sampled at strictly increasing positive frequencies."""

    f_hz: np.ndarray
    gain: np.ndarray
    n_segments: int = 0
    window: str = ""

    def __post_init__(self) -> None:
        f = np.asarray(self.f_hz, dtype=np.float64)
        g = np.asarray(self.gain, dtype=np.complex128)
        if f.ndim != 1 or f.size < 1 or g.shape != f.shape:
            raise ArgumentError("f_hz and gain must be 1-d arrays of equal nonzero length")
        if not np.all(np.isfinite(f)) or f[0] <= 0 or np.any(np.diff(f) <= 0):
            raise ArgumentError("frequencies must be finite, positive, strictly increasing")
        f.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "f_hz", f)
        object.__setattr__(self, "gain", g)

    @property
    def n(self) -> int:
        return self.f_hz.size


def fft(ts: TimeSeries, n: int) -> ComplexSpectrum:
    """Forward DFT of the series, zero-padded or truncated to length n.

    Plain e^{-j2*pi*k*m/N} kernel with no forward normalization, so a
    full-scale sine at bin k shows magnitude n/2 there.
    """
    if not _is_power_of_two(n):
        raise ArgumentError(f"transform length must be a power of two, got {n}")
    bins = np.fft.fft(ts.samples, n=n)
    return ComplexSpectrum(df=1.0 / (n * ts.dt), bins=bins, source_samples=ts.n)


def ifft(spectrum: ComplexSpectrum) -> np.ndarray:
    """Inverse of :func:`fft`; complex output, take .real for real input."""
    return np.fft.ifft(spectrum.bins)


def etfe(
    inp: TimeSeries,
    out: TimeSeries,
    segment_len: int,
    overlap_fraction: float = 0.5,
) -> FrequencyResponse:
    """Empirical transfer-function estimate from one input/output record.

    Hann-windowed segments with the given overlap; the per-bin estimate
    is sum(Y * conj(X)) / sum(|X|^2) over segments.  DC and bins whose
    auto power is below POWER_FLOOR of the maximum are omitted.
    """
    if abs(inp.dt - out.dt) > 1e-12 * inp.dt:
        raise ArgumentError(f"sample intervals differ: {inp.dt} vs {out.dt}")
    if inp.n != out.n:
        raise ArgumentError(f"record lengths differ: {inp.n} vs {out.n}")
    if not _is_power_of_two(segment_len):
        raise ArgumentError(f"segment_len must be a power of two, got {segment_len}")
    if segment_len > inp.n:
        raise ArgumentError(f"segment_len {segment_len} exceeds record length {inp.n}")
    if not 0.0 <= overlap_fraction < 1.0:
        raise ArgumentError(f"overlap_fraction must lie in [0, 1), got {overlap_fraction}")

    length = segment_len
    hop = max(1, int(round(length * (1.0 - overlap_fraction))))
    n_segments = 1 + (inp.n - length) // hop
    # periodic Hann, so pure tones at bin centers leak only into DC
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)

    half = length // 2
    auto = np.zeros(half + 1)
    cross = np.zeros(half + 1, dtype=np.complex128)
    x = inp.samples
    y = out.samples
    for s in range(n_segments):
        lo = s * hop
        xs = np.fft.rfft(window * x[lo : lo + length])
        ys = np.fft.rfft(window * y[lo : lo + length])
        auto += (xs * np.conj(xs)).real
        cross += ys * np.conj(xs)

    # bins 1..L/2: DC carries only offsets, not dynamics
    auto = auto[1:]
    cross = cross[1:]
    peak = auto.max()
    if peak <= 0:
        raise DegenerateInputError("input carries no power outside DC")
    keep = auto >= POWER_FLOOR * peak
    if not np.any(keep):
        raise DegenerateInputError("no bin carries auto power above the floor")
    df = 1.0 / (length * inp.dt)
    freqs = df * np.arange(1, half + 1)
    return FrequencyResponse(
        f_hz=freqs[keep],
        gain=cross[keep] / auto[keep],
        n_segments=n_segments,
        window="hann",
    )


def magnitude_db(fr: FrequencyResponse) -> list[tuple[float, float]]:
    """Gain magnitude in decibels per retained frequency."""
    mags = np.abs(fr.gain)
    zero = np.flatnonzero(mags == 0)
    if zero.size:
        raise DomainError(f"zero gain at {fr.f_hz[zero[0]]} Hz has no decibel value")
    return list(zip(fr.f_hz.tolist(), (20.0 * np.log10(mags)).tolist()))


def write_frequency_response_csv(fr: FrequencyResponse, path: str) -> None:
    lines = [FREQUENCY_RESPONSE_HEADER]
    for f, re, im in zip(
        fr.f_hz.tolist(), fr.gain.real.tolist(), fr.gain.imag.tolist()
    ):
        lines.append(f"{f:.16e},{re!r},{im!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_frequency_response_csv(path: str) -> FrequencyResponse:
    from .errors import DataFormatError

    text = read_text(path)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != FREQUENCY_RESPONSE_HEADER:
        raise DataFormatError(f"{path}: expected header '{FREQUENCY_RESPONSE_HEADER}'")
    freqs = []
    gains = []
    for i, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 3:
            raise DataFormatError(f"{path}:{i}: expected 3 fields, got {len(fields)}")
        freqs.append(parse_float(fields[0], f"{path}:{i}: frequency"))
        gains.append(
            complex(
                parse_float(fields[1], f"{path}:{i}: real part"),
                parse_float(fields[2], f"{path}:{i}: imaginary part"),
            )
        )
    if not freqs:
        raise DataFormatError(f"{path}: no data rows")
    try:
        return FrequencyResponse(f_hz=np.array(freqs), gain=np.array(gains))
    except ArgumentError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
