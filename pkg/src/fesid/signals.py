"""Stimulus generation and basic conditioning.

Four generators cover the protocols used throughout: maximal-length
binary sequences clocked at a carrier rate, randomly gated pulse trains,
amplitude staircases, and single rectangular steps.  Conditioning is a
zero-phase Butterworth low-pass, an anti-aliased decimator built on it,
and seeded additive Gaussian noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .errors import ArgumentError, ConfigurationError, ResolutionError
from .timeseries import TimeSeries

# Maximal-length feedback taps for Fibonacci LFSRs, indexed by register
# length.  Tap positions are 1-based; the mask XORs those stages to form
# the feedback bit.
_MSEQ_TAPS = {
    2: (2, 1),
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 11, 10, 4),
    13: (13, 12, 11, 8),
    14: (14, 13, 12, 2),
    15: (15, 14),
    16: (16, 15, 13, 4),
    17: (17, 14),
    18: (18, 11),
    19: (19, 18, 17, 14),
    20: (20, 17),
    21: (21, 19),
    22: (22, 21),
    23: (23, 18),
    24: (24, 23, 22, 17),
    25: (25, 22),
    26: (26, 25, 24, 20),
    27: (27, 26, 25, 22),
    28: (28, 25),
    29: (29, 27),
    30: (30, 29, 28, 7),
    31: (31, 28),
}

# relative slack when checking that a carrier or slot period is an
# integer number of samples
_GRID_SLACK = 1e-6


@dataclass(frozen=True)
class BiphasicWaveform:
    """One stimulation pulse: positive phase, optional gap, negative phase.

    ``neg_amplitude`` is a magnitude; the rendered negative phase has
    opposite sign to the positive one.
    """

    pos_width: float
    pos_amplitude: float
    neg_width: float = 0.0
    neg_amplitude: float = 0.0
    gap: float = 0.0

    def __post_init__(self) -> None:
        for name in ("pos_width", "pos_amplitude", "neg_width", "neg_amplitude", "gap"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ArgumentError(f"{name} must be finite and non-negative, got {v}")
        if self.pos_width <= 0 and self.neg_width <= 0:
            raise ArgumentError("waveform needs at least one phase of nonzero width")

    @property
    def duration(self) -> float:
        return self.pos_width + self.gap + self.neg_width

    @property
    def charge(self) -> float:
        return self.pos_width * self.pos_amplitude - self.neg_width * self.neg_amplitude

    def is_charge_balanced(self, rel_tol: float = 1e-9) -> bool:
        scale = max(self.pos_width * self.pos_amplitude, self.neg_width * self.neg_amplitude)
        return scale == 0 or abs(self.charge) <= rel_tol * scale

    def scaled(self, factor: float) -> "BiphasicWaveform":
        """Amplitude-scaled copy; widths are untouched."""
        if not np.isfinite(factor) or factor < 0:
            raise ArgumentError(f"scale factor must be finite and non-negative, got {factor}")
        return replace(
            self,
            pos_amplitude=self.pos_amplitude * factor,
            neg_amplitude=self.neg_amplitude * factor,
        )

    def flipped(self) -> "BiphasicWaveform":
        """Mirror polarity: the strong phase becomes the negative one."""
        return BiphasicWaveform(
            pos_width=self.neg_width,
            pos_amplitude=self.neg_amplitude,
            neg_width=self.pos_width,
            neg_amplitude=self.pos_amplitude,
            gap=self.gap,
        )

    @classmethod
    def charge_balanced(
        cls, pos_width: float, pos_amplitude: float, neg_width: float, gap: float = 0.0
    ) -> "BiphasicWaveform":
        """Derive the negative amplitude so net charge is zero."""
        if neg_width <= 0:
            raise ArgumentError("charge balancing needs a nonzero negative phase width")
        return cls(
            pos_width=pos_width,
            pos_amplitude=pos_amplitude,
            neg_width=neg_width,
            neg_amplitude=pos_amplitude * pos_width / neg_width,
            gap=gap,
        )

    @classmethod
    def default(cls, amplitude: float) -> "BiphasicWaveform":
        """One-sided shape: 0.5 ms strong positive phase, 5 ms weak tail.

        The tail carries a tenth of the amplitude for ten times the
        width, so the pulse is charge balanced while only the leading
        phase is meant to cross a recruitment threshold.
        """
        return cls(
            pos_width=0.5e-3,
            pos_amplitude=amplitude,
            neg_width=5e-3,
            neg_amplitude=amplitude / 10.0,
            gap=0.0,
        )

    def render(self, dt: float) -> np.ndarray:
        """Sample the pulse on a ``dt`` grid, preserving phase areas.

        Each sample is the mean of the continuous waveform over its
        interval, so the rendered integral equals the analytic charge
        regardless of how phase edges fall against the grid.
        """
        if dt <= 0:
            raise ArgumentError(f"dt must be positive, got {dt}")
        edges = np.array([
            0.0,
            self.pos_width,
            self.pos_width + self.gap,
            self.duration,
        ])
        levels = np.array([self.pos_amplitude, 0.0, -self.neg_amplitude])
        n = int(math.ceil(self.duration / dt - 1e-9))

        def charge_upto(t: np.ndarray) -> np.ndarray:
            q = np.zeros_like(t)
            for j in range(3):
                seg = np.clip(t, edges[j], edges[j + 1]) - edges[j]
                q += levels[j] * seg
            return q

        bounds = dt * np.arange(n + 1)
        q = charge_upto(bounds)
        return np.diff(q) / dt


@dataclass(frozen=True)
class PulseTrainSpec:
    """Slot schedule for a randomly gated train of one waveform."""

    rate: float
    duration: float
    waveform: BiphasicWaveform
    fire_probability: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rate <= 0:
            raise ArgumentError(f"rate must be positive, got {self.rate}")
        if self.duration <= 0:
            raise ArgumentError(f"duration must be positive, got {self.duration}")
        if not 0.0 <= self.fire_probability <= 1.0:
            raise ArgumentError(
                f"fire_probability must lie in [0, 1], got {self.fire_probability}"
            )


def _check_waveform_resolution(waveform: BiphasicWaveform, dt: float) -> None:
    # each nonzero phase must span at least two samples
    for name, width in (("positive", waveform.pos_width), ("negative", waveform.neg_width)):
        if 0 < width < 2 * dt:
            raise ResolutionError(
                f"{name} phase width {width} s is narrower than two samples at dt={dt}"
            )


def generate_pulse_train(spec: PulseTrainSpec, dt: float, unit: str = "volt") -> TimeSeries:
    """Render the slot schedule; each slot fires independently at random.

    One uniform draw is consumed per slot in slot order, so a fixed seed
    reproduces the gating exactly.
    """
    slot_period = 1.0 / spec.rate
    if spec.waveform.duration > slot_period * (1 + _GRID_SLACK):
        raise ArgumentError(
            f"waveform duration {spec.waveform.duration} s exceeds slot period {slot_period} s"
        )
    _check_waveform_resolution(spec.waveform, dt)
    n = int(round(spec.duration / dt))
    if n < 1:
        raise ArgumentError("duration shorter than one sample")
    slots = int(math.floor(spec.duration * spec.rate + 1e-9))
    pulse = spec.waveform.render(dt)
    out = np.zeros(n)
    rng = np.random.default_rng(spec.seed)
    draws = rng.random(slots)
    for k in range(slots):
        if draws[k] < spec.fire_probability:
            start = int(round(k * slot_period / dt))
            stop = min(start + pulse.size, n)
            if start < n:
                out[start:stop] += pulse[: stop - start]
    return TimeSeries(t0=0.0, dt=dt, samples=out, unit=unit)


def generate_staircase(
    start_amplitude: float,
    step: float,
    n_levels: int,
    on_time: float,
    off_time: float,
    rate: float,
    waveform: BiphasicWaveform,
    dt: float,
    unit: str = "volt",
) -> TimeSeries:
    """Blocks of pulses at increasing amplitude, each followed by rest.

    Block ``k`` scales the waveform so its dominant-phase amplitude
    equals ``start_amplitude + k * step``; a polarity-flipped waveform
    therefore steps its strong (negative) phase.  Firing within a block
    is deterministic at ``rate`` for ``on_time``.
    """
    if n_levels < 1:
        raise ArgumentError(f"n_levels must be at least 1, got {n_levels}")
    if on_time <= 0 or off_time < 0:
        raise ArgumentError("on_time must be positive and off_time non-negative")
    reference = max(waveform.pos_amplitude, waveform.neg_amplitude)
    if reference <= 0:
        raise ArgumentError("waveform needs a nonzero phase amplitude to scale")
    slot_period = 1.0 / rate
    if waveform.duration > slot_period * (1 + _GRID_SLACK):
        raise ArgumentError(
            f"waveform duration {waveform.duration} s exceeds slot period {slot_period} s"
        )
    _check_waveform_resolution(waveform, dt)
    block = on_time + off_time
    n = int(round(n_levels * block / dt))
    pulses_per_block = int(math.floor(on_time * rate + 1e-9))
    base = waveform.render(dt)
    out = np.zeros(n)
    for level in range(n_levels):
        amp = start_amplitude + level * step
        if amp <= 0:
            raise ArgumentError(f"level {level} amplitude {amp} is not positive")
        scaled = base * (amp / reference)
        block_start = int(round(level * block / dt))
        for j in range(pulses_per_block):
            start = block_start + int(round(j * slot_period / dt))
            stop = min(start + scaled.size, n)
            if start < n:
                out[start:stop] += scaled[: stop - start]
    return TimeSeries(t0=0.0, dt=dt, samples=out, unit=unit)


def generate_step(
    amplitude: float,
    onset: float,
    width: float,
    duration: float,
    dt: float,
    unit: str = "volt",
) -> TimeSeries:
    """Single rectangular pulse, as used for long-pulse latency trials."""
    if width <= 0:
        raise ArgumentError(f"width must be positive, got {width}")
    if onset < 0 or onset + width > duration + 1e-12:
        raise ArgumentError("pulse must lie inside [0, duration]")
    n = int(round(duration / dt))
    out = np.zeros(n)
    start = int(round(onset / dt))
    stop = min(int(round((onset + width) / dt)), n)
    out[start:stop] = amplitude
    return TimeSeries(t0=0.0, dt=dt, samples=out, unit=unit)


def mseq_bits(register_length: int) -> np.ndarray:
    """One period of the maximal-length sequence, as 0/1 ints.

    Fibonacci LFSR seeded with all ones; the output bit is the stage
    shifted out each step.  Period is ``2**register_length - 1``.
    """
    if register_length not in _MSEQ_TAPS:
        raise ConfigurationError(
            f"no feedback taps for register length {register_length}; "
            f"supported lengths are {min(_MSEQ_TAPS)}..{max(_MSEQ_TAPS)}"
        )
    taps = _MSEQ_TAPS[register_length]
    # right-shift form uses the reciprocal polynomial: tap t lands on bit
    # (n - t); primitivity is preserved under reciprocation
    mask = 0
    for t in taps:
        mask |= 1 << (register_length - t)
    period = (1 << register_length) - 1
    state = period  # all ones
    bits = np.empty(period, dtype=np.int8)
    top = register_length - 1
    for i in range(period):
        bits[i] = state & 1
        feedback = bin(state & mask).count("1") & 1
        state = (state >> 1) | (feedback << top)
    return bits


def generate_mseq(
    register_length: int,
    carrier_hz: float,
    amplitude: float,
    periods: int,
    dt: float,
    unit: str = "volt",
) -> TimeSeries:
    """Binary ±amplitude sequence, one chip per carrier cycle.

    Bit 1 maps to ``+amplitude`` and bit 0 to ``-amplitude``, so each
    period carries ``2**(n-1)`` positive chips and one fewer negative.
    """
    if amplitude <= 0:
        raise ArgumentError(f"amplitude must be positive, got {amplitude}")
    if periods < 1:
        raise ArgumentError(f"periods must be at least 1, got {periods}")
    if carrier_hz <= 0:
        raise ArgumentError(f"carrier_hz must be positive, got {carrier_hz}")
    chip = 1.0 / (carrier_hz * dt)
    m = int(round(chip))
    if m < 1 or abs(chip - m) > _GRID_SLACK * chip:
        raise ResolutionError(
            f"carrier period {1.0 / carrier_hz} s is not an integer number of samples at dt={dt}"
        )
    bits = mseq_bits(register_length)
    chips = np.where(bits > 0, amplitude, -amplitude)
    samples = np.tile(np.repeat(chips, m), periods)
    return TimeSeries(t0=0.0, dt=dt, samples=samples, unit=unit)


def _butter_sos(cutoff_hz: float, dt: float) -> np.ndarray:
    nyquist = 0.5 / dt
    if not 0 < cutoff_hz < nyquist:
        raise ArgumentError(
            f"cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist {nyquist} Hz"
        )
    return butter(2, cutoff_hz, btype="low", fs=1.0 / dt, output="sos")


def lowpass(ts: TimeSeries, cutoff_hz: float) -> TimeSeries:
    """Second-order Butterworth applied forward and backward.

    The double pass squares the magnitude response and cancels phase, so
    filtered features keep their timing.
    """
    sos = _butter_sos(cutoff_hz, ts.dt)
    ntaps = 3 * (2 * len(sos) + 1 - min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum()))
    padlen = int(min(ntaps, ts.n - 1))
    return ts.with_samples(sosfiltfilt(sos, ts.samples, padlen=padlen))


def decimate(ts: TimeSeries, factor: int) -> TimeSeries:
    """Anti-aliased downsampling by an integer factor.

    The guard filter sits at ``0.4 / (factor * dt)``, i.e. 80 % of the
    output Nyquist.  ``factor == 1`` returns the input unchanged.
    """
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ArgumentError(f"factor must be an integer >= 1, got {factor!r}")
    if factor == 1:
        return ts
    if ts.n < 2 * factor:
        raise ArgumentError(f"series too short to decimate by {factor}")
    filtered = lowpass(ts, 0.4 / (factor * ts.dt))
    return TimeSeries(
        t0=ts.t0,
        dt=ts.dt * factor,
        samples=filtered.samples[::factor],
        unit=ts.unit,
    )


def add_gaussian_noise(ts: TimeSeries, sigma: float, seed: int) -> TimeSeries:
    """Additive white Gaussian noise from a seeded generator.

    ``sigma = 0`` returns the input unchanged.
    """
    if sigma < 0:
        raise ArgumentError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return ts
    rng = np.random.default_rng(seed)
    return ts.with_samples(ts.samples + rng.normal(0.0, sigma, ts.n))
