"""Parameter estimation: threshold currents, dead times, lag dynamics.

Two independent routes exist for the lag fit.  The frequency-domain
route linearizes the rational model (Levy) and reweights it toward the
true output-error cost (Sanathanan-Koerner).  The time-domain route
regresses force on its own past and the shifted drive, then maps the
discrete pole back to a continuous time constant.  Agreement between
the two on shared data is itself a correctness check.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArgumentError,
    ConfigurationError,
    DataFormatError,
    DegenerateFitError,
    FesidError,
    NonphysicalFitError,
    OnsetDetectionError,
    ResolutionError,
    ThresholdNotReachedError,
    UnidentifiableError,
)
from .fileio import atomic_write_text, parse_float, read_text
from .model import MuscleChannel, MuscleModel, RationalTF
from .signals import decimate, lowpass
from .spectral import FrequencyResponse
from .timeseries import TimeSeries, read_timeseries_csv

Pair = tuple[TimeSeries, TimeSeries]

MANIFEST_ROLES = (
    "staircase_pos",
    "step_pos",
    "broadband_pos",
    "staircase_neg",
    "step_neg",
    "broadband_neg",
)
_SCHEDULE_OPTIONS = (
    "lead_time",
    "on_time",
    "off_time",
    "levels",
    "start_voltage",
    "voltage_step",
)


@dataclass(frozen=True)
class FitReport:
    """What a fit estimated and how well conditioned it was."""

    method: str
    params: dict[str, float]
    residual_rms: float
    n_points: int
    condition_estimate: float
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        # normalize numpy scalars so downstream repr-based writers stay clean
        object.__setattr__(
            self, "params", {str(k): float(v) for k, v in self.params.items()}
        )
        object.__setattr__(self, "residual_rms", float(self.residual_rms))
        object.__setattr__(self, "condition_estimate", float(self.condition_estimate))
        object.__setattr__(self, "n_points", int(self.n_points))
        if math.isnan(self.residual_rms) or self.residual_rms < 0:
            raise ArgumentError(f"residual_rms must be >= 0, got {self.residual_rms}")
        if self.n_points < len(self.params):
            raise ArgumentError(
                f"n_points {self.n_points} below parameter count {len(self.params)}"
            )


def write_fit_report(report: FitReport, path: str) -> None:
    """Fixed line order so reruns are byte-comparable."""
    lines = [
        f"method = {report.method}",
        f"n_points = {report.n_points}",
        f"residual_rms = {report.residual_rms!r}",
        f"condition_estimate = {report.condition_estimate!r}",
        f"flags = {','.join(report.flags)}",
    ]
    for name, value in report.params.items():
        lines.append(f"param.{name} = {value!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_fit_report(path: str) -> FitReport:
    text = read_text(path)
    fields: dict[str, str] = {}
    params: dict[str, float] = {}
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, raw = stripped.partition("=")
        if not sep:
            raise DataFormatError(f"{path}:{i}: expected 'key = value'")
        key = key.strip()
        raw = raw.strip()
        if key.startswith("param."):
            params[key[len("param.") :]] = parse_float(raw, f"{path}:{i}: {key}")
        elif key in ("method", "n_points", "residual_rms", "condition_estimate", "flags"):
            if key in fields:
                raise DataFormatError(f"{path}:{i}: duplicate key {key!r}")
            fields[key] = raw
        else:
            raise DataFormatError(f"{path}:{i}: unknown key {key!r}")
    missing = [k for k in ("method", "n_points", "residual_rms", "condition_estimate") if k not in fields]
    if missing:
        raise DataFormatError(f"{path}: missing keys: {', '.join(missing)}")
    flags = tuple(t for t in fields.get("flags", "").split(",") if t)
    try:
        return FitReport(
            method=fields["method"],
            params=params,
            residual_rms=parse_float(fields["residual_rms"], f"{path}: residual_rms"),
            n_points=int(fields["n_points"]),
            condition_estimate=parse_float(
                fields["condition_estimate"], f"{path}: condition_estimate"
            ),
            flags=flags,
        )
    except (ValueError, ArgumentError) as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class StaircaseTrial:
    """Per-level summary of one amplitude staircase."""

    level_voltages: tuple[float, ...]
    level_currents: tuple[float, ...]
    level_peak_forces: tuple[float, ...]
    noise_floor: float

    def __post_init__(self) -> None:
        n = len(self.level_voltages)
        if n == 0 or len(self.level_currents) != n or len(self.level_peak_forces) != n:
            raise ArgumentError("level lists must be non-empty and of equal length")
        if not math.isfinite(self.noise_floor) or self.noise_floor < 0:
            raise ArgumentError(f"noise_floor must be >= 0, got {self.noise_floor}")
        if any(b <= a for a, b in zip(self.level_voltages, self.level_voltages[1:])):
            raise ArgumentError("level voltages must be strictly increasing")


def fit_rational_freq(
    fr: FrequencyResponse,
    num_degree: int,
    den_degree: int,
    num_lowest_power: int = 0,
) -> tuple[RationalTF, FitReport]:
    """Least-squares rational fit to measured frequency-response points.

    The Levy linearization solves N(jw) - H*(D(jw) - 1) = H with the
    denominator constant pinned at 1; Sanathanan-Koerner iterations then
    reweight each row by 1/|D| from the previous pass, which undoes the
    linearization's high-frequency emphasis.  Frequencies are scaled by
    their geometric mean internally so the normal equations stay well
    conditioned across wide bands.
    """
    if num_degree < 0 or den_degree < 0:
        raise ArgumentError("degrees must be non-negative")
    if not 0 <= num_lowest_power <= num_degree:
        raise ArgumentError(
            f"num_lowest_power {num_lowest_power} outside [0, {num_degree}]"
        )
    if num_degree > den_degree + 1:
        raise ArgumentError(
            f"numerator degree {num_degree} exceeds denominator degree {den_degree} + 1"
        )
    num_powers = list(range(num_lowest_power, num_degree + 1))
    n_params = len(num_powers) + den_degree
    if fr.n < 3 * n_params:
        raise ArgumentError(f"need at least {3 * n_params} points, got {fr.n}")

    w = 2.0 * np.pi * fr.f_hz
    w0 = math.exp(float(np.mean(np.log(w))))
    s = 1j * (w / w0)
    h = fr.gain

    num_cols = np.stack([s**p for p in num_powers], axis=1)
    den_cols = np.stack([s**q for q in range(1, den_degree + 1)], axis=1) if den_degree else None

    theta = None
    cond = 0.0
    weights = np.ones(fr.n)
    for _ in range(20):
        if den_cols is None:
            a = num_cols * weights[:, None]
        else:
            a = np.hstack([num_cols, -h[:, None] * den_cols]) * weights[:, None]
        rows = np.vstack([a.real, a.imag])
        rhs = np.concatenate([(h * weights).real, (h * weights).imag])
        solution, _, rank, sv = np.linalg.lstsq(rows, rhs, rcond=None)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
        if rank < n_params:
            raise DegenerateFitError(
                f"rank-deficient normal equations (rank {rank} of {n_params}, "
                f"condition {cond:.3g})"
            )
        if theta is not None:
            scale = np.max(np.abs(solution))
            if scale == 0 or np.max(np.abs(solution - theta)) < 1e-8 * scale:
                theta = solution
                break
        theta = solution
        if den_degree:
            den_val = 1.0 + den_cols @ theta[len(num_powers) :]
            weights = 1.0 / np.maximum(np.abs(den_val), 1e-12)

    num = [0.0] * (num_degree + 1)
    for j, p in enumerate(num_powers):
        num[p] = float(theta[j]) / w0**p
    den = [1.0] + [float(theta[len(num_powers) + q - 1]) / w0**q for q in range(1, den_degree + 1)]
    tf = RationalTF(num=tuple(num), den=tuple(den))

    num_val = np.polyval(tf.num[::-1], 1j * w)
    den_val = np.polyval(tf.den[::-1], 1j * w)
    residual = h - num_val / den_val
    params = {f"num{p}": tf.num[p] for p in num_powers}
    params.update({f"den{q}": tf.den[q] for q in range(1, den_degree + 1)})
    report = FitReport(
        method="levy-sk",
        params=params,
        residual_rms=float(np.sqrt(np.mean(np.abs(residual) ** 2))),
        n_points=fr.n,
        condition_estimate=cond,
    )
    return tf, report


def fit_first_order_time(
    drive: TimeSeries, force: TimeSeries, dead_time: float
) -> tuple[float, float, FitReport]:
    """One-pole fit of force on thresholded drive, dead time removed.

    Regresses F[k] on (F[k-1], I[k-1]) after shifting the drive by the
    rounded dead time, then maps the pole a to c1 = -dt/ln(a) and the
    input weight b to d0 = b/(1-a).  The pole must land in (0,1); a
    pole outside that range has no positive continuous time constant.
    """
    if abs(drive.dt - force.dt) > 1e-12 * drive.dt:
        raise ArgumentError(f"sample intervals differ: {drive.dt} vs {force.dt}")
    if drive.n != force.n:
        raise ArgumentError(f"record lengths differ: {drive.n} vs {force.n}")
    if not math.isfinite(dead_time) or dead_time < 0:
        raise ArgumentError(f"dead_time must be non-negative and finite, got {dead_time}")
    if drive.n < 8:
        raise ArgumentError(f"record too short to regress: {drive.n} samples")

    shift = int(round(dead_time / drive.dt))
    u = drive.samples
    if shift > 0:
        shifted = np.zeros_like(u)
        if shift < u.size:
            shifted[shift:] = u[:-shift]
    else:
        shifted = u
    f = force.samples

    if not np.any(f):
        report = FitReport(
            method="arx-ols",
            params={"c1": math.nan, "d0": 0.0},
            residual_rms=0.0,
            n_points=f.size - 1,
            condition_estimate=1.0,
            flags=("force_identically_zero",),
        )
        return math.nan, 0.0, report

    phi = np.stack([f[:-1], shifted[:-1]], axis=1)
    y = f[1:]
    theta, _, rank, sv = np.linalg.lstsq(phi, y, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if rank < 2:
        raise UnidentifiableError(
            f"regressors are rank deficient (rank {rank}); drive carries no usable variation"
        )
    alpha, beta = float(theta[0]), float(theta[1])
    if not 0.0 < alpha < 1.0:
        raise NonphysicalFitError(
            f"pole {alpha} outside (0, 1); no positive time constant reproduces it"
        )
    c1 = -drive.dt / math.log(alpha)
    d0 = beta / (1.0 - alpha)
    residual = y - phi @ theta
    report = FitReport(
        method="arx-ols",
        params={"c1": c1, "d0": d0, "alpha": alpha, "beta": beta},
        residual_rms=float(np.sqrt(np.mean(residual**2))),
        n_points=y.size,
        condition_estimate=cond,
    )
    return c1, d0, report


def detect_onset(
    samples: np.ndarray, baseline_samples: int = 50, hold: int = 3
) -> int | None:
    """Index of the first excursion past baseline mean + 5 sigma that
    holds for ``hold`` consecutive samples; None when nothing qualifies.
    """
    if samples.size < baseline_samples + hold:
        raise ArgumentError(
            f"record of {samples.size} samples too short for a "
            f"{baseline_samples}-sample baseline"
        )
    base = samples[:baseline_samples]
    threshold = float(np.mean(base)) + 5.0 * float(np.std(base))
    above = samples > threshold
    for idx in np.flatnonzero(above):
        if idx + hold <= samples.size and bool(np.all(above[idx : idx + hold])):
            return int(idx)
    return None


def estimate_dead_time(
    trials: list[Pair], baseline_samples: int = 50, hold: int = 3
) -> tuple[float, list[float]]:
    """Mean force-onset minus current-onset delay across trials.

    Each trial is a (current, force) pair containing one stimulation
    onset and at least ``baseline_samples`` of quiet lead-in.
    """
    if not trials:
        raise ArgumentError("need at least one trial")
    per_trial: list[float] = []
    for k, (current, force) in enumerate(trials):
        if abs(current.dt - force.dt) > 1e-12 * current.dt:
            raise ArgumentError(f"trial {k}: sample intervals differ")
        onset_i = detect_onset(current.samples, baseline_samples, hold)
        if onset_i is None:
            raise OnsetDetectionError(f"trial {k}: no current onset found")
        onset_f = detect_onset(force.samples, baseline_samples, hold)
        if onset_f is None:
            raise OnsetDetectionError(f"trial {k}: no force onset found")
        per_trial.append((onset_f - onset_i) * current.dt)
    return float(np.mean(per_trial)), per_trial


def detect_threshold_current(trial: StaircaseTrial) -> tuple[float, FitReport]:
    """Threshold from the first level whose force clears the noise floor.

    The estimate is the midpoint between the last silent level's current
    and the first responding level's; when the lowest level already
    responds only an upper bound is known, flagged accordingly.
    """
    n = len(trial.level_currents)
    if n < 2:
        raise ArgumentError(f"need at least 2 levels, got {n}")
    responding = [f > 3.0 * trial.noise_floor for f in trial.level_peak_forces]
    if not any(responding):
        raise ThresholdNotReachedError(
            f"no level of {n} produced force above 3x noise floor {trial.noise_floor!r}"
        )
    first = responding.index(True)
    flags: tuple[str, ...] = ()
    if first == 0:
        i_th = trial.level_currents[0]
        resolution = 0.0
        flags = ("lower_bound_unknown",)
    else:
        below = trial.level_currents[first - 1]
        above = trial.level_currents[first]
        i_th = 0.5 * (below + above)
        resolution = above - below
    report = FitReport(
        method="staircase-midpoint",
        params={"i_th": i_th, "resolution": resolution},
        residual_rms=0.0,
        n_points=n,
        condition_estimate=1.0,
        flags=flags,
    )
    return i_th, report


@dataclass(frozen=True)
class StaircaseSchedule:
    """Timing and amplitude ladder of a staircase recording."""

    lead_time: float
    on_time: float
    off_time: float
    n_levels: int
    start_voltage: float
    voltage_step: float

    def __post_init__(self) -> None:
        if self.lead_time < 0 or self.on_time <= 0 or self.off_time < 0:
            raise ArgumentError("times must be non-negative, on_time positive")
        if self.n_levels < 2:
            raise ArgumentError(f"need at least 2 levels, got {self.n_levels}")
        if self.voltage_step <= 0:
            raise ArgumentError(f"voltage_step must be positive, got {self.voltage_step}")

    @property
    def voltages(self) -> tuple[float, ...]:
        return tuple(self.start_voltage + k * self.voltage_step for k in range(self.n_levels))


@dataclass(frozen=True)
class PipelineConfig:
    """Declared conventions of the end-to-end identification pipeline.

    ``fit_dt`` is the regression grid.  The lag fit reduces the drive
    to causal per-step interval means, so the grid does not need to
    resolve individual pulses; 5 ms suits lags of 0.2 to 0.6 s.
    ``lowpass_hz`` is the common measurement-band filter, skipped on
    grids it would not fit on; ``dead_time_lpf`` may be None to detect
    onsets on raw force (appropriate for noise-free data, where
    zero-phase smearing would otherwise pull the onset early).
    ``baseline_time`` must be long against the filter's correlation
    time or the baseline spread is underestimated and noise trips the
    onset rule.  ``align_search`` is the half-width, in seconds, of the
    shift scan that aligns the lag regression; it must cover the onset
    estimator's late bias.
    """

    fit_dt: float = 5e-3
    lowpass_hz: float = 100.0
    dead_time_lpf: float | None = 100.0
    guard_time: float = 0.05
    baseline_time: float = 0.2
    onset_hold: int = 3
    align_search: float = 0.01
    output_sign_neg: int = 1


@dataclass(frozen=True)
class IdentifyDataset:
    """Raw recordings per protocol and polarity, plus the staircase plan."""

    staircase_pos: tuple[Pair, ...]
    step_pos: tuple[Pair, ...]
    broadband_pos: tuple[Pair, ...]
    staircase_neg: tuple[Pair, ...]
    step_neg: tuple[Pair, ...]
    broadband_neg: tuple[Pair, ...]
    schedule: StaircaseSchedule


def summarize_staircase(
    current: TimeSeries,
    force: TimeSeries,
    schedule: StaircaseSchedule,
    polarity: str,
    config: PipelineConfig = PipelineConfig(),
) -> StaircaseTrial:
    """Reduce a staircase recording to per-level currents and peak forces.

    Level current is the median of near-peak samples within the level's
    on-window (robust to noise spikes).  Peak force is read from the
    low-pass-filtered force over the on-window plus a short tail; the
    tail must stop well before the next level's onset, whose backward
    smear through the zero-phase filter would otherwise count as a
    response of this level.  The noise floor is the largest
    filtered-force magnitude during the quiet lead-in.
    """
    if polarity not in ("positive", "negative"):
        raise ArgumentError(f"polarity must be 'positive' or 'negative', got {polarity!r}")
    if abs(current.dt - force.dt) > 1e-12 * current.dt:
        raise ArgumentError(f"sample intervals differ: {current.dt} vs {force.dt}")
    if current.n != force.n:
        raise ArgumentError(f"record lengths differ: {current.n} vs {force.n}")
    dt = current.dt
    rectified = current.samples if polarity == "positive" else -current.samples
    filtered = (
        lowpass(force, config.lowpass_hz).samples
        if config.lowpass_hz is not None
        else force.samples
    )
    force_mag = np.abs(filtered)
    # a zero-phase IIR smears exponentially small but nonzero tails into
    # quiet regions; below 1e-6 of the record peak that is leakage, not
    # response, and must not masquerade as one when the floor is ~0
    top = float(np.max(force_mag))
    if top > 0:
        force_mag = np.where(force_mag < 1e-6 * top, 0.0, force_mag)

    guard = int(round(config.guard_time / dt))
    lead = int(round(schedule.lead_time / dt))
    if lead - guard < 10:
        raise ArgumentError(
            f"lead-in of {lead} samples leaves fewer than 10 after the guard interval"
        )
    noise_floor = float(np.max(force_mag[guard:lead]))

    block = schedule.on_time + schedule.off_time
    tail = min(0.1, 0.5 * schedule.off_time)
    currents = []
    forces = []
    for level in range(schedule.n_levels):
        t_on = schedule.lead_time + level * block
        lo = int(round(t_on / dt))
        hi = int(round((t_on + schedule.on_time) / dt))
        end = int(round((t_on + schedule.on_time + tail) / dt))
        if int(round((t_on + block) / dt)) > current.n:
            raise ArgumentError(
                f"level {level} extends past the record ({end} > {current.n} samples)"
            )
        window = rectified[lo:hi]
        peak = float(np.max(window))
        if peak <= 0:
            raise ArgumentError(f"level {level} carries no {polarity} current")
        plateau = window[window >= 0.9 * peak]
        currents.append(float(np.median(plateau)))
        forces.append(float(np.max(force_mag[lo:end])))
    return StaircaseTrial(
        level_voltages=schedule.voltages,
        level_currents=tuple(currents),
        level_peak_forces=tuple(forces),
        noise_floor=noise_floor,
    )


def _stage(polarity: str, stage: str):
    class _Context:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, FesidError):
                raise type(exc)(f"{polarity} {stage}: {exc}") from exc
            return False

    return _Context()


def _prepare_dead_time_trials(trials: tuple[Pair, ...], sign: float, config: PipelineConfig):
    prepared = []
    for current, force in trials:
        guard = int(round(config.guard_time / current.dt))
        baseline = max(50, int(round(config.baseline_time / current.dt)))
        f = force if config.dead_time_lpf is None else lowpass(force, config.dead_time_lpf)
        if current.n <= 2 * guard + baseline + config.onset_hold:
            raise ArgumentError(
                f"trial of {current.n} samples too short for guard trimming"
            )
        i_trim = current.with_samples(sign * current.samples[guard : current.n - guard])
        f_trim = f.with_samples(f.samples[guard : f.n - guard])
        prepared.append((i_trim, f_trim))
    return prepared


def _fit_polarity(
    staircases: tuple[Pair, ...],
    steps: tuple[Pair, ...],
    broadbands: tuple[Pair, ...],
    schedule: StaircaseSchedule,
    polarity: str,
    config: PipelineConfig,
) -> tuple[MuscleChannel, dict[str, FitReport]]:
    from .model import apply_threshold

    reports: dict[str, FitReport] = {}

    with _stage(polarity, "staircase"):
        if not staircases:
            raise ConfigurationError("no trials in dataset")
        estimates = []
        resolutions = []
        flags: set[str] = set()
        total_levels = 0
        for current, force in staircases:
            trial = summarize_staircase(current, force, schedule, polarity, config)
            i_th_k, rep = detect_threshold_current(trial)
            estimates.append(i_th_k)
            resolutions.append(rep.params["resolution"])
            flags.update(rep.flags)
            total_levels += rep.n_points
        i_th = float(np.mean(estimates))
        reports["threshold"] = FitReport(
            method="staircase-midpoint",
            params={"i_th": i_th, "resolution": float(np.mean(resolutions))},
            residual_rms=float(np.std(estimates)),
            n_points=total_levels,
            condition_estimate=1.0,
            flags=tuple(sorted(flags)),
        )

    with _stage(polarity, "step"):
        if not steps:
            raise ConfigurationError("no trials in dataset")
        sign = 1.0 if polarity == "positive" else -1.0
        prepared = _prepare_dead_time_trials(steps, sign, config)
        baseline = max(50, int(round(config.baseline_time / prepared[0][0].dt)))
        t_d, per_trial = estimate_dead_time(prepared, baseline, config.onset_hold)
        if t_d < 0:
            raise OnsetDetectionError(f"mean dead time {t_d} s is negative")
        reports["dead_time"] = FitReport(
            method="onset-mean",
            params={"t_d": t_d},
            residual_rms=float(np.std(per_trial)),
            n_points=len(per_trial),
            condition_estimate=1.0,
        )

    with _stage(polarity, "broadband"):
        if not broadbands:
            raise ConfigurationError("no trials in dataset")
        current, force = broadbands[0]
        factor = max(1, int(round(config.fit_dt / current.dt)))
        if abs(factor * current.dt - config.fit_dt) > 1e-6 * config.fit_dt and factor > 1:
            raise ResolutionError(
                f"fit grid {config.fit_dt} s is not a multiple of the record's dt {current.dt} s"
            )
        drive = apply_threshold(current, i_th, polarity)
        force_d = decimate(force, factor)
        # Skip the common band filter once the grid itself is coarser
        # than the band; decimation's anti-alias filter covers it then.
        band = config.lowpass_hz is not None and config.lowpass_hz < 0.5 / force_d.dt
        if band:
            force_d = lowpass(force_d, config.lowpass_hz)
        # Step k of the one-pole recursion integrates the drive over
        # (t[k-1], t[k]], so the regressor is the causal interval mean
        # of the band-limited drive, not its point samples.  The pole
        # sits close to z = 1, which makes c1 explode with alignment
        # error, and the onset-based dead time is biased late under
        # noise; scan shifts at the native rate and keep the
        # minimum-residual fit.
        if factor > 1:
            filtered = lowpass(drive, 0.4 / (factor * drive.dt))
        else:
            filtered = drive
        csum = np.concatenate(([0.0], np.cumsum(filtered.samples)))
        edges = np.arange(force_d.n + 1, dtype=np.int64) * factor
        q0 = int(round(t_d / drive.dt))
        half = max(1, int(round(config.align_search / drive.dt)))
        best: tuple[float, int, float, float, FitReport] | None = None
        last_exc: FesidError | None = None
        for q in range(max(0, q0 - half), q0 + half + 1):
            lo = np.clip(edges[:-1] - q + 1, 0, filtered.n)
            hi = np.clip(edges[1:] - q + 1, 0, filtered.n)
            reg = TimeSeries(
                t0=drive.t0,
                dt=force_d.dt,
                samples=(csum[hi] - csum[lo]) / factor,
                unit=drive.unit,
            )
            if band:
                reg = lowpass(reg, config.lowpass_hz)
            try:
                c1_q, d0_q, rep_q = fit_first_order_time(reg, force_d, 0.0)
            except (NonphysicalFitError, UnidentifiableError) as exc:
                last_exc = exc
                continue
            if best is None or rep_q.residual_rms < best[0]:
                best = (rep_q.residual_rms, q, c1_q, d0_q, rep_q)
        if best is None:
            raise last_exc  # type: ignore[misc]
        _, q_best, c1, d0, lag_report = best
        params = dict(lag_report.params)
        params["aligned_t_d"] = q_best * drive.dt
        lag_report = FitReport(
            method=lag_report.method,
            params=params,
            residual_rms=lag_report.residual_rms,
            n_points=lag_report.n_points,
            condition_estimate=lag_report.condition_estimate,
            flags=lag_report.flags,
        )
        reports["lag"] = lag_report

    with _stage(polarity, "assembly"):
        channel = MuscleChannel(i_th=i_th, t_d=t_d, c1=c1, d0=d0)
    return channel, reports


def identify_muscle_model(
    dataset: IdentifyDataset, config: PipelineConfig = PipelineConfig()
) -> tuple[MuscleModel, dict[str, FitReport]]:
    """Threshold, dead-time, and lag estimation for both polarities.

    Stage order per polarity: staircase threshold, step-trial dead time,
    then the broadband lag fit on thresholded, decimated, band-limited
    records.  Any stage failure is re-raised naming the polarity and
    stage.
    """
    pos, pos_reports = _fit_polarity(
        dataset.staircase_pos,
        dataset.step_pos,
        dataset.broadband_pos,
        dataset.schedule,
        "positive",
        config,
    )
    neg, neg_reports = _fit_polarity(
        dataset.staircase_neg,
        dataset.step_neg,
        dataset.broadband_neg,
        dataset.schedule,
        "negative",
        config,
    )
    model = MuscleModel(pos=pos, neg=neg, output_sign_neg=config.output_sign_neg)
    reports = {f"{name}_pos": rep for name, rep in pos_reports.items()}
    reports.update({f"{name}_neg": rep for name, rep in neg_reports.items()})
    return model, reports


def write_dataset_manifest(
    role_paths: dict[str, list[tuple[str, str]]],
    schedule: StaircaseSchedule,
    path: str,
) -> None:
    """Manifest text: one `role = current,force` line per trial, then
    the staircase schedule as option lines.  Paths are kept as given.
    """
    lines = []
    for role in MANIFEST_ROLES:
        for current_path, force_path in role_paths.get(role, []):
            lines.append(f"{role} = {current_path},{force_path}")
    lines.append(f"option.lead_time = {schedule.lead_time!r}")
    lines.append(f"option.on_time = {schedule.on_time!r}")
    lines.append(f"option.off_time = {schedule.off_time!r}")
    lines.append(f"option.levels = {schedule.n_levels}")
    lines.append(f"option.start_voltage = {schedule.start_voltage!r}")
    lines.append(f"option.voltage_step = {schedule.voltage_step!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_dataset_manifest(path: str) -> IdentifyDataset:
    """Load every referenced CSV; relative paths resolve from the manifest."""
    text = read_text(path)
    base = os.path.dirname(os.path.abspath(path))
    trials: dict[str, list[Pair]] = {role: [] for role in MANIFEST_ROLES}
    options: dict[str, float] = {}
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, raw = stripped.partition("=")
        if not sep:
            raise DataFormatError(f"{path}:{i}: expected 'key = value'")
        key = key.strip()
        raw = raw.strip()
        if key in MANIFEST_ROLES:
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) != 2:
                raise DataFormatError(
                    f"{path}:{i}: expected 'current.csv,force.csv', got {raw!r}"
                )
            pair = tuple(
                read_timeseries_csv(p if os.path.isabs(p) else os.path.join(base, p))
                for p in parts
            )
            trials[key].append(pair)  # type: ignore[arg-type]
        elif key.startswith("option."):
            name = key[len("option.") :]
            if name not in _SCHEDULE_OPTIONS:
                raise DataFormatError(f"{path}:{i}: unknown option {name!r}")
            if name in options:
                raise DataFormatError(f"{path}:{i}: duplicate option {name!r}")
            options[name] = parse_float(raw, f"{path}:{i}: {name}")
        else:
            raise DataFormatError(f"{path}:{i}: unknown key {key!r}")
    missing = [name for name in _SCHEDULE_OPTIONS if name not in options]
    if missing:
        raise DataFormatError(f"{path}: missing options: {', '.join(missing)}")
    try:
        schedule = StaircaseSchedule(
            lead_time=options["lead_time"],
            on_time=options["on_time"],
            off_time=options["off_time"],
            n_levels=int(options["levels"]),
            start_voltage=options["start_voltage"],
            voltage_step=options["voltage_step"],
        )
    except ArgumentError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    return IdentifyDataset(
        staircase_pos=tuple(trials["staircase_pos"]),
        step_pos=tuple(trials["step_pos"]),
        broadband_pos=tuple(trials["broadband_pos"]),
        staircase_neg=tuple(trials["staircase_neg"]),
        step_neg=tuple(trials["step_neg"]),
        broadband_neg=tuple(trials["broadband_neg"]),
        schedule=schedule,
    )
