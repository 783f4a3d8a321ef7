"""Synthetic recordings from reference plants, for tests and demos.

Two reference parameter sets (subjects A and B) exercise the full
pipeline: staircases for thresholds, step trials for dead times,
Bernoulli pulse trains for the lag fit, and a binary sequence drive for
held-out validation.  Noise is additive Gaussian scaled to a fraction
of each record's peak, applied to both current and force after the
clean force is computed, mimicking independent sensor noise.
"""

from __future__ import annotations

import os

import numpy as np

from .identify import IdentifyDataset, Pair, StaircaseSchedule, write_dataset_manifest
from .model import MuscleChannel, MuscleModel, RationalTF, predict_force
from .signals import (
    BiphasicWaveform,
    PulseTrainSpec,
    add_gaussian_noise,
    generate_mseq,
    generate_pulse_train,
    generate_staircase,
    generate_step,
)
from .timeseries import TimeSeries, write_timeseries_csv

SUBJECT_A = MuscleModel(
    pos=MuscleChannel(i_th=14.4e-3, t_d=0.023, c1=0.1889, d0=32207.0),
    neg=MuscleChannel(i_th=8.32e-3, t_d=0.025, c1=0.2476, d0=13796.0),
)

SUBJECT_B = MuscleModel(
    pos=MuscleChannel(i_th=15.1e-3, t_d=0.021, c1=0.5789, d0=4888.2),
    neg=MuscleChannel(i_th=12.3e-3, t_d=0.028, c1=0.4325, d0=7331.5),
)

# voltage-to-current branch of the same two reference subjects:
# b1*s / (a2*s^2 + a1*s + 1)
GVI_A = RationalTF(num=(0.0, 1.9e-7), den=(1.0, 2.2e-5, 8.0e-10))
GVI_B = RationalTF(num=(0.0, 1.4e-7), den=(1.0, 4.6e-5, 1.2e-9))

# nominal static stimulator gain used when mapping staircase voltages to
# current amplitudes in synthetic recordings
V_TO_I_SLOPE = 1.4e-3

DEFAULT_SCHEDULE = StaircaseSchedule(
    lead_time=0.5,
    on_time=0.4,
    off_time=0.35,
    n_levels=16,
    start_voltage=4.0,
    voltage_step=0.5,
)


def _child_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**63))


def _noisy(ts: TimeSeries, fraction: float, rng: np.random.Generator) -> TimeSeries:
    # one child seed is consumed even when the record stays clean, so
    # toggling noise on one record does not reshuffle the others
    seed = _child_seed(rng)
    if fraction == 0:
        return ts
    sigma = fraction * float(np.max(np.abs(ts.samples)))
    return add_gaussian_noise(ts, sigma, seed)


def _polarity_sign(polarity: str) -> float:
    if polarity == "positive":
        return 1.0
    if polarity == "negative":
        return -1.0
    raise ValueError(f"polarity must be 'positive' or 'negative', got {polarity!r}")


def make_staircase_recording(
    model: MuscleModel,
    polarity: str,
    schedule: StaircaseSchedule = DEFAULT_SCHEDULE,
    rate: float = 40.0,
    dt: float = 1e-4,
    v_to_i: float = V_TO_I_SLOPE,
    noise_fraction: float = 0.0,
    seed: int = 0,
) -> Pair:
    """Current/force pair for one amplitude staircase."""
    sign = _polarity_sign(polarity)
    waveform = BiphasicWaveform.default(1.0)
    if sign < 0:
        waveform = waveform.flipped()
    stair = generate_staircase(
        start_amplitude=v_to_i * schedule.start_voltage,
        step=v_to_i * schedule.voltage_step,
        n_levels=schedule.n_levels,
        on_time=schedule.on_time,
        off_time=schedule.off_time,
        rate=rate,
        waveform=waveform,
        dt=dt,
        unit="ampere",
    )
    lead = np.zeros(int(round(schedule.lead_time / dt)))
    current = TimeSeries(
        t0=0.0, dt=dt, samples=np.concatenate([lead, stair.samples]), unit="ampere"
    )
    force = predict_force(model, current)
    rng = np.random.default_rng(seed)
    return _noisy(current, noise_fraction, rng), _noisy(force, noise_fraction, rng)


def make_step_trials(
    model: MuscleModel,
    polarity: str,
    amplitude: float = 0.03,
    n_trials: int = 5,
    dt: float = 1e-4,
    lead: float = 0.3,
    width: float = 0.35,
    trail: float = 0.3,
    noise_fraction: float = 0.0,
    seed: int = 0,
) -> list[Pair]:
    """Rectangular suprathreshold pulses for dead-time estimation."""
    sign = _polarity_sign(polarity)
    current = generate_step(
        amplitude=sign * amplitude,
        onset=lead,
        width=width,
        duration=lead + width + trail,
        dt=dt,
        unit="ampere",
    )
    force = predict_force(model, current)
    rng = np.random.default_rng(seed)
    trials = []
    for _ in range(n_trials):
        trials.append((_noisy(current, noise_fraction, rng), _noisy(force, noise_fraction, rng)))
    return trials


def make_broadband_recording(
    model: MuscleModel,
    polarity: str,
    amplitude: float = 0.03,
    rate: float = 1000.0,
    duration: float = 20.0,
    dt: float = 1e-4,
    fire_probability: float = 0.5,
    noise_fraction: float = 0.0,
    seed: int = 0,
) -> Pair:
    """Randomly gated narrow-pulse train for the lag-dynamics fit."""
    sign = _polarity_sign(polarity)
    waveform = BiphasicWaveform(pos_width=5e-4, pos_amplitude=amplitude)
    if sign < 0:
        waveform = waveform.flipped()
    rng = np.random.default_rng(seed)
    spec = PulseTrainSpec(
        rate=rate,
        duration=duration,
        waveform=waveform,
        fire_probability=fire_probability,
        seed=_child_seed(rng),
    )
    current = generate_pulse_train(spec, dt, unit="ampere")
    force = predict_force(model, current)
    return _noisy(current, noise_fraction, rng), _noisy(force, noise_fraction, rng)


def make_validation_recording(
    model: MuscleModel,
    amplitude: float = 15.0 * V_TO_I_SLOPE,
    register_length: int = 8,
    carrier_hz: float = 100.0,
    periods: int = 1,
    dt: float = 1e-4,
    noise_fraction: float = 0.0,
    seed: int = 0,
) -> Pair:
    """Held-out bipolar binary-sequence drive and its force response."""
    current = generate_mseq(
        register_length=register_length,
        carrier_hz=carrier_hz,
        amplitude=amplitude,
        periods=periods,
        dt=dt,
        unit="ampere",
    )
    force = predict_force(model, current)
    rng = np.random.default_rng(seed)
    return _noisy(current, noise_fraction, rng), _noisy(force, noise_fraction, rng)


def make_identify_dataset(
    model: MuscleModel,
    schedule: StaircaseSchedule = DEFAULT_SCHEDULE,
    staircase_rate: float = 40.0,
    step_amplitude: float = 0.03,
    n_step_trials: int = 5,
    broadband_amplitude: float = 0.03,
    broadband_rate: float = 1000.0,
    broadband_duration: float = 20.0,
    fire_probability: float = 0.5,
    dt: float = 1e-4,
    v_to_i: float = V_TO_I_SLOPE,
    noise_fraction: float = 0.0,
    seed: int = 0,
) -> IdentifyDataset:
    """Everything identify_muscle_model needs, from one base seed.

    Record seeds derive from the base in a fixed order, so the whole
    dataset is reproducible from (model, parameters, seed).
    """
    rng = np.random.default_rng(seed)
    seeds = [_child_seed(rng) for _ in range(6)]
    staircase_pos = make_staircase_recording(
        model, "positive", schedule, staircase_rate, dt, v_to_i, noise_fraction, seeds[0]
    )
    staircase_neg = make_staircase_recording(
        model, "negative", schedule, staircase_rate, dt, v_to_i, noise_fraction, seeds[1]
    )
    step_pos = make_step_trials(
        model, "positive", step_amplitude, n_step_trials, dt,
        noise_fraction=noise_fraction, seed=seeds[2],
    )
    step_neg = make_step_trials(
        model, "negative", step_amplitude, n_step_trials, dt,
        noise_fraction=noise_fraction, seed=seeds[3],
    )
    broadband_pos = make_broadband_recording(
        model, "positive", broadband_amplitude, broadband_rate, broadband_duration,
        dt, fire_probability, noise_fraction, seeds[4],
    )
    broadband_neg = make_broadband_recording(
        model, "negative", broadband_amplitude, broadband_rate, broadband_duration,
        dt, fire_probability, noise_fraction, seeds[5],
    )
    return IdentifyDataset(
        staircase_pos=(staircase_pos,),
        step_pos=tuple(step_pos),
        broadband_pos=(broadband_pos,),
        staircase_neg=(staircase_neg,),
        step_neg=tuple(step_neg),
        broadband_neg=(broadband_neg,),
        schedule=schedule,
    )


def write_identify_dataset(dataset: IdentifyDataset, directory: str) -> str:
    """Write every trial CSV plus the manifest; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    role_trials = {
        "staircase_pos": dataset.staircase_pos,
        "step_pos": dataset.step_pos,
        "broadband_pos": dataset.broadband_pos,
        "staircase_neg": dataset.staircase_neg,
        "step_neg": dataset.step_neg,
        "broadband_neg": dataset.broadband_neg,
    }
    role_paths: dict[str, list[tuple[str, str]]] = {}
    for role, trials in role_trials.items():
        entries = []
        for k, (current, force) in enumerate(trials):
            current_name = f"{role}_{k}_current.csv"
            force_name = f"{role}_{k}_force.csv"
            write_timeseries_csv(current, os.path.join(directory, current_name))
            write_timeseries_csv(force, os.path.join(directory, force_name))
            entries.append((current_name, force_name))
        role_paths[role] = entries
    manifest = os.path.join(directory, "manifest.txt")
    write_dataset_manifest(role_paths, dataset.schedule, manifest)
    return manifest
