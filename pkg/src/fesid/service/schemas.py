"""Request/response payloads and their conversions to core types.

Arrays travel as plain JSON float lists.  Conversions funnel through
the core constructors, so payload validation errors surface as the same
exceptions (and HTTP codes) as any other bad argument.
"""

from __future__ import annotations

from pydantic import BaseModel

from ..identify import FitReport, StaircaseTrial
from ..metrics import ValidationMetrics
from ..model import MuscleChannel, MuscleModel
from ..signals import BiphasicWaveform
from ..spectral import FrequencyResponse
from ..timeseries import TimeSeries


class TimeSeriesPayload(BaseModel):
    t0: float = 0.0
    dt: float
    unit: str
    samples: list[float]

    @classmethod
    def from_timeseries(cls, ts: TimeSeries) -> "TimeSeriesPayload":
        return cls(t0=ts.t0, dt=ts.dt, unit=ts.unit, samples=ts.samples.tolist())

    def to_timeseries(self) -> TimeSeries:
        return TimeSeries(t0=self.t0, dt=self.dt, samples=self.samples, unit=self.unit)


class WaveformPayload(BaseModel):
    pos_width: float
    pos_amplitude: float
    neg_width: float = 0.0
    neg_amplitude: float = 0.0
    gap: float = 0.0

    def to_waveform(self) -> BiphasicWaveform:
        return BiphasicWaveform(
            pos_width=self.pos_width,
            pos_amplitude=self.pos_amplitude,
            neg_width=self.neg_width,
            neg_amplitude=self.neg_amplitude,
            gap=self.gap,
        )


class FrequencyResponsePayload(BaseModel):
    f_hz: list[float]
    re: list[float]
    im: list[float]
    n_segments: int = 0
    window: str = ""

    @classmethod
    def from_frequency_response(cls, fr: FrequencyResponse) -> "FrequencyResponsePayload":
        return cls(
            f_hz=fr.f_hz.tolist(),
            re=fr.gain.real.tolist(),
            im=fr.gain.imag.tolist(),
            n_segments=fr.n_segments,
            window=fr.window,
        )

    def to_frequency_response(self) -> FrequencyResponse:
        gain = [complex(r, i) for r, i in zip(self.re, self.im)]
        return FrequencyResponse(
            f_hz=self.f_hz,
            gain=gain,
            n_segments=self.n_segments,
            window=self.window,
        )


class FitReportPayload(BaseModel):
    method: str
    params: dict[str, float]
    residual_rms: float
    n_points: int
    condition_estimate: float
    flags: list[str] = []

    @classmethod
    def from_report(cls, report: FitReport) -> "FitReportPayload":
        return cls(
            method=report.method,
            params=dict(report.params),
            residual_rms=report.residual_rms,
            n_points=report.n_points,
            condition_estimate=report.condition_estimate,
            flags=list(report.flags),
        )


class MuscleModelPayload(BaseModel):
    i_th_pos: float
    t_d_pos: float
    c1_pos: float
    d0_pos: float
    i_th_neg: float
    t_d_neg: float
    c1_neg: float
    d0_neg: float
    output_sign_neg: int = 1

    @classmethod
    def from_model(cls, model: MuscleModel) -> "MuscleModelPayload":
        return cls(
            i_th_pos=model.pos.i_th,
            t_d_pos=model.pos.t_d,
            c1_pos=model.pos.c1,
            d0_pos=model.pos.d0,
            i_th_neg=model.neg.i_th,
            t_d_neg=model.neg.t_d,
            c1_neg=model.neg.c1,
            d0_neg=model.neg.d0,
            output_sign_neg=model.output_sign_neg,
        )

    def to_model(self) -> MuscleModel:
        return MuscleModel(
            pos=MuscleChannel(
                i_th=self.i_th_pos, t_d=self.t_d_pos, c1=self.c1_pos, d0=self.d0_pos
            ),
            neg=MuscleChannel(
                i_th=self.i_th_neg, t_d=self.t_d_neg, c1=self.c1_neg, d0=self.d0_neg
            ),
            output_sign_neg=self.output_sign_neg,
        )


class GenMseqRequest(BaseModel):
    register_length: int
    carrier_hz: float
    amplitude: float
    periods: int = 1
    dt: float
    unit: str = "volt"


class GenPulseTrainRequest(BaseModel):
    rate: float
    duration: float
    waveform: WaveformPayload
    fire_probability: float = 1.0
    seed: int = 0
    dt: float
    unit: str = "volt"


class GenStaircaseRequest(BaseModel):
    start_amplitude: float
    step: float
    n_levels: int
    on_time: float
    off_time: float
    rate: float
    waveform: WaveformPayload
    dt: float
    unit: str = "volt"


class GenStepRequest(BaseModel):
    amplitude: float
    onset: float
    width: float
    duration: float
    dt: float
    unit: str = "volt"


class EtfeRequest(BaseModel):
    input: TimeSeriesPayload
    output: TimeSeriesPayload
    segment_len: int
    overlap_fraction: float = 0.5


class FitRationalRequest(BaseModel):
    fr: FrequencyResponsePayload
    num_degree: int
    den_degree: int
    num_lowest_power: int = 0


class FitRationalResponse(BaseModel):
    num: list[float]
    den: list[float]
    report: FitReportPayload


class FitFirstOrderRequest(BaseModel):
    drive: TimeSeriesPayload
    force: TimeSeriesPayload
    dead_time: float


class FitFirstOrderResponse(BaseModel):
    c1: float
    d0: float
    report: FitReportPayload


class PredictForceRequest(BaseModel):
    model: MuscleModelPayload
    current: TimeSeriesPayload


class ThresholdRequest(BaseModel):
    level_voltages: list[float]
    level_currents: list[float]
    level_peak_forces: list[float]
    noise_floor: float

    def to_trial(self) -> StaircaseTrial:
        return StaircaseTrial(
            level_voltages=tuple(self.level_voltages),
            level_currents=tuple(self.level_currents),
            level_peak_forces=tuple(self.level_peak_forces),
            noise_floor=self.noise_floor,
        )


class ThresholdResponse(BaseModel):
    i_th: float
    report: FitReportPayload


class TrialPayload(BaseModel):
    current: TimeSeriesPayload
    force: TimeSeriesPayload


class DeadTimeRequest(BaseModel):
    trials: list[TrialPayload]
    baseline_samples: int = 50
    hold: int = 3


class DeadTimeResponse(BaseModel):
    t_d: float
    per_trial: list[float]


class ValidateRequest(BaseModel):
    measured: TimeSeriesPayload
    predicted: TimeSeriesPayload
    settle_time: float
    lpf_hz: float | None = None


class ValidationMetricsPayload(BaseModel):
    rmse: float
    fit_percent: float
    steady_start: float
    steady_end: float
    steady_rmse: float

    @classmethod
    def from_metrics(cls, metrics: ValidationMetrics) -> "ValidationMetricsPayload":
        return cls(
            rmse=metrics.rmse,
            fit_percent=metrics.fit_percent,
            steady_start=metrics.steady_state_window[0],
            steady_end=metrics.steady_state_window[1],
            steady_rmse=metrics.steady_rmse,
        )
