"""Endpoint handlers and the application factory.

Handlers are plain synchronous functions taking a request payload and
returning a response payload; the CLI calls them in-process, and
create_app() mounts the same functions as HTTP routes.  Core argument
and data errors map to 400, numerical/fit failures to 422.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import identify, metrics, model, signals, spectral
from ..errors import FesidError, NumericalError
from . import schemas


def health() -> dict:
    return {"status": "ok"}


def gen_mseq(req: schemas.GenMseqRequest) -> schemas.TimeSeriesPayload:
    ts = signals.generate_mseq(
        register_length=req.register_length,
        carrier_hz=req.carrier_hz,
        amplitude=req.amplitude,
        periods=req.periods,
        dt=req.dt,
        unit=req.unit,
    )
    return schemas.TimeSeriesPayload.from_timeseries(ts)


def gen_pulsetrain(req: schemas.GenPulseTrainRequest) -> schemas.TimeSeriesPayload:
    spec = signals.PulseTrainSpec(
        rate=req.rate,
        duration=req.duration,
        waveform=req.waveform.to_waveform(),
        fire_probability=req.fire_probability,
        seed=req.seed,
    )
    ts = signals.generate_pulse_train(spec, req.dt, unit=req.unit)
    return schemas.TimeSeriesPayload.from_timeseries(ts)


def gen_staircase(req: schemas.GenStaircaseRequest) -> schemas.TimeSeriesPayload:
    ts = signals.generate_staircase(
        start_amplitude=req.start_amplitude,
        step=req.step,
        n_levels=req.n_levels,
        on_time=req.on_time,
        off_time=req.off_time,
        rate=req.rate,
        waveform=req.waveform.to_waveform(),
        dt=req.dt,
        unit=req.unit,
    )
    return schemas.TimeSeriesPayload.from_timeseries(ts)


def gen_step(req: schemas.GenStepRequest) -> schemas.TimeSeriesPayload:
    ts = signals.generate_step(
        amplitude=req.amplitude,
        onset=req.onset,
        width=req.width,
        duration=req.duration,
        dt=req.dt,
        unit=req.unit,
    )
    return schemas.TimeSeriesPayload.from_timeseries(ts)


def run_etfe(req: schemas.EtfeRequest) -> schemas.FrequencyResponsePayload:
    fr = spectral.etfe(
        req.input.to_timeseries(),
        req.output.to_timeseries(),
        segment_len=req.segment_len,
        overlap_fraction=req.overlap_fraction,
    )
    return schemas.FrequencyResponsePayload.from_frequency_response(fr)


def fit_rational(req: schemas.FitRationalRequest) -> schemas.FitRationalResponse:
    tf, report = identify.fit_rational_freq(
        req.fr.to_frequency_response(),
        num_degree=req.num_degree,
        den_degree=req.den_degree,
        num_lowest_power=req.num_lowest_power,
    )
    return schemas.FitRationalResponse(
        num=list(tf.num),
        den=list(tf.den),
        report=schemas.FitReportPayload.from_report(report),
    )


def fit_first_order(req: schemas.FitFirstOrderRequest) -> schemas.FitFirstOrderResponse:
    c1, d0, report = identify.fit_first_order_time(
        req.drive.to_timeseries(), req.force.to_timeseries(), req.dead_time
    )
    return schemas.FitFirstOrderResponse(
        c1=c1, d0=d0, report=schemas.FitReportPayload.from_report(report)
    )


def predict_force(req: schemas.PredictForceRequest) -> schemas.TimeSeriesPayload:
    force = model.predict_force(req.model.to_model(), req.current.to_timeseries())
    return schemas.TimeSeriesPayload.from_timeseries(force)


def detect_threshold(req: schemas.ThresholdRequest) -> schemas.ThresholdResponse:
    i_th, report = identify.detect_threshold_current(req.to_trial())
    return schemas.ThresholdResponse(
        i_th=i_th, report=schemas.FitReportPayload.from_report(report)
    )


def estimate_dead_time(req: schemas.DeadTimeRequest) -> schemas.DeadTimeResponse:
    pairs = [
        (trial.current.to_timeseries(), trial.force.to_timeseries()) for trial in req.trials
    ]
    t_d, per_trial = identify.estimate_dead_time(
        pairs, baseline_samples=req.baseline_samples, hold=req.hold
    )
    return schemas.DeadTimeResponse(t_d=t_d, per_trial=per_trial)


def run_validate(req: schemas.ValidateRequest) -> schemas.ValidationMetricsPayload:
    result = metrics.validate(
        req.measured.to_timeseries(),
        req.predicted.to_timeseries(),
        settle_time=req.settle_time,
        lpf_hz=req.lpf_hz,
    )
    return schemas.ValidationMetricsPayload.from_metrics(result)


def create_app() -> FastAPI:
    app = FastAPI(title="fesid", description="FES muscle-model identification service")

    @app.exception_handler(FesidError)
    async def _core_error(request: Request, exc: FesidError) -> JSONResponse:
        status = 422 if isinstance(exc, NumericalError) else 400
        return JSONResponse(
            status_code=status,
            content={"detail": str(exc), "kind": type(exc).__name__},
        )

    app.get("/health")(health)
    app.post("/gen/mseq")(gen_mseq)
    app.post("/gen/pulsetrain")(gen_pulsetrain)
    app.post("/gen/staircase")(gen_staircase)
    app.post("/gen/step")(gen_step)
    app.post("/spectral/etfe")(run_etfe)
    app.post("/fit/rational")(fit_rational)
    app.post("/fit/first-order")(fit_first_order)
    app.post("/model/predict-force")(predict_force)
    app.post("/identify/threshold")(detect_threshold)
    app.post("/identify/dead-time")(estimate_dead_time)
    app.post("/validate")(run_validate)
    return app
