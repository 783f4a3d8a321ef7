"""Batch frontend over the service handlers.

Every compute subcommand builds the same request payload the HTTP API
takes and, by default, calls the handler in-process.  With --url the
request goes to a running service instead; file reading and writing
always happen locally, so outputs are byte-identical either way.

Exit codes: 0 success, 2 argument/configuration, 3 data format,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import errors
from .errors import DataFormatError, DegenerateFitError, FesidError
from .fileio import atomic_write_text
from .identify import FitReport, read_fit_report, write_fit_report
from .metrics import write_validation_metrics
from .model import (
    MODEL_KEYS,
    RationalTF,
    read_muscle_model,
    read_rational_tf,
    sample_response,
    write_rational_tf,
)
from .service import app as handlers
from .service import schemas
from .signals import BiphasicWaveform
from .spectral import (
    magnitude_db,
    read_frequency_response_csv,
    write_frequency_response_csv,
)
from .timeseries import read_timeseries_csv, write_timeseries_csv

_HANDLERS = {
    "/gen/mseq": handlers.gen_mseq,
    "/gen/pulsetrain": handlers.gen_pulsetrain,
    "/gen/staircase": handlers.gen_staircase,
    "/gen/step": handlers.gen_step,
    "/spectral/etfe": handlers.run_etfe,
    "/fit/rational": handlers.fit_rational,
    "/fit/first-order": handlers.fit_first_order,
    "/model/predict-force": handlers.predict_force,
    "/validate": handlers.run_validate,
}


def _invoke(args: argparse.Namespace, path: str, request, response_cls):
    url = getattr(args, "url", None)
    if not url:
        return _HANDLERS[path](request)
    import httpx

    resp = httpx.post(url.rstrip("/") + path, json=request.model_dump(), timeout=300.0)
    if resp.status_code == 200:
        return response_cls.model_validate(resp.json())
    try:
        payload = resp.json()
    except ValueError:
        raise DataFormatError(f"service returned {resp.status_code}: {resp.text[:200]}")
    detail = payload.get("detail", payload)
    kind = payload.get("kind", "")
    exc_cls = getattr(errors, kind, None)
    if isinstance(exc_cls, type) and issubclass(exc_cls, FesidError):
        raise exc_cls(str(detail))
    raise errors.ArgumentError(f"service rejected request ({resp.status_code}): {detail}")


def _payload_from_csv(path: str) -> schemas.TimeSeriesPayload:
    return schemas.TimeSeriesPayload.from_timeseries(read_timeseries_csv(path))


def _waveform_payload(
    amplitude: float, pulse_width: float, tail_width: float, gap: float
) -> schemas.WaveformPayload:
    if tail_width > 0:
        wf = BiphasicWaveform.charge_balanced(pulse_width, amplitude, tail_width, gap)
    else:
        wf = BiphasicWaveform(pos_width=pulse_width, pos_amplitude=amplitude, gap=gap)
    return schemas.WaveformPayload(
        pos_width=wf.pos_width,
        pos_amplitude=wf.pos_amplitude,
        neg_width=wf.neg_width,
        neg_amplitude=wf.neg_amplitude,
        gap=wf.gap,
    )


def _report_from_payload(payload: schemas.FitReportPayload) -> FitReport:
    return FitReport(
        method=payload.method,
        params=dict(payload.params),
        residual_rms=payload.residual_rms,
        n_points=payload.n_points,
        condition_estimate=payload.condition_estimate,
        flags=tuple(payload.flags),
    )


def _cmd_gen_mseq(args: argparse.Namespace) -> int:
    req = schemas.GenMseqRequest(
        register_length=args.register_length,
        carrier_hz=args.carrier,
        amplitude=args.amplitude,
        periods=args.periods,
        dt=args.dt,
        unit=args.unit,
    )
    out = _invoke(args, "/gen/mseq", req, schemas.TimeSeriesPayload)
    write_timeseries_csv(out.to_timeseries(), args.out)
    return 0


def _cmd_gen_pulsetrain(args: argparse.Namespace) -> int:
    req = schemas.GenPulseTrainRequest(
        rate=args.rate,
        duration=args.duration,
        waveform=_waveform_payload(args.amplitude, args.pulse_width, args.tail_width, args.gap),
        fire_probability=args.p,
        seed=args.seed,
        dt=args.dt,
        unit=args.unit,
    )
    out = _invoke(args, "/gen/pulsetrain", req, schemas.TimeSeriesPayload)
    write_timeseries_csv(out.to_timeseries(), args.out)
    return 0


def _cmd_gen_staircase(args: argparse.Namespace) -> int:
    req = schemas.GenStaircaseRequest(
        start_amplitude=args.start,
        step=args.step,
        n_levels=args.levels,
        on_time=args.on,
        off_time=args.off,
        rate=args.rate,
        waveform=_waveform_payload(1.0, args.pulse_width, args.tail_width, args.gap),
        dt=args.dt,
        unit=args.unit,
    )
    out = _invoke(args, "/gen/staircase", req, schemas.TimeSeriesPayload)
    write_timeseries_csv(out.to_timeseries(), args.out)
    return 0


def _cmd_gen_step(args: argparse.Namespace) -> int:
    req = schemas.GenStepRequest(
        amplitude=args.amplitude,
        onset=args.onset,
        width=args.width,
        duration=args.duration,
        dt=args.dt,
        unit=args.unit,
    )
    out = _invoke(args, "/gen/step", req, schemas.TimeSeriesPayload)
    write_timeseries_csv(out.to_timeseries(), args.out)
    return 0


def _cmd_etfe(args: argparse.Namespace) -> int:
    req = schemas.EtfeRequest(
        input=_payload_from_csv(args.input),
        output=_payload_from_csv(args.output),
        segment_len=args.nfft,
        overlap_fraction=args.overlap,
    )
    out = _invoke(args, "/spectral/etfe", req, schemas.FrequencyResponsePayload)
    write_frequency_response_csv(out.to_frequency_response(), args.out)
    return 0


def _cmd_fit_gvi(args: argparse.Namespace) -> int:
    fr = read_frequency_response_csv(args.fr)
    req = schemas.FitRationalRequest(
        fr=schemas.FrequencyResponsePayload.from_frequency_response(fr),
        num_degree=args.num_degree,
        den_degree=args.den_degree,
        num_lowest_power=args.num_lowest,
    )
    out = _invoke(args, "/fit/rational", req, schemas.FitRationalResponse)
    write_rational_tf(RationalTF(num=tuple(out.num), den=tuple(out.den)), args.out)
    if args.fitreport:
        write_fit_report(_report_from_payload(out.report), args.fitreport)
    return 0


def _cmd_fit_gif(args: argparse.Namespace) -> int:
    req = schemas.FitFirstOrderRequest(
        drive=_payload_from_csv(args.drive),
        force=_payload_from_csv(args.force),
        dead_time=args.deadtime,
    )
    out = _invoke(args, "/fit/first-order", req, schemas.FitFirstOrderResponse)
    if args.fitreport:
        write_fit_report(_report_from_payload(out.report), args.fitreport)
    if not (math.isfinite(out.c1) and out.c1 > 0):
        raise DegenerateFitError(
            "fit is degenerate (force record carries no response); no model written"
        )
    write_rational_tf(RationalTF.first_order(out.d0, out.c1), args.out)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    model = read_muscle_model(args.model)
    req = schemas.PredictForceRequest(
        model=schemas.MuscleModelPayload.from_model(model),
        current=_payload_from_csv(args.current),
    )
    out = _invoke(args, "/model/predict-force", req, schemas.TimeSeriesPayload)
    write_timeseries_csv(out.to_timeseries(), args.out)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    req = schemas.ValidateRequest(
        measured=_payload_from_csv(args.measured),
        predicted=_payload_from_csv(args.predicted),
        settle_time=args.settle,
        lpf_hz=args.lpf,
    )
    out = _invoke(args, "/validate", req, schemas.ValidationMetricsPayload)
    from .metrics import ValidationMetrics

    metrics = ValidationMetrics(
        rmse=out.rmse,
        fit_percent=out.fit_percent,
        steady_state_window=(out.steady_start, out.steady_end),
        steady_rmse=out.steady_rmse,
    )
    write_validation_metrics(metrics, args.out)
    return 0


def _flags_line(path: str | None) -> str:
    if not path:
        return "-"
    report = read_fit_report(path)
    return ",".join(report.flags) if report.flags else "-"


def _cmd_report(args: argparse.Namespace) -> int:
    model = read_muscle_model(args.model)
    os.makedirs(args.out_dir, exist_ok=True)

    values = {
        "i_th_pos": model.pos.i_th,
        "t_d_pos": model.pos.t_d,
        "c1_pos": model.pos.c1,
        "d0_pos": model.pos.d0,
        "i_th_neg": model.neg.i_th,
        "t_d_neg": model.neg.t_d,
        "c1_neg": model.neg.c1,
        "d0_neg": model.neg.d0,
        "output_sign_neg": model.output_sign_neg,
    }
    lines = [f"{'parameter':<18} value"]
    for key in MODEL_KEYS:
        lines.append(f"{key:<18} {values[key]!r}")
    lines.append(f"{'flags_pos':<18} {_flags_line(args.threshold_report_pos)}")
    lines.append(f"{'flags_neg':<18} {_flags_line(args.threshold_report_neg)}")
    if args.metrics:
        from .metrics import METRICS_KEYS, read_validation_metrics

        m = read_validation_metrics(args.metrics)
        metric_values = dict(
            zip(
                METRICS_KEYS,
                (
                    m.rmse,
                    m.fit_percent,
                    m.steady_state_window[0],
                    m.steady_state_window[1],
                    m.steady_rmse,
                ),
            )
        )
        for key in METRICS_KEYS:
            lines.append(f"{key:<18} {metric_values[key]!r}")
    atomic_write_text(os.path.join(args.out_dir, "summary.txt"), "\n".join(lines) + "\n")

    if (args.fr is None) != (args.tf is None):
        raise errors.ArgumentError("--fr and --tf must be given together")
    if args.fr and args.tf:
        fr = read_frequency_response_csv(args.fr)
        tf = read_rational_tf(args.tf)
        measured = magnitude_db(fr)
        fitted = magnitude_db(sample_response(tf, fr.f_hz))
        rows = ["f_hz,measured_db,fitted_db"]
        for (f, m_db), (_, f_db) in zip(measured, fitted):
            rows.append(f"{f:.16e},{m_db!r},{f_db!r}")
        atomic_write_text(os.path.join(args.out_dir, "magnitude.csv"), "\n".join(rows) + "\n")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def _add_url(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--url", default=None, help="send the request to a running service")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fesid")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate excitation files")
    gen_sub = gen.add_subparsers(dest="generator", required=True)

    p = gen_sub.add_parser("mseq", help="maximal-length binary sequence")
    p.add_argument("--register-length", type=int, required=True)
    p.add_argument("--carrier", type=float, required=True, help="chip rate in Hz")
    p.add_argument("--amplitude", type=float, required=True)
    p.add_argument("--periods", type=int, default=1)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--unit", default="volt")
    p.add_argument("--out", required=True)
    _add_url(p)
    p.set_defaults(func=_cmd_gen_mseq)

    p = gen_sub.add_parser("pulsetrain", help="randomly gated pulse train")
    p.add_argument("--rate", type=float, required=True, help="pulses per second")
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--amplitude", type=float, required=True)
    p.add_argument("--pulse-width", type=float, default=5e-4)
    p.add_argument("--tail-width", type=float, default=0.0,
                   help="charge-recovery phase width; 0 for monophasic")
    p.add_argument("--gap", type=float, default=0.0)
    p.add_argument("--p", type=float, default=1.0, help="per-slot firing probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--unit", default="volt")
    p.add_argument("--out", required=True)
    _add_url(p)
    p.set_defaults(func=_cmd_gen_pulsetrain)

    p = gen_sub.add_parser("staircase", help="stepwise amplitude ladder")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--on", type=float, default=1.0)
    p.add_argument("--off", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=40.0)
    p.add_argument("--pulse-width", type=float, default=5e-4)
    p.add_argument("--tail-width", type=float, default=5e-3)
    p.add_argument("--gap", type=float, default=0.0)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--unit", default="volt")
    p.add_argument("--out", required=True)
    _add_url(p)
    p.set_defaults(func=_cmd_gen_staircase)

    p = gen_sub.add_parser("step", help="single rectangular pulse")
    p.add_argument("--amplitude", type=float, required=True)
    p.add_argument("--onset", type=float, default=0.3)
    p.add_argument("--width", type=float, default=0.35)
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--unit", default="volt")
    p.add_argument("--out", required=True)
    _add_url(p)
    p.set_defaults(func=_cmd_gen_step)

    p = sub.add_parser("etfe", help="transfer-function estimate from records")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--nfft", type=int, default=512)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--out", required=True)
    _add_url(p)
    p.set_defaults(func=_cmd_etfe)

    fit = sub.add_parser("fit", help="fit model parameters")
    fit_sub = fit.add_subparsers(dest="target", required=True)

    p = fit_sub.add_parser("gvi", help="rational fit of a frequency response")
    p.add_argument("--fr", required=True)
    p.add_argument("--num-degree", type=int, default=1)
    p.add_argument("--den-degree", type=int, default=2)
    p.add_argument("--num-lowest", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--fitreport", default=None)
    _add_url(p)
    p.set_defaults(func=_cmd_fit_gvi)

    p = fit_sub.add_parser("gif", help="first-order lag fit of drive/force records")
    p.add_argument("--drive", required=True)
    p.add_argument("--force", required=True)
    p.add_argument("--deadtime", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--fitreport", default=None)
    _add_url(p)
    p.set_defaults(func=_cmd_fit_gif)

    p = sub.add_parser("simulate", help="predict force from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--current", required=True)
    p.add_argument("--out", required=True)
    _add_url(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("validate", help="compare predicted against measured force")
    p.add_argument("--measured", required=True)
    p.add_argument("--predicted", required=True)
    p.add_argument("--settle", type=float, required=True)
    p.add_argument("--lpf", type=float, default=None)
    p.add_argument("--out", required=True)
    _add_url(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("report", help="summary table and plot-ready bundles")
    p.add_argument("--model", required=True)
    p.add_argument("--fr", default=None)
    p.add_argument("--tf", default=None)
    p.add_argument("--metrics", default=None)
    p.add_argument("--threshold-report-pos", default=None)
    p.add_argument("--threshold-report-neg", default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FesidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def entry() -> None:
    sys.exit(main())
