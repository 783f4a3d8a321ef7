import threading
import time

import numpy as np
import pytest

from fesid.cli import main
from fesid.identify import read_fit_report
from fesid.metrics import read_validation_metrics
from fesid.model import (
    RationalTF,
    read_rational_tf,
    sample_response,
    simulate_lti,
    write_muscle_model,
)
from fesid.spectral import read_frequency_response_csv, write_frequency_response_csv
from fesid.synth import SUBJECT_A
from fesid.timeseries import read_timeseries_csv, write_timeseries_csv

from conftest import series


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_gen_mseq(tmp_path):
    out = str(tmp_path / "mseq.csv")
    code = main([
        "gen", "mseq", "--register-length", "4", "--carrier", "100",
        "--amplitude", "2.0", "--dt", "1e-3", "--out", out,
    ])
    assert code == 0
    ts = read_timeseries_csv(out)
    assert ts.n == 150
    assert set(np.unique(ts.samples)) == {-2.0, 2.0}


def test_gen_staircase_ladder(tmp_path):
    out = str(tmp_path / "stair.csv")
    code = main(["gen", "staircase", "--start", "6", "--step", "2", "--out", out])
    assert code == 0
    ts = read_timeseries_csv(out)
    block = int(round(2.0 / ts.dt))  # 1 s on + 1 s off
    assert ts.n == 8 * block
    for level in range(8):
        seg = ts.samples[level * block : (level + 1) * block]
        assert seg.max() == pytest.approx(6.0 + 2.0 * level, rel=1e-9)


def test_gen_pulsetrain_rerun_is_byte_identical(tmp_path):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    argv = [
        "gen", "pulsetrain", "--rate", "500", "--duration", "0.5",
        "--amplitude", "1.5", "--p", "0.5", "--seed", "5", "--dt", "1e-4",
    ]
    assert main(argv + ["--out", a]) == 0
    assert main(argv + ["--out", b]) == 0
    assert read_bytes(a) == read_bytes(b)
    different = str(tmp_path / "c.csv")
    argv[-1] = "1e-4"
    assert main([
        "gen", "pulsetrain", "--rate", "500", "--duration", "0.5",
        "--amplitude", "1.5", "--p", "0.5", "--seed", "6", "--dt", "1e-4",
        "--out", different,
    ]) == 0
    assert read_bytes(a) != read_bytes(different)


def test_gen_step(tmp_path):
    out = str(tmp_path / "step.csv")
    code = main([
        "gen", "step", "--amplitude", "0.03", "--onset", "0.1", "--width", "0.2",
        "--duration", "0.5", "--dt", "1e-3", "--unit", "ampere", "--out", out,
    ])
    assert code == 0
    ts = read_timeseries_csv(out)
    assert ts.unit == "ampere"
    assert np.array_equal(np.flatnonzero(ts.samples), np.arange(100, 300))


def test_missing_required_flag_exits_2(tmp_path, capsys):
    assert main(["gen", "mseq", "--register-length", "4"]) == 2
    assert main(["no-such-command"]) == 2
    capsys.readouterr()


def test_missing_input_file_exits_3(tmp_path, capsys):
    code = main([
        "fit", "gif", "--drive", str(tmp_path / "none.csv"),
        "--force", str(tmp_path / "none2.csv"), "--out", str(tmp_path / "tf.txt"),
    ])
    assert code == 3
    assert "error:" in capsys.readouterr().err


def test_fit_gif_recovers_lag(tmp_path):
    rng = np.random.default_rng(83)
    drive = series(rng.random(20000) * 0.02, dt=1e-3, unit="ampere")
    force = simulate_lti(RationalTF.first_order(32207.0, 0.1889), drive, unit="newton")
    drive_csv = str(tmp_path / "drive.csv")
    force_csv = str(tmp_path / "force.csv")
    write_timeseries_csv(drive, drive_csv)
    write_timeseries_csv(force, force_csv)
    tf_path = str(tmp_path / "gif.txt")
    report_path = str(tmp_path / "gif_report.txt")
    code = main([
        "fit", "gif", "--drive", drive_csv, "--force", force_csv,
        "--out", tf_path, "--fitreport", report_path,
    ])
    assert code == 0
    tf = read_rational_tf(tf_path)
    assert tf.den[1] == pytest.approx(0.1889, rel=1e-6)
    assert tf.num[0] == pytest.approx(32207.0, rel=1e-6)
    report = read_fit_report(report_path)
    assert report.method == "arx-ols"
    assert report.params["c1"] == pytest.approx(0.1889, rel=1e-6)


def test_fit_gif_degenerate_force_exits_4_but_reports(tmp_path, capsys):
    drive = series(np.random.default_rng(0).random(100), dt=1e-3, unit="ampere")
    silent = drive.with_samples(np.zeros(100), unit="newton")
    drive_csv = str(tmp_path / "drive.csv")
    force_csv = str(tmp_path / "force.csv")
    write_timeseries_csv(drive, drive_csv)
    write_timeseries_csv(silent, force_csv)
    tf_path = tmp_path / "gif.txt"
    report_path = tmp_path / "gif_report.txt"
    code = main([
        "fit", "gif", "--drive", drive_csv, "--force", force_csv,
        "--out", str(tf_path), "--fitreport", str(report_path),
    ])
    assert code == 4
    assert not tf_path.exists()  # no model written on a degenerate fit
    report = read_fit_report(str(report_path))
    assert "force_identically_zero" in report.flags
    capsys.readouterr()


def test_fit_gvi_from_response_file(tmp_path):
    tf = RationalTF(num=(0.0, 1.9e-7), den=(1.0, 2.2e-5, 8.0e-10))
    f = np.logspace(1.5, 4.8, 80)
    fr_csv = str(tmp_path / "fr.csv")
    write_frequency_response_csv(sample_response(tf, f), fr_csv)
    out = str(tmp_path / "gvi.txt")
    code = main(["fit", "gvi", "--fr", fr_csv, "--out", out])
    assert code == 0
    fitted = read_rational_tf(out)
    assert fitted.num[1] == pytest.approx(1.9e-7, rel=1e-6)
    assert fitted.den[2] == pytest.approx(8.0e-10, rel=1e-6)


def test_etfe_command(tmp_path):
    rng = np.random.default_rng(87)
    inp = series(rng.standard_normal(4096), dt=1e-3)
    out_ts = inp.with_samples(2.5 * inp.samples)
    in_csv, out_csv = str(tmp_path / "in.csv"), str(tmp_path / "out.csv")
    write_timeseries_csv(inp, in_csv)
    write_timeseries_csv(out_ts, out_csv)
    fr_csv = str(tmp_path / "fr.csv")
    code = main(["etfe", "--input", in_csv, "--output", out_csv, "--out", fr_csv])
    assert code == 0
    fr = read_frequency_response_csv(fr_csv)
    assert np.max(np.abs(fr.gain - 2.5)) < 1e-9


def test_simulate_step_reaches_static_gain(tmp_path):
    model_path = str(tmp_path / "model.txt")
    write_muscle_model(SUBJECT_A, model_path)
    current_csv = str(tmp_path / "current.csv")
    assert main([
        "gen", "step", "--amplitude", "0.03", "--onset", "0", "--width", "2.0",
        "--duration", "2.0", "--dt", "1e-4", "--unit", "ampere", "--out", current_csv,
    ]) == 0
    force_csv = str(tmp_path / "force.csv")
    code = main(["simulate", "--model", model_path, "--current", current_csv,
                 "--out", force_csv])
    assert code == 0
    force = read_timeseries_csv(force_csv)
    steady = SUBJECT_A.pos.d0 * (0.03 - SUBJECT_A.pos.i_th)
    assert force.samples[-1] == pytest.approx(steady, rel=1e-3)


def test_validate_identical_records(tmp_path):
    ts = series(np.sin(np.arange(2000) * 0.01), dt=1e-3, unit="newton")
    a_csv, b_csv = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    write_timeseries_csv(ts, a_csv)
    write_timeseries_csv(ts, b_csv)
    out = str(tmp_path / "metrics.txt")
    code = main(["validate", "--measured", a_csv, "--predicted", b_csv,
                 "--settle", "0.5", "--out", out])
    assert code == 0
    m = read_validation_metrics(out)
    assert m.rmse == 0.0
    assert m.fit_percent == 100.0


def test_validate_settle_beyond_record_exits_2(tmp_path, capsys):
    ts = series(np.ones(100), dt=1e-3, unit="newton")
    a_csv = str(tmp_path / "a.csv")
    write_timeseries_csv(ts, a_csv)
    code = main(["validate", "--measured", a_csv, "--predicted", a_csv,
                 "--settle", "0.1", "--out", str(tmp_path / "m.txt")])
    assert code == 2
    capsys.readouterr()


def test_report_bundle(tmp_path):
    model_path = str(tmp_path / "model.txt")
    write_muscle_model(SUBJECT_A, model_path)
    tf = RationalTF(num=(0.0, 1.9e-7), den=(1.0, 2.2e-5, 8.0e-10))
    f = np.logspace(2, 4, 50)
    fr_csv = str(tmp_path / "fr.csv")
    write_frequency_response_csv(sample_response(tf, f), fr_csv)
    tf_path = str(tmp_path / "tf.txt")
    from fesid.model import write_rational_tf

    write_rational_tf(tf, tf_path)
    out_dir = tmp_path / "report"
    code = main([
        "report", "--model", model_path, "--fr", fr_csv, "--tf", tf_path,
        "--out-dir", str(out_dir),
    ])
    assert code == 0
    summary = (out_dir / "summary.txt").read_text().splitlines()
    assert summary[0].split() == ["parameter", "value"]
    assert summary[1].startswith("i_th_pos")
    assert summary[4].startswith("d0_pos")
    assert float(summary[4].split()[1]) == SUBJECT_A.pos.d0
    assert summary[10].startswith("flags_pos")
    magnitude = (out_dir / "magnitude.csv").read_text().splitlines()
    assert magnitude[0] == "f_hz,measured_db,fitted_db"
    assert len(magnitude) == 51
    # measured and fitted columns agree since the response came from tf
    row = magnitude[1].split(",")
    assert float(row[1]) == pytest.approx(float(row[2]), abs=1e-9)


def test_report_fr_without_tf_exits_2(tmp_path, capsys):
    model_path = str(tmp_path / "model.txt")
    write_muscle_model(SUBJECT_A, model_path)
    code = main(["report", "--model", model_path, "--fr", "whatever.csv",
                 "--out-dir", str(tmp_path / "r")])
    assert code == 2
    capsys.readouterr()


def test_http_mode_matches_in_process(tmp_path):
    uvicorn = pytest.importorskip("uvicorn")
    from fesid.service import create_app

    config = uvicorn.Config(create_app(), host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        for _ in range(200):
            if server.started:
                break
            time.sleep(0.05)
        else:
            pytest.skip("service did not come up")
        port = server.servers[0].sockets[0].getsockname()[1]
        url = f"http://127.0.0.1:{port}"
        local = str(tmp_path / "local.csv")
        remote = str(tmp_path / "remote.csv")
        argv = ["gen", "mseq", "--register-length", "5", "--carrier", "100",
                "--amplitude", "1.0", "--dt", "1e-3"]
        assert main(argv + ["--out", local]) == 0
        assert main(argv + ["--out", remote, "--url", url]) == 0
        assert read_bytes(local) == read_bytes(remote)
    finally:
        server.should_exit = True
        thread.join(timeout=5)
