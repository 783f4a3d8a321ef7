import numpy as np
import pytest
from fastapi.testclient import TestClient

from fesid.model import MuscleChannel, MuscleModel, predict_force
from fesid.service.app import create_app
from fesid.service.schemas import MuscleModelPayload, TimeSeriesPayload
from fesid.signals import generate_mseq
from fesid.timeseries import TimeSeries

from conftest import series


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


def payload(ts):
    return TimeSeriesPayload.from_timeseries(ts).model_dump()


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok"}


def test_gen_mseq_matches_library(client):
    r = client.post(
        "/gen/mseq",
        json={"register_length": 4, "carrier_hz": 100.0, "amplitude": 2.0,
              "periods": 1, "dt": 1e-3},
    )
    assert r.status_code == 200
    body = r.json()
    direct = generate_mseq(4, 100.0, 2.0, 1, 1e-3)
    assert body["dt"] == 1e-3
    assert body["unit"] == "volt"
    assert np.array_equal(np.array(body["samples"]), direct.samples)


def test_gen_pulsetrain_is_deterministic(client):
    req = {
        "rate": 100.0, "duration": 0.2,
        "waveform": {"pos_width": 1e-3, "pos_amplitude": 1.0},
        "fire_probability": 0.5, "seed": 7, "dt": 1e-4,
    }
    a = client.post("/gen/pulsetrain", json=req)
    b = client.post("/gen/pulsetrain", json=req)
    assert a.status_code == 200
    assert a.json() == b.json()


def test_fit_first_order_endpoint(client):
    from fesid.model import RationalTF, simulate_lti

    rng = np.random.default_rng(19)
    drive = series(rng.random(5000), dt=1e-3, unit="ampere")
    force = simulate_lti(RationalTF.first_order(50.0, 0.2), drive, unit="newton")
    r = client.post(
        "/fit/first-order",
        json={"drive": payload(drive), "force": payload(force), "dead_time": 0.0},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["c1"] == pytest.approx(0.2, rel=1e-6)
    assert body["d0"] == pytest.approx(50.0, rel=1e-6)
    assert body["report"]["method"] == "arx-ols"


def test_predict_force_endpoint(client, subject_a):
    i = series(np.full(2000, 0.02), dt=1e-3, unit="ampere")
    r = client.post(
        "/model/predict-force",
        json={
            "model": MuscleModelPayload.from_model(subject_a).model_dump(),
            "current": payload(i),
        },
    )
    assert r.status_code == 200
    got = np.array(r.json()["samples"])
    expected = predict_force(subject_a, i)
    assert np.allclose(got, expected.samples, rtol=1e-12)
    assert r.json()["unit"] == "newton"


def test_threshold_endpoint(client):
    r = client.post(
        "/identify/threshold",
        json={
            "level_voltages": [4.0, 4.5, 5.0, 5.5],
            "level_currents": [0.010, 0.012, 0.014, 0.016],
            "level_peak_forces": [0.0, 0.0, 4.0, 9.0],
            "noise_floor": 1e-6,
        },
    )
    assert r.status_code == 200
    assert r.json()["i_th"] == pytest.approx(0.013)


def test_dead_time_endpoint(client):
    i = np.zeros(600)
    i[300:] = 1.0
    f = np.zeros(600)
    f[323:] = 2.0
    trial = {
        "current": payload(series(i, dt=1e-3, unit="ampere")),
        "force": payload(series(f, dt=1e-3, unit="newton")),
    }
    r = client.post("/identify/dead-time", json={"trials": [trial]})
    assert r.status_code == 200
    assert r.json()["t_d"] == pytest.approx(0.023)


def test_validate_endpoint(client):
    ts = series(np.sin(np.arange(500) * 0.05), dt=1e-3, unit="newton")
    r = client.post(
        "/validate",
        json={"measured": payload(ts), "predicted": payload(ts), "settle_time": 0.1},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["rmse"] == 0.0
    assert body["fit_percent"] == 100.0


def test_argument_errors_map_to_400(client):
    r = client.post(
        "/gen/mseq",
        json={"register_length": 99, "carrier_hz": 100.0, "amplitude": 1.0,
              "periods": 1, "dt": 1e-3},
    )
    assert r.status_code == 400
    body = r.json()
    assert body["kind"] == "ConfigurationError"
    assert "register length" in body["detail"]


def test_numerical_errors_map_to_422(client):
    zeros = payload(series(np.zeros(2048), dt=1e-3))
    r = client.post(
        "/spectral/etfe",
        json={"input": zeros, "output": zeros, "segment_len": 256},
    )
    assert r.status_code == 422
    assert r.json()["kind"] == "DegenerateInputError"


def test_schema_validation_rejects_malformed_payloads(client):
    r = client.post("/gen/mseq", json={"register_length": 4})
    assert r.status_code == 422  # fastapi validation, not a core error


def test_bad_unit_is_an_argument_error(client):
    bad = {"t0": 0.0, "dt": 1e-3, "unit": "parsec", "samples": [1.0, 2.0]}
    r = client.post(
        "/validate",
        json={"measured": bad, "predicted": bad, "settle_time": 1e-4},
    )
    assert r.status_code == 400
    assert r.json()["kind"] == "ArgumentError"
