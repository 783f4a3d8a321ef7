import numpy as np
import pytest

from fesid.errors import ArgumentError, ConfigurationError, DataFormatError, DomainError
from fesid.model import (
    DEFAULT_CIRCUIT,
    CircuitParams,
    MuscleChannel,
    MuscleModel,
    RationalTF,
    apply_threshold,
    circuit_reconstruct,
    eval_freq,
    predict_force,
    read_muscle_model,
    read_rational_tf,
    sample_response,
    simulate_lti,
    write_muscle_model,
    write_rational_tf,
)

from conftest import series

GVI_A = RationalTF(num=(0.0, 1.9e-7), den=(1.0, 2.2e-5, 8.0e-10))
GVI_B = RationalTF(num=(0.0, 1.4e-7), den=(1.0, 4.6e-5, 1.2e-9))


# --- measurement circuit ---


def test_circuit_algebra_on_random_taps():
    rng = np.random.default_rng(17)
    for _ in range(20):
        v1 = series(rng.uniform(-5, 5, 256), dt=1e-4)
        v3 = series(rng.uniform(-1, 1, 256), dt=1e-4)
        v_app, i_flo = circuit_reconstruct(v1, v3)
        # 0.2M/1.8M divider with 100 ohm shunt
        assert np.array_equal(v_app.samples, 10.0 * v1.samples - v3.samples)
        assert np.array_equal(i_flo.samples, v3.samples / 100.0)
        assert v_app.unit == "volt" and i_flo.unit == "ampere"
        assert i_flo.dt == v1.dt and i_flo.t0 == v1.t0


def test_circuit_custom_params():
    v1 = series([1.0, 2.0], dt=1e-3)
    v3 = series([0.5, 0.5], dt=1e-3)
    v_app, i_flo = circuit_reconstruct(v1, v3, CircuitParams(r1=1e6, r2=1e6, r3=50.0))
    assert np.array_equal(v_app.samples, 2.0 * v1.samples - v3.samples)
    assert np.array_equal(i_flo.samples, v3.samples / 50.0)


def test_circuit_rejects_mismatched_records():
    v1 = series(np.zeros(10), dt=1e-3)
    with pytest.raises(ArgumentError):
        circuit_reconstruct(v1, series(np.zeros(9), dt=1e-3))
    with pytest.raises(ArgumentError):
        circuit_reconstruct(v1, series(np.zeros(10), dt=2e-3))
    with pytest.raises(ArgumentError):
        CircuitParams(r1=0.0, r2=1.0, r3=1.0)


# --- rational transfer functions ---


def test_rational_tf_validation():
    with pytest.raises(ArgumentError):
        RationalTF(num=(1.0,), den=(2.0, 1.0))  # den[0] != 1
    with pytest.raises(ArgumentError):
        RationalTF(num=(), den=(1.0,))
    with pytest.raises(ArgumentError):
        RationalTF(num=(1.0, 2.0, 3.0), den=(1.0,))  # num degree 2 over den degree 0
    with pytest.raises(ArgumentError):
        RationalTF(num=(np.inf,), den=(1.0,))
    tf = RationalTF(num=(1.0, 2.0), den=(1.0,))  # degree excess of one is allowed
    assert not tf.is_proper


def test_first_order_shape():
    tf = RationalTF.first_order(32207.0, 0.1889)
    assert tf.num == (32207.0,)
    assert tf.den == (1.0, 0.1889)
    assert tf.is_proper


def test_eval_freq_first_order_landmarks():
    d0, c1 = 4888.2, 0.5789
    tf = RationalTF.first_order(d0, c1)
    assert eval_freq(tf, 0.0) == pytest.approx(d0)
    corner_hz = 1.0 / (2 * np.pi * c1)
    assert abs(eval_freq(tf, corner_hz)) == pytest.approx(d0 / np.sqrt(2), rel=1e-12)
    assert abs(eval_freq(tf, 1000 * corner_hz)) == pytest.approx(d0 / 1000, rel=1e-4)


def test_eval_freq_band_pass_peak_location():
    # second-order current-path model peaks at 1/(2*pi*sqrt(a2))
    for tf, a2 in ((GVI_A, 8.0e-10), (GVI_B, 1.2e-9)):
        f = np.linspace(100.0, 20000.0, 39801)
        mags = np.abs(sample_response(tf, f).gain)
        peak_hz = f[np.argmax(mags)]
        assert peak_hz == pytest.approx(1.0 / (2 * np.pi * np.sqrt(a2)), rel=1e-3)


def test_sample_response_matches_scalar_eval():
    f = np.array([10.0, 100.0, 1000.0, 5600.0])
    fr = sample_response(GVI_A, f)
    for k, fk in enumerate(f):
        assert fr.gain[k] == pytest.approx(eval_freq(GVI_A, fk), rel=1e-12)


def test_eval_freq_argument_checks():
    with pytest.raises(ArgumentError):
        eval_freq(GVI_A, -1.0)
    # pole on the imaginary axis: 1/(s^2/w^2 + 1) blows up at w
    osc = RationalTF(num=(1.0,), den=(1.0, 0.0, 1.0 / (2 * np.pi) ** 2))
    with pytest.raises(DomainError):
        eval_freq(osc, 1.0)


# --- recruitment threshold ---


def test_threshold_piecewise_grid():
    grid = np.linspace(-0.05, 0.05, 101)
    for i_th in (0.0, 0.005, 0.0144, 0.03):
        x = series(np.concatenate([grid, [i_th, -i_th]]), dt=1e-4, unit="ampere")
        pos = apply_threshold(x, i_th, "positive").samples
        neg = apply_threshold(x, i_th, "negative").samples
        expect_pos = np.where(x.samples > i_th, x.samples - i_th, 0.0)
        expect_neg = np.where(x.samples < -i_th, -x.samples - i_th, 0.0)
        assert np.array_equal(pos, expect_pos)
        assert np.array_equal(neg, expect_neg)
        # sitting exactly on the threshold produces no drive
        assert pos[-2] == 0.0 and neg[-1] == 0.0


def test_threshold_argument_checks():
    x = series(np.zeros(4), dt=1e-3, unit="ampere")
    with pytest.raises(ArgumentError):
        apply_threshold(x, -0.01, "positive")
    with pytest.raises(ArgumentError):
        apply_threshold(x, 0.01, "up")


# --- linear simulation ---


def test_simulate_step_matches_analytic_first_order():
    d0, c1 = 100.0, 0.2
    tf = RationalTF.first_order(d0, c1)
    dt = 1e-4
    drive = series(np.ones(30000), dt=dt, unit="ampere")
    out = simulate_lti(tf, drive, unit="newton")
    # sample k holds the response at t = k*dt: the first input sample
    # acts over (0, dt], so out[0] is still zero
    analytic = d0 * (1.0 - np.exp(-drive.times / c1))
    assert out.unit == "newton"
    assert np.max(np.abs(out.samples - analytic)) < 1e-9 * d0
    assert out.samples[-1] == pytest.approx(d0, rel=1e-5)


def test_simulate_is_linear():
    rng = np.random.default_rng(23)
    tf = RationalTF(num=(2.0, 0.01), den=(1.0, 0.03, 2e-6))
    a = series(rng.standard_normal(2000), dt=1e-3)
    b = series(rng.standard_normal(2000), dt=1e-3)
    both = a.with_samples(3.0 * a.samples + b.samples)
    lhs = simulate_lti(tf, both).samples
    rhs = 3.0 * simulate_lti(tf, a).samples + simulate_lti(tf, b).samples
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * max(1.0, np.max(np.abs(lhs)))


def test_simulate_dead_time_is_a_pure_shift():
    rng = np.random.default_rng(29)
    tf = RationalTF.first_order(5.0, 0.05)
    drive = series(rng.standard_normal(5000), dt=1e-3)
    base = simulate_lti(tf, drive).samples
    delayed = simulate_lti(tf, drive, dead_time=0.023).samples
    assert np.array_equal(delayed[23:], base[:-23])
    assert np.array_equal(delayed[:23], np.zeros(23))


def test_simulate_static_and_silent_paths():
    drive = series(np.arange(10.0), dt=1e-3)
    gain_only = simulate_lti(RationalTF(num=(3.0,), den=(1.0,)), drive)
    assert np.array_equal(gain_only.samples, 3.0 * drive.samples)
    silent = simulate_lti(RationalTF(num=(0.0,), den=(1.0, 0.1)), drive)
    assert not np.any(silent.samples)


def test_simulate_rejects_improper_and_bad_delay():
    drive = series(np.ones(10), dt=1e-3)
    improper = RationalTF(num=(1.0, 2.0), den=(1.0,))
    with pytest.raises(ConfigurationError):
        simulate_lti(improper, drive)
    with pytest.raises(ArgumentError):
        simulate_lti(RationalTF.first_order(1.0, 0.1), drive, dead_time=-0.1)


# --- two-channel muscle model ---


def test_channel_validation():
    with pytest.raises(ArgumentError):
        MuscleChannel(i_th=-0.001, t_d=0.02, c1=0.2, d0=100.0)
    with pytest.raises(ArgumentError):
        MuscleChannel(i_th=0.01, t_d=0.02, c1=0.0, d0=100.0)
    with pytest.raises(ArgumentError):
        MuscleChannel(i_th=0.01, t_d=np.nan, c1=0.2, d0=100.0)
    ch = MuscleChannel(i_th=0.01, t_d=0.02, c1=0.2, d0=100.0)
    assert ch.lag.num == (100.0,) and ch.lag.den == (1.0, 0.2)


def test_model_sign_validation(subject_a):
    with pytest.raises(ArgumentError):
        MuscleModel(pos=subject_a.pos, neg=subject_a.neg, output_sign_neg=0)


def test_predict_force_subthreshold_is_silent(subject_a):
    # current never exceeds either threshold, so no channel recruits
    amp = 0.9 * min(subject_a.pos.i_th, subject_a.neg.i_th)
    t = np.arange(5000) * 1e-3
    i = series(amp * np.sin(2 * np.pi * 2.0 * t), dt=1e-3, unit="ampere")
    force = predict_force(subject_a, i)
    assert force.unit == "newton"
    assert not np.any(force.samples)


def test_predict_force_steady_step_gain(subject_a):
    # steady response to a suprathreshold step is d0 * (I - i_th)
    dt = 1e-4
    amp = 0.03
    i = series(np.full(30000, amp), dt=dt, unit="ampere")
    force = predict_force(subject_a, i)
    expected = subject_a.pos.d0 * (amp - subject_a.pos.i_th)
    assert force.samples[-1] == pytest.approx(expected, rel=1e-3)


def test_predict_force_channels_are_independent(subject_a):
    dt = 1e-4
    neg_only = series(np.full(20000, -0.03), dt=dt, unit="ampere")
    force = predict_force(subject_a, neg_only)
    expected = subject_a.neg.d0 * (0.03 - subject_a.neg.i_th)
    assert force.samples[-1] == pytest.approx(expected, rel=1e-3)
    # positive channel alone cannot produce that force
    gutted = MuscleModel(pos=subject_a.pos, neg=MuscleChannel(1.0, 0.0, 1.0, 0.0))
    assert not np.any(predict_force(gutted, neg_only).samples)


def test_predict_force_negative_sign_subtracts(subject_a):
    dt = 1e-4
    i = series(np.full(20000, -0.03), dt=dt, unit="ampere")
    plus = predict_force(subject_a, i)
    minus = predict_force(
        MuscleModel(pos=subject_a.pos, neg=subject_a.neg, output_sign_neg=-1), i
    )
    assert np.array_equal(minus.samples, -plus.samples)


def test_predict_force_warns_on_subsample_dead_time(subject_a):
    i = series(np.full(200, 0.03), dt=0.1, unit="ampere")
    with pytest.warns(UserWarning):
        predict_force(subject_a, i)


# --- serialization ---


def test_muscle_model_file_round_trip(tmp_path, subject_a):
    path = str(tmp_path / "model.txt")
    write_muscle_model(subject_a, path)
    back = read_muscle_model(path)
    assert back == subject_a


def test_muscle_model_reader_accepts_any_order(tmp_path, subject_a):
    path = tmp_path / "model.txt"
    write_muscle_model(subject_a, str(path))
    lines = path.read_text().strip().splitlines()
    path.write_text("\n".join(reversed(lines)) + "\n")
    assert read_muscle_model(str(path)) == subject_a


def test_muscle_model_reader_rejects_bad_files(tmp_path, subject_a):
    path = tmp_path / "model.txt"
    write_muscle_model(subject_a, str(path))
    good = path.read_text()

    path.write_text(good + "bogus_key = 1.0\n")
    with pytest.raises(DataFormatError):
        read_muscle_model(str(path))

    path.write_text(good + good.splitlines()[0] + "\n")
    with pytest.raises(DataFormatError):
        read_muscle_model(str(path))

    path.write_text("\n".join(good.splitlines()[:-1]) + "\n")
    with pytest.raises(DataFormatError):
        read_muscle_model(str(path))

    path.write_text(good.replace("output_sign_neg = 1", "output_sign_neg = 2"))
    with pytest.raises(DataFormatError):
        read_muscle_model(str(path))


def test_rational_tf_file_round_trip(tmp_path):
    path = str(tmp_path / "tf.txt")
    write_rational_tf(GVI_A, path)
    assert read_rational_tf(path) == GVI_A


def test_rational_tf_reader_rejects_bad_files(tmp_path):
    path = tmp_path / "tf.txt"
    path.write_text("num = 1.0\n")
    with pytest.raises(DataFormatError):
        read_rational_tf(str(path))
    path.write_text("num = 1.0\nden = 2.0,1.0\n")
    with pytest.raises(DataFormatError):
        read_rational_tf(str(path))  # den[0] != 1 surfaces as a format error
    path.write_text("num = 1.0\nden = 1.0,abc\n")
    with pytest.raises(DataFormatError):
        read_rational_tf(str(path))
