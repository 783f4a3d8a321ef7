"""Plant models: measurement circuit, rational transfer functions, and
the two-channel threshold/dead-time/lag muscle structure.

Sign conventions: threshold outputs are nonnegative effective drives for
both polarities; the negative channel's force adds with a configurable
sign (default +1, i.e. both polarities push the sensor the same way).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import cont2discrete, lfilter

from .errors import ArgumentError, ConfigurationError, DataFormatError, DomainError
from .fileio import atomic_write_text, parse_float, read_text
from .spectral import FrequencyResponse
from .timeseries import TimeSeries

MODEL_KEYS = (
    "i_th_pos",
    "t_d_pos",
    "c1_pos",
    "d0_pos",
    "i_th_neg",
    "t_d_neg",
    "c1_neg",
    "d0_neg",
    "output_sign_neg",
)


@dataclass(frozen=True)
class CircuitParams:
    """Divider and shunt resistances of the stimulation monitor."""

    r1: float
    r2: float
    r3: float

    def __post_init__(self) -> None:
        for name in ("r1", "r2", "r3"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ArgumentError(f"{name} must be positive and finite, got {v}")


# 0.2 MOhm / 1.8 MOhm divider with a 100 Ohm shunt: applied voltage is
# 10*v1 - v3 and inflow current is v3/100
DEFAULT_CIRCUIT = CircuitParams(r1=0.2e6, r2=1.8e6, r3=100.0)


def circuit_reconstruct(
    v1: TimeSeries, v3: TimeSeries, params: CircuitParams = DEFAULT_CIRCUIT
) -> tuple[TimeSeries, TimeSeries]:
    """Recover applied voltage and inflow current from the two taps."""
    if abs(v1.dt - v3.dt) > 1e-12 * v1.dt:
        raise ArgumentError(f"sample intervals differ: {v1.dt} vs {v3.dt}")
    if v1.n != v3.n:
        raise ArgumentError(f"record lengths differ: {v1.n} vs {v3.n}")
    v_app = TimeSeries(
        t0=v1.t0,
        dt=v1.dt,
        samples=v1.samples * ((params.r1 + params.r2) / params.r1) - v3.samples,
        unit="volt",
    )
    i_flo = TimeSeries(t0=v1.t0, dt=v1.dt, samples=v3.samples / params.r3, unit="ampere")
    return v_app, i_flo


@dataclass(frozen=True)
class RationalTF:
    """num(s)/den(s) with coefficients in ascending powers, den[0] = 1."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self) -> None:
        num = tuple(float(v) for v in self.num)
        den = tuple(float(v) for v in self.den)
        if not num or not den:
            raise ArgumentError("num and den must each hold at least one coefficient")
        if not all(math.isfinite(v) for v in num + den):
            raise ArgumentError("coefficients must be finite")
        if den[0] != 1.0:
            raise ArgumentError(f"den[0] must be 1, got {den[0]}")
        if len(den) < len(num) - 1:
            raise ArgumentError(
                f"denominator degree {len(den) - 1} too low for numerator degree {len(num) - 1}"
            )
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def num_degree(self) -> int:
        return len(self.num) - 1

    @property
    def den_degree(self) -> int:
        return len(self.den) - 1

    @property
    def is_proper(self) -> bool:
        return self.den_degree >= self.num_degree

    @classmethod
    def first_order(cls, d0: float, c1: float) -> "RationalTF":
        """d0 / (c1*s + 1)."""
        return cls(num=(d0,), den=(1.0, c1))


def eval_freq(tf: RationalTF, f: float) -> complex:
    """Evaluate the transfer function at s = j*2*pi*f."""
    if not np.isfinite(f) or f < 0:
        raise ArgumentError(f"frequency must be finite and non-negative, got {f}")
    s = 2j * math.pi * f
    num = complex(np.polyval(tf.num[::-1], s))
    den = complex(np.polyval(tf.den[::-1], s))
    if den == 0:
        raise DomainError(f"pole at evaluation frequency {f} Hz")
    return num / den


def sample_response(tf: RationalTF, f_hz: np.ndarray) -> FrequencyResponse:
    """Vectorized eval_freq over a positive increasing frequency grid."""
    f = np.asarray(f_hz, dtype=np.float64)
    s = 2j * np.pi * f
    num = np.polyval(tf.num[::-1], s)
    den = np.polyval(tf.den[::-1], s)
    zero = np.flatnonzero(den == 0)
    if zero.size:
        raise DomainError(f"pole at evaluation frequency {f[zero[0]]} Hz")
    return FrequencyResponse(f_hz=f, gain=num / den)


def apply_threshold(i_flo: TimeSeries, i_th: float, polarity: str) -> TimeSeries:
    """Recruitment gate: drive in excess of the threshold, else zero.

    Positive polarity passes i - i_th where i > i_th.  Negative polarity
    mirrors the rule onto negative current, returning the nonnegative
    excess magnitude |i| - i_th where i < -i_th.
    """
    if not np.isfinite(i_th) or i_th < 0:
        raise ArgumentError(f"i_th must be non-negative and finite, got {i_th}")
    x = i_flo.samples
    if polarity == "positive":
        out = np.where(x > i_th, x - i_th, 0.0)
    elif polarity == "negative":
        out = np.where(x < -i_th, -x - i_th, 0.0)
    else:
        raise ArgumentError(f"polarity must be 'positive' or 'negative', got {polarity!r}")
    return i_flo.with_samples(out)


def simulate_lti(
    tf: RationalTF,
    drive: TimeSeries,
    dead_time: float = 0.0,
    unit: str | None = None,
) -> TimeSeries:
    """Dead time followed by the zero-order-hold discretized dynamics.

    The delay is rounded to whole samples and applied as an input shift
    with zero fill, so it commutes exactly with the linear dynamics.
    State starts at zero; output length equals input length.
    """
    if not tf.is_proper:
        raise ConfigurationError(
            f"cannot simulate improper system (num degree {tf.num_degree} > "
            f"den degree {tf.den_degree})"
        )
    if not np.isfinite(dead_time) or dead_time < 0:
        raise ArgumentError(f"dead_time must be non-negative and finite, got {dead_time}")
    shift = int(round(dead_time / drive.dt))
    x = drive.samples
    if shift > 0:
        shifted = np.zeros_like(x)
        if shift < x.size:
            shifted[shift:] = x[:-shift]
    else:
        shifted = x
    if not any(tf.num):
        out = np.zeros_like(shifted)
    elif tf.den_degree == 0:
        out = tf.num[0] * shifted
    else:
        bz, az, _ = cont2discrete((tf.num[::-1], tf.den[::-1]), drive.dt, method="zoh")
        out = lfilter(np.atleast_1d(np.squeeze(bz)), az, shifted)
    return TimeSeries(t0=drive.t0, dt=drive.dt, samples=out, unit=unit or drive.unit)


@dataclass(frozen=True)
class MuscleChannel:
    """One polarity's recruitment threshold, latency, and lag dynamics."""

    i_th: float
    t_d: float
    c1: float
    d0: float

    def __post_init__(self) -> None:
        for name in ("i_th", "t_d", "c1", "d0"):
            object.__setattr__(self, name, float(getattr(self, name)))
        checks = (
            ("i_th", self.i_th, self.i_th >= 0),
            ("t_d", self.t_d, self.t_d >= 0),
            ("c1", self.c1, self.c1 > 0),
            ("d0", self.d0, self.d0 >= 0),
        )
        for name, v, ok in checks:
            if not np.isfinite(v) or not ok:
                raise ArgumentError(f"{name} out of range: {v}")

    @property
    def lag(self) -> RationalTF:
        return RationalTF.first_order(self.d0, self.c1)


@dataclass(frozen=True)
class MuscleModel:
    """Two independent channels; total force is their signed sum."""

    pos: MuscleChannel
    neg: MuscleChannel
    output_sign_neg: int = 1

    def __post_init__(self) -> None:
        if self.output_sign_neg not in (1, -1):
            raise ArgumentError(f"output_sign_neg must be +1 or -1, got {self.output_sign_neg}")


def predict_force(model: MuscleModel, i_flo: TimeSeries) -> TimeSeries:
    """Force response of the two-channel model to an inflow current."""
    for name, ch in (("positive", model.pos), ("negative", model.neg)):
        if 0 < ch.t_d < i_flo.dt:
            warnings.warn(
                f"{name} channel dead time {ch.t_d} s is below one sample ({i_flo.dt} s) "
                "and rounds away",
                stacklevel=2,
            )
    f_pos = simulate_lti(
        model.pos.lag,
        apply_threshold(i_flo, model.pos.i_th, "positive"),
        model.pos.t_d,
        unit="newton",
    )
    f_neg = simulate_lti(
        model.neg.lag,
        apply_threshold(i_flo, model.neg.i_th, "negative"),
        model.neg.t_d,
        unit="newton",
    )
    total = f_pos.samples + model.output_sign_neg * f_neg.samples
    return TimeSeries(t0=i_flo.t0, dt=i_flo.dt, samples=total, unit="newton")


def write_muscle_model(model: MuscleModel, path: str) -> None:
    """Key-value text, one parameter per line, fixed key order."""
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
    lines = [f"{key} = {values[key]!r}" for key in MODEL_KEYS]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_muscle_model(path: str) -> MuscleModel:
    """Accepts the keys in any order; unknown or missing keys are errors."""
    text = read_text(path)
    values: dict[str, float] = {}
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DataFormatError(f"{path}:{i}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in MODEL_KEYS:
            raise DataFormatError(f"{path}:{i}: unknown key {key!r}")
        if key in values:
            raise DataFormatError(f"{path}:{i}: duplicate key {key!r}")
        values[key] = parse_float(raw.strip(), f"{path}:{i}: {key}")
    missing = [k for k in MODEL_KEYS if k not in values]
    if missing:
        raise DataFormatError(f"{path}: missing keys: {', '.join(missing)}")
    sign = values["output_sign_neg"]
    if sign not in (1.0, -1.0):
        raise DataFormatError(f"{path}: output_sign_neg must be 1 or -1, got {sign}")
    try:
        return MuscleModel(
            pos=MuscleChannel(
                i_th=values["i_th_pos"],
                t_d=values["t_d_pos"],
                c1=values["c1_pos"],
                d0=values["d0_pos"],
            ),
            neg=MuscleChannel(
                i_th=values["i_th_neg"],
                t_d=values["t_d_neg"],
                c1=values["c1_neg"],
                d0=values["d0_neg"],
            ),
            output_sign_neg=int(sign),
        )
    except ArgumentError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def write_rational_tf(tf: RationalTF, path: str) -> None:
    """Two-line text form: ascending-power coefficient lists."""
    lines = [
        "num = " + ",".join(repr(v) for v in tf.num),
        "den = " + ",".join(repr(v) for v in tf.den),
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_rational_tf(path: str) -> RationalTF:
    text = read_text(path)
    fields: dict[str, tuple[float, ...]] = {}
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in ("num", "den"):
            raise DataFormatError(f"{path}:{i}: unknown key {key!r}")
        if key in fields:
            raise DataFormatError(f"{path}:{i}: duplicate key {key!r}")
        fields[key] = tuple(
            parse_float(tok.strip(), f"{path}:{i}: {key}") for tok in raw.split(",")
        )
    if set(fields) != {"num", "den"}:
        raise DataFormatError(f"{path}: need both 'num' and 'den' lines")
    try:
        return RationalTF(num=fields["num"], den=fields["den"])
    except ArgumentError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
