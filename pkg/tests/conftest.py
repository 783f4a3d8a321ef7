import numpy as np
import pytest

from fesid.model import MuscleChannel, MuscleModel
from fesid.timeseries import TimeSeries


@pytest.fixture
def subject_a():
    return MuscleModel(
        pos=MuscleChannel(i_th=14.4e-3, t_d=0.023, c1=0.1889, d0=32207.0),
        neg=MuscleChannel(i_th=8.32e-3, t_d=0.025, c1=0.2476, d0=13796.0),
    )


@pytest.fixture
def subject_b():
    return MuscleModel(
        pos=MuscleChannel(i_th=15.1e-3, t_d=0.021, c1=0.5789, d0=4888.2),
        neg=MuscleChannel(i_th=12.3e-3, t_d=0.028, c1=0.4325, d0=7331.5),
    )


def series(values, dt=1e-3, unit="volt", t0=0.0):
    return TimeSeries(t0=t0, dt=dt, samples=np.asarray(values, dtype=float), unit=unit)
