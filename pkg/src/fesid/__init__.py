"""Identification and simulation of FES muscle-response models.

Core flow: generate or load stimulation/force records, estimate the
empirical transfer function, fit threshold, dead-time, and lag
parameters per polarity, then simulate and validate the assembled
model.  An HTTP service (`fesid.service`) and a CLI (`fesid.cli`) wrap
the same functions.
"""

from .errors import (
    ArgumentError,
    ConfigurationError,
    DataFormatError,
    DegenerateFitError,
    DegenerateInputError,
    DomainError,
    FesidError,
    NonphysicalFitError,
    NumericalError,
    OnsetDetectionError,
    ResolutionError,
    ThresholdNotReachedError,
    UnidentifiableError,
)
from .identify import (
    FitReport,
    IdentifyDataset,
    PipelineConfig,
    StaircaseSchedule,
    StaircaseTrial,
    detect_threshold_current,
    estimate_dead_time,
    fit_first_order_time,
    fit_rational_freq,
    identify_muscle_model,
    read_dataset_manifest,
    summarize_staircase,
)
from .metrics import ValidationMetrics, validate
from .model import (
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
    sample_response,
    simulate_lti,
    write_muscle_model,
)
from .signals import (
    BiphasicWaveform,
    PulseTrainSpec,
    add_gaussian_noise,
    decimate,
    generate_mseq,
    generate_pulse_train,
    generate_staircase,
    generate_step,
    lowpass,
)
from .spectral import (
    ComplexSpectrum,
    FrequencyResponse,
    etfe,
    fft,
    magnitude_db,
    read_frequency_response_csv,
    write_frequency_response_csv,
)
from .timeseries import TimeSeries, read_timeseries_csv, write_timeseries_csv

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "BiphasicWaveform",
    "CircuitParams",
    "ComplexSpectrum",
    "ConfigurationError",
    "DEFAULT_CIRCUIT",
    "DataFormatError",
    "DegenerateFitError",
    "DegenerateInputError",
    "DomainError",
    "FesidError",
    "FitReport",
    "FrequencyResponse",
    "IdentifyDataset",
    "MuscleChannel",
    "MuscleModel",
    "NonphysicalFitError",
    "NumericalError",
    "OnsetDetectionError",
    "PipelineConfig",
    "PulseTrainSpec",
    "RationalTF",
    "ResolutionError",
    "StaircaseSchedule",
    "StaircaseTrial",
    "ThresholdNotReachedError",
    "TimeSeries",
    "UnidentifiableError",
    "ValidationMetrics",
    "add_gaussian_noise",
    "apply_threshold",
    "circuit_reconstruct",
    "decimate",
    "detect_threshold_current",
    "estimate_dead_time",
    "etfe",
    "eval_freq",
    "fft",
    "fit_first_order_time",
    "fit_rational_freq",
    "generate_mseq",
    "generate_pulse_train",
    "generate_staircase",
    "generate_step",
    "identify_muscle_model",
    "lowpass",
    "magnitude_db",
    "predict_force",
    "read_dataset_manifest",
    "read_frequency_response_csv",
    "read_muscle_model",
    "read_timeseries_csv",
    "sample_response",
    "simulate_lti",
    "summarize_staircase",
    "validate",
    "write_frequency_response_csv",
    "write_muscle_model",
    "write_timeseries_csv",
]
