"""Exception taxonomy shared by the library, the service and the CLI.

Three broad classes map onto the CLI exit codes: bad arguments or
configuration (2), malformed or inconsistent data files (3), and
numerical failures during estimation (4).
"""

from __future__ import annotations


class FesidError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ArgumentError(FesidError):
    """Caller passed values outside an operation's contract."""

    exit_code = 2


class ConfigurationError(ArgumentError):
    """A requested configuration is unsupported (e.g. missing tap table entry)."""


class ResolutionError(ArgumentError):
    """The sample interval cannot represent the requested waveform or carrier."""


class DataFormatError(FesidError):
    """A file or payload violates its declared format."""

    exit_code = 3


class NumericalError(FesidError):
    """An estimation step failed on the given data."""

    exit_code = 4


class DegenerateInputError(NumericalError):
    """Input carries no usable signal (all-zero drive, empty spectrum)."""


class DegenerateFitError(NumericalError):
    """Regression matrix is rank deficient or otherwise unsolvable."""


class NonphysicalFitError(NumericalError):
    """A fit converged to parameters outside the physical model class."""


class OnsetDetectionError(NumericalError):
    """No onset crossing found in a trial."""


class ThresholdNotReachedError(NumericalError):
    """No staircase level produced a detectable response."""


class UnidentifiableError(NumericalError):
    """Drive does not excite the system enough to separate parameters."""


class DomainError(NumericalError):
    """Evaluation requested at a mathematically invalid point."""
