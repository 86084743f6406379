"""Exception hierarchy for wavecrb.

Every error raised by the library derives from :class:`WavecrbError` so
callers (including the CLI) can map failures to exit codes in one place.
"""


class WavecrbError(Exception):
    """Base class for all wavecrb errors."""


class InvalidDimensionError(WavecrbError):
    """A matrix or vector has an unusable shape (empty, non-square, mismatched)."""


class InvalidParameterError(WavecrbError):
    """A scalar parameter violates its contract (e.g. a chirp rate that is not
    a half-integer multiple of 1/N, or a negative weight)."""


class LinalgDomainError(WavecrbError):
    """An input matrix is outside the operation's domain (not Hermitian,
    not skew-Hermitian, not unit norm) beyond tolerance."""


class NotPSDError(LinalgDomainError):
    """A matrix expected to be positive semidefinite has a significantly
    negative eigenvalue."""


class SingularMatrixError(WavecrbError):
    """A matrix is numerically singular. Carries the estimated reciprocal
    condition number in ``rcond``."""

    def __init__(self, message: str, rcond: float):
        super().__init__(message)
        self.rcond = rcond


class UnsupportedConstellationError(WavecrbError):
    """The requested constellation order or family is not supported."""


class DegenerateScenarioError(WavecrbError):
    """The target geometry violates an identifiability condition
    (duplicate delays, zero amplitude, too many targets, bad noise power)."""


class InfeasibleSeparationError(WavecrbError):
    """Random target placement cannot satisfy the separation constraint."""


class SingularFimError(WavecrbError):
    """A single-draw Fisher information matrix fell below the singularity
    threshold; the caller decides whether to skip or abort."""

    def __init__(self, message: str, rcond: float):
        super().__init__(message)
        self.rcond = rcond


class NoValidDrawsError(WavecrbError):
    """Every Monte Carlo draw was skipped; no estimate can be formed."""


class InapplicableBasisError(WavecrbError):
    """An analysis step requires a frequency-spread basis and the given one
    is not (minimum per-column RMS bandwidth is zero)."""


class ConfigError(WavecrbError):
    """A run configuration file is malformed or references missing files."""
