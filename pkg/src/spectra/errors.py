"""Exception taxonomy shared by all spectra modules."""


class SpectraError(Exception):
    """Base class for every error raised by this package."""


class NonFinite(SpectraError):
    """A matrix or vector contains NaN or infinite entries."""


class NoConvergence(SpectraError):
    """The eigensolver failed to converge."""


class DimMismatch(SpectraError):
    """Operands have incompatible or empty dimensions."""


class AsymmetricInput(SpectraError):
    """Serialized matrix data is asymmetric beyond tolerance."""


class EmptyIndexSet(SpectraError):
    """An index set must contain at least one index."""


class IndexOutOfRange(SpectraError):
    """An eigenvalue or eigenfunction index is out of range."""


class ZeroGap(SpectraError):
    """An eigenvalue outside the index set coincides with one inside."""


class OverlappingDisks(SpectraError):
    """Two contour disks intersect; no merged contour is attempted."""


class PoleOnContour(SpectraError):
    """An integrand pole lies on the quadrature circle."""


class GapViolation(SpectraError):
    """A perturbed eigenvalue crossed the spectral-gap safety region."""


class BadSpectrum(SpectraError):
    """A reference spectrum is empty, increasing, or not positive."""


class ZeroEigenvalue(SpectraError):
    """An empirical eigenvalue is numerically zero where a nonzero one is required."""


class DegenerateKernel(SpectraError):
    """The kernel has no positive leading eigenvalue."""


class BadTau(SpectraError):
    """A confidence level tau must lie strictly inside (0, 1)."""


class ConditionViolated(SpectraError):
    """A deterministic validity condition fails; carries the smallest admissible n when known."""

    def __init__(self, message, required_n=None):
        super().__init__(message)
        self.required_n = required_n


class NonPsdCovariance(SpectraError):
    """A limit covariance matrix is indefinite beyond roundoff tolerance."""


class EmptySample(SpectraError):
    """A statistic was requested on an empty sample."""


class RankOutOfRange(SpectraError):
    """The requested cluster rank exceeds the number of detected clusters."""


class ConfigInvalid(SpectraError):
    """A study or CLI configuration is malformed."""
