"""Exception types shared across the package."""


class SGPhaseError(Exception):
    """Base class for all package errors."""


class TruncationTooSmall(SGPhaseError):
    """Photon-number cutoff leaves more probability outside than the norm tolerance allows."""


class IncompatibleTruncation(SGPhaseError):
    """A precomputed wavefunction table is too small for the state it is used with."""


class EpsilonNonpositive(SGPhaseError):
    """The coarse-graining width must be strictly positive."""


class DomainMismatch(SGPhaseError):
    """A phase grid lies outside the natural domain of the requested distribution."""


class UnsupportedS(SGPhaseError):
    """Only perfect detection (s = 0) is supported by the kernel machinery."""


class QuadratureNotConverged(SGPhaseError):
    """Adaptive quadrature failed to reach the requested absolute error."""


class NumericalInstability(SGPhaseError):
    """An internal consistency check (e.g. Wronskian drift) exceeded its bound."""


class OutsideAllowedRegion(SGPhaseError):
    """Semiclassical evaluation requested outside the classically allowed region."""


class TableMismatch(SGPhaseError):
    """A cached table does not match the requested parameters or failed its checksum."""


class GridTooNarrow(SGPhaseError):
    """Too much probability mass falls outside the sampling grid."""


class KernelMissing(SGPhaseError):
    """No usable kernel source is available for the requested estimate."""


class EmptyDataset(SGPhaseError):
    """The dataset contains no event records."""


class BiasWarning(UserWarning):
    """Estimate computed with perfect-detection kernels on lossy data; result is biased."""
