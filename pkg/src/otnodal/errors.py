"""Exception types raised across the package."""


class OtnodalError(Exception):
    """Base class for all package errors."""


class AllConstant(OtnodalError):
    """Centering a constant function would produce the zero function."""


class NotZeroMean(OtnodalError):
    """Operation requires a zero-mean function."""


class UnknownFamily(OtnodalError):
    """Family name not recognized by the sample generator."""


class MassMismatch(OtnodalError):
    """Total masses of the two measures differ beyond tolerance."""


class EmptySupport(OtnodalError):
    """A measure has no atoms."""


class WrongDimension(OtnodalError):
    """Operation only defined for a specific dimension."""


class MisalignedEpsilon(OtnodalError):
    """Cube scale does not tile the grid exactly."""


class ZeroNodal(OtnodalError):
    """Critical scale undefined for an empty nodal set."""


class ResolutionTooCoarse(OtnodalError):
    """Grid spacing too large to resolve the requested feature size."""


class EpsTooLarge(OtnodalError):
    """Bump radius too large for the requested point separation."""


class TooFewPoints(OtnodalError):
    """A fit needs at least two data points."""


class Disconnected(OtnodalError):
    """Graph is not connected."""


class BadSubset(OtnodalError):
    """Vertex subset is empty, improper, or out of range."""


class TooLargeForExhaustive(OtnodalError):
    """Subset enumeration would exceed the exhaustive-search cap."""


class EmptyBand(OtnodalError):
    """No eigenvalues fall inside the requested spectral band."""
