"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`KMSError`,
so callers (the CLI in particular) can separate bad input from bugs.
"""


class KMSError(Exception):
    """Base class for all library errors."""


class NonSymmetric(KMSError, ValueError):
    pass


class NonPositiveSpectrum(KMSError, ValueError):
    pass


class FunctionSingularAtSpectrum(KMSError, ValueError):
    pass


class DimensionMismatch(KMSError, ValueError):
    pass


class TimeOutOfRange(KMSError, ValueError):
    pass


class UnorderedWord(KMSError, ValueError):
    pass


class EndpointSingularity(KMSError, ValueError):
    pass


class SpectrumNotAboveOne(KMSError, ValueError):
    pass


class NonRealVector(KMSError, ValueError):
    pass


class QuadratureModelUnsupported(KMSError, TypeError):
    pass


class EmptyEnsemble(KMSError, ValueError):
    pass


class DegenerateConditioning(KMSError, ValueError):
    pass


class GaplessDispersion(KMSError, ValueError):
    pass


class NonPSDCoupling(KMSError, ValueError):
    pass


class ConfigParse(KMSError, ValueError):
    pass
