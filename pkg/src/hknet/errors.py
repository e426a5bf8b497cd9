"""Exception hierarchy shared by every module of the package."""


class HKNetError(Exception):
    """Base class for all errors raised by hknet."""


class DimensionMismatch(HKNetError, ValueError):
    pass


class NotHermitian(HKNetError, ValueError):
    pass


class NotPositive(HKNetError, ValueError):
    pass


class NotUnitary(HKNetError, ValueError):
    pass


class CertificationError(HKNetError):
    """An operator space failed one of the von Neumann algebra certificates."""


class DecompositionFailure(HKNetError):
    pass


class NotInterval(HKNetError, ValueError):
    pass


class CapExceeded(HKNetError, ValueError):
    pass


class EmptySector(HKNetError, ValueError):
    pass


class EmptyComplement(HKNetError, ValueError):
    pass


class IdentityViolation(HKNetError):
    """An identity that must hold for every net was violated numerically."""


class NotNormalized(HKNetError, ValueError):
    pass


class NotAnExtension(HKNetError, ValueError):
    pass


class AmbiguousTolerance(HKNetError):
    """A norm fell between the "commutes" and "signals" cutoffs."""


class NotFaithful(HKNetError, ValueError):
    pass


class NotFaithfulOutput(NotFaithful):
    pass


class SingularTomita(HKNetError):
    pass


class NotInAlgebra(HKNetError, ValueError):
    pass


class KrausNotInAlgebra(NotInAlgebra):
    pass


class DPIViolation(HKNetError):
    pass


class ConfigError(HKNetError, ValueError):
    pass
