"""Exception hierarchy shared by all modules."""


class MagnonMetrologyError(Exception):
    """Base class for every error raised by this package."""


class NonPhysicalState(MagnonMetrologyError, ValueError):
    pass


class WrongModeCount(MagnonMetrologyError, ValueError):
    pass


class InvalidParameter(MagnonMetrologyError, ValueError):
    pass


class SingularPureState(MagnonMetrologyError, ArithmeticError):
    """Thermal Fisher term diverges: n_th is zero but its derivative is not."""


class DisplacementNotSupported(MagnonMetrologyError, ValueError):
    pass


class StepTooSmall(MagnonMetrologyError, ArithmeticError):
    """Richardson estimates disagree, so roundoff dominates the difference quotient."""


class InvalidModel(MagnonMetrologyError, ValueError):
    pass


class UnsupportedNoise(MagnonMetrologyError, ValueError):
    pass


class ZeroCoupling(MagnonMetrologyError, ValueError):
    pass


class SuperradiantPhase(MagnonMetrologyError, ValueError):
    """Coupling at or beyond g_c, where the normal-phase closed forms break down."""


class CutoffTooSmall(MagnonMetrologyError, ArithmeticError):
    pass


class NonPositiveData(MagnonMetrologyError, ValueError):
    pass


class TooFewPoints(MagnonMetrologyError, ValueError):
    pass


class FlatFunction(MagnonMetrologyError, ValueError):
    pass


class ConfigInvalid(MagnonMetrologyError, ValueError):
    pass
