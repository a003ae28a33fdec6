"""Exception types shared across the package."""


class CocycleLabError(Exception):
    """Base class. ``exit_code`` is what the command line returns for it."""

    exit_code = 3


class ConfigError(CocycleLabError):
    exit_code = 2


class ProductOverflow(CocycleLabError):
    pass


class DegenerateNorm(CocycleLabError):
    pass


class PrecisionExhausted(CocycleLabError):
    pass


class CapExceeded(CocycleLabError):
    exit_code = 4


class UnwrapFailure(CocycleLabError):
    pass


class RegimeViolation(CocycleLabError):
    pass


class AngleCollision(CocycleLabError):
    pass


class LambdaTooSmall(CocycleLabError):
    exit_code = 2


class OutsideParameterRange(CocycleLabError):
    exit_code = 2


class FloorViolated(CocycleLabError):
    pass


class ClassificationLost(CocycleLabError):
    exit_code = 4


class SingularEnergy(CocycleLabError):
    pass


class DegenerateData(CocycleLabError):
    pass


class UnknownSuite(CocycleLabError):
    exit_code = 2
