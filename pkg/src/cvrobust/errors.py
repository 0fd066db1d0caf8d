"""Exception hierarchy for cvrobust."""


class CVRobustError(Exception):
    """Base class for all errors raised by this package."""


class CutoffTooSmall(CVRobustError, ValueError):
    """The Fock cutoff cannot hold the requested state to the required accuracy."""


class TargetUnreachable(CVRobustError, ValueError):
    """Energy matching failed because the search bracket does not straddle the target."""


class ChannelKindError(CVRobustError, ValueError):
    """An operation was called with parameters for the wrong channel."""


class NumericalHealthViolation(CVRobustError, ArithmeticError):
    """An integrated state left the trace / Hermiticity / positivity envelope."""


class NeverSeparates(CVRobustError):
    """Pure loss (zero thermal occupation): entanglement survives for all finite times."""


class NoSeparationFound(CVRobustError):
    """Entanglement was still present at the end of the search horizon."""


class NonPhysicalCM(CVRobustError, ValueError):
    """The covariance matrix violates the uncertainty principle."""


class ConfigError(CVRobustError, ValueError):
    """Invalid experiment configuration."""


class EnergyMismatch(ConfigError):
    """Families entering a comparison do not share the same initial mean energy."""
