"""Exception and warning types shared across the package."""


class MMPPControlError(Exception):
    """Base class for all package errors."""


class ValidationError(MMPPControlError, ValueError):
    """Model data violates a structural invariant."""


class SingularSystem(MMPPControlError):
    """A linear solve for a stationary distribution failed."""


class NonConvergence(MMPPControlError):
    """An iterative solver hit its iteration cap."""


class Unstable(MMPPControlError):
    """The maximum service rate does not exceed the relevant arrival rate."""


class ReducibleChain(MMPPControlError):
    """The chain induced by a policy has more than one closed class."""


class DegeneratePartition(MMPPControlError, ValueError):
    """A partition of the period has an interval of non-positive width."""


class ConfigError(MMPPControlError, ValueError):
    """A configuration file failed schema validation."""


class StabilityWarning(UserWarning):
    """Scenario violates the stability condition; discounted results are still finite."""


NUMERIC_ERRORS = (SingularSystem, NonConvergence, Unstable, ReducibleChain)
