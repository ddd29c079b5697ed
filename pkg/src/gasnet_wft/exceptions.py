"""Exception hierarchy shared by the solvers and the tracker."""


class GasNetError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GasNetError, ValueError):
    """A state or argument lies outside the admissible set."""


class OutOfDomainError(DomainError):
    """A curve or solver left the local neighbourhood it is allowed to use."""


class SolverError(GasNetError, RuntimeError):
    """An iterative solve failed to converge.

    ``diagnostics`` carries whatever the failing routine knew at the time
    (last iterate, residual, iteration count).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class JunctionEntropyError(SolverError):
    """The junction traces dissipate negative energy beyond tolerance."""


class InteractionCapExceeded(GasNetError, RuntimeError):
    """The tracker processed more events than the configured cap."""


class ConfigError(GasNetError, ValueError):
    """A configuration failed validation.

    ``path`` names the offending field, e.g. ``network.gains[2]``.
    """

    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
