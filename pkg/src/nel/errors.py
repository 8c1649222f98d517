"""Exception types shared across the package.

Exit-code mapping used by the CLI: assertion failures are exit 1,
ResourceCapError is exit 2, numeric/singular conditions are exit 3 and
ConfigError is exit 4.
"""


class NelError(Exception):
    """Base class for all package errors."""


class ResourceCapError(NelError):
    """An enumeration or build would exceed a configured size cap."""


class NumericError(NelError):
    """Singular system, divergent quadrature, or similar numeric failure."""


class DisconnectedNetworkError(NumericError):
    """The network is disconnected; resistances are undefined."""


class QuadratureError(NumericError):
    """An adaptive quadrature failed to reach the requested tolerance."""


class DivergentSeminormError(NumericError):
    """The requested seminorm diverges for the given function class."""


class OutOfDomainError(NelError):
    """A point lies outside the physical space or inside a cell gap."""


class NotAWireError(NelError):
    """A node pair is not a wire of the given network."""


class KernelBoundError(NelError):
    """A jump kernel violates positivity or its comparability bounds."""


class UndefinedAtNodeError(NelError):
    """A continuum function could not be evaluated at a grid node."""


class ConfigError(NelError):
    """A CLI or experiment configuration is malformed."""
