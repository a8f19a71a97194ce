"""Exception types shared across the package."""


class BlochOptError(Exception):
    """Base class for all package errors."""


class ParameterError(BlochOptError, ValueError):
    """Dissipation rates violate a positivity or Lindblad constraint."""


class StateDomainError(BlochOptError, ValueError):
    """A state lies outside the Bloch disk (or ball) beyond tolerance."""


class DegenerateModelError(BlochOptError):
    """An operation is undefined for the given degenerate rate combination."""


class InadmissibleSingularError(BlochOptError):
    """Singular feedback control exceeds the unit bound at the given state."""


class SingularLocusError(BlochOptError):
    """The clock form is evaluated too close to its singular locus."""


class EndpointMismatchError(BlochOptError, ValueError):
    """Two paths supplied for comparison do not share their endpoints."""


class UnreachableTargetError(BlochOptError):
    """The queried target lies outside the reachable set."""


class AsymptoticTargetError(BlochOptError):
    """The queried target is only attained in infinite time."""


class IntegrationError(BlochOptError, RuntimeError):
    """Adaptive integration failed (step-size underflow or bad input)."""


class ChatteringError(BlochOptError, RuntimeError):
    """An extremal produced more switches than the chattering guard allows."""


class ConfigError(BlochOptError, ValueError):
    """Invalid command-line or run configuration."""
