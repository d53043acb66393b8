"""Exception types shared across the toolkit."""


class ShuttleError(Exception):
    """Base class for all toolkit errors."""


class DomainError(ShuttleError, ValueError):
    """An input is outside the physically meaningful domain."""


class ConfigError(ShuttleError, ValueError):
    """A configuration object is inconsistent or incomplete."""


class DegeneratePhasorError(ShuttleError):
    """The four-channel phasor magnitude collapsed; the trajectory is undefined."""


class ValleyDegeneracyError(ShuttleError):
    """|Delta| vanished where a local valley eigenbasis is required."""


class IntegrationError(ShuttleError):
    """A propagation invariant was breached mid-run; try a smaller step."""


class OracleAmbiguityError(ShuttleError):
    """The potential-minimum oracle found no unique minimum in its search window."""


class MapParseError(ShuttleError, ValueError):
    """A valley-map file is malformed."""


class UnsupportedVersionError(MapParseError):
    """A valley-map file declares a version this build does not read."""


class ResolutionError(ShuttleError, ValueError):
    """A grid is too coarse for the requested correlation structure."""
