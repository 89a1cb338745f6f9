class HubbleRingError(Exception):
    """Base class for package errors."""


class InvalidDamping(HubbleRingError, ValueError):
    pass


class NoRamp(HubbleRingError, ValueError):
    pass


class OverdampedUnsupported(HubbleRingError, ValueError):
    pass


class StiffFailure(HubbleRingError, RuntimeError):
    """Step size underflow or step budget exhausted in the ODE solver."""


class InsufficientData(HubbleRingError, ValueError):
    pass


class Overparameterized(HubbleRingError, ValueError):
    pass


class ConfigError(HubbleRingError, ValueError):
    pass
