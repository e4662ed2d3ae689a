"""Exception types shared across the toolkit."""


class BoltscopeError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(BoltscopeError, ValueError):
    """Invalid value for a signal, spectral, or model parameter."""


class IngestError(BoltscopeError, ValueError):
    """A signal file could not be read into a TimeSeries."""


class GridMismatchError(BoltscopeError, ValueError):
    """Two PSDs do not share the same frequency grid."""


class SimulationError(BoltscopeError, RuntimeError):
    """The joint simulator failed (typically integrator instability)."""
