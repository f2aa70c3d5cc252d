"""Exception hierarchy shared by every module."""


class GaugeLabError(Exception):
    """Base class for all library errors."""


class InvalidIndex(GaugeLabError, ValueError):
    pass


class DegreeError(GaugeLabError, ValueError):
    pass


class ShapeError(GaugeLabError, ValueError):
    pass


class GroupError(GaugeLabError, ValueError):
    pass


class DomainError(GaugeLabError, ValueError):
    pass


class CurveError(GaugeLabError, ValueError):
    pass


class TopologyError(GaugeLabError, ValueError):
    pass


class ConfigError(GaugeLabError, ValueError):
    pass


class ConvergenceError(GaugeLabError, RuntimeError):
    """Iterative solver gave up; ``residual`` and ``trace`` carry its last state."""

    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace
