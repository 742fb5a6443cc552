"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can tell configuration
problems (2) from numerical failures (3). Bound violations are not exceptions;
they surface as check records with ``ok = False`` and map to exit code 4.
"""

from __future__ import annotations


class HyperconError(Exception):
    exit_code = 3


class DomainError(HyperconError, ValueError):
    """Parameters outside the range where a formula is defined."""

    exit_code = 2


class ConfigError(HyperconError, ValueError):
    exit_code = 2


class DegenerateMeasure(HyperconError):
    pass


class NonFinitePotential(HyperconError):
    pass


class ConvergenceFailure(HyperconError):
    pass


class OverflowGuard(HyperconError):
    pass


class InfeasibleOnGrid(HyperconError):
    pass


class StepSizeError(HyperconError):
    pass


class ConstructionError(HyperconError):
    pass


class QuadratureError(HyperconError):
    pass


class TailDivergence(HyperconError):
    pass


class ConditionFailed(HyperconError):
    """An Eckmann-type condition failed; ``where`` holds the offending x if known."""

    def __init__(self, message: str, where: float | None = None, failed: tuple[str, ...] = ()):
        super().__init__(message)
        self.where = where
        self.failed = failed
