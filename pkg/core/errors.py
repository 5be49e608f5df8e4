from __future__ import annotations

from typing import Optional


class ItrPowerError(Exception):
    """Base for every failure raised by the itrpower kernels.

    The driver stamps ``iteration`` on solver failures before re-raising so the
    caller can tell at which power step the run broke down.
    """

    def __init__(self, message: str, *, iteration: Optional[int] = None):
        super().__init__(message)
        self.iteration = iteration

    def __str__(self) -> str:
        base = super().__str__()
        if self.iteration is None:
            return base
        return f"{base} (iteration {self.iteration})"


class InvalidInput(ItrPowerError, ValueError):
    pass


class ShapeError(ItrPowerError, ValueError):
    pass


class InvalidParam(ItrPowerError, ValueError):
    pass


class TooLarge(ItrPowerError, ValueError):
    pass


class ConvergenceFailure(ItrPowerError, RuntimeError):
    pass


class DegenerateDominance(ItrPowerError, RuntimeError):
    pass


class IllConditioned(ItrPowerError, RuntimeError):
    pass


class UsageError(ItrPowerError, ValueError):
    pass


SOLVER_ERRORS = (ConvergenceFailure, DegenerateDominance, IllConditioned)
