"""Step-size schedules ``alpha^(t)`` with the proximal step ``beta^(t) = m alpha^(t)``."""

from __future__ import annotations

import math
from dataclasses import dataclass


class StepSizeError(ValueError):
    pass


class StepSchedule:
    name: str

    def alpha(self, t: int) -> float:
        raise NotImplementedError

    def beta(self, t: int, m: int) -> float:
        return m * self.alpha(t)

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class SqrtDecay(StepSchedule):
    """``alpha / sqrt(t + 1)``."""

    alpha0: float
    name = "sqrt"

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise StepSizeError("alpha0 must be positive")

    def alpha(self, t):
        return self.alpha0 / math.sqrt(t + 1)

    def describe(self):
        return f"sqrt(alpha0={self.alpha0!r})"


@dataclass(frozen=True)
class StronglyConvex(StepSchedule):
    """``2 mu / (mu^2 t + 12 L^2)``."""

    mu: float
    L: float
    name = "strongly_convex"

    def __post_init__(self):
        if self.mu <= 0 or self.L <= 0:
            raise StepSizeError("mu and L must be positive")

    def alpha(self, t):
        return 2.0 * self.mu / (self.mu**2 * t + 12.0 * self.L**2)

    def describe(self):
        return f"strongly_convex(mu={self.mu!r}, L={self.L!r})"


@dataclass(frozen=True)
class Constant(StepSchedule):
    """Fixed ``alpha``; with ``mu`` and ``L`` given, ``0 < alpha < 2 mu / (3 L^2)`` is enforced."""

    alpha0: float
    mu: float | None = None
    L: float | None = None
    name = "constant"

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise StepSizeError("alpha must be positive")
        if self.mu is not None and self.L is not None:
            upper = 2.0 * self.mu / (3.0 * self.L**2)
            if not self.alpha0 < upper:
                raise StepSizeError(f"constant alpha={self.alpha0} must lie in (0, {upper})")

    def alpha(self, t):
        return self.alpha0

    def describe(self):
        return f"constant(alpha={self.alpha0!r})"


def schedule_alpha(schedule: StepSchedule, t: int) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    return schedule.alpha(t)


def schedule_beta(schedule: StepSchedule, t: int, m: int) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    return schedule.beta(t, m)
