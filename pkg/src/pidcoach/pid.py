"""A deliberately weak PID controller used as the coach.

Textbook law u = kp*e + ki*integral(e) + kd*de/dt with the output clamped
to the actuator range. There is intentionally no anti-windup: the integral
keeps accumulating while the output saturates, which is exactly the failure
mode that makes the coach "barely functioning" on long horizons.

The update is value-semantics (memory in, memory out), so controllers are
trivially safe to run in parallel across experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

OUTPUT_LIMIT = 10.0


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float

    def __post_init__(self) -> None:
        if any(not math.isfinite(g) or g < 0.0 for g in (self.kp, self.ki, self.kd)):
            raise ValueError("gains must be finite and nonnegative")
        if self.kp == 0.0 and self.ki == 0.0 and self.kd == 0.0:
            raise ValueError("at least one gain must be nonzero")


@dataclass(frozen=True)
class PidMemory:
    """Integral accumulator and previous error of one controller instance."""

    integral: float = 0.0
    prev_error: float = 0.0
    primed: bool = False


def pid_update(
    memory: PidMemory, error: float, dt: float, gains: PidGains
) -> tuple[float, PidMemory]:
    """One controller update; returns (clamped control, new memory).

    The derivative term is taken on the error and contributes nothing on
    the first update after a reset (no previous error yet). The integral
    accumulates unconditionally, saturated output or not.
    """
    if not math.isfinite(error):
        raise ValueError("non-finite error")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    integral = memory.integral + error * dt
    derivative = (error - memory.prev_error) / dt if memory.primed else 0.0
    control = gains.kp * error + gains.ki * integral + gains.kd * derivative
    control = min(max(control, -OUTPUT_LIMIT), OUTPUT_LIMIT)
    return control, PidMemory(integral=integral, prev_error=error, primed=True)


def pid_reset(memory: PidMemory | None = None) -> PidMemory:
    """Fresh memory: zero integral, derivative history cleared."""
    return PidMemory()
