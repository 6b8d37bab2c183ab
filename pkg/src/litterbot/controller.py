"""Discrete PID on pixel error and the mapping to base motion commands."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.004
    ki: float = 0.0
    kd: float = 0.001
    integral_limit: float = 500.0  # pixel*s

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("PID gains must be non-negative")
        if self.integral_limit <= 0:
            raise ValueError("integral_limit must be positive")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    initialized: bool = False


def pid_step(gains: PidGains, state: PidState, error: float,
             dt: float) -> tuple[float, PidState]:
    """One PID update; returns ``(control, new_state)``.

    The integral is clamped to ``±integral_limit`` (anti-windup) and the
    derivative term is zero on the first step after construction or reset.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    lim = gains.integral_limit
    integral = min(lim, max(-lim, state.integral + error * dt))
    derivative = (error - state.prev_error) / dt if state.initialized else 0.0
    control = gains.kp * error + gains.ki * integral + gains.kd * derivative
    return control, PidState(integral, error, True)


def reset(state: PidState) -> PidState:
    return PidState()


class Motion(enum.Enum):
    FORWARD = "F"
    BACKWARD = "B"
    STRAFE_LEFT = "L"
    STRAFE_RIGHT = "R"
    ROTATE_CW = "CW"
    ROTATE_CCW = "CC"
    STOP = "STOP"


@dataclass(frozen=True)
class MotionCommand:
    motion: Motion
    magnitude: float = 0.0

    def __post_init__(self):
        if self.motion is Motion.STOP:
            if self.magnitude != 0:
                raise ValueError("Stop carries no magnitude")
        elif not 0 < self.magnitude <= 1:
            raise ValueError(f"magnitude must be in (0, 1], got {self.magnitude}")


STOP = MotionCommand(Motion.STOP)

U_FULL_SCALE = 1.0


def align_command(ux: float, uy: float, deadband: float, ex: float,
                  ey: float) -> list[MotionCommand]:
    """Map per-axis PID outputs to base commands.

    ``ex``/``ey`` are the raw pixel errors (object minus frame centre) used
    for the deadband test; ``ux``/``uy`` are the PID outputs. Object right of
    centre turns the base clockwise; object past the centre row (farther
    away) drives it forward. An axis whose output is exactly zero emits
    nothing.
    """
    if deadband < 0:
        raise ValueError("deadband must be non-negative")
    if abs(ex) <= deadband and abs(ey) <= deadband:
        return [STOP]
    out = []
    if ux != 0:
        motion = Motion.ROTATE_CW if ux > 0 else Motion.ROTATE_CCW
        out.append(MotionCommand(motion, min(1.0, abs(ux) / U_FULL_SCALE)))
    if uy != 0:
        motion = Motion.FORWARD if uy > 0 else Motion.BACKWARD
        out.append(MotionCommand(motion, min(1.0, abs(uy) / U_FULL_SCALE)))
    return out


def speed_byte(magnitude: float) -> int:
    """Wire speed 0-255 for a command magnitude in [0, 1]."""
    return int(math.floor(min(1.0, max(0.0, magnitude)) * 255 + 0.5))
