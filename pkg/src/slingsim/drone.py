"""Point-mass drone plant, per-axis PID, elastic leash, tilt estimate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (DroneState, HandState, LeashConfig, PidConfig, QuadParams,
                    Vec, ValidationError, as_vec3)


@dataclass
class PidState:
    integral: Vec
    previous_error: Vec

    @staticmethod
    def zero() -> "PidState":
        return PidState(np.zeros(3), np.zeros(3))

    def copy(self) -> "PidState":
        return PidState(self.integral.copy(), self.previous_error.copy())


def pid_command(error: Vec, error_rate: Vec | None, state: PidState, gains: PidConfig,
                dt: float, integral_enabled: bool = True,
                accel_limit: float = math.inf) -> tuple[Vec, PidState]:
    """Per-axis u = kp*e + kd*de + ki*int(e), returned with the updated state.

    The integral accumulates only while integral_enabled (held frozen during
    the interaction phases) and is clamped per channel. The output norm is
    clamped to accel_limit; gravity compensation is added downstream.
    If error_rate is None it falls back to a backward difference.
    """
    e = as_vec3(error, "error")
    if dt <= 0:
        raise ValidationError(f"pid dt must be > 0, got {dt}")
    if error_rate is None:
        de = (e - state.previous_error) / dt
    else:
        de = as_vec3(error_rate, "error_rate")
    integral = state.integral
    if integral_enabled:
        lim = gains.integral_limit
        integral = np.clip(integral + e * dt, -lim, lim)
    u = np.array(gains.kp) * e + np.array(gains.kd) * de + np.array(gains.ki) * integral
    norm = float(np.linalg.norm(u))
    if norm > accel_limit:
        u = u * (accel_limit / norm)
    return u, PidState(integral=integral, previous_error=e)


def leash_force(hand: HandState, attach_point: Vec, leash: LeashConfig) -> Vec:
    """Tension-only spring force on the drone, pointing from attach toward hand.

    Zero unless the hand is grabbing and the leash is stretched past rest length.
    """
    attach = as_vec3(attach_point, "attach_point")
    if not hand.grabbing:
        return np.zeros(3)
    span = as_vec3(hand.position, "hand position") - attach
    dist = float(np.linalg.norm(span))
    extension = dist - leash.rest_length
    if extension <= 0.0 or dist == 0.0:
        return np.zeros(3)
    return leash.stiffness * extension * (span / dist)


def drone_step(state: DroneState, accel_cmd: Vec, external_force: Vec,
               quad: QuadParams, dt: float) -> DroneState:
    """Semi-implicit Euler step of the gravity-compensated point mass.

    accel_cmd is net of gravity (perfect compensation); external_force is in
    newtons; linear damping quad.drag_coefficient opposes velocity.
    """
    if dt <= 0:
        raise ValidationError(f"drone_step dt must be > 0, got {dt}")
    cmd = as_vec3(accel_cmd, "accel_cmd")
    force = as_vec3(external_force, "external_force")
    accel = cmd + force / quad.mass - quad.drag_coefficient * state.velocity
    velocity = state.velocity + accel * dt
    position = state.position + velocity * dt
    return DroneState(position=position, velocity=velocity, time=state.time + dt)


def tilt_estimate(accel_cmd: Vec, g: float = 9.81) -> float:
    """Attitude implied by a lateral acceleration command: atan(|a_xy| / g)."""
    cmd = as_vec3(accel_cmd, "accel_cmd")
    return float(math.atan2(math.hypot(cmd[0], cmd[1]), g))
