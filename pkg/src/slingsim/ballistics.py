"""Ballistic trajectory generation: drag models, RK4 stepping, termination."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .model import (BallisticParams, DragMode, SceneObject, SimConfig, Vec,
                    ValidationError, as_vec3)


class Termination(str, Enum):
    GROUND = "ground"
    OBJECT_HIT = "object_hit"
    TIMEOUT = "timeout"


_TERM_BY_CODE = {
    kernels.TERM_GROUND: Termination.GROUND,
    kernels.TERM_OBJECT: Termination.OBJECT_HIT,
    kernels.TERM_TIMEOUT: Termination.TIMEOUT,
}


@dataclass
class BallisticState:
    position: Vec
    velocity: Vec
    t: float = 0.0


@dataclass
class Trajectory:
    """Samples on a uniform dt grid as rows (t, x, y, z, vx, vy, vz)."""
    samples: np.ndarray
    termination: Termination
    endpoint: Vec
    object_id: str | None = None

    @property
    def times(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def positions(self) -> np.ndarray:
        return self.samples[:, 1:4]

    @property
    def velocities(self) -> np.ndarray:
        return self.samples[:, 4:7]

    @property
    def duration(self) -> float:
        return float(self.samples[-1, 0])


def trajectory_hash(traj: Trajectory) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(traj.samples).tobytes())
    h.update(traj.termination.value.encode())
    h.update(np.ascontiguousarray(traj.endpoint).tobytes())
    h.update((traj.object_id or "").encode())
    return h.hexdigest()


def drag_accel_sine(velocity: Vec, params: BallisticParams) -> Vec:
    """Acceleration under the verbatim published drag equations.

    Horizontal drag is one-sided (-v^2 regardless of direction); vertical drag
    carries a sin(vz) factor. Kept exactly as printed; see drag_accel_signum
    for the sign-corrected model.
    """
    vx, vy, vz = float(velocity[0]), float(velocity[1]), float(velocity[2])
    q = params.rho * params.cd / (2.0 * params.mass)
    return np.array([
        -q * params.area_x * vx * vx,
        -q * params.area_y * vy * vy,
        -q * params.area_z * vz * vz * np.sin(vz) - params.g,
    ])


def drag_accel_signum(velocity: Vec, params: BallisticParams) -> Vec:
    """Acceleration with quadratic drag opposing each velocity component."""
    v = np.asarray(velocity, dtype=np.float64)
    q = params.rho * params.cd / (2.0 * params.mass)
    areas = np.array([params.area_x, params.area_y, params.area_z])
    accel = -np.sign(v) * q * areas * v * v
    accel[2] -= params.g
    return accel


def drag_accel(velocity: Vec, params: BallisticParams) -> Vec:
    if params.drag_mode is DragMode.SINE:
        return drag_accel_sine(velocity, params)
    return drag_accel_signum(velocity, params)


def rk4_step(state: BallisticState, params: BallisticParams, dt: float) -> BallisticState:
    """One classical RK4 step of the drag ODE."""
    if dt <= 0:
        raise ValidationError(f"rk4_step dt must be > 0, got {dt}")
    p, v = state.position, state.velocity
    k1v = drag_accel(v, params)
    w2 = v + 0.5 * dt * k1v
    k2v = drag_accel(w2, params)
    w3 = v + 0.5 * dt * k2v
    k3v = drag_accel(w3, params)
    w4 = v + dt * k3v
    k4v = drag_accel(w4, params)
    new_p = p + dt * (v + 2.0 * w2 + 2.0 * w3 + w4) / 6.0
    new_v = v + dt * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
    return BallisticState(new_p, new_v, state.t + dt)


def terminal_velocity(params: BallisticParams) -> float:
    """Steady-state fall speed sqrt(2 m g / (rho cd Az)); undefined without drag."""
    denom = params.rho * params.cd * params.area_z
    if denom <= 0:
        raise ValidationError("terminal velocity undefined: rho * cd * area_z must be > 0")
    return float(np.sqrt(2.0 * params.mass * params.g / denom))


def _sphere_array(scene: list[SceneObject]) -> tuple[np.ndarray, list[str]]:
    live = [o for o in scene if not o.grabbed]
    spheres = np.empty((len(live), 4), dtype=np.float64)
    ids: list[str] = []
    for i, o in enumerate(live):
        spheres[i, 0:3] = o.center
        spheres[i, 3] = o.radius
        ids.append(o.id)
    return spheres, ids


def generate_trajectory(p0: Vec, displacement: Vec, scene: list[SceneObject],
                        cfg: SimConfig) -> Trajectory:
    """Ballistic trajectory from p0 with launch velocity launch_sign * k * D.

    Integrates at cfg.rk4_dt until ground (z <= 0), entry into a scene object,
    or t exceeding cfg.t_max. Grabbed objects are transparent.
    """
    p = as_vec3(p0, "p0")
    d = as_vec3(displacement, "displacement")
    if float(np.linalg.norm(d)) == 0.0:
        raise ValidationError("displacement must be nonzero to define a launch velocity")
    v0 = cfg.pointing.launch_sign * cfg.pointing.k * d
    spheres, ids = _sphere_array(scene)
    b = cfg.ballistic
    samples, n, term, hit, ex, ey, ez = kernels.integrate(
        p[0], p[1], p[2], v0[0], v0[1], v0[2], spheres,
        b.rho, b.cd, b.area_x, b.area_y, b.area_z, b.mass, b.g,
        b.drag_mode is DragMode.SINE, cfg.rk4_dt, cfg.t_max)
    return Trajectory(
        samples=samples[:n].copy(),
        termination=_TERM_BY_CODE[term],
        endpoint=np.array([ex, ey, ez]),
        object_id=ids[hit] if hit >= 0 else None,
    )


def straight_trajectory(p0: Vec, target: Vec, speed: float, dt: float,
                        termination: Termination, object_id: str | None) -> Trajectory:
    """Constant-speed straight-line trajectory used by the straight-ray mapping."""
    p = as_vec3(p0, "p0")
    tgt = as_vec3(target, "target")
    span = tgt - p
    dist = float(np.linalg.norm(span))
    if speed <= 0 or dist == 0.0:
        raise ValidationError("straight trajectory needs speed > 0 and target != p0")
    duration = dist / speed
    n = max(int(np.floor(duration / dt)), 1)
    ts = np.arange(n + 1) * dt
    vel = span / duration
    samples = np.empty((n + 1, 7))
    samples[:, 0] = ts
    samples[:, 1:4] = p + np.outer(np.minimum(ts, duration), vel)
    samples[:, 4:7] = vel
    return Trajectory(samples=samples, termination=termination, endpoint=tgt,
                      object_id=object_id)


def write_trajectory_csv(traj: Trajectory, path: str) -> str:
    """Write samples as CSV plus a sidecar JSON with termination metadata.

    Returns the sidecar path (csv path with a .json extension).
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,x,y,z,vx,vy,vz\n")
        for row in traj.samples:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    meta = {
        "version": 1,
        "termination": traj.termination.value,
        "endpoint": [float(x) for x in traj.endpoint],
        "n_samples": int(traj.samples.shape[0]),
    }
    if traj.object_id is not None:
        meta["object_id"] = traj.object_id
    sidecar = os.path.splitext(path)[0] + ".json"
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar
