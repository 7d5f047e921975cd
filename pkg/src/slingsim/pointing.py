"""Displacement-to-target mapping: straight rays, ballistic arcs, selection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ballistics import Termination, Trajectory, generate_trajectory, straight_trajectory
from .model import (Mapping, SceneObject, SelectMode, SimConfig, Vec,
                    ValidationError, as_vec3)


@dataclass
class PointingResult:
    target: Vec
    selected_object: str | None
    trajectory: Trajectory | None = None
    ray: Vec | None = None  # straight-ray reach vector when mapping is STRAIGHT_RAY


def intersect_segment_sphere(a: Vec, b: Vec, center: Vec, radius: float) -> float | None:
    """Earliest parameter s in [0, 1] where segment a->b enters the sphere.

    Tangency counts as a hit. A start point already inside returns 0.0.
    """
    a = as_vec3(a, "a")
    b = as_vec3(b, "b")
    c = as_vec3(center, "center")
    if radius <= 0:
        raise ValidationError(f"sphere radius must be > 0, got {radius}")
    o = a - c
    if float(o @ o) <= radius * radius:
        return 0.0
    seg = b - a
    aa = float(seg @ seg)
    if aa == 0.0:
        return None
    bb = 2.0 * float(o @ seg)
    cc = float(o @ o) - radius * radius
    disc = bb * bb - 4.0 * aa * cc
    if disc < 0.0:
        return None
    s = (-bb - np.sqrt(disc)) / (2.0 * aa)
    if 0.0 <= s <= 1.0:
        return float(s)
    return None


def intersect_segment_ground(a: Vec, b: Vec) -> float | None:
    """Parameter s in [0, 1] where segment a->b crosses the plane z = 0."""
    a = as_vec3(a, "a")
    b = as_vec3(b, "b")
    if a[2] <= 0.0:
        return 0.0
    if b[2] > 0.0:
        return None
    return float(a[2] / (a[2] - b[2]))


def straight_ray_target(p0: Vec, displacement: Vec, scene: list[SceneObject],
                        cfg: SimConfig) -> PointingResult:
    """Clip the reach vector launch_sign * k * D at the first surface it meets."""
    p = as_vec3(p0, "p0")
    d = as_vec3(displacement, "displacement")
    if float(np.linalg.norm(d)) == 0.0:
        raise ValidationError("displacement must be nonzero to define a ray")
    ray = cfg.pointing.launch_sign * cfg.pointing.k * d
    tip = p + ray
    best_s = np.inf
    selected: str | None = None
    s = intersect_segment_ground(p, tip)
    if s is not None:
        best_s = s
    for obj in scene:
        if obj.grabbed:
            continue
        s = intersect_segment_sphere(p, tip, obj.center, obj.radius)
        if s is not None and s < best_s:
            best_s = s
            selected = obj.id
    target = p + best_s * ray if np.isfinite(best_s) else tip
    return PointingResult(target=target, selected_object=selected, ray=ray)


def _select_by_endpoint(endpoint: Vec, scene: list[SceneObject], tol: float) -> str | None:
    best_gap = np.inf
    selected: str | None = None
    for obj in scene:
        if obj.grabbed:
            continue
        gap = float(np.linalg.norm(endpoint - obj.center)) - obj.radius
        if gap <= tol and gap < best_gap:
            best_gap = gap
            selected = obj.id
    return selected


def ballistic_target(p0: Vec, displacement: Vec, scene: list[SceneObject],
                     cfg: SimConfig) -> PointingResult:
    """Generate the ballistic arc and resolve the selected object.

    path_entry mode terminates the arc inside the first object it enters;
    endpoint mode flies to ground/timeout and selects by endpoint proximity.
    """
    if cfg.pointing.select_mode is SelectMode.ENDPOINT:
        traj = generate_trajectory(p0, displacement, [], cfg)
        selected = _select_by_endpoint(traj.endpoint, scene, cfg.pointing.select_tolerance)
    else:
        traj = generate_trajectory(p0, displacement, scene, cfg)
        selected = traj.object_id
    return PointingResult(target=traj.endpoint.copy(), selected_object=selected,
                          trajectory=traj)


def point(p0: Vec, displacement: Vec, scene: list[SceneObject],
          cfg: SimConfig) -> PointingResult:
    """Dispatch on the configured displacement mapping.

    The straight-ray result also carries a constant-speed trajectory so the
    rest of the pipeline (freeze, fit, follow) works for either mapping.
    """
    if cfg.pointing.mapping is Mapping.STRAIGHT_RAY:
        result = straight_ray_target(p0, displacement, scene, cfg)
        d = as_vec3(displacement, "displacement")
        speed = cfg.pointing.k * float(np.linalg.norm(d))
        term = Termination.OBJECT_HIT if result.selected_object else Termination.GROUND
        if not np.allclose(result.target, p0):
            result.trajectory = straight_trajectory(
                p0, result.target, speed, cfg.rk4_dt, term, result.selected_object)
        return result
    return ballistic_target(p0, displacement, scene, cfg)
