"""Piecewise-polynomial fitting of trajectories and closed-loop following."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .ballistics import Trajectory
from .drone import PidState, pid_command
from .model import DroneState, PidConfig, Vec, ValidationError, as_vec3

POLY_DEGREE = 5
NUM_COEFFS = POLY_DEGREE + 1


class FitError(ValidationError):
    pass


@dataclass
class PiecewisePolynomial:
    """Per-axis degree-5 segments; coeffs[s, axis, j] multiplies tau^j (constant first),
    tau measured from the segment start."""
    knots: np.ndarray            # (S+1,) absolute times, knots[0] == 0
    coeffs: np.ndarray           # (S, 3, NUM_COEFFS)
    max_fit_error: float = 0.0

    @property
    def duration(self) -> float:
        return float(self.knots[-1])

    @property
    def n_segments(self) -> int:
        return int(self.coeffs.shape[0])


@dataclass
class ReferencePoint:
    position: Vec
    velocity: Vec
    accel: Vec
    t: float
    clamped: bool = False


def _segment_edges(total: float, segment_duration: float) -> np.ndarray:
    starts = list(np.arange(0.0, total, segment_duration))
    # fold a short tail into the previous segment instead of fitting 6 coeffs to it
    if len(starts) > 1 and total - starts[-1] < 0.5 * segment_duration:
        starts.pop()
    return np.array(starts + [total])


def fit_polynomial(traj: Trajectory, segment_duration: float = 0.25,
                   max_deviation: float = 0.01) -> PiecewisePolynomial:
    """Constrained least-squares fit of the samples, C2-continuous at the knots.

    The first and last sample positions are interpolated exactly; the fit is
    rejected if any sample deviates by max_deviation or more.
    """
    if segment_duration <= 0:
        raise FitError(f"segment_duration must be > 0, got {segment_duration}")
    times = traj.samples[:, 0]
    pos = traj.samples[:, 1:4]
    n = times.shape[0]
    if n < 2:
        raise FitError(f"need at least 2 samples to fit, got {n}")
    total = float(times[-1] - times[0])
    if total <= 0:
        raise FitError("trajectory duration must be positive")
    t0 = float(times[0])
    rel = times - t0
    knots = _segment_edges(total, segment_duration)
    n_seg = len(knots) - 1
    seg_len = np.diff(knots)

    # sample membership: last segment takes its right edge
    idx = np.clip(np.searchsorted(knots, rel, side="right") - 1, 0, n_seg - 1)
    n_unknown = NUM_COEFFS * n_seg

    # normal-equation blocks, scaled by sample count for conditioning
    G = np.zeros((n_unknown, n_unknown))
    rhs = np.zeros((n_unknown, 3))
    for s in range(n_seg):
        mask = idx == s
        m = int(mask.sum())
        if m == 0:
            raise FitError(f"segment {s} contains no samples")
        u = (rel[mask] - knots[s]) / seg_len[s]
        V = np.vander(u, NUM_COEFFS, increasing=True)
        sl = slice(s * NUM_COEFFS, (s + 1) * NUM_COEFFS)
        G[sl, sl] = V.T @ V / m
        rhs[sl] = V.T @ pos[mask] / m

    # equality constraints: C2 continuity at interior knots + exact endpoints
    def deriv_row(order: int, at_one: bool, T: float) -> np.ndarray:
        row = np.zeros(NUM_COEFFS)
        if at_one:
            for j in range(order, NUM_COEFFS):
                row[j] = math.factorial(j) / math.factorial(j - order)
        else:
            row[order] = math.factorial(order)
        return row / T ** order

    cons: list[np.ndarray] = []
    cons_rhs: list[np.ndarray] = []
    for s in range(n_seg - 1):
        for order in range(3):
            row = np.zeros(n_unknown)
            row[s * NUM_COEFFS:(s + 1) * NUM_COEFFS] = deriv_row(order, True, seg_len[s])
            row[(s + 1) * NUM_COEFFS:(s + 2) * NUM_COEFFS] = -deriv_row(order, False, seg_len[s + 1])
            cons.append(row)
            cons_rhs.append(np.zeros(3))
    first = np.zeros(n_unknown)
    first[0] = 1.0
    cons.append(first)
    cons_rhs.append(pos[0])
    last = np.zeros(n_unknown)
    last[(n_seg - 1) * NUM_COEFFS:] = deriv_row(0, True, seg_len[-1])
    cons.append(last)
    cons_rhs.append(pos[-1])

    E = np.array(cons)
    h = np.array(cons_rhs)
    scale = np.linalg.norm(E, axis=1)
    E = E / scale[:, None]
    h = h / scale[:, None]

    m_cons = E.shape[0]
    kkt = np.zeros((n_unknown + m_cons, n_unknown + m_cons))
    kkt[:n_unknown, :n_unknown] = 2.0 * G
    kkt[:n_unknown, n_unknown:] = E.T
    kkt[n_unknown:, :n_unknown] = E
    full_rhs = np.vstack([2.0 * rhs, h])
    sol = np.linalg.solve(kkt, full_rhs)
    scaled = sol[:n_unknown].reshape(n_seg, NUM_COEFFS, 3).transpose(0, 2, 1)

    # convert from the unit-interval basis to local time tau
    powers = seg_len[:, None] ** np.arange(NUM_COEFFS)
    coeffs = scaled / powers[:, None, :]

    poly = PiecewisePolynomial(knots=knots, coeffs=coeffs)
    fit_pos = np.array([sample_reference(poly, float(t)).position for t in rel])
    poly.max_fit_error = float(np.max(np.abs(fit_pos - pos)))
    if poly.max_fit_error >= max_deviation:
        raise FitError(
            f"fit deviates {poly.max_fit_error:.6f} m from samples (limit {max_deviation})")
    return poly


def sample_reference(poly: PiecewisePolynomial, t: float) -> ReferencePoint:
    """Evaluate position/velocity/acceleration at t; out-of-range clamps to the
    nearest endpoint with zero velocity and sets the flag."""
    clamped = t < poly.knots[0] or t > poly.knots[-1]
    tq = float(np.clip(t, poly.knots[0], poly.knots[-1]))
    s = int(np.clip(np.searchsorted(poly.knots, tq, side="right") - 1, 0,
                    poly.n_segments - 1))
    tau = tq - float(poly.knots[s])
    c = poly.coeffs[s]  # (3, NUM_COEFFS)
    pos = np.zeros(3)
    vel = np.zeros(3)
    acc = np.zeros(3)
    for j in range(NUM_COEFFS - 1, -1, -1):
        if j >= 2:
            acc = acc * tau + (j * (j - 1)) * c[:, j]
        if j >= 1:
            vel = vel * tau + j * c[:, j]
        pos = pos * tau + c[:, j]
    if clamped:
        vel = np.zeros(3)
        acc = np.zeros(3)
    return ReferencePoint(position=pos, velocity=vel, accel=acc, t=t, clamped=clamped)


def blend_onto(poly: PiecewisePolynomial, position: Vec, velocity: Vec,
               duration: float) -> PiecewisePolynomial:
    """Prepend a quintic run-up from an arbitrary state onto the reference start.

    A vehicle is rarely on the reference when following begins; jumping the
    clock would demand an instant velocity step it cannot fly. The run-up
    starts from the given position and velocity (zero acceleration) and meets
    the first segment with matching position, velocity and acceleration, so
    the joined reference is C2 and the whole original path is still flown.
    """
    if duration <= 0:
        raise ValidationError(f"blend duration must be > 0, got {duration}")
    p0 = as_vec3(position, "blend position")
    v0 = as_vec3(velocity, "blend velocity")
    target = sample_reference(poly, 0.0)
    T = float(duration)
    lead = np.zeros((1, 3, NUM_COEFFS))
    lead[0, :, 0] = p0
    lead[0, :, 1] = v0
    system = np.array([
        [T ** 3, T ** 4, T ** 5],
        [3 * T ** 2, 4 * T ** 3, 5 * T ** 4],
        [6 * T, 12 * T ** 2, 20 * T ** 3],
    ])
    for ax in range(3):
        residual = np.array([
            target.position[ax] - (p0[ax] + v0[ax] * T),
            target.velocity[ax] - v0[ax],
            target.accel[ax],
        ])
        lead[0, ax, 3:] = np.linalg.solve(system, residual)
    return PiecewisePolynomial(
        knots=np.concatenate(([0.0], poly.knots + T)),
        coeffs=np.concatenate((lead, poly.coeffs), axis=0),
        max_fit_error=poly.max_fit_error)


def time_rescale(poly: PiecewisePolynomial, factor: float) -> PiecewisePolynomial:
    """Stretch time by factor: same geometric path, velocities divided by factor."""
    if factor <= 0:
        raise ValidationError(f"rescale factor must be > 0, got {factor}")
    powers = factor ** np.arange(NUM_COEFFS)
    return PiecewisePolynomial(knots=poly.knots * factor,
                               coeffs=poly.coeffs / powers[None, None, :],
                               max_fit_error=poly.max_fit_error)


def poly_to_json(poly: PiecewisePolynomial) -> dict[str, Any]:
    """JSON form; coefficient lists are constant-term first in local segment time."""
    segments = []
    for s in range(poly.n_segments):
        segments.append({
            "t_start": float(poly.knots[s]),
            "t_end": float(poly.knots[s + 1]),
            "x": [float(v) for v in poly.coeffs[s, 0]],
            "y": [float(v) for v in poly.coeffs[s, 1]],
            "z": [float(v) for v in poly.coeffs[s, 2]],
        })
    return {"version": 1, "degree": POLY_DEGREE, "segments": segments,
            "max_fit_error": poly.max_fit_error}


def poly_from_json(data: dict[str, Any]) -> PiecewisePolynomial:
    if data.get("version") != 1:
        raise ValidationError(f"unsupported polynomial version: {data.get('version')}")
    segs = data["segments"]
    if not segs:
        raise ValidationError("polynomial has no segments")
    knots = np.array([s["t_start"] for s in segs] + [segs[-1]["t_end"]])
    coeffs = np.array([[s["x"], s["y"], s["z"]] for s in segs])
    return PiecewisePolynomial(knots=knots, coeffs=coeffs,
                               max_fit_error=float(data.get("max_fit_error", 0.0)))


def follow_step(ref: ReferencePoint, drone: DroneState, gains: PidConfig,
                state: PidState, dt: float, integral_enabled: bool = True,
                accel_limit: float = math.inf,
                drag_comp: float = 0.0) -> tuple[Vec, PidState]:
    """Reference tracking command: full feed-forward plus PID correction.

    Feed-forward is the reference acceleration plus drag_comp * reference
    velocity (cancels the plant's linear damping); exactly on-reference the
    command reduces to the feed-forward alone.
    """
    corrective, new_state = pid_command(
        ref.position - drone.position, ref.velocity - drone.velocity,
        state, gains, dt, integral_enabled=integral_enabled)
    cmd = ref.accel + drag_comp * ref.velocity + corrective
    norm = float(np.linalg.norm(cmd))
    if norm > accel_limit:
        cmd = cmd * (accel_limit / norm)
    return cmd, new_state
