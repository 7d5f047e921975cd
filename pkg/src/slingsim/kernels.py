"""Hot numeric kernel: RK4 ballistic integration with collision tests.

The same function source backs both execution paths: `integrate_numba` is the
@njit-compiled wrapper, `integrate_python` the plain interpreter fallback.
Set SLINGSIM_NUMBA=0 to force the fallback (also used when numba is absent).
Identical arithmetic order keeps the two paths bit-identical in signum mode.
"""
from __future__ import annotations

import math
import os

import numpy as np

TERM_GROUND = 0
TERM_OBJECT = 1
TERM_TIMEOUT = 2


def _integrate(px, py, pz, vx, vy, vz, spheres,
               rho, cd, area_x, area_y, area_z, mass, g,
               sine_mode, dt, t_max):
    """Integrate the drag ODE from (p, v) until ground, object entry, or t > t_max.

    spheres: (N, 4) array of (cx, cy, cz, r). Returns the preallocated sample
    buffer (t, x, y, z, vx, vy, vz), the number of rows filled, a termination
    code, the index of the sphere hit (-1 if none), and the endpoint. Samples
    stay on the uniform dt grid; the endpoint is the sub-step intersection.
    """
    q = rho * cd / (2.0 * mass)
    n_steps = int(math.floor(t_max / dt + 1e-9))
    samples = np.empty((n_steps + 1, 7), dtype=np.float64)
    samples[0, 0] = 0.0
    samples[0, 1] = px
    samples[0, 2] = py
    samples[0, 3] = pz
    samples[0, 4] = vx
    samples[0, 5] = vy
    samples[0, 6] = vz
    n = 1
    term = TERM_TIMEOUT
    hit = -1
    ex, ey, ez = px, py, pz

    if pz <= 0.0:
        return samples, n, TERM_GROUND, -1, ex, ey, ez
    for j in range(spheres.shape[0]):
        dx0 = px - spheres[j, 0]
        dy0 = py - spheres[j, 1]
        dz0 = pz - spheres[j, 2]
        if dx0 * dx0 + dy0 * dy0 + dz0 * dz0 <= spheres[j, 3] * spheres[j, 3]:
            return samples, n, TERM_OBJECT, j, ex, ey, ez

    for i in range(n_steps):
        # RK4 stages; acceleration depends on velocity only
        if sine_mode:
            a1x = -q * area_x * vx * vx
            a1y = -q * area_y * vy * vy
            a1z = -q * area_z * vz * vz * math.sin(vz) - g
        else:
            sx = 1.0 if vx > 0.0 else (-1.0 if vx < 0.0 else 0.0)
            sy = 1.0 if vy > 0.0 else (-1.0 if vy < 0.0 else 0.0)
            sz = 1.0 if vz > 0.0 else (-1.0 if vz < 0.0 else 0.0)
            a1x = -sx * q * area_x * vx * vx
            a1y = -sy * q * area_y * vy * vy
            a1z = -sz * q * area_z * vz * vz - g

        w2x = vx + 0.5 * dt * a1x
        w2y = vy + 0.5 * dt * a1y
        w2z = vz + 0.5 * dt * a1z
        if sine_mode:
            a2x = -q * area_x * w2x * w2x
            a2y = -q * area_y * w2y * w2y
            a2z = -q * area_z * w2z * w2z * math.sin(w2z) - g
        else:
            sx = 1.0 if w2x > 0.0 else (-1.0 if w2x < 0.0 else 0.0)
            sy = 1.0 if w2y > 0.0 else (-1.0 if w2y < 0.0 else 0.0)
            sz = 1.0 if w2z > 0.0 else (-1.0 if w2z < 0.0 else 0.0)
            a2x = -sx * q * area_x * w2x * w2x
            a2y = -sy * q * area_y * w2y * w2y
            a2z = -sz * q * area_z * w2z * w2z - g

        w3x = vx + 0.5 * dt * a2x
        w3y = vy + 0.5 * dt * a2y
        w3z = vz + 0.5 * dt * a2z
        if sine_mode:
            a3x = -q * area_x * w3x * w3x
            a3y = -q * area_y * w3y * w3y
            a3z = -q * area_z * w3z * w3z * math.sin(w3z) - g
        else:
            sx = 1.0 if w3x > 0.0 else (-1.0 if w3x < 0.0 else 0.0)
            sy = 1.0 if w3y > 0.0 else (-1.0 if w3y < 0.0 else 0.0)
            sz = 1.0 if w3z > 0.0 else (-1.0 if w3z < 0.0 else 0.0)
            a3x = -sx * q * area_x * w3x * w3x
            a3y = -sy * q * area_y * w3y * w3y
            a3z = -sz * q * area_z * w3z * w3z - g

        w4x = vx + dt * a3x
        w4y = vy + dt * a3y
        w4z = vz + dt * a3z
        if sine_mode:
            a4x = -q * area_x * w4x * w4x
            a4y = -q * area_y * w4y * w4y
            a4z = -q * area_z * w4z * w4z * math.sin(w4z) - g
        else:
            sx = 1.0 if w4x > 0.0 else (-1.0 if w4x < 0.0 else 0.0)
            sy = 1.0 if w4y > 0.0 else (-1.0 if w4y < 0.0 else 0.0)
            sz = 1.0 if w4z > 0.0 else (-1.0 if w4z < 0.0 else 0.0)
            a4x = -sx * q * area_x * w4x * w4x
            a4y = -sy * q * area_y * w4y * w4y
            a4z = -sz * q * area_z * w4z * w4z - g

        npx = px + dt * (vx + 2.0 * w2x + 2.0 * w3x + w4x) / 6.0
        npy = py + dt * (vy + 2.0 * w2y + 2.0 * w3y + w4y) / 6.0
        npz = pz + dt * (vz + 2.0 * w2z + 2.0 * w3z + w4z) / 6.0
        nvx = vx + dt * (a1x + 2.0 * a2x + 2.0 * a3x + a4x) / 6.0
        nvy = vy + dt * (a1y + 2.0 * a2y + 2.0 * a3y + a4y) / 6.0
        nvz = vz + dt * (a1z + 2.0 * a2z + 2.0 * a3z + a4z) / 6.0

        # earliest surface crossing on the segment old -> new, param s in [0, 1]
        best_s = 2.0
        best_hit = -1
        ground_hit = False
        if npz <= 0.0:
            s = pz / (pz - npz)
            if s < best_s:
                best_s = s
                ground_hit = True
        segx = npx - px
        segy = npy - py
        segz = npz - pz
        for j in range(spheres.shape[0]):
            ox = px - spheres[j, 0]
            oy = py - spheres[j, 1]
            oz = pz - spheres[j, 2]
            aa = segx * segx + segy * segy + segz * segz
            if aa == 0.0:
                continue
            bb = 2.0 * (ox * segx + oy * segy + oz * segz)
            cc = ox * ox + oy * oy + oz * oz - spheres[j, 3] * spheres[j, 3]
            disc = bb * bb - 4.0 * aa * cc
            if disc < 0.0:
                continue
            s = (-bb - math.sqrt(disc)) / (2.0 * aa)
            if 0.0 <= s <= 1.0 and s < best_s:
                best_s = s
                best_hit = j
                ground_hit = False

        if best_s <= 1.0:
            ex = px + best_s * segx
            ey = py + best_s * segy
            ez = pz + best_s * segz
            if ground_hit:
                term = TERM_GROUND
                hit = -1
            else:
                term = TERM_OBJECT
                hit = best_hit
            return samples, n, term, hit, ex, ey, ez

        px, py, pz = npx, npy, npz
        vx, vy, vz = nvx, nvy, nvz
        samples[n, 0] = (i + 1) * dt
        samples[n, 1] = px
        samples[n, 2] = py
        samples[n, 3] = pz
        samples[n, 4] = vx
        samples[n, 5] = vy
        samples[n, 6] = vz
        n += 1

    return samples, n, TERM_TIMEOUT, -1, px, py, pz


def _truthy_env(name: str, default: str) -> bool:
    return os.environ.get(name, default).strip().lower() not in {"0", "false", "off", "no"}

integrate_python = _integrate
integrate_numba = None

NUMBA_ENABLED = _truthy_env("SLINGSIM_NUMBA", "1")
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    # no fastmath: IEEE semantics keep this path bit-identical to the fallback
    integrate_numba = njit(cache=True, nogil=True)(_integrate)
    integrate = integrate_numba
else:  # pragma: no cover
    integrate = integrate_python
