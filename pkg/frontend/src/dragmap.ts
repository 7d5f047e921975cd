/** Pointer-to-hand mapping: a 2D drag becomes a 3D hand position.
 *
 * The pointer ray is intersected with a camera-facing vertical plane through
 * the drone's hover point, so dragging left/right/up/down pulls the hand
 * within a wall that always faces the viewer; depth comes from orbiting the
 * camera. The result is clamped to an arm's reach around the hover point.
 *
 * Pure math on [x, y, z] tuples (sim coordinates, z up) so it is testable
 * without a renderer.
 */

import type { Vec3 } from "./protocol.js";

export const REACH_RADIUS = 0.5; // m

export interface PointerRay {
  origin: Vec3;
  dir: Vec3; // unit length not required
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

/** Horizontal unit normal of the drag plane, pointing from hover toward the
 * viewer. Falls back to the reversed ray direction when the camera sits
 * directly above the hover point. */
export function dragPlaneNormal(ray: PointerRay, hover: Vec3): Vec3 | null {
  for (const cand of [sub(ray.origin, hover), scale(ray.dir, -1)]) {
    const flat: Vec3 = [cand[0], cand[1], 0];
    const len = norm(flat);
    if (len > 1e-9) return scale(flat, 1 / len);
  }
  return null;
}

/** Map a pointer ray to a hand position; null keeps the previous hand
 * (grazing ray or plane behind the camera). */
export function dragToHand(ray: PointerRay, hover: Vec3,
                           reach: number = REACH_RADIUS): Vec3 | null {
  const n = dragPlaneNormal(ray, hover);
  if (n === null) return null;
  const denom = dot(ray.dir, n);
  if (Math.abs(denom) < 1e-9) return null;
  const t = dot(sub(hover, ray.origin), n) / denom;
  if (t <= 0) return null;
  const p = add(ray.origin, scale(ray.dir, t));
  const pull = sub(p, hover);
  const dist = norm(pull);
  if (dist > reach) return add(hover, scale(pull, reach / dist));
  return p;
}
