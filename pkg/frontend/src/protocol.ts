/** Wire types for the simulator's WebSocket protocol, with runtime guards.
 *
 * The server speaks JSON text frames: one `hello` on connect, then `state`
 * frames at the broadcast rate. Guards are hand-rolled so a malformed or
 * truncated message is dropped instead of poisoning the view state.
 */

export type Vec3 = [number, number, number];

export interface SceneObj {
  id: string;
  center: Vec3;
  radius: number;
  grabbed: boolean;
}

export interface WireEvent {
  kind: "event";
  tick: number;
  t: number;
  event: string;
  payload: Record<string, unknown>;
}

export interface Hello {
  type: "hello";
  version: number;
  config: Record<string, unknown>;
  config_hash: string;
  scene: SceneObj[];
  physics_rate: number;
  broadcast_rate: number;
  setpoint: Vec3;
}

export interface StateFrame {
  type: "state";
  tick: number;
  t: number;
  mode: string;
  drone: { pos: Vec3; vel: Vec3 };
  hand: Vec3;
  grab: boolean;
  leash_force: number;
  displacement: Vec3;
  setpoint: Vec3;
  objects: SceneObj[];
  events: WireEvent[];
  trajectory?: Vec3[];
}

export type ServerMessage = Hello | StateFrame;

export const MODES = [
  "Approach", "Hover", "Slingshot", "Recovering", "Projectile",
  "Search", "Return", "Delivered", "EmergencyStop",
] as const;

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

export function isVec3(v: unknown): v is Vec3 {
  return Array.isArray(v) && v.length === 3 &&
    v.every((x) => typeof x === "number" && Number.isFinite(x));
}

export function isSceneObj(v: unknown): v is SceneObj {
  return isRecord(v) && typeof v.id === "string" && isVec3(v.center) &&
    typeof v.radius === "number" && typeof v.grabbed === "boolean";
}

function isWireEvent(v: unknown): v is WireEvent {
  return isRecord(v) && v.kind === "event" && typeof v.tick === "number" &&
    typeof v.event === "string" && isRecord(v.payload);
}

export function isHello(v: unknown): v is Hello {
  return isRecord(v) && v.type === "hello" && typeof v.version === "number" &&
    isRecord(v.config) && typeof v.config_hash === "string" &&
    Array.isArray(v.scene) && v.scene.every(isSceneObj) &&
    typeof v.physics_rate === "number" &&
    typeof v.broadcast_rate === "number" && isVec3(v.setpoint);
}

export function isStateFrame(v: unknown): v is StateFrame {
  if (!isRecord(v) || v.type !== "state") return false;
  if (typeof v.tick !== "number" || typeof v.t !== "number") return false;
  if (typeof v.mode !== "string") return false;
  const drone = v.drone;
  if (!isRecord(drone) || !isVec3(drone.pos) || !isVec3(drone.vel)) return false;
  if (!isVec3(v.hand) || typeof v.grab !== "boolean") return false;
  if (typeof v.leash_force !== "number") return false;
  if (!isVec3(v.displacement) || !isVec3(v.setpoint)) return false;
  if (!Array.isArray(v.objects) || !v.objects.every(isSceneObj)) return false;
  if (!Array.isArray(v.events) || !v.events.every(isWireEvent)) return false;
  if (v.trajectory !== undefined &&
    (!Array.isArray(v.trajectory) || !v.trajectory.every(isVec3))) return false;
  return true;
}

/** Parse one socket message; null means "drop it, keep the connection". */
export function parseMessage(text: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch {
    return null;
  }
  if (isHello(data)) return data;
  if (isStateFrame(data)) return data;
  return null;
}
