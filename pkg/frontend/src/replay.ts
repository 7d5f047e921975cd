/** Playback of recorded session logs (JSONL) without a server.
 *
 * Tick records carry enough to re-render the interaction: drone position,
 * hand, grab, mode. Events are used for badge annotations. The player maps
 * wall time to record time at an adjustable speed.
 */

import { isVec3, type Vec3 } from "./protocol.js";

export interface ReplayTick {
  tick: number;
  t: number;
  hand: Vec3;
  grab: boolean;
  pos: Vec3;
  vel: Vec3;
  mode: string;
}

export interface ReplayLog {
  config: Record<string, unknown>;
  scene: unknown[];
  ticks: ReplayTick[];
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

export function parseLog(text: string): ReplayLog {
  const lines = text.split("\n").filter((ln) => ln.trim().length > 0);
  if (lines.length === 0) throw new Error("empty log");
  const header: unknown = JSON.parse(lines[0]!);
  if (!isRecord(header) || header.kind !== "header") {
    throw new Error("first line is not a log header");
  }
  const ticks: ReplayTick[] = [];
  for (const line of lines.slice(1)) {
    let row: unknown;
    try {
      row = JSON.parse(line);
    } catch {
      continue;
    }
    if (!isRecord(row) || row.kind !== "tick") continue; // events skipped
    if (typeof row.tick !== "number" || typeof row.t !== "number") continue;
    if (!isVec3(row.hand) || !isVec3(row.pos) || !isVec3(row.vel)) continue;
    if (typeof row.grab !== "boolean" || typeof row.mode !== "string") continue;
    ticks.push({
      tick: row.tick, t: row.t, hand: row.hand, grab: row.grab,
      pos: row.pos, vel: row.vel, mode: row.mode,
    });
  }
  if (ticks.length === 0) throw new Error("log contains no tick records");
  return {
    config: isRecord(header.config) ? header.config : {},
    scene: Array.isArray(header.scene) ? header.scene : [],
    ticks,
  };
}

export class ReplayPlayer {
  private startedAt: number | null = null;
  private cursor = 0;

  constructor(readonly log: ReplayLog, readonly speed = 1.0) {}

  get duration(): number {
    return this.log.ticks[this.log.ticks.length - 1]!.t;
  }

  /** Latest record at wall-clock `nowMs`; null until started, last record
   * after the end. */
  at(nowMs: number): ReplayTick | null {
    if (this.startedAt === null) this.startedAt = nowMs;
    const simT = ((nowMs - this.startedAt) / 1000) * this.speed;
    const ticks = this.log.ticks;
    while (this.cursor + 1 < ticks.length && ticks[this.cursor + 1]!.t <= simT) {
      this.cursor += 1;
    }
    return ticks[this.cursor] ?? null;
  }

  get finished(): boolean {
    return this.cursor >= this.log.ticks.length - 1;
  }
}
