import { describe, expect, it } from "vitest";
import { InputThrottle, SlingClient } from "../src/net.js";
import type { Vec3 } from "../src/protocol.js";

/** Deterministic clock + timer queue for throttle tests. */
function fakeTime() {
  let now = 0;
  const timers: { at: number; fn: () => void; id: number }[] = [];
  let nextId = 1;
  return {
    now: () => now,
    schedule(fn: () => void, ms: number) {
      const id = nextId++;
      timers.push({ at: now + ms, fn, id });
      return id as unknown as ReturnType<typeof setTimeout>;
    },
    cancel(id: ReturnType<typeof setTimeout>) {
      const i = timers.findIndex((t) => t.id === (id as unknown as number));
      if (i >= 0) timers.splice(i, 1);
    },
    advance(ms: number) {
      const until = now + ms;
      for (;;) {
        timers.sort((a, b) => a.at - b.at);
        const next = timers[0];
        if (next === undefined || next.at > until) break;
        now = next.at;
        timers.shift();
        next.fn();
      }
      now = until;
    },
  };
}

function throttled() {
  const time = fakeTime();
  const sent: { at: number; hand: Vec3; grab: boolean }[] = [];
  const throttle = new InputThrottle(
    (hand, grab) => sent.push({ at: time.now(), hand, grab }),
    100, time.now, time.schedule, time.cancel);
  return { time, sent, throttle };
}

describe("InputThrottle", () => {
  it("caps a fast pointer stream at the send rate", () => {
    const { time, sent, throttle } = throttled();
    for (let i = 0; i < 1000; i++) {
      throttle.update([i, 0, 0], true);
      time.advance(1); // pointer events every 1 ms for 1 s
    }
    time.advance(20);
    expect(sent.length).toBeLessThanOrEqual(101);
    expect(sent.length).toBeGreaterThanOrEqual(99);
    for (let i = 1; i < sent.length; i++) {
      expect(sent[i]!.at - sent[i - 1]!.at).toBeGreaterThanOrEqual(10);
    }
  });

  it("sends the latest position, not the first queued one", () => {
    const { time, sent, throttle } = throttled();
    throttle.update([0, 0, 0], true); // immediate
    time.advance(2);
    throttle.update([1, 0, 0], true); // queued
    time.advance(2);
    throttle.update([2, 0, 0], true); // replaces the queued one
    time.advance(20);
    expect(sent.map((s) => s.hand[0])).toEqual([0, 2]);
  });

  it("lets a release through immediately", () => {
    const { time, sent, throttle } = throttled();
    throttle.update([0, 0, 0], true);
    time.advance(3);
    throttle.update([0.1, 0, 0], true); // queued behind the throttle
    throttle.update([0.1, 0, 0], false); // release: must not wait
    expect(sent).toHaveLength(2);
    expect(sent[1]).toMatchObject({ at: 3, grab: false });
    time.advance(50); // the stale queued input must not resurface
    expect(sent).toHaveLength(2);
  });
});

type Listener = ((ev: { data: unknown }) => void) | null;

function fakeSocket() {
  const outbox: string[] = [];
  const socket = {
    send: (data: string) => outbox.push(data),
    close: () => undefined,
    onopen: null as ((ev: unknown) => void) | null,
    onmessage: null as Listener,
    onclose: null as ((ev: unknown) => void) | null,
    onerror: null as ((ev: unknown) => void) | null,
  };
  return { socket, outbox };
}

const FRAME = JSON.stringify({
  type: "state", tick: 3, t: 0.03, mode: "Hover",
  drone: { pos: [0, 0, 1.5], vel: [0, 0, 0] }, hand: [0, 0, 1.38], grab: false,
  leash_force: 0, displacement: [0, 0, 0], setpoint: [0, 0, 1.5],
  objects: [], events: [],
});

describe("SlingClient", () => {
  it("routes hello and state frames and survives junk", () => {
    const { socket } = fakeSocket();
    const seen: string[] = [];
    const client = new SlingClient("ws://test", {
      onHello: () => seen.push("hello"),
      onFrame: (f) => seen.push(`state:${f.tick}`),
      onStatus: (s) => seen.push(`status:${s}`),
    }, () => socket);
    client.connect();
    socket.onopen?.({});
    socket.onmessage?.({ data: JSON.stringify({
      type: "hello", version: 1, config: {}, config_hash: "x", scene: [],
      physics_rate: 100, broadcast_rate: 30, setpoint: [0, 0, 1.5] }) });
    socket.onmessage?.({ data: "garbage" });
    socket.onmessage?.({ data: FRAME });
    socket.onclose?.({});
    expect(seen).toEqual(
      ["status:connecting", "status:open", "hello", "state:3", "status:closed"]);
  });

  it("serializes inputs and injections onto the socket", () => {
    const { socket, outbox } = fakeSocket();
    const client = new SlingClient("ws://test", {
      onHello: () => undefined,
      onFrame: () => undefined,
      onStatus: () => undefined,
    }, () => socket);
    client.connect();
    client.sendInput([0.1, 0, 1.4], true);
    client.inject([17.5, 0, 0]);
    expect(JSON.parse(outbox[0]!)).toEqual(
      { type: "input", hand: [0.1, 0, 1.4], grab: true });
    expect(JSON.parse(outbox[1]!)).toEqual(
      { type: "inject", accel: [17.5, 0, 0] });
  });
});
