/** WebSocket client: parse/route server messages, rate-limit input sends. */

import { parseMessage, type Hello, type StateFrame, type Vec3 } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface NetHandlers {
  onHello(hello: Hello): void;
  onFrame(frame: StateFrame): void;
  onStatus(status: ConnectionStatus): void;
}

type SendFn = (hand: Vec3, grab: boolean) => void;

/** Latest-wins input limiter: at most maxHz sends per second, except that a
 * grab release goes out immediately (letting go must never lag). */
export class InputThrottle {
  private readonly intervalMs: number;
  private lastSendAt = -Infinity;
  private lastGrabSent = false;
  private pending: { hand: Vec3; grab: boolean } | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly send: SendFn,
    maxHz = 100,
    private readonly now: () => number = () => performance.now(),
    private readonly schedule: (fn: () => void, ms: number) => ReturnType<typeof setTimeout> = (fn, ms) => setTimeout(fn, ms),
    private readonly cancel: (t: ReturnType<typeof setTimeout>) => void = clearTimeout,
  ) {
    this.intervalMs = 1000 / maxHz;
  }

  update(hand: Vec3, grab: boolean): void {
    const release = !grab && this.lastGrabSent;
    const due = this.now() - this.lastSendAt >= this.intervalMs;
    if (release || due) {
      this.emit(hand, grab);
      return;
    }
    this.pending = { hand, grab };
    if (this.timer === null) {
      const wait = this.lastSendAt + this.intervalMs - this.now();
      this.timer = this.schedule(() => {
        this.timer = null;
        if (this.pending !== null) {
          const p = this.pending;
          this.emit(p.hand, p.grab);
        }
      }, Math.max(wait, 0));
    }
  }

  dispose(): void {
    if (this.timer !== null) this.cancel(this.timer);
    this.timer = null;
    this.pending = null;
  }

  private emit(hand: Vec3, grab: boolean): void {
    this.pending = null;
    this.lastSendAt = this.now();
    this.lastGrabSent = grab;
    this.send(hand, grab);
  }
}

interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
}

export class SlingClient {
  private socket: SocketLike | null = null;
  private throttle: InputThrottle | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: NetHandlers,
    private readonly socketFactory: (url: string) => SocketLike =
      (u) => new WebSocket(u) as unknown as SocketLike,
    maxHz = 100,
  ) {
    this.maxHz = maxHz;
  }

  private readonly maxHz: number;

  connect(): void {
    this.handlers.onStatus("connecting");
    const socket = this.socketFactory(this.url);
    this.socket = socket;
    this.throttle = new InputThrottle(
      (hand, grab) => this.rawSend({ type: "input", hand, grab }), this.maxHz);
    socket.onopen = () => this.handlers.onStatus("open");
    socket.onclose = () => this.handlers.onStatus("closed");
    socket.onerror = () => this.handlers.onStatus("closed");
    socket.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      const msg = parseMessage(ev.data);
      if (msg === null) {
        console.warn("dropped malformed server message", ev.data.slice(0, 120));
        return;
      }
      if (msg.type === "hello") this.handlers.onHello(msg);
      else this.handlers.onFrame(msg);
    };
  }

  sendInput(hand: Vec3, grab: boolean): void {
    this.throttle?.update(hand, grab);
  }

  /** One-tick acceleration injection (emergency-stop testing). */
  inject(accel: Vec3): void {
    this.rawSend({ type: "inject", accel });
  }

  close(): void {
    this.throttle?.dispose();
    this.socket?.close();
  }

  private rawSend(payload: Record<string, unknown>): void {
    try {
      this.socket?.send(JSON.stringify(payload));
    } catch {
      // socket closing; the status handler already reflects it
    }
  }
}
