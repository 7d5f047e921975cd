/** Entry point: wire the socket, the drag mapping, the scene, and the HUD.
 *
 * Drop a recorded .jsonl session log onto the page to replay it visually
 * (Escape returns to live mode).
 */

import { dragToHand } from "./dragmap.js";
import { SlingClient, type ConnectionStatus } from "./net.js";
import type { Hello, StateFrame, Vec3 } from "./protocol.js";
import { ReplayPlayer, parseLog } from "./replay.js";
import { SceneView } from "./scene.js";

const GRIP_PICK_RADIUS_PX = 48;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node;
}

const view = new SceneView(el("view"));
const badge = el("badge");
const banner = el("banner");
const status = el("status");
const rateBox = el("rate");
const replayBox = el("replay");

let hover: Vec3 = [0, 0, 1.5];
let latest: StateFrame | null = null;
let dragging = false;
let orbiting = false;
let lastPointer = { x: 0, y: 0 };
let inputLocked = false; // set on EmergencyStop
let player: ReplayPlayer | null = null;

// rolling window of trajectory-frame arrival times for the HUD rate readout
const trajArrivals: number[] = [];

function setBadge(mode: string): void {
  badge.textContent = mode;
  badge.dataset.mode = mode;
}

function onHello(hello: Hello): void {
  hover = hello.setpoint;
  view.setObjects(hello.scene);
  setBadge("Approach");
}

function onFrame(frame: StateFrame): void {
  latest = frame;
  if (player !== null) return; // replay owns the screen
  view.applyFrame(frame);
  setBadge(frame.mode);
  if (frame.trajectory !== undefined) trajArrivals.push(performance.now());
  if (frame.mode === "EmergencyStop") {
    inputLocked = true;
    banner.style.display = "block";
  }
  if (frame.mode === "Projectile" || frame.mode === "Search" ||
      frame.mode === "Return") {
    view.follow(frame.drone.pos);
  }
}

function onStatus(s: ConnectionStatus): void {
  status.textContent = s;
  status.dataset.state = s;
}

const params = new URLSearchParams(location.search);
const wsUrl = params.get("server") ??
  `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
const client = new SlingClient(wsUrl, { onHello, onFrame, onStatus });
client.connect();

// --- pointer handling --------------------------------------------------------

const canvas = view.renderer.domElement;
canvas.style.touchAction = "none";

canvas.addEventListener("pointerdown", (ev) => {
  if (player !== null) return;
  const onGrip = view.droneScreenDistance(ev.clientX, ev.clientY) < GRIP_PICK_RADIUS_PX;
  if (onGrip && !inputLocked) {
    dragging = true;
    canvas.setPointerCapture(ev.pointerId);
    sendDrag(ev);
  } else {
    orbiting = true;
    lastPointer = { x: ev.clientX, y: ev.clientY };
  }
});

canvas.addEventListener("pointermove", (ev) => {
  if (dragging) {
    sendDrag(ev);
  } else if (orbiting) {
    view.orbit(ev.clientX - lastPointer.x, ev.clientY - lastPointer.y);
    lastPointer = { x: ev.clientX, y: ev.clientY };
  } else if (player === null) {
    view.setDroneHighlight(
      view.droneScreenDistance(ev.clientX, ev.clientY) < GRIP_PICK_RADIUS_PX);
  }
});

function endDrag(ev: PointerEvent): void {
  if (dragging) {
    dragging = false;
    const ray = view.pointerRay(ev.clientX, ev.clientY);
    const hand = dragToHand(ray, hover) ?? hover;
    client.sendInput(hand, false); // release bypasses the throttle
  }
  orbiting = false;
}

canvas.addEventListener("pointerup", endDrag);
canvas.addEventListener("pointercancel", endDrag);
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  view.zoom(ev.deltaY);
}, { passive: false });

function sendDrag(ev: PointerEvent): void {
  const ray = view.pointerRay(ev.clientX, ev.clientY);
  const hand = dragToHand(ray, hover);
  if (hand !== null) client.sendInput(hand, true);
}

window.addEventListener("keydown", (ev) => {
  if (ev.key === "r") view.recenter();
  if (ev.key === "Escape" && player !== null) exitReplay();
  // fault injection: sideways kick past the tilt envelope, for checking the
  // emergency banner by hand
  if (ev.key === "E" && ev.shiftKey) client.inject([17.5, 0, 0]);
});

// --- log replay --------------------------------------------------------------

window.addEventListener("dragover", (ev) => ev.preventDefault());
window.addEventListener("drop", (ev) => {
  ev.preventDefault();
  const file = ev.dataTransfer?.files[0];
  if (file === undefined) return;
  void file.text().then((text) => {
    try {
      player = new ReplayPlayer(parseLog(text));
    } catch (err) {
      console.warn("not a session log:", err);
      return;
    }
    view.clearTrajectory();
    replayBox.style.display = "block";
    replayBox.textContent = `replaying ${file.name} (Esc to exit)`;
  });
});

function exitReplay(): void {
  player = null;
  replayBox.style.display = "none";
  banner.style.display = inputLocked ? "block" : "none";
  if (latest !== null) {
    view.applyFrame(latest);
    setBadge(latest.mode);
  }
}

// --- render loop ---------------------------------------------------------------

function tick(): void {
  const now = performance.now();
  if (player !== null) {
    const row = player.at(now);
    if (row !== null) {
      view.setPose(row.pos, hover, row.hand, row.grab);
      setBadge(row.mode);
      if (row.mode === "Projectile" || row.mode === "Search" ||
          row.mode === "Return") {
        view.follow(row.pos);
      }
    }
  }
  while (trajArrivals.length > 0 && now - trajArrivals[0]! > 5000) {
    trajArrivals.shift();
  }
  rateBox.textContent = `aim updates: ${(trajArrivals.length / 5).toFixed(1)}/s`;
  view.render();
  requestAnimationFrame(tick);
}

requestAnimationFrame(tick);
