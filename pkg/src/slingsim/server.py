"""WebSocket service: one deterministic session per connection.

Protocol (JSON text frames):
  server -> client   hello    {type, version, config, config_hash, scene,
                               physics_rate, broadcast_rate, setpoint}
                     state    decimated frames from Session.tick
  client -> server   input    {type: "input", hand: [x, y, z], grab: bool}
                     inject   {type: "inject", accel: [x, y, z]}

Inputs are latest-wins: the tick loop always reads the newest message and a
slow client cannot stall physics. With pacing on, ticks run at wall-clock
physics rate; tests turn pacing off and bound the run with max_ticks.
"""
from __future__ import annotations

import asyncio
import json
import time
from typing import Any

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .model import (HandState, SceneObject, SimConfig, config_hash,
                    scene_to_json, to_flat)
from .session import Session

PROTOCOL_VERSION = 1


class _InputBox:
    """Mutable mailbox shared between the reader task and the tick loop."""

    def __init__(self, hand: list[float]):
        self.hand = hand
        self.grab = False
        self.inject: list[float] | None = None
        self.closed = False


def _default_hand(cfg: SimConfig) -> list[float]:
    # straight below the attach point at leash rest length: zero force on grab
    sx, sy, sz = cfg.setpoint
    ox, oy, oz = cfg.leash.attach_offset
    return [sx + ox, sy + oy, sz + oz - cfg.leash.rest_length]


async def _read_loop(ws: WebSocket, box: _InputBox) -> None:
    try:
        while True:
            raw = await ws.receive_text()
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                continue
            kind = msg.get("type")
            if kind == "input":
                hand = msg.get("hand")
                if isinstance(hand, list) and len(hand) == 3:
                    box.hand = [float(x) for x in hand]
                box.grab = bool(msg.get("grab", box.grab))
            elif kind == "inject":
                accel = msg.get("accel")
                if isinstance(accel, list) and len(accel) == 3:
                    box.inject = [float(x) for x in accel]
    except (WebSocketDisconnect, RuntimeError):
        box.closed = True


def make_app(cfg: SimConfig, scene: list[SceneObject] | None = None,
             pacing: bool = True, max_ticks: int | None = None,
             frontend_dir: str | None = None) -> FastAPI:
    app = FastAPI()
    scene = scene or []

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        hello: dict[str, Any] = {
            "type": "hello",
            "version": PROTOCOL_VERSION,
            "config": to_flat(cfg),
            "config_hash": config_hash(cfg),
            "scene": scene_to_json(scene),
            "physics_rate": cfg.physics_rate,
            "broadcast_rate": cfg.broadcast_rate,
            "setpoint": list(cfg.setpoint),
        }
        await ws.send_text(json.dumps(hello, sort_keys=True))
        session = Session(cfg, scene)
        box = _InputBox(_default_hand(cfg))
        reader = asyncio.create_task(_read_loop(ws, box))
        interval = 1.0 / cfg.physics_rate
        next_deadline = time.perf_counter()
        try:
            while not box.closed:
                if max_ticks is not None and session.tick_index >= max_ticks:
                    break
                if box.inject is not None:
                    session.inject_acceleration(np.array(box.inject))
                    box.inject = None
                frame = session.tick(
                    HandState(position=np.array(box.hand), grabbing=box.grab))
                if frame is not None:
                    await ws.send_text(json.dumps(frame, sort_keys=True))
                if pacing:
                    next_deadline += interval
                    delay = next_deadline - time.perf_counter()
                    if delay > 0:
                        await asyncio.sleep(delay)
                    else:
                        next_deadline = time.perf_counter()  # fell behind
                else:
                    await asyncio.sleep(0)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            reader.cancel()
            try:
                await ws.close()
            except RuntimeError:
                pass

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=frontend_dir, html=True))
    return app
