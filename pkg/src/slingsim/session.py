"""Deterministic tick loop, event sourcing, JSONL logs, record/replay."""
from __future__ import annotations

import bisect
import dataclasses
import hashlib
import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator

import numpy as np

from .ballistics import Trajectory, trajectory_hash
from .drone import PidState, drone_step, leash_force, pid_command, tilt_estimate
from .fsm import (Action, ActionKind, FsmContext, FsmEvents, Mode, fsm_step)
from .model import (DroneState, HandState, SceneObject, SimConfig, Vec,
                    ValidationError, as_vec3, compute_displacement, config_hash,
                    from_flat, scene_from_json, scene_to_json, to_flat,
                    validate_config)
from .pointing import point
from .trajfit import (PiecewisePolynomial, blend_onto, fit_polynomial,
                      follow_step, sample_reference, time_rescale, FitError)

LOG_VERSION = 1
CARRY_OFFSET = np.array([0.0, 0.0, -0.03])  # carried object rides just below the drone


class EventKind(str, Enum):
    INPUT = "Input"
    MODE_CHANGE = "ModeChange"
    TRAJECTORY_UPDATE = "TrajectoryUpdate"
    LAUNCH = "Launch"
    ATTACH = "Attach"
    DELIVER = "Deliver"
    EMERGENCY = "Emergency"


@dataclass
class SessionEvent:
    tick: int
    t: float
    kind: EventKind
    payload: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {"kind": "event", "tick": self.tick, "t": self.t,
                "event": self.kind.value, "payload": self.payload}


@dataclass
class TickRecord:
    tick: int
    t: float
    hand: list[float]
    grab: bool
    pos: list[float]
    vel: list[float]
    mode: str
    hash: str

    def to_json(self) -> dict[str, Any]:
        return {"kind": "tick", "tick": self.tick, "t": self.t, "hand": self.hand,
                "grab": self.grab, "pos": self.pos, "vel": self.vel,
                "mode": self.mode, "hash": self.hash}


# --- input scripts -----------------------------------------------------------

@dataclass
class ScriptEntry:
    t: float
    position: tuple[float, float, float]
    grab: bool


@dataclass
class InputScript:
    entries: list[ScriptEntry]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValidationError("input script needs at least one entry")
        prev = -np.inf
        for e in self.entries:
            if not np.isfinite(e.t) or e.t < prev:
                raise ValidationError("script entry times must be finite and non-decreasing")
            as_vec3(e.position, "script entry position")
            prev = e.t

    @property
    def duration(self) -> float:
        return self.entries[-1].t

    def hand_at(self, t: float) -> HandState:
        """Positions interpolate linearly between entries; grab is a step function
        that takes effect exactly at its entry time."""
        entries = self.entries
        if t <= entries[0].t:
            e = entries[0]
            return HandState(position=np.array(e.position), grabbing=e.grab)
        if t >= entries[-1].t:
            e = entries[-1]
            return HandState(position=np.array(e.position), grabbing=e.grab)
        i = bisect.bisect_right([e.t for e in entries], t) - 1
        lo = entries[i]
        hi = entries[i + 1]
        span = hi.t - lo.t
        frac = 0.0 if span == 0.0 else (t - lo.t) / span
        pos = (1.0 - frac) * np.array(lo.position) + frac * np.array(hi.position)
        return HandState(position=pos, grabbing=lo.grab)

    def to_json(self) -> dict[str, Any]:
        return {"version": 1, "entries": [
            {"t": e.t, "pos": list(e.position), "grab": e.grab} for e in self.entries]}


def script_from_json(data: dict[str, Any]) -> InputScript:
    if data.get("version") != 1:
        raise ValidationError(f"unsupported script version: {data.get('version')}")
    entries = [ScriptEntry(t=float(e["t"]), position=tuple(float(x) for x in e["pos"]),
                           grab=bool(e["grab"])) for e in data["entries"]]
    return InputScript(entries=entries)


def script_hash(script: InputScript) -> str:
    blob = json.dumps(script.to_json(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# --- session ------------------------------------------------------------------

@dataclass
class FollowState:
    poly: PiecewisePolynomial
    t0: float  # absolute session time when the reference clock started


class Session:
    """Single-owner deterministic world; all time is tick_index / physics_rate."""

    def __init__(self, cfg: SimConfig, scene: list[SceneObject] | None = None,
                 start_position: Vec | None = None):
        violations = validate_config(cfg)
        if violations:
            raise ValidationError("invalid config: " + "; ".join(violations))
        self.cfg = cfg
        self.scene: list[SceneObject] = [o.copy() for o in (scene or [])]
        seen = set()
        for o in self.scene:
            if o.id in seen:
                raise ValidationError(f"duplicate scene object id: {o.id}")
            seen.add(o.id)
        self.initial_scene_json = scene_to_json(self.scene)
        self.setpoint = np.array(cfg.setpoint, dtype=np.float64)
        start = self.setpoint.copy() if start_position is None else as_vec3(start_position)
        self.drone = DroneState(position=start, velocity=np.zeros(3), time=0.0)
        self.ctx = FsmContext(setpoint=self.setpoint.copy())
        self.pid = PidState.zero()
        self.follow: FollowState | None = None
        self._fitted: PiecewisePolynomial | None = None
        self.tick_index = 0
        self.events: list[SessionEvent] = []
        self.records: list[TickRecord] = []
        self._injected: Vec | None = None
        self._last_grab = False
        self._frame_events: list[SessionEvent] = []
        self._sent_traj_hash: str | None = None
        self._broadcast_every = max(1, round(cfg.physics_rate / cfg.broadcast_rate))
        self.dt = 1.0 / cfg.physics_rate

    # -- public controls

    def inject_acceleration(self, accel: Vec) -> None:
        """One-shot fault injection: next tick's command bypasses PID and clamp."""
        self._injected = as_vec3(accel, "injected acceleration")

    def find_object(self, object_id: str) -> SceneObject:
        for o in self.scene:
            if o.id == object_id:
                return o
        raise KeyError(object_id)

    # -- core loop

    def tick(self, hand: HandState) -> dict[str, Any] | None:
        cfg = self.cfg
        dt = self.dt
        self.tick_index += 1
        t = self.tick_index * dt
        mode = self.ctx.mode

        cmd = self._control_command(mode, t)
        if self._injected is not None:
            cmd = self._injected
            self._injected = None
        tilt = tilt_estimate(cmd, cfg.ballistic.g)

        attach = self.drone.position + np.array(cfg.leash.attach_offset)
        force = leash_force(hand, attach, cfg.leash)

        self.drone = drone_step(self.drone, cmd, force, cfg.quad, dt)
        if self.drone.position[2] < 0.0:  # floor is rigid
            self.drone.position[2] = 0.0
            self.drone.velocity[:] = 0.0

        disp = compute_displacement(self.drone.position, self.setpoint)
        events = FsmEvents(
            hand_grabbing=hand.grabbing,
            attach_id=self._attach_candidate() if mode is Mode.SEARCH else None,
            reference_exhausted=self._reference_exhausted(mode, t),
        )
        prev_ctx = self.ctx
        self.ctx, actions = fsm_step(self.ctx, self.drone, disp, cfg, tilt, events)
        self._apply_actions(actions, disp, tilt, t)
        if self.ctx.mode is not prev_ctx.mode:
            self._on_mode_change(prev_ctx.mode, self.ctx.mode, t)
        if hand.grabbing != self._last_grab:
            self._emit(EventKind.INPUT, t, {"grab": hand.grabbing,
                                            "hand": [float(x) for x in hand.position]})
            self._last_grab = hand.grabbing
        if self.ctx.grabbed_object is not None:
            carried = self.find_object(self.ctx.grabbed_object)
            carried.center = self.drone.position + CARRY_OFFSET

        record = TickRecord(
            tick=self.tick_index, t=t,
            hand=[float(x) for x in hand.position], grab=bool(hand.grabbing),
            pos=[float(x) for x in self.drone.position],
            vel=[float(x) for x in self.drone.velocity],
            mode=self.ctx.mode.value, hash=self.state_hash(),
        )
        self.records.append(record)

        if self.tick_index % self._broadcast_every == 0:
            return self._build_frame(t, hand, force)
        return None

    def _control_command(self, mode: Mode, t: float) -> Vec:
        cfg = self.cfg
        if mode is Mode.EMERGENCY_STOP:
            # motors off: no thrust, so the gravity-compensated command is -g
            self.pid = PidState.zero()
            return np.array([0.0, 0.0, -cfg.ballistic.g])
        if mode is Mode.PROJECTILE and self.follow is not None:
            ref = sample_reference(self.follow.poly, t - self.follow.t0)
            cmd, self.pid = follow_step(
                ref, self.drone, cfg.pid, self.pid, self.dt,
                integral_enabled=True, accel_limit=cfg.quad.max_accel,
                drag_comp=cfg.quad.drag_coefficient)
            return cmd
        target = self.setpoint
        if mode is Mode.SEARCH and self.ctx.search_plan is not None:
            target = self.ctx.search_plan[self.ctx.search_index]
        integral_on = mode in (Mode.APPROACH, Mode.PROJECTILE, Mode.SEARCH, Mode.RETURN)
        cmd, self.pid = pid_command(
            target - self.drone.position, -self.drone.velocity, self.pid, cfg.pid,
            self.dt, integral_enabled=integral_on, accel_limit=cfg.quad.max_accel)
        return cmd

    def _reference_exhausted(self, mode: Mode, t: float) -> bool:
        if mode is not Mode.PROJECTILE:
            return False
        if self.follow is None:
            return True
        return (t - self.follow.t0) >= self.follow.poly.duration

    def _attach_candidate(self) -> str | None:
        best_id: str | None = None
        best_gap = self.cfg.grab_radius
        for o in self.scene:
            if o.grabbed:
                continue
            gap = float(np.linalg.norm(self.drone.position - o.center)) - o.radius
            if gap <= best_gap:
                best_gap = gap
                best_id = o.id
        return best_id

    def _apply_actions(self, actions: list[Action], disp, tilt: float, t: float) -> None:
        for action in actions:
            if action.kind is ActionKind.UPDATE_TRAJECTORY:
                result = point(self.setpoint, disp.d, self.scene, self.cfg)
                if result.trajectory is None:
                    continue
                self.ctx = dataclasses.replace(
                    self.ctx, last_valid_trajectory=result.trajectory)
                self._emit(EventKind.TRAJECTORY_UPDATE, t, {
                    "hash": trajectory_hash(result.trajectory),
                    "termination": result.trajectory.termination.value,
                    "endpoint": [float(x) for x in result.trajectory.endpoint],
                    "object_id": result.selected_object,
                    "n_samples": int(result.trajectory.samples.shape[0]),
                })
            elif action.kind is ActionKind.FOLLOW_TRAJECTORY:
                frozen = self.ctx.frozen_trajectory
                if self._fitted is not None and frozen is not None:
                    # run up onto the moving reference; grow the run-up until
                    # its own accel demand leaves headroom for PID correction
                    start = sample_reference(self._fitted, 0.0)
                    dv = float(np.linalg.norm(start.velocity - self.drone.velocity))
                    lead = max(1.0, 3.0 * dv / self.cfg.quad.max_accel)
                    budget = 0.6 * self.cfg.quad.max_accel
                    for _ in range(8):
                        poly = blend_onto(self._fitted, self.drone.position,
                                          self.drone.velocity, lead)
                        peak = max(
                            float(np.linalg.norm(sample_reference(poly, tau).accel))
                            for tau in np.linspace(0.0, lead, 64))
                        if peak <= budget:
                            break
                        lead *= 1.4
                    self.follow = FollowState(poly=poly, t0=t)
                    self._emit(EventKind.LAUNCH, t, {
                        "trajectory_hash": trajectory_hash(frozen),
                        "reference_duration": poly.duration,
                        "runup_duration": lead,
                        "slow_factor": self.cfg.slow_factor,
                    })
            elif action.kind is ActionKind.MOTORS_OFF:
                self._emit(EventKind.EMERGENCY, t, {"tilt": tilt})
            elif action.kind is ActionKind.ATTACH_OBJECT and action.object_id:
                self.find_object(action.object_id).grabbed = True
                self._emit(EventKind.ATTACH, t, {"object_id": action.object_id})
            elif action.kind is ActionKind.DETACH_OBJECT and action.object_id:
                obj = self.find_object(action.object_id)
                obj.grabbed = False
                obj.center = self.drone.position + CARRY_OFFSET
            # WAYPOINT actions are navigation telemetry; no event kind exists for them

    def _on_mode_change(self, old: Mode, new: Mode, t: float) -> None:
        self._emit(EventKind.MODE_CHANGE, t, {"from": old.value, "to": new.value})
        if new is Mode.RECOVERING:
            # freeze: fit the flight reference once, here
            self._fitted = None
            frozen = self.ctx.frozen_trajectory
            if frozen is not None:
                try:
                    poly = fit_polynomial(frozen, self.cfg.segment_duration)
                    self._fitted = time_rescale(poly, self.cfg.slow_factor)
                except FitError:
                    self._fitted = None
        elif new is Mode.HOVER:
            self.follow = None
            self._fitted = None
        elif new is Mode.DELIVERED:
            delivered = next((e.payload.get("object_id") for e in reversed(self.events)
                              if e.kind is EventKind.ATTACH), None)
            self._emit(EventKind.DELIVER, t, {
                "object_id": None if self.ctx.empty_handed else delivered,
                "empty_handed": self.ctx.empty_handed,
            })

    def _emit(self, kind: EventKind, t: float, payload: dict[str, Any]) -> None:
        ev = SessionEvent(tick=self.tick_index, t=t, kind=kind, payload=payload)
        self.events.append(ev)
        self._frame_events.append(ev)

    # -- hashing / wire

    def state_hash(self) -> str:
        h = hashlib.sha256()
        h.update(struct.pack("<q", self.tick_index))
        h.update(np.ascontiguousarray(self.drone.position).tobytes())
        h.update(np.ascontiguousarray(self.drone.velocity).tobytes())
        h.update(self.ctx.mode.value.encode())
        h.update(struct.pack("<q", self.ctx.search_index))
        h.update((self.ctx.grabbed_object or "").encode())
        frozen = self.ctx.frozen_trajectory
        h.update(trajectory_hash(frozen).encode() if frozen is not None else b"-")
        h.update(struct.pack("<d", self.follow.t0 if self.follow else -1.0))
        for o in self.scene:
            h.update(o.id.encode())
            h.update(np.ascontiguousarray(o.center).tobytes())
            h.update(b"\x01" if o.grabbed else b"\x00")
        return h.hexdigest()

    def _active_trajectory(self) -> Trajectory | None:
        if self.ctx.frozen_trajectory is not None:
            return self.ctx.frozen_trajectory
        return self.ctx.last_valid_trajectory

    def _build_frame(self, t: float, hand: HandState, force: Vec) -> dict[str, Any]:
        frame: dict[str, Any] = {
            "type": "state",
            "tick": self.tick_index,
            "t": t,
            "mode": self.ctx.mode.value,
            "drone": {"pos": [float(x) for x in self.drone.position],
                      "vel": [float(x) for x in self.drone.velocity]},
            "hand": [float(x) for x in hand.position],
            "grab": bool(hand.grabbing),
            "leash_force": float(np.linalg.norm(force)),
            "displacement": [float(x) for x in self.drone.position - self.setpoint],
            "setpoint": [float(x) for x in self.setpoint],
            "objects": scene_to_json(self.scene),
            "events": [e.to_json() for e in self._frame_events],
        }
        self._frame_events = []
        active = self._active_trajectory()
        if active is not None:
            h = trajectory_hash(active)
            if h != self._sent_traj_hash:
                frame["trajectory"] = _wire_polyline(active)
                self._sent_traj_hash = h
        return frame


def _wire_polyline(traj: Trajectory, max_points: int = 120) -> list[list[float]]:
    pos = traj.positions
    if pos.shape[0] > max_points - 1:
        idx = np.unique(np.linspace(0, pos.shape[0] - 1, max_points - 1).astype(int))
        pos = pos[idx]
    pts = [[float(x) for x in row] for row in pos]
    pts.append([float(x) for x in traj.endpoint])
    return pts


# --- scripted runs and logs ---------------------------------------------------

TERMINAL_MODES = (Mode.DELIVERED, Mode.EMERGENCY_STOP)


def run_script(script: InputScript, cfg: SimConfig,
               scene: list[SceneObject] | None = None,
               max_time: float = 120.0, stop_on_terminal: bool = True) -> Session:
    """Run a scripted session to a terminal mode (or max_time); returns the session
    with its events and tick records populated."""
    session = Session(cfg, scene)
    n_ticks = int(round(max_time * cfg.physics_rate))
    for i in range(1, n_ticks + 1):
        t = i * session.dt
        session.tick(script.hand_at(t))
        if stop_on_terminal and session.ctx.mode in TERMINAL_MODES:
            break
    return session


def _json_line(obj: dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def log_lines(session: Session, script: InputScript | None = None) -> Iterator[str]:
    """JSONL event log: header, then tick records with their events interleaved."""
    header = {
        "kind": "header",
        "version": LOG_VERSION,
        "config": to_flat(session.cfg),
        "config_hash": config_hash(session.cfg),
        "scene": session.initial_scene_json,
        "script_hash": script_hash(script) if script is not None else None,
    }
    yield _json_line(header)
    by_tick: dict[int, list[SessionEvent]] = {}
    for ev in session.events:
        by_tick.setdefault(ev.tick, []).append(ev)
    for rec in session.records:
        yield _json_line(rec.to_json())
        for ev in by_tick.get(rec.tick, []):
            yield _json_line(ev.to_json())


def write_log(session: Session, path: str, script: InputScript | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in log_lines(session, script):
            fh.write(line + "\n")


@dataclass
class ReplayReport:
    ok: bool
    ticks_checked: int
    first_divergence: int | None = None
    reason: str | None = None


class ReplayError(ValueError):
    pass


def replay_log(path: str, expected_cfg: SimConfig | None = None) -> ReplayReport:
    """Re-run the logged inputs and verify every tick hash and state field."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("kind") != "header":
        raise ReplayError("log has no header line")
    header = lines[0]
    if header.get("version") != LOG_VERSION:
        raise ReplayError(f"unsupported log version: {header.get('version')}")
    cfg = from_flat(header["config"])
    if config_hash(cfg) != header["config_hash"]:
        raise ReplayError("header config does not match its recorded hash")
    if expected_cfg is not None and config_hash(expected_cfg) != header["config_hash"]:
        raise ReplayError("log was recorded under a different config")
    scene = scene_from_json(header["scene"])
    session = Session(cfg, scene)
    checked = 0
    for row in lines[1:]:
        if row.get("kind") != "tick":
            continue
        session.tick(HandState(position=np.array(row["hand"]), grabbing=bool(row["grab"])))
        rec = session.records[-1]
        for fname in ("hash", "mode", "pos", "vel"):
            if getattr(rec, fname) != row[fname]:
                return ReplayReport(ok=False, ticks_checked=checked,
                                    first_divergence=row["tick"],
                                    reason=f"{fname} diverged at tick {row['tick']}")
        checked += 1
    return ReplayReport(ok=True, ticks_checked=checked)
