"""Interaction state machine: aim, release, fly, search, return."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ballistics import Trajectory
from .model import (Displacement, DroneState, SimConfig, Thresholds, Vec,
                    ValidationError, as_vec3)


class Mode(str, Enum):
    APPROACH = "Approach"
    HOVER = "Hover"
    SLINGSHOT = "Slingshot"
    RECOVERING = "Recovering"
    PROJECTILE = "Projectile"
    SEARCH = "Search"
    RETURN = "Return"
    DELIVERED = "Delivered"
    EMERGENCY_STOP = "EmergencyStop"


LIVE_MODES = tuple(m for m in Mode if m is not Mode.EMERGENCY_STOP)
# modes during which a frozen trajectory must be present
FROZEN_MODES = (Mode.RECOVERING, Mode.PROJECTILE, Mode.SEARCH, Mode.RETURN, Mode.DELIVERED)


class ActionKind(str, Enum):
    UPDATE_TRAJECTORY = "UpdateTrajectory"
    FOLLOW_TRAJECTORY = "FollowTrajectory"
    MOTORS_OFF = "MotorsOff"
    ATTACH_OBJECT = "AttachObject"
    DETACH_OBJECT = "DetachObject"
    WAYPOINT = "Waypoint"


@dataclass
class Action:
    kind: ActionKind
    object_id: str | None = None
    target: Vec | None = None


@dataclass
class FsmEvents:
    """Per-tick facts the session layer feeds into fsm_step."""
    hand_grabbing: bool = False
    attach_id: str | None = None       # object within grab radius (Search only)
    reference_exhausted: bool = False  # follow clock ran past the reference end


@dataclass
class FsmContext:
    setpoint: Vec
    mode: Mode = Mode.APPROACH
    frozen_trajectory: Trajectory | None = None
    last_valid_trajectory: Trajectory | None = None
    grabbed_object: str | None = None
    search_plan: tuple[Vec, ...] | None = None
    search_index: int = 0
    empty_handed: bool = False


def slingshot_condition(disp: Displacement, speed: float, th: Thresholds) -> bool:
    """Aiming is active while the drone is displaced past the dead zone and slow."""
    return disp.magnitude > th.delta_d and speed < th.delta_v


def search_pattern(center: Vec, side: float) -> list[Vec]:
    """Closed square loop of 5 waypoints around center at constant z."""
    c = as_vec3(center, "center")
    if side <= 0:
        raise ValidationError(f"search pattern side must be > 0, got {side}")
    h = side / 2.0
    corners = [(-h, -h), (h, -h), (h, h), (-h, h), (-h, -h)]
    return [np.array([c[0] + dx, c[1] + dy, c[2]]) for dx, dy in corners]


def _near(a: Vec, b: Vec, tol: float) -> bool:
    return float(np.linalg.norm(a - b)) < tol


def fsm_step(ctx: FsmContext, drone: DroneState, disp: Displacement, cfg: SimConfig,
             tilt: float, events: FsmEvents) -> tuple[FsmContext, list[Action]]:
    """Advance the interaction FSM one tick; pure apart from the returned actions.

    The session owns trajectory generation: an UPDATE_TRAJECTORY action asks it
    to regenerate and store the result in last_valid_trajectory before the next
    step. EmergencyStop is absorbing and reachable from every live mode.
    """
    th = cfg.thresholds
    if ctx.mode is Mode.EMERGENCY_STOP:
        return ctx, []
    if tilt > th.tilt_limit:
        new = dataclasses.replace(ctx, mode=Mode.EMERGENCY_STOP, frozen_trajectory=None,
                                  search_plan=None, search_index=0)
        return new, [Action(ActionKind.MOTORS_OFF)]

    actions: list[Action] = []
    mode = ctx.mode
    new = ctx

    if mode is Mode.APPROACH:
        if _near(drone.position, ctx.setpoint, th.delta_d):
            new = dataclasses.replace(ctx, mode=Mode.HOVER)

    elif mode is Mode.HOVER:
        if slingshot_condition(disp, float(np.linalg.norm(drone.velocity)), th):
            new = dataclasses.replace(ctx, mode=Mode.SLINGSHOT)
            actions.append(Action(ActionKind.UPDATE_TRAJECTORY))

    elif mode is Mode.SLINGSHOT:
        speed = float(np.linalg.norm(drone.velocity))
        if slingshot_condition(disp, speed, th):
            actions.append(Action(ActionKind.UPDATE_TRAJECTORY))
        elif speed >= th.delta_v and ctx.last_valid_trajectory is not None:
            # release: the user let go and the drone snaps back; freeze the aim
            new = dataclasses.replace(ctx, mode=Mode.RECOVERING,
                                      frozen_trajectory=ctx.last_valid_trajectory)
        else:
            # eased back under the dead zone without a release spike: no launch
            new = dataclasses.replace(ctx, mode=Mode.HOVER, last_valid_trajectory=None)

    elif mode is Mode.RECOVERING:
        if events.hand_grabbing:
            # re-grab aborts the launch
            new = dataclasses.replace(ctx, mode=Mode.HOVER, frozen_trajectory=None)
        elif disp.magnitude < th.delta_d:
            new = dataclasses.replace(ctx, mode=Mode.PROJECTILE)
            actions.append(Action(ActionKind.FOLLOW_TRAJECTORY))

    elif mode is Mode.PROJECTILE:
        frozen = ctx.frozen_trajectory
        done = events.reference_exhausted or (
            frozen is not None and _near(drone.position, frozen.endpoint, cfg.arrival_tolerance))
        if done and frozen is not None:
            plan = tuple(search_pattern(frozen.endpoint, cfg.search_side))
            new = dataclasses.replace(ctx, mode=Mode.SEARCH, search_plan=plan, search_index=0)
            actions.append(Action(ActionKind.WAYPOINT, target=plan[0]))

    elif mode is Mode.SEARCH:
        if events.attach_id is not None:
            new = dataclasses.replace(ctx, mode=Mode.RETURN, grabbed_object=events.attach_id,
                                      search_plan=None, search_index=0)
            actions.append(Action(ActionKind.ATTACH_OBJECT, object_id=events.attach_id))
        elif ctx.search_plan is not None and _near(
                drone.position, ctx.search_plan[ctx.search_index], cfg.arrival_tolerance):
            nxt = ctx.search_index + 1
            if nxt >= len(ctx.search_plan):
                # full loop without a grab: return empty-handed
                new = dataclasses.replace(ctx, mode=Mode.RETURN, search_plan=None,
                                          search_index=0)
            else:
                new = dataclasses.replace(ctx, search_index=nxt)
                actions.append(Action(ActionKind.WAYPOINT, target=ctx.search_plan[nxt]))

    elif mode is Mode.RETURN:
        if _near(drone.position, ctx.setpoint, cfg.arrival_tolerance):
            new = dataclasses.replace(ctx, mode=Mode.DELIVERED,
                                      empty_handed=ctx.grabbed_object is None)
            if ctx.grabbed_object is not None:
                actions.append(Action(ActionKind.DETACH_OBJECT, object_id=ctx.grabbed_object))
                new = dataclasses.replace(new, grabbed_object=None)

    # DELIVERED absorbs everything except the emergency cutoff above
    return new, actions


def check_context(ctx: FsmContext) -> list[str]:
    """Invariant check used by tests: frozen trajectory presence matches mode."""
    problems: list[str] = []
    has_frozen = ctx.frozen_trajectory is not None
    if ctx.mode in FROZEN_MODES and not has_frozen:
        problems.append(f"{ctx.mode.value}: frozen trajectory missing")
    if ctx.mode not in FROZEN_MODES and has_frozen:
        problems.append(f"{ctx.mode.value}: frozen trajectory unexpectedly present")
    if ctx.mode is Mode.SEARCH and (ctx.search_plan is None or not (
            0 <= ctx.search_index < len(ctx.search_plan))):
        problems.append("Search: waypoint plan missing or index out of range")
    return problems
