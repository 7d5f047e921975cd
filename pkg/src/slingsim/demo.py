"""Canonical scripted pull-hold-release run used by the CLI and the tests."""
from __future__ import annotations

import dataclasses

from .model import SceneObject, SimConfig, default_config
from .session import InputScript, ScriptEntry

# Hand path: grab just below the hover point, drag outward at 0.02 m/s for 13 s,
# hold, then let go. The slow ramp keeps hand speed well under the release
# threshold, so the release condition trips exactly once, at the let-go.
GRAB_POINT = (0.0, 0.0, 1.38)
PULL_POINT = (-0.26, 0.0, 1.38)

# Where the scripted throw lands (measured by running the script with an empty
# scene; frozen so the fetch target sits directly on the flight path).
BALL_ID = "ball"
BALL_RADIUS = 0.08
BALL_CENTER = (16.22, 0.0, 0.08)


def demo_config() -> SimConfig:
    """Default config with a release threshold sized to the scripted pull.

    The post-release velocity spike scales with the frozen displacement, so the
    stock threshold would never trip for a 0.18 m pull; 0.04 m/s puts the
    crossing about a third of a second after let-go.
    """
    cfg = default_config()
    return dataclasses.replace(
        cfg, thresholds=dataclasses.replace(cfg.thresholds, delta_v=0.04))


def canonical_script() -> InputScript:
    return InputScript(entries=[
        ScriptEntry(t=0.0, position=GRAB_POINT, grab=False),
        ScriptEntry(t=0.5, position=GRAB_POINT, grab=True),
        ScriptEntry(t=13.5, position=PULL_POINT, grab=True),
        ScriptEntry(t=17.0, position=PULL_POINT, grab=True),
        ScriptEntry(t=17.01, position=PULL_POINT, grab=False),
    ])


def demo_scene() -> list[SceneObject]:
    return [SceneObject(id=BALL_ID, center=BALL_CENTER, radius=BALL_RADIUS)]
