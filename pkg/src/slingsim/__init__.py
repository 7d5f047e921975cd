"""Deterministic simulator of a drone flown like a 3D slingshot.

A hovering quadrotor is pulled on an elastic leash; the pull displacement aims
a drag-aware ballistic arc, and on release the drone recovers, then flies the
frozen arc to find and fetch an object.
"""
from .ballistics import (BallisticState, Termination, Trajectory, drag_accel,
                         generate_trajectory, rk4_step, terminal_velocity,
                         trajectory_hash, write_trajectory_csv)
from .drone import PidState, drone_step, leash_force, pid_command, tilt_estimate
from .fsm import (Action, ActionKind, FsmContext, FsmEvents, Mode, fsm_step,
                  search_pattern, slingshot_condition)
from .model import (BallisticParams, ConfigError, DragMode, DroneState,
                    HandState, LeashConfig, Mapping, PidConfig, PointingConfig,
                    QuadParams, SceneObject, SelectMode, SimConfig, Thresholds,
                    ValidationError, compute_displacement, config_hash,
                    default_config, dumps_config, from_flat, load_config,
                    parse_config_text, scene_from_json, scene_to_json, to_flat,
                    validate_config)
from .pointing import PointingResult, ballistic_target, point, straight_ray_target
from .session import (InputScript, ReplayError, ReplayReport, ScriptEntry,
                      Session, SessionEvent, EventKind, log_lines, replay_log,
                      run_script, script_from_json, script_hash, write_log)
from .trajfit import (FitError, PiecewisePolynomial, ReferencePoint,
                      fit_polynomial, follow_step, poly_from_json, poly_to_json,
                      sample_reference, time_rescale)

__version__ = "0.1.0"

__all__ = [
    "Action", "ActionKind", "BallisticParams", "BallisticState", "ConfigError",
    "DragMode", "DroneState", "EventKind", "FitError", "FsmContext",
    "FsmEvents", "HandState", "InputScript", "LeashConfig", "Mapping", "Mode",
    "PidConfig", "PidState", "PiecewisePolynomial", "PointingConfig",
    "PointingResult", "QuadParams", "ReferencePoint", "ReplayError",
    "ReplayReport", "SceneObject", "ScriptEntry", "SelectMode", "Session",
    "SessionEvent", "SimConfig", "Termination", "Thresholds", "Trajectory",
    "ValidationError", "ballistic_target", "compute_displacement",
    "config_hash", "default_config", "drag_accel", "drone_step", "dumps_config",
    "fit_polynomial", "follow_step", "from_flat", "fsm_step",
    "generate_trajectory", "leash_force", "load_config", "log_lines",
    "parse_config_text", "pid_command", "point", "poly_from_json",
    "poly_to_json", "replay_log", "rk4_step", "run_script", "sample_reference",
    "scene_from_json", "scene_to_json", "script_from_json", "script_hash",
    "search_pattern", "slingshot_condition", "straight_ray_target",
    "terminal_velocity", "tilt_estimate", "time_rescale", "to_flat",
    "trajectory_hash", "validate_config", "write_log", "write_trajectory_csv",
    "__version__",
]
