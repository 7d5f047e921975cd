"""Core domain types, configuration, and the flat config file format."""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

import numpy as np

try:
    import tomllib  # py311+
except ImportError:  # pragma: no cover
    import tomli as tomllib

Vec = np.ndarray  # float64, shape (3,)


class ConfigError(ValueError):
    pass


class ValidationError(ValueError):
    pass


class DragMode(str, Enum):
    # "sine": the published equations taken verbatim (one-sided horizontal drag,
    # sin(vz)-modulated vertical drag). "signum": drag opposes velocity componentwise.
    SINE = "sine"
    SIGNUM = "signum"


class Mapping(str, Enum):
    BALLISTIC_ARC = "ballistic_arc"
    STRAIGHT_RAY = "straight_ray"


class SelectMode(str, Enum):
    # path_entry: first object whose surface the trajectory enters.
    # endpoint: nearest object within tolerance of the trajectory endpoint.
    PATH_ENTRY = "path_entry"
    ENDPOINT = "endpoint"


def vec3(x: float, y: float, z: float) -> Vec:
    return np.array([x, y, z], dtype=np.float64)


def as_vec3(v: Iterable[float], name: str = "vector") -> Vec:
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape != (3,):
        raise ValidationError(f"{name} must have exactly 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite, got {arr.tolist()}")
    return arr


@dataclass(frozen=True)
class BallisticParams:
    rho: float = 1.23            # air density, kg/m^3
    cd: float = 0.4              # drag coefficient
    area_x: float = 0.01         # cross sections, m^2
    area_y: float = 0.01
    area_z: float = 0.01
    mass: float = 10.0           # projectile mass, kg
    g: float = 9.81              # gravity, m/s^2
    drag_mode: DragMode = DragMode.SIGNUM


@dataclass(frozen=True)
class PointingConfig:
    k: float = 95.0              # displacement-to-velocity gain, 1/s
    mapping: Mapping = Mapping.BALLISTIC_ARC
    launch_sign: float = -1.0    # v0 = launch_sign * k * D
    select_mode: SelectMode = SelectMode.PATH_ENTRY
    select_tolerance: float = 0.05  # endpoint-proximity selection radius, m


@dataclass(frozen=True)
class Thresholds:
    delta_d: float = 0.02        # displacement dead zone, m
    delta_v: float = 0.1         # speed ceiling for "still aiming", m/s
    tilt_limit: float = 1.047    # emergency tilt cutoff, rad (~60 deg)


@dataclass(frozen=True)
class PidConfig:
    # per-axis (x, y, z); output is a commanded acceleration in m/s^2
    kp: tuple[float, float, float] = (0.4, 0.4, 1.25)
    kd: tuple[float, float, float] = (0.2, 0.2, 0.4)
    ki: tuple[float, float, float] = (0.05, 0.05, 0.05)
    integral_limit: float = 1.0  # clamp on each integral channel, m*s


@dataclass(frozen=True)
class LeashConfig:
    rest_length: float = 0.1     # m
    stiffness: float = 50.0      # N/m, pure tension spring
    attach_offset: tuple[float, float, float] = (0.0, 0.0, -0.02)  # from drone center


@dataclass(frozen=True)
class QuadParams:
    mass: float = 0.033          # kg
    max_accel: float = 20.0      # norm clamp on commanded acceleration, m/s^2
    drag_coefficient: float = 0.3  # linear damping, 1/s


@dataclass(frozen=True)
class SimConfig:
    ballistic: BallisticParams = field(default_factory=BallisticParams)
    pointing: PointingConfig = field(default_factory=PointingConfig)
    thresholds: Thresholds = field(default_factory=Thresholds)
    pid: PidConfig = field(default_factory=PidConfig)
    leash: LeashConfig = field(default_factory=LeashConfig)
    quad: QuadParams = field(default_factory=QuadParams)
    physics_rate: float = 100.0      # Hz
    broadcast_rate: float = 30.0     # Hz
    search_side: float = 0.15        # side of the square search pattern, m
    rk4_dt: float = 0.001            # ballistic integration step, s
    t_max: float = 10.0              # ballistic integration horizon, s
    slow_factor: float = 3.0         # time rescale applied to the flown trajectory
    segment_duration: float = 0.25   # polynomial fit segment length, s
    arrival_tolerance: float = 0.05  # waypoint / endpoint arrival radius, m
    grab_radius: float = 0.05        # attach distance during search, m
    setpoint: tuple[float, float, float] = (0.0, 0.0, 1.5)  # hover point p_des


@dataclass
class DroneState:
    position: Vec
    velocity: Vec
    time: float = 0.0

    def copy(self) -> "DroneState":
        return DroneState(self.position.copy(), self.velocity.copy(), self.time)


@dataclass
class HandState:
    position: Vec
    grabbing: bool = False


@dataclass(frozen=True)
class Displacement:
    d: Vec
    magnitude: float


@dataclass
class SceneObject:
    id: str
    center: Vec
    radius: float
    grabbed: bool = False

    def __post_init__(self) -> None:
        self.center = as_vec3(self.center, "object center")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValidationError(f"object radius must be positive: {self.radius}")

    def copy(self) -> "SceneObject":
        return SceneObject(self.id, self.center.copy(), self.radius, self.grabbed)


def compute_displacement(position: Iterable[float], setpoint: Iterable[float]) -> Displacement:
    """Displacement D of the drone from its hover setpoint, with cached magnitude."""
    p = as_vec3(position, "position")
    s = as_vec3(setpoint, "setpoint")
    d = p - s
    return Displacement(d=d, magnitude=float(np.linalg.norm(d)))


def default_config() -> SimConfig:
    return SimConfig()


def _check(violations: list[str], ok: bool, expr: str) -> None:
    if not ok:
        violations.append(expr)


def validate_config(cfg: SimConfig) -> list[str]:
    """Return every violated constraint as a field-path expression; empty list means valid."""
    v: list[str] = []
    b = cfg.ballistic
    _check(v, b.rho > 0, "ballistic.rho > 0")
    _check(v, b.cd >= 0, "ballistic.cd >= 0")
    _check(v, b.area_x > 0, "ballistic.area_x > 0")
    _check(v, b.area_y > 0, "ballistic.area_y > 0")
    _check(v, b.area_z > 0, "ballistic.area_z > 0")
    _check(v, b.mass > 0, "ballistic.mass > 0")
    _check(v, b.g > 0, "ballistic.g > 0")
    p = cfg.pointing
    _check(v, p.k > 0, "pointing.k > 0")
    _check(v, abs(p.launch_sign) == 1.0, "pointing.launch_sign in {-1, 1}")
    _check(v, p.select_tolerance >= 0, "pointing.select_tolerance >= 0")
    t = cfg.thresholds
    _check(v, t.delta_d > 0, "thresholds.delta_d > 0")
    _check(v, t.delta_v > 0, "thresholds.delta_v > 0")
    _check(v, 0 < t.tilt_limit < math.pi / 2, "thresholds.tilt_limit in (0, pi/2)")
    g = cfg.pid
    for name, gains in (("kp", g.kp), ("kd", g.kd), ("ki", g.ki)):
        _check(v, len(gains) == 3 and all(x >= 0 for x in gains), f"pid.{name} >= 0 per axis")
    _check(v, g.integral_limit > 0, "pid.integral_limit > 0")
    l = cfg.leash
    _check(v, l.rest_length >= 0, "leash.rest_length >= 0")
    _check(v, l.stiffness > 0, "leash.stiffness > 0")
    _check(v, len(l.attach_offset) == 3, "leash.attach_offset has 3 components")
    q = cfg.quad
    _check(v, q.mass > 0, "quad.mass > 0")
    _check(v, q.max_accel > 0, "quad.max_accel > 0")
    _check(v, q.drag_coefficient >= 0, "quad.drag_coefficient >= 0")
    _check(v, cfg.physics_rate > 0, "physics_rate > 0")
    _check(v, cfg.broadcast_rate > 0, "broadcast_rate > 0")
    _check(v, cfg.physics_rate >= cfg.broadcast_rate, "physics_rate >= broadcast_rate")
    _check(v, cfg.search_side > 0, "search_side > 0")
    _check(v, cfg.rk4_dt > 0, "rk4_dt > 0")
    _check(v, cfg.t_max > cfg.rk4_dt, "t_max > rk4_dt")
    _check(v, cfg.slow_factor >= 1, "slow_factor >= 1")
    _check(v, cfg.segment_duration > cfg.rk4_dt, "segment_duration > rk4_dt")
    _check(v, cfg.arrival_tolerance > 0, "arrival_tolerance > 0")
    _check(v, cfg.grab_radius > 0, "grab_radius > 0")
    sp_ok = len(cfg.setpoint) == 3 and all(math.isfinite(x) for x in cfg.setpoint)
    _check(v, sp_ok, "setpoint is finite")
    _check(v, sp_ok and cfg.setpoint[2] > 0, "setpoint[2] > 0")
    return v


# --- flat key-value config file format -------------------------------------
#
# One dotted key per line mirroring SimConfig field paths, e.g.
#     ballistic.rho = 1.23
#     pointing.mapping = "ballistic_arc"
#     setpoint = [0.0, 0.0, 1.5]
# Parsed as a TOML subset. Unknown keys are errors.

_ENUM_FIELDS = {
    "ballistic.drag_mode": DragMode,
    "pointing.mapping": Mapping,
    "pointing.select_mode": SelectMode,
}

_SECTIONS = {
    "ballistic": BallisticParams,
    "pointing": PointingConfig,
    "thresholds": Thresholds,
    "pid": PidConfig,
    "leash": LeashConfig,
    "quad": QuadParams,
}


def _flat_value(val: Any) -> Any:
    if isinstance(val, Enum):
        return val.value
    if isinstance(val, tuple):
        return list(val)
    return val


def to_flat(cfg: SimConfig) -> dict[str, Any]:
    """Flatten a SimConfig into dotted-path keys with plain JSON-compatible values."""
    flat: dict[str, Any] = {}
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if f.name in _SECTIONS:
            for sub in dataclasses.fields(val):
                flat[f"{f.name}.{sub.name}"] = _flat_value(getattr(val, sub.name))
        else:
            flat[f.name] = _flat_value(val)
    return flat


def _coerce(key: str, raw: Any, current: Any) -> Any:
    if key in _ENUM_FIELDS:
        enum_cls = _ENUM_FIELDS[key]
        try:
            return enum_cls(raw)
        except ValueError:
            allowed = ", ".join(m.value for m in enum_cls)
            raise ConfigError(f"{key}: expected one of [{allowed}], got {raw!r}") from None
    if isinstance(current, tuple):
        if not isinstance(raw, (list, tuple)) or len(raw) != len(current):
            raise ConfigError(f"{key}: expected a list of {len(current)} numbers, got {raw!r}")
        return tuple(float(x) for x in raw)
    if isinstance(current, bool):
        if not isinstance(raw, bool):
            raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
        return raw
    if isinstance(current, float):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {raw!r}")
        return float(raw)
    return raw


def from_flat(flat: dict[str, Any], base: SimConfig | None = None) -> SimConfig:
    """Build a SimConfig from dotted-path keys, overriding `base`. Unknown keys raise."""
    cfg = base or default_config()
    known = to_flat(default_config())
    section_updates: dict[str, dict[str, Any]] = {}
    top_updates: dict[str, Any] = {}
    for key, raw in flat.items():
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
        value = _coerce(key, raw, _unflatten_current(cfg, key))
        if "." in key:
            section, fname = key.split(".", 1)
            section_updates.setdefault(section, {})[fname] = value
        else:
            top_updates[key] = value
    for section, updates in section_updates.items():
        top_updates[section] = dataclasses.replace(getattr(cfg, section), **updates)
    return dataclasses.replace(cfg, **top_updates)


def _unflatten_current(cfg: SimConfig, key: str) -> Any:
    if "." in key:
        section, fname = key.split(".", 1)
        return getattr(getattr(cfg, section), fname)
    return getattr(cfg, key)


def parse_config_text(text: str, base: SimConfig | None = None) -> SimConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    # tomllib turns dotted keys into nested tables; re-flatten one level
    flat: dict[str, Any] = {}
    for key, val in doc.items():
        if isinstance(val, dict):
            for sub, subval in val.items():
                flat[f"{key}.{sub}"] = subval
        else:
            flat[key] = val
    return from_flat(flat, base)


def load_config(path: str, base: SimConfig | None = None) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)


def _format_value(val: Any) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(val)
    if isinstance(val, (list, tuple)):
        return "[" + ", ".join(_format_value(x) for x in val) + "]"
    if isinstance(val, str):
        return f'"{val}"'
    return repr(val)


def dumps_config(cfg: SimConfig) -> str:
    """Canonical flat serialization (sorted keys); stable input for hashing."""
    flat = to_flat(cfg)
    return "\n".join(f"{k} = {_format_value(flat[k])}" for k in sorted(flat)) + "\n"


def config_hash(cfg: SimConfig) -> str:
    return hashlib.sha256(dumps_config(cfg).encode("utf-8")).hexdigest()


# --- scene ------------------------------------------------------------------

def scene_to_json(scene: list[SceneObject]) -> list[dict[str, Any]]:
    return [
        {"id": o.id, "center": [float(x) for x in o.center], "radius": float(o.radius),
         "grabbed": bool(o.grabbed)}
        for o in scene
    ]


def scene_from_json(data: list[dict[str, Any]]) -> list[SceneObject]:
    scene: list[SceneObject] = []
    seen: set[str] = set()
    for entry in data:
        oid = str(entry["id"])
        if oid in seen:
            raise ValidationError(f"duplicate scene object id: {oid}")
        seen.add(oid)
        radius = float(entry["radius"])
        if radius <= 0:
            raise ValidationError(f"scene object {oid}: radius must be > 0")
        scene.append(SceneObject(
            id=oid,
            center=as_vec3(entry["center"], f"scene object {oid} center"),
            radius=radius,
            grabbed=bool(entry.get("grabbed", False)),
        ))
    return scene
