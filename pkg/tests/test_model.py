"""Config defaults, validation, flat round trips, scene serialization."""
import dataclasses
import math

import numpy as np
import pytest

from slingsim.model import (BallisticParams, ConfigError, DragMode, Mapping,
                            SceneObject, SelectMode, ValidationError, as_vec3,
                            compute_displacement, config_hash, default_config,
                            dumps_config, from_flat, parse_config_text,
                            scene_from_json, scene_to_json, to_flat,
                            validate_config)


def test_published_constant_defaults():
    cfg = default_config()
    b = cfg.ballistic
    assert b.rho == 1.23
    assert b.cd == 0.4
    assert (b.area_x, b.area_y, b.area_z) == (0.01, 0.01, 0.01)
    assert b.mass == 10.0
    assert b.g == 9.81
    assert b.drag_mode is DragMode.SIGNUM
    assert cfg.pointing.k == 95.0
    assert cfg.thresholds.delta_d == 0.02
    assert cfg.thresholds.delta_v == 0.1
    assert cfg.pid.kp == (0.4, 0.4, 1.25)
    assert cfg.pid.kd == (0.2, 0.2, 0.4)
    assert cfg.pid.ki == (0.05, 0.05, 0.05)
    assert cfg.physics_rate == 100.0
    assert cfg.broadcast_rate == 30.0
    assert cfg.leash.rest_length == 0.1
    assert cfg.search_side == 0.15
    assert cfg.setpoint == (0.0, 0.0, 1.5)
    assert cfg.rk4_dt == 0.001
    assert cfg.t_max == 10.0
    assert cfg.slow_factor == 3.0


def test_default_config_validates_clean():
    assert validate_config(default_config()) == []


@pytest.mark.parametrize("mutate,expr", [
    (lambda c: dataclasses.replace(c, ballistic=dataclasses.replace(c.ballistic, mass=0.0)),
     "ballistic.mass > 0"),
    (lambda c: dataclasses.replace(c, physics_rate=10.0, broadcast_rate=30.0),
     "physics_rate >= broadcast_rate"),
    (lambda c: dataclasses.replace(c, thresholds=dataclasses.replace(c.thresholds, tilt_limit=2.0)),
     "thresholds.tilt_limit in (0, pi/2)"),
    (lambda c: dataclasses.replace(c, setpoint=(0.0, 0.0, -1.0)),
     "setpoint[2] > 0"),
    (lambda c: dataclasses.replace(c, rk4_dt=0.0), "rk4_dt > 0"),
])
def test_validation_names_the_violated_constraint(mutate, expr):
    violations = validate_config(mutate(default_config()))
    assert expr in violations


def test_flat_round_trip_identity():
    cfg = default_config()
    assert from_flat(to_flat(cfg)) == cfg


def test_flat_override_and_unknown_key():
    cfg = from_flat({"thresholds.delta_v": 0.04, "ballistic.drag_mode": "sine"})
    assert cfg.thresholds.delta_v == 0.04
    assert cfg.ballistic.drag_mode is DragMode.SINE
    with pytest.raises(ConfigError, match="unknown config key"):
        from_flat({"no.such.key": 1})
    with pytest.raises(ConfigError):
        from_flat({"ballistic.mass": "heavy"})


def test_parse_config_text_toml_sections_and_flat_keys():
    cfg = parse_config_text(
        "[thresholds]\ndelta_v = 0.04\n\n[pointing]\nmapping = \"straight_ray\"\n")
    assert cfg.thresholds.delta_v == 0.04
    assert cfg.pointing.mapping is Mapping.STRAIGHT_RAY
    flat = parse_config_text('"thresholds.delta_d" = 0.03\n')
    assert flat.thresholds.delta_d == 0.03


def test_config_hash_tracks_content():
    a = default_config()
    b = from_flat({"pointing.k": 96.0})
    assert config_hash(a) == config_hash(default_config())
    assert config_hash(a) != config_hash(b)
    # canonical text form parses back to the same config
    assert parse_config_text(dumps_config(b)) == b


def test_scene_json_round_trip():
    scene = [SceneObject(id="a", center=(1.0, 2.0, 3.0), radius=0.5),
             SceneObject(id="b", center=(0.0, 0.0, 0.1), radius=0.1, grabbed=True)]
    back = scene_from_json(scene_to_json(scene))
    assert [o.id for o in back] == ["a", "b"]
    assert np.allclose(back[0].center, (1.0, 2.0, 3.0))
    assert back[1].grabbed is True


def test_scene_rejects_duplicates_and_bad_radius():
    with pytest.raises(ValidationError):
        scene_from_json([{"id": "a", "center": [0, 0, 0], "radius": 1.0},
                         {"id": "a", "center": [1, 1, 1], "radius": 1.0}])
    with pytest.raises(ValidationError):
        SceneObject(id="x", center=(0, 0, 0), radius=0.0)


def test_as_vec3_rejects_bad_input():
    with pytest.raises(ValidationError):
        as_vec3([1.0, 2.0], "short")
    with pytest.raises(ValidationError):
        as_vec3([1.0, math.nan, 3.0], "nan")


def test_compute_displacement():
    disp = compute_displacement((1.0, 2.0, 2.0), (1.0, 2.0, 1.5))
    assert np.allclose(disp.d, (0.0, 0.0, 0.5))
    assert disp.magnitude == 0.5


def test_select_mode_and_drag_mode_values():
    # wire names are load-bearing: config files and logs carry these strings
    assert DragMode.SINE.value == "sine"
    assert DragMode.SIGNUM.value == "signum"
    assert Mapping.BALLISTIC_ARC.value == "ballistic_arc"
    assert Mapping.STRAIGHT_RAY.value == "straight_ray"
    assert SelectMode.PATH_ENTRY.value == "path_entry"
    assert SelectMode.ENDPOINT.value == "endpoint"


def test_ballistic_params_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        default_config().ballistic.mass = 1.0  # type: ignore[misc]


def test_terminal_speed_guard_value():
    b = BallisticParams()
    assert b.rho * b.cd * b.area_z > 0
