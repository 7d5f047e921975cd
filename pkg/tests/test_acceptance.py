"""Release gate: one test per acceptance criterion, one verdict line each.

Each test is self-contained and carries its own oracle; run with -v to get a
pass/fail line per criterion.
"""
import dataclasses
import json
import math
import time

import numpy as np
import pytest

from slingsim.ballistics import (Termination, drag_accel, drag_accel_sine,
                                 generate_trajectory, terminal_velocity)
from slingsim.demo import canonical_script, demo_config, demo_scene
from slingsim.drone import PidState, drone_step
from slingsim.fsm import LIVE_MODES, Mode, Thresholds, slingshot_condition
from slingsim.model import (DroneState, HandState, compute_displacement,
                            default_config)
from slingsim.session import (Session, log_lines, replay_log, run_script,
                              write_log)
from slingsim.trajfit import (NUM_COEFFS, fit_polynomial, follow_step,
                              sample_reference, time_rescale)

CFG = default_config()
SETPOINT = np.array(CFG.setpoint)


@pytest.fixture(scope="module", autouse=True)
def warm_integrator():
    # pay any jit compilation before the timed assertions below
    generate_trajectory(SETPOINT, np.array([-0.01, 0.0, 0.0]), [], CFG)


@pytest.fixture(scope="module")
def demo_run():
    return run_script(canonical_script(), demo_config(), demo_scene())


def default_arc():
    # displacement -0.1 m along x at gain 95 launches at exactly 9.5 m/s
    return generate_trajectory(SETPOINT, np.array([-0.1, 0.0, 0.0]), [], CFG)


def test_drag_free_arc_matches_closed_form_parabola():
    free = dataclasses.replace(
        CFG, ballistic=dataclasses.replace(CFG.ballistic, cd=0.0))
    started = time.perf_counter()
    traj = generate_trajectory(SETPOINT, np.array([-0.1, 0.0, 0.0]), [], free)
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0

    # free fall from 1.5 m at 9.5 m/s horizontal
    t_land = math.sqrt(2.0 * 1.5 / 9.81)
    x_land = 9.5 * t_land
    assert traj.termination is Termination.GROUND
    last = traj.samples[-1]
    measured_t = float(last[0] + last[3] / -last[6])  # refine below the grid
    assert abs(measured_t - t_land) < 1e-4
    assert abs(traj.endpoint[0] - x_land) < 1e-3

    ts = traj.times
    parabola = np.stack(
        [9.5 * ts, np.zeros_like(ts), 1.5 - 0.5 * 9.81 * ts ** 2], axis=1)
    assert float(np.max(np.abs(traj.positions - parabola))) < 1e-6


def test_default_config_carries_the_reference_constants():
    b = CFG.ballistic
    assert b.rho == 1.23
    assert b.cd == 0.4
    assert b.area_x == 0.01 and b.area_y == 0.01 and b.area_z == 0.01
    assert b.mass == 10.0
    assert b.g == 9.81
    assert CFG.pointing.k == 95.0
    assert CFG.thresholds.delta_d == 0.02
    assert CFG.leash.rest_length == 0.1
    assert CFG.search_side == 0.15
    assert CFG.physics_rate == 100.0
    assert CFG.broadcast_rate == 30.0
    assert CFG.pid.kp == (0.4, 0.4, 1.25)
    assert CFG.pid.kd == (0.2, 0.2, 0.4)
    assert CFG.pid.ki == (0.05, 0.05, 0.05)


def test_drag_dissipates_and_terminal_velocity_converges():
    started = time.perf_counter()
    b = CFG.ballistic
    gravity = np.array([0.0, 0.0, -b.g])
    rng = np.random.default_rng(20260814)
    for _ in range(100):
        p0 = rng.uniform([-5.0, -5.0, 0.5], [5.0, 5.0, 4.0])
        d = rng.uniform(-0.15, 0.15, size=3)
        d[2] = abs(d[2]) + 0.01  # pull down or level: launches fly, not soar
        traj = generate_trajectory(p0, d, [], CFG)
        for v in traj.velocities:
            drag = drag_accel(v, b) - gravity
            assert np.all(drag * v <= 0.0)  # each axis only removes energy

    # a long fall settles onto the closed-form terminal speed
    drop_cfg = dataclasses.replace(CFG, t_max=60.0)
    drop = generate_trajectory(
        np.array([0.0, 0.0, 12000.0]), np.array([0.0, 0.0, 1e-6]), [], drop_cfg)
    assert drop.termination is Termination.TIMEOUT
    settled = float(-drop.velocities[-1, 2])
    oracle = terminal_velocity(b)  # sqrt(2 m g / (rho cd Az)) = 199.69 m/s
    assert abs(oracle - 199.69) < 0.005
    assert abs(settled - oracle) / oracle < 0.01
    assert time.perf_counter() - started < 10.0


def test_sine_mode_matches_symbolic_oracle():
    sympy = pytest.importorskip("sympy")
    vx, vy, vz = sympy.symbols("vx vy vz")
    rho, cd, m, g = (sympy.Rational(123, 100), sympy.Rational(2, 5),
                     sympy.Integer(10), sympy.Rational(981, 100))
    area = sympy.Rational(1, 100)
    exprs = (
        -rho * cd * area * vx ** 2 / (2 * m),
        -rho * cd * area * vy ** 2 / (2 * m),
        (-sympy.Rational(1, 2) * rho * cd * area * vz ** 2 * sympy.sin(vz)
         - m * g) / m,
    )
    rng = np.random.default_rng(7)
    for _ in range(20):
        v = rng.uniform(-25.0, 25.0, size=3)
        got = drag_accel_sine(v, CFG.ballistic)
        want = [float(e.evalf(30, subs={vx: v[0], vy: v[1], vz: v[2]}))
                for e in exprs]
        np.testing.assert_allclose(got, want, rtol=1e-12)


def test_canonical_run_walks_the_chain_once_and_freezes_the_aim(demo_run):
    changes = [e for e in demo_run.events if e.kind.value == "ModeChange"]
    walked = [changes[0].payload["from"]] + [c.payload["to"] for c in changes]
    assert walked == ["Approach", "Hover", "Slingshot", "Recovering",
                      "Projectile", "Search", "Return", "Delivered"]

    launches = [e for e in demo_run.events if e.kind.value == "Launch"]
    updates = [e for e in demo_run.events
               if e.kind.value == "TrajectoryUpdate"]
    assert len(launches) == 1
    assert launches[0].payload["trajectory_hash"] == updates[-1].payload["hash"]

    th = Thresholds(delta_d=0.02, delta_v=0.1)
    for mag in (0.0, 0.019, 0.021, 0.3):
        for speed in (0.05, 0.2):
            disp = compute_displacement(SETPOINT + np.array([mag, 0.0, 0.0]),
                                        SETPOINT)
            expected = mag > 0.02 and speed < 0.1
            assert slingshot_condition(disp, speed, th) is expected


def test_fit_stays_on_the_samples_and_is_smooth_at_the_knots():
    traj = default_arc()
    poly = fit_polynomial(traj, CFG.segment_duration)
    fitted = np.array([sample_reference(poly, float(t)).position
                       for t in traj.times])
    assert float(np.max(np.abs(fitted - traj.positions))) < 0.01

    def eval_at(c, tau):
        pos = np.zeros(3)
        vel = np.zeros(3)
        for j in range(NUM_COEFFS - 1, -1, -1):
            if j >= 1:
                vel = vel * tau + j * c[:, j]
            pos = pos * tau + c[:, j]
        return pos, vel

    # one-sided limits evaluated exactly at each interior knot
    for s in range(poly.n_segments - 1):
        seg_len = float(poly.knots[s + 1] - poly.knots[s])
        p_left, v_left = eval_at(poly.coeffs[s], seg_len)
        p_right, v_right = eval_at(poly.coeffs[s + 1], 0.0)
        assert float(np.max(np.abs(p_left - p_right))) < 1e-9
        assert float(np.max(np.abs(v_left - v_right))) < 1e-9


def test_drone_tracks_the_slowed_arc_inside_tolerance():
    poly = time_rescale(fit_polynomial(default_arc(), CFG.segment_duration),
                        CFG.slow_factor)
    start = sample_reference(poly, 0.0)
    drone = DroneState(position=start.position.copy(),
                       velocity=start.velocity.copy(), time=0.0)
    pid = PidState.zero()
    dt = 1.0 / CFG.physics_rate
    worst = 0.0
    for i in range(1, int(poly.duration / dt) + 1):
        ref = sample_reference(poly, i * dt)
        cmd, pid = follow_step(ref, drone, CFG.pid, pid, dt,
                               accel_limit=CFG.quad.max_accel,
                               drag_comp=CFG.quad.drag_coefficient)
        drone = drone_step(drone, cmd, np.zeros(3), CFG.quad, dt)
        worst = max(worst, float(np.linalg.norm(drone.position - ref.position)))
    assert worst < 0.1


def test_demo_logs_are_deterministic_and_tamper_evident(tmp_path, demo_run):
    again = run_script(canonical_script(), demo_config(), demo_scene())
    first = list(log_lines(demo_run, canonical_script()))
    second = list(log_lines(again, canonical_script()))
    assert first == second  # byte-identical reruns

    path = tmp_path / "demo.jsonl"
    write_log(demo_run, str(path), canonical_script())
    report = replay_log(str(path))
    assert report.ok and report.ticks_checked == demo_run.tick_index

    lines = path.read_text().splitlines()
    idx = next(i for i, ln in enumerate(lines)
               if '"kind":"tick"' in ln and '"tick":1500' in ln)
    row = json.loads(lines[idx])
    row["pos"][2] = float(np.nextafter(row["pos"][2], 1.0))  # one ulp
    lines[idx] = json.dumps(row, sort_keys=True, separators=(",", ":"))
    path.write_text("\n".join(lines) + "\n")
    tampered = replay_log(str(path))
    assert not tampered.ok
    assert tampered.first_divergence == 1500


def test_overtilt_stops_within_one_tick_from_every_live_mode():
    hand = HandState(position=np.array([0.0, 0.0, 1.38]))
    for mode in LIVE_MODES:
        session = Session(demo_config(), demo_scene())
        session.ctx = dataclasses.replace(session.ctx, mode=mode)
        # 17.5 m/s^2 lateral tilts past the 60 degree cutoff (g tan = 16.99)
        session.inject_acceleration(np.array([17.5, 0.0, 0.0]))
        session.tick(hand)
        assert session.ctx.mode is Mode.EMERGENCY_STOP, mode
        assert any(e.kind.value == "Emergency" for e in session.events), mode
