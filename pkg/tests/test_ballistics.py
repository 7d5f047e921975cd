"""Flight model oracles: closed-form parabola, symbolic drag, dissipation."""
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slingsim.ballistics import (BallisticState, Termination, drag_accel_sine,
                                 drag_accel_signum, generate_trajectory,
                                 rk4_step, straight_trajectory,
                                 terminal_velocity, trajectory_hash,
                                 write_trajectory_csv)
from slingsim.kernels import integrate_python
from slingsim.model import (BallisticParams, DragMode, SceneObject,
                            ValidationError, default_config)

# Oracle: with cd = 0 the flight is a textbook parabola from (0, 0, 1.5) at
# (9.5, 0, 0) m/s:  t_land = sqrt(2 * 1.5 / 9.81),  x_land = 9.5 * t_land.
T_LAND = math.sqrt(2.0 * 1.5 / 9.81)   # 0.5530012636093310
X_LAND = 9.5 * T_LAND                  # 5.2535120042886450

FREE = BallisticParams(cd=0.0)


def _integrate_free():
    return integrate_python(0.0, 0.0, 1.5, 9.5, 0.0, 0.0, np.zeros((0, 4)),
                            FREE.rho, FREE.cd, FREE.area_x, FREE.area_y,
                            FREE.area_z, FREE.mass, FREE.g, False, 1e-3, 10.0)


def test_drag_free_touchdown_matches_parabola():
    samples, n, term, hit, ex, ey, ez = _integrate_free()
    assert term == 0
    assert abs(ex - X_LAND) < 1e-6
    assert abs(ey) < 1e-12 and abs(ez) < 1e-9
    # landing time bracketed by the last kept sample and one step beyond
    t_last = samples[n - 1, 0]
    assert t_last <= T_LAND <= t_last + 1e-3 + 1e-12


def test_drag_free_samples_match_parabola_exactly():
    # RK4 is exact for polynomial dynamics, so every sample should sit on the
    # parabola to machine precision
    samples, n, *_ = _integrate_free()
    t = samples[:n, 0]
    np.testing.assert_allclose(samples[:n, 1], 9.5 * t, rtol=0, atol=1e-9)
    np.testing.assert_allclose(samples[:n, 3], 1.5 - 0.5 * 9.81 * t ** 2,
                               rtol=0, atol=1e-9)
    np.testing.assert_allclose(samples[:n, 6], -9.81 * t, rtol=0, atol=1e-9)


def test_terminal_velocity_closed_form():
    # steady fall: m g = rho cd A v^2 / 2  =>  v = sqrt(2 m g / (rho cd A))
    b = default_config().ballistic
    expected = math.sqrt(2.0 * b.mass * b.g / (b.rho * b.cd * b.area_z))
    assert terminal_velocity(b) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(199.6948892197489, rel=1e-12)
    with pytest.raises(ValidationError):
        terminal_velocity(BallisticParams(rho=0.0))


def test_sine_mode_matches_symbolic_equations():
    # independent oracle: evaluate the printed expressions symbolically
    sympy = pytest.importorskip("sympy")
    vx, vy, vz = sympy.symbols("vx vy vz")
    b = default_config().ballistic
    rho, cd, m, g = (sympy.Rational(123, 100), sympy.Rational(2, 5),
                     sympy.Integer(10), sympy.Rational(981, 100))
    area = sympy.Rational(1, 100)
    ex = -rho * cd * area * vx ** 2 / (2 * m)
    ey = -rho * cd * area * vy ** 2 / (2 * m)
    ez = (-sympy.Rational(1, 2) * rho * cd * area * vz ** 2 * sympy.sin(vz) - m * g) / m
    rng = np.random.default_rng(20260814)
    for _ in range(20):
        v = rng.uniform(-25.0, 25.0, size=3)
        got = drag_accel_sine(v, b)
        want = [float(e.evalf(30, subs={vx: v[0], vy: v[1], vz: v[2]}))
                for e in (ex, ey, ez)]
        np.testing.assert_allclose(got, want, rtol=1e-12)


def test_sine_mode_is_one_sided_in_xy():
    # the printed x/y terms square the velocity without restoring its sign
    b = dataclasses.replace(default_config().ballistic, drag_mode=DragMode.SINE)
    a_fwd = drag_accel_sine(np.array([5.0, 0.0, 0.0]), b)
    a_back = drag_accel_sine(np.array([-5.0, 0.0, 0.0]), b)
    assert a_fwd[0] < 0 and a_back[0] < 0
    assert a_fwd[0] == a_back[0]


def test_signum_mode_opposes_velocity_componentwise():
    b = default_config().ballistic
    a = drag_accel_signum(np.array([5.0, -3.0, 2.0]), b)
    assert a[0] < 0 and a[1] > 0
    q = b.rho * b.cd * b.area_x / (2.0 * b.mass)
    assert a[0] == pytest.approx(-q * 25.0, rel=1e-12)
    assert a[1] == pytest.approx(q * 9.0, rel=1e-12)
    assert a[2] == pytest.approx(-q * 4.0 - b.g, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.floats(-60, 60, allow_nan=False) for _ in range(3)]))
def test_signum_drag_dissipates(v):
    # drag power must never be positive (gravity removed from the z term)
    b = default_config().ballistic
    v = np.array(v)
    a = drag_accel_signum(v, b)
    drag_only = a + np.array([0.0, 0.0, b.g])
    assert float(v @ drag_only) <= 1e-12


def test_signum_flight_mirrors_in_y():
    cfg = default_config()
    t1 = generate_trajectory((0, 0, 1.5), (-0.1, -0.05, 0.0), [], cfg)
    t2 = generate_trajectory((0, 0, 1.5), (-0.1, 0.05, 0.0), [], cfg)
    mirrored = t2.samples.copy()
    mirrored[:, 2] *= -1.0  # y position
    mirrored[:, 5] *= -1.0  # y velocity
    assert np.array_equal(t1.samples, mirrored)


def test_sine_flight_does_not_mirror_in_y():
    # the even z term reacts to |vz| structure, but x/y one-sidedness means a
    # y-reflected launch is NOT the mirror image; assert the asymmetry so a
    # future "fix" cannot silently change the published equations
    cfg = dataclasses.replace(
        default_config(),
        ballistic=dataclasses.replace(default_config().ballistic,
                                      drag_mode=DragMode.SINE))
    t1 = generate_trajectory((0, 0, 1.5), (-0.1, -0.05, 0.0), [], cfg)
    t2 = generate_trajectory((0, 0, 1.5), (-0.1, 0.05, 0.0), [], cfg)
    n = min(t1.samples.shape[0], t2.samples.shape[0])
    diff = np.abs(t1.samples[:n, 2] + t2.samples[:n, 2]).max()
    assert diff > 1e-9


def test_rk4_step_matches_manual_stages():
    b = default_config().ballistic
    state = BallisticState(position=np.array([1.0, 2.0, 3.0]),
                           velocity=np.array([4.0, -5.0, 6.0]), t=0.25)
    dt = 1e-3

    def acc(v):
        q = b.rho * b.cd / (2.0 * b.mass)
        return np.array([-np.sign(v[0]) * q * b.area_x * v[0] ** 2,
                         -np.sign(v[1]) * q * b.area_y * v[1] ** 2,
                         -np.sign(v[2]) * q * b.area_z * v[2] ** 2 - b.g])

    p, v = state.position, state.velocity
    k1p, k1v = v, acc(v)
    k2p, k2v = v + 0.5 * dt * k1v, acc(v + 0.5 * dt * k1v)
    k3p, k3v = v + 0.5 * dt * k2v, acc(v + 0.5 * dt * k2v)
    k4p, k4v = v + dt * k3v, acc(v + dt * k3v)
    want_p = p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    want_v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)

    out = rk4_step(state, b, dt)
    np.testing.assert_allclose(out.position, want_p, rtol=1e-14)
    np.testing.assert_allclose(out.velocity, want_v, rtol=1e-14)
    assert out.t == pytest.approx(0.251)
    with pytest.raises(ValidationError):
        rk4_step(state, b, 0.0)


def test_generate_trajectory_launch_vector():
    cfg = default_config()
    traj = generate_trajectory((0, 0, 1.5), (-0.1, 0.0, 0.0), [], cfg)
    # v0 = launch_sign * k * D = -1 * 95 * (-0.1, 0, 0)
    np.testing.assert_allclose(traj.samples[0, 4:], [9.5, 0.0, 0.0], rtol=0)
    np.testing.assert_allclose(traj.samples[0, 1:4], [0.0, 0.0, 1.5], rtol=0)
    assert traj.termination is Termination.GROUND
    assert traj.object_id is None


def test_generate_trajectory_object_hit_and_grabbed_skip():
    cfg = default_config()
    ball = SceneObject(id="ball", center=(3.0, 0.0, 1.2), radius=0.4)
    hit = generate_trajectory((0, 0, 1.5), (-0.1, 0.0, 0.0), [ball], cfg)
    assert hit.termination is Termination.OBJECT_HIT
    assert hit.object_id == "ball"
    assert abs(np.linalg.norm(hit.endpoint - ball.center) - 0.4) < 1e-5
    carried = SceneObject(id="ball", center=(3.0, 0.0, 1.2), radius=0.4, grabbed=True)
    missed = generate_trajectory((0, 0, 1.5), (-0.1, 0.0, 0.0), [carried], cfg)
    assert missed.termination is Termination.GROUND


def test_zero_displacement_rejected():
    with pytest.raises(ValidationError):
        generate_trajectory((0, 0, 1.5), (0.0, 0.0, 0.0), [], default_config())


def test_trajectory_hash_sensitivity():
    cfg = default_config()
    a = generate_trajectory((0, 0, 1.5), (-0.1, 0.0, 0.0), [], cfg)
    b = generate_trajectory((0, 0, 1.5), (-0.1, 0.0, 0.0), [], cfg)
    c = generate_trajectory((0, 0, 1.5), (-0.1001, 0.0, 0.0), [], cfg)
    assert trajectory_hash(a) == trajectory_hash(b)
    assert trajectory_hash(a) != trajectory_hash(c)


def test_straight_trajectory_constant_speed():
    traj = straight_trajectory((0, 0, 1.5), (4.0, 0.0, 1.5), speed=8.0, dt=0.01,
                               termination=Termination.GROUND, object_id=None)
    speeds = np.linalg.norm(traj.velocities, axis=1)
    np.testing.assert_allclose(speeds, 8.0, rtol=1e-12)
    np.testing.assert_allclose(traj.endpoint, [4.0, 0.0, 1.5], atol=1e-12)
    assert abs(traj.duration - 0.5) <= 0.01


def test_csv_and_sidecar_round_trip(tmp_path):
    cfg = default_config()
    traj = generate_trajectory((0, 0, 1.5), (-0.1, 0.0, 0.0), [], cfg)
    csv_path = tmp_path / "arc.csv"
    sidecar = write_trajectory_csv(traj, str(csv_path))
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t,x,y,z,vx,vy,vz"
    assert len(lines) == 1 + traj.samples.shape[0]
    row = np.array([float(x) for x in lines[1].split(",")])
    np.testing.assert_array_equal(row, traj.samples[0])
    import json
    meta = json.loads((tmp_path / "arc.json").read_text())
    assert sidecar == str(tmp_path / "arc.json")
    assert meta["termination"] == "ground"
    assert meta["n_samples"] == traj.samples.shape[0]
    np.testing.assert_allclose(meta["endpoint"], traj.endpoint)
