import math

import numpy as np
import pytest

from samez.params import G0, SAM_A, SAM_B
from samez.simcore import (AtmosphereDomainError, MissileState, TargetTrack, drag_accel,
                           drag_coefficient, isa_atmosphere, mass_at, propagate_target, rk4_step,
                           thrust_and_mass)


@pytest.mark.parametrize("alt, rho, a, temp", [
    # published ISA table values
    (0.0, 1.2250, 340.294, 288.15),
    (5000.0, 0.73612, 320.529, 255.65),
    (11000.0, 0.36392, 295.070, 216.65),
    (20000.0, 0.088035, 295.070, 216.65),
])
def test_isa_table(alt, rho, a, temp):
    s = isa_atmosphere(alt)
    assert s.density == pytest.approx(rho, rel=2e-4)
    assert s.speed_of_sound == pytest.approx(a, rel=1e-5)
    assert s.temperature == pytest.approx(temp, abs=1e-9)


def test_isa_monotone_and_pure():
    alts = np.linspace(0, 30000, 601)
    rho = [isa_atmosphere(h).density for h in alts]
    assert all(b <= a for a, b in zip(rho, rho[1:]))
    assert isa_atmosphere(1234.5) == isa_atmosphere(1234.5)


@pytest.mark.parametrize("alt", [-501.0, 30000.1, float("nan")])
def test_isa_domain(alt):
    with pytest.raises(AtmosphereDomainError):
        isa_atmosphere(alt)


def test_thrust_and_mass_schedule():
    p = SAM_A
    assert thrust_and_mass(0.0, p) == (p.boost_thrust, p.launch_mass)
    assert thrust_and_mass(p.boost_duration / 2, p)[1] == pytest.approx(
        p.launch_mass - p.propellant_mass_boost / 2)
    assert thrust_and_mass(p.boost_duration + 1, p)[0] == p.sustain_thrust
    assert thrust_and_mass(p.burn_end, p) == (0.0, p.burnout_mass)
    assert thrust_and_mass(1000.0, p) == (0.0, p.burnout_mass)
    ts = np.linspace(0, 40, 4001)
    m = [mass_at(t, p) for t in ts]
    assert all(b <= a for a, b in zip(m, m[1:]))
    assert min(m) >= p.burnout_mass


def _state(v, mass=200.0):
    return MissileState(np.zeros(3), np.asarray(v, float), mass, 0.0)


def test_drag_zero_velocity():
    assert np.array_equal(drag_accel(_state([0, 0, 0]), SAM_A, isa_atmosphere(0), True),
                          np.zeros(3))


def test_drag_v_squared_and_direction():
    atmo = isa_atmosphere(0)
    # Mach 0.1 and 0.2 both sit on the flat first Cd segment
    v1 = 0.1 * atmo.speed_of_sound
    a1 = drag_accel(_state([v1, 0, 0]), SAM_A, atmo, True)
    a2 = drag_accel(_state([2 * v1, 0, 0]), SAM_A, atmo, True)
    assert np.linalg.norm(a2) == pytest.approx(4 * np.linalg.norm(a1), rel=1e-12)
    assert a1[0] < 0 and a1[1] == 0 and a1[2] == 0
    expect = 0.5 * atmo.density * v1 ** 2 * SAM_A.cd_power_on[0] * SAM_A.ref_area / 200.0
    assert np.linalg.norm(a1) == pytest.approx(expect, rel=1e-12)


def test_cd_nodes_and_clamp():
    for m, on, off in zip(SAM_B.cd_mach, SAM_B.cd_power_on, SAM_B.cd_power_off):
        assert drag_coefficient(m, SAM_B, True) == on
        assert drag_coefficient(m, SAM_B, False) == off
    assert drag_coefficient(50.0, SAM_B, True) == SAM_B.cd_power_on[-1]


def _ballistic(p0, v0, t):
    return p0 + v0 * t + 0.5 * np.array([0, 0, -G0]) * t * t


def _fly_vacuum(dt, T, p0, v0):
    # burnt-out motor so there is no thrust; mass is irrelevant in vacuum
    s = MissileState(p0, v0, SAM_A.burnout_mass, SAM_A.burn_end + 1.0)
    for _ in range(int(round(T / dt))):
        s = rk4_step(s, np.zeros(3), SAM_A, dt, drag=False)
    return s


def test_vacuum_ballistic_closed_form():
    p0 = np.array([0.0, 0.0, 0.0])
    v0 = np.array([300.0, -50.0, 400.0])
    s = _fly_vacuum(0.01, 30.0, p0, v0)
    ref = _ballistic(p0, v0, 30.0)
    for i in range(3):
        assert abs(s.position[i] - ref[i]) <= 1e-3 * abs(ref[i])


def test_rk4_order_on_nonpolynomial_problem():
    # constant thrust along velocity plus gravity has no polynomial solution
    p = SAM_B
    s0 = MissileState(np.zeros(3), np.array([200.0, 0.0, 200.0]), p.launch_mass, 0.0)
    T = 8.0  # inside the boost

    def run(dt):
        s = s0
        for _ in range(int(round(T / dt))):
            s = rk4_step(s, np.zeros(3), p, dt, drag=False)
        return s.position

    a, b, c = run(0.4), run(0.2), run(0.1)
    order = math.log2(np.linalg.norm(a - b) / np.linalg.norm(b - c))
    assert order >= 3.5


def test_rk4_time_advances_exactly():
    s = _state([100, 0, 10])
    s1 = rk4_step(s, np.zeros(3), SAM_A, 0.01)
    assert s1.time == 0.01
    with pytest.raises(ValueError):
        rk4_step(s, np.zeros(3), SAM_A, 0.0)


def test_energy_non_increasing_after_burnout():
    p = SAM_A
    s = MissileState(np.zeros(3), np.array([700.0, 0.0, 300.0]), p.burnout_mass, p.burn_end)
    e_prev = math.inf
    for _ in range(2000):
        e = 0.5 * s.speed ** 2 + G0 * s.position[2]
        assert e <= e_prev + 1e-9 * abs(e)
        e_prev = e
        s = rk4_step(s, np.zeros(3), p, 0.01)


def test_step_split_at_burnout_matches_two_substeps():
    p = SAM_A
    s = MissileState(np.zeros(3), np.array([300.0, 0.0, 100.0]), p.launch_mass, 0.0)
    s = MissileState(s.position, s.velocity, mass_at(5.995, p), 5.995)
    one = rk4_step(s, np.zeros(3), p, 0.01)
    half = rk4_step(s, np.zeros(3), p, 0.005)
    two = rk4_step(half, np.zeros(3), p, 0.005)
    np.testing.assert_allclose(one.position, two.position, rtol=0, atol=1e-9)
    np.testing.assert_allclose(one.velocity, two.velocity, rtol=0, atol=1e-9)


def test_propagate_target():
    t = TargetTrack(np.array([1000.0, 0.0, 3000.0]), np.array([-200.0, 50.0, 0.0]))
    t0 = propagate_target(t, 0.0)
    assert np.array_equal(t0.position, t.position) and np.array_equal(t0.velocity, t.velocity)
    t2 = propagate_target(t, 3.0)
    np.testing.assert_array_equal(t2.position, [400.0, 150.0, 3000.0])
    assert np.linalg.norm(t2.velocity) == np.linalg.norm(t.velocity)
    assert t2.position[2] == t.position[2]
    with pytest.raises(ValueError):
        TargetTrack(np.zeros(3), np.array([1.0, 0.0, 1.0]))


def test_halving_dt_changes_endpoint_by_tiny_fraction_of_a_step():
    p = SAM_A
    s0 = MissileState(np.zeros(3), np.array([25.0, 0.0, 15.0]), p.launch_mass, 0.0)

    def run(dt):
        s = s0
        for _ in range(int(round(10.0 / dt))):
            s = rk4_step(s, np.array([0.0, 5.0, 0.0]), p, dt)
        return s

    a, b = run(0.01), run(0.005)
    step_disp = a.speed * 0.01
    assert np.linalg.norm(a.position - b.position) < 1e-3 * step_disp
