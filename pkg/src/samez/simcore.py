"""Point-mass missile dynamics: ISA atmosphere, motor schedule, drag and RK4.

Frame: flat Earth, launcher at the origin, z up (m above the launcher site).
The missile is a point mass whose attitude follows its velocity vector; lateral
acceleration commands act perpendicular to velocity (skid-to-turn, no roll).

These functions are the readable reference for the fly-out kernels in
``samez._core`` / ``samez._pycore``, which inline the same arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import G0, SITE_ALT_M, MissileParams

R_AIR = 287.05287
GAMMA_AIR = 1.4
T0 = 288.15
P0 = 101325.0
LAPSE = 0.0065
H_TROPO = 11000.0
T_TROPO = T0 - LAPSE * H_TROPO
P_TROPO = P0 * (T_TROPO / T0) ** (G0 / (R_AIR * LAPSE))

ALT_MIN = -500.0
ALT_MAX = 30000.0


class AtmosphereDomainError(ValueError):
    pass


@dataclass(frozen=True)
class AtmosphereSample:
    density: float
    speed_of_sound: float
    temperature: float


@dataclass(frozen=True)
class MissileState:
    position: np.ndarray
    velocity: np.ndarray
    mass: float
    time: float = 0.0

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


@dataclass(frozen=True)
class TargetTrack:
    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        if self.velocity[2] != 0.0:
            raise ValueError("target velocity must be horizontal")


def isa_atmosphere(altitude_m: float) -> AtmosphereSample:
    """ISA troposphere plus isothermal layer above 11 km.

    `altitude_m` is geopotential altitude above sea level, valid in
    [-500, 30000] m.
    """
    h = float(altitude_m)
    if not (ALT_MIN <= h <= ALT_MAX):
        raise AtmosphereDomainError(f"altitude {h} m outside [{ALT_MIN}, {ALT_MAX}] m")
    if h <= H_TROPO:
        temp = T0 - LAPSE * h
        p = P0 * (temp / T0) ** (G0 / (R_AIR * LAPSE))
    else:
        temp = T_TROPO
        p = P_TROPO * math.exp(-G0 * (h - H_TROPO) / (R_AIR * T_TROPO))
    return AtmosphereSample(p / (R_AIR * temp), math.sqrt(GAMMA_AIR * R_AIR * temp), temp)


def mass_at(t: float, params: MissileParams) -> float:
    tb, ts = params.boost_duration, params.sustain_duration
    if t <= 0.0:
        return params.launch_mass
    if t < tb:
        return params.launch_mass - params.propellant_mass_boost * (t / tb)
    m1 = params.launch_mass - params.propellant_mass_boost
    if t < tb + ts:
        return m1 - params.propellant_mass_sustain * ((t - tb) / ts)
    return m1 - params.propellant_mass_sustain


def thrust_at(t: float, params: MissileParams) -> float:
    if t < params.boost_duration:
        return params.boost_thrust
    if t < params.burn_end:
        return params.sustain_thrust
    return 0.0


def thrust_and_mass(t: float, params: MissileParams) -> tuple[float, float]:
    """Boost-sustain motor: constant thrust per phase, linear propellant burn."""
    return thrust_at(t, params), mass_at(t, params)


def drag_coefficient(mach: float, params: MissileParams, powered: bool) -> float:
    table = params.cd_power_on if powered else params.cd_power_off
    return float(np.interp(mach, params.cd_mach, table))


def drag_accel(state: MissileState, params: MissileParams, atmo: AtmosphereSample,
               powered: bool) -> np.ndarray:
    v = state.speed
    if v == 0.0:
        return np.zeros(3)
    cd = drag_coefficient(v / atmo.speed_of_sound, params, powered)
    k = 0.5 * atmo.density * v * cd * params.ref_area / state.mass
    return -k * np.asarray(state.velocity, dtype=float)


def _density_sos(alt_asl: float) -> tuple[float, float]:
    # Same layer formulas as isa_atmosphere without the domain check; the
    # fly-out may briefly leave the tabulated band before it terminates.
    if alt_asl <= H_TROPO:
        temp = T0 - LAPSE * alt_asl
        p = P0 * (temp / T0) ** (G0 / (R_AIR * LAPSE))
    else:
        temp = T_TROPO
        p = P_TROPO * math.exp(-G0 * (alt_asl - H_TROPO) / (R_AIR * T_TROPO))
    return p / (R_AIR * temp), math.sqrt(GAMMA_AIR * R_AIR * temp)


def _accel(pos, vel, t, thrust, a_cmd, params, drag):
    m = mass_at(t, params)
    v = float(np.linalg.norm(vel))
    acc = np.array([0.0, 0.0, -G0]) + a_cmd
    if v > 0.0:
        acc = acc + (thrust / m / v) * vel
        if drag:
            rho, sos = _density_sos(pos[2] + SITE_ALT_M)
            cd = drag_coefficient(v / sos, params, thrust > 0.0)
            acc = acc - (0.5 * rho * v * cd * params.ref_area / m) * vel
    return acc


def _rk4_segment(pos, vel, t0, t1, a_cmd, params, drag):
    h = t1 - t0
    # thrust is piecewise constant; the caller never lets a segment straddle a
    # motor phase change, so the midpoint picks the right phase
    thrust = thrust_at(0.5 * (t0 + t1), params)
    k1v = _accel(pos, vel, t0, thrust, a_cmd, params, drag)
    k1x = vel
    k2x = vel + 0.5 * h * k1v
    k2v = _accel(pos + 0.5 * h * k1x, k2x, t0 + 0.5 * h, thrust, a_cmd, params, drag)
    k3x = vel + 0.5 * h * k2v
    k3v = _accel(pos + 0.5 * h * k2x, k3x, t0 + 0.5 * h, thrust, a_cmd, params, drag)
    k4x = vel + h * k3v
    k4v = _accel(pos + h * k3x, k4x, t1, thrust, a_cmd, params, drag)
    pos = pos + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    vel = vel + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return pos, vel


def rk4_step(state: MissileState, commanded_accel, params: MissileParams, dt: float,
             *, drag: bool = True) -> MissileState:
    """Advance one classical RK4 step of length `dt`.

    Total acceleration is thrust (along velocity) + gravity + drag + the
    commanded lateral acceleration, held constant over the step. Steps that
    contain a motor phase change are split at the change so each RK4 segment
    sees smooth forcing. ``drag=False`` gives vacuum flight.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    a_cmd = np.asarray(commanded_accel, dtype=float)
    pos = np.asarray(state.position, dtype=float)
    vel = np.asarray(state.velocity, dtype=float)
    t = state.time
    t_end = t + dt
    for b in (params.boost_duration, params.burn_end):
        if t < b < t_end:
            pos, vel = _rk4_segment(pos, vel, t, b, a_cmd, params, drag)
            t = b
    pos, vel = _rk4_segment(pos, vel, t, t_end, a_cmd, params, drag)
    return MissileState(pos, vel, mass_at(t_end, params), t_end)


def propagate_target(track: TargetTrack, dt: float) -> TargetTrack:
    if dt < 0:
        raise ValueError("dt must be >= 0")
    return TargetTrack(track.position + track.velocity * dt, track.velocity)
