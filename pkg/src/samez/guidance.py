"""Loft, proportional navigation, phase logic and command limiting."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .params import G0, MissileParams
from .simcore import MissileState, TargetTrack

#: 1/s; flight-path-angle error to lateral acceleration during loft
LOFT_GAIN = 1.0


class DegenerateGeometryError(ValueError):
    pass


class GuidancePhase(enum.IntEnum):
    LOFT = 0
    MIDCOURSE = 1
    TERMINAL = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True)
class LosKinematics:
    range: float
    closing_speed: float
    los_rate: np.ndarray
    los_unit: np.ndarray


def los_kinematics(missile: MissileState, target: TargetTrack) -> LosKinematics:
    r = np.asarray(target.position, float) - np.asarray(missile.position, float)
    vr = np.asarray(target.velocity, float) - np.asarray(missile.velocity, float)
    r2 = float(r @ r)
    if r2 == 0.0:
        raise DegenerateGeometryError("missile and target positions coincide")
    rng = math.sqrt(r2)
    return LosKinematics(rng, -float(r @ vr) / rng, np.cross(r, vr) / r2, r / rng)


def pn_command(los: LosKinematics, nav_constant: float) -> np.ndarray:
    """a = N * |Vc| * (los_rate x los_unit); noise-free, lag-free.

    The magnitude of the closing speed keeps the command leading the line of
    sight while a slow missile is still being outrun just after launch.
    """
    return nav_constant * abs(los.closing_speed) * np.cross(los.los_rate, los.los_unit)


def loft_command(state: MissileState, params: MissileParams) -> np.ndarray:
    """Pitch the velocity vector toward the loft flight-path angle."""
    v = np.asarray(state.velocity, float)
    speed = float(np.linalg.norm(v))
    vh = math.hypot(v[0], v[1])
    if speed == 0.0 or vh == 0.0:
        return np.zeros(3)
    err = math.radians(params.loft_pitch_deg) - math.atan2(v[2], vh)
    if err == 0.0:
        return np.zeros(3)
    # unit vector perpendicular to v in the vertical plane, pointing up
    up = np.array([-v[2] * v[0], -v[2] * v[1], vh * vh]) / (speed * vh)
    return (LOFT_GAIN * speed * err) * up


def select_phase(state: MissileState, los: LosKinematics, params: MissileParams,
                 previous: GuidancePhase = GuidancePhase.LOFT) -> GuidancePhase:
    if previous == GuidancePhase.TERMINAL or los.range <= params.seeker_activation_range:
        return GuidancePhase.TERMINAL
    if previous == GuidancePhase.LOFT and state.time < params.loft_duration:
        return GuidancePhase.LOFT
    return GuidancePhase.MIDCOURSE


def limit_command(a, state: MissileState, params: MissileParams) -> np.ndarray:
    """Drop the along-velocity component, then clamp to g_limit * g."""
    a = np.asarray(a, float)
    v = np.asarray(state.velocity, float)
    v2 = float(v @ v)
    if v2 > 0.0:
        a = a - (float(a @ v) / v2) * v
    mag = float(np.linalg.norm(a))
    cap = params.g_limit * G0
    if mag > cap:
        a = a * (cap / mag)
    return a


def gravity_biased_pn(los: LosKinematics, nav_constant: float) -> np.ndarray:
    """PN plus +g vertical so the missile holds its line against gravity."""
    return pn_command(los, nav_constant) + np.array([0.0, 0.0, G0])


def guidance_command(state: MissileState, target: TargetTrack, params: MissileParams,
                     previous: GuidancePhase = GuidancePhase.LOFT):
    """(phase, limited acceleration) for one step; what the fly-out kernels apply."""
    los = los_kinematics(state, target)
    phase = select_phase(state, los, params, previous)
    if phase == GuidancePhase.LOFT:
        a = loft_command(state, params)
    else:
        a = gravity_biased_pn(los, params.nav_constant)
    return phase, limit_command(a, state, params)
