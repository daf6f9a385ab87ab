"""Launch geometry from a firing condition and the fly-out loop."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._pycore import R_DIVERGING, R_GROUND, R_HIT, R_MAXTIME, R_MINSPEED, R_NONFINITE
from .params import FT, KT, MissileParams
from .simcore import MissileState, TargetTrack

ELEVATION_FT = (-5000.0, 45000.0)
SPEED_KT = (200.0, 850.0)
ASPECT_DEG = (0.0, 180.0)
BOX = (ELEVATION_FT, SPEED_KT, ASPECT_DEG)

#: missile speed off the rail (m/s)
EJECTION_SPEED = 30.0

TRACE_HEADER = ("t", "missile_x", "missile_y", "missile_z",
                "target_x", "target_y", "target_z", "phase", "a_cmd")


class QueryValidationError(ValueError):
    def __init__(self, fields):
        self.fields = list(fields)
        super().__init__("; ".join(self.fields))


class SimulationDiverged(RuntimeError):
    def __init__(self, message, ground_range_m=None):
        super().__init__(message)
        self.ground_range_m = ground_range_m


class Termination(enum.Enum):
    HitRadius = R_HIT
    MaxTime = R_MAXTIME
    MinSpeed = R_MINSPEED
    GroundImpact = R_GROUND
    Diverging = R_DIVERGING


@dataclass(frozen=True)
class EngagementQuery:
    """Firing condition: target elevation above the launcher, speed, |aspect|."""

    elevation_ft: float
    speed_kt: float
    aspect_deg: float

    def problems(self) -> list[str]:
        out = []
        for name, value, (lo, hi) in zip(("elevation_ft", "speed_kt", "aspect_deg"),
                                         self.as_tuple(), BOX):
            if not (math.isfinite(value) and lo <= value <= hi):
                out.append(f"{name}={value} outside [{lo:g}, {hi:g}]")
        return out

    def in_box(self) -> bool:
        return not self.problems()

    def validate(self) -> "EngagementQuery":
        bad = self.problems()
        if bad:
            raise QueryValidationError(bad)
        return self

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.elevation_ft, self.speed_kt, self.aspect_deg)


@dataclass(frozen=True)
class EngagementOutcome:
    result: str
    miss_distance: float
    time_of_flight: float
    termination_reason: Termination
    steps: int = 0

    @property
    def hit(self) -> bool:
        return self.result == "Hit"

    def to_dict(self) -> dict:
        return {
            "result": self.result,
            "miss_distance_m": self.miss_distance,
            "time_of_flight_s": self.time_of_flight,
            "termination_reason": self.termination_reason.name,
            "steps": self.steps,
        }


def setup_engagement(query: EngagementQuery, ground_range_m: float,
                     params: MissileParams) -> tuple[MissileState, TargetTrack]:
    """Missile at the launcher, target `ground_range_m` away along +x.

    Aspect convention: the target heading makes an angle of 180 - aspect with
    the target-to-launcher direction, so 180 is inbound and 0 outbound.
    """
    query.validate()
    if not ground_range_m > 0:
        raise QueryValidationError([f"ground_range={ground_range_m} must be > 0"])
    alt = query.elevation_ft * FT
    speed = query.speed_kt * KT
    off = math.radians(180.0 - query.aspect_deg)
    tpos = np.array([ground_range_m, 0.0, alt])
    tvel = np.array([-math.cos(off) * speed, math.sin(off) * speed, 0.0])
    los = tpos / np.linalg.norm(tpos)
    missile = MissileState(np.zeros(3), EJECTION_SPEED * los, params.launch_mass, 0.0)
    return missile, TargetTrack(tpos, tvel)


def run_engagement(missile0: MissileState, target0: TargetTrack, params: MissileParams,
                   dt: float = 0.01, trace: bool = False):
    """Fly until hit or a miss condition; returns the outcome (and trace rows)."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    cdm, cdon, cdoff = params.cd_arrays()
    m0 = (*missile0.position, *missile0.velocity, missile0.time)
    tg0 = (*target0.position, *target0.velocity)
    res, miss, tof, reason, n, rows = kernels.run_flyout(
        params.kernel_vector(), cdm, cdon, cdoff, m0, tg0, dt, trace)
    if reason == R_NONFINITE:
        raise SimulationDiverged(f"non-finite missile state after {n} steps",
                                 float(target0.position[0]))
    outcome = EngagementOutcome("Hit" if res else "Miss", miss, tof, Termination(reason), n)
    return (outcome, rows) if trace else outcome


def engage(query: EngagementQuery, ground_range_m: float, params: MissileParams,
           dt: float = 0.01) -> EngagementOutcome:
    m, t = setup_engagement(query, ground_range_m, params)
    return run_engagement(m, t, params, dt)


def write_trace(path, rows) -> None:
    from .guidance import GuidancePhase

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in rows:
            w.writerow([*(repr(float(x)) for x in r[:7]), GuidancePhase(r[7]).label,
                        repr(float(r[8]))])
