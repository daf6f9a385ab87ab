"""Missile archetype parameters, shipped presets and the INI config format."""
from __future__ import annotations

import configparser
import dataclasses
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

G0 = 9.80665
FT = 0.3048
KT = 1852.0 / 3600.0
NM = 1852.0

#: launcher site altitude above sea level (m)
SITE_ALT_M = 5000.0 * FT

CONFIG_FORMAT_VERSION = 1


class ParamsError(ValueError):
    pass


@dataclass(frozen=True)
class MissileParams:
    """Constants of one surface-to-air missile archetype (SI units)."""

    name: str
    launch_mass: float
    propellant_mass_boost: float
    propellant_mass_sustain: float
    boost_thrust: float
    boost_duration: float
    sustain_thrust: float
    sustain_duration: float
    ref_area: float
    cd_mach: tuple[float, ...]
    cd_power_on: tuple[float, ...]
    cd_power_off: tuple[float, ...]
    nav_constant: float = 4.0
    g_limit: float = 30.0
    loft_pitch_deg: float = 40.0
    loft_duration: float = 4.0
    seeker_activation_range: float = 15000.0
    hit_radius: float = 15.0
    max_flight_time: float = 90.0
    min_speed: float = 250.0
    scan_max_nm: float = 80.0

    def __post_init__(self):
        positive = ("launch_mass", "propellant_mass_boost", "propellant_mass_sustain",
                    "boost_thrust", "boost_duration", "sustain_thrust", "sustain_duration",
                    "ref_area", "nav_constant", "g_limit", "hit_radius", "max_flight_time",
                    "scan_max_nm")
        for f in positive:
            v = getattr(self, f)
            if not (math.isfinite(v) and v > 0):
                raise ParamsError(f"{f} must be finite and > 0, got {v!r}")
        if self.propellant_mass_boost + self.propellant_mass_sustain >= self.launch_mass:
            raise ParamsError("propellant masses must sum to less than launch_mass")
        if self.seeker_activation_range <= self.hit_radius:
            raise ParamsError("seeker_activation_range must exceed hit_radius")
        if self.loft_duration < 0 or self.min_speed < 0:
            raise ParamsError("loft_duration and min_speed must be >= 0")
        n = len(self.cd_mach)
        if n < 2 or len(self.cd_power_on) != n or len(self.cd_power_off) != n:
            raise ParamsError("cd tables need >= 2 breakpoints of matching length")
        if any(b <= a for a, b in zip(self.cd_mach, self.cd_mach[1:])):
            raise ParamsError("cd_mach breakpoints must be strictly increasing")
        if min(self.cd_power_on) <= 0 or min(self.cd_power_off) <= 0:
            raise ParamsError("all drag coefficients must be > 0")

    @property
    def burnout_mass(self) -> float:
        return self.launch_mass - self.propellant_mass_boost - self.propellant_mass_sustain

    @property
    def burn_end(self) -> float:
        return self.boost_duration + self.sustain_duration

    def kernel_vector(self) -> np.ndarray:
        """Scalar constants in the order the fly-out kernels expect."""
        return np.array([
            self.launch_mass, self.propellant_mass_boost, self.propellant_mass_sustain,
            self.boost_thrust, self.boost_duration, self.sustain_thrust,
            self.sustain_duration, self.ref_area, self.nav_constant, self.g_limit,
            math.radians(self.loft_pitch_deg), self.loft_duration,
            self.seeker_activation_range, self.hit_radius, self.max_flight_time,
            self.min_speed, SITE_ALT_M, G0,
        ], dtype=np.float64)

    def cd_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (np.asarray(self.cd_mach, dtype=np.float64),
                np.asarray(self.cd_power_on, dtype=np.float64),
                np.asarray(self.cd_power_off, dtype=np.float64))

    def replace(self, **changes) -> "MissileParams":
        return dataclasses.replace(self, **changes)


_MACH = (0.0, 0.6, 0.9, 1.05, 1.3, 2.0, 3.0, 5.0)


def _cd(on):
    return tuple(on), tuple(round(c + 0.05, 6) for c in on)


_A_ON, _A_OFF = _cd((0.32, 0.32, 0.40, 0.62, 0.58, 0.46, 0.36, 0.30))
_B_ON, _B_OFF = _cd((0.28, 0.28, 0.36, 0.56, 0.52, 0.41, 0.32, 0.27))

# Synthetic stand-ins for a medium-range and a long-range system. Propellant
# masses follow from the thrust/duration pairs at ~250 s specific impulse.
SAM_A = MissileParams(
    name="sam_a",
    launch_mass=230.0,
    propellant_mass_boost=49.0,
    propellant_mass_sustain=28.5,
    boost_thrust=20000.0,
    boost_duration=6.0,
    sustain_thrust=5000.0,
    sustain_duration=14.0,
    ref_area=math.pi * 0.1**2,
    cd_mach=_MACH,
    cd_power_on=_A_ON,
    cd_power_off=_A_OFF,
    nav_constant=4.0,
    g_limit=30.0,
    loft_pitch_deg=40.0,
    loft_duration=4.0,
    seeker_activation_range=15000.0,
    hit_radius=15.0,
    max_flight_time=90.0,
    min_speed=250.0,
    scan_max_nm=80.0,
)

SAM_B = MissileParams(
    name="sam_b",
    launch_mass=900.0,
    propellant_mass_boost=235.0,
    propellant_mass_sustain=177.0,
    boost_thrust=60000.0,
    boost_duration=10.0,
    sustain_thrust=15000.0,
    sustain_duration=30.0,
    ref_area=math.pi * 0.2**2,
    cd_mach=_MACH,
    cd_power_on=_B_ON,
    cd_power_off=_B_OFF,
    nav_constant=4.0,
    g_limit=25.0,
    loft_pitch_deg=50.0,
    loft_duration=6.0,
    seeker_activation_range=25000.0,
    hit_radius=15.0,
    max_flight_time=180.0,
    min_speed=250.0,
    scan_max_nm=200.0,
)

PRESETS = {"sam_a": SAM_A, "sam_b": SAM_B}

_TUPLE_FIELDS = ("cd_mach", "cd_power_on", "cd_power_off")


def get_preset(name: str) -> MissileParams:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ParamsError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def dumps_params(params: MissileParams) -> str:
    cp = configparser.ConfigParser()
    cp["meta"] = {"format_version": str(CONFIG_FORMAT_VERSION)}
    sec = {}
    for f in dataclasses.fields(params):
        v = getattr(params, f.name)
        sec[f.name] = ", ".join(repr(float(x)) for x in v) if f.name in _TUPLE_FIELDS else (
            v if isinstance(v, str) else repr(float(v)))
    cp["missile"] = sec
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def loads_params(text: str) -> MissileParams:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    try:
        version = cp.getint("meta", "format_version")
    except (configparser.Error, ValueError) as exc:
        raise ParamsError(f"missing or bad [meta] format_version: {exc}") from None
    if version != CONFIG_FORMAT_VERSION:
        raise ParamsError(f"unsupported params format_version {version}")
    if not cp.has_section("missile"):
        raise ParamsError("missing [missile] section")
    known = {f.name: f for f in dataclasses.fields(MissileParams)}
    kw = {}
    for key, raw in cp.items("missile"):
        if key not in known:
            raise ParamsError(f"unknown parameter {key!r}")
        if key == "name":
            kw[key] = raw
        elif key in _TUPLE_FIELDS:
            kw[key] = tuple(float(x) for x in raw.split(","))
        else:
            kw[key] = float(raw)
    try:
        return MissileParams(**kw)
    except TypeError as exc:
        raise ParamsError(str(exc)) from None


def load_params(path) -> MissileParams:
    return loads_params(Path(path).read_text(encoding="utf-8"))


def resolve_params(spec: str) -> MissileParams:
    """Preset name, or path to a params file."""
    if spec.lower() in PRESETS:
        return PRESETS[spec.lower()]
    p = Path(spec)
    if p.is_file():
        return load_params(p)
    raise ParamsError(f"{spec!r} is neither a preset ({', '.join(PRESETS)}) nor a params file")
