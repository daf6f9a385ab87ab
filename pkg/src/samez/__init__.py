"""Surface-to-air missile engagement zones: fly-out simulation and fast surrogates."""
__version__ = "0.1.0"

from .engagement import EngagementOutcome, EngagementQuery, engage, run_engagement
from .envelope import MaxRangeResult, SolverConfig, brute_force_scan, solve_max_range
from .params import PRESETS, SAM_A, SAM_B, MissileParams, get_preset

__all__ = [
    "EngagementOutcome", "EngagementQuery", "MaxRangeResult", "MissileParams", "PRESETS",
    "SAM_A", "SAM_B", "SolverConfig", "brute_force_scan", "engage", "get_preset",
    "run_engagement", "solve_max_range",
]
