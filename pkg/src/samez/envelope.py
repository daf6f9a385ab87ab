"""Maximum launch range: descending coarse scan, then bisection."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

from .engagement import EngagementQuery, SimulationDiverged, engage
from .params import NM, MissileParams

log = logging.getLogger(__name__)

SOLVED = "Solved"
NO_ENGAGEMENT = "NoEngagement"


@dataclass(frozen=True)
class SolverConfig:
    scan_step_nm: float = 2.0
    tolerance_nm: float = 0.05
    dt: float = 0.01
    #: None uses the archetype's own scan_max_nm
    scan_max_nm: float | None = None

    def __post_init__(self):
        if not (self.scan_step_nm > 0 and self.tolerance_nm > 0 and self.dt > 0):
            raise ValueError("scan step, tolerance and dt must be > 0")

    def scan_max(self, params: MissileParams) -> float:
        return self.scan_max_nm if self.scan_max_nm is not None else params.scan_max_nm

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MaxRangeResult:
    max_range_nm: float
    engagements_run: int
    bracket_lo_nm: float
    bracket_hi_nm: float
    status: str
    bisection_iterations: int = 0

    @property
    def solved(self) -> bool:
        return self.status == SOLVED

    def to_dict(self) -> dict:
        return asdict(self)


def _hit(query, range_nm, params, dt):
    try:
        return engage(query, range_nm * NM, params, dt).hit
    except SimulationDiverged as exc:
        raise SimulationDiverged(f"{exc} at ground range {range_nm} nm", range_nm * NM) from exc


def scan_points(scan_max_nm: float, step_nm: float) -> list[float]:
    """Descending multiples of `step_nm` from the largest one <= scan_max down to step."""
    k = int(math.floor(scan_max_nm / step_nm + 1e-9))
    return [i * step_nm for i in range(k, 0, -1)]


def bisection_iterations(width_nm: float, tolerance_nm: float) -> int:
    if width_nm <= tolerance_nm:
        return 0
    return math.ceil(math.log2(width_nm / tolerance_nm) - 1e-12)


def solve_max_range(query: EngagementQuery, params: MissileParams,
                    cfg: SolverConfig = SolverConfig()) -> MaxRangeResult:
    """Outermost hit/miss boundary in ground range (nm).

    The hit region along range need not be an interval, so the scan starts far
    out and anchors on the first hit met coming inward.
    """
    query.validate()
    runs = 0
    lo = hi = None
    prev = None
    for r in scan_points(cfg.scan_max(params), cfg.scan_step_nm):
        runs += 1
        if _hit(query, r, params, cfg.dt):
            lo, hi = r, prev
            break
        prev = r
    if lo is None:
        return MaxRangeResult(0.0, runs, 0.0, 0.0, NO_ENGAGEMENT)
    if hi is None:
        log.warning("query %s hits at the outermost scan point %.1f nm; raise scan_max",
                    query, lo)
        return MaxRangeResult(lo, runs, lo, lo, SOLVED)
    iters = 0
    while hi - lo > cfg.tolerance_nm:
        mid = 0.5 * (lo + hi)
        runs += 1
        iters += 1
        if _hit(query, mid, params, cfg.dt):
            lo = mid
        else:
            hi = mid
    # report the verified hit side of the bracket, never an unsimulated midpoint
    return MaxRangeResult(lo, runs, lo, hi, SOLVED, iters)


def brute_force_scan(query: EngagementQuery, params: MissileParams, grid_step_nm: float,
                     dt: float = 0.01, scan_max_nm: float | None = None) -> float | None:
    """Outermost hitting multiple of `grid_step_nm`; None when nothing hits.

    Test oracle: no bisection, just the grid. Walking inward and stopping at
    the first hit gives the same answer as evaluating every grid point.
    """
    if not grid_step_nm > 0:
        raise ValueError("grid_step must be > 0")
    top = scan_max_nm if scan_max_nm is not None else params.scan_max_nm
    k = int(math.floor(top / grid_step_nm + 1e-9))
    for i in range(k, 0, -1):
        r = round(i * grid_step_nm, 10)
        if _hit(query, r, params, dt):
            return r
    return None
