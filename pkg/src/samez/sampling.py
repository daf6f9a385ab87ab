"""Latin hypercube designs, aspect sectors, EZ datasets and their splits."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engagement import BOX, ELEVATION_FT, SPEED_KT, EngagementQuery
from .envelope import SolverConfig, solve_max_range
from .params import MissileParams

log = logging.getLogger(__name__)

CSV_HEADER = ("alt_ft", "speed_kt", "aspect_deg", "max_range_nm")
DATASET_FORMAT_VERSION = 1
#: max_range_nm written for points that never produced an engagement
SENTINEL = -1.0
MAX_FAIL_FRACTION = 0.2


class GenerationError(RuntimeError):
    pass


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Sector:
    key: str
    lo_deg: float
    hi_deg: float
    closed: bool = False  # hi_deg included

    @property
    def index(self) -> int | None:
        return None if self.key == "whole" else int(self.key[1:])

    @property
    def label(self) -> str:
        return f"[{self.lo_deg:g},{self.hi_deg:g}{']' if self.closed else ')'}"

    def contains(self, aspect_deg: float) -> bool:
        if self.closed:
            return self.lo_deg <= aspect_deg <= self.hi_deg
        return self.lo_deg <= aspect_deg < self.hi_deg


SECTORS = (
    Sector("s0", 0.0, 144.0),
    Sector("s1", 144.0, 153.0),
    Sector("s2", 153.0, 162.0),
    Sector("s3", 162.0, 171.0),
    Sector("s4", 171.0, 180.0, closed=True),
)
WHOLE = Sector("whole", 0.0, 180.0, closed=True)
ALL_SETS = SECTORS + (WHOLE,)
_BY_KEY = {s.key: s for s in ALL_SETS}


def sector_by_key(key: str) -> Sector:
    try:
        return _BY_KEY[key]
    except KeyError:
        raise ValueError(f"unknown sector {key!r}; expected one of {list(_BY_KEY)}") from None


def sector_of(aspect_deg: float) -> Sector:
    a = float(aspect_deg)
    if not 0.0 <= a <= 180.0:
        raise ValueError(f"aspect {a} outside [0, 180]")
    for s in SECTORS:
        if s.contains(a):
            return s
    raise AssertionError("sectors do not tile [0, 180]")


def sector_index_array(aspect_deg) -> np.ndarray:
    """Vectorised sector_of for routing (index into SECTORS)."""
    a = np.asarray(aspect_deg, dtype=float)
    if np.any((a < 0) | (a > 180)) or np.any(np.isnan(a)):
        raise ValueError("aspect outside [0, 180]")
    edges = np.array([s.hi_deg for s in SECTORS[:-1]])
    return np.searchsorted(edges, a, side="right")


# ---------------------------------------------------------------------------
# Latin hypercube


def _lhs_unit(n: int, d: int, rng: np.random.Generator):
    cells = np.empty((n, d), dtype=np.int64)
    u = np.empty((n, d))
    for j in range(d):
        cells[:, j] = rng.permutation(n)
        u[:, j] = rng.random(n)
    return cells, u


def _to_box(cells, u, n, bounds):
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    x = lo + (cells + u) / n * (hi - lo)
    # (cells + u) / n < 1, but rounding may still land on hi
    return np.minimum(x, np.nextafter(hi, lo))


def lhs(n: int, bounds, seed: int) -> np.ndarray:
    """n points, one per equal-width stratum in every dimension.

    Within a stratum the position is uniform; strata are matched across
    dimensions by independent random permutations.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    bounds = [tuple(map(float, b)) for b in bounds]
    if any(not hi > lo for lo, hi in bounds):
        raise ValueError("degenerate bounds")
    cells, u = _lhs_unit(n, len(bounds), np.random.default_rng(seed))
    return _to_box(cells, u, n, bounds)


def sector_bounds(sector: Sector):
    return (ELEVATION_FT, SPEED_KT, (sector.lo_deg, sector.hi_deg))


# ---------------------------------------------------------------------------
# Datasets


@dataclass
class Dataset:
    X: np.ndarray  # (n, 3) alt_ft, speed_kt, aspect_deg
    y: np.ndarray  # (n,) max_range_nm, SENTINEL for unsolved
    sam_id: str
    sector: Sector
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.y)

    @property
    def solved_mask(self) -> np.ndarray:
        return self.y > 0

    def solved(self) -> "Dataset":
        m = self.solved_mask
        return self.subset(np.flatnonzero(m))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx].copy(), self.y[idx].copy(), self.sam_id, self.sector,
                       self.seed, dict(self.meta))

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for x, y in zip(self.X, self.y):
            w.writerow([repr(float(v)) for v in x] + [repr(float(y))])
        return buf.getvalue()

    def sha256(self) -> str:
        return hashlib.sha256(self.to_csv_text().encode("utf-8")).hexdigest()

    def sidecar(self) -> dict:
        return {
            "format_version": DATASET_FORMAT_VERSION,
            "sam_id": self.sam_id,
            "sector": self.sector.key,
            "sector_bounds_deg": [self.sector.lo_deg, self.sector.hi_deg],
            "seed": self.seed,
            "n_rows": len(self),
            "csv_sha256": self.sha256(),
            **self.meta,
        }

    def write(self, csv_path, force: bool = False) -> Path:
        csv_path = Path(csv_path)
        meta_path = meta_path_for(csv_path)
        for p in (csv_path, meta_path):
            if p.exists() and not force:
                raise FileExistsError(f"{p} exists; pass force to overwrite")
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        csv_path.write_text(self.to_csv_text(), encoding="utf-8")
        meta_path.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
        return csv_path


def meta_path_for(csv_path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.json")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def parse_csv(text: str):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise DatasetFormatError(f"expected header {','.join(CSV_HEADER)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, 4)
    except ValueError as exc:
        raise DatasetFormatError(f"bad numeric field: {exc}") from None
    return data[:, :3].copy(), data[:, 3].copy()


def read_dataset(csv_path) -> Dataset:
    csv_path = Path(csv_path)
    X, y = parse_csv(csv_path.read_text(encoding="utf-8"))
    meta_path = meta_path_for(csv_path)
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
    sector = sector_by_key(meta.get("sector", "whole"))
    extra = {k: v for k, v in meta.items() if k not in
             ("format_version", "sam_id", "sector", "sector_bounds_deg", "seed", "n_rows",
              "csv_sha256")}
    return Dataset(X, y, meta.get("sam_id", "unknown"), sector, meta.get("seed"), extra)


def _solve_point(args):
    i, x0, cell, n, bounds, params, cfg, seed, max_retries = args
    x = x0
    for attempt in range(max_retries + 1):
        res = solve_max_range(EngagementQuery(*map(float, x)), params, cfg)
        if res.solved:
            return i, x, res.max_range_nm, attempt, res.engagements_run
        # redraw inside the same LHS cell so stratification survives
        rng = np.random.default_rng([seed, i, attempt])
        x = _to_box(cell[None, :], rng.random((1, cell.size)), n, bounds)[0]
    return i, x0, SENTINEL, max_retries + 1, 0


def generate_dataset(params: MissileParams, sector: Sector, n: int, seed: int,
                     cfg: SolverConfig = SolverConfig(), workers: int = 1,
                     max_retries: int = 5) -> Dataset:
    """LHS over the input box restricted to `sector`, solved point by point.

    Output order follows the sample index whatever the worker scheduling.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    bounds = sector_bounds(sector)
    cells, u = _lhs_unit(n, 3, np.random.default_rng(seed))
    X0 = _to_box(cells, u, n, bounds)
    tasks = [(i, X0[i], cells[i], n, bounds, params, cfg, seed, max_retries) for i in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_solve_point, tasks, chunksize=max(1, n // (8 * workers))))
    else:
        results = [_solve_point(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    X = np.array([r[1] for r in results], dtype=float).reshape(n, 3)
    y = np.array([r[2] for r in results], dtype=float)
    failed = int(np.sum(y == SENTINEL))
    redrawn = int(sum(1 for r in results if r[3] > 0 and r[2] != SENTINEL))
    if failed > MAX_FAIL_FRACTION * n:
        raise GenerationError(f"{failed}/{n} points of {params.name} {sector.label} never "
                              f"engaged after {max_retries} redraws")
    if failed:
        log.warning("%s %s: %d/%d points recorded with sentinel", params.name, sector.label,
                    failed, n)
    meta = {
        "solver": cfg.to_dict(),
        "generation": {"n_requested": n, "n_solved": n - failed, "n_redrawn": redrawn,
                       "n_failed": failed, "max_retries": max_retries,
                       "engagements_run": int(sum(r[4] for r in results))},
    }
    return Dataset(X, y, params.name, sector, seed, meta)


def union(datasets, sector: Sector = WHOLE) -> Dataset:
    datasets = list(datasets)
    if not datasets:
        raise ValueError("nothing to merge")
    sam = {d.sam_id for d in datasets}
    if len(sam) != 1:
        raise ValueError(f"mixed archetypes {sorted(sam)}")
    X = np.concatenate([d.X for d in datasets])
    y = np.concatenate([d.y for d in datasets])
    meta = {"union_of": [{"sector": d.sector.key, "seed": d.seed, "csv_sha256": d.sha256()}
                         for d in datasets]}
    return Dataset(X, y, sam.pop(), sector, None, meta)


def split_train_test(ds: Dataset, ratio: float = 0.8, seed: int = 0):
    """Shuffle, then first ceil(ratio * n) rows train and the rest test."""
    n = len(ds)
    if n == 0:
        raise ValueError("empty dataset")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = math.ceil(round(ratio * n, 9))
    return ds.subset(perm[:n_train]), ds.subset(perm[n_train:])


def kfold(n_rows: int, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """k disjoint, exhaustive folds of row indices; sizes differ by at most one."""
    if k < 2:
        raise ValueError("k must be >= 2 (a fold is needed for validation)")
    if n_rows < k:
        raise ValueError(f"need at least k={k} rows, got {n_rows}")
    perm = np.random.default_rng(seed).permutation(n_rows)
    return [np.sort(f) for f in np.array_split(perm, k)]


def in_box(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    ok = np.ones(len(X), dtype=bool)
    for j, (lo, hi) in enumerate(BOX):
        ok &= (X[:, j] >= lo) & (X[:, j] <= hi)
    return ok
