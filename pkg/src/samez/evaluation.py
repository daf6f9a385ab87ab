"""Test-set metrics, prediction timing and the per-archetype report."""
from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .sampling import SECTORS, WHOLE, sector_by_key

REPORT_HEADER = ("sam_id", "sector", "method", "r2", "rmse_nm", "mape_pct", "pt_s", "n_test",
                 "per_shot_s", "outlier_count")
METHOD_ORDER = ("PR", "ANN", "RFR")
SET_ORDER = tuple(s.key for s in SECTORS) + (WHOLE.key,)
OUTLIER_PCT = 10.0
#: per-shot budget for real-time use (s)
REALTIME_LIMIT_S = 0.01


class MetricDomainError(ValueError):
    pass


class ReportError(ValueError):
    pass


def _pair(y, y_hat):
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    return y, y_hat


def percentage_error(y, y_hat):
    """100 |y_hat - y| / y, elementwise; y must be positive."""
    y, y_hat = _pair(y, y_hat)
    if np.any(~(y > 0)):
        raise MetricDomainError("percentage error needs y > 0")
    e = 100.0 * np.abs(y_hat - y) / y
    return float(e) if e.ndim == 0 else e


def count_outliers(y, y_hat, threshold_pct: float = OUTLIER_PCT) -> int:
    """Rows whose percentage error is strictly above the threshold."""
    return int(np.sum(np.atleast_1d(percentage_error(y, y_hat)) > threshold_pct))


def r2(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    if y.size < 2:
        raise MetricDomainError("r2 needs at least 2 rows")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise MetricDomainError("r2 undefined for constant targets")
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / ss_tot


def rmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    if y.size == 0:
        raise MetricDomainError("rmse of nothing")
    return math.sqrt(float(np.mean((y - y_hat) ** 2)))


def mape(y, y_hat) -> float:
    e = np.atleast_1d(percentage_error(y, y_hat))
    if e.size == 0:
        raise MetricDomainError("mape of nothing")
    return float(np.mean(e))


def time_batch_predict(model, X, repeats: int = 3):
    """(pt_s, per_shot_s): median wall time of predicting the whole batch.

    Scaling happens inside model.predict and is therefore timed too.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) == 0:
        raise ValueError("no queries to time")
    model.predict(X[:1])  # warm caches
    runs = []
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        model.predict(X)
        runs.append(time.perf_counter() - t0)
    pt = statistics.median(runs)
    return pt, pt / len(X)


@dataclass(frozen=True)
class MetricsRow:
    sam_id: str
    sector: str
    method: str
    r2: float
    rmse_nm: float
    mape_pct: float
    pt_s: float
    n_test: int
    per_shot_s: float
    outlier_count: int

    def __post_init__(self):
        if self.method not in METHOD_ORDER:
            raise ReportError(f"unknown method {self.method!r}")
        sector_by_key(self.sector)

    def csv_fields(self) -> list[str]:
        return [self.sam_id, self.sector, self.method, repr(self.r2), repr(self.rmse_nm),
                repr(self.mape_pct), repr(self.pt_s), str(self.n_test), repr(self.per_shot_s),
                str(self.outlier_count)]

    @classmethod
    def from_csv_fields(cls, f) -> "MetricsRow":
        return cls(f[0], f[1], f[2], float(f[3]), float(f[4]), float(f[5]), float(f[6]),
                   int(f[7]), float(f[8]), int(f[9]))

    @classmethod
    def from_pt(cls, sam_id, sector, method, r2, rmse_nm, mape_pct, pt_s, n_test,
                outlier_count=0) -> "MetricsRow":
        return cls(sam_id, sector, method, r2, rmse_nm, mape_pct, pt_s, n_test, pt_s / n_test,
                   outlier_count)


def evaluate_model(model, X, y, sam_id=None, sector=None, repeats: int = 3) -> MetricsRow:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise ValueError("empty test set")
    pt, per = time_batch_predict(model, X, repeats)
    y_hat = model.predict(X)
    return MetricsRow(sam_id or model.sam_id, sector or model.sector, model.method,
                      r2(y, y_hat), rmse(y, y_hat), mape(y, y_hat), pt, len(y), per,
                      count_outliers(y, y_hat))


@dataclass
class Report:
    rows: list
    provenance: dict = field(default_factory=dict)

    @property
    def sam_id(self) -> str:
        return self.rows[0].sam_id

    def cell(self, sector: str, method: str) -> MetricsRow | None:
        for r in self.rows:
            if r.sector == sector and r.method == method:
                return r
        return None

    def is_complete(self) -> bool:
        return all(self.cell(s, m) is not None for s in SET_ORDER for m in METHOD_ORDER)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def render(self) -> str:
        return render_table(self)


def build_report(rows, provenance: dict | None = None) -> Report:
    rows = list(rows)
    if not rows:
        raise ReportError("no rows: a report is never empty")
    sams = {r.sam_id for r in rows}
    if len(sams) != 1:
        raise ReportError(f"rows mix archetypes {sorted(sams)}")
    seen = set()
    for r in rows:
        key = (r.sector, r.method)
        if key in seen:
            raise ReportError(f"duplicate cell {key}")
        seen.add(key)
    rows.sort(key=lambda r: (SET_ORDER.index(r.sector), METHOD_ORDER.index(r.method)))
    return Report(rows, dict(provenance or {}))


def parse_report(text: str) -> Report:
    rdr = list(csv.reader(io.StringIO(text)))
    if not rdr or tuple(rdr[0]) != REPORT_HEADER:
        raise ReportError(f"expected header {','.join(REPORT_HEADER)}")
    try:
        rows = [MetricsRow.from_csv_fields(f) for f in rdr[1:] if f]
    except (IndexError, ValueError) as exc:
        raise ReportError(f"bad report row: {exc}") from None
    return build_report(rows)


def _block(report: Report, key: str) -> list[list[str]]:
    cells = [report.cell(key, m) for m in METHOD_ORDER]

    def fmt(fn):
        return [fn(c) if c is not None else "-" for c in cells]

    return [
        [sector_by_key(key).label, *METHOD_ORDER],
        ["R²", *fmt(lambda c: f"{c.r2:.4f}")],
        ["RMSE", *fmt(lambda c: f"{c.rmse_nm:.4f}")],
        ["MAPE", *fmt(lambda c: f"{c.mape_pct:.2f}%")],
        ["PT", *fmt(lambda c: f"{c.pt_s:.4f}")],
    ]


def render_table(report: Report) -> str:
    """Two sample sets side by side, four metric lines each."""
    keys = [k for k in SET_ORDER if any(r.sector == k for r in report.rows)]
    blocks = [_block(report, k) for k in keys]
    widths = [max(len(b[r][c]) for b in blocks for r in range(5)) for c in range(4)]
    lines = [f"{report.sam_id}: test-set evaluation"]
    for i in range(0, len(blocks), 2):
        for r in range(5):
            parts = ["  ".join(b[r][c].ljust(widths[c]) if c == 0 else b[r][c].rjust(widths[c])
                               for c in range(4)) for b in blocks[i:i + 2]]
            lines.append("    ".join(parts).rstrip())
        lines.append("")
    return "\n".join(lines)


def report_dict(report: Report) -> dict:
    return {"rows": [asdict(r) for r in report.rows], "provenance": report.provenance}
