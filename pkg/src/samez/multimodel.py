"""Sector-routed compositions of trained surrogates."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import METHOD_ORDER, Report
from .sampling import SECTORS, WHOLE, sector_index_array, sector_of

MANIFEST_FORMAT_VERSION = 1
SINGLE, HOMOGENEOUS, HETEROGENEOUS = "Single", "Homogeneous", "Heterogeneous"
SECTOR_KEYS = tuple(s.key for s in SECTORS)


class IncompleteReportError(ValueError):
    pass


class InfeasibleComposition(ValueError):
    pass


class ManifestError(ValueError):
    pass


def model_filename(sector: str, method: str) -> str:
    return f"{sector}_{method}.json"


@dataclass(frozen=True)
class Assignment:
    sector: str
    method: str
    model: str  # path, relative to the manifest's directory unless absolute


@dataclass
class CompositionPlan:
    kind: str
    assignments: list
    policy: dict
    sam_id: str = "unknown"
    justification: list = field(default_factory=list)

    def __post_init__(self):
        keys = [a.sector for a in self.assignments]
        methods = {a.method for a in self.assignments}
        if self.kind == SINGLE:
            ok = keys == [WHOLE.key]
        elif self.kind == HOMOGENEOUS:
            ok = sorted(keys) == sorted(SECTOR_KEYS) and len(methods) == 1
        elif self.kind == HETEROGENEOUS:
            ok = sorted(keys) == sorted(SECTOR_KEYS) and len(methods) >= 2
        else:
            ok = False
        if not ok:
            raise ManifestError(f"{self.kind} plan with assignments {keys} / {sorted(methods)}")

    def method_for(self, sector: str) -> str:
        for a in self.assignments:
            if a.sector == sector:
                return a.method
        raise KeyError(sector)

    def summary(self) -> dict:
        return {a.sector: a.method for a in self.assignments}

    def to_dict(self) -> dict:
        return {"format_version": MANIFEST_FORMAT_VERSION, "sam_id": self.sam_id,
                "kind": self.kind, "policy": self.policy,
                "assignments": [{"sector": a.sector, "model": a.model, "method": a.method}
                                for a in self.assignments],
                "justification": self.justification}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d) -> "CompositionPlan":
        try:
            if d["format_version"] != MANIFEST_FORMAT_VERSION:
                raise ManifestError(f"unsupported manifest format_version {d['format_version']}")
            return cls(d["kind"], [Assignment(a["sector"], a["method"], a["model"])
                                   for a in d["assignments"]],
                       d["policy"], d.get("sam_id", "unknown"), d.get("justification", []))
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"malformed manifest: {exc}") from None


def _plan_from_cover(winners: dict, policy, sam_id, why) -> CompositionPlan:
    methods = {winners[k].method for k in SECTOR_KEYS}
    kind = HOMOGENEOUS if len(methods) == 1 else HETEROGENEOUS
    assigns = [Assignment(k, winners[k].method, model_filename(k, winners[k].method))
               for k in SECTOR_KEYS]
    return CompositionPlan(kind, assigns, policy, sam_id, why)


def _single(row, policy, sam_id, why) -> CompositionPlan:
    return CompositionPlan(SINGLE, [Assignment(WHOLE.key, row.method,
                                               model_filename(WHOLE.key, row.method))],
                           policy, sam_id, why)


def _require_complete(report: Report):
    if not report.rows or not report.is_complete():
        raise IncompleteReportError("composition needs all 18 (set, method) cells")


def _acc_key(r):
    return (r.rmse_nm, r.mape_pct, r.per_shot_s, METHOD_ORDER.index(r.method))


def compose_accuracy(report: Report, eps_rmse: float = 0.2, eps_mape: float = 0.2):
    """Best model per sector; a single whole-range model if it is about as good.

    The whole-range model replaces the sector models only when, in every
    sector, its RMSE and MAPE are within eps of that sector's winner.
    """
    _require_complete(report)
    policy = {"name": "accuracy", "eps_rmse_nm": eps_rmse, "eps_mape_pct": eps_mape}
    winners = {k: min((report.cell(k, m) for m in METHOD_ORDER), key=_acc_key)
               for k in SECTOR_KEYS}
    whole = min((report.cell(WHOLE.key, m) for m in METHOD_ORDER), key=_acc_key)
    why = []
    all_close = True
    for k in SECTOR_KEYS:
        w = winners[k]
        close = (whole.rmse_nm <= w.rmse_nm + eps_rmse and whole.mape_pct <= w.mape_pct + eps_mape)
        all_close &= close
        why.append(f"{k}: winner {w.method} rmse {w.rmse_nm:.4f} mape {w.mape_pct:.2f}; "
                   f"whole {whole.method} rmse {whole.rmse_nm:.4f} mape {whole.mape_pct:.2f} "
                   f"-> {'within' if close else 'outside'} tolerance")
    if all_close:
        why.append(f"whole-range {whole.method} within tolerance everywhere -> Single")
        return _single(whole, policy, report.sam_id, why)
    return _plan_from_cover(winners, policy, report.sam_id, why)


def _speed_key(r):
    return (r.per_shot_s, r.rmse_nm, METHOD_ORDER.index(r.method))


def compose_speed(report: Report, rmse_cap: float = 1.0):
    """Fastest models whose RMSE stays under the cap, judged by worst per-shot time."""
    _require_complete(report)
    policy = {"name": "speed", "rmse_cap_nm": rmse_cap}
    why = []
    winners = {}
    for k in SECTOR_KEYS:
        cands = [report.cell(k, m) for m in METHOD_ORDER if report.cell(k, m).rmse_nm <= rmse_cap]
        if cands:
            winners[k] = min(cands, key=_speed_key)
            why.append(f"{k}: fastest under cap {winners[k].method} "
                       f"({winners[k].per_shot_s:.3e} s/shot)")
        else:
            why.append(f"{k}: no model with rmse <= {rmse_cap}")
    wc = [report.cell(WHOLE.key, m) for m in METHOD_ORDER
          if report.cell(WHOLE.key, m).rmse_nm <= rmse_cap]
    whole = min(wc, key=_speed_key) if wc else None
    why.append(f"whole: {'fastest under cap ' + whole.method if whole else 'no model under cap'}")
    cover = len(winners) == len(SECTOR_KEYS)
    if not cover and whole is None:
        raise InfeasibleComposition(f"no composition meets rmse cap {rmse_cap} nm")
    if cover and whole is not None:
        worst = max(w.per_shot_s for w in winners.values())
        if whole.per_shot_s <= worst:
            why.append("whole-range model no slower than the sector cover -> Single")
            return _single(whole, policy, report.sam_id, why)
        why.append("sector cover faster than the whole-range model")
        return _plan_from_cover(winners, policy, report.sam_id, why)
    if cover:
        return _plan_from_cover(winners, policy, report.sam_id, why)
    return _single(whole, policy, report.sam_id, why)


class MultiModel:
    """A plan with its models loaded; routes each query by aspect alone."""

    def __init__(self, plan: CompositionPlan, models: dict):
        missing = [a.sector for a in plan.assignments if a.sector not in models]
        if missing:
            raise ManifestError(f"no model loaded for {missing}")
        self.plan = plan
        self.models = models
        self.method = plan.kind
        self.sam_id = plan.sam_id
        self.sector = "routed"

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.plan.kind == SINGLE:
            return self.models[WHOLE.key].predict(X)
        idx = sector_index_array(X[:, 2])
        out = np.empty(len(X))
        for i, k in enumerate(SECTOR_KEYS):
            m = idx == i
            if m.any():
                out[m] = self.models[k].predict(X[m])
        return out


def predict_multimodel(plan: CompositionPlan, models: dict, query) -> float:
    if plan.kind == SINGLE:
        key = WHOLE.key
    else:
        key = sector_of(query.aspect_deg).key
    if key not in models:
        raise ManifestError(f"no model loaded for {key}")
    return float(models[key].predict(np.array([query.as_tuple()]))[0])


def load_multimodel(manifest_path) -> MultiModel:
    from .surrogates import TrainedModel

    manifest_path = Path(manifest_path)
    plan = CompositionPlan.from_dict(json.loads(manifest_path.read_text(encoding="utf-8")))
    models = {}
    for a in plan.assignments:
        p = Path(a.model)
        if not p.is_absolute():
            p = manifest_path.parent / p
        if not p.exists():
            raise FileNotFoundError(f"model file for {a.sector} not found: {p}")
        models[a.sector] = TrainedModel.load(p)
    return MultiModel(plan, models)
