"""Trained surrogate: scaler + method parameters, JSON round-trip."""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from ..engagement import EngagementQuery
from . import mlp as _mlp
from .forest import Forest, RfrHyper, fit_forest
from .poly import PrHyper, UnderdeterminedError, exponents, poly_features, solve_ls
from .scaling import FeatureScaler

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
METHODS = ("PR", "ANN", "RFR")


class ModelFormatError(ValueError):
    pass


class TrainedModel:
    def __init__(self, method, scaler: FeatureScaler, hyper, payload: dict,
                 sam_id: str = "unknown", sector: str = "whole", meta: dict | None = None):
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        self.method = method
        self.scaler = scaler
        self.hyper = hyper
        self.payload = payload
        self.sam_id = sam_id
        self.sector = sector
        self.meta = dict(meta or {})
        self._forest = None
        if method == "RFR":
            self._forest = payload["forest"]

    # -- evaluation -------------------------------------------------------
    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = self.scaler.transform(X)
        if self.method == "PR":
            return poly_features(Z, self.payload["exponents"]) @ self.payload["coef"]
        if self.method == "RFR":
            return self._forest.predict(Z)
        p = self.payload
        out = _mlp.forward(p["theta"], p["sizes"], Z)
        return out * p["y_scale"] + p["y_center"]

    def outside_domain(self, X) -> np.ndarray:
        """Rows outside the training box or, for a sector model, outside its sector."""
        from ..sampling import in_box, sector_by_key

        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = ~in_box(X)
        if self.sector != "whole":
            sec = sector_by_key(self.sector)
            out |= ~np.array([sec.contains(a) for a in X[:, 2]], dtype=bool)
        return out

    @property
    def complexity(self) -> int:
        """Feature count (PR), parameter count (ANN) or node count (RFR)."""
        if self.method == "PR":
            return len(self.payload["exponents"])
        if self.method == "ANN":
            return len(self.payload["theta"])
        return len(self._forest.feature)

    # -- persistence ------------------------------------------------------
    def to_dict(self) -> dict:
        if self.method == "PR":
            params = {"exponents": self.payload["exponents"].tolist(),
                      "coefficients": self.payload["coef"].tolist()}
        elif self.method == "RFR":
            params = {"trees": list(self._forest.trees())}
        else:
            p = self.payload
            params = {"sizes": list(p["sizes"]), "y_center": p["y_center"],
                      "y_scale": p["y_scale"],
                      "layers": [{"W": W.tolist(), "b": b.tolist()}
                                 for W, b in _mlp.unpack(p["theta"], p["sizes"])]}
        return {"format_version": MODEL_FORMAT_VERSION, "method": self.method,
                "sam_id": self.sam_id, "sector": self.sector,
                "scaler": self.scaler.to_dict(), "hyper": self.hyper.to_dict(),
                "parameters": params, "training": self.meta}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        try:
            if d["format_version"] != MODEL_FORMAT_VERSION:
                raise ModelFormatError(f"unsupported model format_version {d['format_version']}")
            method = d["method"]
            params = d["parameters"]
            scaler = FeatureScaler.from_dict(d["scaler"])
            if method == "PR":
                hyper = PrHyper(**d["hyper"])
                payload = {"exponents": np.asarray(params["exponents"], dtype=np.int64),
                           "coef": np.asarray(params["coefficients"], dtype=float)}
            elif method == "RFR":
                hyper = RfrHyper(**d["hyper"])
                payload = {"forest": Forest.from_trees(params["trees"])}
            elif method == "ANN":
                hyper = _mlp.MlpHyper(**d["hyper"])
                sizes = tuple(params["sizes"])
                theta = np.concatenate([np.concatenate([np.asarray(L["W"], float).ravel(),
                                                        np.asarray(L["b"], float)])
                                        for L in params["layers"]])
                if len(theta) != _mlp.n_params(sizes):
                    raise ModelFormatError("layer shapes do not match sizes")
                payload = {"theta": theta, "sizes": sizes, "y_center": float(params["y_center"]),
                           "y_scale": float(params["y_scale"])}
            else:
                raise ModelFormatError(f"unknown method {method!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelFormatError):
                raise
            raise ModelFormatError(f"malformed model document: {exc}") from None
        return cls(method, scaler, hyper, payload, d.get("sam_id", "unknown"),
                   d.get("sector", "whole"), d.get("training", {}))

    @classmethod
    def loads(cls, text: str) -> "TrainedModel":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"not JSON: {exc}") from None
        return cls.from_dict(d)

    def save(self, path, force: bool = False) -> Path:
        path = Path(path)
        if path.exists() and not force:
            raise FileExistsError(f"{path} exists; pass force to overwrite")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "TrainedModel":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def __repr__(self):
        return f"TrainedModel({self.method}, {self.sam_id}, {self.sector})"


def fit_pr(X, y, hyper: PrHyper = PrHyper(), **tags) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    exps = exponents(hyper.max_degree, hyper.max_interact_degree)
    if len(y) <= len(exps):
        raise UnderdeterminedError(f"{len(y)} rows for {len(exps)} polynomial features")
    scaler = FeatureScaler.fit("minmax", X)
    coef = solve_ls(poly_features(scaler.transform(X), exps), y)
    return TrainedModel("PR", scaler, hyper, {"exponents": exps, "coef": coef}, **tags)


def fit_rfr(X, y, hyper: RfrHyper = RfrHyper(), seed: int = 0, **tags) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    if len(X) < 1:
        raise ValueError("empty training set")
    scaler = FeatureScaler.fit("identity", X)
    forest = fit_forest(X, y, hyper, seed)
    return TrainedModel("RFR", scaler, hyper, {"forest": forest}, **tags)


def fit_mlp(Xtr, ytr, Xval, yval, hyper: _mlp.MlpHyper = _mlp.MlpHyper(), seed: int = 0,
            **tags) -> TrainedModel:
    """Inputs z-scored and target standardized on the training rows only."""
    Xtr = np.asarray(Xtr, dtype=float)
    ytr = np.asarray(ytr, dtype=float)
    if len(ytr) == 0 or len(yval) == 0:
        raise ValueError("train and validation sets must be non-empty")
    scaler = FeatureScaler.fit("zscore", Xtr)
    yc = float(ytr.mean())
    ys = float(ytr.std()) or 1.0
    fit = _mlp.train(scaler.transform(Xtr), (ytr - yc) / ys, scaler.transform(Xval),
                     (np.asarray(yval, dtype=float) - yc) / ys, hyper, seed)
    payload = {"theta": fit.theta, "sizes": fit.sizes, "y_center": yc, "y_scale": ys}
    tags.setdefault("meta", {})
    tags["meta"] = {**tags["meta"], "epochs_run": fit.epochs_run, "best_epoch": fit.best_epoch}
    return TrainedModel("ANN", scaler, hyper, payload, **tags)


def carve_validation(n: int, seed: int, fraction: float = 0.1):
    """(train_idx, val_idx) with round(fraction * n) >= 1 validation rows."""
    if n < 2:
        raise ValueError("need at least 2 rows to carve a validation set")
    perm = np.random.default_rng(seed).permutation(n)
    k = min(n - 1, max(1, int(round(fraction * n))))
    return np.sort(perm[k:]), np.sort(perm[:k])


def fit_mlp_carved(X, y, hyper, seed: int, **tags) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    tr, va = carve_validation(len(y), seed)
    return fit_mlp(X[tr], y[tr], X[va], y[va], hyper, seed, **tags)


def predict(model: TrainedModel, query: EngagementQuery):
    """(max_range_nm, extrapolated); out-of-box queries still get an answer."""
    extrapolated = bool(model.outside_domain([query.as_tuple()])[0])
    if extrapolated:
        log.warning("query %s outside the %s model's training domain; extrapolating",
                    query.as_tuple(), model.sector)
    return float(model.predict(np.array([query.as_tuple()]))[0]), extrapolated
