"""Hyperparameter grids scored by k-fold cross-validation."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..sampling import kfold
from .forest import RfrHyper
from .mlp import MLP_LAYERS, MLP_UNITS, MlpHyper, n_params
from .model import fit_mlp_carved, fit_pr, fit_rfr
from .poly import PR_DEGREES, PrHyper, UnderdeterminedError, exponents

log = logging.getLogger(__name__)


def default_grid(method: str) -> list:
    if method == "PR":
        return [PrHyper(d) for d in PR_DEGREES]
    if method == "ANN":
        return [MlpHyper(n, u) for n in MLP_LAYERS for u in MLP_UNITS]
    if method == "RFR":
        return [RfrHyper()]
    raise ValueError(f"unknown method {method!r}")


def complexity(hyper) -> int:
    if isinstance(hyper, PrHyper):
        return len(exponents(hyper.max_degree, hyper.max_interact_degree))
    if isinstance(hyper, MlpHyper):
        return n_params(hyper.sizes)
    return 0


def unit_seed(*key) -> int:
    """Stable 32-bit seed for a work unit (master seed, grid index, fold)."""
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(1)[0])


def fit(method: str, X, y, hyper, seed: int, **tags):
    if method == "PR":
        return fit_pr(X, y, hyper, **tags)
    if method == "RFR":
        return fit_rfr(X, y, hyper, seed, **tags)
    if method == "ANN":
        return fit_mlp_carved(X, y, hyper, seed, **tags)
    raise ValueError(f"unknown method {method!r}")


def _rmse(y, yh):
    r = np.asarray(y) - np.asarray(yh)
    return float(np.sqrt(np.mean(r * r)))


def _mape(y, yh):
    y = np.asarray(y)
    return float(np.mean(100.0 * np.abs(y - np.asarray(yh)) / y))


@dataclass
class CvEntry:
    hyper: object
    rmse_folds: list = field(default_factory=list)
    mape_folds: list = field(default_factory=list)
    #: reason the grid point could not be fitted on the folds, if any
    skipped: str | None = None

    @property
    def rmse_mean(self):
        return float(np.mean(self.rmse_folds)) if self.rmse_folds else float("inf")

    @property
    def rmse_std(self):
        return float(np.std(self.rmse_folds))

    @property
    def mape_mean(self):
        return float(np.mean(self.mape_folds))

    @property
    def mape_std(self):
        return float(np.std(self.mape_folds))

    def to_dict(self):
        if self.skipped:
            return {"hyper": self.hyper.to_dict(), "skipped": self.skipped}
        return {"hyper": self.hyper.to_dict(), "rmse_folds": self.rmse_folds,
                "mape_folds": self.mape_folds, "rmse_mean": self.rmse_mean,
                "rmse_std": self.rmse_std, "mape_mean": self.mape_mean,
                "mape_std": self.mape_std}


@dataclass
class CvReport:
    method: str
    k: int
    seed: int
    entries: list
    best_index: int

    @property
    def best(self) -> CvEntry:
        return self.entries[self.best_index]

    def summary(self) -> str:
        b = self.best
        return (f"{self.method}: RMSE {b.rmse_mean:.4f} nm ± {b.rmse_std:.4f} nm, "
                f"MAPE {b.mape_mean:.2f}% ± {b.mape_std:.2f}%")

    def to_dict(self):
        return {"method": self.method, "k": self.k, "seed": self.seed,
                "best_index": self.best_index, "entries": [e.to_dict() for e in self.entries]}


def grid_search(method: str, X, y, seed: int = 0, k: int = 5, grid=None, **tags):
    """Score every grid point by k-fold CV mean RMSE and refit the winner.

    Ties go to the smaller model. Each (grid point, fold) fit gets its own
    seed derived from the master seed, so results do not depend on order.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) < k:
        raise ValueError(f"need at least {k} training rows")
    grid = list(grid) if grid is not None else default_grid(method)
    folds = kfold(len(y), k, seed)
    entries = []
    for gi, hyper in enumerate(grid):
        e = CvEntry(hyper)
        entries.append(e)
        try:
            for fi, val in enumerate(folds):
                tr = np.setdiff1d(np.arange(len(y)), val, assume_unique=True)
                m = fit(method, X[tr], y[tr], hyper, unit_seed(seed, gi, fi))
                yh = m.predict(X[val])
                e.rmse_folds.append(_rmse(y[val], yh))
                e.mape_folds.append(_mape(y[val], yh))
        except UnderdeterminedError as exc:
            # too few rows per fold for this basis; the rest of the grid still competes
            e.rmse_folds, e.mape_folds, e.skipped = [], [], str(exc)
            log.warning("%s %s skipped: %s", method, hyper, exc)
            continue
        log.info("%s %s cv rmse %.4f", method, hyper, e.rmse_mean)
    if all(e.skipped for e in entries):
        raise UnderdeterminedError(f"no {method} grid point can be fitted on {len(y)} rows")
    best = min(range(len(entries)),
               key=lambda i: (entries[i].rmse_mean, complexity(entries[i].hyper), i))
    report = CvReport(method, k, seed, entries, best)
    hyper = entries[best].hyper
    meta = {"seed": seed, "hyper": hyper.to_dict(), "cv_rmse_mean": entries[best].rmse_mean,
            "cv_rmse_std": entries[best].rmse_std, "cv_mape_mean": entries[best].mape_mean,
            "cv_mape_std": entries[best].mape_std, **tags.pop("meta", {})}
    model = fit(method, X, y, hyper, unit_seed(seed, best, k), meta=meta, **tags)
    return hyper, model, report
