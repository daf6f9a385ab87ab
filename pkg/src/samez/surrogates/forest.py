"""Bagged CART regression forest."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels


@dataclass(frozen=True)
class RfrHyper:
    n_estimators: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: int = 3
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_estimators < 1 or self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise ValueError("invalid forest hyperparameters")
        if self.max_features != 3:
            # only three inputs exist, so every split sees all of them
            raise ValueError("max_features must be 3")

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class Forest:
    """All trees concatenated; child indices are global, leaves have feature -1."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    roots: np.ndarray

    @property
    def n_trees(self) -> int:
        return len(self.roots)

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return kernels.predict_forest(X, self.feature, self.threshold, self.left, self.right,
                                      self.value, self.roots)

    def trees(self):
        """Per-tree node arrays with tree-local child indices."""
        ends = list(self.roots[1:]) + [len(self.feature)]
        for r, e in zip(self.roots, ends):
            lft = self.left[r:e].copy()
            rgt = self.right[r:e].copy()
            lft[lft >= 0] -= r
            rgt[rgt >= 0] -= r
            yield {"feature": self.feature[r:e].tolist(), "threshold": self.threshold[r:e].tolist(),
                   "left": lft.tolist(), "right": rgt.tolist(), "value": self.value[r:e].tolist()}

    @classmethod
    def from_trees(cls, trees) -> "Forest":
        parts = {k: [] for k in ("feature", "threshold", "left", "right", "value")}
        roots = []
        off = 0
        for t in trees:
            roots.append(off)
            n = len(t["feature"])
            for k in ("feature", "left", "right"):
                a = np.asarray(t[k], dtype=np.int64)
                if k != "feature":
                    a = np.where(a >= 0, a + off, -1)
                parts[k].append(a)
            parts["threshold"].append(np.asarray(t["threshold"], dtype=np.float64))
            parts["value"].append(np.asarray(t["value"], dtype=np.float64))
            off += n
        cat = {k: np.concatenate(v) for k, v in parts.items()}
        return cls(cat["feature"], cat["threshold"], cat["left"], cat["right"], cat["value"],
                   np.asarray(roots, dtype=np.int64))


def fit_forest(X, y, hyper: RfrHyper, seed: int) -> Forest:
    """Each tree sees a bootstrap resample, passed as distinct rows plus counts."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = X.shape
    if n < 1:
        raise ValueError("empty training set")
    rng = np.random.default_rng(seed)
    depth = -1 if hyper.max_depth is None else int(hyper.max_depth)
    trees = []
    for _ in range(hyper.n_estimators):
        if hyper.bootstrap:
            counts = np.bincount(rng.integers(0, n, size=n), minlength=n)
        else:
            counts = np.ones(n, dtype=np.int64)
        rows = np.flatnonzero(counts)
        Xb = np.ascontiguousarray(X[rows])
        orders = np.ascontiguousarray(
            np.stack([np.argsort(Xb[:, j], kind="stable") for j in range(d)]), dtype=np.int64)
        f, t, lft, rgt, v = kernels.build_tree(Xb, np.ascontiguousarray(y[rows]),
                                               counts[rows].astype(np.float64), orders,
                                               hyper.min_samples_split, hyper.min_samples_leaf,
                                               depth)
        trees.append({"feature": f, "threshold": t, "left": lft, "right": rgt, "value": v})
    return Forest.from_trees(trees)
