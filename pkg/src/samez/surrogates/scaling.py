"""Per-feature affine input maps, fitted on training rows only."""
from __future__ import annotations

import numpy as np

MODES = ("minmax", "zscore", "identity")


class FeatureScaler:
    """x_scaled = (x - center) / half_width, column by column.

    minmax maps the training range onto [-1, 1]; zscore uses mean and
    standard deviation; identity leaves inputs alone. Constant columns get a
    unit half-width so the map stays invertible.
    """

    def __init__(self, mode: str, center=None, half_width=None):
        if mode not in MODES:
            raise ValueError(f"unknown scaler mode {mode!r}")
        self.mode = mode
        self.center = None if center is None else np.asarray(center, dtype=float)
        self.half_width = None if half_width is None else np.asarray(half_width, dtype=float)

    @classmethod
    def fit(cls, mode: str, X) -> "FeatureScaler":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or len(X) == 0:
            raise ValueError("need a non-empty 2-D array")
        d = X.shape[1]
        if mode == "minmax":
            lo, hi = X.min(axis=0), X.max(axis=0)
            c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        elif mode == "zscore":
            c, h = X.mean(axis=0), X.std(axis=0)
        elif mode == "identity":
            c, h = np.zeros(d), np.ones(d)
        else:
            raise ValueError(f"unknown scaler mode {mode!r}")
        h = np.where(h > 0, h, 1.0)
        return cls(mode, c, h)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.mode == "identity":
            return X
        return (X - self.center) / self.half_width

    def inverse(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if self.mode == "identity":
            return Z
        return Z * self.half_width + self.center

    def to_dict(self) -> dict:
        return {"mode": self.mode, "center": self.center.tolist(),
                "half_width": self.half_width.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureScaler":
        return cls(d["mode"], d["center"], d["half_width"])

    def __eq__(self, other):
        return (isinstance(other, FeatureScaler) and self.mode == other.mode
                and np.array_equal(self.center, other.center)
                and np.array_equal(self.half_width, other.half_width))
