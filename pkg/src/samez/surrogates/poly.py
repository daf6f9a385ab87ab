"""Polynomial regression on a capped monomial basis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PR_DEGREES = (9, 10, 12, 13, 14, 15)
RIDGE = 1e-10


class UnderdeterminedError(ValueError):
    pass


@dataclass(frozen=True)
class PrHyper:
    max_degree: int = 9
    max_interact_degree: int = 3

    def __post_init__(self):
        if self.max_degree not in PR_DEGREES:
            raise ValueError(f"max_degree must be one of {PR_DEGREES}")
        if self.max_interact_degree != 3:
            raise ValueError("max_interact_degree is fixed at 3")

    def to_dict(self):
        return {"max_degree": self.max_degree, "max_interact_degree": self.max_interact_degree}


def exponents(max_degree: int, max_interact_degree: int = 3, n_vars: int = 3) -> np.ndarray:
    """Exponent tuples in graded lexicographic order.

    Single-variable powers go up to max_degree; any monomial mixing two or
    more variables is capped at max_interact_degree total.
    """
    out = []
    for total in range(max_degree + 1):
        for e in _compositions(total, n_vars):
            if sum(1 for a in e if a) >= 2 and total > max_interact_degree:
                continue
            out.append(e)
    return np.array(out, dtype=np.int64).reshape(-1, n_vars)


def _compositions(total, k):
    # descending lexicographic: (total,0,0), (total-1,1,0), ...
    if k == 1:
        yield (total,)
        return
    for a in range(total, -1, -1):
        for rest in _compositions(total - a, k - 1):
            yield (a, *rest)


def poly_features(Z, exps) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    exps = np.asarray(exps, dtype=np.int64)
    top = int(exps.max()) if exps.size else 0
    # powers[j, k] = Z[:, j] ** k, built by repeated products
    powers = np.ones((Z.shape[1], top + 1, Z.shape[0]))
    for k in range(1, top + 1):
        powers[:, k] = powers[:, k - 1] * Z.T
    F = np.ones((Z.shape[0], len(exps)))
    for j in range(Z.shape[1]):
        F *= powers[j, exps[:, j]].T
    return F


def solve_ls(F, y) -> np.ndarray:
    """Least squares through an SVD, with a tiny ridge against rank loss."""
    n, p = F.shape
    A = np.vstack([F, np.sqrt(RIDGE) * np.eye(p)])
    b = np.concatenate([np.asarray(y, dtype=float), np.zeros(p)])
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    return coef
