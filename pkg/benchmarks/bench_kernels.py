"""Compiled vs pure-Python kernels on representative workloads.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import statistics
import timeit

import numpy as np

from samez import kernels
from samez.engagement import EngagementQuery, setup_engagement
from samez.params import NM, SAM_A


def flyout_case():
    m, t = setup_engagement(EngagementQuery(10000.0, 450.0, 180.0), 20 * NM, SAM_A)
    cdm, cdon, cdoff = SAM_A.cd_arrays()
    args = (SAM_A.kernel_vector(), cdm, cdon, cdoff, (*m.position, *m.velocity, m.time),
            (*t.position, *t.velocity), 0.02)
    return lambda: kernels.run_flyout(*args)


def tree_case(n=2000):
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (n, 3))
    y = np.sin(3 * X[:, 0]) + X[:, 1] * X[:, 2]
    w = rng.integers(1, 3, n).astype(float)
    orders = np.stack([np.argsort(X[:, j], kind="stable") for j in range(3)]).astype(np.int64)
    # build_tree partitions `orders` in place, so every run gets a fresh copy
    return lambda: kernels.build_tree(X, y, w, orders.copy(), 2, 1, -1)


def forest_case(n=1000):
    from samez.surrogates import RfrHyper, fit_forest

    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, (480, 3))
    f = fit_forest(X, X.sum(axis=1), RfrHyper(), 0)
    Q = rng.uniform(-1, 1, (n, 3))
    return lambda: kernels.predict_forest(Q, f.feature, f.threshold, f.left, f.right, f.value,
                                          f.roots)


def adam_case(n=149249):
    rng = np.random.default_rng(2)
    th, g = rng.normal(size=n), rng.normal(size=n)
    m, v, tmp = np.zeros(n), np.zeros(n), np.empty(n)
    return lambda: kernels.adam_step(th, g, m, v, tmp, 1e-3, 0.9, 0.999, 1.0, 1e-8)


CASES = {
    "run_flyout (one SAM_A shot, dt 0.02)": flyout_case,
    "build_tree (2000 rows)": tree_case,
    "predict_forest (100 trees x 1000 rows)": forest_case,
    "adam_step (2x32 net)": lambda: adam_case(1249),
    "adam_step (10x128 net)": adam_case,
}


def bench(fn, repeat):
    t = timeit.Timer(fn)
    number, _ = t.autorange()
    return statistics.median(t.repeat(repeat, number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    if "compiled" not in kernels.BACKENDS:
        print("compiled kernels not built; only the Python timings are shown")
    print(f"{'kernel':42s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, make in CASES.items():
        t = {}
        for be in kernels.BACKENDS:
            kernels.use_backend(be)
            t[be] = bench(make(), a.repeat)
        c = t.get("compiled")
        sp = f"{t['python'] / c:7.1f}x" if c else "-"
        cs = f"{c * 1e3:9.3f}ms" if c else "-"
        print(f"{name:42s} {t['python'] * 1e3:9.3f}ms {cs:>10s} {sp:>8s}")
    kernels.use_backend(kernels.BACKENDS[0])


if __name__ == "__main__":
    main()
