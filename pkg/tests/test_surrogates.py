import itertools
import json
import re

import numpy as np
import pytest

from samez.engagement import EngagementQuery
from samez.surrogates import (MLP_LAYERS, MLP_UNITS, FeatureScaler, MlpHyper, ModelFormatError,
                              PrHyper, RfrHyper, TrainedModel, TrainingDiverged,
                              UnderdeterminedError, default_grid, exponents, fit_mlp,
                              fit_mlp_carved, fit_pr, fit_rfr, gradient_check, grid_search,
                              poly_features, predict)
from samez.surrogates import mlp as mlp_mod
from samez.surrogates import search
from samez.surrogates.model import carve_validation


def _brute_exponents(d, inter=3):
    out = set()
    for e in itertools.product(range(d + 1), repeat=3):
        s = sum(e)
        if s > d:
            continue
        if sum(1 for a in e if a) >= 2 and s > inter:
            continue
        out.add(e)
    return out


@pytest.mark.parametrize("d, count", [(9, 38), (10, 41), (12, 47), (13, 50), (14, 53),
                                      (15, 56)])
def test_feature_counts(d, count):
    exps = exponents(d)
    as_set = {tuple(map(int, e)) for e in exps}
    assert as_set == _brute_exponents(d)
    assert len(exps) == len(as_set) == count


def test_exponent_order_and_content():
    exps = [tuple(map(int, e)) for e in exponents(9)]
    assert exps[:4] == [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    degrees = [sum(e) for e in exps]
    assert degrees == sorted(degrees)
    assert (9, 0, 0) in exps and (4, 1, 0) not in exps and (1, 1, 1) in exps
    F = poly_features(np.zeros((1, 3)), exponents(9))
    assert F[0, 0] == 1.0 and not F[0, 1:].any()
    Z = np.array([[0.5, -0.25, 2.0]])
    F = poly_features(Z, exponents(9))
    expect = [np.prod(Z[0] ** np.array(e)) for e in exps]
    np.testing.assert_allclose(F[0], expect, rtol=1e-15)


def test_pr_hyper_grid():
    with pytest.raises(ValueError):
        PrHyper(11)
    with pytest.raises(ValueError):
        PrHyper(9, 4)


def _unit_design(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 3))
    X[:2] = [[-1, -1, -1], [1, 1, 1]]  # pins the min-max scaler to the identity
    return X


def test_pr_recovers_exact_polynomial():
    X = _unit_design(200, 0)
    y = 2 + 3 * X[:, 0] - X[:, 1] * X[:, 2]
    m = fit_pr(X, y, PrHyper(9))
    exps = [tuple(map(int, e)) for e in m.payload["exponents"]]
    want = np.zeros(len(exps))
    want[exps.index((0, 0, 0))] = 2
    want[exps.index((1, 0, 0))] = 3
    want[exps.index((0, 1, 1))] = -1
    assert np.max(np.abs(m.payload["coef"] - want)) < 1e-6
    r = m.predict(X) - y
    assert np.sqrt(np.mean(r * r)) < 1e-8
    Xq = np.random.default_rng(1).uniform(-1, 1, (50, 3))
    np.testing.assert_allclose(m.predict(Xq), 2 + 3 * Xq[:, 0] - Xq[:, 1] * Xq[:, 2],
                               atol=1e-6)


def test_pr_constant_duplicates_and_underdetermined():
    X = _unit_design(100, 2)
    m = fit_pr(X, np.full(100, 7.5))
    assert m.payload["coef"][0] == pytest.approx(7.5, abs=1e-8)
    assert np.max(np.abs(m.payload["coef"][1:])) < 1e-8
    y = np.sin(X).sum(axis=1)
    a = fit_pr(X, y)
    b = fit_pr(np.vstack([X, X]), np.concatenate([y, y]))
    Xq = np.random.default_rng(3).uniform(-1, 1, (200, 3))
    np.testing.assert_allclose(a.predict(Xq), b.predict(Xq), rtol=0, atol=1e-8)
    with pytest.raises(UnderdeterminedError):
        fit_pr(X[:38], y[:38], PrHyper(9))


def test_scaler_round_trip():
    X = np.random.default_rng(3).uniform([-5000, 200, 0], [45000, 850, 180], (100, 3))
    for mode in ("minmax", "zscore", "identity"):
        s = FeatureScaler.fit(mode, X)
        np.testing.assert_allclose(s.inverse(s.transform(X)), X, rtol=1e-12)
        assert FeatureScaler.from_dict(json.loads(json.dumps(s.to_dict()))) == s
    mm = FeatureScaler.fit("minmax", X).transform(X)
    assert mm.min() >= -1 - 1e-12 and mm.max() <= 1 + 1e-12
    const = FeatureScaler.fit("zscore", np.ones((5, 3)))
    assert np.isfinite(const.transform(np.ones((2, 3)))).all()
    with pytest.raises(ValueError):
        FeatureScaler.fit("robust", X)


def test_rfr_bounds_and_single_row():
    rng = np.random.default_rng(4)
    X = rng.uniform(-1, 1, (300, 3))
    y = np.exp(X[:, 0]) + X[:, 1]
    m = fit_rfr(X, y, RfrHyper(n_estimators=20), 0)
    p = m.predict(rng.uniform(-3, 3, (1000, 3)))
    assert p.min() >= y.min() and p.max() <= y.max()
    one = fit_rfr(X[:1], y[:1], RfrHyper(n_estimators=5), 0)
    assert np.all(one.predict(rng.uniform(-1, 1, (10, 3))) == y[0])


def test_rfr_step_function_fixture():
    rng = np.random.default_rng(5)

    def f(X):
        return (np.where(X[:, 0] > 0.3, 10.0, 2.0) + np.where(X[:, 1] < -0.5, 5.0, 0.0)
                + np.where((X[:, 2] > 0) & (X[:, 0] < -0.2), 3.0, 0.0))

    X = rng.uniform(-1, 1, (2000, 3))
    Xt = rng.uniform(-1, 1, (1000, 3))
    m = fit_rfr(X, f(X), RfrHyper(), 7)
    yt = f(Xt)
    rmse = np.sqrt(np.mean((m.predict(Xt) - yt) ** 2))
    assert rmse < 0.05 * (yt.max() - yt.min())


def test_rfr_hyper_defaults():
    h = RfrHyper()
    assert (h.n_estimators, h.max_depth, h.min_samples_split, h.min_samples_leaf,
            h.max_features, h.bootstrap) == (100, None, 2, 1, 3, True)


def _smooth(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 3))
    return X, np.sin(2 * X[:, 0]) + X[:, 1] ** 2 - 0.5 * X[:, 2]


def test_mlp_gradient_check_small():
    X, y = _smooth(6, 0)
    err, g, num = gradient_check((3, 32, 32, 1), X, y, seed=1)
    assert err < 1e-4
    assert g.shape == num.shape == (mlp_mod.n_params((3, 32, 32, 1)),)


def test_mlp_training_reduces_loss():
    X, y = _smooth(200, 1)
    h = MlpHyper(max_epochs=5)
    theta0 = mlp_mod.init_params(h.sizes, np.random.default_rng(3))
    fit = mlp_mod.train(X, y, X[:20], y[:20], h, 3)
    l0, _ = mlp_mod.loss_and_grad(theta0, h.sizes, X, y)
    l1, _ = mlp_mod.loss_and_grad(fit.theta, h.sizes, X, y)
    assert l1 < l0


def test_mlp_patience_contract():
    X, y = _smooth(64, 2)
    rng = np.random.default_rng(0)
    # validation targets unrelated to the inputs stop improving quickly
    h = MlpHyper(patience=3, max_epochs=200)
    fit = mlp_mod.train(X, y, X[:16], rng.normal(size=16) * 5, h, 0)
    assert fit.epochs_run <= fit.best_epoch + h.patience
    if fit.epochs_run < h.max_epochs:
        assert fit.epochs_run == fit.best_epoch + h.patience
    assert len(fit.history) == fit.epochs_run
    assert fit.best_val_loss == min(fit.history)


def test_mlp_diverged():
    X, y = _smooth(32, 3)
    y[5] = np.nan
    with pytest.raises(TrainingDiverged) as ei:
        mlp_mod.train(X, y, X[:4], y[:4] * 0, MlpHyper(), 0)
    assert ei.value.epoch == 1


def test_mlp_hyper_grid():
    assert len(default_grid("ANN")) == 9
    assert {(h.n_hidden_layers, h.units_per_layer) for h in default_grid("ANN")} == \
        set(itertools.product(MLP_LAYERS, MLP_UNITS))
    h = MlpHyper()
    assert (h.batch_size, h.patience, h.learning_rate, h.beta1, h.beta2, h.eps) == \
        (16, 10, 0.001, 0.9, 0.999, 1e-8)
    with pytest.raises(ValueError):
        MlpHyper(3, 32)
    with pytest.raises(ValueError):
        MlpHyper(2, 48)


def test_fit_mlp_deterministic_and_carve():
    X, y = _smooth(120, 4)
    h = MlpHyper(max_epochs=15)
    a = fit_mlp_carved(X, y * 10 + 30, h, 5)
    b = fit_mlp_carved(X, y * 10 + 30, h, 5)
    assert np.array_equal(a.predict(X), b.predict(X))
    assert a.meta["epochs_run"] >= a.meta["best_epoch"] >= 1
    tr, va = carve_validation(120, 5)
    assert len(va) == 12 and len(np.intersect1d(tr, va)) == 0 and len(tr) + len(va) == 120
    with pytest.raises(ValueError):
        fit_mlp(X, y, X[:0], y[:0], h, 0)


@pytest.fixture(scope="module")
def trained():
    rng = np.random.default_rng(6)
    X = rng.uniform([-5000, 200, 144], [45000, 850, 153], (150, 3))
    y = 20 + X[:, 0] / 5000 - X[:, 1] / 100 + np.sin(X[:, 2])
    tags = {"sam_id": "sam_a", "sector": "s1", "meta": {"seed": 1}}
    return X, [fit_pr(X, y, PrHyper(9), **tags),
               fit_rfr(X, y, RfrHyper(n_estimators=10), 1, **tags),
               fit_mlp_carved(X, y, MlpHyper(max_epochs=10), 1, **tags)]


def test_serialization_round_trip(trained, tmp_path):
    X, models = trained
    for m in models:
        p = m.save(tmp_path / f"{m.method}.json")
        back = TrainedModel.load(p)
        assert np.array_equal(back.predict(X), m.predict(X))
        assert back.dumps() == m.dumps()
        d = json.loads(p.read_text())
        assert {"format_version", "method", "sam_id", "sector", "scaler", "hyper",
                "parameters", "training"} <= set(d)
        assert (d["sam_id"], d["sector"]) == ("sam_a", "s1")
        with pytest.raises(FileExistsError):
            m.save(p)
    d = json.loads(models[0].dumps())
    d["format_version"] = 99
    with pytest.raises(ModelFormatError):
        TrainedModel.from_dict(d)
    with pytest.raises(ModelFormatError):
        TrainedModel.loads("{not json")


def test_predict_query_and_extrapolation(trained, caplog):
    X, models = trained
    for m in models:
        v, ext = predict(m, EngagementQuery(10000, 400, 150))
        assert not ext and v == m.predict(np.array([[10000, 400, 150]]))[0]
        assert predict(m, EngagementQuery(10000, 400, 150))[0] == v
    v, ext = predict(models[0], EngagementQuery(60000, 400, 150))
    assert ext and np.isfinite(v)
    assert "extrapolating" in caplog.text
    # inside the box but outside the model's own sector
    assert predict(models[0], EngagementQuery(10000, 400, 10))[1]
    np.testing.assert_array_equal(models[0].outside_domain([[0, 400, 150], [0, 400, 170],
                                                            [0, 100, 150]]), [False, True, True])


def test_grid_search_pr_and_report():
    X = _unit_design(300, 7)
    y = 10 + 2 * X[:, 0] ** 5 + X[:, 1] * X[:, 2]
    hyper, model, rep = grid_search("PR", X, y, seed=3, sam_id="a", sector="s0")
    assert len(rep.entries) == 6
    assert all(len(e.rmse_folds) == 5 for e in rep.entries)
    assert hyper == rep.best.hyper == model.hyper
    assert model.meta["cv_rmse_mean"] == rep.best.rmse_mean
    assert re.fullmatch(r"PR: RMSE \d+\.\d{4} nm ± \d+\.\d{4} nm, MAPE \d+\.\d{2}% ± \d+\.\d{2}%",
                        rep.summary())
    again = grid_search("PR", X, y, seed=3, sam_id="a", sector="s0")
    assert again[0] == hyper and again[1].dumps() == model.dumps()


def test_grid_search_tie_prefers_smaller_model(monkeypatch):
    class Mean:
        def __init__(self, y):
            self.c = float(np.mean(y))

        def predict(self, X):
            return np.full(len(X), self.c)

    monkeypatch.setattr(search, "fit", lambda method, X, y, hyper, seed, **kw: Mean(y))
    X = _unit_design(60, 8)
    y = X[:, 0] + 5
    hyper, _, rep = grid_search("PR", X, y, grid=[PrHyper(15), PrHyper(12), PrHyper(9)])
    assert hyper == PrHyper(9) and rep.best_index == 2


def test_grid_search_skips_underdetermined_points():
    X = _unit_design(60, 9)  # 48 rows per training fold
    y = X.sum(axis=1) + 5
    hyper, _, rep = grid_search("PR", X, y)
    assert hyper == PrHyper(9)
    assert [e.skipped is None for e in rep.entries] == [True, True, True, False, False, False]
    with pytest.raises(UnderdeterminedError):
        grid_search("PR", X[:40], y[:40])
    with pytest.raises(ValueError):
        grid_search("SVM", X, y)
