import numpy as np
import pytest

from vareg.baselines import (
    apply_standardizer,
    fit_standardizer,
    make_trainer,
    train_knn,
    train_ols,
    train_ridge,
)


class TestOls:
    def test_exact_line(self):
        x = np.arange(6.0)[:, None]
        rule = train_ols(x, 2 * x[:, 0] + 1)
        assert np.allclose(rule.predict(np.array([[10.0], [-3.0]])), [21, -5], atol=1e-9)

    def test_constant_labels(self):
        x = np.random.default_rng(0).normal(size=(20, 3))
        assert np.allclose(train_ols(x, np.full(20, 4.0)).predict(x), 4.0)

    def test_residual_orthogonal(self):
        rng = np.random.default_rng(1)
        x, y = rng.normal(size=(5, 3)), rng.normal(size=5)
        resid = y - train_ols(x, y).predict(x)
        design = np.hstack([np.ones((5, 1)), x])
        assert np.all(np.abs(design.T @ resid) < 1e-8)

    def test_rank_deficient(self):
        x = np.ones((4, 2))
        x[:, 1] = np.arange(4)
        x = np.hstack([x, x[:, 1:]])
        rule = train_ols(x, np.arange(4.0))
        assert np.all(np.isfinite(rule.coef))
        assert np.allclose(rule.predict(x), np.arange(4.0))

    def test_standardization_invariance(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(50, 3)) * [1, 10, 100] + 5
        y = x @ [1.0, 0.2, 0.01] + rng.normal(size=50)
        q = rng.normal(size=(7, 3))
        s = fit_standardizer(x)
        direct = train_ols(x, y).predict(q)
        scaled = train_ols(s.transform(x), y).predict(s.transform(q))
        assert np.allclose(direct, scaled, atol=1e-6)


class TestRidge:
    def test_zero_penalty_is_ols(self):
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=(30, 4)), rng.normal(size=30)
        assert np.allclose(train_ridge(x, y, 0.0).predict(x), train_ols(x, y).predict(x), atol=1e-8)

    def test_huge_penalty_gives_mean(self):
        rng = np.random.default_rng(4)
        x, y = rng.normal(size=(30, 4)), rng.normal(size=30)
        rule = train_ridge(x, y, 1e12)
        assert np.all(np.abs(rule.coef) < 1e-9)
        assert np.allclose(rule.predict(x), y.mean(), atol=1e-9)

    def test_closed_form(self):
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=(8, 2)), rng.normal(size=8)
        xc, yc = x - x.mean(0), y - y.mean()
        coef = np.linalg.solve(xc.T @ xc + np.eye(2), xc.T @ yc)
        assert np.allclose(train_ridge(x, y, 1.0).coef, coef, atol=1e-10)

    def test_negative_penalty(self):
        with pytest.raises(ValueError):
            train_ridge(np.ones((3, 1)), np.ones(3), -1.0)


class TestKnn:
    def test_one_neighbour_recalls_label(self):
        rng = np.random.default_rng(6)
        x, y = rng.normal(size=(15, 2)), rng.normal(size=15)
        assert np.allclose(train_knn(x, y, 1).predict(x), y)

    def test_all_neighbours_give_mean(self):
        rng = np.random.default_rng(7)
        x, y = rng.normal(size=(15, 2)), rng.normal(size=15)
        assert np.allclose(train_knn(x, y, 15).predict(rng.normal(size=(4, 2))), y.mean())

    def test_brute_force(self):
        rng = np.random.default_rng(8)
        x, y = rng.integers(0, 3, (40, 2)).astype(float), rng.normal(size=40)
        q = rng.integers(0, 3, (10, 2)).astype(float)
        got = train_knn(x, y, 5).predict(q)
        for qi, g in zip(q, got):
            d = [((xi - qi) ** 2).sum() for xi in x]
            order = sorted(range(40), key=lambda i: (d[i], i))[:5]
            assert g == pytest.approx(np.mean(y[order]))

    def test_too_many_neighbours(self):
        with pytest.raises(ValueError):
            train_knn(np.ones((3, 1)), np.ones(3), 4)


class TestStandardizer:
    def test_two_values(self):
        s = fit_standardizer(np.array([[1.0], [3.0]]))
        assert s.means.tolist() == [2] and s.stddevs.tolist() == [1]
        assert apply_standardizer(s, np.array([[1.0], [3.0]])).ravel().tolist() == [-1, 1]

    def test_constant_column_guard(self):
        s = fit_standardizer(np.full((4, 1), 5.0))
        assert s.stddevs.tolist() == [1.0]
        assert np.all(np.isfinite(s.transform(np.full((2, 1), 6.0))))

    def test_moments(self):
        x = np.random.default_rng(9).normal(3, 7, size=(100, 5))
        z = fit_standardizer(x).transform(x)
        assert np.all(np.abs(z.mean(0)) < 1e-9)
        assert np.allclose(z.var(0), 1.0)


def test_make_trainer():
    x = np.random.default_rng(0).normal(size=(20, 2))
    for name in ("ols", "ridge", "knn"):
        assert make_trainer(name)(x, x[:, 0]).predict(x).shape == (20,)
    with pytest.raises(ValueError):
        make_trainer("svr")
