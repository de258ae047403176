import numpy as np
import pytest

from oracles import literal_ivar_interval, literal_winsorize, naive_pava, refit_at
from vareg.baselines import train_ols
from vareg.isotonic import CalibrationError
from vareg.probe import coverage_probe, run_probe_suite
from vareg.vennabers import (
    IvarConfig,
    ValidityError,
    bounded_calibrators,
    epsilon_to_m,
    fit_bounded,
    fit_on_split,
    fit_unbounded,
    predict_interval,
    split_training,
    unbounded_calibrators,
    validity_probe,
    winsorize,
    winsorized_test_label,
)


class IdentityRule:
    """Base rule whose score is the first feature; lets tests pick calibration scores directly."""

    def predict(self, rows):
        return np.asarray(rows, dtype=float)[:, 0]


def identity_trainer(rows, labels):
    return IdentityRule()


class TestConfig:
    def test_modes_exclusive(self):
        with pytest.raises(ValueError):
            IvarConfig(10)
        with pytest.raises(ValueError):
            IvarConfig(10, winsor_m=1, bounds=(0, 1))

    def test_m_range(self):
        IvarConfig(5, winsor_m=2)
        with pytest.raises(ValueError):
            IvarConfig(4, winsor_m=2)
        with pytest.raises(ValueError):
            IvarConfig(5, winsor_m=0)

    def test_bounds_order(self):
        with pytest.raises(ValueError):
            IvarConfig(5, bounds=(1.0, 1.0))


class TestSplit:
    def test_sizes_and_disjoint(self):
        proper, cal = split_training(10, 3, seed=4)
        assert len(cal) == 3 and len(proper) == 7
        assert sorted(np.concatenate([proper, cal]).tolist()) == list(range(10))

    def test_deterministic(self):
        a = split_training(10, 3, seed=4)
        b = split_training(10, 3, seed=4)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_uniform(self):
        counts = np.zeros(5)
        for seed in range(1000):
            counts[split_training(5, 2, seed)[1]] += 1
        p = 2 / 5
        se = np.sqrt(p * (1 - p) / 1000)
        assert np.all(np.abs(counts / 1000 - p) <= 3 * se)

    def test_too_large(self):
        with pytest.raises(ValueError, match="calibration size too large"):
            split_training(5, 5, 0)


class TestWinsorize:
    def test_upper_fit(self):
        w = winsorize([1, 2, 3, 4, 5], 1, "upper-fit")
        assert w.labels.tolist() == [2, 2, 3, 4, 5]
        assert (w.low_anchor, w.high_anchor) == (2, 5)

    def test_lower_fit(self):
        w = winsorize([1, 2, 3, 4, 5], 1, "lower-fit")
        assert w.labels.tolist() == [1, 2, 3, 4, 4]
        assert (w.low_anchor, w.high_anchor) == (1, 4)

    def test_constant(self):
        for mode in ("upper-fit", "lower-fit"):
            w = winsorize([7, 7, 7], 1, mode)
            assert w.labels.tolist() == [7, 7, 7] and w.low_anchor == w.high_anchor == 7

    def test_matches_literal_positions(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            k = int(rng.integers(3, 15))
            m = int(rng.integers(1, (k - 1) // 2 + 1))
            labels = rng.integers(-3, 4, k).astype(float)
            for mode in ("upper-fit", "lower-fit"):
                got = winsorize(labels, m, mode)
                want, lo, hi = literal_winsorize(labels.tolist(), m, mode)
                assert got.labels.tolist() == want
                assert (got.low_anchor, got.high_anchor) == (lo, hi)
                assert np.all((got.labels >= lo) & (got.labels <= hi))

    def test_too_few(self):
        with pytest.raises(CalibrationError):
            winsorize([1, 2], 1, "upper-fit")


class TestWinsorizedTestLabel:
    def test_clamps(self):
        labels = list(range(1, 10))
        assert winsorized_test_label(labels, 100.0, 1) == 9
        assert winsorized_test_label(labels, 1.5, 2) == 2
        assert winsorized_test_label(labels, 4.2, 2) == 4.2

    def test_invalid_m(self):
        with pytest.raises(CalibrationError):
            winsorized_test_label([1, 2, 3], 0.0, 0)


class TestEpsilon:
    @pytest.mark.parametrize("eps,k,m", [(0.2, 9, 1), (0.25, 9, 1), (0.5, 19, 5), (0.6, 9, 3)])
    def test_examples(self, eps, k, m):
        assert epsilon_to_m(eps, k) == m

    def test_is_largest_admissible(self):
        for k in range(3, 40):
            for eps in np.linspace(2 / (k + 1), 0.99, 17):
                m = epsilon_to_m(eps, k)
                assert 2 * m / (k + 1) <= eps + 1e-9
                assert m == (k - 1) // 2 or 2 * (m + 1) / (k + 1) > eps

    def test_range(self):
        with pytest.raises(ValueError):
            epsilon_to_m(0.1, 9)
        with pytest.raises(ValueError):
            epsilon_to_m(1.0, 9)


class TestUnbounded:
    def test_example_matches_literal_steps(self):
        scores = np.arange(1.0, 6.0)
        cals = unbounded_calibrators(scores, scores.copy(), 1)
        lower, upper = cals.interval(2.5)
        assert (lower, upper) == pytest.approx(literal_ivar_interval(scores, scores, 2.5, 1), abs=1e-12)

    def test_constant_labels(self):
        rows = np.linspace(0, 1, 30)[:, None]
        model = fit_unbounded(rows, np.full(30, 4.0), train_ols, IvarConfig(10, winsor_m=1))
        lower, upper = model.predict_intervals(np.linspace(-3, 3, 25)[:, None])
        assert np.all(lower == 4.0) and np.all(upper == 4.0)

    def test_random_match_literal_and_ordered(self):
        rng = np.random.default_rng(5)
        for _ in range(150):
            k = int(rng.integers(3, 25))
            m = int(rng.integers(1, (k - 1) // 2 + 1))
            scores = rng.integers(0, 6, k).astype(float) if rng.random() < 0.5 else rng.normal(size=k)
            labels = rng.normal(size=k)
            cals = unbounded_calibrators(scores, labels, m)
            for r in np.concatenate([rng.normal(size=3), scores[:2]]):
                lo, hi = cals.interval(r)
                assert (lo, hi) == pytest.approx(literal_ivar_interval(scores, labels, r, m), abs=1e-9)
                assert lo <= hi + 1e-9
                assert cals.low_anchor - 1e-9 <= lo and hi <= cals.high_anchor + 1e-9

    def test_fit_uses_split(self):
        rng = np.random.default_rng(2)
        rows = rng.normal(size=(60, 2))
        labels = rows @ [1.0, -1.0] + rng.normal(size=60)
        cfg = IvarConfig(20, winsor_m=2, split_seed=9)
        model = fit_unbounded(rows, labels, identity_trainer, cfg)
        _, cal = split_training(60, 20, 9)
        lo, hi = model.predict_interval(rows[0])
        want = literal_ivar_interval(rows[cal, 0], labels[cal], rows[0, 0], 2)
        assert (lo, hi) == pytest.approx(want, abs=1e-9)
        assert predict_interval(model, rows[0]) == model.predict_interval(rows[0])

    def test_dimension_mismatch(self):
        rows = np.random.default_rng(0).normal(size=(20, 3))
        model = fit_unbounded(rows, rows[:, 0], train_ols, IvarConfig(7, winsor_m=1))
        with pytest.raises(ValueError):
            model.predict_interval(np.zeros(2))

    def test_rejects_bounded_config(self):
        with pytest.raises(ValueError):
            fit_unbounded(np.zeros((5, 1)), np.zeros(5), train_ols, IvarConfig(3, bounds=(0, 1)))


class TestBounded:
    def test_two_point_example(self):
        cals = bounded_calibrators([1.0, 2.0], [0.0, 1.0], (0.0, 1.0))
        assert cals.interval(1.5) == (0.0, 1.0)

    def test_violating_label(self):
        rows = np.arange(6.0)[:, None]
        with pytest.raises(CalibrationError, match="label violates declared bounds"):
            fit_bounded(rows, np.array([0, 0.5, 2, 0, 0, 0]), train_ols, IvarConfig(2, bounds=(0, 1)))

    def test_all_labels_at_top(self):
        scores = np.array([0.1, 0.4, 0.9])
        cals = bounded_calibrators(scores, np.ones(3), (0.0, 1.0))
        lo, hi = cals.interval(0.5)
        assert hi == 1.0
        assert lo == pytest.approx(refit_at(scores, [1, 1, 1], 0.5, 0.0), abs=1e-12)

    def test_single_calibration_point_is_finite(self):
        rows = np.arange(5.0)[:, None]
        model = fit_bounded(rows, np.array([0.2, 0.4, 0.6, 0.8, 1.0]), identity_trainer,
                            IvarConfig(1, bounds=(0.0, 1.0), split_seed=3))
        lo, hi = model.predict_interval(np.array([2.5]))
        assert np.isfinite(lo) and np.isfinite(hi) and lo <= hi

    def test_selector_inside_interval(self):
        # The fit with the true test label lies between the two extreme refits.
        rng = np.random.default_rng(8)
        for _ in range(300):
            k = int(rng.integers(1, 9))
            scores = rng.integers(0, 4, k + 1).astype(float)
            labels = rng.uniform(0, 1, k + 1)
            cals = bounded_calibrators(scores[:k], labels[:k], (0.0, 1.0))
            lo, hi = cals.interval(scores[k])
            s = naive_pava(scores.tolist(), labels.tolist())[float(scores[k])]
            assert lo - 1e-9 <= s <= hi + 1e-9

    def test_same_query_same_answer(self):
        rng = np.random.default_rng(1)
        rows = rng.normal(size=(40, 2))
        labels = rng.uniform(0, 1, 40)
        model = fit_bounded(rows, labels, train_ols, IvarConfig(15, bounds=(0.0, 1.0)))
        assert model.predict_interval(rows[3]) == model.predict_interval(rows[3])


class TestValidity:
    def test_constant_bag(self):
        groups = validity_probe([1.0, 2.0, 3.0, 4.0], [5.0] * 4, 1)
        assert groups == {5.0: (5.0, 4)}

    def test_bag_too_small(self):
        with pytest.raises(CalibrationError):
            validity_probe([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 1)

    def test_random_bags(self):
        summary = run_probe_suite(np.random.default_rng(0), bags=100, max_k=8, m=1)
        assert summary.selector_violations == 0
        assert summary.ordering_violations == 0
        assert summary.max_calibration_error <= 1e-9

    def test_random_bags_larger_m(self):
        summary = run_probe_suite(np.random.default_rng(1), bags=50, max_k=10, m=2)
        assert summary.selector_violations == 0 and summary.max_calibration_error <= 1e-9

    def test_violation_is_reported(self, monkeypatch):
        import vareg.vennabers as vb

        real = vb.unbounded_calibrators

        class Shifted:
            def __init__(self, inner):
                self.inner = inner

            def interval(self, r):
                lo, hi = self.inner.interval(r)
                return lo + 100.0, hi + 100.0

        monkeypatch.setattr(vb, "unbounded_calibrators", lambda *a: Shifted(real(*a)))
        with pytest.raises(ValidityError):
            validity_probe([1.0, 2.0, 3.0, 4.0], [1.0, 0.0, 3.0, 2.0], 1)

    def test_coverage_small_k(self):
        freq, bound = coverage_probe(np.random.default_rng(0), draws=20000, k=19, m=2)
        assert freq <= bound
