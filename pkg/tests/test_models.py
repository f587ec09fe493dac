import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from cashflow_nl.models import (
    COLUMN_NAMES,
    CategoricalForestRegressor,
    CategoricalTreeRegressor,
    MeanForecaster,
    NullForecaster,
    PersistenceForecaster,
    RankDeficientError,
    SeasonalDummyRegression,
    check_calendar,
    forest_fit,
    ForestParams,
    ols_seasonal_fit,
    seasonal_design,
)
from cashflow_nl.synth import DEFAULT_RULE, SynthKind, SynthSpec, generate

from .oracles import brute_forest_predict, brute_tree, brute_tree_predict, dummy_design, ols_normal_equations

ALL_CELLS = np.array([[d, w] for d in range(1, 32) for w in range(1, 8)])


def random_calendar(rng, n, n_dom=31, n_dow=5):
    return np.column_stack([rng.integers(1, n_dom + 1, n), rng.integers(1, n_dow + 1, n)])


class TestValidation:
    @pytest.mark.parametrize("X", [[[0, 1]], [[32, 1]], [[1, 8]], [[1.5, 2]], [[1, 2, 3]]])
    def test_rejects_bad_calendar(self, X):
        with pytest.raises(ValueError):
            check_calendar(X)

    def test_accepts_integral_floats(self):
        assert check_calendar([[3.0, 2.0]]).dtype.kind == "i"


class TestBaselines:
    def test_mean_and_null(self):
        X = [[1, 1], [2, 2], [3, 3]]
        y = [1.0, 2.0, 6.0]
        np.testing.assert_array_equal(MeanForecaster().fit(X, y).predict([[5, 5]]), [3.0])
        np.testing.assert_array_equal(NullForecaster().fit(X, y).predict([[5, 5], [1, 1]]), [0, 0])

    def test_persistence(self):
        m = PersistenceForecaster().fit([[1, 1], [2, 2]], [4.0, -1.0])
        np.testing.assert_array_equal(m.predict([[3, 3], [4, 4]]), [-1.0, -1.0])

    def test_unfitted(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            MeanForecaster().predict([[1, 1]])


class TestSeasonalRegression:
    def test_design_matches_oracle(self):
        X = random_calendar(np.random.default_rng(0), 100, n_dow=7)
        np.testing.assert_array_equal(seasonal_design(X), dummy_design(X))
        assert len(COLUMN_NAMES) == 35

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_normal_equations(self, seed):
        rng = np.random.default_rng(seed)
        X = np.vstack([[[d, 1 + d % 5] for d in range(1, 32)], random_calendar(rng, 200)])
        X[31:36, 1] = [1, 2, 3, 4, 5]
        y = rng.normal(size=len(X)) + 0.1 * X[:, 0]
        model, rep = ols_seasonal_fit(X, y)
        beta, f, r2 = ols_normal_equations(X, y)
        np.testing.assert_allclose(model.coef_, beta, atol=1e-8)
        assert rep.f_statistic == pytest.approx(f, rel=1e-8)
        assert rep.r_squared == pytest.approx(r2, abs=1e-8)
        assert (rep.df_model, rep.df_resid) == (34, len(X) - 35)

    def test_perfect_fit(self):
        series = generate(SynthSpec(SynthKind.SEASONAL_LINEAR, 300, noise_std=0.0))
        _, rep = ols_seasonal_fit(series.calendar, series.values)
        assert rep.r_squared == pytest.approx(1.0, abs=1e-12)
        assert rep.p_value == 0.0

    def test_unseen_columns_dropped(self):
        X = np.array([[1, 1], [1, 2], [2, 1], [2, 2], [31, 5], [31, 1], [2, 5]])
        y = np.arange(7.0)
        m = SeasonalDummyRegression().fit(X, y)
        assert m.active_.sum() == 5
        assert m.coef_[~m.active_].tolist() == [0.0] * 30
        # a never-seen day of month is predicted at the reference level
        assert m.predict([[10, 5]])[0] == pytest.approx(m.intercept_)

    def test_too_few_rows_and_constant(self):
        with pytest.raises(ValueError):
            SeasonalDummyRegression().fit([[1, 1], [2, 2]], [1.0, 2.0])
        X = random_calendar(np.random.default_rng(1), 100)
        m = SeasonalDummyRegression().fit(X, np.full(100, 3.0))
        with pytest.raises(ValueError):
            m.report()

    def test_rank_deficient(self):
        # day-of-month 1 always on Monday and 2 always on Tuesday, nothing else
        X = np.array([[1, 1], [2, 2]] * 10)
        with pytest.raises(RankDeficientError):
            SeasonalDummyRegression().fit(X, np.arange(20.0))

    def test_sklearn_clone(self):
        assert clone(SeasonalDummyRegression()).get_params() == {}


def brute_predict(X, y, min_leaf, exhaustive):
    tree = brute_tree(X, y, min_leaf, exhaustive)
    return np.array([brute_tree_predict(tree, x) for x in ALL_CELLS])


class TestTree:
    def test_recovers_default_rule(self):
        spec = SynthSpec(SynthKind.NONLINEAR_INTERACTION, 600, noise_std=0.0)
        s = generate(spec)
        t = CategoricalTreeRegressor(min_leaf=1).fit(s.calendar, s.values)
        np.testing.assert_allclose(t.predict([[27, 5], [27, 3], [10, 5], [30, 1]]), [-1, -2, 2, 2])
        assert t.tree_.node_count == 5
        assert "DOM in {25,26,27,28,29}" in t.tree_.export_text()

    @pytest.mark.parametrize("seed", range(12))
    def test_exhaustive_oracle(self, seed):
        # with min_leaf=1 the best mean-ordered cut is the best of all subsets
        rng = np.random.default_rng(seed)
        n = int(rng.integers(8, 40))
        X = random_calendar(rng, n, n_dom=5, n_dow=4)
        y = rng.normal(size=n)
        t = CategoricalTreeRegressor(min_leaf=1).fit(X, y)
        np.testing.assert_allclose(t.predict(ALL_CELLS), brute_predict(X, y, 1, True), atol=1e-9)

    @pytest.mark.parametrize("seed", range(12))
    def test_ordered_cut_oracle(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(10, 60))
        X = random_calendar(rng, n, n_dom=8, n_dow=5)
        y = rng.normal(size=n) + (X[:, 0] % 3 == 0)
        ml = int(rng.integers(2, 5))
        t = CategoricalTreeRegressor(min_leaf=ml).fit(X, y)
        np.testing.assert_allclose(t.predict(ALL_CELLS), brute_predict(X, y, ml, False), atol=1e-9)

    def test_min_leaf_respected(self):
        rng = np.random.default_rng(3)
        X = random_calendar(rng, 300)
        t = CategoricalTreeRegressor(min_leaf=7).fit(X, rng.normal(size=300)).tree_
        leaves = t.feature < 0
        assert t.weight[leaves].min() >= 7
        assert t.weight[leaves].sum() == 300

    def test_needs_two_leaves_of_rows(self):
        with pytest.raises(ValueError):
            CategoricalTreeRegressor(min_leaf=5).fit([[1, 1]] * 9, np.arange(9.0))


class TestForest:
    @pytest.mark.parametrize("seed", range(4))
    def test_bootstrap_oracle(self, seed):
        rng = np.random.default_rng(200 + seed)
        n = int(rng.integers(20, 50))
        X = random_calendar(rng, n, n_dom=6, n_dow=5)
        y = rng.normal(size=n) + X[:, 1] * (X[:, 0] > 3)
        f = CategoricalForestRegressor(n_trees=4, min_leaf=2, random_state=seed).fit(X, y)
        ref = brute_forest_predict(X, y, ALL_CELLS, 4, 2, seed)
        np.testing.assert_allclose(f.predict(ALL_CELLS), ref, atol=1e-9)

    def test_n_jobs_invariant(self):
        rng = np.random.default_rng(5)
        X = random_calendar(rng, 400)
        y = rng.normal(size=400)
        a = CategoricalForestRegressor(n_trees=30, random_state=9).fit(X, y).predict(ALL_CELLS)
        b = CategoricalForestRegressor(n_trees=30, random_state=9, n_jobs=4).fit(X, y).predict(ALL_CELLS)
        np.testing.assert_array_equal(a, b)

    def test_seed_matters(self):
        rng = np.random.default_rng(6)
        X = random_calendar(rng, 200)
        y = rng.normal(size=200)
        a = CategoricalForestRegressor(n_trees=5, random_state=1).fit(X, y).predict(ALL_CELLS)
        b = CategoricalForestRegressor(n_trees=5, random_state=2).fit(X, y).predict(ALL_CELLS)
        assert not np.array_equal(a, b)

    def test_forest_fit_helper_and_params(self):
        rng = np.random.default_rng(7)
        X = random_calendar(rng, 100)
        y = rng.normal(size=100)
        f = forest_fit(X, y, ForestParams(n_trees=3, min_leaf=2, seed=4))
        assert f.get_params()["n_trees"] == 3
        assert len(f.estimators_) == 3
        ref = CategoricalForestRegressor(n_trees=3, min_leaf=2, random_state=4).fit(X, y)
        np.testing.assert_array_equal(f.predict(X), ref.predict(X))

    def test_no_bootstrap_is_tree_average(self):
        rng = np.random.default_rng(8)
        X = random_calendar(rng, 150)
        y = rng.normal(size=150)
        f = CategoricalForestRegressor(n_trees=3, bootstrap=False).fit(X, y)
        t = CategoricalTreeRegressor().fit(X, y)
        np.testing.assert_allclose(f.predict(ALL_CELLS), t.predict(ALL_CELLS))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.01, 100.0), st.floats(-50.0, 50.0))
    def test_affine_equivariant(self, seed, a, b):
        rng = np.random.default_rng(seed)
        X = random_calendar(rng, 120)
        y = rng.normal(size=120)
        f1 = CategoricalForestRegressor(n_trees=5, random_state=seed).fit(X, y)
        f2 = CategoricalForestRegressor(n_trees=5, random_state=seed).fit(X, a * y + b)
        np.testing.assert_allclose(f2.predict(ALL_CELLS), a * f1.predict(ALL_CELLS) + b,
                                   rtol=1e-9, atol=1e-9 * (abs(b) + a))

    def test_default_rule_in_every_region(self):
        s = generate(SynthSpec(SynthKind.NONLINEAR_INTERACTION, 800, noise_std=0.0))
        f = CategoricalForestRegressor(n_trees=20, min_leaf=1).fit(s.calendar, s.values)
        for region in DEFAULT_RULE:
            cell = [[region.dom_lo, min(region.dow_hi, 5)]]
            assert f.predict(cell)[0] == pytest.approx(region.value)
