import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cashflow_nl.cvtest import (
    CrossValidatedLinearityTest,
    CvConfig,
    CvErrorProfile,
    Label,
    SeriesTooShortError,
    boxcox_impact_experiment,
    derive_seed,
    label_series,
    n_origins,
    nse,
    outlier_impact_experiment,
    rolling_cv,
    rolling_cv_arrays,
    transformation_impact,
)
from cashflow_nl.models import (
    CategoricalForestRegressor,
    ForestParams,
    MeanForecaster,
    NullForecaster,
    SeasonalDummyRegression,
)
from cashflow_nl.synth import SynthKind, SynthSpec, generate
from cashflow_nl.transform import BoxCoxParams

from .oracles import reference_rolling_cv

SMALL = ForestParams(n_trees=10)


def small_models():
    return [("mean", MeanForecaster()), ("ols", SeasonalDummyRegression()),
            ("rf", CategoricalForestRegressor(n_trees=10))]


def profile(values):
    return CvErrorProfile("m", np.asarray(values, dtype=float))


class TestRollingCv:
    def test_origin_count(self):
        # T = k + H + 1 gives two origins
        T, H = 250, 20
        k = int(0.8 * T)
        s = generate(SynthSpec(SynthKind.WHITE_NOISE, k + H + 1))
        assert n_origins(len(s), 0.8, H) == 2 or int(0.8 * len(s)) != k
        cfg = CvConfig(horizon=H, forest=SMALL)
        prof = rolling_cv(s, config=cfg)
        assert prof[0].origin_errors.shape == (n_origins(len(s), 0.8, H), H)

    def test_exactly_two_origins(self):
        s = generate(SynthSpec(SynthKind.WHITE_NOISE, 100))
        cfg = CvConfig(train_fraction=0.79, horizon=20, forest=SMALL)
        assert n_origins(100, 0.79, 20) == 2  # k = 79 = T - H - 1
        assert rolling_cv(s, config=cfg)[0].origin_errors.shape == (2, 20)

    def test_too_short(self):
        s = generate(SynthSpec(SynthKind.WHITE_NOISE, 100))
        with pytest.raises(SeriesTooShortError):
            rolling_cv(s, config=CvConfig(train_fraction=0.8, horizon=20))

    def test_constant_series_mean_baseline_zero(self):
        s = generate(SynthSpec(SynthKind.WHITE_NOISE, 200, level=4.0, noise_std=0.0))
        prof = rolling_cv(s, [MeanForecaster()], CvConfig(horizon=5))
        np.testing.assert_array_equal(prof[0].errors_by_horizon, np.zeros(5))

    def test_matches_reference_loop(self):
        s = generate(SynthSpec(SynthKind.NONLINEAR_INTERACTION, 260, seed=3))
        cfg = CvConfig(horizon=6, seed=11)
        fast = rolling_cv(s, small_models(), cfg, n_jobs=3)
        ref = reference_rolling_cv(s.calendar, s.values, [m for _, m in small_models()], 0.8, 6, 11,
                                   derive_seed)
        for p, r in zip(fast, ref):
            np.testing.assert_allclose(p.errors_by_horizon, r, rtol=1e-12, atol=1e-14)

    def test_bookkeeping(self):
        s = generate(SynthSpec(SynthKind.SEASONAL_LINEAR, 220, seed=4))
        for p in rolling_cv(s, small_models(), CvConfig(horizon=8)):
            n_orig = p.origin_errors.shape[0]
            np.testing.assert_allclose(p.origin_errors.sum(axis=0), n_orig * p.errors_by_horizon)
            assert np.all(p.errors_by_horizon >= 0)

    def test_workers_do_not_change_results(self):
        s = generate(SynthSpec(SynthKind.SEASONAL_LINEAR, 220, seed=4))
        a = rolling_cv(s, small_models(), CvConfig(horizon=8, seed=3))
        b = rolling_cv(s, small_models(), CvConfig(horizon=8, seed=3), n_jobs=4)
        for p, q in zip(a, b):
            np.testing.assert_array_equal(p.origin_errors, q.origin_errors)

    def test_boxcox_identity_lambda(self):
        s = generate(SynthSpec(SynthKind.SEASONAL_LINEAR, 220, seed=5))
        cfg = CvConfig(horizon=5)
        plain = rolling_cv(s, small_models(), cfg)
        shifted = rolling_cv(s, small_models(), cfg, boxcox=BoxCoxParams(1.0, 10.0))
        for p, q in zip(plain, shifted):
            np.testing.assert_allclose(q.errors_by_horizon, p.errors_by_horizon, rtol=1e-6, atol=1e-9)


class TestNse:
    def test_values(self):
        base = profile(np.arange(1.0, 21.0))
        assert nse(base, base) == 1.0
        assert nse(profile(np.arange(1.0, 21.0) / 2), base) == 0.5
        with pytest.raises(ValueError):
            nse(base, profile(np.zeros(20)))

    def test_seasonal_beats_mean(self):
        s = generate(SynthSpec.seasonal_linear(500, seed=1, r_squared=0.5))
        p = rolling_cv(s, small_models(), CvConfig())
        assert nse(p[1], p[0]) < 1.0


class TestLabel:
    def test_nonlinear_strict_ordering(self):
        e0 = np.linspace(3.0, 4.0, 20)
        rep = label_series([e0, e0 - 1.0, e0 - 2.0])
        assert rep.label is Label.NONLINEAR
        assert rep.wilcoxon_statistic == 210
        assert rep.rf_nse < rep.reg_nse < 1

    def test_baseline_dominates(self):
        e0 = np.linspace(1.0, 2.0, 20)
        assert label_series([e0, e0 + 1.0, e0 + 0.5]).label is Label.TRIVIAL

    def test_linear_when_equal_models(self):
        e0 = np.linspace(3.0, 4.0, 20)
        rep = label_series([e0, e0 - 1.0, e0 - 1.0])
        assert rep.label is Label.LINEAR
        assert (rep.wilcoxon_statistic, rep.wilcoxon_p) == (0.0, 1.0)

    def test_linear_better_than_forest(self):
        e0 = np.linspace(3.0, 4.0, 20)
        assert label_series([e0, e0 - 2.0, e0 - 1.0]).label is Label.LINEAR

    def test_only_forest_beats_baseline(self):
        e0 = np.linspace(3.0, 4.0, 20)
        noise = np.tile([0.05, -0.05], 10)
        assert label_series([e0, e0 + noise, e0 - 1.0]).label is Label.NONLINEAR

    def test_null_baseline_on_zero_series_raises(self):
        s = generate(SynthSpec(SynthKind.WHITE_NOISE, 200, noise_std=0.0))
        prof = rolling_cv(s, [NullForecaster(), MeanForecaster(), NullForecaster()],
                          CvConfig(horizon=5))
        with pytest.raises(ValueError):
            label_series(prof)

    def test_mismatched_horizons(self):
        with pytest.raises(ValueError):
            label_series([np.ones(20), np.ones(19), np.ones(20)])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10)),
                    min_size=20, max_size=20))
    def test_label_rule_properties(self, rows):
        e0, e1, e2 = np.array(rows).T
        try:
            rep = label_series([e0, e1, e2])
        except ValueError:
            return
        assert 0 <= rep.wilcoxon_statistic <= 210
        if rep.label is Label.TRIVIAL:
            assert not (rep.linear_beats_baseline or rep.nonlinear_beats_baseline)
        if rep.label is Label.NONLINEAR:
            assert rep.nonlinear_beats_linear and np.mean(e1 - e2) > 0

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10)),
                    min_size=20, max_size=20), st.floats(0.01, 100))
    def test_label_scale_invariant(self, rows, a):
        e = np.array(rows).T
        try:
            r1 = label_series(list(e))
        except ValueError:
            return
        r2 = label_series(list(e * a * a))
        assert r1.label == r2.label
        assert r1.wilcoxon_statistic == r2.wilcoxon_statistic

    def test_series_label_scale_invariant(self):
        s = generate(SynthSpec(SynthKind.NONLINEAR_INTERACTION, 300, seed=2))
        cfg = CvConfig(horizon=10, forest=SMALL)
        r1 = label_series(rolling_cv(s, config=cfg))
        r2 = label_series(rolling_cv(s.with_values(7.5 * s.values), config=cfg))
        assert r1.label == r2.label
        assert r1.wilcoxon_statistic == r2.wilcoxon_statistic
        assert r1.reg_nse == pytest.approx(r2.reg_nse, rel=1e-9)
        assert r1.rf_nse == pytest.approx(r2.rf_nse, rel=1e-9)


class TestImpact:
    def test_no_outliers(self):
        s = generate(SynthSpec(SynthKind.SINUSOID, 300, period=7))
        reps = outlier_impact_experiment(s, CvConfig(horizon=10, forest=SMALL))
        assert [r.noise_reduction for r in reps] == [0.0, 0.0, 0.0]
        assert all(r.label_before == r.label_after for r in reps)

    def test_spikes_reduce_noise(self):
        s = generate(SynthSpec.seasonal_linear(400, seed=1))
        y = s.values.copy()
        sd = y[:320].std(ddof=1)
        y[[30, 90, 200, 333, 380]] += 10 * sd
        reps = outlier_impact_experiment(s.with_values(y), CvConfig(horizon=10, forest=SMALL))
        assert reps[-1].noise_reduction > 0
        assert reps[-1].n_replaced >= 5
        assert all(r.noise_reduction <= 1 for r in reps)

    def test_cumulative_levels(self):
        s = generate(SynthSpec.seasonal_linear(300, seed=2))
        y = s.values.copy()
        y[[20, 150]] += [30.0, 8.0]
        reps = outlier_impact_experiment(s.with_values(y), CvConfig(horizon=10, forest=SMALL))
        counts = [r.n_replaced for r in reps]
        assert counts == sorted(counts)
        assert [r.stage for r in reps] == ["outliers>5sd", "outliers>4sd", "outliers>3sd"]

    def test_boxcox_multiplicative(self):
        base = generate(SynthSpec(SynthKind.SEASONAL_LINEAR, 400, seed=3, noise_std=0.3))
        s = base.with_values(np.exp(1.5 * base.values))
        cfg = CvConfig(horizon=10, forest=SMALL)
        rep = boxcox_impact_experiment(s, cfg, sigma_levels=())
        assert rep.boxcox.lambda1 < 0.5
        ref = rolling_cv(s, config=cfg)
        assert rep.report_after.reg_nse < nse(ref[1], ref[0])

    def test_boxcox_constant_series_errors(self):
        s = generate(SynthSpec(SynthKind.WHITE_NOISE, 300, noise_std=0.0))
        with pytest.raises(ValueError):
            boxcox_impact_experiment(s, CvConfig(horizon=10, forest=SMALL), sigma_levels=())

    def test_combined_matches_separate(self):
        s = generate(SynthSpec.seasonal_linear(300, seed=6))
        cfg = CvConfig(horizon=10, forest=SMALL)
        _, outl, bc = transformation_impact(s, cfg)
        assert outl == outlier_impact_experiment(s, cfg)
        assert bc == boxcox_impact_experiment(s, cfg)


class TestEstimator:
    def test_fit_sets_label(self):
        s = generate(SynthSpec.seasonal_linear(300, seed=1, r_squared=0.6))
        est = CrossValidatedLinearityTest(horizon=10,
                                          nonlinear=CategoricalForestRegressor(n_trees=10))
        est.fit(s.calendar, s.values)
        assert est.label_ is Label.LINEAR
        assert len(est.profiles_) == 3
        assert "horizon" in est.get_params()

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            CvConfig(train_fraction=1.0)
        with pytest.raises(ValueError):
            CvConfig(horizon=0)
