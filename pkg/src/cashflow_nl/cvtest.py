"""Cross-validated non-linearity test.

A baseline, a linear and a non-linear forecaster are compared by
rolling-origin cross-validation with an expanding window. Their per-horizon
mean squared errors are compared pairwise with the Wilcoxon signed-rank test
to label a series Trivial, Linear or NonLinear. The module also runs the
outlier-treatment and Box-Cox impact experiments on top of that test.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, clone

from .dataset import CashFlowSeries
from .models import (
    CategoricalForestRegressor,
    ForestParams,
    MeanForecaster,
    SeasonalDummyRegression,
    check_calendar,
)
from .stattests import wilcoxon_signed_rank
from .transform import (
    LAMBDA_GRID,
    BoxCoxParams,
    boxcox_apply,
    boxcox_fit_lambda,
    boxcox_inverse,
    replace_outliers,
)

__all__ = [
    "CrossValidatedLinearityTest",
    "CvConfig",
    "CvErrorProfile",
    "ImpactReport",
    "Label",
    "LabelReport",
    "SeriesTooShortError",
    "boxcox_impact_experiment",
    "default_models",
    "derive_seed",
    "label_series",
    "n_origins",
    "nse",
    "outlier_impact_experiment",
    "rolling_cv",
    "rolling_cv_arrays",
    "transformation_impact",
]


class Label(str, Enum):
    TRIVIAL = "Trivial"
    LINEAR = "Linear"
    NONLINEAR = "NonLinear"

    @property
    def triviality(self) -> str:
        return "Trivial" if self is Label.TRIVIAL else "Non-Trivial"

    @property
    def linearity(self) -> str:
        return {Label.TRIVIAL: "-", Label.LINEAR: "Linear", Label.NONLINEAR: "Non-linear"}[self]


class SeriesTooShortError(ValueError):
    pass


@dataclass(frozen=True)
class CvConfig:
    train_fraction: float = 0.8
    horizon: int = 20
    alpha: float = 0.05
    seed: int = 0
    forest: ForestParams = field(default_factory=ForestParams)

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class CvErrorProfile:
    """Per-horizon average squared errors of one model.

    ``origin_errors[i, h - 1]`` is the squared error at horizon ``h`` for
    origin ``i``; ``errors_by_horizon`` is its column mean.
    """

    model_name: str
    errors_by_horizon: np.ndarray
    origin_errors: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.errors_by_horizon.size

    @property
    def total(self) -> float:
        return float(self.errors_by_horizon.sum())


@dataclass(frozen=True)
class LabelReport:
    label: Label
    reg_nse: float
    rf_nse: float
    wilcoxon_statistic: float
    wilcoxon_p: float
    linear_beats_baseline: bool = False
    nonlinear_beats_baseline: bool = False
    nonlinear_beats_linear: bool = False

    def as_dict(self) -> dict:
        return {
            "label": self.label.value,
            "triviality": self.label.triviality,
            "linearity": self.label.linearity,
            "reg_nse": self.reg_nse,
            "rf_nse": self.rf_nse,
            "wilcoxon_statistic": self.wilcoxon_statistic,
            "wilcoxon_p": self.wilcoxon_p,
        }


@dataclass(frozen=True)
class ImpactReport:
    label_before: Label
    label_after: Label
    noise_reduction: float
    stage: str = ""
    n_replaced: int = 0
    report_after: LabelReport | None = None
    boxcox: BoxCoxParams | None = None

    def as_dict(self) -> dict:
        d = {
            "stage": self.stage,
            "label_before": self.label_before.value,
            "label_after": self.label_after.value,
            "noise_reduction": self.noise_reduction,
            "n_replaced": self.n_replaced,
        }
        if self.boxcox is not None:
            d["lambda1"] = self.boxcox.lambda1
            d["lambda2"] = self.boxcox.lambda2
        return d


# ---------------------------------------------------------------------------
# rolling-origin cross-validation
# ---------------------------------------------------------------------------

def default_models(forest: ForestParams = ForestParams()):
    """``(name, estimator)`` pairs for the mean baseline, the seasonal
    regression and the random forest."""
    return [
        ("mean", MeanForecaster()),
        ("regression", SeasonalDummyRegression()),
        ("forest", CategoricalForestRegressor(
            n_trees=forest.n_trees, min_leaf=forest.min_leaf, bootstrap=forest.bootstrap,
            random_state=forest.seed)),
    ]


def derive_seed(*keys: int) -> int:
    """Deterministic 32-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def n_origins(length: int, train_fraction: float, horizon: int) -> int:
    k = int(math.floor(train_fraction * length))
    return length - k - horizon + 1


def _named(models) -> list[tuple[str, BaseEstimator]]:
    out = []
    for i, m in enumerate(models):
        if isinstance(m, tuple):
            out.append((str(m[0]), m[1]))
        else:
            out.append((f"{type(m).__name__}_{i}", m))
    return out


def _clip_to_domain(z: np.ndarray, params: BoxCoxParams, z_train: np.ndarray) -> np.ndarray:
    """Replace forecasts outside the invertible range by the nearest training extreme."""
    if params.lambda1 == 0.0:
        return z
    bad = params.lambda1 * z + 1.0 <= 0.0
    if bad.any():
        z = z.copy()
        # out-of-range forecasts lie beyond one end of the training range
        z[bad] = z_train.min() if params.lambda1 > 0 else z_train.max()
    return z


def rolling_cv_arrays(X, y, models=None, config: CvConfig = CvConfig(),
                      boxcox: BoxCoxParams | None = None, n_jobs: int = 1,
                      keep_origin_errors: bool = True) -> tuple[CvErrorProfile, ...]:
    """Expanding-window cross-validation on calendar features ``X`` and target ``y``.

    With ``k = floor(train_fraction * T)``, origin ``i = 1 .. T - k - H + 1``
    fits every model on rows ``1 .. k + i - 1`` and forecasts rows
    ``k + i .. k + i + H - 1``. Models exposing ``random_state`` get a seed
    derived from ``(config.seed, model index, i)``, so results do not depend
    on ``n_jobs``.

    With ``boxcox`` set, models are fitted on the transformed target and
    their forecasts mapped back before squared errors are taken.
    """
    X = check_calendar(X)
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise ValueError("X and y lengths differ")
    T = y.size
    H = config.horizon
    k = int(math.floor(config.train_fraction * T))
    n_orig = T - k - H + 1
    if n_orig < 2:
        raise SeriesTooShortError(
            f"series of length {T} is too short for train_fraction={config.train_fraction}, "
            f"horizon={H} (needs at least 2 origins, got {max(n_orig, 0)})"
        )
    named = _named(default_models(config.forest) if models is None else models)
    target = y if boxcox is None else boxcox_apply(y, boxcox)
    seeded = ["random_state" in m.get_params(deep=False) for _, m in named]

    def run_origin(i: int) -> np.ndarray:
        end = k + i - 1
        Xtr, ztr = X[:end], target[:end]
        Xte, yte = X[end:end + H], y[end:end + H]
        errs = np.empty((len(named), H))
        for j, (_, proto) in enumerate(named):
            est = clone(proto)
            if seeded[j]:
                est.set_params(random_state=derive_seed(config.seed, j, i))
            pred = est.fit(Xtr, ztr).predict(Xte)
            if boxcox is not None:
                pred = boxcox_inverse(_clip_to_domain(pred, boxcox, ztr), boxcox)
            errs[j] = (yte - pred) ** 2
        return errs

    origins = range(1, n_orig + 1)
    if n_jobs is not None and n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            per_origin = list(pool.map(run_origin, origins))
    else:
        per_origin = [run_origin(i) for i in origins]
    stacked = np.stack(per_origin, axis=1)  # (model, origin, horizon)
    return tuple(
        CvErrorProfile(name, stacked[j].mean(axis=0), stacked[j] if keep_origin_errors else None)
        for j, (name, _) in enumerate(named)
    )


def rolling_cv(series: CashFlowSeries, models=None, config: CvConfig = CvConfig(),
               boxcox: BoxCoxParams | None = None, n_jobs: int = 1) -> tuple[CvErrorProfile, ...]:
    """:func:`rolling_cv_arrays` on a :class:`CashFlowSeries`."""
    return rolling_cv_arrays(series.calendar, series.values, models, config, boxcox, n_jobs)


# ---------------------------------------------------------------------------
# labelling
# ---------------------------------------------------------------------------

def _errors(p) -> np.ndarray:
    return p.errors_by_horizon if isinstance(p, CvErrorProfile) else np.asarray(p, dtype=float)


def nse(model_profile, baseline_profile) -> float:
    """Total squared error of a model relative to the baseline's."""
    num = float(_errors(model_profile).sum())
    den = float(_errors(baseline_profile).sum())
    if not den > 0.0:
        raise ValueError("baseline has zero total error; NSE is undefined")
    return num / den


def _beats(better, worse, alpha):
    """Whether ``better`` has significantly lower errors than ``worse``."""
    res = wilcoxon_signed_rank(worse, better, alpha)
    return res.rejected and float(np.mean(worse - better)) > 0.0, res


def label_series(profiles: Sequence, alpha: float = 0.05) -> LabelReport:
    """Label from the baseline, linear and non-linear error profiles.

    A model beats another when the two-sided Wilcoxon test on their paired
    per-horizon errors rejects at ``alpha`` and its mean error is lower. The
    series is Trivial if neither model beats the baseline, otherwise
    NonLinear if the non-linear model beats the linear one, otherwise
    Linear. The reported Wilcoxon statistic is ``W+`` of linear minus
    non-linear errors; when those errors coincide exactly it is 0 with
    p-value 1 and the label falls back to Linear.

    Raises
    ------
    ValueError
        If the profiles differ in length, or a model's errors coincide with
        the baseline's at every horizon.
    """
    e0, e1, e2 = (_errors(p) for p in profiles)
    if not e0.size == e1.size == e2.size:
        raise ValueError("profiles must share the same horizon")
    lin_base, _ = _beats(e1, e0, alpha)
    nl_base, _ = _beats(e2, e0, alpha)
    try:
        nl_lin, res = _beats(e2, e1, alpha)
        stat, p = res.statistic, res.p_value
    except ValueError:
        nl_lin, stat, p = False, 0.0, 1.0
    if not (lin_base or nl_base):
        label = Label.TRIVIAL
    elif nl_lin:
        label = Label.NONLINEAR
    else:
        label = Label.LINEAR
    return LabelReport(label, nse(e1, e0), nse(e2, e0), stat, p, lin_base, nl_base, nl_lin)


class CrossValidatedLinearityTest(BaseEstimator):
    """Estimator wrapper around :func:`rolling_cv_arrays` and :func:`label_series`.

    ``fit(X, y)`` takes calendar features and the cash-flow values and sets
    ``profiles_``, ``report_`` and ``label_``.
    """

    def __init__(self, baseline=None, linear=None, nonlinear=None, train_fraction=0.8,
                 horizon=20, alpha=0.05, random_state=0, n_jobs=1):
        self.baseline = baseline
        self.linear = linear
        self.nonlinear = nonlinear
        self.train_fraction = train_fraction
        self.horizon = horizon
        self.alpha = alpha
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        config = CvConfig(self.train_fraction, self.horizon, self.alpha, self.random_state)
        defaults = dict(default_models(config.forest))
        models = [
            ("baseline", self.baseline if self.baseline is not None else defaults["mean"]),
            ("linear", self.linear if self.linear is not None else defaults["regression"]),
            ("nonlinear", self.nonlinear if self.nonlinear is not None else defaults["forest"]),
        ]
        self.profiles_ = rolling_cv_arrays(X, y, models, config, n_jobs=self.n_jobs)
        self.report_ = label_series(self.profiles_, self.alpha)
        self.label_ = self.report_.label
        return self


# ---------------------------------------------------------------------------
# transformation impact
# ---------------------------------------------------------------------------

def _model_error(profiles) -> float:
    """Combined error of the linear and non-linear models."""
    return float(profiles[1].errors_by_horizon.sum() + profiles[2].errors_by_horizon.sum())


def _noise_reduction(before, after) -> float:
    e_before = _model_error(before)
    if not e_before > 0.0:
        raise ValueError("zero model error before treatment; noise reduction is undefined")
    return 1.0 - _model_error(after) / e_before


def _outlier_stages(series, config, sigma_levels, models, n_jobs):
    """Yield ``(k, treated series, n_replaced, profiles)`` per cumulative level,
    preceded by the untreated run with ``k = None``."""
    profiles = rolling_cv(series, models, config, n_jobs=n_jobs)
    yield None, series, 0, profiles
    current = series
    for k in sigma_levels:
        treated, rep = replace_outliers(current, k, config.train_fraction)
        if rep.replaced_indices:
            current = treated
            profiles = rolling_cv(current, models, config, n_jobs=n_jobs)
        yield k, current, len(rep.replaced_indices), profiles


def outlier_impact_experiment(series: CashFlowSeries, config: CvConfig = CvConfig(),
                              sigma_levels: Sequence[float] = (5, 4, 3), models=None,
                              n_jobs: int = 1) -> list[ImpactReport]:
    """Treat outliers at each sigma level in turn and re-run the test.

    Levels are applied cumulatively: level ``k`` is applied to the series
    already treated at the previous levels, with the training mean and
    standard deviation re-estimated each time. Every report compares against
    the untreated series; ``noise_reduction = 1 - E_after / E_before`` with
    ``E`` the summed per-horizon errors of the linear and non-linear models.
    """
    return transformation_impact(series, config, sigma_levels, False, models, n_jobs=n_jobs)[1]


def boxcox_impact_experiment(series: CashFlowSeries, config: CvConfig = CvConfig(),
                             sigma_levels: Sequence[float] = (5, 4, 3), models=None,
                             grid: Sequence[float] = LAMBDA_GRID, n_jobs: int = 1) -> ImpactReport:
    """Compare the outlier-treated series with and without a Box-Cox transform.

    Box-Cox parameters are fitted on the training window of the treated
    series; the whole treated series must lie in the transform's domain.
    """
    treated = series
    replaced = 0
    for k in sigma_levels:
        treated, rep = replace_outliers(treated, k, config.train_fraction)
        replaced += len(rep.replaced_indices)
    reference = rolling_cv(treated, models, config, n_jobs=n_jobs)
    return _boxcox_stage(treated, reference, config, models, grid, n_jobs, replaced)


def transformation_impact(series: CashFlowSeries, config: CvConfig = CvConfig(),
                          sigma_levels: Sequence[float] = (5, 4, 3), boxcox: bool = True,
                          models=None, grid: Sequence[float] = LAMBDA_GRID, n_jobs: int = 1):
    """Run both impact experiments while sharing their cross-validation runs.

    Returns ``(raw label report, outlier reports, Box-Cox report or None)``;
    the reports equal those of :func:`outlier_impact_experiment` and
    :func:`boxcox_impact_experiment`.
    """
    stages = _outlier_stages(series, config, sigma_levels, models, n_jobs)
    _, treated, _, raw = next(stages)
    raw_label = label_series(raw, config.alpha)
    reports = []
    replaced = 0
    profiles = raw
    for k, treated, n_rep, profiles in stages:
        replaced += n_rep
        after = label_series(profiles, config.alpha)
        reports.append(ImpactReport(raw_label.label, after.label, _noise_reduction(raw, profiles),
                                    stage=f"outliers>{k:g}sd", n_replaced=replaced,
                                    report_after=after))
    bc = None
    if boxcox:
        bc = _boxcox_stage(treated, profiles, config, models, grid, n_jobs, replaced)
    return raw_label, reports, bc


def _boxcox_stage(treated, reference, config, models, grid, n_jobs, replaced=0) -> ImpactReport:
    k = int(math.floor(config.train_fraction * len(treated)))
    y = treated.values
    params = boxcox_fit_lambda(y[:k], treated.calendar[:k], grid)
    if np.any(y + params.lambda2 <= 0.0):
        raise ValueError(
            "series leaves the Box-Cox domain fitted on the training window "
            f"(lambda2={params.lambda2:g}, min={y.min():g})"
        )
    transformed = rolling_cv(treated, models, config, boxcox=params, n_jobs=n_jobs)
    before = label_series(reference, config.alpha)
    after = label_series(transformed, config.alpha)
    return ImpactReport(before.label, after.label, _noise_reduction(reference, transformed),
                        stage="outliers+boxcox", n_replaced=replaced, report_after=after,
                        boxcox=params)
