"""Forecasters on calendar features ``X = [[day_of_month, day_of_week], ...]``."""

from ._validation import check_calendar
from .baselines import (
    MeanForecaster,
    NullForecaster,
    PersistenceForecaster,
    fit_mean,
    fit_null,
    fit_persistence,
)
from .forest import (
    CategoricalForestRegressor,
    CategoricalTreeRegressor,
    ForestParams,
    TreeStructure,
    forest_fit,
)
from .seasonal import (
    COLUMN_NAMES,
    RankDeficientError,
    SeasonalDummyRegression,
    SeasonalRegressionReport,
    ols_seasonal_fit,
    seasonal_basis,
    seasonal_design,
)

__all__ = [
    "check_calendar",
    "MeanForecaster",
    "NullForecaster",
    "PersistenceForecaster",
    "fit_mean",
    "fit_null",
    "fit_persistence",
    "CategoricalForestRegressor",
    "CategoricalTreeRegressor",
    "ForestParams",
    "TreeStructure",
    "forest_fit",
    "COLUMN_NAMES",
    "RankDeficientError",
    "SeasonalDummyRegression",
    "SeasonalRegressionReport",
    "ols_seasonal_fit",
    "seasonal_basis",
    "seasonal_design",
]
