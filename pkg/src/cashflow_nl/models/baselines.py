"""Baseline forecasters: always-null, always-mean, and persistence."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_calendar, check_calendar_target


class _ConstantForecaster(RegressorMixin, BaseEstimator):
    def predict(self, X):
        check_is_fitted(self, "constant_")
        X = check_calendar(X)
        return np.full(X.shape[0], self.constant_)


class NullForecaster(_ConstantForecaster):
    """Predicts zero net cash flow for every day."""

    def fit(self, X=None, y=None):
        self.constant_ = 0.0
        return self


class MeanForecaster(_ConstantForecaster):
    """Predicts the average of all training observations."""

    def fit(self, X, y):
        X, y = check_calendar_target(X, y)
        self.constant_ = float(np.mean(y))
        return self


class PersistenceForecaster(_ConstantForecaster):
    """Predicts the last training observation at every horizon."""

    def fit(self, X, y):
        X, y = check_calendar_target(X, y)
        self.constant_ = float(y[-1])
        return self


def _dummy_calendar(n):
    return np.ones((n, 2), dtype=np.int64)


def fit_null() -> NullForecaster:
    return NullForecaster().fit()


def fit_mean(values) -> MeanForecaster:
    values = np.asarray(values, dtype=float)
    return MeanForecaster().fit(_dummy_calendar(values.size), values)


def fit_persistence(values) -> PersistenceForecaster:
    values = np.asarray(values, dtype=float)
    return PersistenceForecaster().fit(_dummy_calendar(values.size), values)
