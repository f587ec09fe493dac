"""Data transformations: sigma trimming, shifted Box-Cox, differencing and
outlier replacement by linear interpolation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .dataset import CashFlowSeries
from .models.seasonal import seasonal_basis

__all__ = [
    "BoxCoxParams",
    "BoxCoxTransformer",
    "OutlierInterpolator",
    "OutlierTreatmentReport",
    "LAMBDA_GRID",
    "boxcox_apply",
    "boxcox_inverse",
    "boxcox_shift",
    "boxcox_profile_loglik",
    "boxcox_fit_lambda",
    "difference",
    "replace_outliers",
    "trim_sigma",
]

LAMBDA_GRID = np.round(np.arange(-200, 201) / 100.0, 2)


def _values(values) -> np.ndarray:
    y = np.asarray(values.values if isinstance(values, CashFlowSeries) else values, dtype=float)
    if y.ndim != 1:
        raise ValueError(f"expected a one-dimensional sequence, got shape {y.shape}")
    return y


def _mean_std(y: np.ndarray) -> tuple[float, float]:
    if y.size < 2:
        raise ValueError("need at least 2 observations")
    std = float(np.std(y, ddof=1))
    if std == 0.0:
        raise ValueError("zero variance")
    return float(np.mean(y)), std


def trim_sigma(values: Sequence[float], k: float = 3.0) -> np.ndarray:
    """Drop observations further than ``k`` sample standard deviations from
    the sample mean (both computed on the full input)."""
    y = _values(values)
    mean, std = _mean_std(y)
    if math.isinf(k):
        return y.copy()
    return y[np.abs(y - mean) <= k * std]


def difference(values: Sequence[float]) -> np.ndarray:
    y = _values(values)
    if y.size < 2:
        raise ValueError("differencing needs at least 2 observations")
    return np.diff(y)


# ---------------------------------------------------------------------------
# Box-Cox
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxCoxParams:
    """Power ``lambda1`` and shift ``lambda2`` of the shifted Box-Cox transform."""

    lambda1: float
    lambda2: float = 0.0


def boxcox_apply(values: Sequence[float], params: BoxCoxParams) -> np.ndarray:
    """``((y + l2)**l1 - 1) / l1``, or ``log(y + l2)`` when ``l1 == 0``."""
    y = _values(values) + params.lambda2
    if np.any(y <= 0.0):
        raise ValueError("Box-Cox needs y + lambda2 > 0 for every observation")
    if params.lambda1 == 0.0:
        return np.log(y)
    return np.expm1(params.lambda1 * np.log(y)) / params.lambda1


def boxcox_inverse(values: Sequence[float], params: BoxCoxParams) -> np.ndarray:
    """Inverse of :func:`boxcox_apply`.

    For strongly negative ``lambda1`` and large ``y + lambda2`` the
    transformed value approaches ``-1 / lambda1`` and the round trip loses
    digits (about ``1e-16 * (y + lambda2) ** -lambda1`` relative error).
    """
    z = _values(values)
    l1 = params.lambda1
    if l1 == 0.0:
        return np.exp(z) - params.lambda2
    base = l1 * z + 1.0
    if np.any(base <= 0.0):
        raise ValueError("value outside the range of the Box-Cox transform (lambda1 * z + 1 <= 0)")
    return np.exp(np.log1p(l1 * z) / l1) - params.lambda2


def boxcox_shift(values: Sequence[float]) -> float:
    """Shift making the series positive: ``-2 * min`` for a negative minimum,
    1 for a zero minimum and 0 otherwise."""
    lo = float(np.min(_values(values)))
    if lo < 0.0:
        return -2.0 * lo
    if lo == 0.0:
        return 1.0
    return 0.0


def boxcox_profile_loglik(values: Sequence[float], calendar, lambda2: float,
                          grid: Sequence[float] = LAMBDA_GRID) -> np.ndarray:
    """Profile log-likelihood of ``lambda1`` under the seasonal dummy regression.

    For each grid value, the transformed series is regressed on the calendar
    dummies and ``-n/2 * log(RSS/n) + (lambda1 - 1) * sum(log(y + lambda2))``
    is returned (the second term is the Jacobian of the transform).
    """
    y = _values(values) + lambda2
    if np.any(y <= 0.0):
        raise ValueError("shifted series must be positive")
    grid = np.asarray(grid, dtype=float)
    n = y.size
    Q = seasonal_basis(calendar)
    logy = np.log(y)
    with np.errstate(over="ignore", invalid="ignore"):
        lam = np.where(grid == 0.0, 1.0, grid)
        Z = np.where(grid == 0.0, logy[:, None], np.expm1(logy[:, None] * grid) / lam)
        R = Z - Q @ (Q.T @ Z)
        rss = np.einsum("ij,ij->j", R, R)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -0.5 * n * np.log(rss / n) + (grid - 1.0) * logy.sum()


def boxcox_fit_lambda(series, calendar=None, grid: Sequence[float] = LAMBDA_GRID) -> BoxCoxParams:
    """Choose ``lambda2`` by :func:`boxcox_shift` and ``lambda1`` as the grid
    point maximizing :func:`boxcox_profile_loglik` (first maximum on ties).

    ``series`` is a :class:`CashFlowSeries`, or raw values together with an
    ``(n, 2)`` ``calendar``.
    """
    if isinstance(series, CashFlowSeries):
        y, calendar = series.values, series.calendar
    else:
        y = _values(series)
        if calendar is None:
            raise ValueError("calendar features are required for raw values")
    if y.size <= 35:
        raise ValueError(f"need more than 35 observations to fit Box-Cox, got {y.size}")
    lambda2 = boxcox_shift(y)
    grid = np.asarray(grid, dtype=float)
    ll = boxcox_profile_loglik(y, calendar, lambda2, grid)
    if not np.any(np.isfinite(ll) | (ll == np.inf)):
        raise ValueError("profile likelihood is undefined on the whole grid")
    return BoxCoxParams(float(grid[int(np.nanargmax(ll))]), lambda2)


def _column(X) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[1] == 1:
        return X[:, 0], True
    if X.ndim == 1:
        return X, False
    raise ValueError(f"expected a single column, got shape {X.shape}")


class BoxCoxTransformer(TransformerMixin, BaseEstimator):
    """Shifted Box-Cox transform of a single column.

    Parameters
    ----------
    lambda1, lambda2 : float or None
        Fixed parameters. ``None`` means estimate at fit time: ``lambda2``
        by the shift rule and ``lambda1`` by profile likelihood of the
        seasonal dummy regression on ``calendar``.
    grid : array-like
        Candidate ``lambda1`` values.
    """

    def __init__(self, lambda1=None, lambda2=None, grid=LAMBDA_GRID):
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.grid = grid

    def fit(self, X, y=None, calendar=None):
        values, _ = _column(X)
        l2 = boxcox_shift(values) if self.lambda2 is None else float(self.lambda2)
        if self.lambda1 is None:
            if calendar is None:
                raise ValueError("calendar is required to estimate lambda1")
            if values.size <= 35:
                raise ValueError("need more than 35 observations to estimate lambda1")
            grid = np.asarray(self.grid, dtype=float)
            ll = boxcox_profile_loglik(values, calendar, l2, grid)
            l1 = float(grid[int(np.nanargmax(ll))])
        else:
            l1 = float(self.lambda1)
        self.params_ = BoxCoxParams(l1, l2)
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        values, as_col = _column(X)
        out = boxcox_apply(values, self.params_)
        return out[:, None] if as_col else out

    def inverse_transform(self, X):
        check_is_fitted(self, "params_")
        values, as_col = _column(X)
        out = boxcox_inverse(values, self.params_)
        return out[:, None] if as_col else out


# ---------------------------------------------------------------------------
# outliers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutlierTreatmentReport:
    sigma_threshold: float
    replaced_indices: tuple[int, ...]
    train_mean: float
    train_std: float

    def as_dict(self) -> dict:
        return {
            "sigma_threshold": self.sigma_threshold,
            "n_replaced": len(self.replaced_indices),
            "replaced_indices": list(self.replaced_indices),
            "train_mean": self.train_mean,
            "train_std": self.train_std,
        }


def _interpolate_outliers(y: np.ndarray, mean: float, std: float, k: float):
    flagged = np.abs(y - mean) > k * std
    if flagged.all():
        raise ValueError("every observation is an outlier; nothing to interpolate from")
    out = y.copy()
    if flagged.any():
        idx = np.arange(y.size)
        keep = ~flagged
        # np.interp holds the end values constant beyond the outermost points
        out[flagged] = np.interp(idx[flagged], idx[keep], y[keep])
    return out, tuple(int(i) for i in np.flatnonzero(flagged))


def replace_outliers(series, k: float, train_fraction: float = 0.8):
    """Replace observations more than ``k`` training standard deviations from
    the training mean by linear interpolation between the nearest
    non-outlier neighbours.

    The training window is the oldest ``floor(train_fraction * n)``
    observations; outliers are flagged over the whole series. Leading and
    trailing outliers take the value of the nearest non-outlier.

    Returns
    -------
    (CashFlowSeries or ndarray, OutlierTreatmentReport)
        The treated series has the same type as the input.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError("train_fraction must lie in (0, 1]")
    y = _values(series)
    n_train = int(math.floor(train_fraction * y.size))
    mean, std = _mean_std(y[:n_train])
    out, replaced = _interpolate_outliers(y, mean, std, k)
    report = OutlierTreatmentReport(float(k), replaced, mean, std)
    if isinstance(series, CashFlowSeries):
        return series.with_values(out), report
    return out, report


class OutlierInterpolator(TransformerMixin, BaseEstimator):
    """Transformer form of :func:`replace_outliers` for a single column.

    ``fit`` records the mean and standard deviation of the oldest
    ``train_fraction`` of the column; ``transform`` interpolates over every
    value outside ``k`` standard deviations.
    """

    def __init__(self, k=3.0, train_fraction=0.8):
        self.k = k
        self.train_fraction = train_fraction

    def fit(self, X, y=None):
        values, _ = _column(X)
        n_train = int(math.floor(self.train_fraction * values.size))
        self.mean_, self.std_ = _mean_std(values[:n_train])
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        values, as_col = _column(X)
        out, _ = _interpolate_outliers(values, self.mean_, self.std_, self.k)
        return out[:, None] if as_col else out
