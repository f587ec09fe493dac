"""Hypothesis tests for normality, serial correlation, stationarity and
paired forecast-error comparison.

Every test returns a :class:`HypothesisTestResult`; ``rejected`` is derived
from the p-value so the two can never disagree.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import stats

from .dataset import CashFlowSeries

__all__ = [
    "HypothesisTestResult",
    "MonthlyNormalityResult",
    "AcfResult",
    "StationarityReport",
    "acf",
    "ljung_box",
    "default_ljung_box_lags",
    "shapiro_wilk",
    "lilliefors",
    "lilliefors_statistic",
    "wilcoxon_signed_rank",
    "stationarity_fluctuation",
    "stationarity_monthly_normality",
    "split_by_month",
]


@dataclass(frozen=True)
class HypothesisTestResult:
    statistic: float
    p_value: float
    alpha: float = 0.05
    name: str = ""

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        p = float(self.p_value)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value {p} outside [0, 1]")
        object.__setattr__(self, "p_value", p)
        object.__setattr__(self, "statistic", float(self.statistic))

    @property
    def rejected(self) -> bool:
        return self.p_value < self.alpha

    def as_dict(self) -> dict:
        return {
            "test": self.name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "rejected": self.rejected,
        }


@dataclass(frozen=True)
class MonthlyNormalityResult(HypothesisTestResult):
    """Aggregate of per-month Lilliefors tests.

    ``statistic`` is the largest monthly KS distance and ``p_value`` the
    smallest monthly p-value, so the aggregate rejects iff some month does.
    """

    monthly: tuple = field(default=())
    skipped_months: int = 0


@dataclass(frozen=True)
class AcfResult:
    max_lag: int
    coefficients: np.ndarray

    def __getitem__(self, lag: int) -> float:
        """Autocorrelation at ``lag`` (1-based)."""
        if not 1 <= lag <= self.max_lag:
            raise IndexError(lag)
        return float(self.coefficients[lag - 1])


@dataclass(frozen=True)
class StationarityReport:
    monthly_means: np.ndarray
    monthly_variances: np.ndarray
    overall_mean: float
    overall_variance: float
    mean_within_errors: bool
    variance_within_errors: bool

    @property
    def stationary(self) -> bool:
        return self.mean_within_errors and self.variance_within_errors

    def as_dict(self) -> dict:
        return {
            "months": int(self.monthly_means.size),
            "overall_mean": self.overall_mean,
            "overall_variance": self.overall_variance,
            "mean_within_errors": self.mean_within_errors,
            "variance_within_errors": self.variance_within_errors,
            "stationary": self.stationary,
        }


def _as_1d(values, name="values") -> np.ndarray:
    y = np.asarray(values.values if isinstance(values, CashFlowSeries) else values, dtype=float)
    if y.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite entries")
    return y


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)


# ---------------------------------------------------------------------------
# serial correlation
# ---------------------------------------------------------------------------

def acf(values: Sequence[float], max_lag: int) -> AcfResult:
    """Sample autocorrelations ``r_1 .. r_max_lag``.

    ``r_k = sum_t (y_t - ybar)(y_{t+k} - ybar) / sum_t (y_t - ybar)^2``.
    """
    y = _as_1d(values)
    n = y.size
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if max_lag >= n:
        raise ValueError(f"max_lag={max_lag} must be smaller than the series length {n}")
    d = y - y.mean()
    denom = float(d @ d)
    if denom <= 0.0 or denom <= 1e-28 * n * float(np.max(np.abs(y))) ** 2:
        raise ValueError("zero variance: autocorrelation is undefined")
    r = np.array([d[:-k] @ d[k:] for k in range(1, max_lag + 1)]) / denom
    return AcfResult(int(max_lag), np.clip(r, -1.0, 1.0))


def default_ljung_box_lags(n: int) -> int:
    return min(20, n // 4)


def ljung_box(values: Sequence[float], lags: int | None = None,
              alpha: float = 0.05) -> HypothesisTestResult:
    """Ljung-Box portmanteau test of zero autocorrelation at lags 1..m.

    ``Q = n (n + 2) sum_k r_k^2 / (n - k)`` compared against a chi-squared
    distribution with ``m`` degrees of freedom. ``lags`` defaults to
    ``min(20, n // 4)``.
    """
    y = _as_1d(values)
    alpha = _check_alpha(alpha)
    n = y.size
    m = default_ljung_box_lags(n) if lags is None else int(lags)
    if m < 1:
        raise ValueError(f"series of length {n} is too short for the Ljung-Box test")
    r = acf(y, m).coefficients
    k = np.arange(1, m + 1)
    q = n * (n + 2) * float(np.sum(r**2 / (n - k)))
    return HypothesisTestResult(q, float(stats.chi2.sf(q, m)), alpha, "ljung-box")


# ---------------------------------------------------------------------------
# normality
# ---------------------------------------------------------------------------

def _check_spread(y: np.ndarray):
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise ValueError("zero variance: normality test is undefined")


def shapiro_wilk(sample: Sequence[float], alpha: float = 0.05) -> HypothesisTestResult:
    """Shapiro-Wilk W test with Royston's approximation (scipy's ``swilk``)."""
    y = _as_1d(sample, "sample")
    alpha = _check_alpha(alpha)
    if not 3 <= y.size <= 5000:
        raise ValueError(f"Shapiro-Wilk requires 3 <= n <= 5000, got n={y.size}")
    _check_spread(y)
    res = stats.shapiro(y)
    return HypothesisTestResult(res.statistic, min(max(res.pvalue, 0.0), 1.0), alpha, "shapiro-wilk")


def _ks_normal_rows(x: np.ndarray) -> np.ndarray:
    """KS distance of each row to a normal with the row's own mean and std."""
    n = x.shape[1]
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, ddof=1, keepdims=True)
    z = np.sort((x - mu) / sd, axis=1)
    cdf = stats.norm.cdf(z)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf, axis=1)
    d_minus = np.max(cdf - (i - 1) / n, axis=1)
    return np.maximum(d_plus, d_minus)


def lilliefors_statistic(sample: Sequence[float]) -> float:
    y = _as_1d(sample, "sample")
    if y.size < 4:
        raise ValueError(f"Lilliefors requires n >= 4, got n={y.size}")
    _check_spread(y)
    return float(_ks_normal_rows(y[None, :])[0])


@lru_cache(maxsize=256)
def _lilliefors_null(n: int, n_sim: int, seed: int) -> np.ndarray:
    # the statistic is location/scale free, so standard normal draws suffice
    rng = np.random.default_rng(seed)
    out = np.empty(n_sim)
    chunk = max(1, min(n_sim, 2_000_000 // n))
    for start in range(0, n_sim, chunk):
        stop = min(n_sim, start + chunk)
        out[start:stop] = _ks_normal_rows(rng.standard_normal((stop - start, n)))
    out.sort()
    out.setflags(write=False)
    return out


def lilliefors(sample: Sequence[float], alpha: float = 0.05, n_sim: int = 10_000,
               seed: int = 0) -> HypothesisTestResult:
    """Lilliefors (KS with estimated mean and std) test for normality.

    The p-value is ``(1 + #{D* >= D}) / (n_sim + 1)`` over ``n_sim`` null
    statistics simulated from standard normal samples of the same size.
    The null sample depends only on ``(n, n_sim, seed)`` and is cached.
    """
    alpha = _check_alpha(alpha)
    if n_sim < 1:
        raise ValueError("n_sim must be positive")
    d = lilliefors_statistic(sample)
    null = _lilliefors_null(len(sample), int(n_sim), int(seed))
    exceed = null.size - np.searchsorted(null, d, side="left")
    return HypothesisTestResult(d, (1.0 + exceed) / (null.size + 1.0), alpha, "lilliefors")


# ---------------------------------------------------------------------------
# paired comparison
# ---------------------------------------------------------------------------

def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float],
                         alpha: float = 0.05) -> HypothesisTestResult:
    """Two-sided Wilcoxon signed-rank test on the differences ``a - b``.

    Zero differences are discarded, tied absolute differences get average
    ranks, and the statistic is ``W+``, the rank sum of the positive
    differences. The p-value uses the normal approximation with tie-corrected
    variance and a 0.5 continuity correction.

    Raises
    ------
    ValueError
        If the inputs differ in length or every difference is zero.
    """
    a = _as_1d(a, "a")
    b = _as_1d(b, "b")
    alpha = _check_alpha(alpha)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    d = a - b
    d = d[d != 0.0]
    m = d.size
    if m == 0:
        raise ValueError("all paired differences are zero")
    ranks = stats.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    mean = m * (m + 1) / 4.0
    _, counts = np.unique(ranks, return_counts=True)
    var = m * (m + 1) * (2 * m + 1) / 24.0 - float(np.sum(counts**3 - counts)) / 48.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    p = min(1.0, 2.0 * float(stats.norm.sf(z)))
    return HypothesisTestResult(w_plus, p, alpha, "wilcoxon")


# ---------------------------------------------------------------------------
# stationarity
# ---------------------------------------------------------------------------

def split_by_month(series: CashFlowSeries) -> "OrderedDict[tuple[int, int], np.ndarray]":
    """Values grouped by calendar month, in time order."""
    groups: OrderedDict[tuple[int, int], list[float]] = OrderedDict()
    for o in series.observations:
        groups.setdefault((o.date.year, o.date.month), []).append(o.net_flow)
    return OrderedDict((k, np.asarray(v)) for k, v in groups.items())


def stationarity_fluctuation(series: CashFlowSeries, n_se: float = 2.0) -> StationarityReport:
    """Check that monthly means and variances stay within their standard errors.

    Months with at least two observations qualify. With ``s^2`` the variance
    of the whole series, a month of ``n_j`` values passes if its mean is
    within ``n_se * s / sqrt(n_j)`` of the overall mean and its variance is
    within ``n_se * s^2 * sqrt(2 / (n_j - 1))`` of the overall variance.
    """
    months = [v for v in split_by_month(series).values() if v.size >= 2]
    if len(months) < 2:
        raise ValueError("need at least 2 calendar months with >= 2 observations each")
    y = series.values
    mean = float(y.mean())
    var = float(y.var(ddof=1))
    sizes = np.array([v.size for v in months], dtype=float)
    means = np.array([v.mean() for v in months])
    variances = np.array([v.var(ddof=1) for v in months])
    mean_ok = bool(np.all(np.abs(means - mean) <= n_se * math.sqrt(var) / np.sqrt(sizes)))
    var_ok = bool(np.all(np.abs(variances - var) <= n_se * var * np.sqrt(2.0 / (sizes - 1))))
    return StationarityReport(means, variances, mean, var, mean_ok, var_ok)


def stationarity_monthly_normality(series: CashFlowSeries, alpha: float = 0.05,
                                   n_sim: int = 10_000, seed: int = 0) -> MonthlyNormalityResult:
    """Lilliefors test month by month; any monthly rejection rejects the series.

    Months with fewer than four observations, or constant months, are
    skipped and counted in ``skipped_months``.
    """
    alpha = _check_alpha(alpha)
    results = []
    skipped = 0
    for values in split_by_month(series).values():
        if values.size < 4 or np.ptp(values) == 0.0:
            skipped += 1
            continue
        results.append(lilliefors(values, alpha, n_sim=n_sim, seed=seed))
    if not results:
        raise ValueError("no calendar month has 4 or more non-constant observations")
    return MonthlyNormalityResult(
        statistic=max(r.statistic for r in results),
        p_value=min(r.p_value for r in results),
        alpha=alpha,
        name="monthly-lilliefors",
        monthly=tuple(results),
        skipped_months=skipped,
    )
