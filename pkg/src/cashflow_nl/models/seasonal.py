"""Linear regression on day-of-month and day-of-week dummy variables."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_calendar, check_calendar_target

# intercept, DOM 1..30 (31 is the reference), DOW 1..4 (5..7 are the reference)
N_DOM_DUMMIES = 30
N_DOW_DUMMIES = 4
N_COEF = 1 + N_DOM_DUMMIES + N_DOW_DUMMIES

COLUMN_NAMES = (
    ["intercept"]
    + [f"dom_{d}" for d in range(1, N_DOM_DUMMIES + 1)]
    + [f"dow_{d}" for d in range(1, N_DOW_DUMMIES + 1)]
)


def seasonal_design(X) -> np.ndarray:
    """Full ``(n, 35)`` dummy design matrix including the intercept column."""
    X = check_calendar(X)
    n = X.shape[0]
    D = np.zeros((n, N_COEF))
    D[:, 0] = 1.0
    rows = np.arange(n)
    dom, dow = X[:, 0], X[:, 1]
    m = dom <= N_DOM_DUMMIES
    D[rows[m], dom[m]] = 1.0
    m = dow <= N_DOW_DUMMIES
    D[rows[m], N_DOM_DUMMIES + dow[m]] = 1.0
    return D


class RankDeficientError(ValueError):
    pass


def _active_qr(D: np.ndarray, active: np.ndarray):
    A = D[:, active]
    Q, R = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= 1e-10 * max(1.0, diag.max()):
        raise RankDeficientError("seasonal design matrix is rank deficient")
    return Q, R


def seasonal_basis(X) -> np.ndarray:
    """Orthonormal basis of the column space of the (column-dropped) design.

    Residuals of any response are ``z - Q @ (Q.T @ z)``, which lets callers
    compute many regressions on the same calendar at once.
    """
    D = seasonal_design(X)
    active = D.any(axis=0)
    if D.shape[0] <= active.sum():
        raise ValueError(f"need more than {int(active.sum())} rows, got {D.shape[0]}")
    return _active_qr(D, active)[0]


@dataclass(frozen=True)
class SeasonalRegressionReport:
    coefficients: np.ndarray
    f_statistic: float
    p_value: float
    r_squared: float
    df_model: int
    df_resid: int

    def as_dict(self) -> dict:
        return {
            "f_statistic": self.f_statistic,
            "p_value": self.p_value,
            "r_squared": self.r_squared,
            "df_model": self.df_model,
            "df_resid": self.df_resid,
        }


class SeasonalDummyRegression(RegressorMixin, BaseEstimator):
    """OLS with intercept, 30 day-of-month and 4 day-of-week dummies.

    Day 31 and days-of-week 5..7 form the reference levels. Dummy columns
    with no training observation are dropped and get a zero coefficient, so
    an unseen category is predicted at the reference level.

    Attributes
    ----------
    coef_ : ndarray of shape (35,)
        Intercept followed by the dummy coefficients, in ``COLUMN_NAMES`` order.
    active_ : ndarray of bool, shape (35,)
        Which columns took part in the fit.
    """

    def fit(self, X, y):
        X, y = check_calendar_target(X, y)
        D = seasonal_design(X)
        active = D.any(axis=0)
        n_params = int(active.sum())
        if X.shape[0] <= n_params:
            raise ValueError(
                f"seasonal regression needs more than {n_params} rows, got {X.shape[0]}"
            )
        Q, R = _active_qr(D, active)
        beta = linalg.solve_triangular(R, Q.T @ y)
        coef = np.zeros(N_COEF)
        coef[active] = beta
        self.coef_ = coef
        self.active_ = active
        self.intercept_ = float(coef[0])
        resid = y - D @ coef
        self.rss_ = float(resid @ resid)
        self.tss_ = float(np.sum((y - y.mean()) ** 2))
        self.n_train_ = X.shape[0]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return seasonal_design(X) @ self.coef_

    def report(self) -> SeasonalRegressionReport:
        """Overall F-test and R^2 of the fitted regression."""
        check_is_fitted(self, "coef_")
        if self.tss_ <= 0.0:
            raise ValueError("constant response: F-statistic and R^2 are undefined")
        p = int(self.active_.sum()) - 1
        df_resid = self.n_train_ - p - 1
        r2 = min(max(1.0 - self.rss_ / self.tss_, 0.0), 1.0)
        if p == 0:
            f, pval = 0.0, 1.0
        elif self.rss_ <= 1e-24 * self.tss_:
            f, pval = float("inf"), 0.0
        else:
            f = max((self.tss_ - self.rss_) / p / (self.rss_ / df_resid), 0.0)
            pval = float(stats.f.sf(f, p, df_resid))
        return SeasonalRegressionReport(self.coef_.copy(), f, pval, r2, p, df_resid)


def ols_seasonal_fit(X, y):
    """Fit the seasonal regression and return ``(model, report)``."""
    model = SeasonalDummyRegression().fit(X, y)
    return model, model.report()
