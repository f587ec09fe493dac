import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length

N_DOM = 31
N_DOW = 7


def check_calendar(X) -> np.ndarray:
    """Validate an ``(n, 2)`` array of (day-of-month, day-of-week) features."""
    X = check_array(X, dtype=None, ensure_2d=True, ensure_all_finite=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 calendar columns (day_of_month, day_of_week), got {X.shape[1]}")
    Xi = X.astype(np.int64)
    if not np.array_equal(Xi, X):
        raise ValueError("calendar features must be integers")
    dom, dow = Xi[:, 0], Xi[:, 1]
    if dom.size and (dom.min() < 1 or dom.max() > N_DOM):
        raise ValueError("day_of_month must lie in 1..31")
    if dow.size and (dow.min() < 1 or dow.max() > N_DOW):
        raise ValueError("day_of_week must lie in 1..7")
    return Xi


def check_calendar_target(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = check_calendar(X)
    y = check_array(np.asarray(y, dtype=float), ensure_2d=False, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError(f"y must be one-dimensional, got shape {y.shape}")
    check_consistent_length(X, y)
    if y.size == 0:
        raise ValueError("empty training set")
    return X, y
