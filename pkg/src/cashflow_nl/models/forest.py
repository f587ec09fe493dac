"""Regression trees and random forests on (day-of-month, day-of-week)."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from . import _tree_kernels as K
from ._validation import check_calendar, check_calendar_target

FEATURE_NAMES = ("DOM", "DOW")


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    min_leaf: int = 5
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")


@dataclass(frozen=True)
class TreeStructure:
    """Arrays describing one fitted tree; see ``_tree_kernels`` for layout."""

    feature: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray
    catmask: np.ndarray

    @property
    def node_count(self) -> int:
        return self.feature.size

    def categories_left(self, node: int) -> list[int]:
        mask = int(self.catmask[node])
        ncat = K.N_DOM if self.feature[node] == 0 else K.N_DOW
        return [k for k in range(1, ncat + 1) if (mask >> k) & 1]

    def export_text(self) -> str:
        """Indented text rendering of the split rules."""
        lines = []

        def walk(node, depth):
            pad = "|   " * depth
            if self.feature[node] < 0:
                lines.append(f"{pad}value: {self.value[node]:.4g} (n={self.weight[node]:g})")
                return
            name = FEATURE_NAMES[self.feature[node]]
            cats = ",".join(map(str, self.categories_left(node)))
            lines.append(f"{pad}{name} in {{{cats}}}")
            walk(self.left[node], depth + 1)
            lines.append(f"{pad}else")
            walk(self.right[node], depth + 1)

        walk(0, 0)
        return "\n".join(lines)


def _cells(X: np.ndarray) -> np.ndarray:
    return K.cell_index(np.ascontiguousarray(X[:, 0]), np.ascontiguousarray(X[:, 1]))


class _CalendarTreeEnsemble(RegressorMixin, BaseEstimator):
    def _grow(self, X, y, n_trees, min_leaf, bootstrap, random_state, n_jobs):
        X, y = check_calendar_target(X, y)
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        n = X.shape[0]
        if n < 2 * min_leaf:
            raise ValueError(f"need at least {2 * min_leaf} training rows, got {n}")
        T = int(n_trees)
        cells = _cells(X)
        if bootstrap:
            boot = np.random.default_rng(random_state).integers(0, n, size=(T, n))
        else:
            boot = np.zeros((1, 1), dtype=np.int64)

        shape = (T, K.MAX_NODES)
        feature = np.full(shape, -1, dtype=np.int64)
        left = np.full(shape, -1, dtype=np.int64)
        right = np.full(shape, -1, dtype=np.int64)
        value = np.zeros(shape)
        weight = np.zeros(shape)
        catmask = np.zeros(shape, dtype=np.int64)
        n_nodes = np.zeros(T, dtype=np.int64)
        tables = np.zeros((T, K.N_CELLS))
        args = (cells, y, boot, bool(bootstrap), float(min_leaf))
        out = (feature, left, right, value, weight, catmask, n_nodes, tables)

        n_jobs = max(1, min(int(n_jobs or 1), T))
        chunks = np.array_split(np.arange(T, dtype=np.int64), n_jobs)
        if n_jobs == 1:
            K.grow_trees(*args, chunks[0], *out)
        else:
            with ThreadPoolExecutor(n_jobs) as pool:
                list(pool.map(lambda idx: K.grow_trees(*args, idx, *out), chunks))

        self.n_nodes_ = n_nodes
        self._arrays = (feature, left, right, value, weight, catmask)
        self.cell_tables_ = tables
        self.cell_table_ = tables.mean(axis=0)
        return self

    def tree(self, t: int = 0) -> TreeStructure:
        check_is_fitted(self, "cell_table_")
        m = int(self.n_nodes_[t])
        return TreeStructure(*(a[t, :m].copy() for a in self._arrays))

    @property
    def estimators_(self) -> list[TreeStructure]:
        return [self.tree(t) for t in range(len(self.n_nodes_))]

    def predict(self, X):
        check_is_fitted(self, "cell_table_")
        X = check_calendar(X)
        return self.cell_table_[_cells(X)]


class CategoricalForestRegressor(_CalendarTreeEnsemble):
    """Random forest whose trees split the calendar categories directly.

    Each split orders one feature's categories by mean response within the
    node and cuts that ordering where the squared-error reduction is largest.
    Gains within a relative 1e-10 of each other are ties, won by day-of-month
    and then by the earliest cut, which keeps the fit equivariant under
    positive affine maps of the target. Trees are grown until a
    node is pure, holds a single calendar cell, or cannot be split into two
    children of at least ``min_leaf`` training rows. Both features are tried
    at every split.

    Parameters
    ----------
    n_trees : int, default=100
    min_leaf : int, default=5
        Minimum number of (bootstrap) rows per leaf.
    bootstrap : bool, default=True
    random_state : int, default=0
        Seeds the bootstrap draws. Tree ``t`` always uses row ``t`` of one
        ``(n_trees, n)`` index matrix, so results do not depend on ``n_jobs``.
    n_jobs : int, default=1
        Threads used to grow trees.
    """

    def __init__(self, n_trees=100, min_leaf=5, bootstrap=True, random_state=0, n_jobs=1):
        self.n_trees = n_trees
        self.min_leaf = min_leaf
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        return self._grow(X, y, self.n_trees, self.min_leaf, self.bootstrap,
                          self.random_state, self.n_jobs)


class CategoricalTreeRegressor(_CalendarTreeEnsemble):
    """A single tree grown on the full training data (no bootstrap)."""

    def __init__(self, min_leaf=5):
        self.min_leaf = min_leaf

    def fit(self, X, y):
        self._grow(X, y, 1, self.min_leaf, False, None, 1)
        self.tree_ = self.tree(0)
        return self


def forest_fit(X, y, params: ForestParams = ForestParams()) -> CategoricalForestRegressor:
    return CategoricalForestRegressor(
        n_trees=params.n_trees,
        min_leaf=params.min_leaf,
        bootstrap=params.bootstrap,
        random_state=params.seed,
    ).fit(X, y)
