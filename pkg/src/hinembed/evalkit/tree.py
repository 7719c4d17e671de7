"""CART decision trees (Gini, threshold splits) and a bagged random forest."""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .. import _rng
from .classifiers import require_two_classes

__all__ = ["DecisionTree", "RandomForest"]

_LEAF = -1


@njit(cache=True)
def _gini_sum(counts, n):
    # n * gini impurity
    if n == 0:
        return 0.0
    s = 0.0
    for c in counts:
        s += c * c
    return n - s / n


@njit(cache=True)
def _best_split(X, y, idx, lo, hi, n_classes, features, min_leaf, vals):
    n = hi - lo
    parent = np.zeros(n_classes)
    for i in range(lo, hi):
        parent[y[idx[i]]] += 1.0
    best_score = np.inf
    best_f = -1
    best_thr = 0.0
    left = np.empty(n_classes)
    right = np.empty(n_classes)
    for f in features:
        for i in range(n):
            vals[i] = X[idx[lo + i], f]
        order = np.argsort(vals[:n], kind="mergesort")
        for c in range(n_classes):
            left[c] = 0.0
            right[c] = parent[c]
        for i in range(n - 1):
            lab = y[idx[lo + order[i]]]
            left[lab] += 1.0
            right[lab] -= 1.0
            nl = i + 1
            nr = n - nl
            a = vals[order[i]]
            b = vals[order[i + 1]]
            if a == b or nl < min_leaf or nr < min_leaf:
                continue
            score = _gini_sum(left, nl) + _gini_sum(right, nr)
            if score < best_score - 1e-12:
                best_score = score
                best_f = f
                thr = a + (b - a) * 0.5
                best_thr = thr if thr < b else a
    return best_f, best_thr


@njit(cache=True)
def _build(X, y, n_classes, samples, max_depth, min_leaf, max_features, seed, tree_id):
    d = X.shape[1]
    m = samples.shape[0]
    idx = samples.copy()
    cap = 2 * m + 1
    feature = np.full(cap, _LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_classes))
    stack = np.empty((cap, 4), dtype=np.int64)  # node, lo, hi, depth
    tmp = np.empty(m, dtype=np.int64)
    vals = np.empty(m)
    state = _rng.new_stream(seed, tree_id, 0x7EE)
    perm = np.arange(d)
    n_nodes = 1
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    stack[0, 3] = 0
    top = 1
    while top > 0:
        top -= 1
        node, lo, hi, depth = stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3]
        pure = True
        first = y[idx[lo]]
        for i in range(lo, hi):
            value[node, y[idx[i]]] += 1.0
            if y[idx[i]] != first:
                pure = False
        if pure or (max_depth >= 0 and depth >= max_depth) or hi - lo < 2 * min_leaf:
            continue
        if max_features >= d:
            features = perm
        else:
            # partial Fisher-Yates: first max_features entries are the sample
            for j in range(max_features):
                k = j + _rng.randbelow(state, d - j)
                t = perm[j]
                perm[j] = perm[k]
                perm[k] = t
            features = perm[:max_features]
        f, thr = _best_split(X, y, idx, lo, hi, n_classes, features, min_leaf, vals)
        if f < 0:
            continue
        # stable partition of idx[lo:hi] on X[:, f] <= thr
        nl = 0
        for i in range(lo, hi):
            if X[idx[i], f] <= thr:
                tmp[nl] = idx[i]
                nl += 1
        nr = nl
        for i in range(lo, hi):
            if X[idx[i], f] > thr:
                tmp[nr] = idx[i]
                nr += 1
        for i in range(hi - lo):
            idx[lo + i] = tmp[i]
        feature[node] = f
        threshold[node] = thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        # push right first so the left subtree is built first
        stack[top, 0] = n_nodes + 1
        stack[top, 1] = lo + nl
        stack[top, 2] = hi
        stack[top, 3] = depth + 1
        stack[top + 1, 0] = n_nodes
        stack[top + 1, 1] = lo
        stack[top + 1, 2] = lo + nl
        stack[top + 1, 3] = depth + 1
        top += 2
        n_nodes += 2
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True)
def _apply(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] != _LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


def _encode(X, y):
    X, y = check_X_y(X, y)
    check_classification_targets(y)
    classes = require_two_classes(y)
    return np.ascontiguousarray(X, dtype=np.float64), np.searchsorted(classes, y), classes


class _Tree:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, arrays):
        self.feature, self.threshold, self.left, self.right, self.value = arrays

    @property
    def node_count(self) -> int:
        return int(self.feature.size)

    def predict_codes(self, X) -> np.ndarray:
        leaves = _apply(X, self.feature, self.threshold, self.left, self.right)
        return np.argmax(self.value[leaves], axis=1)

    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if self.feature[node] != _LEAF:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())


def _grow(X, codes, n_classes, samples, max_depth, min_samples_leaf, max_features, seed, tree_id):
    return _Tree(_build(X, codes, n_classes, samples.astype(np.int64),
                        -1 if max_depth is None else int(max_depth), int(min_samples_leaf),
                        int(max_features), np.uint64(_rng.as_seed(seed)), np.uint64(tree_id)))


def _resolve_max_features(max_features, d: int) -> int:
    if max_features is None:
        return d
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    if isinstance(max_features, float):
        return max(1, min(d, int(math.ceil(max_features * d))))
    return max(1, min(d, int(max_features)))


class DecisionTree(ClassifierMixin, BaseEstimator):
    """CART classifier: Gini impurity, axis-aligned threshold splits.

    ``max_depth=None`` grows until leaves are pure. Ties between equally
    good splits go to the lowest feature index, then the lowest threshold.
    """

    def __init__(self, max_depth=16, min_samples_leaf=2, max_features=None, random_state=0):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X, codes, self.classes_ = _encode(X, y)
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        self.n_features_in_ = X.shape[1]
        mf = _resolve_max_features(self.max_features, X.shape[1])
        self.tree_ = _grow(X, codes, self.classes_.size, np.arange(X.shape[0]), self.max_depth,
                           self.min_samples_leaf, mf, self.random_state, 0)
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = np.ascontiguousarray(check_array(X), dtype=np.float64)
        return self.classes_[self.tree_.predict_codes(X)]


class RandomForest(ClassifierMixin, BaseEstimator):
    """Bagged CART trees with per-split feature subsampling and majority vote.

    Each tree gets its own bootstrap sample and feature stream derived
    from ``(random_state, tree index)``. Vote ties go to the lowest class.
    """

    def __init__(self, n_estimators=100, max_features="sqrt", max_depth=16, min_samples_leaf=2,
                 bootstrap=True, random_state=0):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.random_state = random_state

    def fit(self, X, y):
        X, codes, self.classes_ = _encode(X, y)
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        n, d = X.shape
        self.n_features_in_ = d
        mf = _resolve_max_features(self.max_features, d)
        seed = _rng.as_seed(self.random_state)
        self.estimators_ = []
        for t in range(self.n_estimators):
            if self.bootstrap:
                samples = np.random.default_rng([seed, t]).integers(n, size=n)
            else:
                samples = np.arange(n)
            self.estimators_.append(
                _grow(X, codes, self.classes_.size, samples, self.max_depth,
                      self.min_samples_leaf, mf, seed, t)
            )
        return self

    def predict(self, X):
        check_is_fitted(self, "estimators_")
        X = np.ascontiguousarray(check_array(X), dtype=np.float64)
        votes = np.zeros((X.shape[0], self.classes_.size), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.estimators_:
            votes[rows, tree.predict_codes(X)] += 1
        return self.classes_[np.argmax(votes, axis=1)]
