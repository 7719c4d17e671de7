"""Logistic regression and Gaussian naive Bayes written against numpy."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

__all__ = ["LogisticRegressionGD", "GaussianNaiveBayes", "require_two_classes"]


def require_two_classes(y) -> np.ndarray:
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError(f"training data has a single class ({classes.tolist()})")
    return classes


class LogisticRegressionGD(ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression fit by full-batch gradient descent.

    Features are standardized with training statistics. The objective is
    mean cross-entropy plus ``l2 / 2 * ||W||^2``. Steps use Nesterov
    momentum. A step that would increase the objective is discarded: the
    momentum is reset first, and a plain step that still fails halves the
    step size. ``loss_curve_`` is therefore non-increasing.

    Parameters
    ----------
    l2 : float
        Ridge penalty on the weights (not the intercepts).
    max_iter : int
        Maximum number of accepted gradient steps.
    tol : float
        Stop when the relative objective decrease falls below ``tol``.
    step : float
        Initial step size.
    """

    def __init__(self, l2=1e-4, max_iter=1000, tol=1e-7, step=1.0):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol
        self.step = step

    def _objective(self, Z, Y, W, b):
        logits = Z @ W + b
        log_norm = logsumexp(logits, axis=1, keepdims=True)
        log_p = logits - log_norm
        loss = -(Y * log_p).sum() / Z.shape[0] + 0.5 * self.l2 * (W * W).sum()
        return loss, np.exp(log_p)

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        check_classification_targets(y)
        self.classes_ = require_two_classes(y)
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale_ = np.where(scale > 0, scale, 1.0)
        Z = (X - self.mean_) / self.scale_
        n, d = Z.shape
        k = self.classes_.size
        Y = np.zeros((n, k))
        Y[np.arange(n), np.searchsorted(self.classes_, y)] = 1.0
        W = np.zeros((d, k))
        b = np.zeros(k)
        loss, P = self._objective(Z, Y, W, b)
        curve = [loss]
        step = float(self.step)
        # Nesterov momentum, reset whenever a step fails to lower the objective
        W_prev, b_prev, t = W, b, 1.0
        self.n_iter_ = 0
        while self.n_iter_ < self.max_iter:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            mom = (t - 1.0) / t_next
            if mom > 0:
                W_y, b_y = W + mom * (W - W_prev), b + mom * (b - b_prev)
                _, P_y = self._objective(Z, Y, W_y, b_y)
            else:
                W_y, b_y, P_y = W, b, P
            G = P_y - Y
            gW = Z.T @ G / n + self.l2 * W_y
            gb = G.mean(axis=0)
            W_new, b_new = W_y - step * gW, b_y - step * gb
            new_loss, new_P = self._objective(Z, Y, W_new, b_new)
            if new_loss > loss:
                if mom > 0:
                    t = 1.0
                else:
                    step *= 0.5
                    if step < 1e-12:
                        break
                continue
            decrease = loss - new_loss
            W_prev, b_prev = W, b
            W, b, loss, P = W_new, b_new, new_loss, new_P
            t = t_next
            step *= 1.25 if mom == 0 else 1.0
            curve.append(loss)
            self.n_iter_ += 1
            if decrease <= self.tol * max(1.0, abs(loss)):
                break
        self.coef_ = W
        self.intercept_ = b
        self.loss_curve_ = curve
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return ((X - self.mean_) / self.scale_) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        logits = self.decision_function(X)
        return np.exp(logits - logsumexp(logits, axis=1, keepdims=True))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


class GaussianNaiveBayes(ClassifierMixin, BaseEstimator):
    """Per-class, per-feature Gaussian likelihoods with empirical class priors.

    Variances below ``var_floor`` are raised to it.
    """

    def __init__(self, var_floor=1e-9):
        self.var_floor = var_floor

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        check_classification_targets(y)
        self.classes_ = require_two_classes(y)
        k, d = self.classes_.size, X.shape[1]
        self.theta_ = np.empty((k, d))
        self.var_ = np.empty((k, d))
        self.class_prior_ = np.empty(k)
        for i, c in enumerate(self.classes_):
            Xc = X[y == c]
            self.theta_[i] = Xc.mean(axis=0)
            self.var_[i] = np.maximum(Xc.var(axis=0), self.var_floor)
            self.class_prior_[i] = Xc.shape[0] / X.shape[0]
        return self

    def joint_log_likelihood(self, X):
        check_is_fitted(self, "theta_")
        X = check_array(X)
        out = np.empty((X.shape[0], self.classes_.size))
        for i in range(self.classes_.size):
            ll = -0.5 * (np.log(2.0 * np.pi * self.var_[i]) + (X - self.theta_[i]) ** 2 / self.var_[i])
            out[:, i] = np.log(self.class_prior_[i]) + ll.sum(axis=1)
        return out

    def predict(self, X):
        return self.classes_[np.argmax(self.joint_log_likelihood(X), axis=1)]
