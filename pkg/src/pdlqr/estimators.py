"""Scikit-learn style regressors wrapping the saddle-point solvers.

Each estimator fits a linear model X @ coef_ = y where the rows of X are
(possibly noisy) regressors consumed in order. They follow the fit/predict
contract with get_params/set_params, so they compose with pipelines,
cloning and model selection from the wider ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .cspd import Ball, cspd_solve, multi_epoch_solve, sqrt_schedule
from .regression import lstsq_estimate


class CspdRegressor(RegressorMixin, BaseEstimator):
    """One-pass primal-dual linear regressor robust to noisy regressors.

    Parameters
    ----------
    radius : float, default=1.0
        Radius of the ball the coefficients are confined to.
    center : array-like or None, default=None
        Ball center; the origin when None.
    step_coeff : float, default=0.001
        Coefficient of the sqrt(k) step-size schedule.
    y0 : float, default=0.0
        Initial dual value in [-1, 1].

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Triangular-weighted average of the primal iterates.
    dual_ : float
        Matching average of the dual iterates.
    """

    def __init__(self, radius: float = 1.0, center=None,
                 step_coeff: float = 0.001, y0: float = 0.0):
        self.radius = radius
        self.center = center
        self.step_coeff = step_coeff
        self.y0 = y0

    def _ball(self, n_features: int) -> Ball:
        center = np.zeros(n_features) if self.center is None else np.asarray(self.center, dtype=float)
        return Ball(center, self.radius)

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        ball = self._ball(X.shape[1])
        result = cspd_solve(
            X, y, ball, xi0=ball.center, y0=self.y0,
            schedule=sqrt_schedule(len(X), self.step_coeff),
        )
        self.coef_ = result.xi
        self.dual_ = result.dual
        self.n_features_in_ = X.shape[1]
        self.n_iter_ = len(X)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class MultiEpochCspdRegressor(RegressorMixin, BaseEstimator):
    """Warm-started primal-dual regressor over shrinking feasible balls.

    Splits the samples into epochs; each epoch restricts the feasible set
    to a ball (radius d0^2 * 2^-(s-1)) around the previous epoch's output,
    which tightens both the error and its trial-to-trial spread compared to
    a single pass over the same data.
    """

    def __init__(self, radius: float = 1.0, center=None,
                 epoch_sizes=(8, 16, 24, 52), d0: float = 1.0,
                 step_coeff: float = 0.001, shrink: str = "squared"):
        self.radius = radius
        self.center = center
        self.epoch_sizes = epoch_sizes
        self.d0 = d0
        self.step_coeff = step_coeff
        self.shrink = shrink

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        center = np.zeros(X.shape[1]) if self.center is None else np.asarray(self.center, dtype=float)
        ball = Ball(center, self.radius)
        self.coef_ = multi_epoch_solve(
            X, y, ball, xi0=ball.center, epoch_sizes=self.epoch_sizes,
            d0=self.d0,
            schedule_builder=lambda n: sqrt_schedule(n, self.step_coeff),
            shrink=self.shrink,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class BellmanLstsqRegressor(RegressorMixin, BaseEstimator):
    """Plain least-squares baseline; biased when the regressors are noisy."""

    def __init__(self, max_condition: float = 1e12):
        self.max_condition = max_condition

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self.coef_ = lstsq_estimate(X, y, max_condition=self.max_condition)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_
