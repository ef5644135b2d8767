"""Ordinary-least-squares log-linear surrogate.

The design matrix carries its intercept column explicitly (the shipped
default models all have one); the response is the log of the quantity of
interest. A fitted model predicts a lognormal over the raw quantity whose
log-scale variance combines parameter uncertainty with the residual
variance:

    mu     = x' beta_hat
    sigma2 = x' Cov(beta_hat) x + sigma_hat^2
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .distributions import LogNormalDist
from .exceptions import DimensionMismatch, RankDeficient
from .validation import check_fitted, check_matrix, check_vector

__all__ = ["LogLinearRegressor", "add_intercept"]

RCOND_TOLERANCE = 1e-12


def add_intercept(X) -> np.ndarray:
    """Prepend a column of ones."""
    X = check_matrix(X, "X")
    return np.hstack([np.ones((X.shape[0], 1)), X])


class LogLinearRegressor(BaseEstimator, RegressorMixin):
    """OLS on a log response with full predictive uncertainty.

    With the default ``fit_intercept=False`` the design matrix carries
    any intercept column explicitly (the shipped defaults do); with
    ``fit_intercept=True`` a ones column is prepended internally.

    Fitted attributes
    -----------------
    coef_ : (d,) coefficients over the internal design matrix
    coef_covariance_ : (d, d) sigma_hat^2 (X'X)^{-1}, symmetric PSD
    residual_variance_ : RSS / (n - d)
    dof_ : n - d
    feature_names_ : labels, auto-generated when not supplied
    """

    def __init__(self, fit_intercept: bool = False):
        self.fit_intercept = fit_intercept

    def fit(self, X, y, feature_names=None):
        X = check_matrix(X, "X", min_rows=2)
        self.n_features_in_ = X.shape[1]
        if self.fit_intercept:
            X = add_intercept(X)
            if feature_names is not None:
                feature_names = ["intercept", *feature_names]
        n, d = X.shape
        y = check_vector(y, n)
        if n <= d:
            raise DimensionMismatch(f"OLS needs n > d, got n={n}, d={d}")

        u, s, vt = np.linalg.svd(X, full_matrices=False)
        if s[0] <= 0.0 or s[-1] / s[0] < RCOND_TOLERANCE:
            raise RankDeficient(
                f"design matrix reciprocal condition number "
                f"{0.0 if s[0] == 0 else s[-1] / s[0]:.3e} below {RCOND_TOLERANCE:.0e}"
            )
        coef = vt.T @ ((u.T @ y) / s)
        resid = y - X @ coef
        rss = float(resid @ resid)
        dof = n - d
        sigma2 = rss / dof
        # (X'X)^{-1} = V diag(1/s^2) V'
        xtx_inv = (vt.T / s**2) @ vt
        cov = sigma2 * xtx_inv
        cov = 0.5 * (cov + cov.T)

        self.coef_ = coef
        self.coef_covariance_ = cov
        self.residual_variance_ = sigma2
        self.dof_ = dof
        self.feature_names_ = (
            list(feature_names) if feature_names is not None else [f"x{j}" for j in range(d)]
        )
        if len(self.feature_names_) != d:
            raise DimensionMismatch(
                f"{len(self.feature_names_)} feature names for {d} columns"
            )
        return self

    @classmethod
    def from_parameters(cls, coef, coef_covariance, residual_variance, dof, feature_names):
        """Assemble a fitted model from published estimates (shipped defaults)."""
        model = cls()
        coef = np.asarray(coef, dtype=float)
        cov = np.asarray(coef_covariance, dtype=float)
        d = coef.shape[0]
        if cov.shape != (d, d):
            raise DimensionMismatch(f"coef covariance shape {cov.shape}, expected {(d, d)}")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise ValueError("coef covariance must be symmetric within 1e-10")
        if residual_variance < 0.0:
            raise ValueError("residual variance must be >= 0")
        model.n_features_in_ = d
        model.coef_ = coef
        model.coef_covariance_ = 0.5 * (cov + cov.T)  # symmetrized once more for safety
        model.residual_variance_ = float(residual_variance)
        model.dof_ = int(dof)
        model.feature_names_ = list(feature_names)
        if len(model.feature_names_) != d:
            raise DimensionMismatch(f"{len(model.feature_names_)} names for {d} coefficients")
        return model

    def _check_x(self, x) -> np.ndarray:
        """Validate width and prepend the intercept column when fitted with one."""
        check_fitted(self, "coef_")
        x = np.asarray(x, dtype=float)
        if x.ndim not in (1, 2):
            raise DimensionMismatch(f"expected 1-D or 2-D features, got ndim {x.ndim}")
        width = x.shape[-1]
        if width != self.n_features_in_:
            raise DimensionMismatch(
                f"feature width {width}, expected {self.n_features_in_}"
            )
        if self.fit_intercept:
            ones = np.ones((*x.shape[:-1], 1))
            x = np.concatenate([ones, x], axis=-1)
        return x

    def predict(self, X) -> np.ndarray:
        """Log-scale predictive mean."""
        X = self._check_x(X)
        return X @ self.coef_

    def predict_dist(self, x) -> LogNormalDist:
        """Lognormal predictive distribution for the raw response at one point."""
        x = self._check_x(x)
        if x.ndim != 1:
            raise DimensionMismatch("predict_dist takes a single feature vector")
        mu = float(x @ self.coef_)
        sigma2 = float(x @ self.coef_covariance_ @ x) + self.residual_variance_
        return LogNormalDist(mu, max(sigma2, 0.0))

    def predictive_params(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized (mu, sigma2) rows of the lognormal predictive."""
        X = self._check_x(X)
        if X.ndim == 1:
            X = X[None, :]
        mu = X @ self.coef_
        sigma2 = np.einsum("ij,jk,ik->i", X, self.coef_covariance_, X) + self.residual_variance_
        return mu, np.maximum(sigma2, 0.0)
