"""Gaussian-process regression with profile maximum likelihood.

Universal-kriging form: a constant or linear trend plus a zero-mean GP
whose covariance is sigma2_hat * K_theta. For a candidate theta the trend
coefficients and process variance have closed forms,

    b_hat      = (F' K^{-1} F)^{-1} F' K^{-1} y
    sigma2_hat = (y - F b_hat)' K^{-1} (y - F b_hat) / (n - (q + 1))

and theta minimizes the profile negative log likelihood

    (n / 2) log(2 pi sigma2_hat) + (1 / 2) log det K.

Hyperparameters are optimized by Nelder-Mead in log space from the
template's own values plus ``n_restarts`` starts drawn log-uniformly over
[1e-2, 1e2] times the data scale. No nugget term: noise enters only
through the sigma2_hat scaling, so the fitted surface interpolates the
training data (up to jitter).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, RegressorMixin

from .distributions import LogNormalDist
from .exceptions import (
    DimensionMismatch,
    FactorizationFailed,
    NumericalFailure,
    OptimizerFailed,
)
from .kernels import Kernel
from .validation import check_fitted, check_matrix, check_vector

__all__ = ["GPSurrogate"]

JITTER_START = 1e-8
JITTER_MAX = 1e-4
VARIANCE_CLAMP = 1e-10
RESTART_LOG_SPREAD = math.log(1e2)  # starts span [1e-2, 1e2] x data scale


def _trend_basis(X: np.ndarray, trend: str) -> np.ndarray:
    if trend == "constant":
        return np.ones((X.shape[0], 1))
    if trend == "linear":
        return np.hstack([np.ones((X.shape[0], 1)), X])
    raise ValueError(f"trend must be 'constant' or 'linear', got {trend!r}")


def _chol_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of K + jitter*I, escalating jitter 1e-8..1e-4 of mean diag."""
    scale = float(np.mean(np.diag(K)))
    if scale <= 0.0 or not math.isfinite(scale):
        scale = 1.0
    jitter = JITTER_START * scale
    while True:
        try:
            L = cholesky(K + jitter * np.eye(K.shape[0]), lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter *= 2.0
            if jitter > JITTER_MAX * scale:
                raise FactorizationFailed(
                    f"Gram matrix not PD up to jitter {JITTER_MAX:.0e} x mean diag"
                ) from None


class GPSurrogate(BaseEstimator, RegressorMixin):
    """GP regressor over a kernel template.

    Parameters
    ----------
    kernel : Kernel
        Template; its values seed the optimizer and its ``fixed`` sets
        decide which hyperparameters stay pinned.
    trend : {"constant", "linear"}
    n_restarts : extra random multi-starts on top of the template start.
    random_state : seed for the restart draws.
    optimize : skip MLE and keep the template hyperparameters when False.
    """

    def __init__(self, kernel: Kernel, trend: str = "constant", n_restarts: int = 8,
                 random_state: int = 0, optimize: bool = True):
        self.kernel = kernel
        self.trend = trend
        self.n_restarts = n_restarts
        self.random_state = random_state
        self.optimize = optimize

    # -- fitting -------------------------------------------------------------

    def _profile(self, kernel: Kernel, X, y, F):
        """(objective, b_hat, sigma2_hat, L) for fixed hyperparameters."""
        n, q1 = F.shape
        K = kernel.gram(X)
        L, _ = _chol_with_jitter(K)
        Ki_y = cho_solve((L, True), y)
        Ki_F = cho_solve((L, True), F)
        G = F.T @ Ki_F
        b = np.linalg.solve(G, F.T @ Ki_y)
        resid = y - F @ b
        Ki_r = cho_solve((L, True), resid)
        dof = n - q1
        if dof <= 0:
            raise DimensionMismatch(f"GP needs n > trend dof, got n={n}, q+1={q1}")
        sigma2 = max(float(resid @ Ki_r) / dof, 0.0)
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        obj = 0.5 * n * math.log(2.0 * math.pi * max(sigma2, 1e-300)) + 0.5 * logdet
        return obj, b, sigma2, L

    def fit(self, X, y, feature_names=None):
        X = check_matrix(X, "X", min_rows=3)
        n = X.shape[0]
        y = check_vector(y, n)
        F = _trend_basis(X, self.trend)

        template: Kernel = self.kernel
        n_free = template.n_free()
        if self.optimize and n_free > 0:
            kernel = self._optimize_kernel(template, X, y, F)
        else:
            kernel = template

        obj, b, sigma2, L = self._profile(kernel, X, y, F)
        self.kernel_ = kernel
        self.X_train_ = X
        self.y_train_ = y
        self.trend_coef_ = b
        self.sigma2_ = sigma2
        self.objective_ = obj
        self.feature_names_ = (
            list(feature_names) if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
        )
        # prediction caches
        self._F = F
        self._L = L
        self._alpha = cho_solve((L, True), y - F @ b)
        self._Ki_F = cho_solve((L, True), F)
        G = F.T @ self._Ki_F
        self._G_chol = cholesky(G, lower=True)
        self.n_features_in_ = X.shape[1]
        return self

    def _optimize_kernel(self, template: Kernel, X, y, F) -> Kernel:
        def objective(packed):
            try:
                kern = template.unpack(packed)
            except ValueError:
                return np.inf
            try:
                return self._profile(kern, X, y, F)[0]
            except (FactorizationFailed, np.linalg.LinAlgError):
                return np.inf

        rng = np.random.default_rng(self.random_state)
        base = template.base_log(X)
        starts = [template.pack()]
        for _ in range(self.n_restarts):
            starts.append(base + rng.uniform(-RESTART_LOG_SPREAD, RESTART_LOG_SPREAD, base.shape))

        best_obj, best_packed = np.inf, None
        for x0 in starts:
            f0 = objective(x0)
            if not np.isfinite(f0):
                continue
            res = minimize(objective, x0, method="Nelder-Mead",
                           options={"maxiter": 200 * len(x0), "xatol": 1e-3, "fatol": 1e-6})
            cand, f_cand = (res.x, res.fun) if np.isfinite(res.fun) else (x0, f0)
            if f_cand < best_obj:
                best_obj, best_packed = f_cand, cand
        if best_packed is None:
            raise OptimizerFailed("all hyperparameter restarts gave non-finite objectives")
        return template.unpack(best_packed)

    # -- prediction ------------------------------------------------------------

    def _predict_arrays(self, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        check_fitted(self, "kernel_")
        Xq = check_matrix(Xq, "X*")
        if Xq.shape[1] != self.n_features_in_:
            raise DimensionMismatch(
                f"query dim {Xq.shape[1]}, trained on {self.n_features_in_}"
            )
        ks = self.kernel_.cross(self.X_train_, Xq)          # (n, m)
        fq = _trend_basis(Xq, self.trend)                   # (m, q+1)
        mean = fq @ self.trend_coef_ + ks.T @ self._alpha

        Ki_ks = cho_solve((self._L, True), ks)              # (n, m)
        quad = np.einsum("ij,ij->j", ks, Ki_ks)             # k*' K^{-1} k*
        U = fq.T - self._F.T @ Ki_ks                        # (q+1, m)
        W = solve_triangular(self._G_chol, U, lower=True)
        trend_corr = np.einsum("ij,ij->j", W, W)
        factor = self.kernel_.diag_value() - quad + trend_corr
        bad = factor < -VARIANCE_CLAMP
        if np.any(bad):
            raise NumericalFailure(
                f"predictive variance factor {factor[bad].min():.3e} below -{VARIANCE_CLAMP:.0e}"
            )
        var = self.sigma2_ * np.maximum(factor, 0.0)
        return mean, var

    def predict(self, X, return_var: bool = False):
        """Predictive mean on the log scale (and variance when asked)."""
        mean, var = self._predict_arrays(np.atleast_2d(np.asarray(X, dtype=float)))
        if return_var:
            return mean, var
        return mean

    def predict_dist(self, x) -> LogNormalDist:
        """Lognormal over the raw response at a single point."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise DimensionMismatch("predict_dist takes a single feature vector")
        mean, var = self._predict_arrays(x[None, :])
        return LogNormalDist(float(mean[0]), float(var[0]))
