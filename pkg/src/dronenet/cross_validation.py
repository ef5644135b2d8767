"""K-fold cross-validation harness for the surrogate estimators.

Out-of-sample metrics per fold, with the pseudo R-squared denominator
taken from the held-out fold's own mean (which is why a train-mean
Baseline hovers at R^2 ~ -0.000 instead of exactly zero):

    R^2  = 1 - sum((y - yhat)^2) / sum((y - ybar_test)^2)
    RMSE = sqrt(mean((y - yhat)^2))
    MAE  = mean(|y - yhat|)

A mean-only Baseline fitter is always included in the roster.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, clone
from sklearn.model_selection import KFold

from .exceptions import FoldTooSmall
from .validation import check_matrix, check_vector

__all__ = ["BaselineMean", "CVReport", "kfold_cv"]

METRIC_KEYS = ("r2_mean", "r2_sd", "rmse_mean", "rmse_sd", "mae_mean", "mae_sd")


class BaselineMean(BaseEstimator, RegressorMixin):
    """Predicts the training-fold mean everywhere."""

    def fit(self, X, y, feature_names=None):
        self.mean_ = float(np.mean(y))
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        n = X.shape[0] if X.ndim > 1 else 1
        return np.full(n, self.mean_)


@dataclass
class CVReport:
    rows: dict = field(default_factory=dict)  # model name -> {metric: value}
    n_folds: int = 0
    fold_seed: int = 0

    def table(self) -> list[list]:
        out = [["model", *METRIC_KEYS]]
        for name, metrics in self.rows.items():
            out.append([name, *[metrics[k] for k in METRIC_KEYS]])
        return out


def _fold_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float, float]:
    err = y_true - y_pred
    sse = float(err @ err)
    centred = y_true - y_true.mean()
    sst = float(centred @ centred)
    if sst > 0.0:
        r2 = 1.0 - sse / sst
    else:
        # single-point or constant held-out fold: R^2 undefined unless exact
        r2 = 1.0 if sse == 0.0 else float("nan")
    rmse = float(np.sqrt(np.mean(err**2)))
    mae = float(np.mean(np.abs(err)))
    return r2, rmse, mae


def kfold_cv(X, y, model_fitters, n_folds: int = 10, seed: int = 0) -> CVReport:
    """Cross-validate ``model_fitters`` (name, estimator) pairs.

    Estimators follow the fit/predict protocol in log-response space.
    Each fold's estimator clone gets a random_state derived from
    (seed, fold) when it exposes one.
    """
    X = check_matrix(X, "X")
    n = X.shape[0]
    y = check_vector(y, n)
    if n_folds < 2:
        raise FoldTooSmall(f"need at least 2 folds, got {n_folds}")
    if n < n_folds:
        raise FoldTooSmall(f"{n_folds} folds for only {n} samples")

    roster = list(model_fitters)
    if not any(name == "baseline" for name, _ in roster):
        roster.insert(0, ("baseline", BaselineMean()))

    splitter = KFold(n_splits=n_folds, shuffle=True, random_state=seed)
    folds = list(splitter.split(X))

    report = CVReport(n_folds=n_folds, fold_seed=seed)
    for name, proto in roster:
        scores = np.empty((len(folds), 3))
        for k, (train_idx, test_idx) in enumerate(folds):
            est = clone(proto)
            if "random_state" in est.get_params():
                est.set_params(random_state=seed * 10007 + k)
            est.fit(X[train_idx], y[train_idx])
            pred = np.asarray(est.predict(X[test_idx]), dtype=float).ravel()
            scores[k] = _fold_metrics(y[test_idx], pred)
        ddof = 1 if len(folds) > 1 else 0
        report.rows[name] = {
            "r2_mean": float(scores[:, 0].mean()),
            "r2_sd": float(scores[:, 0].std(ddof=ddof)),
            "rmse_mean": float(scores[:, 1].mean()),
            "rmse_sd": float(scores[:, 1].std(ddof=ddof)),
            "mae_mean": float(scores[:, 2].mean()),
            "mae_sd": float(scores[:, 2].std(ddof=ddof)),
        }
    return report
