import numpy as np
import pytest

from dronenet.cross_validation import BaselineMean, kfold_cv
from dronenet.exceptions import FoldTooSmall
from dronenet.linear import LogLinearRegressor
from sklearn.model_selection import KFold


def linear_data(n=200, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = 1.0 + 0.8 * X[:, 0] - 0.3 * X[:, 1] + rng.normal(0, noise, n)
    return X, y


def test_perfect_predictor_scores_one():
    X, y = linear_data(noise=0.0)
    report = kfold_cv(X, y, [("lm", LogLinearRegressor(fit_intercept=True))],
                      n_folds=5, seed=0)
    row = report.rows["lm"]
    assert row["r2_mean"] == pytest.approx(1.0, abs=1e-9)
    assert row["rmse_mean"] == pytest.approx(0.0, abs=1e-9)
    assert row["mae_mean"] == pytest.approx(0.0, abs=1e-9)


def test_baseline_always_included_and_near_zero():
    X, y = linear_data(n=600, noise=1.0, seed=3)
    report = kfold_cv(X, y, [("lm", LogLinearRegressor(fit_intercept=True))],
                      n_folds=10, seed=1)
    assert "baseline" in report.rows
    base = report.rows["baseline"]
    # out-of-sample R^2 of a train-mean predictor hovers just below zero
    assert -0.1 < base["r2_mean"] <= 0.0


def test_shuffled_labels_kill_r2():
    rng = np.random.default_rng(11)
    X, y = linear_data(n=500, noise=0.2, seed=11)
    y = rng.permutation(y)
    report = kfold_cv(X, y, [("lm", LogLinearRegressor(fit_intercept=True))],
                      n_folds=5, seed=2)
    assert report.rows["lm"]["r2_mean"] <= 0.05


def test_mae_never_exceeds_rmse():
    X, y = linear_data(n=300, noise=0.8, seed=5)
    report = kfold_cv(X, y, [("lm", LogLinearRegressor(fit_intercept=True))],
                      n_folds=6, seed=3)
    for row in report.rows.values():
        assert row["mae_mean"] <= row["rmse_mean"] + 1e-12


def test_fold_assignment_is_a_partition():
    n = 57
    splitter = KFold(n_splits=7, shuffle=True, random_state=9)
    seen = np.zeros(n, dtype=int)
    for _, test_idx in splitter.split(np.zeros((n, 1))):
        seen[test_idx] += 1
    np.testing.assert_array_equal(seen, 1)


def test_loo_supported():
    X, y = linear_data(n=25, noise=0.1, seed=7)
    report = kfold_cv(X, y, [("lm", LogLinearRegressor(fit_intercept=True))],
                      n_folds=25, seed=0)
    assert report.n_folds == 25
    assert np.isfinite(report.rows["lm"]["rmse_mean"])


def test_fold_count_validation():
    X, y = linear_data(n=10)
    with pytest.raises(FoldTooSmall):
        kfold_cv(X, y, [], n_folds=1)
    with pytest.raises(FoldTooSmall):
        kfold_cv(X, y, [], n_folds=11)


def test_baseline_mean_estimator():
    est = BaselineMean().fit(np.zeros((4, 2)), np.array([1.0, 2.0, 3.0, 4.0]))
    np.testing.assert_allclose(est.predict(np.zeros((3, 2))), 2.5)


def test_report_table_shape():
    X, y = linear_data(n=60, noise=0.5)
    report = kfold_cv(X, y, [("lm", LogLinearRegressor(fit_intercept=True))],
                      n_folds=4, seed=0)
    table = report.table()
    assert table[0][0] == "model"
    assert {row[0] for row in table[1:]} == {"baseline", "lm"}
