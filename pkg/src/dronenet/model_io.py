"""Model and dataset I/O.

Models serialize to JSON with explicit field names; datasets load from
CSV with a header row, first column the raw-scale response (log taken
here) and the remaining columns features in declared order.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import SchemaError
from .gp import GPSurrogate
from .kernels import kernel_from_dict
from .linear import LogLinearRegressor

__all__ = [
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "load_dataset_csv",
]


def model_to_dict(model) -> dict:
    if isinstance(model, LogLinearRegressor):
        return {
            "type": "linear",
            "feature_names": model.feature_names_,
            "coefficients": model.coef_.tolist(),
            "coef_covariance": model.coef_covariance_.tolist(),
            "residual_variance": model.residual_variance_,
            "dof": model.dof_,
        }
    if isinstance(model, GPSurrogate):
        return {
            "type": "gp",
            "feature_names": model.feature_names_,
            "kernel": model.kernel_.to_dict(),
            "trend": model.trend,
            "train_x": model.X_train_.tolist(),
            "train_y": model.y_train_.tolist(),
            "trend_coef": model.trend_coef_.tolist(),
            "sigma2": model.sigma2_,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict):
    kind = d.get("type")
    if kind == "linear":
        return LogLinearRegressor.from_parameters(
            coef=d["coefficients"],
            coef_covariance=d["coef_covariance"],
            residual_variance=d["residual_variance"],
            dof=d["dof"],
            feature_names=d["feature_names"],
        )
    if kind == "gp":
        # refit the linear algebra with the stored hyperparameters; b_hat and
        # sigma2_hat are recomputed deterministically from the train set
        model = GPSurrogate(kernel=kernel_from_dict(d["kernel"]), trend=d["trend"],
                            optimize=False)
        model.fit(np.asarray(d["train_x"], dtype=float),
                  np.asarray(d["train_y"], dtype=float),
                  feature_names=d["feature_names"])
        return model
    raise SchemaError(f"unknown model type {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True, indent=1))


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))


def load_dataset_csv(path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """(features X, log response y, feature names) from a response-first CSV."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty dataset", path=path) from None
        if len(header) < 2:
            raise SchemaError("dataset needs a response column and at least one feature",
                              path=path)
        rows = []
        for i, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise SchemaError(f"expected {len(header)} fields, got {len(rec)}",
                                  path=path, row=i)
            try:
                rows.append([float(v) for v in rec])
            except ValueError as exc:
                raise SchemaError(f"non-numeric value: {exc}", path=path, row=i) from None
    if not rows:
        raise SchemaError("dataset has a header but no rows", path=path)
    data = np.asarray(rows, dtype=float)
    response = data[:, 0]
    if np.any(response <= 0.0):
        bad = int(np.argmax(response <= 0.0)) + 2
        raise SchemaError("response must be strictly positive (log is taken)",
                          path=path, row=bad, column=header[0])
    return data[:, 1:], np.log(response), header[1:]
