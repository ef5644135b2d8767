"""Seasonal wind scenarios.

Wind speed (knots) and direction (degrees from north) are modelled on the
log scale by GP surrogates over (easting, northing, season), with the
meteorological season coded 1-4. Sampling exponentiates predictive draws,
converts speed to m/s, and wraps direction into [0, 360). Tail/cross
decomposition relative to a heading chi:

    tail  = speed * cos(direction - chi)
    cross = speed * sin(direction - chi)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .distributions import LogNormalDist, sample_lognormal
from .exceptions import OutOfRange
from .gp import GPSurrogate
from .model_io import model_from_dict

__all__ = [
    "KNOTS_TO_MS",
    "season_of_month",
    "WindModel",
    "WindSample",
    "sample_wind",
    "sample_wind_at_sites",
    "decompose_wind",
    "default_wind_model",
]

KNOTS_TO_MS = 0.514444

# Dec-Feb -> 1, Mar-May -> 2, Jun-Aug -> 3, Sep-Nov -> 4
_SEASON_BY_MONTH = {12: 1, 1: 1, 2: 1, 3: 2, 4: 2, 5: 2,
                    6: 3, 7: 3, 8: 3, 9: 4, 10: 4, 11: 4}


def season_of_month(month: int) -> int:
    if month not in _SEASON_BY_MONTH:
        raise OutOfRange(f"month must be in 1..12, got {month}")
    return _SEASON_BY_MONTH[month]


@dataclass(frozen=True)
class WindSample:
    """One wind realization: speed in m/s (>= 0), direction in [0, 360) degrees."""

    speed: float
    direction: float

    def __post_init__(self):
        if self.speed < 0.0:
            raise ValueError("wind speed must be >= 0")
        object.__setattr__(self, "direction", float(self.direction) % 360.0)


@dataclass
class WindModel:
    """Paired GP surrogates on (easting, northing, season) in BNG meters."""

    speed_model: GPSurrogate     # output: log knots
    direction_model: GPSurrogate  # output: log degrees

    def predictive(self, location, season: int) -> tuple[LogNormalDist, LogNormalDist]:
        x = np.array([location[0], location[1], float(season)])
        return self.speed_model.predict_dist(x), self.direction_model.predict_dist(x)


def sample_wind(model: WindModel, location, season: int, rng: np.random.Generator,
                count: int) -> list[WindSample]:
    """``count`` wind draws at one location for one season."""
    speed_dist, dir_dist = model.predictive(location, season)
    speeds = sample_lognormal(speed_dist, rng, count) * KNOTS_TO_MS
    directions = sample_lognormal(dir_dist, rng, count) % 360.0
    return [WindSample(float(s), float(d)) for s, d in zip(speeds, directions)]


def sample_wind_at_sites(model: WindModel, locations: np.ndarray, season: int,
                         rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized draws for many locations: (count, n_sites) speeds m/s and directions deg.

    Draw k of column j is the wind at site j under scenario k; all of a
    site's incident pairs share its draw within a scenario.
    """
    locations = np.asarray(locations, dtype=float)
    X = np.column_stack([locations[:, 0], locations[:, 1],
                         np.full(locations.shape[0], float(season))])
    mu_s, var_s = model.speed_model.predict(X, return_var=True)
    mu_d, var_d = model.direction_model.predict(X, return_var=True)
    z1 = rng.standard_normal((count, locations.shape[0]))
    z2 = rng.standard_normal((count, locations.shape[0]))
    speeds = np.exp(mu_s[None, :] + np.sqrt(var_s)[None, :] * z1) * KNOTS_TO_MS
    directions = np.exp(mu_d[None, :] + np.sqrt(var_d)[None, :] * z2) % 360.0
    return speeds, directions


def decompose_wind(speed, direction, heading) -> tuple[np.ndarray, np.ndarray]:
    """(tail, cross) components of the wind relative to ``heading`` (degrees)."""
    speed = np.asarray(speed, dtype=float)
    if np.any(speed < 0.0):
        raise ValueError("wind speed must be >= 0")
    delta = np.radians(np.asarray(direction, dtype=float) - np.asarray(heading, dtype=float))
    tail = speed * np.cos(delta)
    cross = speed * np.sin(delta)
    if tail.ndim == 0:
        return float(tail), float(cross)
    return tail, cross


def default_wind_model() -> WindModel:
    """Shipped wind surrogates (synthetic seasonal field, JSON package data)."""
    data = resources.files("dronenet").joinpath("data")
    speed = model_from_dict(json.loads(data.joinpath("wind_speed_model.json").read_text()))
    direction = model_from_dict(json.loads(data.joinpath("wind_direction_model.json").read_text()))
    return WindModel(speed_model=speed, direction_model=direction)
