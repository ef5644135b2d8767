"""Regenerate the shipped wind surrogate JSONs.

The real seasonal wind archive is not redistributable, so the default
models are GPs fitted (fixed hyperparameters) on a synthetic
Scotland-scale seasonal field: 42 stations x 4 seasons, speed in knots
and direction in degrees, both modelled on the log scale over
(easting, northing, season). Run from the repo root:

    python tools/build_wind_defaults.py
"""

import json
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dronenet.environment import KNOTS_TO_MS, WindModel, sample_wind
from dronenet.gp import GPSurrogate
from dronenet.kernels import Matern52Kernel, PeriodicKernel, ProductKernel
from dronenet.model_io import model_to_dict
from dronenet.rng import stream

OUT = Path(__file__).resolve().parents[1] / "src" / "dronenet" / "data"

# Scotland-ish BNG extent, 42 pseudo-stations
E_RANGE = (120000.0, 400000.0)
N_RANGE = (540000.0, 970000.0)
N_STATIONS = 42
BASE_SPEED_KNOTS = 11.0
SEASONAL_AMP_KNOTS = 4.0     # winter above base, summer below
PREVAILING_DEG = 225.0       # southwesterly


def build():
    rng = stream(202400, "wind-defaults")
    es = rng.uniform(*E_RANGE, N_STATIONS)
    ns = rng.uniform(*N_RANGE, N_STATIONS)
    rows, log_speed, log_dir = [], [], []
    for e, n in zip(es, ns):
        for season in (1, 2, 3, 4):
            seasonal = math.cos(2.0 * math.pi * (season - 1) / 4.0)
            speed = (BASE_SPEED_KNOTS + SEASONAL_AMP_KNOTS * seasonal
                     + 2.0 * math.sin(e / 60000.0) + 1.6 * math.cos(n / 80000.0)
                     - 1.2e-5 * (n - N_RANGE[0]) * 0.0)
            speed = max(speed, 2.0) * math.exp(rng.normal(0.0, 0.05))
            direction = (PREVAILING_DEG + 20.0 * math.sin(2.0 * math.pi * (season - 1) / 4.0)
                         + 14.0 * math.sin(n / 70000.0) + 8.0 * math.cos(e / 50000.0))
            direction *= math.exp(rng.normal(0.0, 0.03))
            rows.append([e, n, float(season)])
            log_speed.append(math.log(speed))
            log_dir.append(math.log(max(direction, 5.0)))
    X = np.asarray(rows)
    # product kernel: a sum kernel over the season x station product grid is
    # rank-deficient (rank ~ n_seasons + n_stations), toxic without a nugget
    kernel = ProductKernel(children=(
        PeriodicKernel(scales=(2.2,), periods=(4.0,), variance=1.0, active_dims=(2,)),
        Matern52Kernel(scales=(60000.0, 75000.0), variance=0.05, active_dims=(0, 1)),
    ))
    names = ["easting", "northing", "season"]
    OUT.mkdir(parents=True, exist_ok=True)
    models = {}
    for fname, y in (("wind_speed_model.json", log_speed),
                     ("wind_direction_model.json", log_dir)):
        model = GPSurrogate(kernel=kernel, trend="constant", optimize=False).fit(
            X, np.asarray(y), feature_names=names)
        (OUT / fname).write_text(
            json.dumps(model_to_dict(model), sort_keys=True, indent=1))
        models[fname] = model
        print(f"wrote {OUT / fname} (sigma2_hat={model.sigma2_:.4f})")

    # sanity: yearly draws must look like Scottish wind, not numerics debris
    wm = WindModel(speed_model=models["wind_speed_model.json"],
                   direction_model=models["wind_direction_model.json"])
    check = stream(1, "verify")
    for season in (1, 2, 3, 4):
        draws = sample_wind(wm, (250000.0, 660000.0), season, check, 400)
        mean_speed = float(np.mean([w.speed for w in draws]))
        print(f"  season {season}: mean speed {mean_speed:.2f} m/s")
        assert 2.0 < mean_speed < 12.0, f"implausible default wind speed {mean_speed}"
    assert KNOTS_TO_MS == 0.514444


if __name__ == "__main__":
    build()
