import math

import numpy as np
import pytest

from dronenet.environment import (
    KNOTS_TO_MS,
    WindModel,
    WindSample,
    decompose_wind,
    default_wind_model,
    sample_wind,
    sample_wind_at_sites,
    season_of_month,
)
from dronenet.exceptions import OutOfRange
from dronenet.gp import GPSurrogate
from dronenet.kernels import Matern52Kernel
from dronenet.rng import stream


class TestSeasons:
    @pytest.mark.parametrize("month,season", [
        (12, 1), (1, 1), (2, 1),
        (3, 2), (4, 2), (5, 2),
        (6, 3), (7, 3), (8, 3),
        (9, 4), (10, 4), (11, 4),
    ])
    def test_coding(self, month, season):
        assert season_of_month(month) == season

    @pytest.mark.parametrize("month", [0, 13, -1])
    def test_out_of_range(self, month):
        with pytest.raises(OutOfRange):
            season_of_month(month)


class TestDecompose:
    def test_pure_tailwind(self):
        tail, cross = decompose_wind(7.0, 120.0, 120.0)
        assert tail == pytest.approx(7.0, abs=1e-12)
        assert cross == pytest.approx(0.0, abs=1e-12)

    def test_pure_crosswind(self):
        tail, cross = decompose_wind(5.0, 90.0, 0.0)
        assert tail == pytest.approx(0.0, abs=1e-12)
        assert cross == pytest.approx(5.0, abs=1e-12)

    def test_headwind(self):
        tail, cross = decompose_wind(8.0, 30.0, 210.0)
        assert tail == pytest.approx(-8.0, abs=1e-12)
        assert cross == pytest.approx(0.0, abs=1e-12)

    def test_energy_identity_and_wraparound(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            speed = rng.uniform(0, 30)
            direction = rng.uniform(-720, 720)
            heading = rng.uniform(-720, 720)
            tail, cross = decompose_wind(speed, direction, heading)
            assert tail**2 + cross**2 == pytest.approx(speed**2, abs=1e-9)
            tail2, cross2 = decompose_wind(speed, direction + 360.0, heading)
            assert tail2 == pytest.approx(tail, abs=1e-9)
            tail3, cross3 = decompose_wind(speed, direction, heading + 360.0)
            assert tail3 == pytest.approx(tail, abs=1e-9)
            assert cross2 == pytest.approx(cross, abs=1e-9)
            assert cross3 == pytest.approx(cross, abs=1e-9)

    def test_negative_speed_rejected(self):
        with pytest.raises(ValueError):
            decompose_wind(-1.0, 0.0, 0.0)


def degenerate_wind_model(log_speed_knots: float, log_direction_deg: float) -> WindModel:
    """Zero-predictive-variance wind model via constant-response GPs."""
    X = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 2.0], [0.0, 1.0, 3.0], [1.0, 1.0, 4.0]])
    kern = Matern52Kernel(scales=(1.0, 1.0, 1.0), variance=1.0)
    speed = GPSurrogate(kernel=kern, optimize=False).fit(X, np.full(4, log_speed_knots))
    direction = GPSurrogate(kernel=kern, optimize=False).fit(X, np.full(4, log_direction_deg))
    return WindModel(speed_model=speed, direction_model=direction)


class TestSampleWind:
    def test_deterministic_transform_knots_to_ms(self):
        wm = degenerate_wind_model(math.log(10.0), math.log(90.0))
        draws = sample_wind(wm, (0.5, 0.5), 2, stream(0, "w"), 5)
        for w in draws:
            assert w.speed == pytest.approx(10.0 * KNOTS_TO_MS, abs=1e-9)
            assert w.speed == pytest.approx(5.14444, abs=1e-5)
            assert w.direction == pytest.approx(90.0, abs=1e-9)

    def test_direction_wraps_into_range(self):
        wm = degenerate_wind_model(math.log(10.0), math.log(400.0))
        draws = sample_wind(wm, (0.5, 0.5), 1, stream(0, "w"), 3)
        for w in draws:
            assert w.direction == pytest.approx(40.0, abs=1e-9)

    def test_sample_median_matches_predictive_median(self):
        wm = default_wind_model()
        loc = (250000.0, 660000.0)
        speed_dist, _ = wm.predictive(loc, 2)
        draws = sample_wind(wm, loc, 2, stream(3, "w"), 10_000)
        speeds = np.array([w.speed for w in draws])
        expected = math.exp(speed_dist.mu) * KNOTS_TO_MS
        assert np.median(speeds) == pytest.approx(expected, rel=2e-2)

    def test_outputs_always_valid_for_a_million_draws(self):
        wm = default_wind_model()
        rng = stream(9, "check")
        for season in (1, 2, 3, 4):
            speeds, dirs = sample_wind_at_sites(
                wm, np.array([[200000.0, 600000.0], [300000.0, 700000.0]]),
                season, rng, 125_000)
            assert np.all(speeds >= 0.0)
            assert np.all((dirs >= 0.0) & (dirs < 360.0))

    def test_vectorized_matches_scalar_distribution(self):
        wm = default_wind_model()
        loc = np.array([[250000.0, 660000.0]])
        speeds, _ = sample_wind_at_sites(wm, loc, 1, stream(1, "a"), 4000)
        singles = sample_wind(wm, loc[0], 1, stream(2, "b"), 4000)
        med_vec = float(np.median(speeds))
        med_single = float(np.median([w.speed for w in singles]))
        assert med_vec == pytest.approx(med_single, rel=0.05)


class TestWindSample:
    def test_direction_normalized(self):
        w = WindSample(3.0, 725.0)
        assert w.direction == pytest.approx(5.0)

    def test_negative_speed_rejected(self):
        with pytest.raises(ValueError):
            WindSample(-0.1, 0.0)


def test_default_wind_model_loads_and_is_seasonal():
    wm = default_wind_model()
    rng = stream(0, "season-check")
    means = {}
    for season in (1, 3):
        speeds, _ = sample_wind_at_sites(
            wm, np.array([[250000.0, 660000.0]]), season, rng, 2000)
        means[season] = float(speeds.mean())
    assert means[1] > means[3]  # winter windier than summer
