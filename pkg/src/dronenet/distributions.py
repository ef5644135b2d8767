"""Lognormal predictive distributions.

Every surrogate in the pipeline emits a lognormal over its (strictly
positive) response: a normal with mean ``mu`` and variance ``sigma2`` on
the log scale. This module is the shared currency — construction,
sampling, CDF evaluation, and the moment-matched sum of independent
lognormals used to compose per-phase flight times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp, ndtr

from .exceptions import EmptyComponentList

__all__ = [
    "LogNormalDist",
    "lognormal_sum",
    "lognormal_sum_params",
    "lognormal_cdf",
    "sample_lognormal",
]


@dataclass(frozen=True)
class LogNormalDist:
    """Lognormal with log-scale mean ``mu`` and log-scale variance ``sigma2``.

    ``sigma2 == 0`` degenerates to a point mass at ``exp(mu)``.
    """

    mu: float
    sigma2: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")
        if not (self.sigma2 >= 0.0):
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")

    @property
    def median(self) -> float:
        return math.exp(self.mu)

    @property
    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma2)

    @property
    def variance(self) -> float:
        return math.exp(2.0 * self.mu + self.sigma2) * math.expm1(self.sigma2)

    def cdf(self, x) -> np.ndarray | float:
        """P(X <= x); the degenerate case is a step at the median."""
        out = lognormal_cdf(np.asarray(x, dtype=float), self.mu, self.sigma2)
        return float(out) if np.ndim(out) == 0 else out


def lognormal_cdf(x, mu, sigma2) -> np.ndarray:
    """Vectorized P(X <= x) for lognormal(mu, sigma2); sigma2 == 0 is a median step."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.where(x > 0.0, np.log(np.maximum(x, 1e-300)), -np.inf)
        sd = np.sqrt(sigma2)
        z = np.where(sd > 0.0, (logx - mu) / np.where(sd > 0.0, sd, 1.0), np.nan)
    smooth = ndtr(np.where(np.isnan(z), 0.0, z))
    step = (logx >= mu).astype(float)
    return np.where(sigma2 > 0.0, smooth, step)


def lognormal_sum_params(mu, sigma2, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Moment-matched (mu, sigma2) of a sum of independent lognormals.

    Matches the exact first two moments of the sum: with component means
    m_j = exp(mu_j + sigma2_j/2) and variances
    v_j = exp(2 mu_j + sigma2_j)(exp(sigma2_j) - 1),

        sigma2_T = log(1 + sum(v_j) / sum(m_j)^2)
        mu_T     = log(sum(m_j)) - sigma2_T / 2

    ``axis`` indexes the components; other axes broadcast.
    """
    mu = np.asarray(mu, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    log_m = mu + 0.5 * sigma2
    log_m_total = logsumexp(log_m, axis=axis)
    with np.errstate(divide="ignore"):
        log_v = 2.0 * mu + sigma2 + np.log(np.expm1(sigma2))  # -inf when sigma2 == 0
    log_v_total = logsumexp(log_v, axis=axis)
    ratio = np.exp(log_v_total - 2.0 * log_m_total)
    s2_total = np.log1p(ratio)
    return log_m_total - 0.5 * s2_total, s2_total


def lognormal_sum(components: Sequence[LogNormalDist] | Iterable[LogNormalDist]) -> LogNormalDist:
    """Moment-matched lognormal for the sum; a single component is exact."""
    comps = list(components)
    if not comps:
        raise EmptyComponentList("lognormal_sum needs at least one component")
    if len(comps) == 1:
        return comps[0]
    mu, s2 = lognormal_sum_params(
        np.array([c.mu for c in comps]), np.array([c.sigma2 for c in comps])
    )
    return LogNormalDist(float(mu), float(s2))


def sample_lognormal(dist: LogNormalDist, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` draws exp(N(mu, sigma2)); deterministic under a fixed stream."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if dist.sigma2 == 0.0:
        return np.full(count, math.exp(dist.mu))
    return np.exp(rng.normal(dist.mu, math.sqrt(dist.sigma2), size=count))
