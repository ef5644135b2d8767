"""Posterior consumption: site selection, cost-effectiveness, reliability.

Activation probabilities aggregate the post-burn-in chain iterates per
(season, hour), then average over hours and seasons; sites whose yearly
probability reaches tau are selected. The QALY gain of the selected
network uses the survival model SP(T) = exp(-0.11 T):

    dQALY = 12 * 0.22 * 0.26 * mean_k sum_i (SP(T_i^drone) - SP(T_i^amb + 1))_+

with the drone's effective time = min over feasible active sites of the
sampled flight time (minutes) + 2 (bystander shock delay), infeasible
when a sampled battery draw exceeds capacity. Robustness curves replay
weighted station failures over the wind-scenario coverage matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .demand import SURVIVAL_DECAY_PER_MIN, sample_ambulance_matrix
from .designer import DesignConfig, SurrogateSet
from .environment import sample_wind_at_sites
from .exceptions import (
    DimensionMismatch,
    MissingConfiguration,
    NonPositiveQALY,
    TooManyFailures,
)
from .flight import (
    CRUISE_BATTERY_CAPACITY_AH,
    VTOL_BATTERY_CAPACITY_AH,
    pair_geometry,
    pair_mission_params,
)

__all__ = [
    "ActivationSummary",
    "select_sites",
    "MissionSamples",
    "sample_mission_times",
    "qaly_gain",
    "expected_missions",
    "CostParams",
    "CostReport",
    "cost_report",
    "ReliabilityParams",
    "ReliabilityCurve",
    "reliability_curve",
    "coverage_stats",
]

BYSTANDER_DELAY_MIN = 2.0   # AED retrieval + first shock after drone arrival
AMBULANCE_PREP_MIN = 1.0    # crew preparation before the first shock
QALY_YEARS = 12.0
UCG_WITNESSED_SHOCKABLE = 0.22
UCG_SURVIVAL = 0.26
QALY_FACTOR = QALY_YEARS * UCG_WITNESSED_SHOCKABLE * UCG_SURVIVAL  # 0.6864


# -- posterior site selection ---------------------------------------------------


@dataclass
class ActivationSummary:
    site_ids: list
    seasons: tuple
    hours: tuple
    p_jsh: np.ndarray           # (p, n_seasons, n_hours)
    p_js: np.ndarray            # (p, n_seasons)
    p_j: np.ndarray             # (p,)
    x_star: np.ndarray          # (p,) uint8
    x_star_seasonal: np.ndarray  # (p, n_seasons) uint8
    tau: float


def select_sites(traces: dict, site_ids, tau: float = 0.5,
                 burn_in: float = 0.2) -> ActivationSummary:
    """Threshold the hour-and-season-averaged activation probabilities.

    ``traces`` maps (season, hour) to ChainTrace and must cover the full
    grid implied by its keys.
    """
    if not traces:
        raise MissingConfiguration("no traces supplied")
    seasons = tuple(sorted({s for s, _ in traces}))
    hours = tuple(sorted({h for _, h in traces}))
    missing = [(s, h) for s in seasons for h in hours if (s, h) not in traces]
    if missing:
        raise MissingConfiguration(f"missing (season, hour) traces: {missing[:4]}...")

    p = traces[(seasons[0], hours[0])].states.shape[1]
    p_jsh = np.empty((p, len(seasons), len(hours)))
    for si, s in enumerate(seasons):
        for hi, h in enumerate(hours):
            states = traces[(s, h)].states
            start = int(burn_in * states.shape[0])
            kept = states[start:]
            if kept.shape[0] == 0:
                kept = states[-1:]
            p_jsh[:, si, hi] = kept.mean(axis=0)
    p_js = p_jsh.mean(axis=2)
    p_j = p_js.mean(axis=1)
    return ActivationSummary(
        site_ids=list(site_ids), seasons=seasons, hours=hours, p_jsh=p_jsh,
        p_js=p_js, p_j=p_j, x_star=(p_j >= tau).astype(np.uint8),
        x_star_seasonal=(p_js >= tau).astype(np.uint8), tau=tau,
    )


# -- mission simulation ----------------------------------------------------------


@dataclass
class MissionSamples:
    """Sampled response times for a fixed network over K scenarios.

    All times are minutes. Drone entries are +inf where no active site
    can feasibly serve the incident in that scenario.
    """

    t_drone_arrival: np.ndarray  # (K, n) flight time of the best feasible site
    t_drone_eff: np.ndarray      # (K, n) arrival + bystander shock delay
    t_ambulance: np.ndarray      # (K, n)
    scenario_season: np.ndarray  # (K,)


def sample_mission_times(x_star, sites, incidents, surrogates: SurrogateSet,
                         cfg: DesignConfig, rng: np.random.Generator,
                         n_scenarios: int | None = None,
                         seasons=(1, 2, 3, 4)) -> MissionSamples:
    """Simulate K mission scenarios for the selected network.

    Scenario seasons cycle through ``seasons`` (yearly mixture); wind is
    drawn per (scenario, active site); ambulance times use each
    incident's own recorded hour.
    """
    K = int(n_scenarios if n_scenarios is not None else cfg.scenarios)
    sites = list(sites)
    incidents = list(incidents)
    x_star = np.asarray(x_star)
    if x_star.shape[0] != len(sites):
        raise DimensionMismatch(f"x_star length {x_star.shape[0]} vs {len(sites)} sites")
    n = len(incidents)
    active = np.flatnonzero(x_star)
    season_of_k = np.array([seasons[k % len(seasons)] for k in range(K)])

    # each incident keeps its own recorded hour (hour=None)
    t_amb = sample_ambulance_matrix(surrogates.ambulance, incidents, rng, K,
                                    hour=None)

    t_arrival = np.full((K, n), np.inf)
    if active.size:
        act_sites = [sites[j] for j in active]
        s_xyz = np.array([[s.easting, s.northing, s.elevation] for s in act_sites])
        i_xyz = np.array([[r.easting, r.northing, r.elevation] for r in incidents])
        d, chi, dh = pair_geometry(s_xyz, i_xyz)
        for season in dict.fromkeys(seasons):
            ks = np.flatnonzero(season_of_k == season)
            if ks.size == 0:
                continue
            speeds, dirs = sample_wind_at_sites(surrogates.wind, s_xyz[:, :2],
                                                season, rng, ks.size)
            for row, k in enumerate(ks):
                mu_t, s2_t, mu_bv, s2_bv, mu_bc, s2_bc = pair_mission_params(
                    surrogates.phases, d, chi, dh, speeds[row], dirs[row])
                t_s = np.exp(mu_t + np.sqrt(s2_t) * rng.standard_normal(d.shape))
                bv = np.exp(mu_bv + np.sqrt(s2_bv) * rng.standard_normal(d.shape))
                bc = np.exp(mu_bc + np.sqrt(s2_bc) * rng.standard_normal(d.shape))
                feasible = (bv <= VTOL_BATTERY_CAPACITY_AH) & (bc <= CRUISE_BATTERY_CAPACITY_AH)
                minutes = np.where(feasible, t_s / 60.0, np.inf)
                t_arrival[k] = minutes.min(axis=1)
    return MissionSamples(
        t_drone_arrival=t_arrival,
        t_drone_eff=t_arrival + BYSTANDER_DELAY_MIN,
        t_ambulance=t_amb,
        scenario_season=season_of_k,
    )


def _survival(t_minutes: np.ndarray, decay: float) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.where(np.isfinite(t_minutes), np.exp(-decay * t_minutes), 0.0)


def qaly_gain(samples: MissionSamples, decay: float = SURVIVAL_DECAY_PER_MIN,
              double_shock_delay: bool = False) -> tuple[float, float]:
    """(mean, sd over scenarios) of the yearly QALY gain.

    ``double_shock_delay`` reproduces the literal SP(T + 2) variant in
    which the bystander delay is counted a second time.
    """
    t_eff = samples.t_drone_eff + (BYSTANDER_DELAY_MIN if double_shock_delay else 0.0)
    sp_drone = _survival(t_eff, decay)
    sp_amb = _survival(samples.t_ambulance + AMBULANCE_PREP_MIN, decay)
    per_scenario = QALY_FACTOR * np.maximum(sp_drone - sp_amb, 0.0).sum(axis=1)
    sd = float(per_scenario.std(ddof=1)) if per_scenario.size > 1 else 0.0
    return float(per_scenario.mean()), sd


def expected_missions(samples: MissionSamples) -> tuple[float, float]:
    """(mean, sd) count of incidents where the drone beats the ambulance by > 1 min."""
    counts = (samples.t_drone_eff + 1.0 < samples.t_ambulance).sum(axis=1)
    sd = float(counts.std(ddof=1)) if counts.size > 1 else 0.0
    return float(counts.mean()), sd


# -- cost model ------------------------------------------------------------------


@dataclass(frozen=True)
class CostParams:
    """Yearly cost constants (GBP)."""

    drone: float = 10000.0          # amortized drone
    charging: float = 2000.0        # amortized charging port
    maintenance: float = 2000.0     # per station
    new_site: float = 5000.0        # garage/port facility for new stations
    personnel: float = 200000.0     # 5 operators at 40k
    per_mission: float = 20.0       # battery charging + miscellany
    nice_low: float = 25000.0
    nice_high: float = 35000.0
    select_threshold: float = 30000.0


@dataclass
class CostReport:
    n_active: int
    n_new: int
    delta_qaly_mean: float
    delta_qaly_sd: float
    missions_mean: float
    missions_sd: float
    c_infra: float
    c_op: float
    c_pers: float
    total_cost: float
    cost_per_qaly: float
    cost_effective: bool
    nice_band: tuple = (25000.0, 35000.0)

    def to_dict(self) -> dict:
        return {
            "n_active": self.n_active,
            "n_new": self.n_new,
            "delta_qaly_mean": self.delta_qaly_mean,
            "delta_qaly_sd": self.delta_qaly_sd,
            "missions_mean": self.missions_mean,
            "missions_sd": self.missions_sd,
            "c_infra": self.c_infra,
            "c_op": self.c_op,
            "c_pers": self.c_pers,
            "total_cost": self.total_cost,
            "cost_per_qaly": self.cost_per_qaly,
            "cost_effective": self.cost_effective,
            "nice_band": list(self.nice_band),
        }


def cost_report(x_star, sites, delta_qaly: tuple[float, float],
                missions: tuple[float, float],
                params: CostParams = CostParams()) -> CostReport:
    """Infrastructure + operations + personnel against the QALY gain."""
    x_star = np.asarray(x_star)
    sites = list(sites)
    if x_star.shape[0] != len(sites):
        raise DimensionMismatch(f"x_star length {x_star.shape[0]} vs {len(sites)} sites")
    dq_mean, dq_sd = delta_qaly
    if dq_mean < 0.0:
        raise NonPositiveQALY(f"QALY gain cannot be negative, got {dq_mean}")
    active = [s for s, on in zip(sites, x_star) if on]
    n_new = sum(s.is_new for s in active)
    per_station = params.drone + params.charging + params.maintenance
    c_infra = per_station * len(active) + params.new_site * n_new
    m_mean, m_sd = missions
    c_op = params.per_mission * m_mean
    total = c_infra + c_op + params.personnel
    ratio = total / dq_mean if dq_mean > 0.0 else math.inf
    return CostReport(
        n_active=len(active), n_new=n_new,
        delta_qaly_mean=dq_mean, delta_qaly_sd=dq_sd,
        missions_mean=m_mean, missions_sd=m_sd,
        c_infra=c_infra, c_op=c_op, c_pers=params.personnel,
        total_cost=total, cost_per_qaly=ratio,
        cost_effective=ratio < params.select_threshold,
        nice_band=(params.nice_low, params.nice_high),
    )


# -- reliability under station failures --------------------------------------------


@dataclass(frozen=True)
class ReliabilityParams:
    q_new: float = 0.15        # downtime probability, new stations
    q_existing: float = 0.05   # downtime probability, existing stations
    replicates: int = 200      # failure-set replicates R

    def downtime(self, sites) -> np.ndarray:
        return np.array([self.q_new if s.is_new else self.q_existing for s in sites])


@dataclass
class ReliabilityCurve:
    m_values: np.ndarray
    c_hat: np.ndarray
    c_se: np.ndarray
    n_replicates: int
    n_scenarios: int
    q: np.ndarray


def reliability_curve(x_star, A_scenarios, q, m_values=None, replicates: int = 200,
                      rng: np.random.Generator | None = None) -> ReliabilityCurve:
    """Expected coverage when m active stations fail simultaneously.

    Failures are weighted without replacement, proportional to the
    downtime probabilities q: each replicate draws exponential ranks
    Exp(1)/q_j and fails the m smallest. One rank vector serves every m
    (nested failure sets = common random numbers), so each curve is
    non-increasing in m replicate by replicate.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    x_star = np.asarray(x_star)
    A = np.asarray(A_scenarios, dtype=float)
    if A.ndim == 2:
        A = A[None, :, :]
    K, n, p = A.shape
    if x_star.shape[0] != p:
        raise DimensionMismatch(f"x_star length {x_star.shape[0]} vs {p} sites")
    q = np.asarray(q, dtype=float)
    if q.shape[0] != p:
        raise DimensionMismatch(f"q length {q.shape[0]} vs {p} sites")
    if np.any((q <= 0.0) | (q >= 1.0)):
        raise ValueError("downtime probabilities must lie in (0, 1)")
    active = np.flatnonzero(x_star)
    na = active.size
    if m_values is None:
        m_values = np.arange(na + 1)
    m_values = np.asarray(m_values, dtype=int)
    if m_values.size and m_values.max() > na:
        raise TooManyFailures(f"m up to {m_values.max()} with only {na} active stations")

    # log1p(-A) over active sites, clipped just below 1 to keep sums finite
    L = np.log1p(-np.minimum(A[:, :, active], 1.0 - 1e-12))  # (K, n, na)
    q_act = q[active]
    R = int(replicates)
    per_rep = np.empty((R, m_values.size))
    for r in range(R):
        keys = rng.exponential(size=na) / q_act
        order = np.argsort(keys, kind="stable")  # failure order, most fragile first
        prefix = np.cumsum(L[:, :, order], axis=2)  # (K, n, na)
        total = prefix[:, :, -1] if na else np.zeros((K, n))
        for mi, m in enumerate(m_values):
            if na == 0:
                per_rep[r, mi] = 0.0
                continue
            S = total - (prefix[:, :, m - 1] if m > 0 else 0.0)
            if m == na:
                S = np.zeros_like(S)  # all failed: coverage exactly zero
            per_rep[r, mi] = float(-np.expm1(S).mean())
    c_hat = per_rep.mean(axis=0)
    c_se = per_rep.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros_like(c_hat)
    return ReliabilityCurve(m_values=m_values, c_hat=c_hat, c_se=c_se,
                            n_replicates=R, n_scenarios=K, q=q)


# -- coverage tables ----------------------------------------------------------------


def coverage_stats(samples: MissionSamples, incidents=None,
                   thresholds=(6.0, 8.0)) -> dict:
    """Recorded-vs-drone response table (calls, mean minutes, % within thresholds).

    Drone coverage fractions count infeasible scenarios as uncovered;
    the recorded row needs incidents with a rec_time.
    """
    t = samples.t_drone_arrival
    n = t.shape[1]
    finite = np.isfinite(t)
    responded = int((finite.mean(axis=0) > 0.5).sum())
    mean_minutes = float(t[finite].mean()) if finite.any() else math.inf
    out = {
        "drone": {
            "calls": responded,
            "total_calls": n,
            "mean_minutes": mean_minutes,
            **{f"pct_within_{int(th)}": float((np.where(finite, t, np.inf) <= th).mean())
               for th in thresholds},
        }
    }
    if incidents is not None:
        rec = np.array([r.rec_time for r in incidents if r.rec_time is not None])
        if rec.size:
            out["recorded"] = {
                "calls": int(rec.size),
                "total_calls": len(list(incidents)),
                "mean_minutes": float(rec.mean()),
                **{f"pct_within_{int(th)}": float((rec <= th).mean())
                   for th in thresholds},
            }
    return out
