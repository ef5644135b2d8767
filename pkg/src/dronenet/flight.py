"""Drone performance layer.

Per-phase log-linear surrogates (take-off, cruise, landing) compose into
a moment-matched total-flight-time lognormal; two battery surrogates give
VTOL and cruise consumption in amp-hours. The per-pair coverage
probability multiplies three lognormal CDFs:

    A = P(T_total <= time_limit) * P(B_vtol <= 4) * P(B_cruise <= 12)

with the 6-minute budget expressed as 360 seconds and battery capacities
of 4 Ah (VTOL) / 12 Ah (cruise). Aggregated coverage over an activation
vector x is 1 - prod_j(1 - x_j A_ij), evaluated in log1p space.

Shipped default coefficients reproduce the simulator fits (wind speeds in
m/s, distances in meters, times in seconds); their covariance is diagonal
from the published standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import lognormal_cdf, lognormal_sum, lognormal_sum_params, LogNormalDist
from .environment import WindSample, decompose_wind
from .exceptions import DimensionMismatch, InvalidPolygon
from .linear import LogLinearRegressor

__all__ = [
    "VTOL_BATTERY_CAPACITY_AH",
    "CRUISE_BATTERY_CAPACITY_AH",
    "DEFAULT_TIME_LIMIT_S",
    "DEFAULT_CRUISE_HEIGHT_M",
    "DEFAULT_PAYLOAD_KG",
    "DronePhaseModels",
    "default_phase_models",
    "FlightQuery",
    "flight_geometry",
    "total_flight_time_dist",
    "battery_dists",
    "coverage_prob",
    "CoverageMatrix",
    "coverage_matrix",
    "pair_geometry",
    "coverage_values",
    "pair_mission_params",
    "aggregate_coverage",
    "NoFlyZone",
    "nfz_filter",
]

VTOL_BATTERY_CAPACITY_AH = 4.0
CRUISE_BATTERY_CAPACITY_AH = 12.0
DEFAULT_TIME_LIMIT_S = 360.0
DEFAULT_CRUISE_HEIGHT_M = 50.0
DEFAULT_PAYLOAD_KG = 1.38

_VTOL_FEATURES = ["intercept", "wind_speed", "payload", "cruise_height"]
_CRUISE_FEATURES = ["intercept", "distance", "payload", "direction_change",
                    "elevation_change", "tail_wind", "cross_wind"]


def _diag_model(coef, se, resid_se, dof, names) -> LogLinearRegressor:
    cov = np.diag(np.asarray(se, dtype=float) ** 2)
    return LogLinearRegressor.from_parameters(
        coef=coef, coef_covariance=cov, residual_variance=resid_se**2,
        dof=dof, feature_names=names,
    )


@dataclass(frozen=True)
class DronePhaseModels:
    """The five fitted phase surrogates."""

    takeoff: LogLinearRegressor
    cruise: LogLinearRegressor
    landing: LogLinearRegressor
    vtol_battery: LogLinearRegressor
    cruise_battery: LogLinearRegressor


def default_phase_models() -> DronePhaseModels:
    """Shipped simulator fits (225 flights; diagonal SE covariance).

    The "<1e-4"-reported distance SEs are set to 0: the published bound is
    uninformative at km scale and would otherwise dominate the variance.
    """
    return DronePhaseModels(
        takeoff=_diag_model(
            [1.4495, 0.0518, 0.3421, 0.0097],
            [0.0269, 0.0026, 0.0313, 0.0003],
            0.067, 221, _VTOL_FEATURES),
        landing=_diag_model(
            [3.8494, 0.1605, -0.8646, 0.0080],
            [0.1373, 0.0131, 0.1597, 0.0016],
            0.342, 221, _VTOL_FEATURES),
        vtol_battery=_diag_model(
            [-0.9255, 0.1422, -0.5602, 0.0064],
            [0.1515, 0.0144, 0.1761, 0.0018],
            0.378, 221, _VTOL_FEATURES),
        cruise=_diag_model(
            [3.6110, 0.0003, -0.0535, 0.0010, -0.0001, -0.0237, 0.0041],
            [0.0353, 0.0, 0.0401, 0.0002, 0.0001, 0.0025, 0.0026],
            0.09, 218, _CRUISE_FEATURES),
        cruise_battery=_diag_model(
            [-1.7639, 0.0003, 0.0225, 0.0007, 0.0002, -0.0234, 0.0021],
            [0.0364, 0.0, 0.0414, 0.0002, 0.0002, 0.0026, 0.0026],
            0.088, 218, _CRUISE_FEATURES),
    )


@dataclass(frozen=True)
class FlightQuery:
    """One candidate mission: geometry plus ambient wind."""

    distance: float                             # ground distance, m
    heading: float                              # degrees from north
    elevation_change: float = 0.0               # |delta elevation|, m
    direction_change: float = 0.0               # kept at 0: negligible effect
    cruise_height: float = DEFAULT_CRUISE_HEIGHT_M
    payload: float = DEFAULT_PAYLOAD_KG
    wind: WindSample = field(default_factory=lambda: WindSample(0.0, 0.0))

    def __post_init__(self):
        if self.distance < 0.0:
            raise ValueError("distance must be >= 0")


def flight_geometry(site, incident) -> tuple[float, float, float]:
    """(distance m, heading deg in [0,360), |elevation change| m) site -> incident."""
    de = float(incident[0]) - float(site[0])
    dn = float(incident[1]) - float(site[1])
    d = math.hypot(de, dn)
    chi = math.degrees(math.atan2(de, dn)) % 360.0
    elev_s = float(site[2]) if len(site) > 2 else 0.0
    elev_i = float(incident[2]) if len(incident) > 2 else 0.0
    return d, chi, abs(elev_i - elev_s)


def _vtol_x(q: FlightQuery) -> np.ndarray:
    return np.array([1.0, q.wind.speed, q.payload, q.cruise_height])


def _cruise_x(q: FlightQuery) -> np.ndarray:
    tail, cross = decompose_wind(q.wind.speed, q.wind.direction, q.heading)
    return np.array([1.0, q.distance, q.payload, q.direction_change,
                     q.elevation_change, tail, cross])


def total_flight_time_dist(models: DronePhaseModels, q: FlightQuery) -> LogNormalDist:
    """Moment-matched lognormal for take-off + cruise + landing, seconds."""
    xv = _vtol_x(q)
    return lognormal_sum([
        models.takeoff.predict_dist(xv),
        models.cruise.predict_dist(_cruise_x(q)),
        models.landing.predict_dist(xv),
    ])


def battery_dists(models: DronePhaseModels, q: FlightQuery) -> tuple[LogNormalDist, LogNormalDist]:
    """(VTOL, cruise) battery consumption lognormals, amp-hours."""
    return (models.vtol_battery.predict_dist(_vtol_x(q)),
            models.cruise_battery.predict_dist(_cruise_x(q)))


def coverage_prob(models: DronePhaseModels, q: FlightQuery,
                  time_limit_s: float = DEFAULT_TIME_LIMIT_S) -> float:
    """P(on time) * P(VTOL battery fits) * P(cruise battery fits)."""
    t_dist = total_flight_time_dist(models, q)
    bv, bc = battery_dists(models, q)
    return float(t_dist.cdf(time_limit_s)
                 * bv.cdf(VTOL_BATTERY_CAPACITY_AH)
                 * bc.cdf(CRUISE_BATTERY_CAPACITY_AH))


# -- vectorized pair machinery (scenario construction) -----------------------


def pair_geometry(sites_xyz: np.ndarray, incidents_xyz: np.ndarray):
    """(distance, heading, elevation change) arrays of shape (n_incidents, n_sites)."""
    sites_xyz = np.asarray(sites_xyz, dtype=float)
    incidents_xyz = np.asarray(incidents_xyz, dtype=float)
    de = incidents_xyz[:, None, 0] - sites_xyz[None, :, 0]
    dn = incidents_xyz[:, None, 1] - sites_xyz[None, :, 1]
    d = np.hypot(de, dn)
    chi = np.degrees(np.arctan2(de, dn)) % 360.0
    dh = np.abs(incidents_xyz[:, None, 2] - sites_xyz[None, :, 2])
    return d, chi, dh


def pair_mission_params(models: DronePhaseModels, d, chi, dh, wind_speed, wind_dir,
                        cruise_height: float = DEFAULT_CRUISE_HEIGHT_M,
                        payload: float = DEFAULT_PAYLOAD_KG):
    """Lognormal (mu, sigma2) for total time, VTOL battery and cruise battery.

    ``d``, ``chi``, ``dh`` are (n, p) pair grids; ``wind_speed``/``wind_dir``
    are per-site vectors (p,), broadcast over incidents. Returns six
    (n, p) arrays: (mu_t, s2_t, mu_bv, s2_bv, mu_bc, s2_bc).
    """
    d = np.asarray(d, dtype=float)
    n, p = d.shape
    ws = np.broadcast_to(np.asarray(wind_speed, dtype=float), (p,))
    wd = np.broadcast_to(np.asarray(wind_dir, dtype=float), (p,))
    if np.asarray(chi).shape != (n, p) or np.asarray(dh).shape != (n, p):
        raise DimensionMismatch("chi/dh grids must match the distance grid")

    ones_p = np.ones(p)
    Xv = np.column_stack([ones_p, ws, np.full(p, payload), np.full(p, cruise_height)])
    mu_to, s2_to = models.takeoff.predictive_params(Xv)
    mu_la, s2_la = models.landing.predictive_params(Xv)
    mu_bv, s2_bv = models.vtol_battery.predictive_params(Xv)

    delta = np.radians(wd[None, :] - chi)
    tail = ws[None, :] * np.cos(delta)
    cross = ws[None, :] * np.sin(delta)
    Xc = np.stack([np.ones((n, p)), d, np.full((n, p), payload), np.zeros((n, p)),
                   dh, tail, cross], axis=-1).reshape(n * p, 7)
    mu_cr, s2_cr = models.cruise.predictive_params(Xc)
    mu_bc, s2_bc = models.cruise_battery.predictive_params(Xc)
    mu_cr, s2_cr = mu_cr.reshape(n, p), s2_cr.reshape(n, p)
    mu_bc, s2_bc = mu_bc.reshape(n, p), s2_bc.reshape(n, p)

    mu_stack = np.stack([np.broadcast_to(mu_to, (n, p)), mu_cr,
                         np.broadcast_to(mu_la, (n, p))])
    s2_stack = np.stack([np.broadcast_to(s2_to, (n, p)), s2_cr,
                         np.broadcast_to(s2_la, (n, p))])
    mu_t, s2_t = lognormal_sum_params(mu_stack, s2_stack, axis=0)
    return (mu_t, s2_t,
            np.broadcast_to(mu_bv, (n, p)), np.broadcast_to(s2_bv, (n, p)),
            mu_bc, s2_bc)


def coverage_values(models: DronePhaseModels, d, chi, dh, wind_speed, wind_dir,
                    time_limit_s: float = DEFAULT_TIME_LIMIT_S) -> np.ndarray:
    """(n, p) grid of coverage probabilities A_ij under per-site wind."""
    mu_t, s2_t, mu_bv, s2_bv, mu_bc, s2_bc = pair_mission_params(
        models, d, chi, dh, wind_speed, wind_dir)
    return (lognormal_cdf(time_limit_s, mu_t, s2_t)
            * lognormal_cdf(VTOL_BATTERY_CAPACITY_AH, mu_bv, s2_bv)
            * lognormal_cdf(CRUISE_BATTERY_CAPACITY_AH, mu_bc, s2_bc))


@dataclass
class CoverageMatrix:
    """Per-incident, per-site success probabilities in [0, 1]."""

    values: np.ndarray
    incident_ids: list
    site_ids: list

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DimensionMismatch("coverage matrix must be 2-D")
        if self.values.shape != (len(self.incident_ids), len(self.site_ids)):
            raise DimensionMismatch(
                f"coverage shape {self.values.shape} vs "
                f"{len(self.incident_ids)} incidents x {len(self.site_ids)} sites"
            )
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ValueError("coverage entries must lie in [0, 1]")


def coverage_matrix(models: DronePhaseModels, sites, incidents,
                    wind_per_site, time_limit_s: float = DEFAULT_TIME_LIMIT_S) -> CoverageMatrix:
    """A_ij for every (incident, site) pair using site j's wind draw.

    ``sites``/``incidents`` are sequences of (id, easting, northing, elevation);
    ``wind_per_site`` aligns with ``sites``.
    """
    sites = list(sites)
    incidents = list(incidents)
    if len(wind_per_site) != len(sites):
        raise DimensionMismatch(
            f"{len(wind_per_site)} wind samples for {len(sites)} sites")
    site_ids = [s[0] for s in sites]
    incident_ids = [r[0] for r in incidents]
    if not sites or not incidents:
        return CoverageMatrix(np.zeros((len(incidents), len(sites))), incident_ids, site_ids)
    s_xyz = np.array([[s[1], s[2], s[3] if len(s) > 3 else 0.0] for s in sites])
    i_xyz = np.array([[r[1], r[2], r[3] if len(r) > 3 else 0.0] for r in incidents])
    d, chi, dh = pair_geometry(s_xyz, i_xyz)
    speeds = np.array([w.speed for w in wind_per_site])
    dirs = np.array([w.direction for w in wind_per_site])
    values = coverage_values(models, d, chi, dh, speeds, dirs, time_limit_s)
    return CoverageMatrix(values, incident_ids, site_ids)


def write_coverage_csv(matrix: CoverageMatrix, path) -> None:
    """Long-format export: one (incident_id, site_id, a_ij) row per pair."""
    from pathlib import Path

    lines = ["incident_id,site_id,a_ij"]
    for i, iid in enumerate(matrix.incident_ids):
        for j, sid in enumerate(matrix.site_ids):
            lines.append(f"{iid},{sid},{float(matrix.values[i, j])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def aggregate_coverage(x, A, row: int | None = None):
    """P_i = 1 - prod_j (1 - x_j A_ij), log1p-stable; vector over rows or one row."""
    A = np.asarray(A, dtype=float)
    x = np.asarray(x)
    if x.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"activation length {x.shape[0]} vs {A.shape[1]} sites")
    active = np.flatnonzero(x)
    rows = A if row is None else A[row:row + 1]
    if active.size == 0:
        out = np.zeros(rows.shape[0])
    else:
        with np.errstate(divide="ignore"):
            s = np.log1p(-rows[:, active]).sum(axis=1)
        out = -np.expm1(s)
    return float(out[0]) if row is not None else out


# -- no-fly zones -------------------------------------------------------------


@dataclass(frozen=True)
class NoFlyZone:
    """Circle (center + radius) or simple polygon ring, BNG meters.

    Boundary points count as inside (conservative exclusion).
    """

    kind: str
    center: tuple | None = None
    radius: float = 0.0
    vertices: tuple = ()

    def __post_init__(self):
        if self.kind == "circle":
            if self.center is None or self.radius <= 0.0:
                raise ValueError("circle zone needs a center and radius > 0")
        elif self.kind == "polygon":
            verts = [tuple(map(float, v)) for v in self.vertices]
            if len(verts) >= 2 and verts[0] == verts[-1]:
                verts = verts[:-1]  # accept explicitly closed rings
            if len(verts) < 3:
                raise InvalidPolygon("polygon ring needs at least 3 distinct vertices")
            object.__setattr__(self, "vertices", tuple(verts))
            _check_simple(verts)
        else:
            raise ValueError(f"zone kind must be 'circle' or 'polygon', got {self.kind!r}")

    @classmethod
    def circle(cls, center, radius) -> "NoFlyZone":
        return cls(kind="circle", center=(float(center[0]), float(center[1])),
                   radius=float(radius))

    @classmethod
    def polygon(cls, vertices) -> "NoFlyZone":
        return cls(kind="polygon", vertices=tuple(tuple(v) for v in vertices))

    def contains(self, point) -> bool:
        px, py = float(point[0]), float(point[1])
        if self.kind == "circle":
            return math.hypot(px - self.center[0], py - self.center[1]) <= self.radius
        return _point_in_polygon(px, py, self.vertices)

    def to_dict(self) -> dict:
        if self.kind == "circle":
            return {"type": "circle", "center": list(self.center), "radius": self.radius}
        return {"type": "polygon", "vertices": [list(v) for v in self.vertices]}

    @classmethod
    def from_dict(cls, d: dict) -> "NoFlyZone":
        if d.get("type") == "circle":
            return cls.circle(d["center"], d["radius"])
        if d.get("type") == "polygon":
            return cls.polygon(d["vertices"])
        raise ValueError(f"unknown zone type {d.get('type')!r}")


def _segments(verts):
    m = len(verts)
    for i in range(m):
        yield verts[i], verts[(i + 1) % m]


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p, eps=1e-9) -> bool:
    if abs(_orient(a, b, p)) > eps * max(1.0, abs(a[0]) + abs(b[0]) + abs(a[1]) + abs(b[1])):
        return False
    return (min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
            and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps)


def _check_simple(verts):
    segs = list(_segments(verts))
    m = len(segs)
    for i in range(m):
        a1, a2 = segs[i]
        if a1 == a2:
            raise InvalidPolygon("zero-length polygon edge")
        for j in range(i + 1, m):
            if j == i + 1 or (i == 0 and j == m - 1):
                continue  # adjacent edges share a vertex by construction
            b1, b2 = segs[j]
            d1, d2 = _orient(a1, a2, b1), _orient(a1, a2, b2)
            d3, d4 = _orient(b1, b2, a1), _orient(b1, b2, a2)
            if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
                raise InvalidPolygon(f"self-intersecting polygon (edges {i} and {j})")


def _point_in_polygon(px, py, verts) -> bool:
    for a, b in _segments(verts):
        if _on_segment(a, b, (px, py)):
            return True  # boundary counts as inside
    inside = False
    for (x1, y1), (x2, y2) in _segments(verts):
        if (y1 > py) != (y2 > py):
            x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < x_cross:
                inside = not inside
    return inside


def nfz_filter(points, zones) -> tuple[list[int], list[int]]:
    """Split point indices into (retained, excluded); excluded iff inside any zone."""
    zones = list(zones)
    retained, excluded = [], []
    for idx, pt in enumerate(points):
        if any(z.contains(pt) for z in zones):
            excluded.append(idx)
        else:
            retained.append(idx)
    return retained, excluded
