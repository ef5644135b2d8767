"""Region bundles: the on-disk unit the CLI operates on.

A bundle directory holds sites.csv, incidents.csv, nfz.json and
config.toml, optionally a road graph (nodes.csv/edges.csv), an elevation
override (elevations.csv), bundle-local wind models and a meta.json of
synthetic ground truth. All writers emit canonical formatting (repr
floats, sorted JSON keys) so identical inputs produce identical bytes.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .demand import IncidentRecord, RoadGraph, sample_ambulance_time
from .designer import DesignConfig, SiteRecord, SurrogateSet
from .environment import WindModel
from .exceptions import SchemaError
from .flight import NoFlyZone, nfz_filter, default_phase_models
from .gp import GPSurrogate
from .kernels import Matern52Kernel, PeriodicKernel, ProductKernel
from .model_io import model_from_dict, model_to_dict
from .posthoc import CostParams, ReliabilityParams
from .rng import stream

__all__ = [
    "AppConfig",
    "config_from_toml",
    "config_to_toml",
    "RegionBundle",
    "load_bundle",
    "save_bundle",
    "validate_bundle",
    "apply_nfz",
    "SyntheticSpec",
    "simulate_region",
]

log = logging.getLogger(__name__)

SITE_COLUMNS = ["id", "easting", "northing", "elevation", "is_new", "cost",
                "pop_density", "dist_to_infra"]
INCIDENT_COLUMNS = ["id", "easting", "northing", "elevation", "hour", "comp_time",
                    "big_intsects", "mid_intsects", "turns", "pop_dense", "length",
                    "rec_time"]
NODE_COLUMNS = ["id", "easting", "northing"]
EDGE_COLUMNS = ["u", "v", "length_m", "maxspeed_ms", "azimuth_rad", "pop_density"]


# -- configuration ---------------------------------------------------------------


@dataclass
class AppConfig:
    design: DesignConfig = field(default_factory=lambda: DesignConfig(beta=10.0))
    costs: CostParams = field(default_factory=CostParams)
    reliability: ReliabilityParams = field(default_factory=ReliabilityParams)


_DESIGN_KEYS = {
    "beta": "beta", "eta": "eta", "gamma": "gamma", "lambda": "lam",
    "penalty_a": "penalty_a", "penalty_b": "penalty_b", "tau": "tau",
    "scenarios": "scenarios", "iterations": "iterations", "seed": "seed",
    "time_limit_s": "time_limit_s", "survival_decay": "survival_decay",
    "burn_in": "burn_in",
}
_PRIOR_KEYS = {"theta0": "theta0", "theta1": "theta1", "theta2": "theta2",
               "theta3": "theta3", "d_thresh": "d_thresh"}


def config_from_toml(text: str) -> AppConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"bad config TOML: {exc}") from None
    design_kwargs = {"beta": 10.0}
    for section, mapping in (("design", _DESIGN_KEYS), ("prior", _PRIOR_KEYS)):
        for key, value in raw.get(section, {}).items():
            if key not in mapping:
                raise SchemaError(f"unknown [{section}] key {key!r}")
            design_kwargs[mapping[key]] = value
    cost_kwargs = {}
    for key, value in raw.get("costs", {}).items():
        if key not in CostParams.__dataclass_fields__:
            raise SchemaError(f"unknown [costs] key {key!r}")
        cost_kwargs[key] = value
    rel_kwargs = {}
    for key, value in raw.get("reliability", {}).items():
        if key not in ReliabilityParams.__dataclass_fields__:
            raise SchemaError(f"unknown [reliability] key {key!r}")
        rel_kwargs[key] = value
    try:
        return AppConfig(design=DesignConfig(**design_kwargs),
                         costs=CostParams(**cost_kwargs),
                         reliability=ReliabilityParams(**rel_kwargs))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad config value: {exc}") from None


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    raise TypeError(f"cannot emit {type(v).__name__} to TOML")


def config_to_toml(cfg: AppConfig) -> str:
    d = cfg.design
    lines = ["[design]"]
    for key, attr in _DESIGN_KEYS.items():
        lines.append(f"{key} = {_toml_value(getattr(d, attr))}")
    lines.append("")
    lines.append("[prior]")
    for key, attr in _PRIOR_KEYS.items():
        value = getattr(d, attr)
        if value is None:
            continue  # auto-scaled thetas stay implicit
        lines.append(f"{key} = {_toml_value(value)}")
    lines.append("")
    lines.append("[costs]")
    for f_ in dataclasses.fields(cfg.costs):
        lines.append(f"{f_.name} = {_toml_value(getattr(cfg.costs, f_.name))}")
    lines.append("")
    lines.append("[reliability]")
    for f_ in dataclasses.fields(cfg.reliability):
        lines.append(f"{f_.name} = {_toml_value(getattr(cfg.reliability, f_.name))}")
    lines.append("")
    return "\n".join(lines)


# -- CSV plumbing -----------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if f != f or math.isinf(f):
        raise ValueError("cannot serialize non-finite value")
    return repr(f)


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _read_csv(path: Path, required: list[str], optional=()) -> list[dict]:
    import csv

    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError("missing header row", path=path)
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"missing columns {missing}", path=path)
        unknown = [c for c in reader.fieldnames if c not in (*required, *optional)]
        if unknown:
            raise SchemaError(f"unknown columns {unknown}", path=path)
        return list(reader)


def _num(row: dict, key: str, path: Path, rownum: int, default=None) -> float:
    raw = row.get(key, "")
    if raw in ("", None):
        if default is not None:
            return default
        raise SchemaError(f"missing value for {key!r}", path=path, row=rownum)
    try:
        return float(raw)
    except ValueError:
        raise SchemaError(f"non-numeric {key!r}: {raw!r}", path=path, row=rownum,
                          column=key) from None


# -- the bundle -------------------------------------------------------------------


@dataclass
class RegionBundle:
    sites: list
    incidents: list
    zones: list
    config: AppConfig = field(default_factory=AppConfig)
    graph: RoadGraph | None = None
    wind_model: WindModel | None = None
    meta: dict = field(default_factory=dict)

    def surrogates(self) -> SurrogateSet:
        """Shipped defaults, with the bundle's wind models when present."""
        base = SurrogateSet.default()
        if self.wind_model is not None:
            base.wind = self.wind_model
        return base


def load_bundle(directory) -> RegionBundle:
    directory = Path(directory)
    sites_path = directory / "sites.csv"
    incidents_path = directory / "incidents.csv"
    for p in (sites_path, incidents_path):
        if not p.exists():
            raise SchemaError("required file missing", path=p)

    elevations = {}
    elev_path = directory / "elevations.csv"
    if elev_path.exists():
        for i, row in enumerate(_read_csv(elev_path, ["id", "elevation"]), start=2):
            elevations[row["id"]] = _num(row, "elevation", elev_path, i)

    warned_elevation = False
    sites = []
    rows = _read_csv(sites_path, [c for c in SITE_COLUMNS if c != "elevation"],
                     optional=("elevation",))
    for i, row in enumerate(rows, start=2):
        elev = row.get("elevation", "")
        if elev in ("", None) and row["id"] not in elevations:
            warned_elevation = True
        try:
            sites.append(SiteRecord(
                id=row["id"],
                easting=_num(row, "easting", sites_path, i),
                northing=_num(row, "northing", sites_path, i),
                elevation=elevations.get(row["id"],
                                         _num(row, "elevation", sites_path, i, default=0.0)),
                is_new=int(_num(row, "is_new", sites_path, i)),
                cost=_num(row, "cost", sites_path, i),
                pop_density=_num(row, "pop_density", sites_path, i),
                dist_to_infra=_num(row, "dist_to_infra", sites_path, i),
            ))
        except (ValueError, SchemaError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(str(exc), path=sites_path, row=i) from None

    incidents = []
    rows = _read_csv(incidents_path,
                     [c for c in INCIDENT_COLUMNS if c not in ("elevation", "rec_time")],
                     optional=("elevation", "rec_time"))
    for i, row in enumerate(rows, start=2):
        elev = row.get("elevation", "")
        if elev in ("", None) and row["id"] not in elevations:
            warned_elevation = True
        rec_raw = row.get("rec_time", "")
        try:
            incidents.append(IncidentRecord(
                id=row["id"],
                easting=_num(row, "easting", incidents_path, i),
                northing=_num(row, "northing", incidents_path, i),
                elevation=elevations.get(row["id"],
                                         _num(row, "elevation", incidents_path, i, default=0.0)),
                hour=int(_num(row, "hour", incidents_path, i)),
                comp_time=_num(row, "comp_time", incidents_path, i),
                big_intsects=_num(row, "big_intsects", incidents_path, i),
                mid_intsects=_num(row, "mid_intsects", incidents_path, i),
                turns=_num(row, "turns", incidents_path, i),
                pop_dense=_num(row, "pop_dense", incidents_path, i),
                length=_num(row, "length", incidents_path, i),
                rec_time=None if rec_raw in ("", None) else float(rec_raw),
            ))
        except (ValueError, SchemaError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(str(exc), path=incidents_path, row=i) from None
    if warned_elevation:
        log.warning("missing elevations default to 0 m")

    zones = []
    nfz_path = directory / "nfz.json"
    if nfz_path.exists():
        try:
            raw = json.loads(nfz_path.read_text())
            zones = [NoFlyZone.from_dict(z) for z in raw]
        except (json.JSONDecodeError, ValueError, KeyError) as exc:
            raise SchemaError(f"bad NFZ file: {exc}", path=nfz_path) from None

    config = AppConfig()
    cfg_path = directory / "config.toml"
    if cfg_path.exists():
        config = config_from_toml(cfg_path.read_text())

    graph = None
    if (directory / "nodes.csv").exists() and (directory / "edges.csv").exists():
        graph = RoadGraph.from_csv(directory / "nodes.csv", directory / "edges.csv")

    wind_model = None
    ws, wd = directory / "wind_speed_model.json", directory / "wind_direction_model.json"
    if ws.exists() and wd.exists():
        wind_model = WindModel(
            speed_model=model_from_dict(json.loads(ws.read_text())),
            direction_model=model_from_dict(json.loads(wd.read_text())),
        )

    meta = {}
    meta_path = directory / "meta.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())

    return RegionBundle(sites=sites, incidents=incidents, zones=zones, config=config,
                        graph=graph, wind_model=wind_model, meta=meta)


def save_bundle(bundle: RegionBundle, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _write_csv(directory / "sites.csv", SITE_COLUMNS,
               ([s.id, s.easting, s.northing, s.elevation, s.is_new, s.cost,
                 s.pop_density, s.dist_to_infra] for s in bundle.sites))
    _write_csv(directory / "incidents.csv", INCIDENT_COLUMNS,
               ([r.id, r.easting, r.northing, r.elevation, r.hour, r.comp_time,
                 r.big_intsects, r.mid_intsects, r.turns, r.pop_dense, r.length,
                 r.rec_time] for r in bundle.incidents))
    (directory / "nfz.json").write_text(
        json.dumps([z.to_dict() for z in bundle.zones], sort_keys=True, indent=1))
    (directory / "config.toml").write_text(config_to_toml(bundle.config))
    if bundle.graph is not None:
        nodes = sorted(bundle.graph.nodes.items())
        _write_csv(directory / "nodes.csv", NODE_COLUMNS,
                   ([nid, xy[0], xy[1]] for nid, xy in nodes))
        _write_csv(directory / "edges.csv", EDGE_COLUMNS,
                   ([e.u, e.v, e.length_m, e.maxspeed_ms, e.azimuth_rad, e.pop_density]
                    for e in bundle.graph.edges))
    if bundle.wind_model is not None:
        (directory / "wind_speed_model.json").write_text(
            json.dumps(model_to_dict(bundle.wind_model.speed_model), sort_keys=True, indent=1))
        (directory / "wind_direction_model.json").write_text(
            json.dumps(model_to_dict(bundle.wind_model.direction_model), sort_keys=True, indent=1))
    if bundle.meta:
        (directory / "meta.json").write_text(json.dumps(bundle.meta, sort_keys=True, indent=1))
    return directory


def apply_nfz(bundle: RegionBundle):
    """Filter sites and incidents against the zones.

    Returns (kept_sites, kept_incidents, report) where the report counts
    retained/excluded per table.
    """
    site_pts = [(s.easting, s.northing) for s in bundle.sites]
    inc_pts = [(r.easting, r.northing) for r in bundle.incidents]
    s_keep, s_drop = nfz_filter(site_pts, bundle.zones)
    i_keep, i_drop = nfz_filter(inc_pts, bundle.zones)
    report = {
        "sites_retained": len(s_keep), "sites_excluded": len(s_drop),
        "incidents_retained": len(i_keep), "incidents_excluded": len(i_drop),
        "excluded_site_ids": [bundle.sites[i].id for i in s_drop],
        "excluded_incident_ids": [bundle.incidents[i].id for i in i_drop],
    }
    return [bundle.sites[i] for i in s_keep], [bundle.incidents[i] for i in i_keep], report


def validate_bundle(bundle: RegionBundle) -> dict:
    """Schema checks, NFZ preview and surrogate availability."""
    if not bundle.sites:
        raise SchemaError("bundle has no candidate sites")
    if not bundle.incidents:
        raise SchemaError("bundle has no incidents")
    seen = set()
    for s in bundle.sites:
        if s.id in seen:
            raise SchemaError(f"duplicate site id {s.id!r}")
        seen.add(s.id)
        for name in ("easting", "northing", "elevation", "cost", "pop_density",
                     "dist_to_infra"):
            if not math.isfinite(float(getattr(s, name))):
                raise SchemaError(f"site {s.id}: non-finite {name}")
    seen = set()
    for r in bundle.incidents:
        if r.id in seen:
            raise SchemaError(f"duplicate incident id {r.id!r}")
        seen.add(r.id)
        for name in ("easting", "northing", "comp_time", "big_intsects",
                     "mid_intsects", "turns", "pop_dense", "length"):
            if not math.isfinite(float(getattr(r, name))):
                raise SchemaError(f"incident {r.id}: non-finite {name}")

    warnings = []
    if sum(1 for s in bundle.sites if not s.is_new) == 0:
        warnings.append("no existing-infrastructure sites (is_new == 0)")
    if any(s.cost <= 0 for s in bundle.sites):
        warnings.append("non-positive site costs confuse the prior auto-scaling")

    _, _, nfz_report = apply_nfz(bundle)

    surrogate_status = {"phases": "default", "ambulance": "default",
                        "wind": "bundle" if bundle.wind_model is not None else "default"}
    try:
        bundle.surrogates()
    except Exception as exc:  # availability check, not a schema failure
        surrogate_status["error"] = str(exc)
        warnings.append(f"surrogates unavailable: {exc}")

    return {
        "sites": len(bundle.sites),
        "incidents": len(bundle.incidents),
        "zones": len(bundle.zones),
        "road_graph": bundle.graph is not None,
        **nfz_report,
        "surrogates": surrogate_status,
        "warnings": warnings,
    }


# -- synthetic regions ---------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Deterministic synthetic-region recipe (GGC-scale defaults)."""

    seed: int = 0
    n_incidents: int = 600
    n_candidates: int = 45
    n_existing: int = 9
    extent: tuple = (240000.0, 280000.0, 640000.0, 680000.0)  # BNG-ish meters
    clusters: tuple = ((252000.0, 656000.0, 3000.0, 0.45),
                       (266000.0, 668000.0, 2500.0, 0.30))     # (E, N, sd, weight)
    wind_base_knots: float = 10.0
    wind_seasonal_amplitude_knots: float = 4.0  # winter above, summer below base
    wind_direction_mean_deg: float = 225.0
    zones: tuple = (NoFlyZone.circle((247500.0, 650500.0), 2800.0),)
    include_road_graph: bool = False
    road_grid: int = 6

    def __post_init__(self):
        if self.n_existing > self.n_candidates:
            raise ValueError("n_existing cannot exceed n_candidates")
        if not 0 < sum(c[3] for c in self.clusters) <= 1.0:
            raise ValueError("cluster weights must sum into (0, 1]")


def _density(spec: SyntheticSpec, e, n):
    """Smooth population density (per 1000 m^2), peaking at the cluster centres."""
    e = np.asarray(e, dtype=float)
    n = np.asarray(n, dtype=float)
    rho = np.full(e.shape, 0.15)
    for ce, cn, sd, w in spec.clusters:
        r2 = (e - ce) ** 2 + (n - cn) ** 2
        rho = rho + 7.0 * w * np.exp(-r2 / (2.0 * (1.8 * sd) ** 2))
    return rho


def _elevation(e, n):
    e = np.asarray(e, dtype=float)
    n = np.asarray(n, dtype=float)
    return 60.0 + 40.0 * np.sin(e / 7000.0) * np.cos(n / 6500.0) + 15.0 * np.sin(n / 3100.0)


def _sample_points(spec: SyntheticSpec, rng: np.random.Generator, count: int):
    """Urban/rural incident mixture over the extent."""
    e_min, e_max, n_min, n_max = spec.extent
    weights = [c[3] for c in spec.clusters]
    rural = 1.0 - sum(weights)
    choice = rng.choice(len(spec.clusters) + 1, size=count, p=[*weights, rural])
    e = np.empty(count)
    n = np.empty(count)
    for i, c in enumerate(choice):
        if c < len(spec.clusters):
            ce, cn, sd, _ = spec.clusters[c]
            e[i] = rng.normal(ce, sd)
            n[i] = rng.normal(cn, sd)
        else:
            e[i] = rng.uniform(e_min, e_max)
            n[i] = rng.uniform(n_min, n_max)
    return np.clip(e, e_min, e_max), np.clip(n, n_min, n_max), choice


def _synthetic_wind_model(spec: SyntheticSpec, rng: np.random.Generator) -> WindModel:
    """Bundle-local wind GPs fitted (fixed hyperparameters) on the recipe's wind field."""
    e_min, e_max, n_min, n_max = spec.extent
    es = np.linspace(e_min, e_max, 5)
    ns = np.linspace(n_min, n_max, 5)
    rows, speed, direction = [], [], []
    for e in es:
        for n in ns:
            for s in (1, 2, 3, 4):
                rows.append([e, n, float(s)])
                seasonal = math.cos(2.0 * math.pi * (s - 1) / 4.0)
                sp = (spec.wind_base_knots + spec.wind_seasonal_amplitude_knots * seasonal
                      + 1.5 * math.sin(e / 15000.0) + 1.0 * math.cos(n / 12000.0))
                sp = max(sp, 1.0) * math.exp(rng.normal(0.0, 0.04))
                di = (spec.wind_direction_mean_deg + 25.0 * math.sin(2.0 * math.pi * (s - 1) / 4.0)
                      + 12.0 * math.sin(n / 9000.0)) * math.exp(rng.normal(0.0, 0.03))
                speed.append(math.log(sp))
                direction.append(math.log(max(di, 1.0)))
    X = np.asarray(rows)
    # product composite: a sum kernel is rank-deficient on this product grid
    kernel = ProductKernel(children=(
        PeriodicKernel(scales=(2.2,), periods=(4.0,), variance=1.0, active_dims=(2,)),
        Matern52Kernel(scales=(16000.0, 16000.0), variance=0.05, active_dims=(0, 1)),
    ))
    names = ["easting", "northing", "season"]
    speed_model = GPSurrogate(kernel=kernel, trend="constant", optimize=False).fit(
        X, np.asarray(speed), feature_names=names)
    dir_model = GPSurrogate(kernel=kernel, trend="constant", optimize=False).fit(
        X, np.asarray(direction), feature_names=names)
    return WindModel(speed_model=speed_model, direction_model=dir_model)


def _synthetic_graph(spec: SyntheticSpec, rng: np.random.Generator) -> RoadGraph:
    from .demand import RoadEdge

    e_min, e_max, n_min, n_max = spec.extent
    g = spec.road_grid
    xs = np.linspace(e_min + 2000, e_max - 2000, g)
    ys = np.linspace(n_min + 2000, n_max - 2000, g)
    nodes = {}
    for r in range(g):
        for c in range(g):
            je = rng.uniform(-900.0, 900.0)
            jn = rng.uniform(-900.0, 900.0)
            nodes[f"n{r}_{c}"] = (float(xs[c] + je), float(ys[r] + jn))
    edges = []
    for r in range(g):
        for c in range(g):
            here = f"n{r}_{c}"
            for dr, dc in ((0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if rr >= g or cc >= g:
                    continue
                there = f"n{rr}_{cc}"
                (e1, n1), (e2, n2) = nodes[here], nodes[there]
                length = math.hypot(e2 - e1, n2 - n1)
                azimuth = math.atan2(e2 - e1, n2 - n1)
                if azimuth <= -math.pi:
                    azimuth += 2.0 * math.pi
                edges.append(RoadEdge(
                    u=here, v=there, length_m=length,
                    maxspeed_ms=float(rng.uniform(9.0, 20.0)),
                    azimuth_rad=azimuth,
                    pop_density=float(_density(spec, (e1 + e2) / 2.0, (n1 + n2) / 2.0)),
                ))
    return RoadGraph(nodes, edges)


def simulate_region(spec: SyntheticSpec) -> RegionBundle:
    """Deterministic synthetic region with recorded generative ground truth."""
    rng = stream(spec.seed, "synthetic-region")
    e_min, e_max, n_min, n_max = spec.extent

    # existing stations sit where demand is (cluster mixture, wider spread)
    ex_e, ex_n, _ = _sample_points(spec, rng, spec.n_existing)
    sites = []
    for j in range(spec.n_existing):
        e, n = float(ex_e[j]), float(ex_n[j])
        sites.append(SiteRecord(
            id=f"ems{j:02d}", easting=e, northing=n, elevation=float(_elevation(e, n)),
            is_new=0, cost=float(rng.uniform(9000.0, 11000.0)),
            pop_density=float(_density(spec, e, n)), dist_to_infra=0.0,
        ))
    ex_xy = np.array([[s.easting, s.northing] for s in sites])

    # new candidates on a jittered grid, NFZ overlaps allowed (filtered later)
    n_new = spec.n_candidates - spec.n_existing
    g = max(2, math.ceil(math.sqrt(n_new)))
    xs = np.linspace(e_min + 1500, e_max - 1500, g)
    ys = np.linspace(n_min + 1500, n_max - 1500, g)
    cells = [(float(xs[c]), float(ys[r])) for r in range(g) for c in range(g)]
    for j, (ce, cn) in enumerate(cells[:n_new]):
        e = ce + float(rng.uniform(-1200.0, 1200.0))
        n = cn + float(rng.uniform(-1200.0, 1200.0))
        dist = float(np.min(np.hypot(ex_xy[:, 0] - e, ex_xy[:, 1] - n)))
        sites.append(SiteRecord(
            id=f"new{j:02d}", easting=e, northing=n, elevation=float(_elevation(e, n)),
            is_new=1, cost=float(rng.uniform(12500.0, 15500.0)),
            pop_density=float(_density(spec, e, n)), dist_to_infra=dist,
        ))

    # incidents with route features tied to the geography
    in_e, in_n, cluster_of = _sample_points(spec, rng, spec.n_incidents)
    hour_weights = 1.0 + 0.8 * np.exp(-((np.arange(24) - 14.0) / 5.0) ** 2)
    hour_weights /= hour_weights.sum()
    hours = rng.choice(24, size=spec.n_incidents, p=hour_weights)
    amb = SurrogateSet.default().ambulance
    incidents = []
    for i in range(spec.n_incidents):
        e, n = float(in_e[i]), float(in_n[i])
        dist = float(np.min(np.hypot(ex_xy[:, 0] - e, ex_xy[:, 1] - n)))
        urban = float(_density(spec, e, n)) / 3.0
        # blue-light routing at ~18 m/s, capped: crews stage dynamically, so
        # theoretical times stay in the regime the survival odds expect
        comp_time = min(dist / 18.0 / 60.0 * float(rng.uniform(1.0, 1.35)) + 0.6, 12.0)
        rec = IncidentRecord(
            id=f"inc{i:04d}", easting=e, northing=n, elevation=float(_elevation(e, n)),
            hour=int(hours[i]),
            comp_time=comp_time,
            big_intsects=float(rng.poisson(2.0 + 5.0 * urban)),
            mid_intsects=float(rng.poisson(4.0 + 8.0 * urban)),
            turns=float(rng.gamma(4.0, 1.0 + 1.5 * urban)),
            pop_dense=float(_density(spec, e, n)),
            length=min(dist * 1.35 / 1000.0, 14.0),
        )
        rec_time = float(sample_ambulance_time(amb, rec, rng, 1)[0])
        incidents.append(dataclasses.replace(rec, rec_time=rec_time))

    wind_model = _synthetic_wind_model(spec, rng)
    graph = _synthetic_graph(spec, rng) if spec.include_road_graph else None

    meta = {
        "generator": "dronenet.simulate_region",
        "spec": {
            "seed": spec.seed, "n_incidents": spec.n_incidents,
            "n_candidates": spec.n_candidates, "n_existing": spec.n_existing,
            "extent": list(spec.extent),
            "clusters": [list(c) for c in spec.clusters],
            "wind_base_knots": spec.wind_base_knots,
            "wind_seasonal_amplitude_knots": spec.wind_seasonal_amplitude_knots,
            "wind_direction_mean_deg": spec.wind_direction_mean_deg,
            "include_road_graph": spec.include_road_graph,
            "road_grid": spec.road_grid,
        },
        "ground_truth": {
            "cluster_counts": np.bincount(cluster_of,
                                          minlength=len(spec.clusters) + 1).tolist(),
            "density_base": 0.15,
            "ambulance_model": "shipped-default",
        },
    }
    return RegionBundle(sites=sites, incidents=incidents, zones=list(spec.zones),
                        config=AppConfig(), graph=graph, wind_model=wind_model,
                        meta=meta)
