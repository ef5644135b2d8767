"""Ambulance-side modelling.

Road-network feature extraction (shortest time paths, intersection
counts, turning intensity, length-weighted population density), the
fitted ambulance response-time surrogate, and the survival-odds demand
weights

    e_i ∝ (exp(0.11 T_i) - 1)^gamma,   columns normalized to 1,

which prioritize incidents the current EMS network reaches slowly. The
0.11/min decay reflects the 7-10% per-minute survival drop; it is shared
with the drone-side survival probability and exposed in config.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import (
    AllUnreachable,
    BrokenPath,
    DegenerateWeights,
    SchemaError,
    UnknownNode,
)
from .linear import LogLinearRegressor

__all__ = [
    "SURVIVAL_DECAY_PER_MIN",
    "AMBULANCE_FEATURES",
    "default_ambulance_model",
    "IncidentRecord",
    "ambulance_feature_vector",
    "sample_ambulance_time",
    "sample_ambulance_matrix",
    "demand_weights",
    "RoadGraph",
    "shortest_time_paths",
    "PathFeatures",
    "extract_path_features",
    "nearest_facility",
]

SURVIVAL_DECAY_PER_MIN = 0.11

AMBULANCE_FEATURES = ["intercept", "comp_time", "big_intsects", "mid_intsects",
                      "turns", "pop_dense", "length", "sin_hour", "cos_hour"]


def default_ambulance_model() -> LogLinearRegressor:
    """Shipped ambulance response-time fit (3065 incidents, log minutes)."""
    coef = [1.7654, 0.0290, 0.0038, 0.0051, -0.0019, -0.0464, 0.0289, 0.0260, 0.0850]
    se = [0.0395, 0.0086, 0.0025, 0.0013, 0.0006, 0.0119, 0.0066, 0.0133, 0.0137]
    return LogLinearRegressor.from_parameters(
        coef=coef, coef_covariance=np.diag(np.asarray(se) ** 2),
        residual_variance=0.514**2, dof=3056, feature_names=AMBULANCE_FEATURES,
    )


@dataclass(frozen=True)
class IncidentRecord:
    """One OHCA call with its precomputed route features."""

    id: str
    easting: float
    northing: float
    elevation: float = 0.0
    hour: int = 0                 # 0..23
    comp_time: float = 0.0        # network travel time, minutes
    big_intsects: float = 0.0     # degree > 3 intersections on the route
    mid_intsects: float = 0.0     # degree == 3 intersections
    turns: float = 0.0            # cumulative |edge azimuth|, radians
    pop_dense: float = 0.0        # length-weighted density, per 1000 m^2
    length: float = 0.0           # route length, km
    rec_time: float | None = None  # recorded response time, minutes (optional)

    def __post_init__(self):
        if not 0 <= int(self.hour) <= 23:
            raise ValueError(f"hour must be 0..23, got {self.hour}")


def ambulance_feature_vector(rec: IncidentRecord, hour: int | None = None) -> np.ndarray:
    """Model features in declared order; ``hour`` overrides the record's own."""
    h = float(rec.hour if hour is None else hour)
    return np.array([
        1.0, rec.comp_time, rec.big_intsects, rec.mid_intsects, rec.turns,
        rec.pop_dense, rec.length, math.sin(math.pi * h / 12.0),
        math.cos(math.pi * h / 12.0),
    ])


def sample_ambulance_time(model: LogLinearRegressor, rec: IncidentRecord,
                          rng: np.random.Generator, count: int,
                          hour: int | None = None) -> np.ndarray:
    """``count`` lognormal response-time draws (minutes)."""
    from .distributions import sample_lognormal
    dist = model.predict_dist(ambulance_feature_vector(rec, hour))
    return sample_lognormal(dist, rng, count)


def sample_ambulance_matrix(model: LogLinearRegressor, records, rng: np.random.Generator,
                            count: int, hour: int | None = None) -> np.ndarray:
    """(count, n_incidents) response-time draws, one column per record."""
    X = np.array([ambulance_feature_vector(r, hour) for r in records])
    mu, sigma2 = model.predictive_params(X)
    z = rng.standard_normal((count, X.shape[0]))
    return np.exp(mu[None, :] + np.sqrt(sigma2)[None, :] * z)


def demand_weights(T, gamma: float, decay: float = SURVIVAL_DECAY_PER_MIN) -> np.ndarray:
    """Column-normalized survival-odds weights for response times ``T`` (minutes).

    ``T`` is (n,) or (n, K); each scenario column sums to 1. gamma = 0
    gives exactly uniform weights.
    """
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0.0):
        raise ValueError("response times must be > 0")
    if gamma < 0.0:
        raise ValueError("gamma must be >= 0")
    squeeze = T.ndim == 1
    if squeeze:
        T = T[:, None]
    if gamma == 0.0:
        w = np.full(T.shape, 1.0 / T.shape[0])
        return w[:, 0] if squeeze else w
    # log-space power for stability at large gamma
    with np.errstate(divide="ignore"):
        log_odds = np.log(np.expm1(decay * T))
    raw = gamma * log_odds
    finite = np.isfinite(raw)
    if not finite.any(axis=0).all():
        raise DegenerateWeights("a scenario column has all-zero raw weights")
    hi = np.max(np.where(finite, raw, -np.inf), axis=0, keepdims=True)
    w = np.exp(raw - hi)
    w /= w.sum(axis=0, keepdims=True)
    return w[:, 0] if squeeze else w


# -- road graph ---------------------------------------------------------------


@dataclass(frozen=True)
class RoadEdge:
    u: str
    v: str
    length_m: float
    maxspeed_ms: float
    azimuth_rad: float
    pop_density: float

    @property
    def travel_time_s(self) -> float:
        return self.length_m / self.maxspeed_ms


class RoadGraph:
    """Undirected time-weighted road network."""

    def __init__(self, nodes: dict, edges: list[RoadEdge]):
        self.nodes = dict(nodes)  # id -> (easting, northing)
        self.edges = list(edges)
        self.adjacency: dict = {nid: [] for nid in self.nodes}
        for idx, e in enumerate(self.edges):
            if e.u not in self.nodes or e.v not in self.nodes:
                raise SchemaError(f"edge {e.u}-{e.v} references unknown node")
            if e.length_m <= 0.0 or e.maxspeed_ms <= 0.0:
                raise SchemaError(f"edge {e.u}-{e.v} needs positive length and maxspeed")
            self.adjacency[e.u].append((e.v, idx))
            self.adjacency[e.v].append((e.u, idx))
        self.degree = {nid: len(adj) for nid, adj in self.adjacency.items()}

    @classmethod
    def from_csv(cls, nodes_path, edges_path) -> "RoadGraph":
        nodes = {}
        with Path(nodes_path).open(newline="") as fh:
            for i, row in enumerate(csv.DictReader(fh), start=2):
                try:
                    nid = row["id"]
                    nodes[nid] = (float(row["easting"]), float(row["northing"]))
                except (KeyError, ValueError) as exc:
                    raise SchemaError(f"bad node row: {exc}", path=nodes_path, row=i) from None
        edges = []
        with Path(edges_path).open(newline="") as fh:
            for i, row in enumerate(csv.DictReader(fh), start=2):
                try:
                    edges.append(RoadEdge(
                        u=row["u"], v=row["v"], length_m=float(row["length_m"]),
                        maxspeed_ms=float(row["maxspeed_ms"]),
                        azimuth_rad=float(row["azimuth_rad"]),
                        pop_density=float(row["pop_density"]),
                    ))
                except (KeyError, ValueError) as exc:
                    raise SchemaError(f"bad edge row: {exc}", path=edges_path, row=i) from None
        return cls(nodes, edges)

    def nearest_node(self, point) -> str:
        ids = list(self.nodes)
        xy = np.array([self.nodes[n] for n in ids])
        d2 = (xy[:, 0] - float(point[0])) ** 2 + (xy[:, 1] - float(point[1])) ** 2
        return ids[int(np.argmin(d2))]

    def dijkstra(self, source: str) -> tuple[dict, dict]:
        """(seconds-from-source, predecessor edge index) over the whole graph."""
        if source not in self.nodes:
            raise UnknownNode(f"node {source!r} not in graph")
        dist = {source: 0.0}
        pred: dict = {source: None}
        heap = [(0.0, source)]
        while heap:
            d_u, u = heapq.heappop(heap)
            if d_u > dist.get(u, math.inf):
                continue
            for v, eidx in self.adjacency[u]:
                cand = d_u + self.edges[eidx].travel_time_s
                if cand < dist.get(v, math.inf):
                    dist[v] = cand
                    pred[v] = eidx
                    heapq.heappush(heap, (cand, v))
        return dist, pred

    def path_edges(self, pred: dict, source: str, target: str) -> list[int] | None:
        """Edge-index path source -> target from a predecessor map; None if unreachable."""
        if target not in pred:
            return None
        path = []
        node = target
        while node != source:
            eidx = pred[node]
            path.append(eidx)
            e = self.edges[eidx]
            node = e.u if e.v == node else e.v
        path.reverse()
        return path


def shortest_time_paths(graph: RoadGraph, origins, destinations):
    """Travel-time cost matrix (seconds) plus edge-index paths.

    Returns (C, paths) with C of shape (len(origins), len(destinations));
    unreachable pairs hold +inf and a None path.
    """
    origins = list(origins)
    destinations = list(destinations)
    for nid in origins + destinations:
        if nid not in graph.nodes:
            raise UnknownNode(f"node {nid!r} not in graph")
    C = np.full((len(origins), len(destinations)), np.inf)
    paths: dict = {}
    for i, o in enumerate(origins):
        dist, pred = graph.dijkstra(o)
        for j, t in enumerate(destinations):
            if t in dist:
                C[i, j] = dist[t]
                paths[(i, j)] = graph.path_edges(pred, o, t)
            else:
                paths[(i, j)] = None
    return C, paths


@dataclass(frozen=True)
class PathFeatures:
    comp_time: float      # minutes
    big_intsects: int
    mid_intsects: int
    turns: float          # radians
    pop_dense: float      # length-weighted
    length: float         # km


def extract_path_features(graph: RoadGraph, path: list[int], total_time_s: float,
                          source: str | None = None) -> PathFeatures:
    """Route features per the data-curation recipe.

    Intersection counts use full-graph degrees and interior nodes only
    (endpoints are blended points, not junctions). ``source`` pins the
    start node when the path has a single edge.
    """
    if not path:
        return PathFeatures(total_time_s / 60.0, 0, 0, 0.0, 0.0, 0.0)
    edges = [graph.edges[i] for i in path]
    node_seq = _walk_nodes(edges, source)
    interior = node_seq[1:-1]
    big = sum(1 for nid in interior if graph.degree[nid] > 3)
    mid = sum(1 for nid in interior if graph.degree[nid] == 3)
    turns = float(sum(abs(e.azimuth_rad) for e in edges))
    total_len = float(sum(e.length_m for e in edges))
    pop = float(sum(e.pop_density * e.length_m for e in edges)) / total_len
    return PathFeatures(total_time_s / 60.0, big, mid, turns, pop, total_len / 1000.0)


def _walk_nodes(edges, source: str | None) -> list[str]:
    if len(edges) == 1:
        e = edges[0]
        if source is not None and source not in (e.u, e.v):
            raise BrokenPath(f"source {source!r} not on the single edge")
        start = source if source is not None else e.u
        return [start, e.v if start == e.u else e.u]
    first, second = edges[0], edges[1]
    shared = {first.u, first.v} & {second.u, second.v}
    if not shared:
        raise BrokenPath("first two edges do not share a node")
    start = first.u if first.v in shared else first.v
    if source is not None and start != source:
        if source in (first.u, first.v):
            start = source
        else:
            raise BrokenPath(f"source {source!r} not on the first edge")
    seq = [start]
    node = start
    for e in edges:
        if node == e.u:
            node = e.v
        elif node == e.v:
            node = e.u
        else:
            raise BrokenPath(f"edge {e.u}-{e.v} does not continue from {node!r}")
        seq.append(node)
    return seq


def nearest_facility(C: np.ndarray, incident: int) -> tuple[int, float]:
    """(facility index, minutes) of the closest facility; ties -> lowest index."""
    row = np.asarray(C, dtype=float)[incident]
    if not np.any(np.isfinite(row)):
        raise AllUnreachable(f"incident {incident} cannot reach any facility")
    j = int(np.argmin(row))
    return j, float(row[j]) / 60.0
