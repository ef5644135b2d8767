"""Operator CLI: validate / simulate / extract-features / fit / prior-check /
design / report / reliability.

Every command is deterministic under a fixed seed and writes a manifest
(input hashes, effective config, seed, versions) next to its outputs.
Seed precedence: --seed flag > DRONENET_SEED env var > config file.
Exit codes: 0 ok, 2 schema error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cross_validation import kfold_cv
from .demand import extract_path_features, shortest_time_paths
from .designer import (
    ChainTrace,
    DesignConfig,
    build_scenario_cache,
    calibrate_theta0,
    prior_predictive,
    resolve_thetas,
    run_design,
)
from .exceptions import DronenetError, NumericalFailure, SchemaError
from .gp import GPSurrogate
from .kernels import GaussianKernel, Matern52Kernel
from .linear import LogLinearRegressor
from .model_io import load_dataset_csv
from .plots import svg_heatmap, svg_hist, svg_lines
from .posthoc import (
    cost_report,
    coverage_stats,
    expected_missions,
    qaly_gain,
    reliability_curve,
    sample_mission_times,
    select_sites,
)
from .region import (
    INCIDENT_COLUMNS,
    RegionBundle,
    SyntheticSpec,
    apply_nfz,
    load_bundle,
    save_bundle,
    simulate_region,
    validate_bundle,
)
from .rng import stream

log = logging.getLogger("dronenet")

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERICAL = 3


# -- shared plumbing ---------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _hash_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _bundle_inputs(directory: Path) -> dict:
    names = ["sites.csv", "incidents.csv", "nfz.json", "config.toml", "nodes.csv",
             "edges.csv", "elevations.csv", "wind_speed_model.json",
             "wind_direction_model.json", "meta.json"]
    return {n: _hash_file(directory / n) for n in names if (directory / n).exists()}


def _versions() -> dict:
    import scipy
    import sklearn

    return {
        "dronenet": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "python": ".".join(map(str, sys.version_info[:3])),
    }


def _manifest(out_dir: Path, command: str, inputs: dict, config: dict, seed: int) -> None:
    _write_json(out_dir / "manifest.json", {
        "command": command,
        "inputs": inputs,
        "config": config,
        "seed": seed,
        "versions": _versions(),
    })


def _effective_seed(args, config_seed: int) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("DRONENET_SEED")
    if env is not None:
        return int(env)
    return int(config_seed)


def _config_dict(cfg: DesignConfig) -> dict:
    return dataclasses.asdict(cfg)


def _design_config(bundle: RegionBundle, args, beta: float | None = None) -> DesignConfig:
    """CLI flags > config file > shipped defaults."""
    cfg = bundle.config.design
    overrides = {}
    for flag in ("scenarios", "iterations", "eta", "gamma", "tau", "theta0",
                 "d_thresh", "time_limit_s"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[flag] = value
    lam = getattr(args, "lam", None)
    if lam is not None:
        overrides["lam"] = lam
    if beta is not None:
        overrides["beta"] = beta
    overrides["seed"] = _effective_seed(args, cfg.seed)
    return dataclasses.replace(cfg, **overrides)


def _filtered(bundle: RegionBundle):
    sites, incidents, report = apply_nfz(bundle)
    if not sites:
        raise SchemaError("no candidate sites remain after NFZ filtering")
    if not incidents:
        raise SchemaError("no incidents remain after NFZ filtering")
    return sites, incidents, report


# -- traces on disk ------------------------------------------------------------------


def _write_trace(path: Path, trace: ChainTrace) -> None:
    header = ["iteration", "accepted", "loss", "state"]
    rows = (
        [t, int(trace.accepted[t]), trace.losses[t],
         "".join("1" if b else "0" for b in trace.states[t])]
        for t in range(trace.states.shape[0])
    )
    _write_csv(path, header, rows)


def _read_trace(path: Path, season: int, hour: int) -> ChainTrace:
    lines = path.read_text().splitlines()
    if not lines or lines[0] != "iteration,accepted,loss,state":
        raise SchemaError("not a trace CSV", path=path)
    n = len(lines) - 1
    if n < 1:
        raise SchemaError("empty trace", path=path)
    p = len(lines[1].split(",")[3])
    states = np.empty((n, p), dtype=np.uint8)
    losses = np.empty(n)
    accepted = np.empty(n, dtype=bool)
    for t, line in enumerate(lines[1:]):
        _, acc, loss, state = line.split(",")
        accepted[t] = acc == "1"
        losses[t] = float(loss)
        states[t] = np.frombuffer(state.encode(), dtype=np.uint8) - ord("0")
    return ChainTrace(season=season, hour=hour, states=states, losses=losses,
                      accepted=accepted,
                      site_accept_counts=np.zeros(p, dtype=np.int64))


def _beta_dir(out: Path, beta: float) -> Path:
    return out / f"beta_{beta:g}"


def _load_design_run(design_dir: Path):
    """(manifest, {beta: {(s, h): ChainTrace}}) from a design output directory."""
    manifest_path = design_dir / "manifest.json"
    if not manifest_path.exists():
        raise SchemaError("design manifest missing", path=manifest_path)
    manifest = json.loads(manifest_path.read_text())
    runs = {}
    for bdir in sorted(design_dir.glob("beta_*")):
        beta = float(bdir.name.split("_", 1)[1])
        traces = {}
        for trace_path in sorted(bdir.glob("traces/s*_h*.csv")):
            stem = trace_path.stem  # s{season}_h{hour}
            s_part, h_part = stem.split("_")
            traces[(int(s_part[1:]), int(h_part[1:]))] = _read_trace(
                trace_path, int(s_part[1:]), int(h_part[1:]))
        if traces:
            runs[beta] = traces
    if not runs:
        raise SchemaError("no completed beta runs found", path=design_dir)
    return manifest, runs


# -- subcommands ---------------------------------------------------------------------


def cmd_validate(args) -> int:
    bundle = load_bundle(args.bundle)
    report = validate_bundle(bundle)
    report["manifest"] = {
        "command": "validate",
        "inputs": _bundle_inputs(Path(args.bundle)),
        "seed": bundle.config.design.seed,
        "versions": _versions(),
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "validation.json", report)
        _manifest(out, "validate", report["manifest"]["inputs"], {},
                  bundle.config.design.seed)
    print(json.dumps(report, sort_keys=True, indent=1))
    print(f"sites: {report['sites_retained']} retained, "
          f"{report['sites_excluded']} excluded by NFZ")
    print(f"incidents: {report['incidents_retained']} retained, "
          f"{report['incidents_excluded']} excluded by NFZ")
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec_kwargs = {"seed": _effective_seed(args, 0)}
    if args.incidents is not None:
        spec_kwargs["n_incidents"] = args.incidents
    if args.candidates is not None:
        spec_kwargs["n_candidates"] = args.candidates
    if args.existing is not None:
        spec_kwargs["n_existing"] = args.existing
    if args.road_graph:
        spec_kwargs["include_road_graph"] = True
    spec = SyntheticSpec(**spec_kwargs)
    bundle = simulate_region(spec)
    out = Path(args.out)
    save_bundle(bundle, out)
    _manifest(out, "simulate", {}, {"spec": bundle.meta["spec"]}, spec.seed)
    print(f"wrote synthetic bundle to {out} "
          f"({len(bundle.sites)} sites, {len(bundle.incidents)} incidents)")
    return EXIT_OK


def cmd_extract_features(args) -> int:
    bundle = load_bundle(args.bundle)
    if bundle.graph is None:
        raise SchemaError("bundle has no road graph (nodes.csv/edges.csv)")
    graph = bundle.graph
    facilities = [s for s in bundle.sites if not s.is_new]
    if not facilities:
        raise SchemaError("no existing-infrastructure sites to route from")
    fac_nodes = [graph.nearest_node((s.easting, s.northing)) for s in facilities]
    inc_nodes = [graph.nearest_node((r.easting, r.northing)) for r in bundle.incidents]
    C, paths = shortest_time_paths(graph, fac_nodes, inc_nodes)

    rows = []
    skipped = 0
    for i, rec in enumerate(bundle.incidents):
        col = C[:, i]
        if not np.any(np.isfinite(col)):
            skipped += 1  # disconnected incidents are excluded
            continue
        j = int(np.argmin(col))
        feats = extract_path_features(graph, paths[(j, i)] or [], float(col[j]),
                                      source=fac_nodes[j])
        rows.append([rec.id, rec.easting, rec.northing, rec.elevation, rec.hour,
                     feats.comp_time, feats.big_intsects, feats.mid_intsects,
                     feats.turns, feats.pop_dense, feats.length, rec.rec_time])
    out = Path(args.out)
    _write_csv(out, INCIDENT_COLUMNS, rows)
    _manifest(out.parent, "extract-features", _bundle_inputs(Path(args.bundle)),
              {"skipped_unreachable": skipped}, 0)
    print(f"wrote {len(rows)} incident feature rows to {out} "
          f"({skipped} unreachable skipped)")
    return EXIT_OK


def cmd_fit(args) -> int:
    X, y, names = load_dataset_csv(args.data)
    seed = _effective_seed(args, 0)
    d = X.shape[1]
    roster = []
    for token in args.models.split(","):
        token = token.strip()
        if token == "baseline":
            continue  # always included by kfold_cv
        if token == "lm":
            roster.append(("lm", LogLinearRegressor(fit_intercept=True)))
        elif token.startswith("gp-"):
            _, kind, trend = token.split("-")
            kernel = {"gaussian": GaussianKernel, "matern52": Matern52Kernel}[kind](
                scales=(1.0,) * d, variance=1.0)
            roster.append((token, GPSurrogate(kernel=kernel, trend=trend,
                                              n_restarts=args.restarts,
                                              random_state=seed)))
        else:
            raise SchemaError(f"unknown model token {token!r}")
    report = kfold_cv(X, y, roster, n_folds=args.folds, seed=seed)
    out = Path(args.out)
    table = report.table()
    _write_csv(out, table[0], table[1:])
    _manifest(out.parent, "fit", {Path(args.data).name: _hash_file(Path(args.data))},
              {"folds": args.folds, "models": args.models, "features": names}, seed)
    for row in table[1:]:
        print(f"{row[0]:>24}  R2 {row[1]: .3f} +/- {row[2]:.3f}  "
              f"RMSE {row[3]:.3f}  MAE {row[5]:.3f}")
    return EXIT_OK


def cmd_prior_check(args) -> int:
    bundle = load_bundle(args.bundle)
    sites, _, _ = _filtered(bundle)
    cfg = _design_config(bundle, args)
    thetas = resolve_thetas(cfg, sites)
    if args.target_sites is not None:
        theta0 = calibrate_theta0(sites, thetas[1:], cfg.d_thresh, args.target_sites)
        thetas = (theta0, *thetas[1:])
    pp = prior_predictive(sites, thetas, cfg.d_thresh,
                          stream(cfg.seed, "prior-check"), draws=args.draws)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    values, counts = np.unique(pp.counts, return_counts=True)
    _write_csv(out / "prior_counts.csv", ["active_sites", "draws", "frequency"],
               ([int(v), int(c), c / pp.counts.size] for v, c in zip(values, counts)))
    payload = {
        "theta": list(thetas), "d_thresh": cfg.d_thresh, "draws": int(args.draws),
        "analytic_mean": pp.analytic_mean,
        "empirical_mean": float(pp.counts.mean()),
        "p_active": pp.p_active.tolist(),
    }
    _write_json(out / "prior_check.json", payload)
    svg_hist(pp.counts, "Prior predictive active-site count", "active sites",
             out / "prior_predictive.svg")
    _manifest(out, "prior-check", _bundle_inputs(Path(args.bundle)),
              {"theta": list(thetas)}, cfg.seed)
    print(f"analytic mean {pp.analytic_mean:.3f}, "
          f"empirical mean {float(pp.counts.mean()):.3f} over {args.draws} draws")
    return EXIT_OK


def _betas_from_args(args, cfg: DesignConfig) -> list[float]:
    betas = list(args.beta or [])
    if args.beta_grid:
        lo, hi, count = args.beta_grid
        betas.extend(np.linspace(lo, hi, int(count)).tolist())
    if not betas:
        betas = [cfg.beta]
    return sorted(set(float(b) for b in betas))


def cmd_design(args) -> int:
    bundle = load_bundle(args.bundle)
    sites, incidents, nfz_report = _filtered(bundle)
    base_cfg = _design_config(bundle, args)
    betas = _betas_from_args(args, base_cfg)
    surrogates = bundle.surrogates()
    seasons = tuple(int(s) for s in args.seasons.split(","))
    hours = tuple(int(h) for h in args.hours.split(","))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cache = None
    completed = []
    for beta in betas:
        cfg = dataclasses.replace(base_cfg, beta=beta)
        bdir = _beta_dir(out, beta)
        fingerprint = hashlib.sha256(json.dumps(
            {"config": _config_dict(cfg), "seasons": seasons, "hours": hours},
            sort_keys=True).encode()).hexdigest()
        done = bdir / "done.json"
        if done.exists() and json.loads(done.read_text()).get("fingerprint") == fingerprint:
            log.info("beta %g already complete, skipping", beta)
            completed.append(beta)
            continue
        if cache is None:
            cache = build_scenario_cache(sites, incidents, surrogates, base_cfg,
                                         seasons, hours)
        result = run_design(sites, incidents, surrogates, cfg, seasons, hours,
                            threads=args.threads, cache=cache)
        summary = {"beta": beta, "chains": {}}
        accept_counts = {}
        for (s, h), trace in sorted(result.traces.items()):
            _write_trace(bdir / "traces" / f"s{s}_h{h}.csv", trace)
            start = int(cfg.burn_in * trace.states.shape[0])
            summary["chains"][f"s{s}_h{h}"] = {
                "acceptance_rate": trace.acceptance_rate,
                "mean_loss": float(trace.losses[start:].mean()),
                "mean_active": float(trace.states[start:].sum(axis=1).mean()),
            }
            accept_counts[f"s{s}_h{h}"] = trace.site_accept_counts.tolist()
        _write_json(bdir / "acceptance_counts.json",
                    {"site_ids": result.site_ids, "accepted_flips": accept_counts})
        _write_json(bdir / "summary.json", summary)
        _write_json(done, {"fingerprint": fingerprint})
        completed.append(beta)
        print(f"beta {beta:g}: mean acceptance "
              f"{np.mean([t.acceptance_rate for t in result.traces.values()]):.3f}")

    if cache is not None:
        site_ids = [s.id for s in sites]
        _write_csv(out / "scenarios.csv",
                   ["season", "k", "site_id", "speed_ms", "direction_deg"],
                   ([s, k, site_ids[j], cache.wind_speed[s][k, j],
                     cache.wind_direction[s][k, j]]
                    for s in cache.seasons for k in range(cache.n_scenarios)
                    for j in range(len(site_ids))))
        if args.export_coverage:
            from .flight import CoverageMatrix, write_coverage_csv

            for s in cache.seasons:
                write_coverage_csv(
                    CoverageMatrix(cache.A[s][0], [r.id for r in incidents], site_ids),
                    out / f"coverage_s{s}_k0.csv")

    _manifest(out, "design", _bundle_inputs(Path(args.bundle)), {
        "config": _config_dict(base_cfg), "betas": completed,
        "seasons": list(seasons), "hours": list(hours),
        "nfz": nfz_report, "site_ids": [s.id for s in sites],
    }, base_cfg.seed)
    print(f"design complete for betas {completed} -> {out}")
    return EXIT_OK


def _posthoc_for_beta(bundle, sites, incidents, cfg, cache, traces, args, bdir: Path):
    site_ids = [s.id for s in sites]
    summary = select_sites(traces, site_ids, tau=cfg.tau, burn_in=cfg.burn_in)
    x_star = summary.x_star
    surrogates = bundle.surrogates()

    rng = stream(cfg.seed, "posthoc", f"beta_{cfg.beta:g}")
    samples = sample_mission_times(x_star, sites, incidents, surrogates, cfg, rng,
                                   n_scenarios=args.posthoc_scenarios)
    dq = qaly_gain(samples, decay=cfg.survival_decay,
                   double_shock_delay=args.double_shock_delay)
    missions = expected_missions(samples)
    cost = cost_report(x_star, sites, dq, missions, bundle.config.costs)
    table = coverage_stats(samples, incidents)

    A_year = np.concatenate([cache.A[s] for s in cache.seasons], axis=0)
    q = bundle.config.reliability.downtime(sites)
    curve = reliability_curve(x_star, A_year, q,
                              replicates=bundle.config.reliability.replicates,
                              rng=stream(cfg.seed, "reliability", f"beta_{cfg.beta:g}"))

    # activation tables and plots
    _write_csv(bdir / "activation.csv", ["site_id", "season", "hour", "p"],
               ([site_ids[j], s, h, summary.p_jsh[j, si, hi]]
                for j in range(len(site_ids))
                for si, s in enumerate(summary.seasons)
                for hi, h in enumerate(summary.hours)))
    _write_json(bdir / "activation_summary.json", {
        "site_ids": site_ids,
        "tau": summary.tau,
        "p_yearly": summary.p_j.tolist(),
        "p_seasonal": summary.p_js.tolist(),
        "selected": summary.x_star.tolist(),
        "selected_seasonal": summary.x_star_seasonal.tolist(),
    })
    for si, s in enumerate(summary.seasons):
        svg_heatmap(summary.p_jsh[:, si, :], site_ids, list(summary.hours),
                    f"Activation probability, season {s}",
                    bdir / f"activation_s{s}.svg")

    _write_json(bdir / "cost_report.json", cost.to_dict())
    _write_csv(bdir / "cost_report.csv",
               ["n_active", "n_new", "delta_qaly_mean", "delta_qaly_sd",
                "missions_mean", "missions_sd", "c_infra", "c_op", "c_pers",
                "total_cost", "cost_per_qaly", "cost_effective"],
               [[cost.n_active, cost.n_new, cost.delta_qaly_mean, cost.delta_qaly_sd,
                 cost.missions_mean, cost.missions_sd, cost.c_infra, cost.c_op,
                 cost.c_pers, cost.total_cost, cost.cost_per_qaly,
                 int(cost.cost_effective)]])

    _write_csv(bdir / "reliability.csv", ["m_failures", "expected_coverage", "mc_se"],
               ([int(m), c, se] for m, c, se in
                zip(curve.m_values, curve.c_hat, curve.c_se)))
    svg_lines(curve.m_values, {"coverage": curve.c_hat},
              f"Coverage under station failures (beta {cfg.beta:g})",
              "simultaneous failures", "expected coverage",
              bdir / "reliability.svg", y_range=(0.0, 1.0))

    rows = []
    for name, stats in table.items():
        rows.append([name, stats["calls"], stats["total_calls"],
                     stats["mean_minutes"], stats["pct_within_6"],
                     stats["pct_within_8"]])
    _write_csv(bdir / "coverage_table.csv",
               ["response", "calls", "total_calls", "mean_minutes", "pct_within_6",
                "pct_within_8"], rows)

    _write_csv(bdir / "seasonal_sites.csv",
               ["season", "selected_sites", "mean_wind_ms"],
               ([s, int(summary.x_star_seasonal[:, si].sum()),
                 float(np.mean(cache.wind_speed[s]))]
                for si, s in enumerate(summary.seasons)))

    return {
        "beta": cfg.beta,
        "n_active": int(x_star.sum()),
        "delta_qaly": dq[0],
        "delta_qaly_sd": dq[1],
        "missions": missions[0],
        "cost_per_qaly": cost.cost_per_qaly,
        "cost_effective": cost.cost_effective,
        "coverage_all_up": float(curve.c_hat[0]) if curve.c_hat.size else 0.0,
        "drone_pct_within_6": table["drone"]["pct_within_6"],
    }


def cmd_report(args) -> int:
    bundle = load_bundle(args.bundle)
    sites, incidents, _ = _filtered(bundle)
    manifest, runs = _load_design_run(Path(args.design))
    run_info = manifest["config"]
    cfg_dict = dict(run_info["config"])
    seasons = tuple(run_info["seasons"])
    hours = tuple(run_info["hours"])
    base_cfg = DesignConfig(**cfg_dict)
    if run_info.get("site_ids") != [s.id for s in sites]:
        raise SchemaError("bundle sites do not match the design run")

    surrogates = bundle.surrogates()
    cache = build_scenario_cache(sites, incidents, surrogates, base_cfg, seasons, hours)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    per_beta = []
    for beta, traces in sorted(runs.items()):
        cfg = dataclasses.replace(base_cfg, beta=beta)
        bdir = _beta_dir(out, beta)
        bdir.mkdir(parents=True, exist_ok=True)
        per_beta.append(_posthoc_for_beta(bundle, sites, incidents, cfg, cache,
                                          traces, args, bdir))

    _write_csv(out / "beta_summary.csv",
               ["beta", "n_active", "delta_qaly", "delta_qaly_sd", "missions",
                "cost_per_qaly", "cost_effective", "coverage_all_up",
                "drone_pct_within_6"],
               ([row["beta"], row["n_active"], row["delta_qaly"],
                 row["delta_qaly_sd"], row["missions"], row["cost_per_qaly"],
                 int(row["cost_effective"]), row["coverage_all_up"],
                 row["drone_pct_within_6"]] for row in per_beta))
    if len(per_beta) > 1:
        betas = [row["beta"] for row in per_beta]
        svg_lines(betas, {"active sites": [row["n_active"] for row in per_beta]},
                  "Selected sites against beta", "beta", "sites",
                  out / "beta_sites.svg")
        svg_lines(betas, {"delta QALY": [row["delta_qaly"] for row in per_beta]},
                  "QALY gain against beta", "beta", "delta QALY",
                  out / "beta_qaly.svg")

    # best network: most QALY subject to the cost-effectiveness threshold
    threshold = bundle.config.costs.select_threshold
    eligible = [row for row in per_beta if row["cost_per_qaly"] < threshold]
    best = max(eligible, key=lambda row: row["delta_qaly"]) if eligible else None
    _write_json(out / "best_beta.json", {
        "threshold": threshold,
        "best": best,
        "candidates": per_beta,
    })
    _manifest(out, "report", _bundle_inputs(Path(args.bundle)), {
        "design": str(args.design), "config": cfg_dict,
        "posthoc_scenarios": args.posthoc_scenarios,
    }, base_cfg.seed)
    if best:
        print(f"best beta {best['beta']:g}: {best['n_active']} sites, "
              f"{best['delta_qaly']:.1f} QALY, "
              f"{best['cost_per_qaly']:.0f} GBP/QALY")
    else:
        print("no configuration met the cost-effectiveness threshold")
    return EXIT_OK


def cmd_reliability(args) -> int:
    bundle = load_bundle(args.bundle)
    sites, incidents, _ = _filtered(bundle)
    manifest, runs = _load_design_run(Path(args.design))
    run_info = manifest["config"]
    base_cfg = DesignConfig(**dict(run_info["config"]))
    seasons = tuple(run_info["seasons"])
    hours = tuple(run_info["hours"])
    beta = args.beta if args.beta is not None else max(runs)
    if beta not in runs:
        raise SchemaError(f"beta {beta:g} not in design run (have {sorted(runs)})")
    cfg = dataclasses.replace(base_cfg, beta=beta)
    summary = select_sites(runs[beta], [s.id for s in sites], tau=cfg.tau,
                           burn_in=cfg.burn_in)
    cache = build_scenario_cache(sites, incidents, bundle.surrogates(), base_cfg,
                                 seasons, hours)
    A_year = np.concatenate([cache.A[s] for s in cache.seasons], axis=0)
    q = bundle.config.reliability.downtime(sites)
    replicates = args.replicates or bundle.config.reliability.replicates
    curve = reliability_curve(summary.x_star, A_year, q, replicates=replicates,
                              rng=stream(cfg.seed, "reliability", f"beta_{beta:g}"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "reliability.csv", ["m_failures", "expected_coverage", "mc_se"],
               ([int(m), c, se] for m, c, se in
                zip(curve.m_values, curve.c_hat, curve.c_se)))
    svg_lines(curve.m_values, {"coverage": curve.c_hat},
              f"Coverage under station failures (beta {beta:g})",
              "simultaneous failures", "expected coverage", out / "reliability.svg",
              y_range=(0.0, 1.0))
    _manifest(out, "reliability", _bundle_inputs(Path(args.bundle)),
              {"beta": beta, "replicates": replicates}, cfg.seed)
    print(f"coverage all-up {curve.c_hat[0]:.3f}, "
          f"zero at m={int(curve.m_values[-1])}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def _add_design_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="seed override")
    p.add_argument("--scenarios", type=int, default=None, help="SAA scenarios K")
    p.add_argument("--iterations", type=int, default=None, help="MH iterations N")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--lam", type=float, default=None, help="dispatch odds exponent")
    p.add_argument("--tau", type=float, default=None, help="selection threshold")
    p.add_argument("--theta0", type=float, default=None, help="prior sparsity intercept")
    p.add_argument("--d-thresh", dest="d_thresh", type=float, default=None)
    p.add_argument("--time-limit-s", dest="time_limit_s", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dronenet",
        description="Probabilistic drone-station siting: surrogates, Gibbs-posterior "
                    "design, and cost/reliability reporting.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="schema-check a bundle and preview NFZ filtering")
    p.add_argument("bundle")
    p.add_argument("--out", default=None, help="also write validation.json + manifest here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="generate a deterministic synthetic region")
    p.add_argument("out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--incidents", type=int, default=None)
    p.add_argument("--candidates", type=int, default=None)
    p.add_argument("--existing", type=int, default=None)
    p.add_argument("--road-graph", action="store_true", dest="road_graph")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract-features",
                       help="compute route features from the bundle's road graph")
    p.add_argument("bundle")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract_features)

    p = sub.add_parser("fit", help="cross-validate surrogates on a dataset CSV")
    p.add_argument("--data", required=True,
                   help="CSV: response first column (raw scale), features after")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--models", default="lm",
                   help="comma list: lm, gp-gaussian-constant, gp-matern52-linear, ...")
    p.add_argument("--restarts", type=int, default=4, help="GP optimizer restarts")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("prior-check", help="prior-predictive active-site histogram")
    p.add_argument("bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--draws", type=int, default=100000)
    p.add_argument("--target-sites", type=float, default=None,
                   help="calibrate theta0 to this expected count")
    _add_design_overrides(p)
    p.set_defaults(func=cmd_prior_check)

    p = sub.add_parser("design", help="run the Gibbs-posterior MH design")
    p.add_argument("bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--beta", type=float, action="append",
                   help="inverse temperature (repeatable)")
    p.add_argument("--beta-grid", nargs=3, type=float, metavar=("MIN", "MAX", "COUNT"),
                   default=None)
    p.add_argument("--seasons", default="1,2,3,4")
    p.add_argument("--hours", default=",".join(str(h) for h in range(24)))
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--export-coverage", action="store_true", dest="export_coverage",
                   help="also write the k=0 coverage matrix per season")
    _add_design_overrides(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("report", help="post-hoc artifacts from a design run")
    p.add_argument("bundle")
    p.add_argument("--design", required=True, help="design output directory")
    p.add_argument("--out", required=True)
    p.add_argument("--posthoc-scenarios", type=int, default=None,
                   help="mission-simulation scenarios (default: config K)")
    p.add_argument("--double-shock-delay", action="store_true",
                   help="reproduce the literal double-counted shock delay")
    _add_design_overrides(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("reliability", help="robustness curve for a designed network")
    p.add_argument("bundle")
    p.add_argument("--design", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--replicates", type=int, default=None)
    _add_design_overrides(p)
    p.set_defaults(func=cmd_reliability)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DronenetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
