import numpy as np
import pytest

from dronenet.designer import SiteRecord
from dronenet.demand import IncidentRecord
from dronenet.exceptions import SchemaError
from dronenet.flight import NoFlyZone
from dronenet.region import (
    AppConfig,
    RegionBundle,
    SyntheticSpec,
    apply_nfz,
    config_from_toml,
    config_to_toml,
    load_bundle,
    save_bundle,
    simulate_region,
    validate_bundle,
)


def tiny_bundle():
    sites = [
        SiteRecord(id="ems0", easting=100.0, northing=100.0, elevation=10.0,
                   is_new=0, cost=9500.0, pop_density=2.0, dist_to_infra=0.0),
        SiteRecord(id="new0", easting=900.0, northing=900.0, elevation=12.0,
                   is_new=1, cost=14000.0, pop_density=0.8, dist_to_infra=1131.4),
    ]
    incidents = [
        IncidentRecord(id="i0", easting=120.0, northing=80.0, elevation=9.0, hour=4,
                       comp_time=5.0, big_intsects=2.0, mid_intsects=3.0, turns=4.0,
                       pop_dense=1.5, length=3.3, rec_time=7.7),
        IncidentRecord(id="i1", easting=880.0, northing=910.0, elevation=11.0,
                       hour=15, comp_time=8.0, big_intsects=1.0, mid_intsects=0.0,
                       turns=2.0, pop_dense=0.5, length=6.1, rec_time=None),
    ]
    zones = [NoFlyZone.circle((0.0, 0.0), 50.0)]
    return RegionBundle(sites=sites, incidents=incidents, zones=zones)


class TestConfigToml:
    def test_round_trip(self):
        cfg = AppConfig()
        text = config_to_toml(cfg)
        cfg2 = config_from_toml(text)
        assert cfg2.design == cfg.design
        assert cfg2.costs == cfg.costs
        assert cfg2.reliability == cfg.reliability

    def test_sections_parsed(self):
        text = """
[design]
beta = 12.5
lambda = 7.0
scenarios = 42

[prior]
theta0 = -2.0
d_thresh = 2500.0

[costs]
per_mission = 25.0

[reliability]
q_new = 0.2
"""
        cfg = config_from_toml(text)
        assert cfg.design.beta == 12.5
        assert cfg.design.lam == 7.0
        assert cfg.design.scenarios == 42
        assert cfg.design.theta0 == -2.0
        assert cfg.design.d_thresh == 2500.0
        assert cfg.costs.per_mission == 25.0
        assert cfg.reliability.q_new == 0.2

    def test_unknown_key_rejected(self):
        with pytest.raises(SchemaError):
            config_from_toml("[design]\nbogus = 1\n")

    def test_bad_value_rejected(self):
        with pytest.raises(SchemaError):
            config_from_toml("[design]\ntau = 2.0\n")

    def test_bad_toml_rejected(self):
        with pytest.raises(SchemaError):
            config_from_toml("[design\nbeta = 1")


class TestBundleIO:
    def test_save_load_preserves_values(self, tmp_path):
        bundle = tiny_bundle()
        save_bundle(bundle, tmp_path / "b")
        loaded = load_bundle(tmp_path / "b")
        assert loaded.sites == bundle.sites
        assert loaded.incidents == bundle.incidents
        assert loaded.zones == bundle.zones

    def test_round_trip_bytes_identical(self, tmp_path):
        bundle = tiny_bundle()
        d1 = save_bundle(bundle, tmp_path / "b1")
        d2 = save_bundle(load_bundle(d1), tmp_path / "b2")
        for name in sorted(p.name for p in d1.iterdir()):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name

    def test_missing_required_file(self, tmp_path):
        (tmp_path / "sites.csv").write_text("id,easting\n")
        with pytest.raises(SchemaError):
            load_bundle(tmp_path)

    def test_missing_column_diagnosed(self, tmp_path):
        save_bundle(tiny_bundle(), tmp_path)
        (tmp_path / "sites.csv").write_text("id,easting\nems0,1.0\n")
        with pytest.raises(SchemaError) as err:
            load_bundle(tmp_path)
        assert "missing columns" in str(err.value)

    def test_non_numeric_cell_diagnosed(self, tmp_path):
        save_bundle(tiny_bundle(), tmp_path)
        text = (tmp_path / "incidents.csv").read_text().splitlines()
        text[1] = text[1].replace("5.0", "soon", 1)
        (tmp_path / "incidents.csv").write_text("\n".join(text) + "\n")
        with pytest.raises(SchemaError) as err:
            load_bundle(tmp_path)
        assert "row 2" in str(err.value)

    def test_elevation_override_file(self, tmp_path):
        save_bundle(tiny_bundle(), tmp_path)
        (tmp_path / "elevations.csv").write_text(
            "id,elevation\nems0,99.0\ni0,55.0\n")
        loaded = load_bundle(tmp_path)
        assert loaded.sites[0].elevation == 99.0
        assert loaded.incidents[0].elevation == 55.0
        assert loaded.sites[1].elevation == 12.0  # untouched


class TestValidation:
    def test_valid_bundle_reports_counts(self):
        report = validate_bundle(tiny_bundle())
        assert report["sites"] == 2 and report["incidents"] == 2
        assert report["sites_excluded"] == 0
        assert report["surrogates"]["wind"] == "default"

    def test_duplicate_site_id(self):
        bundle = tiny_bundle()
        bundle.sites.append(bundle.sites[0])
        with pytest.raises(SchemaError):
            validate_bundle(bundle)

    def test_duplicate_incident_id(self):
        bundle = tiny_bundle()
        bundle.incidents.append(bundle.incidents[0])
        with pytest.raises(SchemaError):
            validate_bundle(bundle)

    def test_empty_incidents(self):
        bundle = tiny_bundle()
        bundle.incidents = []
        with pytest.raises(SchemaError):
            validate_bundle(bundle)

    def test_nfz_preview_counts(self):
        bundle = tiny_bundle()
        bundle.zones = [NoFlyZone.circle((120.0, 80.0), 10.0)]
        report = validate_bundle(bundle)
        assert report["incidents_excluded"] == 1
        assert report["excluded_incident_ids"] == ["i0"]

    def test_apply_nfz_filters_both_tables(self):
        # zone covers site ems0 and incident i0 (28.3 m from the center)
        bundle = tiny_bundle()
        bundle.zones = [NoFlyZone.circle((100.0, 100.0), 30.0)]
        sites, incidents, rep = apply_nfz(bundle)
        assert [s.id for s in sites] == ["new0"]
        assert rep["sites_excluded"] == 1
        assert [r.id for r in incidents] == ["i1"]
        assert rep["excluded_incident_ids"] == ["i0"]


class TestSynthetic:
    def test_ggc_scale_defaults(self):
        spec = SyntheticSpec(seed=1)
        bundle = simulate_region(spec)
        assert len(bundle.sites) == 45
        assert sum(1 for s in bundle.sites if not s.is_new) == 9
        assert len(bundle.incidents) == 600
        assert bundle.wind_model is not None
        assert bundle.meta["spec"]["seed"] == 1

    def test_deterministic_regeneration(self, tmp_path):
        d1 = save_bundle(simulate_region(SyntheticSpec(seed=11)), tmp_path / "a")
        d2 = save_bundle(simulate_region(SyntheticSpec(seed=11)), tmp_path / "b")
        for name in sorted(p.name for p in d1.iterdir()):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name

    def test_different_seeds_differ(self):
        b1 = simulate_region(SyntheticSpec(seed=1, n_incidents=50))
        b2 = simulate_region(SyntheticSpec(seed=2, n_incidents=50))
        assert b1.incidents[0].easting != b2.incidents[0].easting

    def test_clusters_populated(self):
        bundle = simulate_region(SyntheticSpec(seed=5))
        counts = bundle.meta["ground_truth"]["cluster_counts"]
        assert len(counts) == 3  # two urban clusters + rural remainder
        assert all(c > 0 for c in counts)
        # urban clusters dominate
        assert counts[0] + counts[1] > counts[2]

    def test_incident_density_bimodal_east_axis(self):
        spec = SyntheticSpec(seed=9)
        bundle = simulate_region(spec)
        eastings = np.array([r.easting for r in bundle.incidents])
        hist, edges = np.histogram(eastings, bins=20)
        centers = 0.5 * (edges[:-1] + edges[1:])
        c1, c2 = spec.clusters[0][0], spec.clusters[1][0]
        near1 = hist[np.argmin(np.abs(centers - c1))]
        near2 = hist[np.argmin(np.abs(centers - c2))]
        midpoint = hist[np.argmin(np.abs(centers - (c1 + c2) / 2))]
        assert near1 > midpoint and near2 > midpoint

    def test_existing_count_validated(self):
        with pytest.raises(ValueError):
            SyntheticSpec(n_candidates=5, n_existing=9)

    def test_road_graph_generated_when_requested(self):
        bundle = simulate_region(SyntheticSpec(seed=2, include_road_graph=True,
                                               n_incidents=20))
        assert bundle.graph is not None
        assert len(bundle.graph.nodes) == 36
        degrees = list(bundle.graph.degree.values())
        assert max(degrees) == 4 and min(degrees) == 2

    def test_rec_time_present_and_positive(self):
        bundle = simulate_region(SyntheticSpec(seed=3, n_incidents=40))
        recs = [r.rec_time for r in bundle.incidents]
        assert all(t is not None and t > 0 for t in recs)


def test_wind_model_files_written_and_loadable(tmp_path):
    bundle = simulate_region(SyntheticSpec(seed=4, n_incidents=10))
    out = save_bundle(bundle, tmp_path / "b")
    assert (out / "wind_speed_model.json").exists()
    loaded = load_bundle(out)
    assert loaded.wind_model is not None
    dist, _ = loaded.wind_model.predictive((252000.0, 656000.0), 1)
    assert np.isfinite(dist.mu)
