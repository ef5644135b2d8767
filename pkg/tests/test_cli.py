import hashlib
import json
import time
from pathlib import Path

import numpy as np
import pytest

from dronenet.cli import main


@pytest.fixture(scope="module")
def small_bundle(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    bundle_dir = root / "region"
    rc = main(["simulate", str(bundle_dir), "--seed", "5", "--incidents", "80",
               "--candidates", "16", "--existing", "5", "--road-graph"])
    assert rc == 0
    return bundle_dir


def tree_bytes(root: Path, suffixes=(".csv", ".json")) -> dict:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.suffix in suffixes
    }


class TestSimulateValidate:
    def test_simulate_writes_manifest(self, small_bundle):
        manifest = json.loads((small_bundle / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == 5
        assert "dronenet" in manifest["versions"]

    def test_validate_ok(self, small_bundle, capsys):
        assert main(["validate", str(small_bundle)]) == 0
        out = capsys.readouterr().out
        assert "retained" in out
        report = json.loads(out[:out.rindex("}") + 1])
        assert "inputs" in report["manifest"]

    def test_validate_out_writes_files(self, small_bundle, tmp_path):
        assert main(["validate", str(small_bundle), "--out",
                     str(tmp_path / "v")]) == 0
        assert (tmp_path / "v" / "validation.json").exists()
        assert (tmp_path / "v" / "manifest.json").exists()

    def test_validate_duplicate_id_exit_code_2(self, small_bundle, tmp_path, capsys):
        import shutil

        broken = tmp_path / "broken"
        shutil.copytree(small_bundle, broken)
        lines = (broken / "sites.csv").read_text().splitlines()
        lines.append(lines[1])  # duplicate first site row
        (broken / "sites.csv").write_text("\n".join(lines) + "\n")
        assert main(["validate", str(broken)]) == 2

    def test_validate_empty_incidents_exit_code_2(self, small_bundle, tmp_path):
        import shutil

        broken = tmp_path / "empty"
        shutil.copytree(small_bundle, broken)
        header = (broken / "incidents.csv").read_text().splitlines()[0]
        (broken / "incidents.csv").write_text(header + "\n")
        assert main(["validate", str(broken)]) == 2


class TestDesignReport:
    def test_design_smoke_under_ten_seconds_at_full_scale(self, tmp_path):
        # the 45-candidate / 600-incident fixture, K=2, N=10
        bundle = tmp_path / "full"
        assert main(["simulate", str(bundle), "--seed", "0"]) == 0
        start = time.monotonic()
        rc = main(["design", str(bundle), "--out", str(tmp_path / "des"),
                   "--beta", "6", "--scenarios", "2", "--iterations", "10",
                   "--seed", "1"])
        elapsed = time.monotonic() - start
        assert rc == 0
        assert elapsed < 10.0
        assert (tmp_path / "des" / "beta_6" / "traces" / "s1_h0.csv").exists()
        assert (tmp_path / "des" / "scenarios.csv").exists()

    def test_beta_grid_expands_to_equidistant_points(self, small_bundle, tmp_path):
        out = tmp_path / "grid"
        rc = main(["design", str(small_bundle), "--out", str(out),
                   "--beta-grid", "5", "25", "11", "--scenarios", "1",
                   "--iterations", "2", "--seed", "0", "--hours", "0",
                   "--seasons", "1"])
        assert rc == 0
        dirs = sorted(p.name for p in out.glob("beta_*"))
        assert len(dirs) == 11
        betas = sorted(float(d.split("_")[1]) for d in dirs)
        assert betas[0] == 5.0 and betas[-1] == 25.0
        assert betas[1] - betas[0] == pytest.approx(2.0)
        scen = (out / "scenarios.csv").read_text().splitlines()
        assert scen[0] == "season,k,site_id,speed_ms,direction_deg"

    def test_resume_is_idempotent(self, small_bundle, tmp_path):
        out = tmp_path / "des"
        args = ["design", str(small_bundle), "--out", str(out), "--beta", "4",
                "--scenarios", "2", "--iterations", "8", "--seed", "2"]
        assert main(args) == 0
        before = tree_bytes(out)
        trace = out / "beta_4" / "traces" / "s1_h0.csv"
        mtime = trace.stat().st_mtime_ns
        assert main(args) == 0  # second run skips completed betas
        assert tree_bytes(out) == before
        assert trace.stat().st_mtime_ns == mtime

    def test_design_report_deterministic(self, small_bundle, tmp_path):
        outputs = []
        for run in ("one", "two"):
            droot = tmp_path / run
            rc = main(["design", str(small_bundle), "--out", str(droot / "des"),
                       "--beta", "5", "--beta", "12", "--scenarios", "3",
                       "--iterations", "15", "--seed", "7",
                       "--hours", "0,6,12,18"])
            assert rc == 0
            rc = main(["report", str(small_bundle), "--design", str(droot / "des"),
                       "--out", str(droot / "rep"), "--posthoc-scenarios", "6"])
            assert rc == 0
            blobs = tree_bytes(droot / "des")
            rep = {k: v for k, v in tree_bytes(droot / "rep").items()
                   if k != "manifest.json"}  # manifest embeds the --design path
            outputs.append((blobs, rep))
        assert outputs[0] == outputs[1]

    def test_report_artifacts_exist(self, small_bundle, tmp_path):
        droot = tmp_path
        assert main(["design", str(small_bundle), "--out", str(droot / "des"),
                     "--beta", "8", "--scenarios", "2", "--iterations", "12",
                     "--seed", "3", "--hours", "0,12"]) == 0
        assert main(["report", str(small_bundle), "--design", str(droot / "des"),
                     "--out", str(droot / "rep"), "--posthoc-scenarios", "4"]) == 0
        bdir = droot / "rep" / "beta_8"
        for name in ("activation.csv", "activation_summary.json", "cost_report.json",
                     "cost_report.csv", "reliability.csv", "coverage_table.csv",
                     "seasonal_sites.csv", "activation_s1.svg", "reliability.svg"):
            assert (bdir / name).exists(), name
        assert (droot / "rep" / "best_beta.json").exists()
        table = (bdir / "coverage_table.csv").read_text().splitlines()
        assert table[0] == ("response,calls,total_calls,mean_minutes,"
                            "pct_within_6,pct_within_8")
        seasonal = (bdir / "seasonal_sites.csv").read_text().splitlines()
        assert seasonal[0] == "season,selected_sites,mean_wind_ms"
        assert len(seasonal) == 5

    def test_reliability_command(self, small_bundle, tmp_path):
        assert main(["design", str(small_bundle), "--out", str(tmp_path / "des"),
                     "--beta", "9", "--scenarios", "2", "--iterations", "10",
                     "--seed", "4", "--hours", "0"]) == 0
        assert main(["reliability", str(small_bundle), "--design",
                     str(tmp_path / "des"), "--out", str(tmp_path / "rel"),
                     "--replicates", "10"]) == 0
        lines = (tmp_path / "rel" / "reliability.csv").read_text().splitlines()
        assert lines[0] == "m_failures,expected_coverage,mc_se"
        last = lines[-1].split(",")
        assert float(last[1]) == 0.0  # all active stations down


class TestSeedPrecedence:
    def test_env_var_overrides_config(self, small_bundle, tmp_path, monkeypatch):
        monkeypatch.setenv("DRONENET_SEED", "99")
        assert main(["design", str(small_bundle), "--out", str(tmp_path / "d1"),
                     "--beta", "5", "--scenarios", "2", "--iterations", "5",
                     "--hours", "0", "--seasons", "1"]) == 0
        manifest = json.loads((tmp_path / "d1" / "manifest.json").read_text())
        assert manifest["seed"] == 99

    def test_cli_flag_beats_env_var(self, small_bundle, tmp_path, monkeypatch):
        monkeypatch.setenv("DRONENET_SEED", "99")
        assert main(["design", str(small_bundle), "--out", str(tmp_path / "d2"),
                     "--beta", "5", "--scenarios", "2", "--iterations", "5",
                     "--seed", "123", "--hours", "0", "--seasons", "1"]) == 0
        manifest = json.loads((tmp_path / "d2" / "manifest.json").read_text())
        assert manifest["seed"] == 123


class TestExtractFeatures:
    def test_features_written_for_all_reachable(self, small_bundle, tmp_path):
        out = tmp_path / "features.csv"
        assert main(["extract-features", str(small_bundle), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("id,easting,northing,elevation,hour,comp_time")
        assert len(lines) == 81  # header + 80 incidents (grid graph is connected)

    def test_hand_checked_line_fixture(self, tmp_path):
        # two facilities, one incident: nearest is b (60 s), path features known
        (tmp_path / "sites.csv").write_text(
            "id,easting,northing,elevation,is_new,cost,pop_density,dist_to_infra\n"
            "f0,0.0,0.0,0.0,0,9000.0,1.0,0.0\n"
            "f1,1150.0,0.0,0.0,0,9000.0,1.0,0.0\n")
        (tmp_path / "incidents.csv").write_text(
            "id,easting,northing,elevation,hour,comp_time,big_intsects,"
            "mid_intsects,turns,pop_dense,length,rec_time\n"
            "i0,620.0,0.0,0.0,10,0.0,0.0,0.0,0.0,0.0,0.0,6.0\n")
        (tmp_path / "nodes.csv").write_text(
            "id,easting,northing\na,0.0,0.0\nb,600.0,0.0\nc,1200.0,0.0\n")
        (tmp_path / "edges.csv").write_text(
            "u,v,length_m,maxspeed_ms,azimuth_rad,pop_density\n"
            "a,b,600.0,10.0,0.5,2.0\nb,c,600.0,10.0,-0.3,4.0\n")
        out = tmp_path / "f.csv"
        assert main(["extract-features", str(tmp_path), "--out", str(out)]) == 0
        row = out.read_text().splitlines()[1].split(",")
        # incident snaps to node b; facility f1 snaps to c (60 s away),
        # facility f0 snaps to a (60 s away): tie broken to f0 (lowest index)
        assert row[0] == "i0"
        assert float(row[5]) == pytest.approx(1.0)   # comp_time minutes
        assert float(row[8]) == pytest.approx(0.5)   # |azimuth| of edge a-b
        assert float(row[10]) == pytest.approx(0.6)  # km
        assert float(row[11]) == pytest.approx(6.0)  # rec_time preserved

    def test_missing_graph_is_schema_error(self, tmp_path):
        from dronenet.region import SyntheticSpec, save_bundle, simulate_region

        bundle = simulate_region(SyntheticSpec(seed=0, n_incidents=5))
        save_bundle(bundle, tmp_path / "nog")
        assert main(["extract-features", str(tmp_path / "nog"), "--out",
                     str(tmp_path / "x.csv")]) == 2


class TestFitAndPriorCheck:
    def test_fit_writes_cv_table(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(60, 2))
        y = np.exp(0.6 + 0.4 * X[:, 0] + rng.normal(0, 0.05, 60))
        lines = ["resp,a,b"] + [
            f"{float(y[i])!r},{float(X[i, 0])!r},{float(X[i, 1])!r}"
            for i in range(60)]
        data = tmp_path / "data.csv"
        data.write_text("\n".join(lines) + "\n")
        out = tmp_path / "cv.csv"
        assert main(["fit", "--data", str(data), "--folds", "5", "--models", "lm",
                     "--out", str(out)]) == 0
        table = out.read_text().splitlines()
        assert table[0].startswith("model,r2_mean")
        rows = {line.split(",")[0] for line in table[1:]}
        assert rows == {"baseline", "lm"}

    def test_fit_rejects_nonpositive_response(self, tmp_path):
        data = tmp_path / "bad.csv"
        data.write_text("resp,a\n1.0,2.0\n-3.0,1.0\n")
        assert main(["fit", "--data", str(data), "--folds", "2", "--models", "lm",
                     "--out", str(tmp_path / "o.csv")]) == 2

    def test_rank_deficient_data_exits_3(self, tmp_path):
        # duplicated feature column: OLS design is singular
        rows = ["resp,a,b"]
        for i in range(12):
            rows.append(f"{1.0 + 0.1 * i},{float(i)!r},{float(i)!r}")
        data = tmp_path / "collinear.csv"
        data.write_text("\n".join(rows) + "\n")
        assert main(["fit", "--data", str(data), "--folds", "3", "--models", "lm",
                     "--out", str(tmp_path / "o.csv")]) == 3

    def test_prior_check_outputs(self, small_bundle, tmp_path, capsys):
        assert main(["prior-check", str(small_bundle), "--out",
                     str(tmp_path / "pc"), "--draws", "20000"]) == 0
        payload = json.loads((tmp_path / "pc" / "prior_check.json").read_text())
        assert payload["empirical_mean"] == pytest.approx(
            payload["analytic_mean"], rel=0.05)
        assert (tmp_path / "pc" / "prior_predictive.svg").exists()

    def test_prior_check_target_calibration(self, small_bundle, tmp_path):
        assert main(["prior-check", str(small_bundle), "--out",
                     str(tmp_path / "pc2"), "--draws", "40000",
                     "--target-sites", "6"]) == 0
        payload = json.loads((tmp_path / "pc2" / "prior_check.json").read_text())
        assert payload["analytic_mean"] == pytest.approx(6.0, abs=1e-6)
