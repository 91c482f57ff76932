"""Command-line behavior: exit codes, printed values, byte-stable files."""

import json

import pytest

import bridgelab.montecarlo
from bridgelab.cli import EXIT_DOMAIN, EXIT_GATE, EXIT_IO, EXIT_OK, EXIT_USAGE, REGISTRY, main
from bridgelab.montecarlo import summarize


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


class TestOracle:
    def test_prints_the_integrated_deviation(self, capsys):
        assert main(["oracle", "wiener.expected_quad_dev", "--kind", "ir", "--b", "0", "--T", "1"]) == EXIT_OK
        assert capsys.readouterr().out == "0.166666666666667\n"

    def test_prints_a_region_letter(self, capsys):
        assert main(["oracle", "wiener.region", "--b-tilde", "0", "--d-tilde", "0"]) == EXIT_OK
        assert capsys.readouterr().out == "A\n"

    def test_prints_gaussian_laws_as_mean_and_variance(self, capsys):
        rc = main(["oracle", "wiener.deviation_law", "--kind", "av", "--t", "0.5", "--b", "1", "--T", "1"])
        assert rc == EXIT_OK
        assert capsys.readouterr().out == "-0.5 0.25\n"

    def test_prints_the_small_rate_crossing_time(self, capsys):
        assert main(["oracle", "ou.t_star", "--q", "1e-8", "--T", "1"]) == EXIT_OK
        assert capsys.readouterr().out == "0.5\n"

    def test_every_registry_id_names_its_inputs(self):
        for entry in REGISTRY.values():
            assert entry.required
            assert entry.formula

    def test_unknown_id_lists_the_known_ones(self, capsys):
        assert main(["oracle", "wiener.moment"]) == EXIT_USAGE
        err = capsys.readouterr().err
        assert "unknown statistic id" in err
        assert "wiener.bridge_mean" in err

    def test_missing_id_and_missing_flags_are_usage_errors(self, capsys):
        assert main(["oracle"]) == EXIT_USAGE
        assert main(["oracle", "wiener.corr_with_process", "--kind", "ir"]) == EXIT_USAGE
        assert "--t, --T" in capsys.readouterr().err

    def test_domain_failures_exit_three(self, capsys):
        assert main(["oracle", "wiener.bridge_cov", "--s", "0.5", "--t", "2", "--T", "1"]) == EXIT_DOMAIN
        assert "error:" in capsys.readouterr().err


class TestConfigMerge:
    def test_config_file_supplies_flags(self, workdir, capsys):
        cfg = workdir / "run.json"
        cfg.write_text(json.dumps({"kind": "ir", "b": 0.0, "T": 1.0}))
        assert main(["oracle", "wiener.expected_quad_dev", "--config", str(cfg)]) == EXIT_OK
        assert capsys.readouterr().out == "0.166666666666667\n"

    def test_explicit_flags_override_the_config(self, workdir, capsys):
        cfg = workdir / "run.json"
        cfg.write_text(json.dumps({"kind": "ir", "b": 0.0, "T": 1.0}))
        assert main(["oracle", "wiener.expected_quad_dev", "--config", str(cfg), "--kind", "av"]) == EXIT_OK
        assert capsys.readouterr().out == "0.333333333333333\n"

    def test_malformed_configs_are_usage_errors(self, workdir, capsys):
        bad = workdir / "bad.json"
        bad.write_text("{not json")
        assert main(["oracle", "wiener.region", "--config", str(bad)]) == EXIT_USAGE
        bad.write_text(json.dumps([1, 2]))
        assert main(["oracle", "wiener.region", "--config", str(bad)]) == EXIT_USAGE
        bad.write_text(json.dumps({"bb": 1.0}))
        assert main(["oracle", "wiener.region", "--config", str(bad)]) == EXIT_USAGE
        assert "unknown keys" in capsys.readouterr().err
        assert main(["oracle", "wiener.region", "--config", str(workdir / "absent.json")]) == EXIT_USAGE


class TestSimulate:
    def test_writes_paths_image_and_manifest(self, workdir, capsys):
        assert main(["simulate", "--steps", "8", "--reps", "2", "--b", "1", "--seed", "5"]) == EXIT_OK
        out = capsys.readouterr().out
        for name in ("paths.csv", "paths.png", "paths.manifest.json"):
            assert (workdir / name).exists()
            assert f"wrote {name}" in out
        header = (workdir / "paths.csv").read_text().splitlines()[0]
        assert header == "replicate,t,W,W_av,W_ir,W_st"

    def test_no_plot_skips_the_image(self, workdir):
        assert main(["simulate", "--steps", "8", "--no-plot"]) == EXIT_OK
        assert (workdir / "paths.csv").exists()
        assert not (workdir / "paths.png").exists()

    def test_curved_family_needs_a_rate(self, workdir):
        assert main(["simulate", "--process", "ou", "--steps", "8", "--no-plot"]) == EXIT_USAGE
        assert main(["simulate", "--process", "ou", "--q", "1.0", "--steps", "8", "--no-plot"]) == EXIT_OK
        header = (workdir / "paths.csv").read_text().splitlines()[0]
        assert header == "replicate,t,U,U_av,U_ir,U_st"

    def test_rate_flags_without_the_curved_process_are_rejected(self, workdir, capsys):
        assert main(["simulate", "--q", "-2.0", "--steps", "8", "--no-plot"]) == EXIT_USAGE
        assert "--process ou" in capsys.readouterr().err
        assert main(["simulate", "--sigma", "2.0", "--steps", "8", "--no-plot"]) == EXIT_USAGE
        assert not (workdir / "paths.csv").exists()

    def test_config_with_unknown_process_is_rejected(self, workdir, capsys):
        (workdir / "run.json").write_text(json.dumps({"process": "poisson", "steps": 8}))
        rc = main(["simulate", "--config", "run.json", "--no-plot"])
        assert rc == EXIT_USAGE
        assert "unknown process" in capsys.readouterr().err

    def test_conditioning_is_flat_family_only(self, workdir):
        assert main(["simulate", "--steps", "8", "--d", "0.5", "--no-plot"]) == EXIT_OK
        rc = main(["simulate", "--process", "ou", "--q", "1.0", "--steps", "8", "--d", "0.5", "--no-plot"])
        assert rc == EXIT_DOMAIN


class TestVerify:
    def test_small_suite_passes_and_records_a_report(self, workdir, capsys):
        rc = main(["verify", "--suite", "backends", "--seed", "9", "--reps", "100"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "suite backends: 3 gates, 0 failed" in out
        assert "report verify-backends.json" in out
        report = workdir / "verify-backends.json"
        payload = json.loads(report.read_text())
        assert payload["summary"] == {"gates": 3, "failures": []}
        assert "timestamp" not in report.read_text()
        assert (workdir / "verify-backends.manifest.json").exists()

    def test_reruns_are_byte_identical(self, workdir):
        args = ["verify", "--suite", "backends", "--seed", "9", "--reps", "100"]
        assert main([*args, "--out", "a.json"]) == EXIT_OK
        assert main([*args, "--out", "b.json"]) == EXIT_OK
        assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()

    def test_region_lattice_override(self, workdir, capsys):
        rc = main(["verify", "--suite", "regions", "--seed", "3", "--grid", "5", "--reps", "1000"])
        assert rc == EXIT_OK
        assert "suite regions:" in capsys.readouterr().out

    def test_failed_gates_exit_one(self, workdir, capsys, monkeypatch):
        rigged = {
            "suite": "backends",
            "master_seed": 0,
            "reports": [summarize("dev_mean", {"t": 0.5}, 5.0, 0.01, 1000, 0, oracle=1.0)],
        }
        monkeypatch.setattr(bridgelab.montecarlo, "run_suite", lambda *a, **k: rigged)
        assert main(["verify", "--suite", "backends"]) == EXIT_GATE
        out = capsys.readouterr().out
        assert "1 failed" in out
        assert "FAIL dev_mean" in out


class TestExport:
    def test_region_figure_without_plot(self, workdir, capsys):
        assert main(["export", "fig3", "--grid", "21", "--no-plot"]) == EXIT_OK
        out = capsys.readouterr().out
        written = [line.split(" ", 1)[1] for line in out.splitlines() if line.startswith("wrote ")]
        assert written
        for name in written:
            assert (workdir / name).exists()
        assert not list(workdir.glob("*.png"))

    def test_sample_figure_renders_an_image_by_default(self, workdir):
        assert main(["export", "fig2", "--steps", "16"]) == EXIT_OK
        assert list(workdir.glob("*.png"))
        assert (workdir / "fig2.manifest.json").exists()

    def test_figure_name_is_required_and_validated(self, workdir):
        assert main(["export"]) == EXIT_USAGE
        assert main(["export", "fig9"]) == EXIT_USAGE


class TestManifestReplay:
    def test_simulate_replay_matches(self, workdir, capsys):
        assert main(["simulate", "--steps", "8", "--reps", "2", "--seed", "5", "--no-plot"]) == EXIT_OK
        capsys.readouterr()
        assert main(["manifest", "replay", "paths.manifest.json"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "ok" in out
        assert "mismatch" not in out

    def test_export_replay_into_a_kept_directory(self, workdir, capsys):
        assert main(["export", "fig3", "--grid", "11", "--no-plot"]) == EXIT_OK
        capsys.readouterr()
        keep = workdir / "replayed"
        assert main(["manifest", "replay", "fig3.manifest.json", "--out", str(keep)]) == EXIT_OK
        assert (keep / "fig3.csv").exists()

    def test_tampered_digest_is_a_mismatch(self, workdir, capsys):
        assert main(["simulate", "--steps", "8", "--seed", "5", "--no-plot"]) == EXIT_OK
        record = workdir / "paths.manifest.json"
        raw = json.loads(record.read_text())
        name, digest = next(iter(raw["outputs"].items()))
        raw["outputs"][name] = ("0" if digest[0] != "0" else "1") + digest[1:]
        record.write_text(json.dumps(raw))
        capsys.readouterr()
        assert main(["manifest", "replay", "paths.manifest.json"]) == EXIT_GATE
        assert "mismatch" in capsys.readouterr().out

    def test_replay_usage_and_missing_files(self, workdir, capsys):
        assert main(["manifest"]) == EXIT_USAGE
        assert main(["manifest", "replay"]) == EXIT_USAGE
        assert main(["manifest", "replay", "absent.manifest.json"]) == EXIT_IO
