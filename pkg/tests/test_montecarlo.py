"""Gated estimators: report plumbing and estimates against the closed forms."""

import math

import numpy as np
import pytest

from bridgelab.errors import DomainError, UnsupportedOperationError
from bridgelab.montecarlo import (
    MIN_GRID_STEPS,
    MIN_REPLICATES,
    REGION_SPOT_POINTS,
    EstimateReport,
    backend_crosscheck,
    collect_reports,
    estimate_integrated,
    estimate_pointwise,
    pointwise_panel,
    region_grid_mc,
    region_map_mc,
    run_suite,
    summarize,
    variance_ordering_gaps,
)
from bridgelab.ou import ProcessParams
from bridgelab.wiener import BridgeSpec, expected_quad_dev

UNIT_SPEC = BridgeSpec(0.0, 1.0, 1.0, "av")
FLAT_SPEC = BridgeSpec(0.0, 0.0, 1.0, "av")


def make_report(**overrides):
    fields = dict(
        statistic="dev_mean",
        params={"t": 0.5},
        estimate=0.1,
        std_error=0.01,
        replicates=1000,
        master_seed=7,
    )
    fields.update(overrides)
    return EstimateReport(**fields)


class TestEstimateReport:
    def test_dict_form_carries_every_field(self):
        report = summarize("dev_mean", {"t": 0.5}, 0.1, 0.01, 1000, 7, oracle=0.11)
        payload = report.to_dict()
        assert set(payload) == {
            "statistic", "params", "estimate", "std_error", "replicates",
            "seed", "gate", "oracle", "z", "verdict", "bias_bound",
        }
        assert payload["verdict"] == "pass"
        assert payload["seed"] == 7

    def test_passed_tracks_the_verdict(self):
        assert make_report().passed
        assert summarize("s", {}, 0.0, 0.001, 1000, 0, oracle=1.0).passed is False

    def test_rejects_inconsistent_fields(self):
        with pytest.raises(DomainError):
            make_report(std_error=-1.0)
        with pytest.raises(DomainError):
            make_report(estimate=math.nan)
        with pytest.raises(DomainError):
            make_report(replicates=0)
        with pytest.raises(DomainError):
            make_report(gate=0.0)
        with pytest.raises(DomainError):
            make_report(verdict="maybe")
        with pytest.raises(DomainError):
            make_report(verdict="pass")
        with pytest.raises(DomainError):
            make_report(oracle=0.1)


class TestSummarize:
    def test_no_oracle_means_no_gate(self):
        report = summarize("s", {}, 0.5, 0.1, 1000, 0)
        assert report.verdict == "no-oracle"
        assert report.z_score is None
        assert report.passed

    def test_gate_passes_within_four_standard_errors(self):
        report = summarize("s", {}, 1.03, 0.01, 1000, 0, oracle=1.0)
        assert report.verdict == "pass"
        assert report.z_score == pytest.approx(3.0)

    def test_gate_fails_beyond_the_margin(self):
        report = summarize("s", {}, 1.05, 0.01, 1000, 0, oracle=1.0)
        assert report.verdict == "fail"
        assert report.z_score == pytest.approx(5.0)

    def test_bias_bound_widens_the_margin(self):
        report = summarize("s", {}, 1.05, 0.01, 1000, 0, oracle=1.0, bias_bound=0.02)
        assert report.verdict == "pass"

    def test_vanishing_error_suppresses_the_z_score(self):
        exact = summarize("s", {}, 1.0, 0.0, 1000, 0, oracle=1.0)
        assert exact.verdict == "pass"
        assert exact.z_score is None
        broken = summarize("s", {}, 2.0, 0.0, 1000, 0, oracle=1.0)
        assert broken.verdict == "fail"
        assert broken.z_score is None


class TestCollectReports:
    def test_flattens_leaves_and_merged_results(self):
        r1, r2, r3 = (make_report(estimate=float(i)) for i in range(3))
        leaf = {"suite": "x", "reports": [r1, r2]}
        merged = {"suite": "all", "suites": [leaf, {"suite": "y", "reports": [r3]}]}
        assert collect_reports(leaf) == [r1, r2]
        assert collect_reports(merged) == [r1, r2, r3]
        assert collect_reports({"suite": "empty"}) == []


class TestPointwise:
    def test_unconditional_panel_gates_every_statistic(self):
        reports = pointwise_panel("wiener", UNIT_SPEC, (0.5,), n_reps=5_000, master_seed=411)
        assert len(reports) == 15
        names = {r.statistic for r in reports}
        assert names == {"dev_mean", "dev_variance", "cov_with_process", "abs_dev_mean", "corr_with_process"}
        assert all(r.passed for r in reports)
        assert all(r.replicates == 5_000 for r in reports)

    def test_conditional_panel_handles_the_deterministic_construction(self):
        reports = pointwise_panel("wiener", UNIT_SPEC, (0.5,), d=0.3, n_reps=5_000, master_seed=412)
        assert {r.statistic for r in reports} == {"cond_dev_mean", "cond_dev_variance"}
        assert all(r.passed for r in reports)
        av_var = next(
            r for r in reports if r.statistic == "cond_dev_variance" and r.params["kind"] == "av"
        )
        assert av_var.oracle == 0.0
        assert abs(av_var.estimate) < 1e-20

    def test_single_kind_wrapper_matches_the_panel(self):
        single = estimate_pointwise("ir", "wiener", 0.25, UNIT_SPEC, n_reps=2_000, master_seed=413)
        assert len(single) == 5
        assert all(r.params["kind"] == "ir" for r in single)

    def test_rejects_bad_requests(self):
        with pytest.raises(DomainError):
            pointwise_panel("wiener", UNIT_SPEC, (0.5,), n_reps=MIN_REPLICATES - 1)
        with pytest.raises(DomainError):
            pointwise_panel("wiener", UNIT_SPEC, ())
        with pytest.raises(DomainError):
            pointwise_panel("wiener", UNIT_SPEC, (1.0,))
        with pytest.raises(DomainError):
            pointwise_panel("brownian", UNIT_SPEC, (0.5,))
        with pytest.raises(DomainError):
            pointwise_panel("wiener", UNIT_SPEC, (0.5,), params=ProcessParams(1.0))
        with pytest.raises(DomainError):
            pointwise_panel("ou", UNIT_SPEC, (0.5,))
        with pytest.raises(UnsupportedOperationError):
            pointwise_panel("ou", UNIT_SPEC, (0.5,), params=ProcessParams(1.0), d=0.3)


class TestIntegrated:
    def test_flat_quadratic_deviation_hits_the_closed_form(self):
        report = estimate_integrated("av", "wiener", FLAT_SPEC, n_reps=2_000, master_seed=421)
        assert report.statistic == "quad_dev"
        assert report.oracle == pytest.approx(1.0 / 3.0, rel=1e-15)
        assert report.passed
        assert report.bias_bound > 0.0

    def test_start_level_reduces_to_the_endpoint_difference(self):
        shifted = BridgeSpec(1.0, 1.0, 1.0, "av")
        report = estimate_integrated("ir", "wiener", shifted, n_reps=2_000, master_seed=422)
        assert report.oracle == pytest.approx(expected_quad_dev("ir", 0.0, 1.0), rel=1e-15)
        assert report.passed

    def test_matched_conditioning_is_exact_replicate_by_replicate(self):
        report = estimate_integrated("av", "wiener", FLAT_SPEC, d=0.0, n_reps=1_000, master_seed=423)
        assert report.statistic == "cond_quad_dev"
        assert report.estimate == 0.0
        assert report.std_error == 0.0
        assert report.oracle == 0.0
        assert report.z_score is None
        assert report.passed

    def test_curved_quadratic_deviation_passes(self):
        report = estimate_integrated(
            "st", "ou", UNIT_SPEC, params=ProcessParams(1.0), n_reps=2_000, master_seed=424
        )
        assert report.passed
        assert report.params["q"] == 1.0

    def test_rejects_fragile_settings(self):
        with pytest.raises(DomainError):
            estimate_integrated("av", "wiener", FLAT_SPEC, grid_n=MIN_GRID_STEPS - 1)
        with pytest.raises(DomainError):
            estimate_integrated("av", "wiener", FLAT_SPEC, n_reps=MIN_REPLICATES - 1)
        with pytest.raises(UnsupportedOperationError):
            estimate_integrated("av", "ou", FLAT_SPEC, params=ProcessParams(1.0), d=0.5)


class TestVarianceOrderingGaps:
    def test_gap_signs_follow_the_rate_sign(self):
        pos = variance_ordering_gaps(ProcessParams(1.0), UNIT_SPEC, 0.5, n_reps=20_000, master_seed=431)
        assert len(pos) == 3
        assert all(r.passed for r in pos)
        by_pair = {r.params["pair"]: r for r in pos}
        assert by_pair["av-ir"].oracle > 0.0
        assert by_pair["ir-st"].oracle < 0.0
        assert all(r.estimate * r.oracle > 0.0 for r in pos)

    def test_rejects_boundary_times(self):
        with pytest.raises(DomainError):
            variance_ordering_gaps(ProcessParams(1.0), UNIT_SPEC, 1.0, n_reps=2_000)


class TestRegions:
    def test_spot_points_reproduce_their_orderings(self):
        result = region_map_mc(n_reps=3_000, master_seed=441)
        assert len(result["points"]) == len(REGION_SPOT_POINTS)
        assert result["mismatches"] == []
        assert all(point["match"] for point in result["points"])
        letters = {point["letter"] for point in result["points"]}
        assert {"A", "B", "C", "D"} <= letters

    def test_boundary_and_near_boundary_points_are_refused(self):
        with pytest.raises(DomainError):
            region_map_mc(points=((0.0, 1.0),), n_reps=1_000)
        with pytest.raises(DomainError):
            region_map_mc(points=((0.0, 1.001),), n_reps=1_000)

    def test_lattice_sweep_matches_the_classifier(self):
        result = region_grid_mc(5, half_width=3.0, n_reps=1_000, master_seed=442)
        assert len(result["points"]) + len(result["skipped"]) == 25
        assert result["mismatches"] == []
        assert all(point["match"] for point in result["points"])
        assert all(entry["min_gap"] >= 0.0 for entry in result["skipped"])

    def test_rejects_tiny_budgets(self):
        with pytest.raises(DomainError):
            region_map_mc(n_reps=MIN_REPLICATES - 1)
        with pytest.raises(DomainError):
            region_grid_mc(1, n_reps=1_000)


class TestBackendCrosscheck:
    def test_flat_scheme_converges_to_the_exact_construction(self):
        result = backend_crosscheck("wiener", UNIT_SPEC, levels=(64, 128, 256), n_reps=60, master_seed=451)
        assert result["verdict"] == "pass"
        assert result["monotone"] is True
        assert result["zero_noise_max"] == 0.0
        assert result["rms"][0] > result["rms"][1] > result["rms"][2]
        assert all(rate > 0.0 for rate in result["rate"])

    def test_curved_scheme_converges_too(self):
        result = backend_crosscheck(
            "ou", UNIT_SPEC, params=ProcessParams(-1.0), levels=(64, 128, 256), n_reps=60, master_seed=452
        )
        assert result["verdict"] == "pass"
        assert result["q"] == -1.0

    def test_rejects_bad_level_ladders(self):
        with pytest.raises(DomainError):
            backend_crosscheck("wiener", UNIT_SPEC, levels=(256,))
        with pytest.raises(DomainError):
            backend_crosscheck("wiener", UNIT_SPEC, levels=(256, 128))
        with pytest.raises(DomainError):
            backend_crosscheck("wiener", UNIT_SPEC, levels=(100, 256))
        with pytest.raises(DomainError):
            backend_crosscheck("wiener", UNIT_SPEC, levels=(64, 128), n_reps=10)


class TestSuites:
    def test_unknown_suite_is_refused(self):
        with pytest.raises(DomainError):
            run_suite("everything")

    def test_replicate_override_rescales_a_suite(self):
        result = run_suite("wiener-unconditional", master_seed=1101, n_reps=2_000)
        assert result["suite"] == "wiener-unconditional"
        reports = collect_reports(result)
        assert max(r.replicates for r in reports) == 2_000
        assert all(r.passed for r in reports)

    def test_region_suite_uses_the_spot_points(self):
        result = run_suite("regions", master_seed=1404, n_reps=1_200)
        assert result["suite"] == "regions"
        assert result["mismatches"] == []
        assert len(result["points"]) == len(REGION_SPOT_POINTS)

    def test_backend_suite_reports_crosschecks(self):
        result = run_suite("backends", master_seed=1505, scale=0.25)
        assert result["suite"] == "backends"
        assert len(result["crosschecks"]) == 3
        assert all(c["verdict"] == "pass" for c in result["crosschecks"])
        assert all(r.passed for r in collect_reports(result))


class TestThreading:
    def test_worker_count_does_not_change_the_estimates(self, monkeypatch):
        def run():
            return pointwise_panel("wiener", UNIT_SPEC, (0.5,), n_reps=30_000, master_seed=461)

        monkeypatch.delenv("BRIDGELAB_THREADS", raising=False)
        serial = [r.to_dict() for r in run()]
        monkeypatch.setenv("BRIDGELAB_THREADS", "3")
        threaded = [r.to_dict() for r in run()]
        assert serial == threaded

    def test_invalid_worker_count_is_refused(self, monkeypatch):
        for raw in ("0", "many"):
            monkeypatch.setenv("BRIDGELAB_THREADS", raw)
            with pytest.raises(DomainError):
                pointwise_panel("wiener", UNIT_SPEC, (0.5,), n_reps=1_000, master_seed=462)
