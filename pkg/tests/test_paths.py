"""Sampled paths: determinism, exact pinning, marginal laws, conditioning."""

import io
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bridgelab.errors import DomainError, UnsupportedOperationError
from bridgelab.ou import (
    ProcessParams,
    TimeChange,
    ou_bridge_cov,
    ou_bridge_mean,
    ou_deviation_law,
    ou_process_cov,
)
from bridgelab.paths import (
    SeedSpec,
    TimeGrid,
    condition_on_endpoint,
    dump_paths_csv,
    euler_bridge,
    gen_wiener,
    gen_wiener_block,
    grid_increments,
    ou_transform_times,
    simulate_ou_bridges,
    simulate_wiener_bridges,
    st_transform_times,
)
from bridgelab.wiener import BridgeSpec, bridge_cov, cond_deviation_law, deviation_law

KINDS = ("av", "ir", "st")
N_REPS = 20_000


def small_bundle(b=1.0, seed=8101, reps=12, n=32):
    grid = TimeGrid.uniform(1.0, n)
    spec = BridgeSpec(0.0, b, 1.0, "av")
    return simulate_wiener_bridges(grid, spec, seed, np.arange(reps)), spec


@pytest.fixture(scope="module")
def flat():
    grid = TimeGrid.uniform(1.0, 16)
    spec = BridgeSpec(0.0, 1.0, 1.0, "av")
    return simulate_wiener_bridges(grid, spec, 30301, np.arange(N_REPS)), spec


@pytest.fixture(scope="module")
def curved():
    grid = TimeGrid.uniform(1.0, 16)
    params = ProcessParams(1.0, 1.0)
    spec = BridgeSpec(0.0, 0.5, 1.0, "av")
    return simulate_ou_bridges(grid, params, spec, 30302, np.arange(N_REPS)), TimeChange(params, 1.0), spec


class TestTimeGrid:
    def test_uniform_grid_spans_zero_to_horizon(self):
        grid = TimeGrid.uniform(2.0, 8)
        assert grid.points[0] == 0.0
        assert grid.points[-1] == 2.0
        assert grid.T == 2.0
        assert grid.n_steps == 8
        assert_allclose(np.diff(grid.points), 0.25)

    def test_rejects_degenerate_inputs(self):
        with pytest.raises(DomainError):
            TimeGrid(np.array([0.0]))
        with pytest.raises(DomainError):
            TimeGrid(np.array([[0.0, 1.0]]))
        with pytest.raises(DomainError):
            TimeGrid(np.array([0.5, 1.0]))
        with pytest.raises(DomainError):
            TimeGrid(np.array([0.0, 1.0, 1.0]))
        with pytest.raises(DomainError):
            TimeGrid(np.array([0.0, math.inf]))
        with pytest.raises(DomainError):
            TimeGrid.uniform(0.0, 4)
        with pytest.raises(DomainError):
            TimeGrid.uniform(1.0, 0)

    def test_points_are_read_only(self):
        grid = TimeGrid.uniform(1.0, 4)
        with pytest.raises(ValueError):
            grid.points[1] = 9.0


class TestSeedSpec:
    def test_accepts_valid_addresses(self):
        SeedSpec(0, 0)
        SeedSpec(2**64 - 1, 10)

    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            SeedSpec(2**64, 0)
        with pytest.raises(DomainError):
            SeedSpec(-1, 0)
        with pytest.raises(DomainError):
            SeedSpec(3, -1)


class TestTransformTimes:
    def test_flat_transform_matches_ratio_map(self):
        grid = TimeGrid.uniform(2.0, 8)
        interior = grid.points[1:-1]
        assert_allclose(st_transform_times(grid), interior * 2.0 / (2.0 - interior), rtol=1e-15)

    def test_transform_times_increase(self):
        grid = TimeGrid.uniform(1.0, 16)
        for times in (st_transform_times(grid), ou_transform_times(grid, TimeChange(ProcessParams(1.5, 1.0), 1.0))):
            assert (np.diff(times) > 0.0).all()

    def test_clock_transform_needs_matching_horizon(self):
        grid = TimeGrid.uniform(1.0, 8)
        with pytest.raises(DomainError):
            ou_transform_times(grid, TimeChange(ProcessParams(1.0, 1.0), 2.0))

    def test_clock_transform_has_flat_limit(self):
        grid = TimeGrid.uniform(1.0, 8)
        tc = TimeChange(ProcessParams(1e-4, 1.0), 1.0)
        assert_allclose(ou_transform_times(grid, tc), st_transform_times(grid), rtol=1e-3)


class TestDeterminism:
    def test_same_seed_reproduces_every_array(self):
        one, _ = small_bundle(seed=4242)
        two, _ = small_bundle(seed=4242)
        assert np.array_equal(one.dw, two.dw)
        assert np.array_equal(one.aux_z, two.aux_z)
        for kind in KINDS:
            assert np.array_equal(one.derived[kind], two.derived[kind])

    def test_different_seeds_differ(self):
        one, _ = small_bundle(seed=4242)
        two, _ = small_bundle(seed=4243)
        assert not np.array_equal(one.dw, two.dw)

    def test_replicates_do_not_depend_on_batch_boundaries(self):
        grid = TimeGrid.uniform(1.0, 16)
        spec = BridgeSpec(0.0, 1.0, 1.0, "av")
        full = simulate_wiener_bridges(grid, spec, 77, np.arange(8))
        part = simulate_wiener_bridges(grid, spec, 77, [3, 4])
        assert np.array_equal(full.dw[3:5], part.dw)
        for kind in KINDS:
            assert np.array_equal(full.derived[kind][3:5], part.derived[kind])

    def test_single_replicate_matches_block_row(self):
        grid = TimeGrid.uniform(1.0, 8)
        ext = st_transform_times(grid)
        block = gen_wiener_block(grid, ext, 99, [0, 1, 2])
        one = gen_wiener(grid, ext, SeedSpec(99, 2))
        assert np.array_equal(block.dw[2:3], one.dw)
        assert np.array_equal(block.aux_z[2:3], one.aux_z)

    def test_rejects_empty_or_negative_replicates(self):
        grid = TimeGrid.uniform(1.0, 4)
        with pytest.raises(DomainError):
            gen_wiener_block(grid, st_transform_times(grid), 1, [])
        with pytest.raises(DomainError):
            gen_wiener_block(grid, st_transform_times(grid), 1, [-1])


class TestBridgeConstruction:
    def test_every_construction_pins_both_endpoints(self):
        bundle, spec = small_bundle(b=2.0)
        for kind in KINDS:
            path = bundle.derived[kind]
            assert (path[:, 0] == spec.a).all()
            assert (path[:, -1] == spec.b).all()

    def test_driver_starts_at_zero(self):
        bundle, _ = small_bundle()
        assert (bundle.process[:, 0] == 0.0).all()
        assert (bundle.w[:, 0] == 0.0).all()

    def test_grid_increments_telescope_to_the_driver(self):
        bundle, _ = small_bundle()
        inc = grid_increments(bundle)
        assert inc.shape == (bundle.n_replicates, bundle.grid.n_steps)
        assert_allclose(inc.sum(axis=1), bundle.w[:, -1], atol=1e-12)

    def test_horizon_mismatch_is_rejected(self):
        grid = TimeGrid.uniform(1.0, 8)
        with pytest.raises(DomainError):
            simulate_wiener_bridges(grid, BridgeSpec(0.0, 1.0, 2.0, "av"), 5, [0])

    def test_ou_constructions_pin_endpoints(self):
        grid = TimeGrid.uniform(1.0, 32)
        params = ProcessParams(-1.5, 1.0)
        spec = BridgeSpec(0.25, 1.5, 1.0, "av")
        bundle = simulate_ou_bridges(grid, params, spec, 8202, np.arange(8))
        for kind in KINDS:
            path = bundle.derived[kind]
            assert (path[:, 0] == spec.a).all()
            assert (path[:, -1] == spec.b).all()
        assert (bundle.process[:, 0] == spec.a).all()


class TestMarginalLaws:
    """Sampled values are exact in law at grid times, so moments at a fixed
    time must sit within Monte Carlo error of the closed forms."""

    def _check_moments(self, sample, mean, variance):
        n = sample.size
        se_mean = sample.std(ddof=1) / math.sqrt(n)
        assert abs(sample.mean() - mean) < 4.5 * se_mean
        se_var = variance * math.sqrt(2.0 / (n - 1))
        assert abs(sample.var(ddof=1) - variance) < 5.0 * se_var

    def test_flat_bridge_marginals_share_one_law(self, flat):
        bundle, spec = flat
        idx = 8
        t = float(bundle.grid.points[idx])
        var = bridge_cov(t, t, spec.T)
        mean = spec.a + (spec.b - spec.a) * t / spec.T
        for kind in KINDS:
            self._check_moments(bundle.derived[kind][:, idx], mean, var)

    def test_flat_deviations_follow_their_laws(self, flat):
        bundle, spec = flat
        idx = 8
        t = float(bundle.grid.points[idx])
        for kind in KINDS:
            law = deviation_law(kind, t, spec)
            dev = bundle.process[:, idx] - bundle.derived[kind][:, idx]
            self._check_moments(dev, law.mean, law.variance)

    def test_flat_integral_deviation_is_tighter_in_sample(self, flat):
        bundle, _ = flat
        idx = 8
        dev = {kind: bundle.process[:, idx] - bundle.derived[kind][:, idx] for kind in KINDS}
        assert dev["ir"].var(ddof=1) < dev["av"].var(ddof=1)
        assert dev["ir"].var(ddof=1) < dev["st"].var(ddof=1)

    def test_curved_bridge_marginals_share_one_law(self, curved):
        bundle, tc, spec = curved
        idx = 8
        t = float(bundle.grid.points[idx])
        var = ou_bridge_cov(t, t, tc)
        mean = ou_bridge_mean(t, spec.a, spec.b, tc)
        for kind in KINDS:
            self._check_moments(bundle.derived[kind][:, idx], mean, var)

    def test_curved_process_marginal_matches_closed_form(self, curved):
        bundle, tc, _ = curved
        idx = 8
        t = float(bundle.grid.points[idx])
        self._check_moments(bundle.process[:, idx], 0.0, ou_process_cov(t, t, tc))

    def test_curved_deviations_follow_their_laws(self, curved):
        bundle, tc, spec = curved
        idx = 8
        t = float(bundle.grid.points[idx])
        for kind in KINDS:
            law = ou_deviation_law(kind, t, spec.b, tc)
            dev = bundle.process[:, idx] - bundle.derived[kind][:, idx]
            self._check_moments(dev, law.mean, law.variance)


class TestConditioning:
    def test_endpoint_is_pinned_exactly(self):
        bundle, _ = small_bundle()
        cond = condition_on_endpoint(bundle, 1.75)
        assert (cond.w[:, -1] == 1.75).all()

    def test_conditioning_is_idempotent(self):
        bundle, _ = small_bundle()
        once = condition_on_endpoint(bundle, 0.5)
        twice = condition_on_endpoint(once, 0.5)
        assert np.array_equal(once.dw, twice.dw)
        for kind in KINDS:
            assert np.array_equal(once.derived[kind], twice.derived[kind])

    def test_matched_endpoint_makes_anticipative_deviation_vanish(self):
        bundle, spec = small_bundle(b=0.0)
        cond = condition_on_endpoint(bundle, spec.b)
        assert np.array_equal(cond.derived["av"], cond.process)

    def test_matched_nonzero_endpoint_leaves_rounding_dust_only(self):
        bundle, spec = small_bundle(b=1.0)
        cond = condition_on_endpoint(bundle, spec.b)
        assert_allclose(cond.derived["av"], cond.process, atol=1e-15)

    def test_conditioned_deviation_follows_conditional_law(self):
        grid = TimeGrid.uniform(1.0, 16)
        spec = BridgeSpec(0.0, 0.0, 1.0, "av")
        bundle = simulate_wiener_bridges(grid, spec, 30303, np.arange(20_000))
        cond = condition_on_endpoint(bundle, 1.0)
        idx = 8
        t = float(grid.points[idx])
        for kind in ("ir", "st"):
            law = cond_deviation_law(kind, t, spec.b, 1.0, spec.T)
            dev = cond.process[:, idx] - cond.derived[kind][:, idx]
            n = dev.size
            assert abs(dev.mean() - law.mean) < 4.5 * dev.std(ddof=1) / math.sqrt(n)
            assert abs(dev.var(ddof=1) - law.variance) < 5.0 * law.variance * math.sqrt(2.0 / (n - 1))

    def test_rejects_non_finite_level(self):
        bundle, _ = small_bundle()
        with pytest.raises(DomainError):
            condition_on_endpoint(bundle, math.nan)

    def test_curved_family_has_no_conditioning(self):
        grid = TimeGrid.uniform(1.0, 8)
        bundle = simulate_ou_bridges(grid, ProcessParams(1.0, 1.0), BridgeSpec(0.0, 0.0, 1.0, "av"), 7, [0])
        with pytest.raises(UnsupportedOperationError):
            condition_on_endpoint(bundle, 0.0)


class TestEulerBridge:
    def test_zero_noise_follows_the_mean_line(self):
        grid = TimeGrid.uniform(1.0, 256)
        spec = BridgeSpec(0.0, 2.0, 1.0, "av")
        x = euler_bridge(grid, np.zeros((1, 256)), spec)
        assert x[0, -1] == spec.b
        assert_allclose(x[0], spec.b * grid.points, atol=1e-12)

    def test_zero_noise_curved_tracks_the_bridge_mean(self):
        grid = TimeGrid.uniform(1.0, 2048)
        spec = BridgeSpec(0.0, 1.0, 1.0, "av")
        params = ProcessParams(2.0, 1.0)
        tc = TimeChange(params, 1.0)
        x = euler_bridge(grid, np.zeros((1, 2048)), spec, params=params)
        exact = np.array([ou_bridge_mean(float(t), 0.0, 1.0, tc) for t in grid.points])
        assert x[0, -1] == spec.b
        assert np.abs(x[0] - exact).max() < 5e-3

    def test_euler_path_approaches_the_integral_construction(self):
        grid = TimeGrid.uniform(1.0, 2048)
        spec = BridgeSpec(0.0, 0.0, 1.0, "av")
        bundle = simulate_wiener_bridges(grid, spec, 909, np.arange(4))
        approx = euler_bridge(grid, grid_increments(bundle), spec)
        exact = bundle.derived["ir"]
        keep = grid.points <= 0.9
        assert np.abs(approx[:, keep] - exact[:, keep]).max() < 0.05

    def test_rejects_mismatched_shapes(self):
        grid = TimeGrid.uniform(1.0, 8)
        spec = BridgeSpec(0.0, 0.0, 1.0, "av")
        with pytest.raises(DomainError):
            euler_bridge(grid, np.zeros((1, 7)), spec)
        with pytest.raises(DomainError):
            euler_bridge(grid, np.zeros((1, 8)), BridgeSpec(0.0, 0.0, 2.0, "av"))


class TestCsvDump:
    def test_header_and_shape_for_the_flat_family(self):
        bundle, _ = small_bundle(reps=3, n=4)
        buf = io.StringIO()
        dump_paths_csv(bundle, buf)
        text = buf.getvalue()
        lines = text.split("\n")
        assert lines[0] == "replicate,t,W,W_av,W_ir,W_st"
        assert len(lines) == 1 + 3 * 5 + 1
        assert text.endswith("\n")
        assert "\r" not in text

    def test_header_for_the_curved_family(self):
        grid = TimeGrid.uniform(1.0, 4)
        bundle = simulate_ou_bridges(grid, ProcessParams(1.0, 1.0), BridgeSpec(0.0, 0.0, 1.0, "av"), 7, [0])
        buf = io.StringIO()
        dump_paths_csv(bundle, buf)
        assert buf.getvalue().split("\n")[0] == "replicate,t,U,U_av,U_ir,U_st"

    def test_values_round_trip_exactly(self):
        bundle, _ = small_bundle(reps=2, n=4)
        buf = io.StringIO()
        dump_paths_csv(bundle, buf)
        rows = [line.split(",") for line in buf.getvalue().strip().split("\n")[1:]]
        parsed = np.array([[float(v) for v in row] for row in rows])
        assert np.array_equal(parsed[:, 0], np.repeat(bundle.replicate_ids, 5))
        assert np.array_equal(parsed[:, 2].reshape(2, 5), bundle.process)
        for j, kind in enumerate(KINDS):
            assert np.array_equal(parsed[:, 3 + j].reshape(2, 5), bundle.derived[kind])

    def test_file_destination_writes_bytes(self, tmp_path):
        bundle, _ = small_bundle(reps=1, n=2)
        dest = tmp_path / "paths.csv"
        dump_paths_csv(bundle, dest)
        assert dest.read_text().startswith("replicate,t,W")

    def test_rejects_unbuilt_bundles_and_bad_destinations(self):
        grid = TimeGrid.uniform(1.0, 4)
        raw = gen_wiener_block(grid, st_transform_times(grid), 1, [0])
        with pytest.raises(DomainError):
            dump_paths_csv(raw, io.StringIO())
        bundle, _ = small_bundle(reps=1, n=2)
        with pytest.raises(DomainError):
            dump_paths_csv(bundle, 42)
