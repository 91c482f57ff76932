"""Monte Carlo verification of the exact bridge statistics.

Every estimator reduces to per-replicate values that are independent and
identically distributed across replicates, so standard errors come from
the sample standard deviation alone.  Replicates are simulated in
fixed-size chunks addressed by absolute replicate indices; results are
reduced in chunk order, so estimates do not depend on worker scheduling.
The worker count is capped by the BRIDGELAB_THREADS environment variable
(default 1); chunking changes nothing but memory use and wall time.

A gate compares an estimate against its closed form: pass means the
absolute difference is at most gate * std_error plus any quadrature bias
bound, with a relative floor of 1e-12 for exactly reproduced statistics
whose standard error vanishes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import gauss, ou, paths, wiener
from .errors import DomainError, UnsupportedOperationError
from .ou import ProcessParams, TimeChange
from .paths import TimeGrid
from .wiener import BridgeKind, BridgeSpec, RegionPoint

DEFAULT_GATE = 4.0
MIN_REPLICATES = 1_000
MIN_GRID_STEPS = 256
_trapezoid = getattr(np, "trapezoid", None) or np.trapz
_EXACT_RTOL = 1e-12
_POINTWISE_CHUNK = 25_000
_PATH_CHUNK = 256
_KINDS = (BridgeKind.AV, BridgeKind.IR, BridgeKind.ST)
_PAIRS = ((BridgeKind.AV, BridgeKind.IR), (BridgeKind.AV, BridgeKind.ST), (BridgeKind.IR, BridgeKind.ST))


@dataclass(frozen=True)
class EstimateReport:
    """One gated Monte Carlo estimate.

    ``bias_bound`` widens the pass margin for integrated statistics whose
    quadrature bias is bounded by grid refinement; it is zero for
    pointwise statistics.  ``z_score`` is the signed deviation in standard
    errors and is absent when the standard error vanishes.
    """

    statistic: str
    params: dict
    estimate: float
    std_error: float
    replicates: int
    master_seed: int
    gate: float = DEFAULT_GATE
    oracle: float | None = None
    z_score: float | None = None
    verdict: str = "no-oracle"
    bias_bound: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.estimate) and math.isfinite(self.std_error)) or self.std_error < 0.0:
            raise DomainError(f"estimate needs finite moments, got {self.estimate!r} +- {self.std_error!r}")
        if self.replicates < 1:
            raise DomainError(f"replicate count must be positive, got {self.replicates!r}")
        if not math.isfinite(self.gate) or self.gate <= 0.0:
            raise DomainError(f"gate must be a positive multiple of the standard error, got {self.gate!r}")
        if self.verdict not in ("pass", "fail", "no-oracle"):
            raise DomainError(f"unknown verdict {self.verdict!r}")
        if (self.oracle is None) != (self.verdict == "no-oracle"):
            raise DomainError("verdict and oracle presence must agree")

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "params": dict(self.params),
            "estimate": self.estimate,
            "std_error": self.std_error,
            "replicates": self.replicates,
            "seed": self.master_seed,
            "gate": self.gate,
            "oracle": self.oracle,
            "z": self.z_score,
            "verdict": self.verdict,
            "bias_bound": self.bias_bound,
        }


def summarize(
    statistic: str,
    params: dict,
    estimate: float,
    std_error: float,
    replicates: int,
    master_seed: int,
    oracle: float | None = None,
    gate: float = DEFAULT_GATE,
    bias_bound: float = 0.0,
) -> EstimateReport:
    """Apply the gate and wrap the result; oracle None means no gate."""
    estimate, std_error = float(estimate), float(std_error)
    if oracle is None:
        return EstimateReport(statistic, params, estimate, std_error, replicates, master_seed, gate)
    oracle = float(oracle)
    diff = estimate - oracle
    floor = _EXACT_RTOL * max(1.0, abs(oracle))
    # below the exactness floor the standard error is rounding dust and a
    # normalized deviation would be noise over noise
    z = diff / std_error if gate * std_error > floor else None
    margin = gate * std_error + bias_bound + floor
    verdict = "pass" if abs(diff) <= margin else "fail"
    return EstimateReport(
        statistic, params, estimate, std_error, replicates, master_seed, gate, oracle, z, verdict, bias_bound
    )


def _from_values(
    statistic: str,
    params: dict,
    values: np.ndarray,
    master_seed: int,
    oracle: float | None,
    gate: float,
    bias_bound: float = 0.0,
) -> EstimateReport:
    values = np.asarray(values, dtype=float)
    n = values.size
    se = float(values.std(ddof=1)) / math.sqrt(n)
    return summarize(statistic, params, float(values.mean()), se, n, master_seed, oracle, gate, bias_bound)


def collect_reports(result: dict) -> list[EstimateReport]:
    """Flatten a suite result (possibly the merged all-suite dict) to reports."""
    if "suites" in result:
        out: list[EstimateReport] = []
        for sub in result["suites"]:
            out.extend(collect_reports(sub))
        return out
    return list(result.get("reports", ()))


# -- chunked replicate execution --------------------------------------------


def _worker_count() -> int:
    raw = os.environ.get("BRIDGELAB_THREADS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise DomainError(f"BRIDGELAB_THREADS must be a positive integer, got {raw!r}") from None
    if count < 1:
        raise DomainError(f"BRIDGELAB_THREADS must be a positive integer, got {raw!r}")
    return count


def _spans(n_total: int, chunk: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + chunk, n_total)) for lo in range(0, n_total, chunk)]


def _map_chunks(fn, n_reps: int, chunk: int) -> list:
    """Run fn(lo, hi) over replicate spans; results come back in span order."""
    spans = _spans(n_reps, chunk)
    workers = min(_worker_count(), len(spans))
    if workers == 1:
        return [fn(lo, hi) for lo, hi in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda span: fn(*span), spans))


def _check_process(process: str, params: ProcessParams | None) -> None:
    if process not in ("wiener", "ou"):
        raise DomainError(f"process must be 'wiener' or 'ou', got {process!r}")
    if process == "ou" and params is None:
        raise DomainError("the mean-reverting process needs rate parameters")
    if process == "wiener" and params is not None:
        raise DomainError("the flat-kernel process takes no rate parameters")


def _simulate(
    process: str,
    grid: TimeGrid,
    spec: BridgeSpec,
    params: ProcessParams | None,
    master_seed: int,
    lo: int,
    hi: int,
) -> paths.PathBundle:
    ids = np.arange(lo, hi)
    if process == "wiener":
        return paths.simulate_wiener_bridges(grid, spec, master_seed, ids)
    return paths.simulate_ou_bridges(grid, params, spec, master_seed, ids)


def _process_values(process: str, spec: BridgeSpec, bundle: paths.PathBundle) -> np.ndarray:
    # the flat-kernel driver starts at zero; the comparison process starts at a
    if process == "wiener":
        return spec.a + bundle.process
    return bundle.process


def _reduced_endpoint(process: str, spec: BridgeSpec, params: ProcessParams | None) -> float:
    """End level of the zero-start problem with the same deviation law.

    The deviation of the process from the bridge depends on the start level
    only through a deterministic shift, which folds into an effective end
    level: b - a for the flat kernel and b - a e^{qT} for the hyperbolic
    one (the start term e^{qt} minus its bridge image collapses to
    e^{qT} sinh(qt)/sinh(qT)).
    """
    if process == "wiener":
        return spec.reduced_endpoint
    return spec.b - spec.a * math.exp(params.q * spec.T)


# -- pointwise statistics ----------------------------------------------------


def _pointwise_oracles(
    process: str, kind: BridgeKind, t: float, spec: BridgeSpec, params: ProcessParams | None, d: float | None
) -> dict[str, float]:
    T = spec.T
    if d is not None:
        law = wiener.cond_deviation_law(kind, t, spec.reduced_endpoint, d - spec.a, T)
        return {"cond_dev_mean": law.mean, "cond_dev_variance": law.variance}
    if process == "wiener":
        law = wiener.deviation_law(kind, t, spec)
        corr = wiener.corr_with_process(kind, t, T)
        cov = corr * math.sqrt(wiener.bridge_cov(t, t, T) * t)
        abs_mean = wiener.expected_abs_dev(kind, t, spec.reduced_endpoint, T)
    else:
        tc = TimeChange(params, T)
        law = ou.ou_deviation_law(kind, t, _reduced_endpoint(process, spec, params), tc)
        cov = ou.ou_cov_with_process(kind, t, tc)
        corr = cov / math.sqrt(ou.ou_bridge_cov(t, t, tc) * ou.ou_process_cov(t, t, tc))
        abs_mean = gauss.folded_mean(law)
    return {
        "dev_mean": law.mean,
        "dev_variance": law.variance,
        "cov_with_process": cov,
        "corr_with_process": corr,
        "abs_dev_mean": abs_mean,
    }


def pointwise_panel(
    process: str,
    spec: BridgeSpec,
    ts,
    *,
    params: ProcessParams | None = None,
    d: float | None = None,
    n_reps: int = 100_000,
    master_seed: int = 0,
    gate: float = DEFAULT_GATE,
    kinds=_KINDS,
) -> list[EstimateReport]:
    """Gate the pointwise deviation statistics at several interior times.

    One driver batch feeds every kind and time.  Unconditional panels gate
    the deviation mean and variance, the covariance and correlation of the
    bridge with the process, and the expected absolute deviation.
    Conditional panels (d given, flat kernel only) gate the conditional
    deviation mean and variance; the anticipative construction becomes
    deterministic there, and its vanished standard error is replaced by a
    relative floor.
    """
    _check_process(process, params)
    if n_reps < MIN_REPLICATES:
        raise DomainError(f"pointwise estimates need at least {MIN_REPLICATES} replicates, got {n_reps!r}")
    ts = [float(t) for t in ts]
    if not ts:
        raise DomainError("no evaluation times given")
    T = spec.T
    if any(not (0.0 < t < T) for t in ts):
        raise DomainError(f"evaluation times must lie strictly inside (0, {T!r}), got {ts!r}")
    if d is not None:
        d = float(d)
        if not math.isfinite(d):
            raise DomainError(f"conditioned end level must be finite, got {d!r}")
        if process != "wiener":
            raise UnsupportedOperationError("endpoint conditioning is exact only for the flat-kernel driver")
    kinds = tuple(BridgeKind.coerce(k) for k in kinds)

    grid = TimeGrid(np.unique(np.concatenate(([0.0, T], ts))))
    cols = np.searchsorted(grid.points, ts)

    def run(lo: int, hi: int):
        bundle = _simulate(process, grid, spec, params, master_seed, lo, hi)
        if d is not None:
            bundle = paths.condition_on_endpoint(bundle, d)
        proc = _process_values(process, spec, bundle)[:, cols]
        return proc, {kind: bundle.derived[kind.value][:, cols] for kind in kinds}

    chunks = _map_chunks(run, n_reps, _POINTWISE_CHUNK)
    proc = np.vstack([c[0] for c in chunks])
    bridges = {kind: np.vstack([c[1][kind] for c in chunks]) for kind in kinds}

    reports = []
    for kind in kinds:
        for j, t in enumerate(ts):
            oracles = _pointwise_oracles(process, kind, t, spec, params, d)
            base = {"process": process, "kind": kind.value, "t": t, "a": spec.a, "b": spec.b, "T": T}
            if params is not None:
                base.update(q=params.q, sigma=params.sigma)
            if d is not None:
                base["d"] = d
            p, x = proc[:, j], bridges[kind][:, j]
            dev = p - x
            centered = dev - dev.mean()
            sq = centered * centered
            n = dev.size
            named = {
                "dev_mean" if d is None else "cond_dev_mean": (dev, None),
                "dev_variance" if d is None else "cond_dev_variance": (sq, float(sq.sum()) / (n - 1)),
            }
            if d is None:
                prod = (x - x.mean()) * (p - p.mean())
                named["cov_with_process"] = (prod, float(prod.sum()) / (n - 1))
                named["abs_dev_mean"] = (np.abs(dev), None)
            for stat, (values, estimate) in named.items():
                if estimate is None:
                    reports.append(_from_values(stat, base, values, master_seed, oracles[stat], gate))
                else:
                    se = float(values.std(ddof=1)) / math.sqrt(n)
                    reports.append(summarize(stat, base, estimate, se, n, master_seed, oracles[stat], gate))
            if d is None:
                # the correlation estimate is a smooth function of sample
                # moments; its standard error uses the Gaussian delta method
                r = float(np.corrcoef(x, p)[0, 1])
                se = (1.0 - r * r) / math.sqrt(n)
                reports.append(
                    summarize("corr_with_process", base, r, se, n, master_seed, oracles["corr_with_process"], gate)
                )
    return reports


def estimate_pointwise(
    kind: BridgeKind | str,
    process: str,
    t: float,
    spec: BridgeSpec,
    *,
    params: ProcessParams | None = None,
    d: float | None = None,
    n_reps: int = 100_000,
    master_seed: int = 0,
    gate: float = DEFAULT_GATE,
) -> list[EstimateReport]:
    """Gate every pointwise deviation statistic of one kind at one time."""
    return pointwise_panel(
        process, spec, [t], params=params, d=d, n_reps=n_reps, master_seed=master_seed, gate=gate,
        kinds=(BridgeKind.coerce(kind),),
    )


# -- integrated statistics ---------------------------------------------------


def _integrated_values(
    process: str,
    spec: BridgeSpec,
    params: ProcessParams | None,
    d: float | None,
    grid_n: int,
    n_reps: int,
    master_seed: int,
    kinds,
) -> dict[BridgeKind, tuple[np.ndarray, np.ndarray]]:
    """Per-replicate trapezoid integrals of the squared deviation.

    Paths are simulated once on the doubled grid; each replicate yields the
    fine integral and the integral restricted to every second point, so the
    coarse-to-fine shift isolates the quadrature bias with the Monte Carlo
    noise mostly cancelled.  The deviation at t = T uses the continuous
    extension (the bridges are pinned, the process keeps its own value).
    """
    grid = TimeGrid.uniform(spec.T, 2 * grid_n)
    pts = grid.points

    def run(lo: int, hi: int):
        bundle = _simulate(process, grid, spec, params, master_seed, lo, hi)
        if d is not None:
            bundle = paths.condition_on_endpoint(bundle, d)
        proc = _process_values(process, spec, bundle)
        out = {}
        for kind in kinds:
            dev = proc - bundle.derived[kind.value]
            dev2 = dev * dev
            out[kind] = (_trapezoid(dev2, pts, axis=1), _trapezoid(dev2[:, ::2], pts[::2], axis=1))
        return out

    chunks = _map_chunks(run, n_reps, _PATH_CHUNK)
    return {
        kind: (
            np.concatenate([c[kind][0] for c in chunks]),
            np.concatenate([c[kind][1] for c in chunks]),
        )
        for kind in kinds
    }


def _quad_report(
    statistic: str,
    params_out: dict,
    fine: np.ndarray,
    coarse: np.ndarray,
    master_seed: int,
    oracle: float,
    gate: float,
) -> EstimateReport:
    """Gate the fine-grid mean with a refinement bound on the leftover bias.

    For any quadrature error decaying like n^{-p} with p >= 1, the bias
    remaining on the doubled grid is at most the coarse-to-fine shift, so
    the bound below (shift plus its own gated noise) is conservative.
    """
    n = fine.size
    se = float(fine.std(ddof=1)) / math.sqrt(n)
    shift = fine - coarse
    bias = abs(float(shift.mean())) + gate * float(shift.std(ddof=1)) / math.sqrt(n)
    return summarize(statistic, params_out, float(fine.mean()), se, n, master_seed, oracle, gate, bias)


def estimate_integrated(
    kind: BridgeKind | str,
    process: str,
    spec: BridgeSpec,
    *,
    params: ProcessParams | None = None,
    d: float | None = None,
    n_reps: int = 10_000,
    master_seed: int = 0,
    grid_n: int = MIN_GRID_STEPS,
    gate: float = DEFAULT_GATE,
) -> EstimateReport:
    """Gate the expected integrated squared deviation against its closed form.

    ``grid_n`` is the base step count; the estimate itself lives on the
    doubled grid and the pass margin carries the refinement bias bound.
    Conditioning on an end level d is available for the flat kernel only.
    """
    kind = BridgeKind.coerce(kind)
    _check_process(process, params)
    if grid_n < MIN_GRID_STEPS:
        raise DomainError(f"integrated estimates need a base grid of at least {MIN_GRID_STEPS} steps, got {grid_n!r}")
    if n_reps < MIN_REPLICATES:
        raise DomainError(f"integrated estimates need at least {MIN_REPLICATES} replicates, got {n_reps!r}")
    b_red = _reduced_endpoint(process, spec, params)
    if d is not None:
        d = float(d)
        if process != "wiener":
            raise UnsupportedOperationError("endpoint conditioning is exact only for the flat-kernel driver")
        statistic = "cond_quad_dev"
        oracle = wiener.expected_cond_quad_dev(kind, b_red, d - spec.a, spec.T)
    elif process == "wiener":
        statistic = "quad_dev"
        oracle = wiener.expected_quad_dev(kind, b_red, spec.T)
    else:
        statistic = "quad_dev"
        oracle = ou.ou_expected_quad_dev(kind, b_red, TimeChange(params, spec.T))

    fine, coarse = _integrated_values(process, spec, params, d, grid_n, n_reps, master_seed, (kind,))[kind]
    params_out = {"process": process, "kind": kind.value, "a": spec.a, "b": spec.b, "T": spec.T, "grid_n": grid_n}
    if params is not None:
        params_out.update(q=params.q, sigma=params.sigma)
    if d is not None:
        params_out["d"] = d
    return _quad_report(statistic, params_out, fine, coarse, master_seed, oracle, gate)


# -- conditional ordering regions --------------------------------------------

# one interior point per region plus two within about 0.5 of a boundary
# curve: (0, 1.5) sits 0.5 above the d = 1 crossing and (1.1, 1) about 0.47
# from the curve separating the av/ir comparison
REGION_SPOT_POINTS = ((0.0, 0.0), (0.0, 0.7), (0.0, 2.0), (8.0, 3.0), (0.0, 1.5), (1.1, 1.0))
REGION_MIN_GAP = 1e-2


def _region_gaps(b_tilde: float, d_tilde: float) -> dict:
    exact = {kind: wiener.expected_cond_quad_dev(kind, b_tilde, d_tilde, 1.0) for kind in _KINDS}
    return {pair: exact[pair[0]] - exact[pair[1]] for pair in _PAIRS}


def _region_point_check(
    b_tilde: float,
    d_tilde: float,
    label: wiener.RegionLabel,
    gaps: dict,
    values: dict,
    master_seed: int,
    grid_n: int,
    gate: float,
) -> tuple[dict, list[EstimateReport], bool]:
    """Gate one point's pairwise gaps and compare the sampled ordering.

    A point is a mismatch only when a gap gate fails or a sampled gap
    contradicts the closed-form sign by more than ``gate`` standard
    errors; a statistically unresolved flip is not a mismatch.
    """
    estimates = {kind: float(values[kind][0].mean()) for kind in _KINDS}
    point = {"b_tilde": b_tilde, "d_tilde": d_tilde, "letter": label.tag, "ordering": list(label.ordering)}
    reports = []
    min_gap_z = math.inf
    ok, confident_flip = True, False
    for first, second in _PAIRS:
        gap_fine = values[first][0] - values[second][0]
        gap_coarse = values[first][1] - values[second][1]
        n = gap_fine.size
        se = float(gap_fine.std(ddof=1)) / math.sqrt(n)
        shift = gap_fine - gap_coarse
        bias = abs(float(shift.mean())) + gate * float(shift.std(ddof=1)) / math.sqrt(n)
        report = summarize(
            "cond_quad_gap",
            {"b_tilde": b_tilde, "d_tilde": d_tilde, "pair": f"{first.value}-{second.value}", "grid_n": grid_n},
            float(gap_fine.mean()),
            se,
            n,
            master_seed,
            gaps[(first, second)],
            gate,
            bias,
        )
        reports.append(report)
        ok = ok and report.passed
        if se > 0.0:
            min_gap_z = min(min_gap_z, abs(report.estimate) / se)
            if report.estimate * report.oracle < 0.0 and abs(report.estimate) > gate * se:
                confident_flip = True
    mc_ordering = [kind.value for kind in sorted(_KINDS, key=lambda k: estimates[k])]
    point["mc_ordering"] = mc_ordering
    point["estimates"] = {kind.value: estimates[kind] for kind in _KINDS}
    point["min_gap_z"] = min_gap_z if math.isfinite(min_gap_z) else None
    point["match"] = mc_ordering == list(label.ordering)
    return point, reports, (not ok) or confident_flip


def region_map_mc(
    points=REGION_SPOT_POINTS,
    *,
    n_reps: int = 6_000,
    master_seed: int = 0,
    grid_n: int = MIN_GRID_STEPS,
    gate: float = DEFAULT_GATE,
    min_gap: float = REGION_MIN_GAP,
) -> dict:
    """Check the ordering of the conditional integrated deviations by simulation.

    Each dimensionless endpoint pair is classified exactly, then the three
    conditional integrals are estimated from one shared driver batch (at
    T = 1, where the pair is the plain endpoint pair).  Pairwise gaps are
    gated against their closed-form differences, and the sampled ordering
    is compared with the exact one.  Points must sit off every boundary
    curve with all closed-form gaps at least ``min_gap`` in absolute value,
    so an ordering mismatch is a genuine failure rather than a tie.
    """
    if n_reps < MIN_REPLICATES:
        raise DomainError(f"region checks need at least {MIN_REPLICATES} replicates, got {n_reps!r}")
    results, reports, mismatches = [], [], []
    for b_tilde, d_tilde in points:
        label = wiener.region_classify(RegionPoint(b_tilde, d_tilde))
        if label.boundary:
            raise DomainError(f"region point ({b_tilde!r}, {d_tilde!r}) sits on a boundary curve")
        gaps = _region_gaps(b_tilde, d_tilde)
        smallest = min(abs(g) for g in gaps.values())
        if smallest < min_gap:
            raise DomainError(
                f"region point ({b_tilde!r}, {d_tilde!r}) has a closed-form gap of {smallest!r}; "
                f"the check needs gaps of at least {min_gap!r}"
            )
        spec = BridgeSpec(0.0, b_tilde, 1.0, BridgeKind.AV)
        values = _integrated_values("wiener", spec, None, d_tilde, grid_n, n_reps, master_seed, _KINDS)
        point, point_reports, mismatch = _region_point_check(
            b_tilde, d_tilde, label, gaps, values, master_seed, grid_n, gate
        )
        results.append(point)
        reports.extend(point_reports)
        if mismatch:
            mismatches.append(point)
    return {"points": results, "reports": reports, "mismatches": mismatches}


def region_grid_mc(
    resolution: int,
    *,
    half_width: float = 10.0,
    n_reps: int = 1_000,
    master_seed: int = 0,
    grid_n: int = MIN_GRID_STEPS,
    gate: float = DEFAULT_GATE,
    min_gap: float = REGION_MIN_GAP,
) -> dict:
    """Monte Carlo ordering check over a square lattice of endpoint pairs.

    One zero-endpoint driver batch serves the whole lattice: the deviation
    of every construction is affine in (b, d) with deterministic
    coefficient paths, so the per-replicate integrals at any lattice point
    are quadratic forms in shared base integrals.  Lattice points whose
    smallest closed-form gap falls below ``min_gap`` (boundary points and
    their immediate neighborhood) are reported as skipped rather than
    gated, since no replicate budget could resolve their ordering.
    """
    if resolution < 2:
        raise DomainError(f"the lattice needs at least 2 points per axis, got {resolution!r}")
    if n_reps < MIN_REPLICATES:
        raise DomainError(f"region checks need at least {MIN_REPLICATES} replicates, got {n_reps!r}")
    axis = np.linspace(-half_width, half_width, resolution)
    grid = TimeGrid.uniform(1.0, 2 * grid_n)
    pts = grid.points
    spec0 = BridgeSpec(0.0, 0.0, 1.0, BridgeKind.AV)

    # deterministic responses: the end level enters every construction
    # through the mean line, and the conditioned level through one affine
    # driver shift, so both follow from a single probe replicate
    probe = _simulate("wiener", grid, spec0, None, master_seed, 0, 1)
    dev_probe = {}
    for d_val in (0.0, 1.0):
        cond = paths.condition_on_endpoint(probe, d_val)
        proc = _process_values("wiener", spec0, cond)
        dev_probe[d_val] = {kind: proc - cond.derived[kind.value] for kind in _KINDS}
    g_resp = -pts / grid.T
    h_resp = {kind: (dev_probe[1.0][kind] - dev_probe[0.0][kind])[0] for kind in _KINDS}

    def quads(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _trapezoid(values, pts, axis=-1), _trapezoid(values[..., ::2], pts[::2], axis=-1)

    def run(lo: int, hi: int):
        bundle = paths.condition_on_endpoint(_simulate("wiener", grid, spec0, None, master_seed, lo, hi), 0.0)
        proc = _process_values("wiener", spec0, bundle)
        out = {}
        for kind in _KINDS:
            dev0 = proc - bundle.derived[kind.value]
            out[kind] = (quads(dev0 * dev0), quads(dev0 * g_resp), quads(dev0 * h_resp[kind]))
        return out

    chunks = _map_chunks(run, n_reps, _PATH_CHUNK)
    base = {
        kind: tuple(
            (np.concatenate([c[kind][j][0] for c in chunks]), np.concatenate([c[kind][j][1] for c in chunks]))
            for j in range(3)
        )
        for kind in _KINDS
    }
    cgg = quads(g_resp * g_resp)
    ceg = {kind: quads(g_resp * h_resp[kind]) for kind in _KINDS}
    chh = {kind: quads(h_resp[kind] * h_resp[kind]) for kind in _KINDS}

    results, reports, mismatches, skipped = [], [], [], []
    for b_tilde in axis:
        for d_tilde in axis:
            label = wiener.region_classify(RegionPoint(b_tilde, d_tilde))
            gaps = _region_gaps(b_tilde, d_tilde)
            smallest = min(abs(g) for g in gaps.values())
            if label.boundary or smallest < min_gap:
                skipped.append({"b_tilde": float(b_tilde), "d_tilde": float(d_tilde), "min_gap": smallest})
                continue
            values = {}
            for kind in _KINDS:
                (i00, a_g, b_h), eg, hh = base[kind], ceg[kind], chh[kind]
                values[kind] = tuple(
                    i00[lvl]
                    + 2.0 * b_tilde * a_g[lvl]
                    + 2.0 * d_tilde * b_h[lvl]
                    + b_tilde * b_tilde * cgg[lvl]
                    + 2.0 * b_tilde * d_tilde * eg[lvl]
                    + d_tilde * d_tilde * hh[lvl]
                    for lvl in (0, 1)
                )
            point, point_reports, mismatch = _region_point_check(
                float(b_tilde), float(d_tilde), label, gaps, values, master_seed, grid_n, gate
            )
            results.append(point)
            reports.extend(point_reports)
            if mismatch:
                mismatches.append(point)
    return {"points": results, "reports": reports, "mismatches": mismatches, "skipped": skipped}


# -- Euler backend crosscheck -------------------------------------------------


def backend_crosscheck(
    process: str,
    spec: BridgeSpec,
    *,
    params: ProcessParams | None = None,
    levels=(256, 512, 1024),
    n_reps: int = 400,
    master_seed: int = 0,
    gate: float = DEFAULT_GATE,
) -> dict:
    """Strong error of the Euler bridge scheme against the exact construction.

    One driver batch is sampled on the finest level; coarser levels reuse it
    through summed increments, so all levels see the same noise and the
    mean squared errors are paired.  The exact reference is the integral
    construction, the strong solution of the same pinned-drift equation.
    The check passes when the mean squared error drops strictly (by more
    than ``gate`` paired standard errors) at every refinement and the
    zero-noise scheme with flat endpoints stays exactly at zero.
    """
    _check_process(process, params)
    levels = tuple(int(n) for n in levels)
    if len(levels) < 2 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise DomainError(f"levels must be strictly increasing with at least two entries, got {levels!r}")
    finest = levels[-1]
    if any(finest % n for n in levels):
        raise DomainError(f"every level must divide the finest one, got {levels!r}")
    if n_reps < 50:
        raise DomainError(f"the crosscheck needs at least 50 replicates, got {n_reps!r}")
    T = spec.T
    grid_fine = TimeGrid.uniform(T, finest)

    def run(lo: int, hi: int):
        bundle = _simulate(process, grid_fine, spec, params, master_seed, lo, hi)
        dw = paths.grid_increments(bundle)
        exact = bundle.derived[BridgeKind.IR.value]
        per_level = []
        for n in levels:
            factor = finest // n
            dw_n = dw.reshape(dw.shape[0], n, factor).sum(axis=2)
            x = paths.euler_bridge(TimeGrid.uniform(T, n), dw_n, spec, params)
            err = x - exact[:, ::factor]
            per_level.append((err * err).mean(axis=1))
        return per_level

    chunks = _map_chunks(run, n_reps, _PATH_CHUNK)
    mse = [np.concatenate([c[j] for c in chunks]) for j in range(len(levels))]

    rms, rates, monotone = [], [], True
    for j, values in enumerate(mse):
        rms.append(math.sqrt(float(values.mean())))
        if j:
            drop = mse[j - 1] - values
            se = float(drop.std(ddof=1)) / math.sqrt(drop.size)
            monotone = monotone and float(drop.mean()) > gate * se
            rates.append(0.5 * math.log2(float(mse[j - 1].mean()) / float(values.mean())))

    flat = BridgeSpec(0.0, 0.0, T, spec.kind)
    still = paths.euler_bridge(TimeGrid.uniform(T, levels[0]), np.zeros((1, levels[0])), flat, params)
    zero_noise_max = float(np.abs(still).max())

    verdict = "pass" if monotone and zero_noise_max == 0.0 else "fail"
    out = {
        "process": process,
        "a": spec.a,
        "b": spec.b,
        "T": T,
        "levels": list(levels),
        "rms": rms,
        "rate": rates,
        "zero_noise_max": zero_noise_max,
        "monotone": monotone,
        "replicates": n_reps,
        "seed": master_seed,
        "verdict": verdict,
    }
    if params is not None:
        out.update(q=params.q, sigma=params.sigma)
    return out


# -- suites -------------------------------------------------------------------


def _scaled(base: int, scale: float, floor: int = MIN_REPLICATES) -> int:
    return max(floor, int(round(base * scale)))


def suite_wiener_unconditional(master_seed: int = 1101, scale: float = 1.0) -> dict:
    reports = []
    spec = BridgeSpec(0.0, 1.0, 1.0, BridgeKind.AV)
    reports += pointwise_panel("wiener", spec, (0.25, 0.5, 0.9), n_reps=_scaled(100_000, scale), master_seed=master_seed)
    reps = _scaled(10_000, scale)
    for b in (0.0, 1.0):
        quad_spec = BridgeSpec(0.0, b, 1.0, BridgeKind.AV)
        for kind in _KINDS:
            reports.append(
                estimate_integrated(kind, "wiener", quad_spec, n_reps=reps, master_seed=master_seed + 1)
            )
    long_spec = BridgeSpec(0.0, 1.0, 2.0, BridgeKind.AV)
    for kind in _KINDS:
        reports.append(
            estimate_integrated(kind, "wiener", long_spec, n_reps=_scaled(6_000, scale), master_seed=master_seed + 2)
        )
    return {"suite": "wiener-unconditional", "master_seed": master_seed, "reports": reports}


def suite_wiener_conditional(master_seed: int = 1202, scale: float = 1.0) -> dict:
    reports = []
    spec = BridgeSpec(0.0, 1.0, 1.0, BridgeKind.AV)
    reports += pointwise_panel(
        "wiener", spec, (0.25, 0.75), d=0.3, n_reps=_scaled(100_000, scale), master_seed=master_seed
    )
    reps = _scaled(10_000, scale)
    # (b, d) = (0.5, 0.5) makes the anticipative integral vanish on every replicate
    for i, (b, d) in enumerate(((1.0, 0.3), (0.0, 0.0), (0.5, 0.5))):
        quad_spec = BridgeSpec(0.0, b, 1.0, BridgeKind.AV)
        for kind in _KINDS:
            reports.append(
                estimate_integrated(kind, "wiener", quad_spec, d=d, n_reps=reps, master_seed=master_seed + 1 + i)
            )
    return {"suite": "wiener-conditional", "master_seed": master_seed, "reports": reports}


def suite_ou(master_seed: int = 1303, scale: float = 1.0) -> dict:
    reports = []
    spec = BridgeSpec(0.0, 1.0, 1.0, BridgeKind.AV)
    pos = ProcessParams(1.0)
    reports += pointwise_panel(
        "ou", spec, (0.25, 0.5, 0.75), params=pos, n_reps=_scaled(100_000, scale), master_seed=master_seed
    )
    neg = ProcessParams(-2.0, 1.3)
    neg_spec = BridgeSpec(0.0, 0.7, 1.0, BridgeKind.AV)
    reports += pointwise_panel(
        "ou", neg_spec, (0.5,), params=neg, n_reps=_scaled(100_000, scale), master_seed=master_seed + 1
    )
    reports += variance_ordering_gaps(pos, spec, 0.5, n_reps=_scaled(100_000, scale), master_seed=master_seed + 2)
    reports += variance_ordering_gaps(neg, neg_spec, 0.5, n_reps=_scaled(100_000, scale), master_seed=master_seed + 3)
    reps = _scaled(8_000, scale)
    for i, (params, quad_spec) in enumerate(
        (
            (ProcessParams(1.0), BridgeSpec(0.0, 2.0, 1.0, BridgeKind.AV)),
            (ProcessParams(-0.5, 2.0), BridgeSpec(0.0, 0.0, 2.0, BridgeKind.AV)),
        )
    ):
        for kind in _KINDS:
            reports.append(
                estimate_integrated(
                    kind, "ou", quad_spec, params=params, n_reps=reps, master_seed=master_seed + 4 + i
                )
            )
    notes = [
        "the st integrated-deviation gates with b != 0 target the variance integral "
        "plus the endpoint-mean term every construction shares; see the README note "
        "on the st closed form"
    ]
    return {"suite": "ou", "master_seed": master_seed, "reports": reports, "notes": notes}


def variance_ordering_gaps(
    params: ProcessParams,
    spec: BridgeSpec,
    t: float,
    *,
    n_reps: int = 100_000,
    master_seed: int = 0,
    gate: float = DEFAULT_GATE,
) -> list[EstimateReport]:
    """Gate the pairwise deviation-variance gaps of the three constructions.

    The gaps are estimated from one driver batch, so their standard errors
    reflect the strong coupling between the constructions and resolve the
    strict variance ordering at modest replicate counts.
    """
    if n_reps < MIN_REPLICATES:
        raise DomainError(f"ordering gaps need at least {MIN_REPLICATES} replicates, got {n_reps!r}")
    T = spec.T
    if not (0.0 < t < T):
        raise DomainError(f"the gap time must lie strictly inside (0, {T!r}), got {t!r}")
    tc = TimeChange(params, T)
    grid = TimeGrid(np.unique(np.array([0.0, t, T])))
    col = int(np.searchsorted(grid.points, t))

    def run(lo: int, hi: int):
        bundle = _simulate("ou", grid, spec, params, master_seed, lo, hi)
        proc = bundle.process[:, col]
        return {kind: proc - bundle.derived[kind.value][:, col] for kind in _KINDS}

    chunks = _map_chunks(run, n_reps, _POINTWISE_CHUNK)
    sq = {}
    for kind in _KINDS:
        dev = np.concatenate([c[kind] for c in chunks])
        centered = dev - dev.mean()
        sq[kind] = centered * centered
    reports = []
    for first, second in _PAIRS:
        oracle = ou.ou_deviation_law(first, t, 0.0, tc).variance - ou.ou_deviation_law(second, t, 0.0, tc).variance
        values = sq[first] - sq[second]
        base = {"process": "ou", "pair": f"{first.value}-{second.value}", "t": t, "T": T, "q": params.q,
                "sigma": params.sigma}
        reports.append(_from_values("dev_variance_gap", base, values, master_seed, oracle, gate))
    return reports


def suite_regions(
    master_seed: int = 1404, scale: float = 1.0, grid: int | None = None, n_reps: int | None = None
) -> dict:
    if grid is None:
        reps = n_reps if n_reps is not None else _scaled(6_000, scale)
        result = region_map_mc(n_reps=reps, master_seed=master_seed)
    else:
        reps = n_reps if n_reps is not None else _scaled(1_000, scale)
        result = region_grid_mc(grid, n_reps=reps, master_seed=master_seed)
    out = {
        "suite": "regions",
        "master_seed": master_seed,
        "reports": result["reports"],
        "points": result["points"],
        "mismatches": result["mismatches"],
    }
    if "skipped" in result:
        out["skipped"] = result["skipped"]
    return out


def suite_backends(master_seed: int = 1505, scale: float = 1.0) -> dict:
    spec = BridgeSpec(0.0, 1.0, 1.0, BridgeKind.IR)
    checks = [backend_crosscheck("wiener", spec, n_reps=_scaled(400, scale, floor=100), master_seed=master_seed)]
    for i, q in enumerate((1.0, -1.0)):
        checks.append(
            backend_crosscheck(
                "ou", spec, params=ProcessParams(q),
                n_reps=_scaled(300, scale, floor=100), master_seed=master_seed + 1 + i,
            )
        )
    # a boolean gate: estimate 1 when the crosscheck held, against oracle 1
    reports = [
        summarize(
            "euler_strong_convergence",
            {k: c[k] for k in ("process", "levels", "rms", "rate", "zero_noise_max") if k in c}
            | ({"q": c["q"]} if "q" in c else {}),
            1.0 if c["verdict"] == "pass" else 0.0,
            0.0,
            c["replicates"],
            c["seed"],
            oracle=1.0,
        )
        for c in checks
    ]
    return {"suite": "backends", "master_seed": master_seed, "reports": reports, "crosschecks": checks}


SUITES = {
    "wiener-unconditional": suite_wiener_unconditional,
    "wiener-conditional": suite_wiener_conditional,
    "ou": suite_ou,
    "regions": suite_regions,
    "backends": suite_backends,
}

# headline replicate counts; a requested count rescales a suite against its own
SUITE_BASE_REPS = {
    "wiener-unconditional": 100_000,
    "wiener-conditional": 100_000,
    "ou": 100_000,
    "regions": 6_000,
    "backends": 400,
}


def run_suite(
    name: str,
    master_seed: int | None = None,
    scale: float = 1.0,
    n_reps: int | None = None,
    grid: int | None = None,
) -> dict:
    """Run one named verification suite, or all of them for name 'all'."""
    if name == "all":
        return {"suite": "all", "suites": [run_suite(sub, master_seed, scale, n_reps, grid) for sub in SUITES]}
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose from {', '.join((*SUITES, 'all'))}")
    kwargs: dict = {"scale": scale}
    if master_seed is not None:
        kwargs["master_seed"] = master_seed
    if name == "regions":
        if grid is not None:
            kwargs["grid"] = grid
        if n_reps is not None:
            kwargs["n_reps"] = n_reps
    elif n_reps is not None:
        kwargs["scale"] = scale * n_reps / SUITE_BASE_REPS[name]
    return SUITES[name](**kwargs)
