"""Exact laws, simulation, and Monte Carlo gates for pinned diffusions.

Three constructions of a bridge from one driving path: an anticipative
average ("av"), an integral of a scaled running average ("ir"), and a
deterministic space-time rescaling of the driver ("st").  The package
supplies the closed-form moment laws for each construction, exact path
samplers for Wiener and mean-reverting (Ornstein-Uhlenbeck) drivers, and
a verification layer that gates Monte Carlo estimates against the laws.
"""

from .errors import BridgeLabError, DomainError, NumericalError, UnsupportedOperationError
from .gauss import (
    GaussianMoment,
    condition_on_linear,
    folded_mean,
    second_moment,
    std_normal_cdf,
    std_normal_pdf,
    tail_probability,
)
from .manifest import RunManifest, build_manifest, compare_outputs, load_manifest, write_manifest
from .montecarlo import (
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
)
from .ou import (
    ProcessParams,
    TimeChange,
    ir_quad_integral,
    kappa,
    kappa_star,
    ou_bridge_cov,
    ou_bridge_mean,
    ou_cov_with_process,
    ou_deviation_law,
    ou_expected_quad_dev,
    ou_process_cov,
    t_star,
)
from .paths import (
    PathBundle,
    TimeGrid,
    condition_on_endpoint,
    dump_paths_csv,
    euler_bridge,
    grid_increments,
    simulate_ou_bridges,
    simulate_wiener_bridges,
)
from .wiener import (
    BridgeKind,
    BridgeSpec,
    RegionLabel,
    RegionPoint,
    bridge_cov,
    bridge_mean,
    cond_deviation_law,
    corr_with_process,
    deviation_law,
    expected_abs_dev,
    expected_cond_quad_dev,
    expected_quad_dev,
    ir_deviation_variance,
    ordering_letter,
    region_classify,
)

__all__ = [
    "BridgeKind",
    "BridgeLabError",
    "BridgeSpec",
    "DomainError",
    "EstimateReport",
    "GaussianMoment",
    "NumericalError",
    "PathBundle",
    "ProcessParams",
    "RegionLabel",
    "RegionPoint",
    "RunManifest",
    "TimeChange",
    "TimeGrid",
    "UnsupportedOperationError",
    "backend_crosscheck",
    "bridge_cov",
    "bridge_mean",
    "build_manifest",
    "collect_reports",
    "compare_outputs",
    "cond_deviation_law",
    "condition_on_endpoint",
    "condition_on_linear",
    "corr_with_process",
    "deviation_law",
    "dump_paths_csv",
    "estimate_integrated",
    "estimate_pointwise",
    "euler_bridge",
    "expected_abs_dev",
    "expected_cond_quad_dev",
    "expected_quad_dev",
    "folded_mean",
    "grid_increments",
    "ir_deviation_variance",
    "ir_quad_integral",
    "kappa",
    "kappa_star",
    "load_manifest",
    "ordering_letter",
    "ou_bridge_cov",
    "ou_bridge_mean",
    "ou_cov_with_process",
    "ou_deviation_law",
    "ou_expected_quad_dev",
    "ou_process_cov",
    "pointwise_panel",
    "region_classify",
    "region_grid_mc",
    "region_map_mc",
    "run_suite",
    "second_moment",
    "simulate_ou_bridges",
    "simulate_wiener_bridges",
    "std_normal_cdf",
    "std_normal_pdf",
    "summarize",
    "t_star",
    "tail_probability",
    "write_manifest",
]
