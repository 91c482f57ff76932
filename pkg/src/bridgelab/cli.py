"""Command-line front door: oracles, simulation, verification, exports.

Commands share one flat configuration space: every flag may instead be
supplied through a JSON config file (``--config``), with explicit flags
taking precedence.  File outputs are byte-stable (17 significant digits,
LF endings, sorted JSON keys, no timestamps) and each file-writing command
records a manifest that ``manifest replay`` can re-execute and compare.

Exit codes: 0 success, 1 failed verification gate or replay mismatch,
2 usage error (unknown statistic id, bad flags), 3 domain or numerical
error, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import figures, manifest, montecarlo, paths, wiener
from . import ou as ou_mod
from .errors import BridgeLabError, DomainError
from .gauss import GaussianMoment
from .ou import ProcessParams, TimeChange
from .paths import TimeGrid
from .wiener import BridgeKind, BridgeSpec, RegionPoint

EXIT_OK = 0
EXIT_GATE = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_IO = 4

SUITE_CHOICES = (*montecarlo.SUITES, "all")
FIGURE_CHOICES = ("fig1", "fig2", "fig3", "fig4")


class UsageError(Exception):
    """Bad invocation: unknown id, missing flag, malformed config."""


# -- statistic registry -------------------------------------------------------


@dataclass(frozen=True)
class RegistryEntry:
    """One printable closed-form statistic: flags in, value(s) out."""

    required: tuple[str, ...]
    formula: str
    fn: Callable[[dict], object]


def _spec(cfg: dict) -> BridgeSpec:
    return BridgeSpec(cfg.get("a", 0.0), cfg["b"], cfg["T"], cfg.get("kind", "av"))


def _tc(cfg: dict) -> TimeChange:
    return TimeChange(ProcessParams(cfg["q"], cfg.get("sigma", 1.0)), cfg["T"])


REGISTRY: dict[str, RegistryEntry] = {
    "wiener.bridge_mean": RegistryEntry(
        ("t", "b", "T"), "a + (b - a) t / T",
        lambda c: wiener.bridge_mean(c["t"], _spec(c)),
    ),
    "wiener.bridge_cov": RegistryEntry(
        ("s", "t", "T"), "min(s,t) (T - max(s,t)) / T",
        lambda c: wiener.bridge_cov(c["s"], c["t"], c["T"]),
    ),
    "wiener.corr_with_process": RegistryEntry(
        ("kind", "t", "T"), "sqrt((T-t)/T) for av/st; sqrt(T(T-t)) log(T/(T-t)) / t for ir",
        lambda c: wiener.corr_with_process(c["kind"], c["t"], c["T"]),
    ),
    "wiener.deviation_law": RegistryEntry(
        ("kind", "t", "b", "T"), "mean -(b-a) t/T; variance t^2/T (av, st) or the ir series form",
        lambda c: wiener.deviation_law(c["kind"], c["t"], _spec(c)),
    ),
    "wiener.ir_deviation_variance": RegistryEntry(
        ("t", "T"), "t (1 + (T-t)/T) + 2 (T-t) log((T-t)/T)",
        lambda c: wiener.ir_deviation_variance(c["t"], c["T"]),
    ),
    "wiener.abs_dev": RegistryEntry(
        ("kind", "t", "b", "T"), "folded mean of the deviation law",
        lambda c: wiener.expected_abs_dev(c["kind"], c["t"], c["b"], c["T"]),
    ),
    "wiener.cond_deviation_law": RegistryEntry(
        ("kind", "t", "b", "d", "T"), "deviation law given the driver ends at d",
        lambda c: wiener.cond_deviation_law(c["kind"], c["t"], c["b"], c["d"], c["T"]),
    ),
    "wiener.expected_quad_dev": RegistryEntry(
        ("kind", "b", "T"), "(T/3)(T + b^2) for av/st; (T/3)(T/2 + b^2) for ir",
        lambda c: wiener.expected_quad_dev(c["kind"], c["b"], c["T"]),
    ),
    "wiener.expected_cond_quad_dev": RegistryEntry(
        ("kind", "b", "d", "T"), "conditional integrated squared deviation given the driver ends at d",
        lambda c: wiener.expected_cond_quad_dev(c["kind"], c["b"], c["d"], c["T"]),
    ),
    "wiener.region": RegistryEntry(
        ("b_tilde", "d_tilde"), "ordering letter of the conditional integrated deviations",
        lambda c: wiener.region_classify(RegionPoint(c["b_tilde"], c["d_tilde"])).tag,
    ),
    "ou.kappa": RegistryEntry(
        ("t", "q"), "(1 - e^{-2qt}) / (2q)",
        lambda c: ou_mod.kappa(c["t"], c["q"]),
    ),
    "ou.kappa_star": RegistryEntry(
        ("t", "q", "T"), "kappa(t) kappa(T) / (kappa(T) - kappa(t))",
        lambda c: ou_mod.kappa_star(c["t"], _tc(c)),
    ),
    "ou.t_star": RegistryEntry(
        ("q", "T"), "the time where kappa_star reaches T",
        lambda c: ou_mod.t_star(_tc(c)),
    ),
    "ou.bridge_mean": RegistryEntry(
        ("t", "b", "q", "T"), "a sinh(q(T-t))/sinh(qT) + b sinh(qt)/sinh(qT)",
        lambda c: ou_mod.ou_bridge_mean(c["t"], c.get("a", 0.0), c["b"], _tc(c)),
    ),
    "ou.bridge_cov": RegistryEntry(
        ("s", "t", "q", "T"), "(sigma^2/q) sinh(q min) sinh(q(T - max)) / sinh(qT)",
        lambda c: ou_mod.ou_bridge_cov(c["s"], c["t"], _tc(c)),
    ),
    "ou.process_cov": RegistryEntry(
        ("s", "t", "q", "T"), "(sigma^2/q) e^{q(max-min)} (e^{2q min} - 1) / 2",
        lambda c: ou_mod.ou_process_cov(c["s"], c["t"], _tc(c)),
    ),
    "ou.cov_with_process": RegistryEntry(
        ("kind", "t", "q", "T"), "covariance of the bridge with the free process at t",
        lambda c: ou_mod.ou_cov_with_process(c["kind"], c["t"], _tc(c)),
    ),
    "ou.deviation_law": RegistryEntry(
        ("kind", "t", "b", "q", "T"), "mean -b sinh(qt)/sinh(qT); kind-specific variance",
        lambda c: ou_mod.ou_deviation_law(c["kind"], c["t"], c["b"], _tc(c)),
    ),
    "ou.expected_quad_dev": RegistryEntry(
        ("kind", "b", "q", "T"), "integrated squared deviation of the mean-reverting bridges",
        lambda c: ou_mod.ou_expected_quad_dev(c["kind"], c["b"], _tc(c)),
    ),
    "ou.quad_integral": RegistryEntry(
        ("y",), "int_0^y (1 - e^{-2x}) log(sinh(y)/sinh(x)) dx",
        lambda c: ou_mod.ir_quad_integral(c["y"]),
    ),
}


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, GaussianMoment):
        return f"{value.mean:.15g} {value.variance:.15g}"
    return f"{float(value):.15g}"


# -- configuration ------------------------------------------------------------

_FLOAT_FLAGS = ("q", "sigma", "a", "b", "d", "T", "t", "s", "y", "b_tilde", "d_tilde")
_INT_FLAGS = ("steps", "reps", "seed", "grid", "samples")
_KNOWN_KEYS = frozenset(
    (*_FLOAT_FLAGS, *_INT_FLAGS, "kind", "process", "suite", "out", "no_plot", "statistic", "figure", "action", "path")
)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="JSON file with flat flag values; flags override")
    p.add_argument("--kind", choices=("av", "ir", "st"))
    p.add_argument("--process", choices=("wiener", "ou"))
    for name in _FLOAT_FLAGS:
        p.add_argument(f"--{name.replace('_', '-')}", type=float, dest=name)
    for name in _INT_FLAGS:
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--suite", choices=SUITE_CHOICES)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--no-plot", action="store_true", default=None, dest="no_plot",
                   help="skip the rendered image next to each delimited output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgelab",
        description="exact laws, simulation, and Monte Carlo verification for pinned diffusions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    oracle = sub.add_parser("oracle", help="print a closed-form statistic")
    oracle.add_argument("statistic", nargs="?", metavar="ID")
    simulate = sub.add_parser("simulate", help="write sampled paths as CSV")
    verify = sub.add_parser("verify", help="run a Monte Carlo verification suite")
    export = sub.add_parser("export", help="write figure data files")
    export.add_argument("figure", nargs="?", choices=FIGURE_CHOICES)
    man = sub.add_parser("manifest", help="replay a recorded run and compare digests")
    man.add_argument("action", nargs="?", choices=("replay",))
    man.add_argument("path", nargs="?", metavar="MANIFEST")
    for p in (oracle, simulate, verify, export, man):
        _add_common_flags(p)
    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    cli = {k: v for k, v in vars(args).items() if k != "command" and v is not None}
    cfg_path = cli.pop("config", None)
    merged: dict = {}
    if cfg_path is not None:
        path = Path(cfg_path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError(f"config {path} must hold a flat JSON object")
        unknown = sorted(set(raw) - _KNOWN_KEYS)
        if unknown:
            raise UsageError(f"config {path} has unknown keys {unknown!r}")
        merged.update(raw)
    merged.update(cli)
    return merged


def _require(cfg: dict, keys) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise UsageError(f"missing required values: {flags}")


# -- commands ------------------------------------------------------------------


def cmd_oracle(cfg: dict) -> int:
    statistic = cfg.get("statistic")
    if statistic is None:
        raise UsageError("oracle needs a statistic id; see the README registry table")
    entry = REGISTRY.get(statistic)
    if entry is None:
        known = ", ".join(sorted(REGISTRY))
        raise UsageError(f"unknown statistic id {statistic!r}; known ids: {known}")
    _require(cfg, entry.required)
    print(_format_value(entry.fn(cfg)))
    return EXIT_OK


def _resolve_simulate(cfg: dict) -> dict:
    resolved = {
        "process": cfg.get("process", "wiener"),
        "kind": cfg.get("kind", "av"),
        "a": cfg.get("a", 0.0),
        "b": cfg.get("b", 0.0),
        "T": cfg.get("T", 1.0),
        "steps": cfg.get("steps", 512),
        "reps": cfg.get("reps", 1),
        "seed": cfg.get("seed", 0),
        "out": cfg.get("out", "paths.csv"),
        "no_plot": bool(cfg.get("no_plot", False)),
    }
    if resolved["process"] not in ("wiener", "ou"):
        raise UsageError(f"unknown process {resolved['process']!r}; choose wiener or ou")
    if resolved["process"] == "ou":
        _require(cfg, ("q",))
        resolved["q"] = cfg["q"]
        resolved["sigma"] = cfg.get("sigma", 1.0)
    elif "q" in cfg or "sigma" in cfg:
        raise UsageError("q and sigma set the mean-reverting driver; add --process ou")
    if "d" in cfg:
        resolved["d"] = cfg["d"]
    return resolved


def cmd_simulate(cfg: dict) -> int:
    resolved = _resolve_simulate(cfg)
    grid = TimeGrid.uniform(resolved["T"], resolved["steps"])
    spec = BridgeSpec(resolved["a"], resolved["b"], resolved["T"], resolved["kind"])
    ids = np.arange(resolved["reps"])
    if resolved["process"] == "ou":
        bundle = paths.simulate_ou_bridges(grid, ProcessParams(resolved["q"], resolved["sigma"]), spec,
                                           resolved["seed"], ids)
    else:
        bundle = paths.simulate_wiener_bridges(grid, spec, resolved["seed"], ids)
    if "d" in resolved:
        bundle = paths.condition_on_endpoint(bundle, resolved["d"])
    out = Path(resolved["out"])
    paths.dump_paths_csv(bundle, out)
    images = []
    if not resolved["no_plot"]:
        images.append(figures.render_bundle(out.with_suffix(".png"), bundle))
    run = manifest.build_manifest("simulate", resolved, resolved["seed"], [out], images)
    manifest.write_manifest(run, manifest.manifest_path_for(out))
    for written in (out, *images, manifest.manifest_path_for(out)):
        print(f"wrote {written}")
    return EXIT_OK


def _payload(result: dict) -> dict:
    if "suites" in result:
        subs = [_payload(sub) for sub in result["suites"]]
        return {
            "suite": result["suite"],
            "suites": subs,
            "summary": {
                "gates": sum(s["summary"]["gates"] for s in subs),
                "failures": [f for s in subs for f in s["summary"]["failures"]],
            },
        }
    out = dict(result)
    reports = [r.to_dict() for r in result.get("reports", ())]
    out["reports"] = reports
    out["summary"] = {
        "gates": len(reports),
        "failures": [
            {"statistic": r["statistic"], "params": r["params"]} for r in reports if r["verdict"] == "fail"
        ],
    }
    return out


def _print_verify_summary(payload: dict) -> int:
    blocks = payload["suites"] if "suites" in payload else [payload]
    n_fail = 0
    for block in blocks:
        summary = block["summary"]
        failures = summary["failures"]
        n_fail += len(failures)
        print(f"suite {block['suite']}: {summary['gates']} gates, {len(failures)} failed")
        for item in failures:
            print(f"  FAIL {item['statistic']} {json.dumps(item['params'], sort_keys=True)}")
    return n_fail


def cmd_verify(cfg: dict) -> int:
    resolved = {
        "suite": cfg.get("suite", "all"),
        "seed": cfg.get("seed"),
        "reps": cfg.get("reps"),
        "grid": cfg.get("grid"),
    }
    resolved["out"] = cfg.get("out", f"verify-{resolved['suite']}.json")
    result = montecarlo.run_suite(
        resolved["suite"], master_seed=resolved["seed"], n_reps=resolved["reps"], grid=resolved["grid"]
    )
    payload = _payload(result)
    out = Path(resolved["out"])
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    run = manifest.build_manifest("verify", resolved, resolved["seed"], [out])
    manifest.write_manifest(run, manifest.manifest_path_for(out))
    n_fail = _print_verify_summary(payload)
    print(f"report {out}")
    return EXIT_GATE if n_fail else EXIT_OK


def _resolve_export(cfg: dict) -> dict:
    figure = cfg.get("figure")
    if figure is None:
        raise UsageError(f"export needs a figure name: {', '.join(FIGURE_CHOICES)}")
    if figure not in FIGURE_CHOICES:
        raise UsageError(f"unknown figure {figure!r}: choose from {', '.join(FIGURE_CHOICES)}")
    resolved = {"figure": figure, "out": cfg.get("out", f"{figure}.csv"), "no_plot": bool(cfg.get("no_plot", False))}
    if figure == "fig3":
        resolved["grid"] = cfg.get("grid", 201)
        return resolved
    resolved["seed"] = cfg.get("seed", {"fig1": 2601, "fig2": 2602, "fig4": 2604}[figure])
    resolved["steps"] = cfg.get("steps", 512)
    resolved["T"] = cfg.get("T", 1.0)
    resolved["a"] = cfg.get("a", 0.0)
    resolved["b"] = cfg.get("b", 0.0)
    if figure == "fig1":
        resolved["samples"] = cfg.get("samples", 2)
    if figure == "fig2":
        resolved["d"] = cfg.get("d", resolved["b"])
    if figure == "fig4":
        resolved["sigma"] = cfg.get("sigma", 1.0)
        if "q" in cfg:
            resolved["qs"] = [cfg["q"]]
        else:
            resolved["qs"] = [-1.0, 2.0]
    return resolved


def cmd_export(cfg: dict) -> int:
    resolved = _resolve_export(cfg)
    out, plot = Path(resolved["out"]), not resolved["no_plot"]
    figure = resolved["figure"]
    if figure == "fig1":
        result = figures.export_fig1(out, master_seed=resolved["seed"], steps=resolved["steps"],
                                     samples=resolved["samples"], a=resolved["a"], b=resolved["b"],
                                     T=resolved["T"], plot=plot)
    elif figure == "fig2":
        result = figures.export_fig2(out, master_seed=resolved["seed"], steps=resolved["steps"],
                                     a=resolved["a"], b=resolved["b"], d=resolved["d"],
                                     T=resolved["T"], plot=plot)
    elif figure == "fig3":
        result = figures.export_fig3(out, resolution=resolved["grid"], plot=plot)
    else:
        result = figures.export_fig4(out, master_seed=resolved["seed"], steps=resolved["steps"],
                                     sigma=resolved["sigma"], qs=resolved["qs"], a=resolved["a"],
                                     b=resolved["b"], T=resolved["T"], plot=plot)
    run = manifest.build_manifest("export", resolved, resolved.get("seed"), result["csv"],
                                  result["images"], result["notes"])
    manifest_file = manifest.write_manifest(run, manifest.manifest_path_for(out))
    for written in (*result["csv"], *result["images"], manifest_file):
        print(f"wrote {written}")
    for note in result["notes"]:
        print(f"note: {note}")
    return EXIT_OK


def cmd_manifest(cfg: dict) -> int:
    if cfg.get("action") != "replay":
        raise UsageError("usage: bridgelab manifest replay MANIFEST [--out DIR]")
    path = cfg.get("path")
    if path is None:
        raise UsageError("manifest replay needs the manifest file path")
    run = manifest.load_manifest(Path(path))
    handler = _REPLAYABLE.get(run.command)
    if handler is None:
        raise UsageError(f"manifest command {run.command!r} cannot be replayed")

    def replay_into(directory: Path) -> int:
        replay_cfg = dict(run.config)
        out_name = Path(replay_cfg["out"]).name
        replay_cfg["out"] = str(Path(directory) / out_name)
        handler(replay_cfg)
        status = manifest.compare_outputs(run, Path(directory))
        bad = 0
        for name, state in status.items():
            print(f"{state:8s} {name}")
            bad += state != "ok"
        return EXIT_GATE if bad else EXIT_OK

    out_dir = cfg.get("out")
    if out_dir is not None:
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        return replay_into(directory)
    with tempfile.TemporaryDirectory() as tmp:
        return replay_into(Path(tmp))


COMMANDS = {
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "export": cmd_export,
    "manifest": cmd_manifest,
}
_REPLAYABLE = {"simulate": cmd_simulate, "verify": cmd_verify, "export": cmd_export}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _merge_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BridgeLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
