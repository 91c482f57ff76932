"""Figure-data exports: delimited files with optional rendered companions.

Every export writes byte-stable CSV (17 significant digits, LF endings)
and, unless disabled, a PNG rendering next to each delimited file.  The
renderings are a convenience view of the same data; nothing numeric
depends on them and they are excluded from manifest digests.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import paths, wiener
from .errors import DomainError
from .ou import ProcessParams
from .paths import TimeGrid
from .wiener import BridgeKind, BridgeSpec, RegionPoint

_KINDS = (BridgeKind.AV, BridgeKind.IR, BridgeKind.ST)
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _write_rows(path: Path, header: str, rows) -> Path:
    path = Path(path)
    lines = [header]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")
    return path


def _numbered(out: Path, tag) -> Path:
    out = Path(out)
    suffix = out.suffix or ".csv"
    return out.with_name(f"{out.stem}_{tag}{suffix}")


def _png_for(path: Path) -> Path:
    return Path(path).with_suffix(".png")


def _render_series(png_path: Path, t: np.ndarray, series, ylabel: str, title: str) -> Path:
    from matplotlib.figure import Figure

    fig = Figure(figsize=(7.0, 4.2), dpi=120)
    ax = fig.add_subplot()
    for label, values, style in series:
        ax.plot(t, values, lw=1.1, label=label, **style)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path)
    return Path(png_path)


def _bundle_series(bundle: paths.PathBundle, label: str):
    styles = ({"color": "0.25", "ls": "-"}, {"ls": "--"}, {"ls": "-"}, {"ls": ":"})
    names = (label, f"{label}_av", f"{label}_ir", f"{label}_st")
    values = (bundle.process, *(bundle.derived[k.value] for k in _KINDS))
    return [(n, v, s) for n, v, s in zip(names, values, styles)]


def _path_rows(grid: TimeGrid, bundle: paths.PathBundle, row: int):
    columns = [grid.points, bundle.process[row]] + [bundle.derived[k.value][row] for k in _KINDS]
    return zip(*columns)


def render_bundle(png_path, bundle: paths.PathBundle, max_rows: int = 3) -> Path:
    """Render the first few replicates of a built bundle to one image."""
    if not bundle.derived:
        raise DomainError("bundle has no built bridges to render")
    label = "W" if bundle.params is None else "U"
    t = bundle.grid.points
    from matplotlib.figure import Figure

    rows = min(max_rows, bundle.n_replicates)
    fig = Figure(figsize=(7.0, 2.6 * rows), dpi=120)
    axes = fig.subplots(rows, 1, squeeze=False)
    for i in range(rows):
        ax = axes[i][0]
        for name, values, style in _bundle_series(bundle, label):
            ax.plot(t, values[i], lw=1.1, label=name, **style)
        ax.set_ylabel("level")
        ax.legend(fontsize=7)
    axes[-1][0].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(png_path)
    return Path(png_path)


def export_fig1(
    out,
    *,
    master_seed: int = 2601,
    steps: int = 512,
    samples: int = 2,
    a: float = 0.0,
    b: float = 0.0,
    T: float = 1.0,
    plot: bool = True,
) -> dict:
    """Sample paths of the driver with its three bridge constructions.

    One CSV (columns t,W,W_av,W_ir,W_st) per sample; the three bridges in a
    sample share the driver.
    """
    if samples < 1:
        raise DomainError(f"need at least one sample, got {samples!r}")
    grid = TimeGrid.uniform(T, steps)
    spec = BridgeSpec(a, b, T, BridgeKind.AV)
    bundle = paths.simulate_wiener_bridges(grid, spec, master_seed, np.arange(samples))
    csv_files, images = [], []
    for i in range(samples):
        csv_path = _write_rows(_numbered(out, i), "t,W,W_av,W_ir,W_st", _path_rows(grid, bundle, i))
        csv_files.append(csv_path)
        if plot:
            series = [(n, v[i], s) for n, v, s in _bundle_series(bundle, "W")]
            images.append(_render_series(_png_for(csv_path), grid.points, series, "level",
                                         f"driver and bridges, sample {i}"))
    return {"csv": csv_files, "images": images, "notes": []}


def export_fig2(
    out,
    *,
    master_seed: int = 2602,
    steps: int = 512,
    a: float = 0.0,
    b: float = 0.0,
    d: float | None = None,
    T: float = 1.0,
    plot: bool = True,
) -> dict:
    """One sample on a driver conditioned to end at d (default: at b)."""
    if d is None:
        d = b
    grid = TimeGrid.uniform(T, steps)
    spec = BridgeSpec(a, b, T, BridgeKind.AV)
    bundle = paths.simulate_wiener_bridges(grid, spec, master_seed, np.arange(1))
    bundle = paths.condition_on_endpoint(bundle, float(d))
    csv_path = _write_rows(Path(out), "t,W,W_av,W_ir,W_st", _path_rows(grid, bundle, 0))
    images = []
    if plot:
        series = [(n, v[0], s) for n, v, s in _bundle_series(bundle, "W")]
        images.append(_render_series(_png_for(csv_path), grid.points, series, "level",
                                     f"driver conditioned to end at {d:g}"))
    return {"csv": [csv_path], "images": images, "notes": []}


def region_grid_labels(resolution: int = 201, half_width: float = 10.0):
    """Letter per lattice point, with the boundary flag kept separate.

    The axis hits integer coordinates exactly, so lattice points that sit
    on a boundary curve are flagged rather than silently misclassified;
    their letters follow the deterministic tie-break of the sign tests.
    """
    if resolution < 2:
        raise DomainError(f"the lattice needs at least 2 points per axis, got {resolution!r}")
    axis = np.arange(resolution) * (2.0 * half_width) / (resolution - 1) - half_width
    letters = np.empty((resolution, resolution), dtype="U1")
    boundary = np.zeros((resolution, resolution), dtype=bool)
    for i, b_tilde in enumerate(axis):
        for j, d_tilde in enumerate(axis):
            label = wiener.region_classify(RegionPoint(b_tilde, d_tilde))
            letters[i, j] = label.letter or wiener.ordering_letter(label.ordering)
            boundary[i, j] = label.boundary
    return axis, letters, boundary


def export_fig3(
    out,
    *,
    resolution: int = 201,
    half_width: float = 10.0,
    plot: bool = True,
) -> dict:
    """Region map of the conditional deviation orderings on a square lattice.

    CSV columns: b_tilde, d_tilde, label, boundary (0/1); labels are the
    four region letters only.
    """
    axis, letters, boundary = region_grid_labels(resolution, half_width)
    rows = (
        (axis[i], axis[j], letters[i, j], int(boundary[i, j]))
        for i in range(resolution)
        for j in range(resolution)
    )
    csv_path = _write_rows(Path(out), "b_tilde,d_tilde,label,boundary", rows)
    images = []
    if plot:
        images.append(_render_regions(_png_for(csv_path), axis, letters))
    return {"csv": [csv_path], "images": images, "notes": []}


def _render_regions(png_path: Path, axis: np.ndarray, letters: np.ndarray) -> Path:
    from matplotlib.colors import ListedColormap
    from matplotlib.figure import Figure

    order = "ABCD"
    codes = np.vectorize(order.index)(letters)
    fig = Figure(figsize=(5.4, 4.8), dpi=120)
    ax = fig.add_subplot()
    half = (axis[1] - axis[0]) / 2.0
    extent = (axis[0] - half, axis[-1] + half, axis[0] - half, axis[-1] + half)
    image = ax.imshow(
        codes.T,
        origin="lower",
        extent=extent,
        cmap=ListedColormap(("#4c72b0", "#dd8452", "#55a868", "#c44e52")),
        vmin=-0.5,
        vmax=3.5,
        interpolation="nearest",
    )
    bar = fig.colorbar(image, ax=ax, ticks=range(4))
    bar.ax.set_yticklabels(order)
    ax.set_xlabel("b_tilde")
    ax.set_ylabel("d_tilde")
    ax.set_title("ordering regions of the conditional integrated deviations", fontsize=9)
    fig.tight_layout()
    fig.savefig(png_path)
    return Path(png_path)


def export_fig4(
    out,
    *,
    master_seed: int = 2604,
    steps: int = 512,
    sigma: float = 1.0,
    qs=(-1.0, 2.0),
    a: float = 0.0,
    b: float = 0.0,
    T: float = 1.0,
    plot: bool = True,
) -> dict:
    """Sample paths of the mean-reverting process with its three bridges.

    One CSV (columns t,U,U_av,U_ir,U_st) per rate; the metadata notes
    record each sample's integrated squared deviations, a qualitative view
    of how a driver ending near the pinned level can pull the anticipative
    construction below the integral one at strong positive rates.
    """
    grid = TimeGrid.uniform(T, steps)
    spec = BridgeSpec(a, b, T, BridgeKind.AV)
    csv_files, images, notes = [], [], []
    for q in qs:
        params = ProcessParams(float(q), float(sigma))
        bundle = paths.simulate_ou_bridges(grid, params, spec, master_seed, np.arange(1))
        tag = f"q{q:g}"
        csv_path = _write_rows(_numbered(out, tag), "t,U,U_av,U_ir,U_st", _path_rows(grid, bundle, 0))
        csv_files.append(csv_path)
        quads = {
            kind.value: float(_trapezoid((bundle.process[0] - bundle.derived[kind.value][0]) ** 2, grid.points))
            for kind in _KINDS
        }
        end = float(bundle.w[0, -1])
        notes.append(
            f"q={q:g}: sampled integrated squared deviations "
            f"av={quads['av']:.6g} ir={quads['ir']:.6g} st={quads['st']:.6g}; "
            f"driver endpoint {end:.6g} vs pinned level {b:g}"
        )
        if plot:
            series = [(n, v[0], s) for n, v, s in _bundle_series(bundle, "U")]
            images.append(_render_series(_png_for(csv_path), grid.points, series, "level",
                                         f"mean-reverting process and bridges, q={q:g}"))
    notes.append(
        "at strongly positive rates a driver ending near the pinned level makes the "
        "anticipative construction hug the process, so its sampled integrated deviation "
        "can fall below the integral construction's (not a gate)"
    )
    return {"csv": csv_files, "images": images, "notes": notes}
