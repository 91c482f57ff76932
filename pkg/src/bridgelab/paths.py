"""Sample paths for the three bridge constructions from one driving path.

The driver is realized exactly on a merged time set: the reporting grid
joined with the transformed times the space-time construction reads
(t T/(T - t) for the Wiener family, the kappa-ratio map for OU).  Auxiliary
stochastic integrals (the 1/(T - s) and hyperbolic-kernel accumulators and
the e^{-qs} integral behind the OU process) are sampled jointly with each
driver increment from their exact per-step Gaussian law, so path values at
the reported times carry no discretization bias.  The only approximations
downstream are Monte Carlo error and, for integral functionals, quadrature
of the reported path itself.

Replicates draw from counter-based streams keyed by (master_seed,
replicate_index); a replicate's path does not depend on batch boundaries or
execution order.  Each replicate consumes one fixed-layout block of
standard normals: the driver increments over the merged steps first, then
the auxiliary coordinates in step order.
"""

from __future__ import annotations

import dataclasses
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, NumericalError, UnsupportedOperationError
from . import ou
from . import wiener

__all__ = [
    "TimeGrid",
    "SeedSpec",
    "PathBundle",
    "st_transform_times",
    "ou_transform_times",
    "gen_wiener",
    "gen_wiener_block",
    "build_wiener_bridges",
    "build_ou_paths",
    "simulate_wiener_bridges",
    "simulate_ou_bridges",
    "condition_on_endpoint",
    "euler_bridge",
    "grid_increments",
    "dump_paths_csv",
]

# Slack for per-step conditional covariances: 1e-10 absolute, or relative
# to the entry scale when entries are large.  The entries are exact closed
# forms, so a transcription error shows up at entry scale; rounding noise
# stays near machine epsilon times the step length, far below this floor
# even on merged grids with nearly coincident times.
_PSD_TOL = 1e-10


def _psd_slack(*entries: np.ndarray) -> np.ndarray:
    scale = np.maximum.reduce([np.abs(np.asarray(e, dtype=float)) for e in entries])
    return _PSD_TOL * np.maximum(scale, 1.0)


# Coefficients of (1+e^{-x})/2 - (1-e^{-x})/x = sum_{k>=2} (-1)^k (k-1) x^k / (2 (k+1)!)
_PHI_COEFFS = [(-1.0) ** k * (k - 1) / (2.0 * math.factorial(k + 1)) for k in range(2, 13)]


def _phi_centered(x: np.ndarray) -> np.ndarray:
    """(1+e^{-x})/2 - (1-e^{-x})/x, the step-mean defect of the e^{-qs} kernel.

    The literal form cancels at x^2/12 scale, so small arguments use the
    series; together with the (1-e^{-x})/q prefactor this gives the
    conditional variance of the exponential integral given the driver
    increment to full relative precision.
    """
    x = np.asarray(x, dtype=np.longdouble)
    out = np.empty_like(x)
    small = np.abs(x) < 0.1
    xs = x[small]
    acc = np.full_like(xs, _PHI_COEFFS[-1])
    for c in _PHI_COEFFS[-2::-1]:
        acc = acc * xs + c
    out[small] = acc * xs * xs
    xl = x[~small]
    out[~small] = (1.0 + np.exp(-xl)) / 2.0 - -np.expm1(-xl) / xl
    return out


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing reporting times 0 = t_0 < ... < t_n = T."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise DomainError("a grid needs at least the two endpoints 0 and T")
        if not np.isfinite(pts).all():
            raise DomainError("grid times must be finite")
        if pts[0] != 0.0:
            raise DomainError(f"first grid time must be 0, got {pts[0]!r}")
        if not (np.diff(pts) > 0.0).all():
            raise DomainError("grid times must be strictly increasing")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, T: float, n_steps: int) -> "TimeGrid":
        T = float(T)
        n_steps = int(n_steps)
        if not (math.isfinite(T) and T > 0.0):
            raise DomainError(f"horizon must be positive and finite, got {T!r}")
        if n_steps < 1:
            raise DomainError(f"need at least one step, got {n_steps!r}")
        return cls(np.linspace(0.0, T, n_steps + 1))

    @property
    def T(self) -> float:
        return float(self.points[-1])

    @property
    def n_steps(self) -> int:
        return self.points.size - 1


@dataclass(frozen=True)
class SeedSpec:
    """Replicate address inside the deterministic stream family."""

    master_seed: int
    replicate_index: int = 0

    def __post_init__(self) -> None:
        if not (0 <= int(self.master_seed) < 2**64):
            raise DomainError(f"master seed must fit in 64 bits, got {self.master_seed!r}")
        if int(self.replicate_index) < 0:
            raise DomainError(f"replicate index must be nonnegative, got {self.replicate_index!r}")


def _replicate_stream(master_seed: int, replicate_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(replicate_index),))
    return np.random.Generator(np.random.Philox(seq))


def _draw_block(master_seed: int, replicate_ids: np.ndarray, k_total: int) -> np.ndarray:
    out = np.empty((replicate_ids.size, k_total))
    for i, rep in enumerate(replicate_ids):
        out[i] = _replicate_stream(master_seed, int(rep)).standard_normal(k_total)
    return out


def st_transform_times(grid: TimeGrid) -> np.ndarray:
    """Driver evaluation times t T/(T - t) for the interior grid points."""
    T = grid.T
    interior = grid.points[1:-1]
    return interior * T / (T - interior)


def ou_transform_times(grid: TimeGrid, tc: ou.TimeChange) -> np.ndarray:
    """Driver evaluation times kappa*_T(t) for the interior grid points."""
    if tc.T != grid.T:
        raise DomainError(f"time change horizon {tc.T!r} does not match the grid horizon {grid.T!r}")
    return np.array([ou.kappa_star(float(t), tc) for t in grid.points[1:-1]])


@dataclass
class PathBundle:
    """One batch of replicates sharing a grid and a seed layout.

    ``dw`` and ``aux_z`` are the sampled coordinates everything else is a
    deterministic function of: ``dw`` holds the driver increments over the
    merged steps and ``aux_z`` the raw standard normals behind the
    auxiliary integrals (their per-step laws conditional on the driver are
    applied at build time).  Endpoint conditioning therefore only ever
    shifts ``dw``; rebuilt auxiliaries pick up exactly the linear-Gaussian
    projection through their closed-form covariances with the driver.
    """

    grid: TimeGrid
    times: np.ndarray
    grid_idx: np.ndarray
    master_seed: int
    replicate_ids: np.ndarray
    aux_mode: str
    dw: np.ndarray
    aux_z: np.ndarray
    w_full: np.ndarray
    endpoint_value: float | None = None
    spec: wiener.BridgeSpec | None = None
    params: ou.ProcessParams | None = None
    ext_idx: np.ndarray | None = None
    derived: dict[str, np.ndarray] = field(default_factory=dict)
    process: np.ndarray | None = None
    m: np.ndarray | None = None

    @property
    def n_replicates(self) -> int:
        return self.replicate_ids.size

    def _w_effective(self) -> np.ndarray:
        """Driver values at the merged times, honoring the conditioned endpoint."""
        if self.endpoint_value is None:
            return self.w_full
        out = self.w_full.copy()
        out[:, self.grid_idx[-1]] = self.endpoint_value
        return out

    @property
    def w(self) -> np.ndarray:
        """Driver values at the grid points, one row per replicate."""
        return self._w_effective()[:, self.grid_idx]

    @property
    def w_ext(self) -> np.ndarray:
        """Driver values at the transformed interior times (set at build time)."""
        if self.ext_idx is None:
            raise DomainError("bundle has no built bridges, so no transformed-time values")
        return self._w_effective()[:, self.ext_idx]


def _merge_times(grid: TimeGrid, extended_times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ext = np.asarray(extended_times, dtype=float).ravel()
    if ext.size and not np.isfinite(ext).all():
        raise DomainError("extended times must be finite")
    if ext.size and ext.min() < 0.0:
        raise DomainError("extended times must be nonnegative")
    times = np.unique(np.concatenate([grid.points, ext]))
    grid_idx = np.searchsorted(times, grid.points)
    return times, grid_idx


def _aux_size(times: np.ndarray, grid: TimeGrid, aux_mode: str) -> tuple[int, int, int]:
    """Return (k_m, k_T, total aux normals) for the fixed per-replicate layout.

    k_m counts merged steps whose right end is at most t_{n-1} (the steps
    carrying the singular-kernel accumulators) and k_T those with right end
    at most T (the steps inside the horizon).
    """
    k_m = int(np.searchsorted(times, grid.points[-2]))
    k_T = int(np.searchsorted(times, grid.T))
    if aux_mode == "wiener":
        return k_m, k_T, k_m
    if aux_mode == "ou":
        return k_m, k_T, 2 * k_m + (k_T - k_m)
    if aux_mode == "none":
        return k_m, k_T, 0
    raise DomainError(f"unknown auxiliary layout {aux_mode!r}")


def gen_wiener_block(
    grid: TimeGrid,
    extended_times: np.ndarray,
    master_seed: int,
    replicate_ids,
    aux_mode: str = "wiener",
) -> PathBundle:
    """Generate driver paths for a batch of replicates (driver only).

    The driver is exact at every merged time; auxiliary normals are drawn
    now (fixing the stream layout) but interpreted only when bridges are
    built, so the same bundle can be rebuilt deterministically.
    """
    SeedSpec(master_seed, 0)
    reps = np.asarray(replicate_ids, dtype=np.int64).ravel()
    if reps.size == 0:
        raise DomainError("need at least one replicate")
    if reps.min() < 0:
        raise DomainError("replicate indices must be nonnegative")
    times, grid_idx = _merge_times(grid, extended_times)
    k_steps = times.size - 1
    _, _, k_aux = _aux_size(times, grid, aux_mode)
    block = _draw_block(master_seed, reps, k_steps + k_aux)
    dw = block[:, :k_steps] * np.sqrt(np.diff(times))
    aux_z = block[:, k_steps:]
    w_full = np.concatenate([np.zeros((reps.size, 1)), np.cumsum(dw, axis=1)], axis=1)
    return PathBundle(
        grid=grid,
        times=times,
        grid_idx=grid_idx,
        master_seed=int(master_seed),
        replicate_ids=reps,
        aux_mode=aux_mode,
        dw=dw,
        aux_z=aux_z,
        w_full=w_full,
    )


def gen_wiener(grid: TimeGrid, extended_times: np.ndarray, seed: SeedSpec, aux_mode: str = "wiener") -> PathBundle:
    """Generate one replicate's driver path; see gen_wiener_block."""
    return gen_wiener_block(grid, extended_times, seed.master_seed, [seed.replicate_index], aux_mode)


def _refresh_driver(bundle: PathBundle, dw: np.ndarray, endpoint_value: float | None) -> PathBundle:
    w_full = np.concatenate([np.zeros((bundle.n_replicates, 1)), np.cumsum(dw, axis=1)], axis=1)
    return dataclasses.replace(
        bundle,
        dw=dw,
        w_full=w_full,
        endpoint_value=endpoint_value,
        ext_idx=None,
        derived={},
        process=None,
        m=None,
    )


def _locate_exact(times: np.ndarray, wanted: np.ndarray, label: str) -> np.ndarray:
    idx = np.searchsorted(times, wanted)
    if idx.size and ((idx >= times.size).any() or not np.array_equal(times[idx], wanted)):
        raise DomainError(f"driver was not generated at the {label} evaluation times")
    return idx


def build_wiener_bridges(bundle: PathBundle, spec: wiener.BridgeSpec) -> PathBundle:
    """Build all three bridge constructions on the bundle's shared driver.

    Every construction is built regardless of ``spec.kind`` so they can be
    compared pathwise; endpoint data a, b and the horizon come from
    ``spec``.  The integral construction uses the exact jointly sampled
    accumulator of 1/(T - s) dW_s; the space-time construction reads the
    driver at t T/(T - t), which must already be in the merged time set.
    """
    if spec.T != bundle.grid.T:
        raise DomainError(f"bridge horizon {spec.T!r} does not match the grid horizon {bundle.grid.T!r}")
    if bundle.aux_mode != "wiener":
        raise DomainError(f"bundle was generated with auxiliary layout {bundle.aux_mode!r}, not 'wiener'")
    grid, times = bundle.grid, bundle.times
    T, n = grid.T, grid.n_steps
    a, b = spec.a, spec.b
    pts = grid.points
    ext_idx = _locate_exact(times, st_transform_times(grid), "transformed")
    k_m, _, _ = _aux_size(times, grid, bundle.aux_mode)

    left, right = times[:k_m], times[1 : k_m + 1]
    h = right - left
    d0, d1 = T - left, T - right
    cov_wm = -np.log1p(-h / d0)
    var_m = h / (d0 * d1)
    resid = var_m - cov_wm * cov_wm / h
    if k_m and (resid < -_psd_slack(var_m, cov_wm * cov_wm / h)).any():
        k_bad = int(np.argmin(resid))
        raise NumericalError(f"accumulator step {k_bad} has indefinite conditional variance {resid[k_bad]!r}")
    dm = bundle.dw[:, :k_m] * (cov_wm / h) + bundle.aux_z[:, :k_m] * np.sqrt(np.clip(resid, 0.0, None))
    m_cum = np.concatenate([np.zeros((bundle.n_replicates, 1)), np.cumsum(dm, axis=1)], axis=1)
    m_grid = m_cum[:, bundle.grid_idx[:n]]

    w_eff = bundle._w_effective()
    w_grid = w_eff[:, bundle.grid_idx]
    w_T = w_grid[:, -1:]
    mean_line = a + (b - a) * pts / T

    av = mean_line[None, :] + w_grid - (pts / T)[None, :] * w_T
    ir = np.empty_like(av)
    ir[:, :n] = mean_line[None, :n] + (T - pts[:n])[None, :] * m_grid
    st = np.empty_like(av)
    st[:, 0] = a
    if n > 1:
        frac = (T - pts[1:-1]) / T
        st[:, 1:-1] = mean_line[None, 1:-1] + frac[None, :] * w_eff[:, ext_idx]
    # the continuous extension pins every construction to b at T
    av[:, -1] = b
    ir[:, -1] = b
    st[:, -1] = b

    return dataclasses.replace(
        bundle,
        spec=spec,
        params=None,
        ext_idx=ext_idx,
        derived={"av": av, "ir": ir, "st": st},
        process=w_grid,
        m=m_grid,
    )


def _chol2(a11, a12, a22, what: str):
    """Cholesky factors of per-step 2x2 conditional covariances, with slack."""
    slack = _psd_slack(a11, a12, a22)
    if (a11 < -slack).any():
        raise NumericalError(f"{what}: indefinite conditional variance (first coordinate)")
    l11 = np.sqrt(np.clip(a11, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        l21 = np.where(l11 > 0.0, a12 / np.where(l11 > 0.0, l11, 1.0), 0.0)
    if ((l11 == 0.0) & (np.abs(a12) > slack)).any():
        raise NumericalError(f"{what}: degenerate step still carries cross covariance")
    resid = a22 - l21 * l21
    if (resid < -_psd_slack(a22, l21 * l21)).any():
        raise NumericalError(f"{what}: indefinite conditional variance (second coordinate)")
    l22 = np.sqrt(np.clip(resid, 0.0, None))
    return l11, l21, l22


def build_ou_paths(bundle: PathBundle, params: ou.ProcessParams, spec: wiener.BridgeSpec) -> PathBundle:
    """Build the OU process and all three OU bridges on the shared driver.

    The process follows the exact recursion through the jointly sampled
    e^{-qs} dW integral; the integral construction accumulates the
    1/sinh(q(T - s)) kernel; the space-time construction reads the driver
    at the kappa-ratio times, which must already be in the merged set.
    Per-step covariance entries are closed forms, so sampled values have
    the exact joint law with the driver at the merged times.
    """
    if spec.T != bundle.grid.T:
        raise DomainError(f"bridge horizon {spec.T!r} does not match the grid horizon {bundle.grid.T!r}")
    if bundle.aux_mode != "ou":
        raise DomainError(f"bundle was generated with auxiliary layout {bundle.aux_mode!r}, not 'ou'")
    tc = ou.TimeChange(params, bundle.grid.T)
    grid, times = bundle.grid, bundle.times
    T, n = grid.T, grid.n_steps
    a, b = spec.a, spec.b
    q, sig = params.q, params.sigma
    pts = grid.points
    ext_idx = _locate_exact(times, ou_transform_times(grid, tc), "transformed")
    k_m, k_T, _ = _aux_size(times, grid, bundle.aux_mode)

    # Per-step coefficients reduce tiny conditional residuals from O(step)
    # primitives; extended precision plus the _phi_centered rewrite keeps
    # them accurate on merged grids with nearly coincident times.
    ld = np.longdouble
    left, right = times[:k_T].astype(ld), times[1 : k_T + 1].astype(ld)
    qd, Td = ld(q), ld(T)
    h = right - left
    x = qd * h
    cov_wv = np.exp(-qd * left) * -np.expm1(-x) / qd
    # exact conditional variance of the e^{-qs} integral given the driver
    var_v_resid = np.exp(-2.0 * qd * left) * (-np.expm1(-x) / qd) * _phi_centered(x)

    hm, d0, d1 = h[:k_m], Td - left[:k_m], Td - right[:k_m]
    xm = x[:k_m]
    var_n = np.sinh(xm) / (qd * np.sinh(qd * d1) * np.sinh(qd * d0))
    cov_wn = np.log1p(np.sinh(xm / 2.0) / (np.cosh(qd * d0 / 2.0) * np.sinh(qd * d1 / 2.0))) / qd
    cov_vn = np.exp(-qd * Td) * (
        hm + np.log1p(2.0 * np.cosh(qd * (d0 + d1) / 2.0) * np.sinh(xm / 2.0) / np.sinh(qd * d1)) / qd
    )

    dw_in = bundle.dw[:, :k_T]
    z1 = bundle.aux_z[:, 0 : 2 * k_m : 2]
    z2 = bundle.aux_z[:, 1 : 2 * k_m : 2]
    z_tail = bundle.aux_z[:, 2 * k_m : 2 * k_m + (k_T - k_m)]

    a11 = var_v_resid[:k_m]
    a12 = cov_vn - cov_wv[:k_m] * cov_wn / hm
    a22 = var_n - cov_wn**2 / hm
    l11, l21, l22 = _chol2(a11, a12, a22, "hyperbolic-kernel step")
    beta_v = (cov_wv / h).astype(float)
    beta_n = (cov_wn / hm).astype(float)
    dv = np.empty_like(dw_in)
    dv[:, :k_m] = dw_in[:, :k_m] * beta_v[:k_m] + l11.astype(float) * z1
    dn = dw_in[:, :k_m] * beta_n + l21.astype(float) * z1 + l22.astype(float) * z2
    # residual variance of the tail steps is the same analytically
    # nonnegative product as a11, so no indefiniteness is possible there
    dv[:, k_m:] = dw_in[:, k_m:] * beta_v[k_m:] + np.sqrt(np.clip(var_v_resid[k_m:], 0.0, None)).astype(
        float
    ) * z_tail

    zeros = np.zeros((bundle.n_replicates, 1))
    v_cum = np.concatenate([zeros, np.cumsum(dv, axis=1)], axis=1)
    n_cum = np.concatenate([zeros, np.cumsum(dn, axis=1)], axis=1)
    v_grid = v_cum[:, bundle.grid_idx]
    n_grid = n_cum[:, bundle.grid_idx[:n]]

    process = np.exp(q * pts)[None, :] * (a + sig * v_grid)
    means = np.array([ou.ou_bridge_mean(float(t), a, b, tc) for t in pts])

    # kappa(t)/kappa(T) and its complement, in overflow-free ratio form
    kap_frac = np.expm1(-2.0 * q * pts[:n]) / math.expm1(-2.0 * q * T)
    av = np.empty((bundle.n_replicates, n + 1))
    av[:, :n] = means[None, :n] + sig * np.exp(q * pts[:n])[None, :] * (v_grid[:, :n] - kap_frac[None, :] * v_grid[:, -1:])
    ir = np.empty_like(av)
    ir[:, :n] = means[None, :n] + sig * np.sinh(q * (T - pts[:n]))[None, :] * n_grid
    st = np.empty_like(av)
    st[:, 0] = a
    if n > 1:
        t_in = pts[1:-1]
        coef = np.exp(-q * t_in) * np.expm1(-2.0 * q * (T - t_in)) / math.expm1(-2.0 * q * T)
        st[:, 1:-1] = means[None, 1:-1] + sig * coef[None, :] * bundle._w_effective()[:, ext_idx]
    for arr in (av, ir, st):
        arr[:, 0] = a
        arr[:, -1] = b

    return dataclasses.replace(
        bundle,
        spec=spec,
        params=params,
        ext_idx=ext_idx,
        derived={"av": av, "ir": ir, "st": st},
        process=process,
        m=n_grid,
    )


def simulate_wiener_bridges(grid: TimeGrid, spec: wiener.BridgeSpec, master_seed: int, replicate_ids) -> PathBundle:
    """Generate a driver batch and build the three Wiener bridges on it."""
    bundle = gen_wiener_block(grid, st_transform_times(grid), master_seed, replicate_ids, aux_mode="wiener")
    return build_wiener_bridges(bundle, spec)


def simulate_ou_bridges(
    grid: TimeGrid, params: ou.ProcessParams, spec: wiener.BridgeSpec, master_seed: int, replicate_ids
) -> PathBundle:
    """Generate a driver batch and build the OU process and bridges on it."""
    tc = ou.TimeChange(params, grid.T)
    bundle = gen_wiener_block(grid, ou_transform_times(grid, tc), master_seed, replicate_ids, aux_mode="ou")
    return build_ou_paths(bundle, params, spec)


def condition_on_endpoint(bundle: PathBundle, d: float) -> PathBundle:
    """Condition every stored Gaussian coordinate on the driver ending at d.

    The update is the exact linear projection X -> X + (d - W_T) Cov(X, W_T)/T
    applied through the driver increments: the auxiliary integrals depend on
    the terminal value only through their own step's driver increment, so
    rebuilding them from the shifted increments realizes the joint
    projection.  The terminal driver value is then pinned to d exactly, which
    makes the operation idempotent bit for bit.
    """
    d = float(d)
    if not math.isfinite(d):
        raise DomainError(f"conditioning level must be finite, got {d!r}")
    if bundle.params is not None or bundle.aux_mode == "ou":
        raise UnsupportedOperationError(
            "endpoint conditioning is only available for the Wiener family; "
            "the OU constructions have no verified conditional law here"
        )
    T = bundle.grid.T
    t_pos = bundle.grid_idx[-1]
    w_T = bundle.endpoint_value if bundle.endpoint_value is not None else bundle.w_full[:, t_pos]
    shift = (d - w_T) / T
    _, k_T, _ = _aux_size(bundle.times, bundle.grid, bundle.aux_mode)
    dw = bundle.dw.copy()
    dw[:, :k_T] += np.atleast_1d(shift)[:, None] * np.diff(bundle.times)[None, :k_T]
    conditioned = _refresh_driver(bundle, dw, endpoint_value=d)
    if bundle.spec is not None:
        return build_wiener_bridges(conditioned, bundle.spec)
    return conditioned


def grid_increments(bundle: PathBundle) -> np.ndarray:
    """Driver increments aggregated to the reporting grid, one row per replicate."""
    w = bundle.w_full[:, bundle.grid_idx]
    return np.diff(w, axis=1)


def euler_bridge(
    grid: TimeGrid, dw: np.ndarray, spec: wiener.BridgeSpec, params: ou.ProcessParams | None = None
) -> np.ndarray:
    """Explicit Euler path of the bridge SDE on the grid-level driver.

    The drift is (b - x)/(T - t) for the Wiener family and
    q(-coth(q(T - t)) x + b/sinh(q(T - t))) for OU; both are singular at T,
    so the final step assigns the pinned value b without evaluating them.
    """
    dw = np.atleast_2d(np.asarray(dw, dtype=float))
    if spec.T != grid.T:
        raise DomainError(f"bridge horizon {spec.T!r} does not match the grid horizon {grid.T!r}")
    if dw.shape[1] != grid.n_steps:
        raise DomainError(f"driver has {dw.shape[1]} increments for a {grid.n_steps}-step grid")
    pts = grid.points
    T, n = grid.T, grid.n_steps
    x = np.empty((dw.shape[0], n + 1))
    x[:, 0] = spec.a
    if params is None:
        for k in range(n - 1):
            hk = pts[k + 1] - pts[k]
            x[:, k + 1] = x[:, k] + (spec.b - x[:, k]) / (T - pts[k]) * hk + dw[:, k]
    else:
        tc = ou.TimeChange(params, T)
        q, sig = tc.q, tc.sigma
        for k in range(n - 1):
            hk = pts[k + 1] - pts[k]
            sh = math.sinh(q * (T - pts[k]))
            drift = q * (spec.b / sh - x[:, k] * math.cosh(q * (T - pts[k])) / sh)
            x[:, k + 1] = x[:, k] + drift * hk + sig * dw[:, k]
    x[:, n] = spec.b
    return x


def dump_paths_csv(bundle: PathBundle, dest) -> None:
    """Write one row per (replicate, grid time) with the process and bridge values.

    Columns are replicate, t, then the process and the three constructions;
    rows are replicate-major in grid order, floats use shortest-roundtrip
    decimal (17 significant digits), lines end with LF.
    """
    if not bundle.derived:
        raise DomainError("bundle has no built bridges to dump")
    label = "W" if bundle.params is None else "U"
    header = f"replicate,t,{label},{label}_av,{label}_ir,{label}_st"
    process = bundle.process
    av, ir, st = bundle.derived["av"], bundle.derived["ir"], bundle.derived["st"]
    lines = [header]
    for i, rep in enumerate(bundle.replicate_ids):
        for k, t in enumerate(bundle.grid.points):
            lines.append(
                f"{int(rep)},{t:.17g},{process[i, k]:.17g},{av[i, k]:.17g},{ir[i, k]:.17g},{st[i, k]:.17g}"
            )
    text = "\n".join(lines) + "\n"
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    elif isinstance(dest, io.TextIOBase) or hasattr(dest, "write"):
        dest.write(text)
    else:
        raise DomainError(f"cannot write paths to {dest!r}")
