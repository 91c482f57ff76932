"""Closed forms for Wiener bridge constructions and their path deviations.

Three bridges from ``a`` to ``b`` over ``[0, T]`` are built from one driving
Wiener path ``W``:

* ``AV`` (anticipative): ``a + (b-a)t/T + W_t - (t/T) W_T``
* ``IR`` (integral representation): ``a + (b-a)t/T + int_0^t (T-t)/(T-s) dW_s``
* ``ST`` (space-time transform): ``a + (b-a)t/T + ((T-t)/T) W_{tT/(T-t)}``

All three share the bridge mean ``a + (b-a)t/T`` and covariance
``s(T-t)/T`` (for ``s <= t``), but they differ as path functionals of ``W``,
so the deviation ``W_t - W_t^br`` has a kind-dependent law.  This module
evaluates those laws and the integrated deviation statistics exactly; start
levels other than zero reduce exactly through ``b - a``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError, NumericalError
from .gauss import GaussianMoment, folded_mean

__all__ = [
    "BridgeKind",
    "BridgeSpec",
    "RegionPoint",
    "RegionLabel",
    "bridge_mean",
    "bridge_cov",
    "corr_with_process",
    "deviation_law",
    "cond_deviation_law",
    "expected_abs_dev",
    "expected_quad_dev",
    "expected_cond_quad_dev",
    "ir_deviation_variance",
    "region_classify",
]

# |r| at or below this marks a point as lying on a region boundary curve.
REGION_BOUNDARY_TOL = 1e-12

# t/T below this switches the IR deviation variance to its power series.
_IR_VAR_SERIES_CUTOFF = 0.01


class BridgeKind(str, enum.Enum):
    """The three bridge constructions sharing one driving path."""

    AV = "av"
    IR = "ir"
    ST = "st"

    @classmethod
    def coerce(cls, value: "BridgeKind | str") -> "BridgeKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown bridge kind {value!r}; expected one of av, ir, st") from None


@dataclass(frozen=True)
class BridgeSpec:
    """Endpoints, horizon and construction of one bridge."""

    a: float
    b: float
    T: float
    kind: BridgeKind

    def __post_init__(self) -> None:
        a, b, T = float(self.a), float(self.b), float(self.T)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise DomainError(f"endpoints must be finite, got a={a!r} b={b!r}")
        if not math.isfinite(T) or T <= 0.0:
            raise DomainError(f"horizon must be positive and finite, got {T!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "kind", BridgeKind.coerce(self.kind))

    @property
    def reduced_endpoint(self) -> float:
        """End level after shifting the start level to zero."""
        return self.b - self.a


def _check_time_in(t: float, T: float, *, closed_right: bool, name: str = "t") -> tuple[float, float]:
    t, T = float(t), float(T)
    if not math.isfinite(T) or T <= 0.0:
        raise DomainError(f"horizon must be positive and finite, got {T!r}")
    hi_ok = t <= T if closed_right else t < T
    if not math.isfinite(t) or t < 0.0 or not hi_ok:
        span = "[0, T]" if closed_right else "[0, T)"
        raise DomainError(f"{name}={t!r} outside {span} with T={T!r}")
    return t, T


def bridge_mean(t: float, spec: BridgeSpec) -> float:
    """Mean of the bridge at time t: a + (b-a) t/T, the same for every kind."""
    t, T = _check_time_in(t, spec.T, closed_right=True)
    return spec.a + (spec.b - spec.a) * (t / T)


def bridge_cov(s: float, t: float, T: float) -> float:
    """Covariance of bridge values at times s and t: min(s,t) (T - max(s,t))/T."""
    s, T = _check_time_in(s, T, closed_right=True, name="s")
    t, T = _check_time_in(t, T, closed_right=True)
    lo, hi = (s, t) if s <= t else (t, s)
    return lo * (T - hi) / T


def _log_remaining_fraction(t: float, T: float) -> float:
    """log((T-t)/T), accurate both near t=0 and near t=T."""
    x = t / T
    if x < 0.5:
        return math.log1p(-x)
    return math.log((T - t) / T)


def corr_with_process(kind: BridgeKind | str, t: float, T: float) -> float:
    """Correlation of the bridge value with the driving process value at time t.

    AV and ST share sqrt((T-t)/T); IR gives (sqrt(T(T-t))/t) log(T/(T-t)),
    which strictly exceeds the AV value on (0, T).  Both decrease strictly
    from 1 (at t=0+) to 0 (at t=T-).
    """
    kind = BridgeKind.coerce(kind)
    t, T = _check_time_in(t, T, closed_right=True)
    if t <= 0.0 or t >= T:
        raise DomainError(f"correlation needs 0 < t < T, got t={t!r} T={T!r}")
    if kind is BridgeKind.IR:
        value = math.sqrt(T * (T - t)) / t * (-_log_remaining_fraction(t, T))
    else:
        value = math.sqrt((T - t) / T)
    return min(value, 1.0)


def ir_deviation_variance(t: float, T: float) -> float:
    """Variance of the deviation of the process from the IR bridge at time t.

    Equals t (1 + (T-t)/T) + 2 (T-t) log((T-t)/T).  The closed form cancels
    to O((t/T)^3) near zero, so small arguments use the equivalent series
    2T sum_{k>=3} (t/T)^k / (k (k-1)).
    """
    x = t / T
    if x < _IR_VAR_SERIES_CUTOFF:
        acc = 0.0
        for k in range(12, 2, -1):
            acc = x * (acc + 1.0 / (k * (k - 1)))
        return 2.0 * T * x * x * acc
    return t * (1.0 + (T - t) / T) + 2.0 * (T - t) * _log_remaining_fraction(t, T)


def deviation_law(kind: BridgeKind | str, t: float, spec: BridgeSpec) -> GaussianMoment:
    """Law of the deviation of the driving process from the bridge at time t.

    The deviation depends on the endpoints only through b - a, so general
    start levels reduce exactly.  Gaussian with mean -(b-a) t/T for every
    kind; variance t^2/T for AV and ST, and the strictly smaller
    ``ir_deviation_variance`` for IR.  The law degenerates as t -> T (the
    continuous extension has variance T); t = T itself is rejected.
    """
    kind = BridgeKind.coerce(kind)
    t, T = _check_time_in(t, spec.T, closed_right=False)
    b = spec.reduced_endpoint
    mean = -b * t / T
    if kind is BridgeKind.IR:
        variance = ir_deviation_variance(t, T)
    else:
        variance = t * t / T
    return GaussianMoment(mean, max(variance, 0.0))


def cond_deviation_law(kind: BridgeKind | str, t: float, b: float, d: float, T: float) -> GaussianMoment:
    """Law of the deviation at time t given the driving path ends at level d.

    Start level zero; general starts reduce via b -> b-a, d -> d-a.  The AV
    deviation is deterministic given the endpoint: (d-b) t/T with variance 0.
    The ST deviation is unaffected by the endpoint until t = T/2 because by
    then it only reads the driving path beyond time T.
    """
    kind = BridgeKind.coerce(kind)
    t, T = _check_time_in(t, T, closed_right=False)
    b, d = float(b), float(d)
    if not (math.isfinite(b) and math.isfinite(d)):
        raise DomainError(f"levels must be finite, got b={b!r} d={d!r}")
    if kind is BridgeKind.AV:
        return GaussianMoment((d - b) * t / T, 0.0)
    if kind is BridgeKind.IR:
        log_rem = _log_remaining_fraction(t, T)
        rem = (T - t) / T
        mean = (d - b) * t / T + d * rem * log_rem
        variance = (T - t) * (2.0 * t / T + rem * log_rem * (2.0 - log_rem))
        return GaussianMoment(mean, max(variance, 0.0))
    # ST: the endpoint enters only on [T/2, T).
    if 2.0 * t < T:
        return GaussianMoment(-b * t / T, t * t / T)
    w = 2.0 * t - T
    mean = -b * t / T + d * w / T
    variance = (t * t - w * w) / T
    return GaussianMoment(mean, max(variance, 0.0))


def expected_abs_dev(kind: BridgeKind | str, t: float, b: float, T: float) -> float:
    """Expected absolute deviation at time t (start level zero, end level b).

    Folded mean of ``deviation_law``; AV and ST agree, IR is strictly smaller
    because the folded mean strictly increases in the standard deviation.
    """
    t, T = _check_time_in(t, T, closed_right=False)
    if t <= 0.0:
        raise DomainError(f"expected absolute deviation needs 0 < t < T, got t={t!r}")
    spec = BridgeSpec(0.0, float(b), T, BridgeKind.coerce(kind))
    return folded_mean(deviation_law(kind, t, spec))


def expected_quad_dev(kind: BridgeKind | str, b: float, T: float) -> float:
    """Integral over [0, T] of the expected squared deviation (start level zero).

    AV and ST give (T/3)(T + b^2); IR gives (T/3)(T/2 + b^2), i.e. the noise
    contribution is halved while the mean contribution is shared.
    """
    kind = BridgeKind.coerce(kind)
    b, T = float(b), float(T)
    if not math.isfinite(b):
        raise DomainError(f"end level must be finite, got {b!r}")
    if not math.isfinite(T) or T <= 0.0:
        raise DomainError(f"horizon must be positive and finite, got {T!r}")
    noise = T / 2.0 if kind is BridgeKind.IR else T
    return (T / 3.0) * (noise + b * b)


def expected_cond_quad_dev(kind: BridgeKind | str, b: float, d: float, T: float) -> float:
    """Integrated expected squared deviation given the driving path ends at d.

    AV: (1/3)(d-b)^2 T.
    IR: (7/54)(b-d)^2 T + (11/54) b^2 T - (7/54) b d T + (1/27) T^2.
    ST: (1/6)(d-b)^2 T + (1/6) b^2 T - (1/12) b d T + (1/6) T^2.
    """
    kind = BridgeKind.coerce(kind)
    b, d, T = float(b), float(d), float(T)
    if not (math.isfinite(b) and math.isfinite(d)):
        raise DomainError(f"levels must be finite, got b={b!r} d={d!r}")
    if not math.isfinite(T) or T <= 0.0:
        raise DomainError(f"horizon must be positive and finite, got {T!r}")
    gap = d - b
    if kind is BridgeKind.AV:
        return gap * gap * T / 3.0
    if kind is BridgeKind.IR:
        return (7.0 / 54.0) * gap * gap * T + (11.0 / 54.0) * b * b * T - (7.0 / 54.0) * b * d * T + T * T / 27.0
    return gap * gap * T / 6.0 + b * b * T / 6.0 - b * d * T / 12.0 + T * T / 6.0


@dataclass(frozen=True)
class RegionPoint:
    """Dimensionless endpoint pair (b/sqrt(T), d/sqrt(T))."""

    b_tilde: float
    d_tilde: float

    def __post_init__(self) -> None:
        b, d = float(self.b_tilde), float(self.d_tilde)
        if not (math.isfinite(b) and math.isfinite(d)):
            raise DomainError(f"region point must be finite, got ({b!r}, {d!r})")
        object.__setattr__(self, "b_tilde", b)
        object.__setattr__(self, "d_tilde", d)


# Ascending orderings of the conditional integrated deviations that carry a
# conventional letter; the remaining two permutations cannot occur because
# e_st < e_av together with e_st < e_ir leads to a contradiction.
_REGION_LETTERS = {
    ("av", "ir", "st"): "A",
    ("ir", "av", "st"): "B",
    ("ir", "st", "av"): "C",
    ("av", "st", "ir"): "D",
}


@dataclass(frozen=True)
class RegionLabel:
    """Ordering of (e_av, e_ir, e_st) at a region point.

    ``ordering`` lists the kinds ascending by value; ``letter`` is the
    conventional region name when the ordering has one, and ``boundary``
    marks points whose classification sits within tolerance of a boundary
    curve (their ordering is reported but not meaningful).
    """

    ordering: tuple[str, str, str]
    letter: str | None
    boundary: bool

    @property
    def tag(self) -> str:
        return self.letter if self.letter is not None else "<".join(self.ordering)


def ordering_letter(ordering) -> str:
    """Conventional region letter for an ascending ordering of (av, ir, st).

    Defined for every reachable ordering, including tie-broken ones on the
    boundary curves; the two orderings that would place st strictly first
    cannot occur.
    """
    try:
        return _REGION_LETTERS[tuple(ordering)]
    except KeyError:
        raise DomainError(f"no conventional letter for ordering {ordering!r}") from None


def region_classify(p: RegionPoint) -> RegionLabel:
    """Classify a dimensionless endpoint pair by the ordering of e_av, e_ir, e_st.

    The three pairwise comparisons reduce to sign tests of quadratic
    residuals with exact positive scalings (at T = 1):

        e_av - e_ir = (11/54) (d^2 - (15/11) b d - 2/11)
        e_av - e_st = (1/6)   (d^2 - (3/2)  b d - 1)
        e_ir - e_st = (1/27)  (-d^2 + (3/4) b d - 7/2)

    where (b, d) = (b_tilde, d_tilde).  A residual within
    ``REGION_BOUNDARY_TOL`` of zero flags the point as boundary.
    """
    b, d = p.b_tilde, p.d_tilde
    r_av_ir = d * d - (15.0 / 11.0) * b * d - 2.0 / 11.0
    r_av_st = d * d - 1.5 * b * d - 1.0
    r_ir_st = -(d * d) + 0.75 * b * d - 3.5
    boundary = (
        abs(r_av_ir) <= REGION_BOUNDARY_TOL
        or abs(r_av_st) <= REGION_BOUNDARY_TOL
        or abs(r_ir_st) <= REGION_BOUNDARY_TOL
    )
    # residual > 0 means the first kind of the pair has the larger e-value
    wins = {"av": 0, "ir": 0, "st": 0}
    for first, second, r in (("av", "ir", r_av_ir), ("av", "st", r_av_st), ("ir", "st", r_ir_st)):
        if r > 0.0:
            wins[first] += 1
        else:
            wins[second] += 1
    ordering = tuple(sorted(wins, key=lambda k: wins[k]))
    if sorted(wins.values()) != [0, 1, 2]:
        raise NumericalError(f"cyclic pairwise comparison at {p!r}; residuals "
                             f"({r_av_ir!r}, {r_av_st!r}, {r_ir_st!r})")
    letter = None if boundary else _REGION_LETTERS.get(ordering)
    return RegionLabel(ordering=ordering, letter=letter, boundary=boundary)
