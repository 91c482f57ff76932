"""Closed forms for Ornstein-Uhlenbeck bridge constructions.

The process solves ``dU_t = q U_t dt + sigma dW_t`` with ``q != 0`` and
``sigma > 0``, i.e. ``U_t^a = e^{qt}(a + sigma int_0^t e^{-qs} dW_s)``.  The
three bridge constructions from ``a`` to ``b`` over ``[0, T]`` mirror the
Wiener ones:

* ``AV``: mean part plus ``U^0_t - (sinh(qt)/sinh(qT)) U^0_T``
* ``IR``: mean part plus ``sigma int_0^t sinh(q(T-t))/sinh(q(T-s)) dW_s``
* ``ST``: mean part plus ``sigma e^{qt} ((kappa(T)-kappa(t))/kappa(T)) W_{kappa*_T(t)}``

with mean part ``a sinh(q(T-t))/sinh(qT) + b sinh(qt)/sinh(qT)`` and the
clock ``kappa(t) = (1 - e^{-2qt})/(2q)``.  All formulas below hold for both
signs of q.  Hyperbolic ratios are evaluated through ``expm1``/``log1p``
rewritings so that small ``|q| T`` keeps full precision and large ``|q| T``
(up to about 350) does not overflow; below ``|q| T = 1e-6`` every operation
switches to its exact Wiener limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from . import wiener
from .errors import DomainError, NumericalError
from .gauss import GaussianMoment

__all__ = [
    "ProcessParams",
    "TimeChange",
    "kappa",
    "kappa_star",
    "t_star",
    "ou_bridge_mean",
    "ou_bridge_cov",
    "ou_bridge_cov_forms",
    "ou_process_cov",
    "ou_cov_with_process",
    "ou_deviation_law",
    "ou_deviation_variance_forms",
    "ou_expected_quad_dev",
    "st_mean_square_term",
    "ir_quad_integral",
    "WIENER_LIMIT_CUTOFF",
]

# |q| * T below this switches every formula to its Wiener limit; the dropped
# terms are O(|q| T) relative, far below the 1e-6 cutoff itself.
WIENER_LIMIT_CUTOFF = 1e-6

# Agreement required between independently transcribed variance forms.
_DUAL_FORM_RTOL = 1e-12


@dataclass(frozen=True)
class ProcessParams:
    """Rate and diffusion coefficient of the process."""

    q: float
    sigma: float = 1.0

    def __post_init__(self) -> None:
        q, sigma = float(self.q), float(self.sigma)
        if not math.isfinite(q) or q == 0.0:
            raise DomainError(f"rate must be finite and nonzero, got {q!r}")
        if not math.isfinite(sigma) or sigma <= 0.0:
            raise DomainError(f"diffusion coefficient must be positive, got {sigma!r}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True)
class TimeChange:
    """Process parameters together with the bridge horizon."""

    params: ProcessParams
    T: float

    def __post_init__(self) -> None:
        T = float(self.T)
        if not math.isfinite(T) or T <= 0.0:
            raise DomainError(f"horizon must be positive and finite, got {T!r}")
        object.__setattr__(self, "T", T)

    @property
    def q(self) -> float:
        return self.params.q

    @property
    def sigma(self) -> float:
        return self.params.sigma

    @property
    def is_near_wiener(self) -> bool:
        return abs(self.q) * self.T < WIENER_LIMIT_CUTOFF


# ---------------------------------------------------------------------------
# hyperbolic helpers


def _sinh_minus_arg(x: float) -> float:
    """sinh(x) - x without cancellation; series below |x| = 0.1."""
    if abs(x) >= 0.1:
        return math.sinh(x) - x
    x2 = x * x
    # sum_{k>=1} x^{2k+1}/(2k+1)!, Horner on x^2
    acc = 0.0
    for k in range(8, 0, -1):
        acc = x2 * (acc + 1.0 / math.factorial(2 * k + 1))
    return x * acc


def _sinh_ratio(x: float, y: float) -> float:
    """sinh(x)/sinh(y) for y != 0, safe against overflow of either factor."""
    if x == 0.0:
        return 0.0
    ax, ay = abs(x), abs(y)
    if max(ax, ay) <= 350.0:
        return math.sinh(x) / math.sinh(y)
    sign = 1.0 if (x > 0.0) == (y > 0.0) else -1.0
    return sign * math.exp(ax - ay) * math.expm1(-2.0 * ax) / math.expm1(-2.0 * ay)


def _log1m_exp(z: float) -> float:
    """log(1 - e^{-z}) for z > 0."""
    return math.log(-math.expm1(-z))


def _ir_log_term(t: float, q: float, T: float) -> float:
    """q t + log(sinh(qT)/sinh(q(T-t))) with the q<0 cancellation done exactly."""
    aq = abs(q)
    base = _log1m_exp(2.0 * aq * T) - _log1m_exp(2.0 * aq * (T - t))
    if q > 0.0:
        return 2.0 * q * t + base
    return base


# ---------------------------------------------------------------------------
# clock machinery


def kappa(t: float, q: float) -> float:
    """Clock kappa(t) = (1 - e^{-2qt})/(2q); strictly increasing, kappa(0) = 0."""
    q = float(q)
    t = float(t)
    if not math.isfinite(q) or q == 0.0:
        raise DomainError(f"rate must be finite and nonzero, got {q!r}")
    if not math.isfinite(t):
        raise DomainError(f"time must be finite, got {t!r}")
    return -math.expm1(-2.0 * q * t) / (2.0 * q)


def _kappa_gap(t: float, tc: TimeChange) -> float:
    """kappa(T) - kappa(t) evaluated without cancellation for t near T."""
    q, T = tc.q, tc.T
    return math.exp(-2.0 * q * T) * math.expm1(2.0 * q * (T - t)) / (2.0 * q)


def kappa_star(t: float, tc: TimeChange) -> float:
    """Transformed clock kappa(t) kappa(T) / (kappa(T) - kappa(t)) on [0, T).

    Strictly increasing with kappa_star(0) = 0, unit slope at zero,
    kappa_star(t) >= t, and divergence as t -> T.
    """
    t = float(t)
    if not math.isfinite(t) or t < 0.0 or t >= tc.T:
        raise DomainError(f"time {t!r} outside [0, T) with T={tc.T!r}")
    if tc.is_near_wiener:
        return t * tc.T / (tc.T - t)
    if t == 0.0:
        return 0.0
    return kappa(t, tc.q) * kappa(tc.T, tc.q) / _kappa_gap(t, tc)


def t_star(tc: TimeChange) -> float:
    """The unique time in (0, T) at which kappa_star reaches T."""
    if tc.is_near_wiener:
        return tc.T / 2.0
    q, T = tc.q, tc.T
    k_T = kappa(T, q)
    level = T * k_T / (T + k_T)
    value = -math.log1p(-2.0 * q * level) / (2.0 * q)
    back = kappa_star(value, tc)
    if abs(back - T) > 1e-10 * max(1.0, T):
        raise NumericalError(f"clock inversion drifted: kappa_star({value!r}) = {back!r} != T = {T!r}")
    return value


# ---------------------------------------------------------------------------
# bridge moments


def _check_time(t: float, T: float, *, closed_right: bool, name: str = "t") -> float:
    t = float(t)
    hi_ok = t <= T if closed_right else t < T
    if not math.isfinite(t) or t < 0.0 or not hi_ok:
        span = "[0, T]" if closed_right else "[0, T)"
        raise DomainError(f"{name}={t!r} outside {span} with T={T!r}")
    return t


def ou_bridge_mean(t: float, a: float, b: float, tc: TimeChange) -> float:
    """Mean of the bridge at time t: a sinh(q(T-t))/sinh(qT) + b sinh(qt)/sinh(qT)."""
    t = _check_time(t, tc.T, closed_right=True)
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"endpoints must be finite, got a={a!r} b={b!r}")
    T = tc.T
    if tc.is_near_wiener:
        return a + (b - a) * t / T
    q = tc.q
    return a * _sinh_ratio(q * (T - t), q * T) + b * _sinh_ratio(q * t, q * T)


def ou_bridge_cov(s: float, t: float, tc: TimeChange) -> float:
    """Covariance of bridge values: (sigma^2/q) sinh(q min) sinh(q(T-max))/sinh(qT)."""
    s = _check_time(s, tc.T, closed_right=True, name="s")
    t = _check_time(t, tc.T, closed_right=True)
    lo, hi = (s, t) if s <= t else (t, s)
    T, sig = tc.T, tc.sigma
    if tc.is_near_wiener:
        return sig * sig * lo * (T - hi) / T
    q = tc.q
    # sinh(q lo)/q stays stable through expm1 for small |q| lo
    lead = math.exp(q * lo) * -math.expm1(-2.0 * q * lo) / (2.0 * q)
    return sig * sig * lead * _sinh_ratio(q * (T - hi), q * T)


def ou_bridge_cov_forms(s: float, t: float, tc: TimeChange) -> tuple[float, float, float]:
    """The bridge covariance along each construction-specific derivation.

    Returns the AV, IR and ST expressions before algebraic simplification;
    all three equal ``ou_bridge_cov`` mathematically, and comparing them
    guards the transcriptions.  Requires s <= t.
    """
    s = _check_time(s, tc.T, closed_right=False, name="s")
    t = _check_time(t, tc.T, closed_right=False)
    if s > t:
        raise DomainError(f"need s <= t, got s={s!r} t={t!r}")
    q, sig, T = tc.q, tc.sigma, tc.T
    sig2 = sig * sig
    # AV: Cov(U0_s, U0_t) - (sinh(qt)/sinh(qT)) Cov(U0_s, U0_T)
    form_av = sig2 * math.exp(q * t) / q * math.sinh(q * s) \
        - _sinh_ratio(q * t, q * T) * sig2 * math.exp(q * T) / q * math.sinh(q * s)
    # IR: (sigma^2/q) sinh(q(T-s)) sinh(q(T-t)) (coth(q(T-s)) - coth(qT))
    coth_gap = math.cosh(q * (T - s)) / math.sinh(q * (T - s)) - math.cosh(q * T) / math.sinh(q * T)
    form_ir = sig2 / q * math.sinh(q * (T - s)) * math.sinh(q * (T - t)) * coth_gap
    # ST: sigma^2 e^{q(s+t)} ((k_T-k_s)/k_T) ((k_T-k_t)/k_T) kappa_star(s)
    k_T = kappa(T, q)
    rel_s = _kappa_gap(s, tc) / k_T
    rel_t = _kappa_gap(t, tc) / k_T
    star_s = 0.0 if s == 0.0 else kappa_star(s, tc)
    form_st = sig2 * math.exp(q * (s + t)) * rel_s * rel_t * star_s
    return form_av, form_ir, form_st


def ou_process_cov(s: float, t: float, tc: TimeChange) -> float:
    """Covariance of the free process: sigma^2 e^{q max} sinh(q min)/q."""
    s, t = float(s), float(t)
    if not (math.isfinite(s) and math.isfinite(t)) or s < 0.0 or t < 0.0:
        raise DomainError(f"times must be finite and nonnegative, got s={s!r} t={t!r}")
    lo, hi = (s, t) if s <= t else (t, s)
    sig = tc.sigma
    if tc.is_near_wiener:
        return sig * sig * lo
    q = tc.q
    return sig * sig * math.exp(q * (hi - lo)) * math.expm1(2.0 * q * lo) / (2.0 * q)


def ou_cov_with_process(kind: wiener.BridgeKind | str, t: float, tc: TimeChange) -> float:
    """Covariance of the bridge value with the free-process value at time t."""
    kind = wiener.BridgeKind.coerce(kind)
    t = float(t)
    if not math.isfinite(t) or t <= 0.0 or t >= tc.T:
        raise DomainError(f"covariance needs 0 < t < T, got t={t!r} T={tc.T!r}")
    q, sig, T = tc.q, tc.sigma, tc.T
    sig2 = sig * sig
    if tc.is_near_wiener:
        if kind is wiener.BridgeKind.IR:
            return sig2 * (T - t) * -wiener._log_remaining_fraction(t, T)
        return sig2 * t * (T - t) / T
    if kind is wiener.BridgeKind.AV:
        return ou_bridge_cov(t, t, tc)
    if kind is wiener.BridgeKind.IR:
        # e^{-q(T-t)} sinh(q(T-t)) = (1 - e^{-2q(T-t)})/2
        half = -math.expm1(-2.0 * q * (T - t)) / 2.0
        return sig2 / q * half * _ir_log_term(t, q, T)
    return sig2 / q * math.expm1(q * t) * _sinh_ratio(q * (T - t), q * T)


def ou_deviation_variance_forms(kind: wiener.BridgeKind | str, t: float, tc: TimeChange) -> tuple[float, float]:
    """Deviation variance at time t in two independent transcriptions.

    The first entry follows the conditional-law statements, the second the
    rearrangement used for the variance-ordering proof; both are exact
    algebraic identities of each other.
    """
    kind = wiener.BridgeKind.coerce(kind)
    t = _check_time(t, tc.T, closed_right=False)
    q, sig, T = tc.q, tc.sigma, tc.T
    sig2 = sig * sig
    if tc.is_near_wiener:
        v = wiener.ir_deviation_variance(t, T) if kind is wiener.BridgeKind.IR else t * t / T
        return sig2 * v, sig2 * v
    rem = _sinh_ratio(q * (T - t), q * T)
    # sigma^2 e^{qT} sinh^2(qt) / (q sinh(qT)), the common AV contribution
    av_var = sig2 * math.exp(q * T) / q * math.sinh(q * t) * _sinh_ratio(q * t, q * T)
    if kind is wiener.BridgeKind.AV:
        return av_var, av_var
    # sinh(qt) e^{qt} = expm1(2qt)/2
    body = math.expm1(2.0 * q * t) / 2.0 + math.sinh(q * t) * rem
    if kind is wiener.BridgeKind.IR:
        log_term = _ir_log_term(t, q, T)
        half = -math.expm1(-2.0 * q * (T - t)) / 2.0
        printed = sig2 / q * (body - 2.0 * half * log_term)
        rearranged = 2.0 * sig2 / q * math.sinh(q * (T - t)) * (
            _sinh_ratio(q * t, q * T) - math.exp(-q * (T - t)) * log_term
        ) + av_var
        return printed, rearranged
    printed = sig2 / q * (body - 2.0 * math.expm1(q * t) * rem)
    # cosh(qt) - 1 = 2 sinh^2(qt/2)
    rearranged = av_var - 4.0 * sig2 / q * math.sinh(q * (T - t)) / math.sinh(q * T) * math.sinh(q * t / 2.0) ** 2
    return printed, rearranged


def ou_deviation_law(kind: wiener.BridgeKind | str, t: float, b: float, tc: TimeChange) -> GaussianMoment:
    """Law of the deviation of the free process from the bridge at time t.

    Start level zero (general starts reduce through the endpoints); Gaussian
    with mean -b sinh(qt)/sinh(qT) for every kind.  For t in (0, T) the
    variances order as IR < ST < AV when q > 0 and IR < AV < ST when q < 0.
    """
    kind = wiener.BridgeKind.coerce(kind)
    t = _check_time(t, tc.T, closed_right=False)
    b = float(b)
    if not math.isfinite(b):
        raise DomainError(f"end level must be finite, got {b!r}")
    if tc.is_near_wiener:
        mean = -b * t / tc.T
    else:
        mean = -b * _sinh_ratio(tc.q * t, tc.q * tc.T)
    printed, rearranged = ou_deviation_variance_forms(kind, t, tc)
    scale = max(1.0, abs(printed), abs(rearranged))
    assert abs(printed - rearranged) <= _DUAL_FORM_RTOL * scale, (
        f"deviation variance transcriptions disagree for kind={kind.value} t={t!r} "
        f"tc={tc!r}: {printed!r} vs {rearranged!r}"
    )
    return GaussianMoment(mean, max(printed, 0.0))


# ---------------------------------------------------------------------------
# integrated deviations


def _quad_ratio(x: float) -> float:
    """(sinh(2x) - 2x)/sinh(x)^2, the shape factor of the mean-square integral."""
    return _sinh_minus_arg(2.0 * x) / math.sinh(x) ** 2


def st_mean_square_term(b: float, tc: TimeChange) -> float:
    """Integral over [0, T] of the squared deviation mean (b^2/(4q)) shape factor.

    Equals (b^2/(4q)) (sinh(2qT) - 2qT)/sinh^2(qT); this is the endpoint-mean
    contribution shared by all three constructions.
    """
    b = float(b)
    if not math.isfinite(b):
        raise DomainError(f"end level must be finite, got {b!r}")
    if b == 0.0:
        return 0.0
    if tc.is_near_wiener:
        return b * b * tc.T / 3.0
    q = tc.q
    return b * b / (4.0 * q) * _quad_ratio(q * tc.T)


def ir_quad_integral(y: float) -> float:
    """J(y) = int_0^y (1 - e^{-2x}) log(sinh(y)/sinh(x)) dx by adaptive quadrature.

    Evaluated with the signed substitution x = y u, u in [0, 1], so both
    signs of y use the same orientation.  The integrand vanishes at both
    endpoints (with a log-type derivative blowup at u = 0 that the adaptive
    subdivision absorbs).  Raises if the error estimate misses 1e-10
    absolute or 1e-10 relative accuracy.
    """
    y = float(y)
    if not math.isfinite(y) or y == 0.0:
        raise DomainError(f"argument must be finite and nonzero, got {y!r}")
    ay = abs(y)

    def integrand(u: float) -> float:
        if u <= 0.0 or u >= 1.0:
            return 0.0
        return -math.expm1(-2.0 * y * u) * (_log1m_exp(2.0 * ay) - _log1m_exp(2.0 * ay * u) + ay * (1.0 - u))

    value, err = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=5e-13, limit=300)
    value *= y
    err *= ay
    if err > max(1e-10, 1e-10 * abs(value)):
        raise NumericalError(f"noise integral at y={y!r} converged only to {err!r} (value {value!r})")
    return value


def _ir_tail_gap(big_y: float) -> float:
    """e^{2Y}/4 - ir_quad_integral(-Y) for Y > 0, without forming either term.

    The literal difference cancels at e^{2Y} scale.  It equals
    Y^2/2 + Y/2 + 1/4 - D(Y) with
    D(Y) = int_0^Y (e^{2v} - 1) log((1 - e^{-2Y})/(1 - e^{-2v})) dv,
    whose integrand stays O(1) across the whole range.
    """
    big_y = float(big_y)
    if not math.isfinite(big_y) or big_y <= 0.0:
        raise DomainError(f"argument must be finite and positive, got {big_y!r}")

    def integrand(u: float) -> float:
        if u <= 0.0 or u >= 1.0:
            return 0.0
        ratio = math.exp(-2.0 * big_y) * math.expm1(2.0 * big_y * (1.0 - u)) / -math.expm1(-2.0 * big_y * u)
        return math.expm1(2.0 * big_y * u) * math.log1p(ratio)

    value, err = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=5e-13, limit=300)
    value *= big_y
    err *= big_y
    if err > max(1e-10, 1e-10 * abs(value)):
        raise NumericalError(f"tail integral at Y={big_y!r} converged only to {err!r} (value {value!r})")
    return big_y * big_y / 2.0 + big_y / 2.0 + 0.25 - value


def ou_expected_quad_dev(kind: wiener.BridgeKind | str, b: float, tc: TimeChange) -> float:
    """Integral over [0, T] of the expected squared deviation (start level zero).

    AV and IR follow their closed forms; the IR form carries the noise
    integral ``ir_quad_integral(qT)``.  For ST the closed form is the
    variance integral plus ``st_mean_square_term`` (the endpoint-mean
    contribution, which every construction shares); see the README note on
    the ST transcription.
    """
    kind = wiener.BridgeKind.coerce(kind)
    b = float(b)
    if not math.isfinite(b):
        raise DomainError(f"end level must be finite, got {b!r}")
    q, sig, T = tc.q, tc.sigma, tc.T
    sig2 = sig * sig
    if tc.is_near_wiener:
        noise = T / 2.0 if kind is wiener.BridgeKind.IR else T
        return (T / 3.0) * (sig2 * noise + b * b)
    x = q * T
    mean_sq = st_mean_square_term(b, tc)
    if kind is wiener.BridgeKind.AV:
        return mean_sq + sig2 * math.exp(x) / (4.0 * q * q) * _quad_ratio(x) * math.sinh(x)
    if kind is wiener.BridgeKind.IR:
        av_full = mean_sq + sig2 * math.exp(x) / (4.0 * q * q) * _quad_ratio(x) * math.sinh(x)
        if x > 0.0:
            tail = sig2 / (4.0 * q * q) * math.exp(-2.0 * x) - sig2 / (q * q) * ir_quad_integral(x)
        else:
            # the literal pair above cancels at e^{2|x|} scale for x < 0
            tail = sig2 / (q * q) * _ir_tail_gap(-x)
        return (
            av_full
            - sig2 / (q * q)
            + T * sig2 * math.cosh(x) / (q * math.sinh(x))
            - sig2 * T * T / 2.0
            + sig2 * T / (2.0 * q)
            - sig2 / (4.0 * q * q)
            + tail
        )
    # ST: variance integral plus the endpoint-mean term.  The trailing
    # -sigma^2 T / q is the exact sum of -sig2/q*(sinh(2x)/(2q) + T) and
    # sig2 cosh(x) sinh(x)/q^2, whose sinh(2x)/(2q^2) halves cancel at
    # e^{2|x|} scale if kept separate.
    variance_part = (
        sig2 * math.exp(x) / (4.0 * q * q) * _quad_ratio(x) * math.sinh(x)
        + 4.0 * sig2 / (q * q) * math.sinh(x / 2.0) ** 2 / math.sinh(x)
        - sig2 * T / q
    )
    return mean_sq + variance_part
