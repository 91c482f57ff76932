"""Scalar Gaussian moment utilities.

Everything downstream reduces one-dimensional questions about bridge
deviations to a :class:`GaussianMoment` (a mean/variance pair) and then calls
the closed forms below: folded absolute mean, two-sided tail mass, second
moment, and exact conditioning of one jointly Gaussian coordinate on another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "GaussianMoment",
    "std_normal_cdf",
    "std_normal_pdf",
    "folded_mean",
    "tail_probability",
    "second_moment",
    "condition_on_linear",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Slack allowed on the Cauchy-Schwarz bound before conditioning is rejected.
_CS_RTOL = 1e-12


@dataclass(frozen=True)
class GaussianMoment:
    """First two moments of a scalar Gaussian law. Variance may be zero."""

    mean: float
    variance: float

    def __post_init__(self) -> None:
        mean = float(self.mean)
        variance = float(self.variance)
        if not math.isfinite(mean) or not math.isfinite(variance):
            raise DomainError(f"moments must be finite, got mean={mean!r} variance={variance!r}")
        if variance < 0.0:
            raise DomainError(f"variance must be nonnegative, got {variance!r}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", variance)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def std_normal_cdf(x: float) -> float:
    """Standard normal distribution function via the complementary error function."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"argument must be finite, got {x!r}")
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_pdf(x: float) -> float:
    """Standard normal density."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"argument must be finite, got {x!r}")
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def folded_mean(moment: GaussianMoment) -> float:
    """Mean of |Y| for Y with the given Gaussian law.

    Equals 2*sigma*pdf(mu/sigma) + mu*(2*cdf(mu/sigma) - 1); degenerate laws
    reduce to |mu|.
    """
    mu = moment.mean
    if moment.variance == 0.0:
        return abs(mu)
    sigma = moment.std
    r = mu / sigma
    return 2.0 * sigma * std_normal_pdf(r) + mu * (2.0 * std_normal_cdf(r) - 1.0)


def tail_probability(moment: GaussianMoment, x: float) -> float:
    """P(|Y| > x) for Y with the given Gaussian law and a threshold x > 0."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"threshold must be positive and finite, got {x!r}")
    mu = moment.mean
    if moment.variance == 0.0:
        return 1.0 if abs(mu) > x else 0.0
    sigma = moment.std
    return 1.0 - std_normal_cdf((mu + x) / sigma) + std_normal_cdf((mu - x) / sigma)


def second_moment(moment: GaussianMoment) -> float:
    """E Y^2 = variance + mean^2."""
    return moment.variance + moment.mean * moment.mean


def condition_on_linear(
    target: GaussianMoment,
    conditioner: GaussianMoment,
    covariance: float,
    observed: float,
) -> GaussianMoment:
    """Law of X given S = observed for jointly Gaussian (X, S).

    ``target`` is the marginal of X, ``conditioner`` the marginal of S, and
    ``covariance`` is Cov(X, S).  The conditioner must be nondegenerate, and
    the covariance must respect the Cauchy-Schwarz bound up to a 1e-12
    relative slack; the conditional variance is clamped at zero when rounding
    pushes it barely negative.
    """
    covariance = float(covariance)
    observed = float(observed)
    if not math.isfinite(covariance) or not math.isfinite(observed):
        raise DomainError("covariance and observed value must be finite")
    var_s = conditioner.variance
    if var_s <= 0.0:
        raise DomainError("conditioning variable must have positive variance")
    bound = target.variance * var_s
    if covariance * covariance > bound * (1.0 + _CS_RTOL):
        raise DomainError(
            f"covariance {covariance!r} violates the Cauchy-Schwarz bound "
            f"for variances ({target.variance!r}, {var_s!r})"
        )
    gain = covariance / var_s
    mean = target.mean + gain * (observed - conditioner.mean)
    variance = target.variance - covariance * gain
    if variance < 0.0:
        variance = 0.0
    return GaussianMoment(mean, variance)
