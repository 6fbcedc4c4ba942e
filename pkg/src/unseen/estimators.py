"""The Good-Toulmin estimator family.

Given a sample of size n summarized by its prevalence histogram, the
Good-Toulmin (GT) estimator predicts the number of species a future sample
of size m = t*n would add:

    U_GT = -sum_{i>=1} (-t)^i * counts[i].

GT is unbiased under Poissonized sampling but its variance explodes for
t > 1 because the coefficients grow like t^i.  Attenuating coefficient i by
the tail P(L >= i) of a smoothing distribution L gives the smoothed family

    h_i = -(-t)^i * P(L >= i),

which is equivalently the L-average of the series truncated at a random
cutoff.  Binomial smoothing with success probability 1/(1+t) recovers the
classical Efron-Thisted estimator (historically derived through the Euler
transform); Poisson smoothing and the variance-optimized binomial choice
q = 2/(2+t) are the other stock schemes, with sample-size-driven parameter
formulas in ``auto_params``.
"""

from __future__ import annotations

import enum
import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass, field

from .numerics import KahanSum
from .prevalence import PrevalenceHistogram
from .smoothing import (
    BinomialSmoothing,
    NoSmoothing,
    PoissonSmoothing,
    SmoothingDistribution,
    tail,
)

__all__ = [
    "CoefficientOverflowError",
    "LinearEstimator",
    "SmoothingScheme",
    "auto_params",
    "estimate_unseen",
    "good_toulmin",
    "gt_coefficient_rule",
    "sgt_coefficients",
    "sgt_estimate",
    "truncated_gt",
]


class CoefficientOverflowError(OverflowError):
    """Requested coefficients exceed double range (unsmoothed series, t > 1)."""


@dataclass(frozen=True)
class LinearEstimator:
    """A finite coefficient sequence h_1..h_imax applied as sum_i counts[i]*h_i.

    ``rule`` optionally generates coefficients beyond the stored range; the
    analytic bias machinery needs arbitrarily many terms while application
    to a histogram only ever touches i <= max_index.
    """

    coefficients: tuple[float, ...]
    ratio: float
    rule: Callable[[int], float] | None = field(default=None, compare=False)

    def coefficient(self, i: int) -> float:
        """h_i, 1-indexed; falls back to the generating rule past imax."""
        if i < 1:
            raise ValueError(f"coefficient index must be >= 1, got {i}")
        if i <= len(self.coefficients):
            return self.coefficients[i - 1]
        if self.rule is not None:
            return self.rule(i)
        return 0.0

    def apply(self, hist: PrevalenceHistogram) -> float:
        """sum_i counts[i] * h_i over the histogram's stored entries.

        Summed in ascending multiplicity with compensation: alternating
        terms can span many orders of magnitude.
        """
        acc = KahanSum()
        for i, c in hist.items():
            acc.add(c * self.coefficient(i))
        return acc.value


def gt_coefficient_rule(t: float) -> Callable[[int], float]:
    """The raw alternating coefficients h_i = -(-t)^i."""

    def rule(i: int) -> float:
        return -((-t) ** i)

    return rule


def good_toulmin(hist: PrevalenceHistogram, t: float) -> float:
    """Unsmoothed estimate -sum_i (-t)^i counts[i].

    Exact alternating sum over stored entries, ascending i, compensated.
    For t > 1 the value is dominated by the largest occupied multiplicity
    and typically useless -- that is the estimator's documented failure
    mode, not an error.
    """
    if t <= 0:
        raise ValueError(f"extrapolation ratio must be positive, got {t}")
    acc = KahanSum()
    power = 1.0
    last = 0
    for i, c in hist.items():
        # advance t^i incrementally over the (sparse, ascending) indices
        power *= t ** (i - last)
        last = i
        sign = 1.0 if i % 2 else -1.0  # -(-t)^i
        acc.add(sign * power * c)
    return acc.value


def truncated_gt(hist: PrevalenceHistogram, t: float, cutoff: int) -> float:
    """Partial sum -sum_{i<=cutoff} (-t)^i counts[i]."""
    if cutoff < 0:
        raise ValueError(f"cutoff must be nonnegative, got {cutoff}")
    acc = KahanSum()
    for i, c in hist.items():
        if i > cutoff:
            break
        sign = 1.0 if i % 2 else -1.0  # -(-t)^i
        acc.add(sign * (t**i) * c)
    return acc.value


def sgt_coefficients(
    dist: SmoothingDistribution, t: float, imax: int
) -> LinearEstimator:
    """Coefficients h_i = -(-t)^i P(L >= i) for i = 1..imax.

    Magnitudes are built by the ratio recurrence
    |h_i| = |h_{i-1}| * t * tail(i)/tail(i-1) whenever the previous tail is
    nonzero: the product t^i * tail(i) is usually finite (tails die faster
    than t^i grows) even where t^i alone overflows, and the recurrence never
    materializes the intermediate t^i.
    """
    if t < 1.0:
        raise ValueError(f"smoothed coefficients are defined for t >= 1, got {t}")
    if imax < 1:
        raise ValueError(f"imax must be >= 1, got {imax}")
    mags = []
    prev_tail = 1.0  # tail at i=0
    prev_mag = 1.0
    for i in range(1, imax + 1):
        ti = tail(dist, i)
        if ti == 0.0:
            mags.append(0.0)
            prev_tail, prev_mag = 0.0, 0.0
            continue
        if prev_tail > 0.0:
            mag = prev_mag * t * (ti / prev_tail)
        else:  # tail revived after an exact zero: only possible for custom pmfs
            mag = t**i * ti
        if math.isinf(mag):
            raise CoefficientOverflowError(
                f"coefficient magnitude overflows double range at i={i} (t={t})"
            )
        mags.append(mag)
        prev_tail, prev_mag = ti, mag
    # sign of h_i = -(-t)^i * tail is positive for odd i, negative for even
    coeffs = tuple(m if j % 2 == 0 else -m for j, m in enumerate(mags))

    def rule(i: int) -> float:
        ti = tail(dist, i)
        if ti == 0.0:
            return 0.0
        sign = 1.0 if i % 2 == 1 else -1.0
        value = sign * t**i * ti
        if math.isinf(value):
            raise CoefficientOverflowError(
                f"coefficient magnitude overflows double range at i={i} (t={t})"
            )
        return value

    return LinearEstimator(coefficients=coeffs, ratio=t, rule=rule)


def sgt_estimate(
    hist: PrevalenceHistogram, dist: SmoothingDistribution, t: float
) -> float:
    """Apply the smoothed coefficients to a histogram.

    Equals the mixture over cutoffs: sum_ell P(L = ell) * truncated_gt(ell).
    """
    if not hist:
        return 0.0
    est = sgt_coefficients(dist, t, hist.max_index)
    return est.apply(hist)


class SmoothingScheme(enum.Enum):
    """Named parameter recipes mapping (n, t) to a smoothing distribution."""

    POISSON = "poisson"
    BINOMIAL_ET = "binomial-et"
    BINOMIAL_OPT = "binomial-opt"
    HYPER_POISSON = "hyper-poisson"


def auto_params(n: int, t: float, scheme: SmoothingScheme) -> SmoothingDistribution:
    """Parameter choices that balance the variance and bias envelopes.

    * POISSON:       rate r = (1/2t) ln(n (t+1)^2 / (t-1))
    * BINOMIAL_ET:   k = ceil(0.5 log2(n t^2/(t-1))), q = 1/(t+1)
    * BINOMIAL_OPT:  k = ceil(0.5 log3(n t^2/(t-1))), q = 2/(t+2)
      (the strongest convergence rate of the three)
    * HYPER_POISSON: rate r = ln(n t^2) / (2t - 1), tuned for sampling
      without replacement; valid for all t >= 1.

    The first three involve (t-1) and are undefined at t <= 1, where the
    unsmoothed estimator is already nearly unbiased -- use that instead
    (estimate_unseen dispatches automatically).

    The ceilings are taken literally, including at exact integers.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    if scheme is SmoothingScheme.HYPER_POISSON:
        if t < 1.0:
            raise ValueError(
                f"scheme {scheme.value} requires t >= 1, got {t}; use the plain estimator"
            )
        return PoissonSmoothing(rate=math.log(n * t * t) / (2.0 * t - 1.0))
    if t <= 1.0:
        raise ValueError(
            f"smoothing undefined at t <= 1 under scheme {scheme.value}; use GT"
        )
    if scheme is SmoothingScheme.POISSON:
        rate = math.log(n * (t + 1.0) ** 2 / (t - 1.0)) / (2.0 * t)
        return PoissonSmoothing(rate=rate)
    if scheme is SmoothingScheme.BINOMIAL_ET:
        k = math.ceil(0.5 * math.log2(n * t * t / (t - 1.0)))
        return BinomialSmoothing(trials=k, prob=1.0 / (t + 1.0))
    if scheme is SmoothingScheme.BINOMIAL_OPT:
        k = math.ceil(0.5 * math.log(n * t * t / (t - 1.0)) / math.log(3.0))
        return BinomialSmoothing(trials=k, prob=2.0 / (t + 2.0))
    raise TypeError(f"unknown scheme {scheme!r}")


def estimate_unseen(
    hist: PrevalenceHistogram,
    t: float,
    scheme: SmoothingScheme = SmoothingScheme.BINOMIAL_OPT,
    clamp: bool = False,
) -> float:
    """One-stop prediction of the number of new species in t*n more samples.

    For t <= 1 the unsmoothed estimator is used (it is nearly unbiased there
    and the scheme formulas degenerate); otherwise the scheme's smoothing
    distribution is derived from n = sample_size(hist) and applied.  With
    ``clamp`` the raw value is clipped to the feasible range [0, t*n].
    """
    if t <= 0:
        raise ValueError(f"extrapolation ratio must be positive, got {t}")
    n = hist.sample_size()
    if n == 0:
        warnings.warn("empty histogram: predicting 0 unseen species", stacklevel=2)
        return 0.0
    if t <= 1.0:
        value = good_toulmin(hist, t)
    else:
        value = sgt_estimate(hist, auto_params(n, t, scheme), t)
    if clamp:
        value = min(max(value, 0.0), t * n)
    return value
