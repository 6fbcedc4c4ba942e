"""Smoothing distributions and the special functions their moments need.

A smoothing distribution is a probability law L over the nonnegative
integers.  Its tail P(L >= i) attenuates the alternating coefficients of the
Good-Toulmin series, trading a little bias for a huge variance reduction.
Three moments of L drive the bias/variance analysis and are exposed here:

* ``tail(L, i)``            -- P(L >= i), the coefficient attenuation;
* ``expected_t_power(L, t)`` -- E[t^L], which caps the coefficient magnitude
  and hence the variance;
* ``signed_moment(L, s)``   -- E[(-s)^L / L!], whose damped envelope
  ``xi_bound`` controls the bias.

Closed forms: for Poisson(r) smoothing E[t^L] = exp(r(t-1)) and
E[(-s)^L/L!] = exp(-r) * J0(2*sqrt(s*r)); for Binomial(k, q) smoothing
E[t^L] = (1 + q(t-1))^k and E[(-s)^L/L!] = (1-q)^k * L_k(qs/(1-q)) with L_k
the degree-k Laguerre polynomial.  J0 and L_k are implemented below rather
than imported so the package has no heavyweight runtime dependencies; both
are cross-checked against independent series in the test suite.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO, Union

import numpy as np

from .numerics import golden_section_max, kahan_sum

__all__ = [
    "BinomialSmoothing",
    "CustomSmoothing",
    "DeterministicSmoothing",
    "NoSmoothing",
    "PoissonSmoothing",
    "SmoothingDistribution",
    "UnboundedMomentError",
    "bessel_j0",
    "expected_t_power",
    "laguerre",
    "pmf",
    "read_custom_pmf_csv",
    "signed_moment",
    "tail",
    "xi_bound",
]

# Relative cutoff for upward tail/series recurrences.
_TERM_CUTOFF = 1e-18

# Largest support allowed for a user-supplied pmf.  Useful smoothing laws
# concentrate below roughly log(sample size), so this is generous.
_CUSTOM_SUPPORT_CAP = 10_000


class UnboundedMomentError(ValueError):
    """Requested a moment that diverges (e.g. E[t^L] with no smoothing)."""


@dataclass(frozen=True)
class PoissonSmoothing:
    """L ~ Poisson(rate)."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"Poisson smoothing needs rate > 0, got {self.rate}")


@dataclass(frozen=True)
class BinomialSmoothing:
    """L ~ Binomial(trials, prob); trials = 0 degenerates to mass at zero."""

    trials: int
    prob: float

    def __post_init__(self):
        if self.trials < 0 or int(self.trials) != self.trials:
            raise ValueError(f"binomial trials must be a nonnegative integer, got {self.trials}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"binomial probability must lie in [0, 1], got {self.prob}")


@dataclass(frozen=True)
class DeterministicSmoothing:
    """L == cutoff with probability one (plain series truncation)."""

    cutoff: int

    def __post_init__(self):
        if self.cutoff < 0 or int(self.cutoff) != self.cutoff:
            raise ValueError(f"cutoff must be a nonnegative integer, got {self.cutoff}")


@dataclass(frozen=True)
class NoSmoothing:
    """L = infinity: every tail is one, i.e. the raw unsmoothed series."""


@dataclass(frozen=True)
class CustomSmoothing:
    """Arbitrary finite pmf over {0, 1, ..., len(probs)-1}."""

    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.probs) == 0:
            raise ValueError("custom smoothing needs at least one pmf entry")
        if len(self.probs) > _CUSTOM_SUPPORT_CAP:
            raise ValueError(f"custom pmf support capped at {_CUSTOM_SUPPORT_CAP} entries")
        if any(p < 0 for p in self.probs):
            raise ValueError("custom pmf entries must be nonnegative")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"custom pmf must sum to 1 within 1e-12, got {total!r}")


SmoothingDistribution = Union[
    PoissonSmoothing,
    BinomialSmoothing,
    DeterministicSmoothing,
    NoSmoothing,
    CustomSmoothing,
]


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------


def laguerre(k: int, y: float) -> float:
    """Laguerre polynomial L_k(y) = sum_{j<=k} C(k,j) (-y)^j / j!.

    Evaluated by the standard three-term recurrence
    (j+1) L_{j+1} = (2j+1-y) L_j - j L_{j-1}, which is numerically stable
    for y >= 0; the direct alternating sum is not.
    """
    if k < 0 or int(k) != k:
        raise ValueError(f"degree must be a nonnegative integer, got {k}")
    if y < 0:
        raise ValueError(f"argument must be nonnegative, got {y}")
    if k == 0:
        return 1.0
    prev, cur = 1.0, 1.0 - y
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 - y) * cur - j * prev) / (j + 1)
    return cur


def bessel_j0(x: float) -> float:
    """Bessel function of the first kind, order zero.

    Power series sum_j (-1)^j (x/2)^{2j} / (j!)^2 for |x| <= 12, where its
    alternating terms stay small enough for full double accuracy; Hankel's
    asymptotic expansion beyond, where the power series would cancel badly.
    """
    x = abs(x)
    if x <= 12.0:
        q = 0.25 * x * x
        term = 1.0
        acc = 1.0
        j = 0
        while True:
            j += 1
            term *= -q / (j * j)
            acc += term
            if abs(term) <= _TERM_CUTOFF * (abs(acc) + 1e-300):
                return acc
    # Hankel expansion: J0(x) ~ sqrt(2/(pi x)) (P cos chi - Q sin chi),
    # chi = x - pi/4, with terms t_k = prod_{j<=k} (2j-1)^2 / (k! (8x)^k);
    # P alternates over even k, Q over odd k.  Truncated at the smallest
    # term, the error is far below 1e-13 for x >= 12.
    p_sum, q_sum = 1.0, 0.0
    term = 1.0
    sign = 1.0
    k = 0
    while True:
        k += 1
        term *= (2 * k - 1) ** 2 / (8.0 * x * k)
        if k % 2 == 1:
            q_sum += -sign * term
        else:
            sign = -sign
            p_sum += sign * term
        if term < 1e-17 or k > 40:
            break
    chi = x - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * math.cos(chi) - q_sum * math.sin(chi))


# ---------------------------------------------------------------------------
# pmf and tails
# ---------------------------------------------------------------------------


def pmf(dist: SmoothingDistribution, ell: int) -> float:
    """P(L = ell)."""
    if ell < 0:
        return 0.0
    if isinstance(dist, PoissonSmoothing):
        return math.exp(-dist.rate + ell * math.log(dist.rate) - math.lgamma(ell + 1))
    if isinstance(dist, BinomialSmoothing):
        k, q = dist.trials, dist.prob
        if ell > k:
            return 0.0
        if q == 0.0:
            return 1.0 if ell == 0 else 0.0
        if q == 1.0:
            return 1.0 if ell == k else 0.0
        return math.comb(k, ell) * q**ell * (1.0 - q) ** (k - ell)
    if isinstance(dist, DeterministicSmoothing):
        return 1.0 if ell == dist.cutoff else 0.0
    if isinstance(dist, CustomSmoothing):
        return dist.probs[ell] if ell < len(dist.probs) else 0.0
    if isinstance(dist, NoSmoothing):
        return 0.0
    raise TypeError(f"unknown smoothing distribution {dist!r}")


def support_bound(dist: SmoothingDistribution, eps: float = 1e-15) -> int:
    """Smallest index beyond which the tail is below ``eps`` (exact zero for
    finite-support laws)."""
    if isinstance(dist, BinomialSmoothing):
        return dist.trials
    if isinstance(dist, DeterministicSmoothing):
        return dist.cutoff
    if isinstance(dist, CustomSmoothing):
        return len(dist.probs) - 1
    if isinstance(dist, PoissonSmoothing):
        ell = int(math.ceil(dist.rate)) + 1
        while tail(dist, ell) > eps:
            ell += 1
        return ell
    raise UnboundedMomentError("no finite support bound without smoothing")


def tail(dist: SmoothingDistribution, i: int) -> float:
    """Upper tail P(L >= i).

    Always 1 at i = 0.  Poisson tails are summed upward from pmf(i) with a
    relative cutoff, which keeps small tails accurate where the 1 - CDF
    subtraction would cancel.
    """
    if i < 0:
        raise ValueError(f"tail index must be nonnegative, got {i}")
    if i == 0:
        return 1.0
    if isinstance(dist, NoSmoothing):
        return 1.0
    if isinstance(dist, DeterministicSmoothing):
        return 1.0 if i <= dist.cutoff else 0.0
    if isinstance(dist, BinomialSmoothing):
        if i > dist.trials:
            return 0.0
        return math.fsum(pmf(dist, j) for j in range(i, dist.trials + 1))
    if isinstance(dist, CustomSmoothing):
        if i >= len(dist.probs):
            return 0.0
        return math.fsum(dist.probs[i:])
    if isinstance(dist, PoissonSmoothing):
        r = dist.rate
        term = pmf(dist, i)
        total = term
        j = i
        while term > _TERM_CUTOFF * total:
            j += 1
            term *= r / j
            total += term
        return min(total, 1.0)
    raise TypeError(f"unknown smoothing distribution {dist!r}")


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


def expected_t_power(dist: SmoothingDistribution, t: float) -> float:
    """E[t^L] for t >= 1.  Diverges (raises) without smoothing."""
    if t < 1.0:
        raise ValueError(f"extrapolation ratio must be >= 1, got {t}")
    if isinstance(dist, NoSmoothing):
        raise UnboundedMomentError("E[t^L] is unbounded without smoothing")
    if isinstance(dist, PoissonSmoothing):
        return math.exp(dist.rate * (t - 1.0))
    if isinstance(dist, BinomialSmoothing):
        return (1.0 + dist.prob * (t - 1.0)) ** dist.trials
    if isinstance(dist, DeterministicSmoothing):
        return t**dist.cutoff
    if isinstance(dist, CustomSmoothing):
        return math.fsum(p * t**ell for ell, p in enumerate(dist.probs))
    raise TypeError(f"unknown smoothing distribution {dist!r}")


def signed_moment(dist: SmoothingDistribution, s: float) -> float:
    """E[(-s)^L / L!] for s >= 0.

    Poisson smoothing reduces to exp(-r) * J0(2 sqrt(s r)); binomial
    smoothing to (1-q)^k * L_k(q s / (1-q)).  Finite laws are summed
    directly.
    """
    if s < 0:
        raise ValueError(f"argument must be nonnegative, got {s}")
    if isinstance(dist, NoSmoothing):
        raise UnboundedMomentError("signed moment undefined without smoothing")
    if isinstance(dist, PoissonSmoothing):
        return math.exp(-dist.rate) * bessel_j0(2.0 * math.sqrt(s * dist.rate))
    if isinstance(dist, BinomialSmoothing):
        k, q = dist.trials, dist.prob
        if q == 1.0:
            return (-s) ** k / math.factorial(k) if k < 171 else _direct_signed_sum(dist, s)
        return (1.0 - q) ** k * laguerre(k, q * s / (1.0 - q))
    if isinstance(dist, DeterministicSmoothing):
        ell = dist.cutoff
        sign = -1.0 if ell % 2 else 1.0
        return sign * math.exp(ell * math.log(s) - math.lgamma(ell + 1)) if s > 0 else (1.0 if ell == 0 else 0.0)
    if isinstance(dist, CustomSmoothing):
        return _direct_signed_sum(dist, s)
    raise TypeError(f"unknown smoothing distribution {dist!r}")


def _direct_signed_sum(dist: SmoothingDistribution, s: float) -> float:
    bound = support_bound(dist)
    factor = 1.0
    terms = []
    for ell in range(bound + 1):
        if ell > 0:
            factor *= -s / ell
        terms.append(pmf(dist, ell) * factor)
    return math.fsum(terms)


def xi_bound(dist: SmoothingDistribution, t: float) -> float:
    """Upper bound on max over s >= 0 of |E[(-s)^L/L!]| * exp(-s/t).

    This damped envelope of the signed moment is exactly the quantity that
    controls the estimator bias, so tight values matter.  Closed-form bounds:
    exp(-r) for Poisson smoothing (|J0| <= 1) and (1-q)^k for binomial
    smoothing, the latter valid only when t q / (2 (1-q)) <= 1, i.e.
    q <= 2/(2+t), via |L_k(y)| <= exp(y/2).  Deterministic cutoffs admit an
    exact maximum at s = cutoff * t.  Custom laws are maximized numerically
    on a log-spaced grid refined by golden-section search; for them the
    returned value is the numeric maximum, not an analytic bound.
    """
    if t < 1.0:
        raise ValueError(f"extrapolation ratio must be >= 1, got {t}")
    if isinstance(dist, NoSmoothing):
        raise UnboundedMomentError("bias envelope undefined without smoothing")
    if isinstance(dist, PoissonSmoothing):
        return math.exp(-dist.rate)
    if isinstance(dist, BinomialSmoothing):
        if dist.prob > 2.0 / (2.0 + t) + 1e-12:
            raise ValueError(
                "smoothing too aggressive for bias bound: "
                f"binomial prob {dist.prob:.6g} exceeds 2/(2+t) = {2.0 / (2.0 + t):.6g}"
            )
        return (1.0 - dist.prob) ** dist.trials
    if isinstance(dist, DeterministicSmoothing):
        ell = dist.cutoff
        if ell == 0:
            return 1.0
        # max of (s^ell / ell!) e^{-s/t} sits at s = ell t
        return math.exp(ell * math.log(ell * t) - ell - math.lgamma(ell + 1))
    if isinstance(dist, CustomSmoothing):
        return _xi_numeric(dist, t)
    raise TypeError(f"unknown smoothing distribution {dist!r}")


def _xi_numeric(dist: SmoothingDistribution, t: float) -> float:
    def envelope(s: float) -> float:
        return abs(signed_moment(dist, s)) * math.exp(-s / t)

    grid = np.concatenate([[0.0], np.geomspace(1e-4, 100.0 * t, 400)])
    values = [envelope(s) for s in grid]
    best = int(np.argmax(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    if hi <= lo:
        return values[best]
    _, peak = golden_section_max(envelope, lo, hi)
    return max(peak, values[best])


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------


def read_custom_pmf_csv(src: Union[str, Path, TextIO]) -> CustomSmoothing:
    """Read an ``ell,prob`` CSV into a CustomSmoothing law.

    Probabilities must sum to 1 within 1e-9; they are renormalized to the
    stricter constructor tolerance afterwards.
    """
    if isinstance(src, (str, Path)):
        text = Path(src).read_text(encoding="utf-8")
    else:
        text = src.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["ell", "prob"]:
        raise ValueError("custom pmf CSV must start with an 'ell,prob' header")
    entries: dict[int, float] = {}
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        ell, p = int(row[0]), float(row[1])
        if ell < 0:
            raise ValueError(f"pmf support must be nonnegative, got {ell}")
        if ell in entries:
            raise ValueError(f"duplicate pmf entry for {ell}")
        entries[ell] = p
    if not entries:
        raise ValueError("empty pmf file")
    top = max(entries)
    if top >= _CUSTOM_SUPPORT_CAP:
        raise ValueError(f"custom pmf support capped at {_CUSTOM_SUPPORT_CAP} entries")
    probs = [entries.get(ell, 0.0) for ell in range(top + 1)]
    total = math.fsum(probs)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"pmf must sum to 1 within 1e-9, got {total!r}")
    return CustomSmoothing(tuple(p / total for p in probs))
