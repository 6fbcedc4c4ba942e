"""Classical richness baselines and the coverage-based extrapolation.

These are comparison estimators, implemented from their original sources
and treated as fixtures rather than research claims:

* Chao-Lee: the sample-coverage richness estimator with CV correction,
  Chao & Lee (1992), JASA 87:210-217, Eq. (10) ("ACE-1" form).
* ACE: the Abundance-based Coverage Estimator restricted to species at or
  below a rare-abundance cutoff (conventionally 10), Chao & Lee (1992) as
  popularized in Chao (2005) and the EstimateS manual.
* Jackknife orders 1-5: Burnham & Overton (1978, Biometrika 65:625-633;
  1979, Ecology 60:927-936), coefficients per their Table 1.
* Shen-Chao-Lin extrapolation: expected number of new species in m further
  samples given an estimate f0 of the unseen richness,
  Shen, Chao & Lin (2003), Ecology 84:798-804, Eq. (5):
      f0 * (1 - (1 - f1 / (n*f0 + f1))^m).

A support-size estimate S_hat is converted to an unseen-species prediction
by extrapolating f0 = S_hat - S_obs through the Shen-Chao-Lin curve.  The
"empirical" baseline predicts no new species at all and serves as the
naive floor.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .prevalence import PrevalenceHistogram

__all__ = [
    "BaselineKind",
    "DegenerateCoverageError",
    "baseline_unseen",
    "richness_estimate",
    "shen_chao_lin_unseen",
]

ACE_RARE_CUTOFF = 10


class DegenerateCoverageError(ValueError):
    """Sample coverage estimate is zero (every species a singleton)."""


class _Family(enum.Enum):
    CHAO_LEE = "chao-lee"
    ACE = "ace"
    JACKKNIFE = "jackknife"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class BaselineKind:
    """One of chao-lee | ace | jackknife (order 1..5) | empirical."""

    family: _Family
    order: int = 1
    rare_cutoff: int = ACE_RARE_CUTOFF

    def __post_init__(self):
        if self.family is _Family.JACKKNIFE and not 1 <= self.order <= 5:
            raise ValueError(f"jackknife order must be in 1..5, got {self.order}")

    @classmethod
    def chao_lee(cls) -> "BaselineKind":
        return cls(_Family.CHAO_LEE)

    @classmethod
    def ace(cls, rare_cutoff: int = ACE_RARE_CUTOFF) -> "BaselineKind":
        return cls(_Family.ACE, rare_cutoff=rare_cutoff)

    @classmethod
    def jackknife(cls, order: int = 1) -> "BaselineKind":
        return cls(_Family.JACKKNIFE, order=order)

    @classmethod
    def empirical(cls) -> "BaselineKind":
        return cls(_Family.EMPIRICAL)

    @classmethod
    def parse(cls, name: str) -> "BaselineKind":
        name = name.strip().lower()
        if name == "chao-lee":
            return cls.chao_lee()
        if name == "ace":
            return cls.ace()
        if name == "empirical":
            return cls.empirical()
        if name.startswith("jackknife"):
            _, _, suffix = name.partition("-")
            return cls.jackknife(int(suffix) if suffix else 1)
        raise ValueError(f"unknown baseline {name!r}")

    def label(self) -> str:
        if self.family is _Family.JACKKNIFE:
            return f"jackknife-{self.order}"
        return self.family.value


def _coverage_stats(hist: PrevalenceHistogram) -> tuple[int, int, float]:
    n = hist.sample_size()
    f1 = hist.get(1)
    if n == 0:
        raise ValueError("richness estimation needs a nonempty histogram")
    coverage = 1.0 - f1 / n
    return n, f1, coverage


def _chao_lee_richness(hist: PrevalenceHistogram) -> float:
    n, f1, coverage = _coverage_stats(hist)
    if coverage <= 0.0:
        raise DegenerateCoverageError("all-singletons: coverage undefined")
    s_obs = hist.observed_count()
    base = s_obs / coverage
    if n < 2:
        return base
    pair_sum = sum(i * (i - 1) * c for i, c in hist.items())
    cv2 = max(base * pair_sum / (n * (n - 1)) - 1.0, 0.0)
    return base + n * (1.0 - coverage) / coverage * cv2


def _ace_richness(hist: PrevalenceHistogram, cutoff: int) -> float:
    f1 = hist.get(1)
    s_rare = sum(c for i, c in hist.items() if i <= cutoff)
    s_abund = sum(c for i, c in hist.items() if i > cutoff)
    n_rare = sum(i * c for i, c in hist.items() if i <= cutoff)
    if s_rare == 0:
        return float(s_abund)
    coverage = 1.0 - f1 / n_rare
    if coverage <= 0.0:
        raise DegenerateCoverageError("all-singletons: coverage undefined")
    pair_sum = sum(i * (i - 1) * c for i, c in hist.items() if i <= cutoff)
    cv2 = 0.0
    if n_rare > 1:
        cv2 = max(s_rare / coverage * pair_sum / (n_rare * (n_rare - 1)) - 1.0, 0.0)
    return s_abund + s_rare / coverage + f1 / coverage * cv2


def _jackknife_richness(hist: PrevalenceHistogram, order: int) -> float:
    """Burnham-Overton jackknife of the stated order.

    Coefficient tables (f_j multiplies the count of species seen j times):
      k=1:  f1 (n-1)/n
      k=2:  f1 (2n-3)/n - f2 (n-2)^2/(n(n-1))
      k=3:  f1 (3n-6)/n - f2 (3n^2-15n+19)/(n(n-1))
            + f3 (n-3)^3/(n(n-1)(n-2))
      k=4:  f1 (4n-10)/n - f2 (6n^2-36n+55)/(n(n-1))
            + f3 (4n^3-42n^2+148n-175)/(n(n-1)(n-2))
            - f4 (n-4)^4/(n(n-1)(n-2)(n-3))
      k=5:  f1 (5n-15)/n - f2 (10n^2-70n+125)/(n(n-1))
            + f3 (10n^3-120n^2+485n-660)/(n(n-1)(n-2))
            - f4 ((n-4)^5-(n-5)^5)/(n(n-1)(n-2)(n-3))
            + f5 (n-5)^5/(n(n-1)(n-2)(n-3)(n-4))
    """
    n = hist.sample_size()
    s_obs = hist.observed_count()
    if n <= order:
        raise ValueError(f"jackknife-{order} needs sample size > {order}, got {n}")
    f = [hist.get(i) for i in range(6)]
    d1 = n
    d2 = n * (n - 1)
    d3 = d2 * (n - 2)
    d4 = d3 * (n - 3)
    d5 = d4 * (n - 4)
    if order == 1:
        extra = f[1] * (n - 1) / d1
    elif order == 2:
        extra = f[1] * (2 * n - 3) / d1 - f[2] * (n - 2) ** 2 / d2
    elif order == 3:
        extra = (
            f[1] * (3 * n - 6) / d1
            - f[2] * (3 * n**2 - 15 * n + 19) / d2
            + f[3] * (n - 3) ** 3 / d3
        )
    elif order == 4:
        extra = (
            f[1] * (4 * n - 10) / d1
            - f[2] * (6 * n**2 - 36 * n + 55) / d2
            + f[3] * (4 * n**3 - 42 * n**2 + 148 * n - 175) / d3
            - f[4] * (n - 4) ** 4 / d4
        )
    else:
        extra = (
            f[1] * (5 * n - 15) / d1
            - f[2] * (10 * n**2 - 70 * n + 125) / d2
            + f[3] * (10 * n**3 - 120 * n**2 + 485 * n - 660) / d3
            - f[4] * ((n - 4) ** 5 - (n - 5) ** 5) / d4
            + f[5] * (n - 5) ** 5 / d5
        )
    return s_obs + extra


def richness_estimate(hist: PrevalenceHistogram, kind: BaselineKind) -> float:
    """Support-size estimate S_hat for the chosen baseline family."""
    if not hist:
        raise ValueError("richness estimation needs a nonempty histogram")
    if kind.family is _Family.EMPIRICAL:
        return float(hist.observed_count())
    if kind.family is _Family.CHAO_LEE:
        return _chao_lee_richness(hist)
    if kind.family is _Family.ACE:
        return _ace_richness(hist, kind.rare_cutoff)
    return _jackknife_richness(hist, kind.order)


def shen_chao_lin_unseen(hist: PrevalenceHistogram, t: float, f0_hat: float) -> float:
    """Expected new species in m = t*n further samples given unseen richness f0.

    Shen, Chao & Lin (2003), Eq. (5).  Vanishes when there are no singletons
    or no estimated unseen species.
    """
    n = hist.sample_size()
    f1 = hist.get(1)
    if f0_hat <= 0.0 or f1 == 0 or n == 0:
        return 0.0
    m = t * n
    return f0_hat * (1.0 - (1.0 - f1 / (n * f0_hat + f1)) ** m)


def baseline_unseen(hist: PrevalenceHistogram, t: float, kind: BaselineKind) -> float:
    """Unseen-species prediction: richness estimate pushed through the
    Shen-Chao-Lin extrapolation to m = t*n new samples.

    The result is nonnegative and never exceeds the estimated unseen
    richness S_hat - S_obs.  Raises DegenerateCoverageError when the
    coverage estimate collapses (all species singletons) for the
    coverage-based families.
    """
    if t <= 0:
        raise ValueError(f"extrapolation ratio must be positive, got {t}")
    if not hist:
        raise ValueError("baseline prediction needs a nonempty histogram")
    if kind.family is _Family.EMPIRICAL:
        return 0.0
    s_hat = richness_estimate(hist, kind)
    f0_hat = max(s_hat - hist.observed_count(), 0.0)
    return shen_chao_lin_unseen(hist, t, f0_hat)
