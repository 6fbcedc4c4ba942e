"""Populations, the four sampling models, and analytic Poisson-model oracles.

Sampling models
---------------
* multinomial  -- i.i.d. draws from a probability vector; the old and new
  blocks have exactly n and m elements.
* poisson      -- i.i.d. draws with Poissonized sizes N ~ Poisson(n),
  M ~ Poisson(m).  Per-symbol counts are then independent
  Poisson(n * p_x) / Poisson(m * p_x), which is how we draw them:
  O(support) instead of O(sample size), and exact.
* hypergeometric -- n then m draws without replacement from an urn whose
  symbol x has capacity r_x.
* bernoulli    -- incidence sampling: each of n (then m) sampling units
  independently records symbol x with probability p_x; probabilities need
  not sum to one.

All samplers take an explicit seed and are pure given it.  Concurrent
trials must derive distinct seeds (see harness.trial_seed).
"""

from __future__ import annotations

import csv
import enum
import io
import math
from collections.abc import Hashable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO, Union

import numpy as np

from .estimators import LinearEstimator
from .numerics import NonconvergenceError

__all__ = [
    "BernoulliProduct",
    "DirichletSpec",
    "HypergeometricUrn",
    "Model",
    "Population",
    "PopulationSpec",
    "Probabilistic",
    "TwoStepSpec",
    "UniformSpec",
    "ZipfSpec",
    "expected_bias_poisson",
    "expected_observed_poisson",
    "expected_unseen_poisson",
    "read_population_csv",
    "realize",
    "sample",
    "sample_counts",
    "true_unseen",
]

_BIAS_TERM_CAP = 10_000


# ---------------------------------------------------------------------------
# populations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Probabilistic:
    """A discrete distribution: positive weights normalized to sum to one."""

    probs: np.ndarray
    symbols: tuple[Hashable, ...] | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probability vector must be a nonempty 1-d array")
        if np.any(p <= 0):
            raise ValueError("probabilities must be strictly positive")
        if abs(math.fsum(p.tolist()) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)
        self._check_symbols(p.size)

    def _check_symbols(self, size: int) -> None:
        if self.symbols is not None and len(self.symbols) != size:
            raise ValueError("symbols and weights disagree in length")

    @property
    def size(self) -> int:
        return self.probs.size

    def symbol(self, index: int) -> Hashable:
        return self.symbols[index] if self.symbols is not None else index


@dataclass(frozen=True)
class BernoulliProduct:
    """Per-symbol presence probabilities in (0, 1]; no sum constraint."""

    probs: np.ndarray
    symbols: tuple[Hashable, ...] | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probability vector must be a nonempty 1-d array")
        if np.any((p <= 0) | (p > 1)):
            raise ValueError("presence probabilities must lie in (0, 1]")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)
        if self.symbols is not None and len(self.symbols) != p.size:
            raise ValueError("symbols and weights disagree in length")

    @property
    def size(self) -> int:
        return self.probs.size

    def symbol(self, index: int) -> Hashable:
        return self.symbols[index] if self.symbols is not None else index


@dataclass(frozen=True)
class HypergeometricUrn:
    """An urn with integer capacity r_x >= 1 per symbol; R = sum r_x."""

    capacities: np.ndarray
    symbols: tuple[Hashable, ...] | None = None

    def __post_init__(self):
        r = np.asarray(self.capacities, dtype=np.int64)
        if r.ndim != 1 or r.size == 0:
            raise ValueError("capacity vector must be a nonempty 1-d array")
        if np.any(r < 1):
            raise ValueError("urn capacities must be integers >= 1")
        r.flags.writeable = False
        object.__setattr__(self, "capacities", r)
        if self.symbols is not None and len(self.symbols) != r.size:
            raise ValueError("symbols and capacities disagree in length")

    @property
    def total(self) -> int:
        return int(self.capacities.sum())

    @property
    def size(self) -> int:
        return self.capacities.size

    def symbol(self, index: int) -> Hashable:
        return self.symbols[index] if self.symbols is not None else index


Population = Union[Probabilistic, BernoulliProduct, HypergeometricUrn]


# ---------------------------------------------------------------------------
# population families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformSpec:
    support: int


@dataclass(frozen=True)
class TwoStepSpec:
    """Half the symbols carry probability 1/(2k), the other half 3/(2k)."""

    support: int


@dataclass(frozen=True)
class ZipfSpec:
    """p_i proportional to 1/(i + shift)^exponent, i = 1..support."""

    exponent: float
    shift: float
    support: int


@dataclass(frozen=True)
class DirichletSpec:
    """One draw from the symmetric Dirichlet(alpha) prior, frozen per seed.

    Trials in an experiment vary only the sampling seed; the population
    itself is pinned by ``seed`` so repeated realizations agree.
    """

    alpha: float
    support: int
    seed: int


PopulationSpec = Union[UniformSpec, TwoStepSpec, ZipfSpec, DirichletSpec]


def realize(spec: PopulationSpec) -> Probabilistic:
    """Materialize a probability vector from a family description."""
    k = spec.support
    if k < 1:
        raise ValueError(f"support size must be >= 1, got {k}")
    if isinstance(spec, UniformSpec):
        return Probabilistic(np.full(k, 1.0 / k))
    if isinstance(spec, TwoStepSpec):
        if k % 2:
            raise ValueError(f"two-step family needs an even support size, got {k}")
        p = np.empty(k)
        p[: k // 2] = 1.0 / (2.0 * k)
        p[k // 2 :] = 3.0 / (2.0 * k)
        return Probabilistic(p)
    if isinstance(spec, ZipfSpec):
        if spec.exponent <= 0:
            raise ValueError(f"zipf exponent must be positive, got {spec.exponent}")
        if spec.shift < 0:
            raise ValueError(f"zipf shift must be nonnegative, got {spec.shift}")
        ranks = np.arange(1, k + 1, dtype=float)
        w = (ranks + spec.shift) ** (-spec.exponent)
        p = w / math.fsum(w.tolist())
        return Probabilistic(p)
    if isinstance(spec, DirichletSpec):
        if spec.alpha <= 0:
            raise ValueError(f"dirichlet alpha must be positive, got {spec.alpha}")
        rng = np.random.default_rng(spec.seed)
        p = rng.dirichlet(np.full(k, spec.alpha))
        # guard against zero cells from underflow at tiny alpha
        p = np.clip(p, 1e-300, None)
        p = p / math.fsum(p.tolist())
        return Probabilistic(p)
    raise TypeError(f"unknown population family {spec!r}")


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


class Model(enum.Enum):
    MULTINOMIAL = "multinomial"
    POISSON = "poisson"
    HYPERGEOMETRIC = "hyper"
    BERNOULLI = "bernoulli"


def sample_counts(
    pop: Population,
    model: Model,
    n: int,
    m: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (old, new) per-symbol count vectors aligned with the population.

    This is the array fast path the Monte-Carlo harness runs on; ``sample``
    wraps it in symbol-keyed mappings.
    """
    if n < 1:
        raise ValueError(f"old sample size must be >= 1, got {n}")
    if m < 0:
        raise ValueError(f"new sample size must be >= 0, got {m}")
    if model is Model.MULTINOMIAL:
        _require(pop, Probabilistic, model)
        old = rng.multinomial(n, pop.probs)
        new = rng.multinomial(m, pop.probs) if m else np.zeros_like(old)
        return old, new
    if model is Model.POISSON:
        _require(pop, Probabilistic, model)
        old = rng.poisson(n * pop.probs)
        new = rng.poisson(m * pop.probs) if m else np.zeros_like(old)
        return old, new
    if model is Model.HYPERGEOMETRIC:
        _require(pop, HypergeometricUrn, model)
        if n + m > pop.total:
            raise ValueError(
                f"cannot draw {n}+{m} balls without replacement from an urn of {pop.total}"
            )
        old = rng.multivariate_hypergeometric(pop.capacities, n)
        remaining = pop.capacities - old
        new = (
            rng.multivariate_hypergeometric(remaining, m)
            if m
            else np.zeros_like(old)
        )
        return old.astype(np.int64), new.astype(np.int64)
    if model is Model.BERNOULLI:
        _require(pop, BernoulliProduct, model)
        old = rng.binomial(n, pop.probs)
        new = rng.binomial(m, pop.probs) if m else np.zeros_like(old)
        return old, new
    raise TypeError(f"unknown model {model!r}")


def _require(pop: Population, kind: type, model: Model) -> None:
    if not isinstance(pop, kind):
        raise TypeError(
            f"model {model.value} needs a {kind.__name__} population, got {type(pop).__name__}"
        )


def sample(
    pop: Population,
    model: Model,
    n: int,
    m: int,
    seed: int,
) -> tuple[dict[Hashable, int], dict[Hashable, int]]:
    """Draw an (old, new) pair of symbol -> count maps (nonzero entries only).

    Deterministic given ``seed``.
    """
    rng = np.random.default_rng(seed)
    old, new = sample_counts(pop, model, n, m, rng)
    old_map = {pop.symbol(i): int(c) for i, c in enumerate(old) if c > 0}
    new_map = {pop.symbol(i): int(c) for i, c in enumerate(new) if c > 0}
    return old_map, new_map


def true_unseen(
    old: Mapping[Hashable, int], new: Mapping[Hashable, int]
) -> int:
    """Count the symbols present in the new sample but absent from the old."""
    return sum(1 for sym, c in new.items() if c > 0 and old.get(sym, 0) == 0)


# ---------------------------------------------------------------------------
# analytic oracles (Poissonized sampling)
# ---------------------------------------------------------------------------


def expected_unseen_poisson(pop: Probabilistic, n: int, t: float) -> float:
    """E[U] = sum_x e^{-n p_x} (1 - e^{-t n p_x}) under Poissonized sampling."""
    lam = n * pop.probs
    return float(np.sum(np.exp(-lam) * -np.expm1(-t * lam)))


def expected_observed_poisson(pop: Probabilistic, n: int) -> float:
    """Expected number of distinct observed symbols, sum_x (1 - e^{-n p_x})."""
    lam = n * pop.probs
    return float(np.sum(-np.expm1(-lam)))


def expected_bias_poisson(
    pop: Probabilistic, n: int, t: float, est: LinearEstimator
) -> float:
    """Exact bias of a linear estimator under Poissonized sampling.

    bias = sum_x e^{-lam_x} (h(lam_x) - (1 - e^{-t lam_x})) where
    h(y) = sum_{i>=1} h_i y^i / i! is the estimator's generating series,
    evaluated with enough terms that the remaining tail is below 1e-12
    relative (capped at 10^4 terms).
    """
    lams, multiplicity = np.unique(n * pop.probs, return_counts=True)
    total = 0.0
    for lam, count in zip(lams.tolist(), multiplicity.tolist()):
        h = _series_value(est, lam)
        target = -math.expm1(-t * lam)
        total += count * math.exp(-lam) * (h - target)
    return total


def _series_value(est: LinearEstimator, y: float) -> float:
    """sum_{i>=1} h_i y^i / i!, run past the hump until terms are negligible."""
    if y == 0.0:
        return 0.0
    acc = 0.0
    comp = 0.0
    factor = 1.0
    hump = y * max(est.ratio, 1.0)
    for i in range(1, _BIAS_TERM_CAP + 1):
        factor *= y / i
        term = est.coefficient(i) * factor
        # Kahan step
        t_ = acc + term
        if abs(acc) >= abs(term):
            comp += (acc - t_) + term
        else:
            comp += (term - t_) + acc
        acc = t_
        if i > hump and abs(term) <= 1e-12 * (abs(acc + comp) + 1e-30):
            return acc + comp
    raise NonconvergenceError(
        f"bias series did not settle within {_BIAS_TERM_CAP} terms (y={y:g})"
    )


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------


def read_population_csv(
    src: Union[str, Path, TextIO], kind: str = "probabilistic"
) -> Population:
    """Read a ``symbol,weight`` CSV.

    ``kind`` selects the interpretation of the weights: "probabilistic"
    (normalized), "bernoulli" (probabilities in (0,1], taken verbatim) or
    "urn" (integer capacities).
    """
    if isinstance(src, (str, Path)):
        text = Path(src).read_text(encoding="utf-8")
    else:
        text = src.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["symbol", "weight"]:
        raise ValueError("population CSV must start with a 'symbol,weight' header")
    symbols: list[str] = []
    weights: list[float] = []
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise ValueError(f"malformed population row: {row!r}")
        symbols.append(row[0])
        weights.append(float(row[1]))
    if not symbols:
        raise ValueError("empty population file")
    w = np.asarray(weights, dtype=float)
    syms = tuple(symbols)
    if kind == "probabilistic":
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        return Probabilistic(w / math.fsum(w.tolist()), symbols=syms)
    if kind == "bernoulli":
        return BernoulliProduct(w, symbols=syms)
    if kind == "urn":
        caps = w.astype(np.int64)
        if np.any(caps != w):
            raise ValueError("urn capacities must be integers")
        return HypergeometricUrn(caps, symbols=syms)
    raise ValueError(f"unknown population kind {kind!r}")
