"""Monte-Carlo experiment runner: NMSE benchmarks, discovery curves,
real-data subsampling, corpus ingestion, and result emission.

Design notes
------------
Per-trial seeds derive from the master seed and the trial index alone
(``trial_seed``), so every estimator sees the same samples in a given trial
(paired comparison, lower variance) and results are bit-reproducible
regardless of thread count.  Aggregation happens in trial order after all
workers finish.

A failing estimator on one trial is recorded and skipped rather than
fatal; the run aborts only when more than 10% of all trials fail.
"""

from __future__ import annotations

import json
import math
import re
import time
import warnings
from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Hashable, TextIO, Union

import numpy as np

from .baselines import BaselineKind, DegenerateCoverageError, baseline_unseen
from .estimators import SmoothingScheme, estimate_unseen, good_toulmin
from .prevalence import PrevalenceHistogram
from .sampling import (
    DirichletSpec,
    Model,
    Population,
    Probabilistic,
    TwoStepSpec,
    UniformSpec,
    ZipfSpec,
    read_population_csv,
    realize,
    sample_counts,
)

__all__ = [
    "BASELINE_NAMES",
    "ESTIMATOR_NAMES",
    "SCHEME_NAMES",
    "CurveRow",
    "ExperimentConfig",
    "IngestResult",
    "NmseRow",
    "SubsampleMode",
    "TooManyTrialFailures",
    "discovery_curve",
    "discovery_curve_synthetic",
    "emit_csv",
    "emit_json",
    "ingest_corpus",
    "parse_population",
    "read_csv_rows",
    "run_nmse",
    "subsample",
    "trial_seed",
]

NMSE_COLUMNS = ("estimator", "model", "population", "n", "t", "trials", "nmse", "nmse_se")
CURVE_COLUMNS = ("estimator", "t", "mean_prediction", "stddev", "true_value")

SCHEME_NAMES = ("gt", "poisson", "binomial-et", "binomial-opt", "hyper-poisson")
BASELINE_NAMES = (
    "chao-lee",
    "ace",
    "jackknife-1",
    "jackknife-2",
    "jackknife-3",
    "jackknife-4",
    "jackknife-5",
    "empirical",
)
ESTIMATOR_NAMES = SCHEME_NAMES + BASELINE_NAMES + ("const-half", "oracle")

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

FAILURE_ABORT_FRACTION = 0.10


class TooManyTrialFailures(RuntimeError):
    """More than the tolerated fraction of Monte-Carlo trials failed."""


def trial_seed(master_seed: int, trial: int) -> np.random.SeedSequence:
    """Derived, collision-free seed for one trial of one experiment."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(trial,))


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of an NMSE benchmark run."""

    model: Model
    population: str  # family string, e.g. "uniform:100" (see parse_population)
    n: int
    t_grid: tuple[float, ...]
    estimators: tuple[str, ...]
    trials: int
    seed: int
    clamp: bool = True
    threads: int = 1

    def __post_init__(self):
        if not self.t_grid:
            raise ValueError("t grid must be nonempty")
        if any(t <= 0 for t in self.t_grid):
            raise ValueError("extrapolation ratios must be positive")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.n < 1:
            raise ValueError("sample size must be >= 1")
        unknown = [e for e in self.estimators if e not in ESTIMATOR_NAMES]
        if unknown:
            raise ValueError(f"unknown estimators: {unknown}; choose from {ESTIMATOR_NAMES}")

    def echo(self) -> dict:
        return {
            "model": self.model.value,
            "population": self.population,
            "n": self.n,
            "t_grid": list(self.t_grid),
            "estimators": list(self.estimators),
            "trials": self.trials,
            "seed": self.seed,
            "clamp": self.clamp,
            "threads": self.threads,
        }


@dataclass(frozen=True)
class TrialRecord:
    """Raw outcome of one (trial, t, estimator) cell."""

    trial: int
    t: float
    estimator: str
    estimate: float
    true_unseen: int
    squared_normalized_error: float
    duration_s: float
    failed: bool = False


@dataclass(frozen=True)
class NmseRow:
    estimator: str
    model: str
    population: str
    n: int
    t: float
    trials: int
    nmse: float
    nmse_se: float

    def as_tuple(self) -> tuple:
        return (
            self.estimator,
            self.model,
            self.population,
            self.n,
            self.t,
            self.trials,
            self.nmse,
            self.nmse_se,
        )


@dataclass(frozen=True)
class CurveRow:
    estimator: str
    t: float
    mean_prediction: float
    stddev: float
    true_value: float | None

    def as_tuple(self) -> tuple:
        return (
            self.estimator,
            self.t,
            self.mean_prediction,
            self.stddev,
            "" if self.true_value is None else self.true_value,
        )


# ---------------------------------------------------------------------------
# population spec strings
# ---------------------------------------------------------------------------


def parse_population(spec: str) -> Population:
    """Parse a population description string.

    Grammar (fields separated by ':'):
      uniform:K                 equiprobable over K symbols
      twostep:K                 half at 1/(2K), half at 3/(2K)
      zipf:S:SHIFT:K            p_i ~ 1/(i+SHIFT)^S
      dirichlet:ALPHA:K:SEED    one draw from symmetric Dirichlet(ALPHA)
      urn:uniform:K:C           urn with K symbols of capacity C each
      urn:file:PATH             capacities from a symbol,weight CSV
      bern:uniform:K:P          K symbols, presence probability P each
      bern:file:PATH            presence probabilities from CSV
      file:PATH                 normalized weights from CSV
    """
    parts = spec.split(":")
    head = parts[0].lower()
    try:
        if head == "uniform":
            return realize(UniformSpec(int(parts[1])))
        if head == "twostep":
            return realize(TwoStepSpec(int(parts[1])))
        if head == "zipf":
            return realize(ZipfSpec(float(parts[1]), float(parts[2]), int(parts[3])))
        if head == "dirichlet":
            return realize(DirichletSpec(float(parts[1]), int(parts[2]), int(parts[3])))
        if head == "file":
            return read_population_csv(":".join(parts[1:]))
        if head == "urn":
            if parts[1].lower() == "uniform":
                k, cap = int(parts[2]), int(parts[3])
                from .sampling import HypergeometricUrn

                return HypergeometricUrn(np.full(k, cap, dtype=np.int64))
            if parts[1].lower() == "file":
                return read_population_csv(":".join(parts[2:]), kind="urn")
        if head == "bern":
            if parts[1].lower() == "uniform":
                k, p = int(parts[2]), float(parts[3])
                from .sampling import BernoulliProduct

                return BernoulliProduct(np.full(k, p))
            if parts[1].lower() == "file":
                return read_population_csv(":".join(parts[2:]), kind="bernoulli")
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed population spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown population family in {spec!r}")


# ---------------------------------------------------------------------------
# estimators by name
# ---------------------------------------------------------------------------


def _resolve_estimator(
    name: str, clamp: bool
) -> Callable[[PrevalenceHistogram, int, float, int], float]:
    """Map a stable estimator id to a callable (hist, n, t, true_u) -> estimate."""
    if name == "gt":
        return lambda hist, n, t, true_u: (
            min(max(good_toulmin(hist, t), 0.0), t * n) if clamp else good_toulmin(hist, t)
        )
    if name in SCHEME_NAMES:
        scheme = SmoothingScheme(name)
        return lambda hist, n, t, true_u: estimate_unseen(hist, t, scheme, clamp=clamp)
    if name == "const-half":
        return lambda hist, n, t, true_u: n * t / 2.0
    if name == "oracle":
        return lambda hist, n, t, true_u: float(true_u)
    kind = BaselineKind.parse(name)

    def baseline(hist: PrevalenceHistogram, n: int, t: float, true_u: int) -> float:
        try:
            return baseline_unseen(hist, t, kind)
        except DegenerateCoverageError:
            # keep long sweeps alive: degenerate coverage falls back to the
            # first-order jackknife prediction
            warnings.warn(
                f"{name}: degenerate coverage, substituting jackknife-1", stacklevel=2
            )
            return baseline_unseen(hist, t, BaselineKind.jackknife(1))

    return baseline


# ---------------------------------------------------------------------------
# NMSE benchmark
# ---------------------------------------------------------------------------


def run_nmse(config: ExperimentConfig) -> list[NmseRow]:
    """Monte-Carlo normalized mean-square error study.

    For each (estimator, t): mean over trials of ((estimate - U) / (n t))^2
    together with the standard error of that mean.  Reported per population;
    a worst case over populations is not observable, so callers sweep a
    population menu instead.
    """
    pop = parse_population(config.population)
    names = tuple(dict.fromkeys(config.estimators))  # dedupe, keep order
    fns = {name: _resolve_estimator(name, config.clamp) for name in names}
    t_grid = tuple(config.t_grid)
    n = config.n

    errors = {
        (name, t): np.full(config.trials, np.nan) for name in names for t in t_grid
    }
    failures = 0

    def run_trial(trial: int) -> list[TrialRecord]:
        rng = np.random.default_rng(trial_seed(config.seed, trial))
        out = []
        for t in t_grid:
            m = int(round(t * n))
            old, new = sample_counts(pop, config.model, n, m, rng)
            hist = PrevalenceHistogram.from_multiplicities(old[old > 0])
            true_u = int(np.count_nonzero((old == 0) & (new > 0)))
            for name in names:
                t0 = time.perf_counter()
                try:
                    est = fns[name](hist, n, t, true_u)
                    err = ((est - true_u) / (n * t)) ** 2
                    failed = False
                except Exception:
                    est, err, failed = math.nan, math.nan, True
                out.append(
                    TrialRecord(
                        trial=trial,
                        t=t,
                        estimator=name,
                        estimate=est,
                        true_unseen=true_u,
                        squared_normalized_error=err,
                        duration_s=time.perf_counter() - t0,
                        failed=failed,
                    )
                )
        return out

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            batches = list(pool.map(run_trial, range(config.trials)))
    else:
        batches = [run_trial(i) for i in range(config.trials)]

    for batch in batches:
        for rec in batch:
            if rec.failed:
                failures += 1
            else:
                errors[(rec.estimator, rec.t)][rec.trial] = rec.squared_normalized_error

    total_cells = config.trials * len(names) * len(t_grid)
    if failures > FAILURE_ABORT_FRACTION * total_cells:
        raise TooManyTrialFailures(
            f"{failures}/{total_cells} estimator evaluations failed"
        )

    rows = []
    for name in names:
        for t in t_grid:
            vals = errors[(name, t)]
            vals = vals[~np.isnan(vals)]
            count = len(vals)
            nmse = float(np.mean(vals)) if count else math.nan
            se = float(np.std(vals, ddof=1) / math.sqrt(count)) if count > 1 else math.nan
            rows.append(
                NmseRow(
                    estimator=name,
                    model=config.model.value,
                    population=config.population,
                    n=n,
                    t=t,
                    trials=count,
                    nmse=nmse,
                    nmse_se=se,
                )
            )
    rows.sort(key=lambda r: (r.estimator, r.t))
    return rows


# ---------------------------------------------------------------------------
# corpus ingestion and subsampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IngestResult:
    """Tokenized corpus: counts plus the original token order."""

    tokens: tuple[str, ...]
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return len(self.tokens)

    @property
    def distinct(self) -> int:
        return len(self.counts)


def ingest_corpus(text: Union[str, bytes], lowercase: bool = True) -> IngestResult:
    """Tokenize a corpus into maximal alphanumeric runs.

    Counts and token order are both retained; order is needed for
    consecutive (prefix) subsampling.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")  # raises on invalid encoding
    if lowercase:
        text = text.lower()
    tokens = tuple(_TOKEN_RE.findall(text))
    counts: dict[str, int] = {}
    for tok in tokens:
        counts[tok] = counts.get(tok, 0) + 1
    return IngestResult(tokens=tokens, counts=counts)


class SubsampleMode:
    WITHOUT_REPLACEMENT = "random"
    CONSECUTIVE = "consecutive"


def subsample(
    source: Union[Mapping[Hashable, int], Sequence[Hashable], IngestResult],
    n: int,
    mode: str = SubsampleMode.WITHOUT_REPLACEMENT,
    seed: int = 0,
) -> tuple[dict[Hashable, int], dict[Hashable, int]]:
    """Split a corpus into an observed part of size n and its remainder.

    ``random`` draws an exact uniform subsample without replacement
    (multivariate hypergeometric on the count vector); ``consecutive`` takes
    the first n tokens and needs an ordered token stream, not just counts.
    Returns (old_counts, remainder_counts); the remainder supports computing
    the true unseen count for validation.
    """
    if isinstance(source, IngestResult):
        tokens: Sequence[Hashable] | None = source.tokens
        counts: Mapping[Hashable, int] = source.counts
    elif isinstance(source, Mapping):
        tokens = None
        counts = source
    else:
        tokens = tuple(source)
        counts = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1

    total = sum(counts.values())
    if n < 0 or n > total:
        raise ValueError(f"subsample size {n} outside [0, {total}]")

    if mode == SubsampleMode.CONSECUTIVE:
        if tokens is None:
            raise ValueError("consecutive subsampling needs an ordered token stream")
        old: dict[Hashable, int] = {}
        for tok in tokens[:n]:
            old[tok] = old.get(tok, 0) + 1
    elif mode == SubsampleMode.WITHOUT_REPLACEMENT:
        symbols = list(counts.keys())
        vec = np.array([counts[s] for s in symbols], dtype=np.int64)
        rng = np.random.default_rng(seed)
        drawn = rng.multivariate_hypergeometric(vec, n)
        old = {s: int(c) for s, c in zip(symbols, drawn) if c > 0}
    else:
        raise ValueError(f"unknown subsample mode {mode!r}")

    remainder = {
        s: counts[s] - old.get(s, 0) for s in counts if counts[s] - old.get(s, 0) > 0
    }
    return old, remainder


# ---------------------------------------------------------------------------
# discovery curves
# ---------------------------------------------------------------------------


def _curve_estimator_fns(estimators: Sequence[str], clamp: bool):
    names = tuple(dict.fromkeys(estimators))
    return names, {name: _resolve_estimator(name, clamp) for name in names}


def discovery_curve(
    source: Union[IngestResult, Mapping[Hashable, int], PrevalenceHistogram],
    n: int,
    t_grid: Sequence[float],
    estimators: Sequence[str],
    trials: int = 100,
    seed: int = 0,
    mode: str = SubsampleMode.WITHOUT_REPLACEMENT,
    clamp: bool = True,
) -> list[CurveRow]:
    """Species discovery curve from observed data.

    For each trial, n of the corpus tokens are held as the observed sample
    and each estimator predicts observed-distinct + unseen at every ratio t.
    The held-out remainder yields the true value wherever t*n does not
    exceed the remainder (rows beyond that horizon carry no true value).

    A bare histogram source supports no subsampling or validation: the
    curve is a single deterministic trajectory.
    """
    if any(t < 0 for t in t_grid):
        raise ValueError("curve ratios must be nonnegative")
    names, fns = _curve_estimator_fns(estimators, clamp)

    if isinstance(source, PrevalenceHistogram):
        rows = []
        obs = source.observed_count()
        for t in sorted(t_grid):
            for name in names:
                pred = obs if t == 0 else obs + fns[name](source, source.sample_size(), t, 0)
                rows.append(CurveRow(name, t, float(pred), 0.0, None))
        rows.sort(key=lambda r: (r.estimator, r.t))
        return rows

    ts = sorted(t_grid)
    preds = {(name, t): np.empty(trials) for name in names for t in ts}
    truths = {t: np.full(trials, np.nan) for t in ts}

    for trial in range(trials):
        sub_seed, draw_seed = trial_seed(seed, trial).spawn(2)
        rng = np.random.default_rng(draw_seed)
        old, remainder = subsample(source, n, mode=mode, seed=sub_seed)
        hist = PrevalenceHistogram.from_multiplicities(old.values())
        obs = len(old)
        rem_symbols = list(remainder.keys())
        rem_vec = np.array([remainder[s] for s in rem_symbols], dtype=np.int64)
        rem_total = int(rem_vec.sum())
        drawn = np.zeros_like(rem_vec)
        drawn_m = 0
        for t in ts:
            m = int(round(t * n))
            if m <= rem_total:
                # extend the held-out draw incrementally to size m
                step = m - drawn_m
                if step > 0:
                    drawn = drawn + rng.multivariate_hypergeometric(rem_vec - drawn, step)
                    drawn_m = m
                new_distinct = sum(
                    1
                    for s, c in zip(rem_symbols, drawn)
                    if c > 0 and old.get(s, 0) == 0
                )
                truths[t][trial] = obs + new_distinct
            for name in names:
                pred = obs if t == 0 else obs + fns[name](hist, n, t, 0)
                preds[(name, t)][trial] = pred

    rows = []
    for name in names:
        for t in ts:
            vals = preds[(name, t)]
            truth_vals = truths[t]
            truth = (
                float(np.mean(truth_vals)) if not np.isnan(truth_vals).any() else None
            )
            stddev = float(np.std(vals, ddof=1)) if trials > 1 else 0.0
            rows.append(CurveRow(name, t, float(np.mean(vals)), stddev, truth))
    rows.sort(key=lambda r: (r.estimator, r.t))
    return rows


def discovery_curve_synthetic(
    population: str,
    model: Model,
    n: int,
    t_grid: Sequence[float],
    estimators: Sequence[str],
    trials: int = 100,
    seed: int = 0,
    clamp: bool = True,
) -> list[CurveRow]:
    """Discovery curve on a synthetic population with known ground truth.

    Each trial draws the observed block once and extends the future block
    incrementally across the ascending t grid, so truths at successive
    ratios are nested exactly as they would be in one long run.
    """
    pop = parse_population(population)
    if not isinstance(pop, Probabilistic) or model not in (
        Model.MULTINOMIAL,
        Model.POISSON,
    ):
        raise ValueError("synthetic curves support multinomial/poisson models")
    names, fns = _curve_estimator_fns(estimators, clamp)
    ts = sorted(t_grid)
    preds = {(name, t): np.empty(trials) for name in names for t in ts}
    truths = {t: np.empty(trials) for t in ts}

    for trial in range(trials):
        rng = np.random.default_rng(trial_seed(seed, trial))
        old, _ = sample_counts(pop, model, n, 0, rng)
        hist = PrevalenceHistogram.from_multiplicities(old[old > 0])
        obs = int(np.count_nonzero(old))
        new_total = np.zeros_like(old)
        drawn_m = 0
        for t in ts:
            m = int(round(t * n))
            step = m - drawn_m
            if step > 0:
                if model is Model.MULTINOMIAL:
                    new_total = new_total + rng.multinomial(step, pop.probs)
                else:
                    new_total = new_total + rng.poisson(step * pop.probs)
                drawn_m = m
            truths[t][trial] = obs + int(np.count_nonzero((old == 0) & (new_total > 0)))
            for name in names:
                pred = obs if t == 0 else obs + fns[name](hist, n, t, 0)
                preds[(name, t)][trial] = pred

    rows = []
    for name in names:
        for t in ts:
            vals = preds[(name, t)]
            stddev = float(np.std(vals, ddof=1)) if trials > 1 else 0.0
            rows.append(
                CurveRow(name, t, float(np.mean(vals)), stddev, float(np.mean(truths[t])))
            )
    rows.sort(key=lambda r: (r.estimator, r.t))
    return rows


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _format_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def emit_csv(
    rows: Sequence[Union[NmseRow, CurveRow]],
    dest: Union[str, Path, TextIO],
) -> None:
    """Write rows in their stable column order, floats at 17 significant
    digits (lossless round-trip), LF endings."""
    if not rows:
        raise ValueError("refusing to emit an empty table")
    columns = NMSE_COLUMNS if isinstance(rows[0], NmseRow) else CURVE_COLUMNS
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_value(v) for v in row.as_tuple()))
    data = "\n".join(lines) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(data, encoding="utf-8", newline="")
    else:
        dest.write(data)


def emit_json(
    rows: Sequence[Union[NmseRow, CurveRow]],
    config: Mapping,
    dest: Union[str, Path, TextIO],
) -> None:
    """JSON emission: {"config": ..., "rows": [...]} with one object per row."""
    if not rows:
        raise ValueError("refusing to emit an empty table")
    columns = NMSE_COLUMNS if isinstance(rows[0], NmseRow) else CURVE_COLUMNS
    payload = {
        "config": dict(config),
        "rows": [
            {
                col: (None if val == "" else val)
                for col, val in zip(columns, row.as_tuple())
            }
            for row in rows
        ],
    }
    data = json.dumps(payload, indent=2, sort_keys=False) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(data, encoding="utf-8", newline="")
    else:
        dest.write(data)


def read_csv_rows(src: Union[str, Path, TextIO]) -> list[dict[str, str]]:
    """Parse an emitted CSV back into dict rows (strings preserved)."""
    import csv as _csv
    import io as _io

    if isinstance(src, (str, Path)):
        text = Path(src).read_text(encoding="utf-8")
    else:
        text = src.read()
    return list(_csv.DictReader(_io.StringIO(text)))
