"""Prevalence histograms: the frequency-of-frequencies view of a sample.

Every estimator in this package consumes a sample only through its
prevalence histogram: ``counts[i]`` is the number of distinct symbols that
were observed exactly ``i`` times.  Storage is sparse and keyed by
multiplicity, since real data (censuses, corpora) can have large
multiplicities with gaps.  The zero column -- species never observed -- is
unknowable from the sample and is never stored.

Symbols are opaque hashables; no normalization or tokenization happens here.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from collections.abc import Hashable, Iterable, Mapping
from pathlib import Path
from typing import TextIO, Union

__all__ = [
    "PrevalenceHistogram",
    "build_histogram",
    "read_histogram_csv",
    "write_histogram_csv",
]

PathLike = Union[str, Path]


class PrevalenceHistogram:
    """Sparse map multiplicity -> number of species seen that many times.

    Immutable after construction; safe to share across threads.
    """

    __slots__ = ("_counts",)

    def __init__(self, counts: Mapping[int, int]):
        cleaned: dict[int, int] = {}
        for i in sorted(counts):
            c = counts[i]
            if c == 0:
                continue
            if i < 1 or int(i) != i:
                raise ValueError(f"multiplicity keys must be integers >= 1, got {i!r}")
            if c < 0 or int(c) != c:
                raise ValueError(f"species counts must be nonnegative integers, got {c!r}")
            cleaned[int(i)] = int(c)
        self._counts = cleaned

    @property
    def counts(self) -> dict[int, int]:
        """Nonzero entries, ascending by multiplicity. Do not mutate."""
        return self._counts

    @property
    def max_index(self) -> int:
        """Largest multiplicity with a nonzero species count (0 if empty)."""
        return max(self._counts) if self._counts else 0

    def get(self, i: int) -> int:
        return self._counts.get(i, 0)

    def observed_count(self) -> int:
        """Number of distinct symbols observed: sum over i of counts[i]."""
        return sum(self._counts.values())

    def sample_size(self) -> int:
        """Total number of observations: sum over i of i * counts[i]."""
        return sum(i * c for i, c in self._counts.items())

    def items(self):
        return self._counts.items()

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PrevalenceHistogram):
            return NotImplemented
        return self._counts == other._counts

    def __add__(self, other: "PrevalenceHistogram") -> "PrevalenceHistogram":
        merged = Counter(self._counts)
        merged.update(other._counts)
        return PrevalenceHistogram(merged)

    def __repr__(self) -> str:
        return f"PrevalenceHistogram({self._counts!r})"

    @classmethod
    def from_symbol_counts(cls, symbol_counts: Mapping[Hashable, int]) -> "PrevalenceHistogram":
        """Collapse a symbol -> multiplicity table to its histogram."""
        return cls(Counter(c for c in symbol_counts.values() if c > 0))

    @classmethod
    def from_multiplicities(cls, multiplicities: Iterable[int]) -> "PrevalenceHistogram":
        """Build from a flat list of per-symbol multiplicities (zeros ignored)."""
        return cls(Counter(int(m) for m in multiplicities if m > 0))


def build_histogram(samples: Iterable[Hashable]) -> PrevalenceHistogram:
    """Count how many distinct symbols occur exactly i times in ``samples``.

    The empty sequence yields an empty histogram.  The result depends only
    on the multiset of symbols, not on their order.
    """
    return PrevalenceHistogram.from_symbol_counts(Counter(samples))


def write_histogram_csv(hist: PrevalenceHistogram, dest: Union[PathLike, TextIO]) -> None:
    """Write ``frequency,count`` rows, ascending frequency, LF endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frequency", "count"])
    for i, c in hist.items():
        writer.writerow([i, c])
    data = buf.getvalue()
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(data, encoding="utf-8", newline="")
    else:
        dest.write(data)


def read_histogram_csv(src: Union[PathLike, TextIO]) -> PrevalenceHistogram:
    """Parse the ``frequency,count`` format written by write_histogram_csv."""
    if isinstance(src, (str, Path)):
        text = Path(src).read_text(encoding="utf-8")
    else:
        text = src.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["frequency", "count"]:
        raise ValueError("histogram CSV must start with a 'frequency,count' header")
    counts: dict[int, int] = {}
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise ValueError(f"malformed histogram row: {row!r}")
        i, c = int(row[0]), int(row[1])
        if i in counts:
            raise ValueError(f"duplicate frequency {i} in histogram CSV")
        counts[i] = c
    return PrevalenceHistogram(counts)
