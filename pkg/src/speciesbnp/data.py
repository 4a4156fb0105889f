"""Observed samples reduced to their sufficient statistics."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError

__all__ = [
    "SampleSummary",
    "ParseError",
    "from_labels",
    "from_counts",
    "from_fingerprint",
    "read_labels",
    "read_counts",
    "read_fingerprint",
    "read_sample",
]


@dataclass(frozen=True)
class SampleSummary:
    """Sufficient statistics of an observed sample.

    Attributes
    ----------
    n : int
        Number of observations.
    k : int
        Number of distinct species.
    frequencies : tuple of int
        Species frequencies, sorted in decreasing order.
    fingerprint : dict
        ``r -> m_r``, the number of species seen exactly ``r`` times,
        with keys in increasing order and no zero entries.
    """

    n: int
    k: int
    frequencies: tuple
    fingerprint: Mapping[int, int] = field(repr=False)

    @classmethod
    def from_frequencies(cls, freqs: Iterable[int]) -> "SampleSummary":
        f = tuple(sorted((int(x) for x in freqs), reverse=True))
        if not f:
            raise ValueError("a sample needs at least one observation")
        if f[-1] < 1:
            raise ValueError("species frequencies must be positive")
        fp = dict(sorted(Counter(f).items()))
        return cls(n=sum(f), k=len(f), frequencies=f, fingerprint=fp)

    def m(self, r: int) -> int:
        """``m_r``; zero for frequencies that do not occur."""
        return int(self.fingerprint.get(int(r), 0))

    def fingerprint_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct frequencies and their multiplicities as int64 arrays."""
        r = np.fromiter(self.fingerprint.keys(), dtype=np.int64)
        m = np.fromiter(self.fingerprint.values(), dtype=np.int64)
        return r, m

    def digest(self) -> str:
        """SHA-256 of the canonical fingerprint, for report provenance."""
        canon = json.dumps([[int(r), int(m)] for r, m in self.fingerprint.items()])
        return hashlib.sha256(canon.encode()).hexdigest()


def from_labels(tokens: Sequence[str]) -> SampleSummary:
    """Summary of a sequence of species labels."""
    counts = Counter(tokens)
    if not counts:
        raise ValueError("empty sample: no labels given")
    return SampleSummary.from_frequencies(counts.values())


def from_counts(counts: Mapping[str, int] | Iterable[tuple[str, int]]) -> SampleSummary:
    """Summary of a label -> count table (zero counts are dropped)."""
    items = counts.items() if isinstance(counts, Mapping) else counts
    seen: dict[str, int] = {}
    for label, c in items:
        c = int(c)
        if c < 0:
            raise ValueError(f"negative count for {label!r}")
        if label in seen:
            raise ValueError(f"duplicate label {label!r}")
        seen[label] = c
    freqs = [c for c in seen.values() if c > 0]
    if not freqs:
        raise ValueError("empty sample: all counts are zero")
    return SampleSummary.from_frequencies(freqs)


def from_fingerprint(pairs: Mapping[int, int] | Iterable[tuple[int, int]]) -> SampleSummary:
    """Summary from ``(r, m_r)`` pairs.

    Frequencies are reconstructed as ``m_r`` copies of ``r``.  For very large
    samples prefer passing the fingerprint; ``n`` is computed exactly with
    Python integers.
    """
    items = pairs.items() if isinstance(pairs, Mapping) else pairs
    fp: dict[int, int] = {}
    for r, m in items:
        r, m = int(r), int(m)
        if r < 1 or m < 0:
            raise ValueError(f"invalid fingerprint entry ({r}, {m})")
        if r in fp:
            raise ValueError(f"duplicate frequency r={r}")
        fp[r] = m
    fp = {r: m for r, m in sorted(fp.items()) if m > 0}
    if not fp:
        raise ValueError("fingerprint has no species (all m_r are zero)")
    n = sum(r * m for r, m in fp.items())
    k = sum(fp.values())
    freqs = tuple(r for r, m in sorted(fp.items(), reverse=True) for _ in range(m))
    return SampleSummary(n=n, k=k, frequencies=freqs, fingerprint=fp)


def _lines(text: str):
    for i, line in enumerate(text.splitlines(), start=1):
        yield i, line.strip()


def read_labels(text: str) -> SampleSummary:
    """One label per line; blank lines are skipped."""
    tokens = [line for _, line in _lines(text) if line]
    if not tokens:
        raise ParseError("no labels found", line=1)
    return from_labels(tokens)


def _csv_rows(text: str):
    rows = []
    reader = csv.reader(io.StringIO(text))
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        rows.append((lineno, [c.strip() for c in row]))
    return rows


def _int_field(value: str, line: int, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {value!r}", line) from None


def read_counts(text: str) -> SampleSummary:
    """CSV ``label,count``; a non-numeric count on the first row is a header."""
    rows = _csv_rows(text)
    pairs = []
    seen = set()
    for idx, (line, row) in enumerate(rows):
        if len(row) != 2:
            raise ParseError(f"expected 'label,count', got {len(row)} fields", line)
        if idx == 0 and not row[1].lstrip("+-").isdigit():
            continue
        c = _int_field(row[1], line, "count")
        if c < 0:
            raise ParseError(f"negative count {c}", line)
        if row[0] in seen:
            raise ParseError(f"duplicate label {row[0]!r}", line)
        seen.add(row[0])
        pairs.append((row[0], c))
    if not any(c > 0 for _, c in pairs):
        raise ParseError("no positive counts found", rows[-1][0] if rows else 1)
    return from_counts(pairs)


def read_fingerprint(text: str) -> SampleSummary:
    """CSV ``r,m_r``; the header row is optional."""
    rows = _csv_rows(text)
    fp: dict[int, int] = {}
    for idx, (line, row) in enumerate(rows):
        if len(row) != 2:
            raise ParseError(f"expected 'r,m_r', got {len(row)} fields", line)
        if idx == 0 and not row[0].lstrip("+-").isdigit():
            continue
        r = _int_field(row[0], line, "r")
        m = _int_field(row[1], line, "m_r")
        if r < 1:
            raise ParseError(f"frequency r must be >= 1, got {r}", line)
        if m < 0:
            raise ParseError(f"m_r must be >= 0, got {m}", line)
        if r in fp:
            raise ParseError(f"duplicate frequency r={r}", line)
        fp[r] = m
    if not any(fp.values()):
        raise ParseError("fingerprint has no species", rows[-1][0] if rows else 1)
    return from_fingerprint(fp)


_READERS = {"labels": read_labels, "counts": read_counts, "fingerprint": read_fingerprint}


def read_sample(text: str, fmt: str) -> SampleSummary:
    """Parse ``text`` in one of the formats ``labels``, ``counts``, ``fingerprint``."""
    try:
        reader = _READERS[fmt]
    except KeyError:
        raise ValueError(f"unknown format {fmt!r}; choose from {sorted(_READERS)}") from None
    return reader(text)
