"""Exact factor counting P(n) over finite prefixes and language samples."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._sam import build_automaton, counts_per_length
from .word_core import InfiniteWordSource, Word, as_word


class ComplexityError(ValueError):
    pass


class FactorIndex:
    """Suffix automaton over one or more words, with per-length factor counts.

    With several words the index recognises the union of their factor sets,
    which is how languages given by a finite sample are counted.
    """

    def __init__(self, words: Sequence[Word]):
        words = [as_word(w) for w in words]
        if not words or any(len(w) == 0 for w in words):
            raise ComplexityError("cannot index an empty word")
        joined = b"".join(words)
        raw = np.frombuffer(joined, dtype=np.uint8)
        present = np.flatnonzero(np.bincount(raw, minlength=256))
        remap = np.zeros(256, dtype=np.int64)
        remap[present] = np.arange(len(present))
        sym = remap[raw]
        ends = np.cumsum([len(w) for w in words]).astype(np.int64)
        starts = np.concatenate(([0], ends[:-1])).astype(np.int64)
        length, link, nxt = build_automaton(sym, starts, ends, len(present))
        self.alphabet = tuple(int(c) for c in present)
        self.word_lengths = tuple(len(w) for w in words)
        self.max_len = max(self.word_lengths)
        self.n_states = len(length)
        self._counts = counts_per_length(length, link, self.max_len)
        self._counts.setflags(write=False)
        self._code = {c: i for i, c in enumerate(self.alphabet)}
        self._nxt = nxt

    @property
    def length(self) -> int:
        """Length of the indexed prefix (longest word for merged indexes)."""
        return self.max_len

    def factor_count(self, n: int) -> int:
        if not 1 <= n <= self.max_len:
            raise ComplexityError(f"factor length {n} outside [1, {self.max_len}]")
        return int(self._counts[n])

    def counts(self, n_max: int) -> np.ndarray:
        if not 1 <= n_max <= self.max_len:
            raise ComplexityError(f"n_max {n_max} outside [1, {self.max_len}]")
        return self._counts[:n_max + 1]

    def contains(self, w: Word) -> bool:
        state = 0
        for c in as_word(w):
            code = self._code.get(c)
            if code is None:
                return False
            state = self._nxt[state, code]
            if state == -1:
                return False
        return True


def build_index(prefix: Word) -> FactorIndex:
    if len(prefix) == 0:
        raise ComplexityError("cannot index an empty prefix")
    return FactorIndex([prefix])


def build_merged_index(words: Iterable[Word]) -> FactorIndex:
    return FactorIndex(list(words))


def factor_count(index: FactorIndex, n: int) -> int:
    return index.factor_count(n)


@dataclass(frozen=True)
class ComplexityProfile:
    """``counts[n]`` is P(n) for ``1 <= n <= n_max`` (``counts[0]`` is 1)."""

    n_max: int
    counts: np.ndarray
    source_length: int

    def __getitem__(self, n: int) -> int:
        if not 1 <= n <= self.n_max:
            raise IndexError(n)
        return int(self.counts[n])

    def ratio(self, n: int) -> Fraction:
        return Fraction(self[n], n)

    def values(self) -> list[int]:
        return [int(v) for v in self.counts[1:]]


def profile(index: FactorIndex, n_max: int, guard: bool = True) -> ComplexityProfile:
    """Counts P(1..n_max).  With ``guard`` the request must stay below half the prefix."""
    if guard and 2 * n_max > index.length:
        raise ComplexityError(
            f"n_max={n_max} exceeds half the prefix length {index.length}; "
            "finite prefixes undercount there (pass guard=False to override)")
    return ComplexityProfile(n_max, index.counts(n_max).copy(), index.length)


@dataclass(frozen=True)
class RatioExtrema:
    min_ratio: Fraction
    argmin: int
    max_ratio: Fraction
    argmax: int


def ratio_extrema(prof: ComplexityProfile, n_min: int = 1, n_max: int | None = None) -> RatioExtrema:
    """Exact extrema of P(n)/n over ``[n_min, n_max]`` (smallest n on ties)."""
    n_max = prof.n_max if n_max is None else n_max
    if not 1 <= n_min <= n_max <= prof.n_max:
        raise ComplexityError(f"empty or invalid range [{n_min}, {n_max}]")
    counts = prof.counts
    lo = hi = Fraction(int(counts[n_min]), n_min)
    arg_lo = arg_hi = n_min
    for n in range(n_min + 1, n_max + 1):
        r = Fraction(int(counts[n]), n)
        if r < lo:
            lo, arg_lo = r, n
        elif r > hi:
            hi, arg_hi = r, n
    return RatioExtrema(lo, arg_lo, hi, arg_hi)


def stability_check(source: InfiniteWordSource, n: int, L1: int, L2: int) -> bool:
    """True iff the prefixes of lengths L1 and L2 have the same number of length-n factors."""
    if not (n <= L1 < L2):
        raise ComplexityError("stability_check needs n <= L1 < L2")
    a = build_index(source.prefix(L1)).factor_count(n)
    b = build_index(source.prefix(L2)).factor_count(n)
    return a == b


def stable_profile(source: InfiniteWordSource, n_max: int, factor: int = 50) -> ComplexityProfile:
    """Profile of ``source`` up to ``n_max`` from a prefix of ``factor * n_max`` symbols.

    Every count must agree between the half-length and full-length prefix;
    otherwise the prefix is too short to speak for the language and an error
    is raised instead of reporting a number.
    """
    L = factor * n_max
    full = build_index(source.prefix(L))
    half = build_index(source.prefix(L // 2))
    a = full.counts(n_max)
    b = half.counts(n_max)
    if not np.array_equal(a, b):
        bad = int(np.flatnonzero(a != b)[0])
        raise ComplexityError(
            f"profile not stable at n={bad}: {int(b[bad])} factors in {L // 2} symbols, "
            f"{int(a[bad])} in {L}")
    return ComplexityProfile(n_max, a.copy(), L)


def format_ratio(r: Fraction) -> str:
    return f"{float(r):.12g}" if r.denominator != 1 else str(r.numerator)


def profile_csv(prof: ComplexityProfile, n_min: int = 1) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["n", "P(n)", "ratio"])
    for n in range(n_min, prof.n_max + 1):
        wr.writerow([n, int(prof.counts[n]), format_ratio(Fraction(int(prof.counts[n]), n))])
    return buf.getvalue()
