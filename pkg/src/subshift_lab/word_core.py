"""Words, infinite word sources, occurrences, frequencies and periods.

Conventions used across the package:

* A word is a ``bytes`` object; each byte is one symbol.  Symbols are small
  non-negative integers (Sturmian words use 0/1, tower words use 1..d,
  interval exchange codings use 1..k).  ``bytes`` keeps words immutable,
  hashable and cheap to slice, and gives the one-byte-per-symbol stream
  format for free.
* Positions are 0-based everywhere.
* Windows are addressed as ``(length, start)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

Word = bytes


def as_word(symbols: Word | str | Iterable[int]) -> Word:
    """Coerce ``symbols`` to a word.

    Strings are taken literally (one character per symbol, by code point), so
    ``as_word("abab")`` and ``as_word("0101")`` are both valid words; use an
    iterable of ints for numeric symbols.
    """
    if isinstance(symbols, bytes):
        return symbols
    if isinstance(symbols, (bytearray, memoryview)):
        return bytes(symbols)
    if isinstance(symbols, str):
        return symbols.encode("latin-1")
    if isinstance(symbols, np.ndarray):
        return symbols.astype(np.uint8).tobytes()
    return bytes(symbols)


def render(w: Word) -> str:
    """Human readable form: digits when every symbol is < 10."""
    if all(c < 10 for c in w):
        return "".join(map(str, w))
    if all(32 < c < 127 for c in w):
        return w.decode("ascii")
    return ",".join(map(str, w))


def relabel(w: Word, mapping: dict[int, int]) -> Word:
    table = bytes(mapping.get(c, c) for c in range(256))
    return w.translate(table)


@dataclass(frozen=True)
class Alphabet:
    """Symbols ``first .. first + size - 1``."""

    size: int
    first: int = 1

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("alphabet size must be >= 1")
        if self.first < 0 or self.first + self.size > 256:
            raise ValueError("alphabet must fit in one byte per symbol")

    @property
    def symbols(self) -> range:
        return range(self.first, self.first + self.size)

    def contains(self, w: Word) -> bool:
        lo, hi = self.first, self.first + self.size
        return all(lo <= c < hi for c in set(w))

    def check(self, w: Word) -> Word:
        if not self.contains(w):
            raise ValueError(f"word uses symbols outside {self}")
        return w


@dataclass(frozen=True)
class CylinderPattern:
    word: Word

    def __post_init__(self):
        if len(self.word) == 0:
            raise ValueError("a cylinder needs a nonempty word")


# --------------------------------------------------------------------------
# infinite word sources


class InfiniteWordSource:
    """Deterministic one-sided infinite word, accessed through prefixes.

    Subclasses implement :meth:`_generate`.  Generated prefixes are cached
    and grown geometrically, so repeated calls with increasing ``L`` are
    cheap and ``prefix(L1)`` is always a prefix of ``prefix(L2)``.
    """

    name = "source"

    def __init__(self):
        self._cache = b""

    def _generate(self, L: int) -> Word:
        raise NotImplementedError

    def prefix(self, L: int) -> Word:
        if L < 0:
            raise ValueError("prefix length must be >= 0")
        if L > len(self._cache):
            target = max(L, min(2 * len(self._cache), L + (1 << 20)))
            self._cache = self._generate(target)
            if len(self._cache) < L:
                raise RuntimeError(f"{self.name}: generator returned a short prefix")
        return self._cache[:L]

    def __getitem__(self, i: int) -> int:
        return self.prefix(i + 1)[i]


class PeriodicSource(InfiniteWordSource):
    def __init__(self, period: Word | str | Sequence[int], preperiod: Word | str | Sequence[int] = b""):
        super().__init__()
        self.period = as_word(period)
        self.preperiod = as_word(preperiod)
        if not self.period:
            raise ValueError("period word must be nonempty")
        self.name = f"periodic({render(self.preperiod)}|{render(self.period)})"

    def _generate(self, L: int) -> Word:
        body = max(0, L - len(self.preperiod))
        reps = -(-body // len(self.period))
        return (self.preperiod + self.period * reps)[:max(L, len(self.preperiod))]


class FunctionSource(InfiniteWordSource):
    """Wraps ``fn(L) -> Word``; ``fn`` must be extension consistent."""

    def __init__(self, fn: Callable[[int], Word], name: str = "function"):
        super().__init__()
        self._fn = fn
        self.name = name

    def _generate(self, L: int) -> Word:
        return as_word(self._fn(L))


class FixedWordSource(InfiniteWordSource):
    """A finite word viewed as a source; asking past its end is an error."""

    def __init__(self, w: Word | str | Sequence[int], name: str = "fixed"):
        super().__init__()
        self._cache = as_word(w)
        self.name = name

    def _generate(self, L: int) -> Word:
        raise ValueError(f"{self.name}: only {len(self._cache)} symbols available, asked for {L}")


class SubstitutionSource(InfiniteWordSource):
    """Fixed point of a prolongable substitution, e.g. Fibonacci ``{0: 01, 1: 0}``."""

    def __init__(self, rules: dict[int, Word | str | Sequence[int]], seed: int):
        super().__init__()
        self.rules = {a: as_word(v) for a, v in rules.items()}
        image = self.rules[seed]
        if len(image) < 2 or image[0] != seed:
            raise ValueError("substitution must be prolongable on the seed letter")
        self.seed = seed
        self.name = "substitution"

    def _generate(self, L: int) -> Word:
        w = bytes([self.seed])
        table = self.rules
        while len(w) < L:
            w = b"".join(table[c] for c in w)
        return w


def fibonacci_source() -> SubstitutionSource:
    return SubstitutionSource({0: bytes([0, 1]), 1: bytes([0])}, seed=0)


# --------------------------------------------------------------------------
# operations


def window(x: InfiniteWordSource | Word, N: int, m: int) -> Word:
    """Symbols ``x(m) .. x(m + N - 1)``."""
    if N < 0 or m < 0:
        raise ValueError("window needs N >= 0 and m >= 0")
    if isinstance(x, (bytes, bytearray)):
        if m + N > len(x):
            raise ValueError("window runs past the end of a finite word")
        return bytes(x[m:m + N])
    if N == 0:
        return b""
    return x.prefix(m + N)[m:]


def _match_mask(u: Word, w: Word) -> np.ndarray:
    a = np.frombuffer(u, dtype=np.uint8)
    n = len(a) - len(w) + 1
    mask = a[:n] == w[0]
    for t in range(1, len(w)):
        mask &= a[t:t + n] == w[t]
    return mask


def occurrences(u: Word, w: Word) -> list[int]:
    """Sorted start positions of (possibly overlapping) occurrences of ``w`` in ``u``."""
    if len(w) == 0:
        raise ValueError("occurrences of the empty word are undefined")
    if len(w) > len(u):
        return []
    if len(u) > 4096 and len(w) <= 64:
        return np.flatnonzero(_match_mask(u, w)).tolist()
    out = []
    i = u.find(w)
    while i != -1:
        out.append(i)
        i = u.find(w, i + 1)
    return out


def count_occurrences(u: Word, w: Word) -> int:
    if len(w) == 0:
        raise ValueError("occurrences of the empty word are undefined")
    if len(w) > len(u):
        return 0
    if len(u) > 4096 and len(w) <= 64:
        return int(_match_mask(u, w).sum())
    return len(occurrences(u, w))


def frequency(u: Word, w: Word) -> Fraction:
    """Exact ``|occurrences(u, w)| / (|u| - |w| + 1)``."""
    if len(w) == 0:
        raise ValueError("frequency of the empty word is undefined")
    if len(u) < len(w):
        raise ValueError("frequency needs |u| >= |w|")
    return Fraction(count_occurrences(u, w), len(u) - len(w) + 1)


def has_period(w: Word, p: int) -> bool:
    """True iff ``w[i] == w[i + p]`` wherever both are defined.

    Words shorter than ``p`` are vacuously ``p``-periodic.
    """
    if p < 1:
        raise ValueError("period must be >= 1")
    return w[p:] == w[:len(w) - p] if p < len(w) else True


def _border_table(w: Word) -> list[int]:
    f = [0] * len(w)
    k = 0
    for i in range(1, len(w)):
        while k and w[i] != w[k]:
            k = f[k - 1]
        if w[i] == w[k]:
            k += 1
        f[i] = k
    return f


def minimal_period(w: Word) -> int:
    """Smallest ``p >= 1`` such that ``w`` has period ``p`` (``len(w)`` if none smaller)."""
    if len(w) == 0:
        raise ValueError("minimal period of the empty word is undefined")
    return len(w) - _border_table(w)[-1]


def fine_wilf_bound(p: int, q: int) -> int:
    if p < 1 or q < 1:
        raise ValueError("periods must be >= 1")
    return p + q - math.gcd(p, q)


def longest_periodic_extension(x: InfiniteWordSource | Word, start: int, p: int, cap: int) -> int:
    """Largest ``N' <= cap`` with ``window(x, N', start)`` of period ``p``.

    A return value equal to ``cap`` means the period was never broken inside
    the cap; the caller cannot tell that apart from eventual periodicity.
    """
    if p < 1:
        raise ValueError("period must be >= 1")
    if cap <= p:
        return cap
    seg = window(x, cap, start)
    a = np.frombuffer(seg, dtype=np.uint8)
    bad = np.flatnonzero(a[p:] != a[:-p])
    if len(bad) == 0:
        return cap
    return int(bad[0]) + p


def syndetic_gap(u: Word, w: Word) -> int | None:
    """Smallest ``g`` such that every length-``g`` subword of ``u`` contains ``w``.

    Returns ``None`` when ``w`` does not occur in ``u``.
    """
    if len(w) == 0 or len(u) < len(w):
        raise ValueError("syndetic_gap needs |u| >= |w| >= 1")
    m = len(w)
    if len(u) > 4096 and m <= 64:
        pos = np.flatnonzero(_match_mask(u, w))
    else:
        pos = np.asarray(occurrences(u, w), dtype=np.int64)
    if len(pos) == 0:
        return None
    g = max(int(pos[0]) + m, len(u) - int(pos[-1]))
    if len(pos) > 1:
        g = max(g, int(np.max(np.diff(pos))) - 1 + m)
    return g if g <= len(u) else None
