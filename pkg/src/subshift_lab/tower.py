"""The hierarchy of words w_i^j whose subshift has d ergodic measures and
complexity close to d n.

Notation.  Letters are ``1..d``.  ``w_t^J`` is a concatenation of ``d``
blocks; block ``k`` is a run of ``N^{[J]}_{(t,k)}`` letters made of copies of
``w_k^J`` when ``k < t`` and of ``w_k^{J-1}`` when ``k >= t`` (level 0 words
are single letters).  The only exception is ``w_1^1 = 1^N 2 3 ... d``.

Run lengths are letter counts, always a multiple of the repeated word's
length.  They are chosen greedily: walking the chain
``k = t-1, ..., 1, d, ..., t`` with exponents ``2, 4, ..., 2d``, each run is
the least admissible multiple with ``delta^e * N`` strictly above the
previous chain value (the chain starts at the length of the previously
built word).  The last run of the chain is the diagonal one and is enlarged
until it exceeds ``kappa_J`` times the word length.  Admissible multiples
are multiples of ``lcm(|unit|, N^{[J-1]}_{(t,k)})`` so that run lengths at
consecutive levels divide each other.

Words are block descriptors and are never flattened unless asked for.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import BinaryIO, Iterator, Sequence

import numpy as np

from .complexity import ComplexityProfile, build_merged_index
from .word_core import FunctionSource, Word, syndetic_gap

DEFAULT_BUDGET = 10**8
FLAT_CACHE_LIMIT = 1 << 22


class TowerError(ValueError):
    pass


def default_kappa(j: int, den: int = 10**9) -> Fraction:
    """Smallest ``p / den`` that is at least ``2^(-1/2^(j+1))``.

    Rounding up keeps the diagonal inequality at least as strong as with the
    irrational value; the product of the rounded values still exceeds 1/2.
    """
    e = 1 << (j + 1)
    p = int(2.0 ** (-1.0 / e) * den) - 2
    while Fraction(p, den) ** e < Fraction(1, 2):
        p += 1
    return Fraction(p, den)


def default_delta(j: int) -> Fraction:
    return Fraction(1, 2**j)


@dataclass(frozen=True)
class ConstructionParams:
    d: int
    J: int
    kappa: tuple[Fraction, ...]
    delta: tuple[Fraction, ...]

    def __post_init__(self):
        kappa = tuple(Fraction(k) for k in self.kappa)
        delta = tuple(Fraction(v) for v in self.delta)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "delta", delta)
        if self.d < 2:
            raise TowerError("d must be > 1")
        if self.J < 1:
            raise TowerError("J must be >= 1")
        if len(kappa) != self.J or len(delta) != self.J:
            raise TowerError(f"need {self.J} kappa and delta values")
        if any(not 0 < k for k in kappa):
            raise TowerError("kappa values must be positive")
        if any(not 0 < v < 1 for v in delta):
            raise TowerError("delta values must lie in (0, 1)")
        if any(a <= b for a, b in zip(delta, delta[1:])):
            raise TowerError("delta schedule must be strictly decreasing")
        if math.prod(kappa) <= Fraction(1, 2):
            raise TowerError("product of kappa values must exceed 1/2")

    @classmethod
    def default(cls, d: int, J: int) -> "ConstructionParams":
        return cls(d, J, tuple(default_kappa(j) for j in range(1, J + 1)),
                   tuple(default_delta(j) for j in range(1, J + 1)))

    def extended(self, J: int) -> "ConstructionParams":
        """Same schedule, continued with the default values up to level J."""
        if J <= self.J:
            return ConstructionParams(self.d, J, self.kappa[:J], self.delta[:J])
        extra = range(self.J + 1, J + 1)
        return ConstructionParams(self.d, J, self.kappa + tuple(default_kappa(j) for j in extra),
                                  self.delta + tuple(min(default_delta(j), self.delta[-1] / 2) for j in extra))


@dataclass(frozen=True)
class Block:
    k: int
    unit: tuple[int, int]  # (i, j); j == 0 means the single letter i
    unit_len: int
    run: int

    @property
    def copies(self) -> int:
        return self.run // self.unit_len


@dataclass(frozen=True)
class TowerWord:
    i: int
    j: int
    blocks: tuple[Block, ...]
    starts: tuple[int, ...]
    length: int

    @property
    def name(self) -> str:
        return f"w_{self.i}^{self.j}"


def _word(i: int, j: int, blocks: list[Block]) -> TowerWord:
    starts, acc = [], 0
    for b in blocks:
        starts.append(acc)
        acc += b.run
    return TowerWord(i, j, tuple(blocks), tuple(starts), acc)


def chain_order(t: int, d: int) -> list[int]:
    return list(range(t - 1, 0, -1)) + list(range(d, t - 1, -1))


class WordTower:
    """All words ``w_i^j`` for ``1 <= i <= d``, ``1 <= j <= J`` as block descriptors."""

    def __init__(self, params: ConstructionParams, words: dict[tuple[int, int], TowerWord]):
        self.params = params
        self.d = params.d
        self.J = params.J
        self.words = words
        self._flat: dict[tuple[int, int], bytes] = {}

    def word(self, i: int, j: int) -> TowerWord:
        try:
            return self.words[(i, j)]
        except KeyError:
            raise TowerError(f"w_{i}^{j} not built (d={self.d}, J={self.J})") from None

    def length(self, i: int, j: int) -> int:
        return 1 if j == 0 else self.word(i, j).length

    def N(self, j: int, t: int, k: int) -> int:
        """Run length ``N^{[j]}_{(t,k)}`` in letters."""
        return self.word(t, j).blocks[k - 1].run

    # -- lazy extraction -------------------------------------------------
    def slice(self, i: int, j: int, a: int, b: int) -> bytes:
        """Letters ``a:b`` of ``w_i^j``."""
        n = self.length(i, j)
        if not 0 <= a <= b <= n:
            raise TowerError(f"slice [{a}, {b}) outside w_{i}^{j} of length {n}")
        out: list[bytes] = []
        self._emit(i, j, a, b, out)
        return b"".join(out)

    def _emit(self, i: int, j: int, a: int, b: int, out: list[bytes]) -> None:
        if a >= b:
            return
        if j == 0:
            out.append(bytes([i]) * (b - a))
            return
        flat = self._flat.get((i, j))
        if flat is not None:
            out.append(flat[a:b])
            return
        w = self.words[(i, j)]
        idx = bisect_right(w.starts, a) - 1
        while a < b:
            blk, s = w.blocks[idx], w.starts[idx]
            hi = min(b, s + blk.run)
            self._emit_run(blk, a - s, hi - s, out)
            a = hi
            idx += 1

    def _emit_run(self, blk: Block, lo: int, hi: int, out: list[bytes]) -> None:
        ui, uj = blk.unit
        ul = blk.unit_len
        if uj == 0:
            out.append(bytes([ui]) * (hi - lo))
            return
        head_end = min(hi, (lo // ul + 1) * ul)
        self._emit(ui, uj, lo % ul, lo % ul + head_end - lo, out)
        lo = head_end
        full = (hi - lo) // ul
        if full:
            if ul <= FLAT_CACHE_LIMIT:
                out.append(self.flatten(ui, uj) * full)
            else:
                for _ in range(full):
                    self._emit(ui, uj, 0, ul, out)
            lo += full * ul
        if lo < hi:
            self._emit(ui, uj, 0, hi - lo, out)

    def flatten(self, i: int, j: int, limit: int = DEFAULT_BUDGET) -> bytes:
        n = self.length(i, j)
        if n > limit:
            raise TowerError(f"w_{i}^{j} has {n} letters, above the flatten limit {limit}")
        if j == 0:
            return bytes([i])
        got = self._flat.get((i, j))
        if got is not None:
            return got
        w = self.words[(i, j)]
        parts = []
        for blk in w.blocks:
            ui, uj = blk.unit
            parts.append(self.flatten(ui, uj, limit) * blk.copies)
        flat = b"".join(parts)
        if n <= FLAT_CACHE_LIMIT:
            self._flat[(i, j)] = flat
        return flat

    # -- counts ------------------------------------------------------------
    def letter_counts(self, i: int, j: int) -> tuple[int, ...]:
        """Occurrences of each letter ``1..d`` in ``w_i^j``, from the block structure."""
        if j == 0:
            return tuple(int(c == i) for c in range(1, self.d + 1))
        key = ("counts", i, j)
        cache = self.__dict__.setdefault("_counts", {})
        if key not in cache:
            tot = [0] * self.d
            for blk in self.word(i, j).blocks:
                sub = self.letter_counts(*blk.unit)
                for c in range(self.d):
                    tot[c] += sub[c] * blk.copies
            cache[key] = tuple(tot)
        return cache[key]

    # -- serialisation -----------------------------------------------------
    def to_json(self) -> dict:
        words = {}
        for (i, j), w in sorted(self.words.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            words[w.name] = {
                "length": w.length,
                "blocks": [{"k": b.k, "unit": (f"w_{b.unit[0]}^{b.unit[1]}" if b.unit[1] else str(b.unit[0])),
                            "run": b.run} for b in w.blocks],
            }
        return {"d": self.d, "J": self.J,
                "kappa": [str(k) for k in self.params.kappa],
                "delta": [str(v) for v in self.params.delta],
                "words": words}


# --------------------------------------------------------------------------
# construction


def _least_multiple_above(step: int, bound: Fraction) -> int:
    """Least positive multiple of ``step`` strictly greater than ``bound``."""
    q = math.floor(bound / step) + 1
    return max(q, 1) * step


def _build_level(params: ConstructionParams, words: dict, J: int, budget: int | None) -> None:
    d = params.d
    kappa, delta = params.kappa[J - 1], params.delta[J - 1]
    if kappa >= 1:
        raise TowerError(f"kappa_{J} = {kappa} >= 1 makes the diagonal constraint infeasible")

    def unit_len(i, j):
        return 1 if j == 0 else words[(i, j)].length

    for t in range(1, d + 1):
        if J == 1 and t == 1:
            n11 = _least_multiple_above(1, kappa * (d - 1) / (1 - kappa))
            blocks = [Block(1, (1, 0), 1, n11)] + [Block(k, (k, 0), 1, 1) for k in range(2, d + 1)]
            words[(1, 1)] = _word(1, 1, blocks)
            continue
        prev = words[(t - 1, J)].length if t > 1 else words[(d, J - 1)].length
        value = Fraction(prev)
        runs: dict[int, tuple[tuple[int, int], int]] = {}
        total = 0
        order = chain_order(t, d)
        for e_idx, k in enumerate(order):
            e = 2 * (e_idx + 1)
            unit = (k, J) if k < t else (k, J - 1)
            ul = unit_len(*unit)
            below = words[(t, J - 1)].blocks[k - 1].run if J > 1 else 1
            step = ul * below // math.gcd(ul, below)
            bound = value / delta**e
            if k == t:
                bound = max(bound, kappa * total / (1 - kappa))
            n = _least_multiple_above(step, bound)
            runs[k] = (unit, n)
            total += n
            value = delta**e * n
            if budget is not None and total > budget:
                raise TowerError(f"letter budget {budget} exceeded at block N^[{J}]_({t},{k}) of w_{t}^{J} "
                                 f"(running length {total})")
        blocks = [Block(k, runs[k][0], unit_len(*runs[k][0]), runs[k][1]) for k in range(1, d + 1)]
        words[(t, J)] = _word(t, J, blocks)


def build_tower(params: ConstructionParams, budget: int | None = DEFAULT_BUDGET) -> WordTower:
    """Greedy minimal-length tower.  ``budget=None`` builds descriptors without a length cap."""
    words: dict[tuple[int, int], TowerWord] = {}
    for J in range(1, params.J + 1):
        _build_level(params, words, J, budget)
    return WordTower(params, words)


def deepen(tower: WordTower, J: int) -> WordTower:
    """Descriptor-only extension to level ``J`` (no letter budget; never flattened).

    Levels beyond the original schedule use the default kappa and delta values.
    """
    if J <= tower.J:
        return tower
    params = tower.params.extended(J)
    words = dict(tower.words)
    for level in range(tower.J + 1, J + 1):
        _build_level(params, words, level, None)
    out = WordTower(params, words)
    out._flat = tower._flat
    return out


# --------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""


def verify_constraints(tower: WordTower) -> list[Check]:
    """Re-derive every constraint from the stored run lengths, independently of the solver."""
    d, out = tower.d, []
    p = tower.params
    out.append(Check("kappa product > 1/2", math.prod(p.kappa) > Fraction(1, 2), str(math.prod(p.kappa))))
    for j in range(1, tower.J + 1):
        kappa, delta = p.kappa[j - 1], p.delta[j - 1]
        for t in range(1, d + 1):
            w = tower.word(t, j)
            for blk in w.blocks:
                exp_unit = (blk.k, 0) if (j == 1 and t == 1) else ((blk.k, j) if blk.k < t else (blk.k, j - 1))
                ok = blk.unit == exp_unit and blk.run % tower.length(*blk.unit) == 0 and blk.run > 0
                out.append(Check(f"run N^[{j}]_({t},{blk.k}) is a multiple of |{exp_unit}|", ok, str(blk.run)))
            diag = w.blocks[t - 1].run
            out.append(Check(f"N^[{j}]_({t},{t}) > kappa_{j} |w_{t}^{j}|", diag > kappa * w.length,
                             f"{diag} vs {kappa * w.length}"))
            if j == 1 and t == 1:
                continue
            prev = tower.length(t - 1, j) if t > 1 else tower.length(d, j - 1)
            vals = [Fraction(prev)]
            for e_idx, k in enumerate(chain_order(t, d)):
                vals.append(delta ** (2 * (e_idx + 1)) * tower.N(j, t, k))
            chain_ok = all(a < b for a, b in zip(vals, vals[1:]))
            out.append(Check(f"chain for w_{t}^{j}", chain_ok, " < ".join(str(v) for v in vals)))
            if j > 1:
                for k in range(1, d + 1):
                    lo, hi = tower.N(j - 1, t, k), tower.N(j, t, k)
                    out.append(Check(f"N^[{j-1}]_({t},{k}) divides N^[{j}]_({t},{k})", hi % lo == 0, f"{lo} | {hi}"))
    for t in range(1, d + 1):
        present = all(c > 0 for c in tower.letter_counts(t, 1))
        out.append(Check(f"every letter appears in w_{t}^1", present))
    seq = [tower.length(i, j) for j in range(1, tower.J + 1) for i in range(1, d + 1)]
    out.append(Check("lengths strictly increase in construction order", all(a < b for a, b in zip(seq, seq[1:]))))
    return out


@dataclass(frozen=True)
class FrequencyEntry:
    i: int
    j: int
    frequency: Fraction
    bound: Fraction
    ok: bool


def verify_letter_frequency(tower: WordTower) -> list[FrequencyEntry]:
    out = []
    for j in range(1, tower.J + 1):
        bound = math.prod(tower.params.kappa[:j])
        for i in range(1, tower.d + 1):
            f = Fraction(tower.letter_counts(i, j)[i - 1], tower.length(i, j))
            out.append(FrequencyEntry(i, j, f, bound, f >= bound and f > Fraction(1, 2)))
    return out


@dataclass(frozen=True)
class GapEntry:
    i1: int
    i2: int
    j: int
    j_outer: int
    gap: int | None
    bound: int
    ok: bool


def verify_syndetic(tower: WordTower, j: int, limit: int = DEFAULT_BUDGET) -> list[GapEntry]:
    """Largest gap of ``w_{i1}^j`` inside ``w_{i2}^{j'}`` for every ``j < j' <= J``."""
    if not 1 <= j < tower.J:
        raise TowerError(f"need 1 <= j < J={tower.J}")
    bound = max(tower.length(l, j + 1) for l in range(1, tower.d + 1))
    out = []
    for jo in range(j + 1, tower.J + 1):
        for i2 in range(1, tower.d + 1):
            outer = tower.flatten(i2, jo, limit)
            for i1 in range(1, tower.d + 1):
                g = syndetic_gap(outer, tower.flatten(i1, j, limit))
                out.append(GapEntry(i1, i2, j, jo, g, bound, g is not None and g <= bound))
    return out


# --------------------------------------------------------------------------
# prefix emission


def emit_prefix(tower: WordTower, L: int) -> Word:
    """First ``L`` letters of the infinite word whose prefixes are the ``w_1^j``."""
    top = tower.length(1, tower.J)
    if L > top:
        raise TowerError(f"L={L} exceeds |w_1^{tower.J}| = {top}; use a higher J (see deepen)")
    return tower.slice(1, tower.J, 0, L)


def iter_prefix(tower: WordTower, L: int, chunk: int = 1 << 20) -> Iterator[bytes]:
    top = tower.length(1, tower.J)
    if L > top:
        raise TowerError(f"L={L} exceeds |w_1^{tower.J}| = {top}; use a higher J (see deepen)")
    for a in range(0, L, chunk):
        yield tower.slice(1, tower.J, a, min(L, a + chunk))


def write_prefix(tower: WordTower, L: int, fh: BinaryIO) -> int:
    n = 0
    for part in iter_prefix(tower, L):
        fh.write(part)
        n += len(part)
    return n


# --------------------------------------------------------------------------
# exact complexity of the subshift


def adjacent_pairs(d: int) -> list[tuple[int, int]]:
    """Ordered pairs ``(a, b)`` such that ``w_a^j w_b^j`` occurs in a higher-level word."""
    pairs = {(k, k) for k in range(1, d + 1)}
    pairs |= {(k, k + 1) for k in range(1, d)}
    pairs |= {(d, t) for t in range(1, d + 1)}
    return sorted(pairs)


def _collect(tower: WordTower, i: int, j: int, n: int, out: set, seen: set) -> None:
    """Short words whose length-``n`` factors are exactly those of ``w_i^j``."""
    if (i, j) in seen:
        return
    seen.add((i, j))
    w = tower.word(i, j)
    if w.length <= 2 * n:
        out.add(tower.slice(i, j, 0, w.length))
        return
    r = n - 1
    for blk, s in zip(w.blocks, w.starts):
        ui, uj = blk.unit
        ul = blk.unit_len
        if ul <= r:
            out.add(tower.slice(i, j, s, s + min(blk.run, r + ul)))
        else:
            _collect(tower, ui, uj, n, out, seen)
            if blk.copies >= 2:
                out.add(tower.slice(i, j, s + ul - r, s + ul + r))
    for s in w.starts[1:]:
        out.add(tower.slice(i, j, max(0, s - r), min(w.length, s + r)))


def sample_level(tower: WordTower, n: int) -> int:
    for j in range(1, tower.J + 1):
        if min(tower.length(i, j) for i in range(1, tower.d + 1)) >= n - 1:
            return j
    raise TowerError(f"no level with all words of length >= {n - 1}; deepen the tower")


def language_sample(tower: WordTower, n: int) -> list[bytes]:
    """Finite set of words whose factors of length <= n are exactly the
    language of the subshift in those lengths.

    At a level ``j`` where every word has length at least ``n - 1``, a length
    ``n`` factor lies inside one level-``j`` word or straddles the junction of
    two adjacent ones.
    """
    j = sample_level(tower, n)
    out: set[bytes] = set()
    seen: set = set()
    for i in range(1, tower.d + 1):
        _collect(tower, i, j, n, out, seen)
    r = n - 1
    for a, b in adjacent_pairs(tower.d):
        la = tower.length(a, j)
        out.add(tower.slice(a, j, la - r, la) + tower.slice(b, j, 0, r))
    return sorted(out)


def language_profile(tower: WordTower, n_max: int) -> ComplexityProfile:
    """Exact ``P_X(n)`` for ``n <= n_max``, deepening the descriptors if needed."""
    t = tower
    while True:
        try:
            sample_level(t, n_max)
            break
        except TowerError:
            t = deepen(t, t.J + 1)
    sample = [s for s in language_sample(t, n_max) if s]
    idx = build_merged_index(sample)
    return ComplexityProfile(n_max, idx.counts(n_max).copy(), sum(len(s) for s in sample))


@dataclass(frozen=True)
class DipProbe:
    i: int
    j: int
    n_star: int
    count: int
    ratio: Fraction
    bound: Fraction
    ok: bool


def probe_complexity_dip(tower: WordTower, j: int, i: int, profile: ComplexityProfile | None = None,
                         n_limit: int = 5 * 10**5) -> DipProbe:
    """Ratio ``P(n*)/n*`` at ``n* = floor(|w_i^j| / delta_j)`` against ``d + d delta_j``."""
    if not 1 <= j <= tower.J:
        raise TowerError(f"level {j} not in 1..{tower.J}")
    delta = tower.params.delta[j - 1]
    n_star = math.floor(tower.length(i, j) / delta)
    if n_star > n_limit:
        raise TowerError(f"probe n*={n_star} beyond the probed range {n_limit}")
    if profile is None or profile.n_max < n_star:
        profile = language_profile(tower, n_star)
    c = profile[n_star]
    ratio = Fraction(c, n_star)
    bound = tower.d + tower.d * delta
    return DipProbe(i, j, n_star, c, ratio, bound, ratio <= bound)


def ratio_peak(profile: ComplexityProfile, n_min: int = 2) -> tuple[int, Fraction]:
    counts = profile.counts[n_min:profile.n_max + 1].astype(np.float64)
    ns = np.arange(n_min, profile.n_max + 1, dtype=np.float64)
    best = int(np.argmax(counts / ns)) + n_min
    return best, Fraction(int(profile.counts[best]), best)


def tower_from_json(doc: dict | str) -> WordTower:
    if isinstance(doc, str):
        doc = json.loads(doc)
    params = ConstructionParams(doc["d"], doc["J"], tuple(Fraction(k) for k in doc["kappa"]),
                                tuple(Fraction(v) for v in doc["delta"]))
    words = {}
    for name, spec in doc["words"].items():
        i, j = (int(v) for v in name[2:].split("^"))
        blocks = []
        for b in spec["blocks"]:
            u = b["unit"]
            unit = tuple(int(v) for v in u[2:].split("^")) if u.startswith("w_") else (int(u), 0)
            blocks.append(Block(b["k"], unit, 0, b["run"]))
        words[(i, j)] = blocks
    built: dict[tuple[int, int], TowerWord] = {}
    for (i, j) in sorted(words, key=lambda key: (key[1], key[0])):
        fixed = []
        for b in words[(i, j)]:
            ul = 1 if b.unit[1] == 0 else built[b.unit].length
            fixed.append(Block(b.k, b.unit, ul, b.run))
        built[(i, j)] = _word(i, j, fixed)
    return WordTower(params, built)


def block_offset(tower: WordTower, i: int, j: int) -> int:
    """Position in ``w_1^{j+1}`` where the diagonal block of a copy of ``w_i^j`` begins.

    The shifted infinite word starting there spends its first
    ``N^{[j]}_{(i,i)}`` letters inside runs of the word ``w_i`` is built from,
    so its early statistics favour the letter ``i``.
    """
    outer = tower.word(1, j + 1)
    return outer.starts[i - 1] + tower.word(i, j).starts[i - 1]


def block_source(tower: WordTower, i: int, j: int) -> FunctionSource:
    """The infinite word shifted to :func:`block_offset`; descriptors are deepened as needed."""
    deep = deepen(tower, max(tower.J, j + 1))
    off = block_offset(deep, i, j)
    state = {"t": deep}

    def gen(L: int) -> bytes:
        t = state["t"]
        while t.length(1, t.J) < off + L:
            t = deepen(t, t.J + 1)
            state["t"] = t
        return t.slice(1, t.J, off, off + L)

    return FunctionSource(gen, name=f"tower-block-{i}-{j}")
