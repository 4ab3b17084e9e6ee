"""Interval exchange transformations in exact rational arithmetic.

``perm[i - 1]`` is the position (1-based) that interval ``i`` occupies after
the exchange.  Intervals are half-open ``[lambda_{i-1}, lambda_i)``; a point
on a breakpoint belongs to the interval on its right.  Internally every
computation is done on integers after scaling by a common denominator.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .complexity import ComplexityProfile, build_merged_index
from .measures import EmpiricalMeasure, measure_of_word
from .word_core import Word


class IETError(ValueError):
    pass


def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


@dataclass(frozen=True)
class IETSpec:
    lengths: tuple[Fraction, ...]
    perm: tuple[int, ...]
    breakpoints: tuple[Fraction, ...] = field(init=False, repr=False)
    _scale: int = field(init=False, repr=False, compare=False)
    _int_bps: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _int_shift: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _int_image_starts: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _inv_perm: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lengths = tuple(Fraction(v) for v in self.lengths)
        perm = tuple(int(p) for p in self.perm)
        k = len(lengths)
        if k < 1:
            raise IETError("need at least one interval")
        if any(v <= 0 for v in lengths):
            raise IETError("lengths must be positive")
        if sorted(perm) != list(range(1, k + 1)):
            raise IETError(f"perm {perm} is not a permutation of 1..{k}")
        bps = [Fraction(0)]
        for v in lengths:
            bps.append(bps[-1] + v)
        scale = _lcm(v.denominator for v in lengths)
        ibps = [int(b * scale) for b in bps]
        ilen = [int(v * scale) for v in lengths]
        inv = [0] * k
        for i, p in enumerate(perm):
            inv[p - 1] = i
        # image of interval i starts after every interval placed before it
        img_start = [0] * k
        acc = 0
        for pos in range(k):
            i = inv[pos]
            img_start[i] = acc
            acc += ilen[i]
        shift = [img_start[i] - ibps[i] for i in range(k)]
        set_ = object.__setattr__
        set_(self, "lengths", lengths)
        set_(self, "perm", perm)
        set_(self, "breakpoints", tuple(bps))
        set_(self, "_scale", scale)
        set_(self, "_int_bps", tuple(ibps))
        set_(self, "_int_shift", tuple(shift))
        set_(self, "_int_image_starts", tuple(img_start))
        set_(self, "_inv_perm", tuple(inv))

    @property
    def k(self) -> int:
        return len(self.lengths)

    @property
    def total(self) -> Fraction:
        return self.breakpoints[-1]

    # -- serialisation ---------------------------------------------------
    def to_json(self) -> dict:
        return {"k": self.k, "lengths": [str(v) for v in self.lengths], "perm": list(self.perm)}

    @classmethod
    def from_json(cls, doc: dict | str) -> "IETSpec":
        if isinstance(doc, str):
            doc = json.loads(doc)
        extra = set(doc) - {"k", "lengths", "perm"}
        if extra:
            raise IETError(f"unknown IET keys: {sorted(extra)}")
        spec = cls(tuple(Fraction(v) for v in doc["lengths"]), tuple(doc["perm"]))
        if "k" in doc and doc["k"] != spec.k:
            raise IETError(f"k={doc['k']} but {spec.k} lengths given")
        return spec

    # -- integer kernels -------------------------------------------------
    def _scaled(self, extra_den: int = 1):
        """Breakpoints and shifts scaled by ``scale * extra_den``."""
        f = extra_den
        return [b * f for b in self._int_bps], [s * f for s in self._int_shift], self._scale * f

    def interval_of(self, x: Fraction) -> int:
        """1-based index of the interval containing ``x``."""
        x = Fraction(x)
        if not 0 <= x < self.total:
            raise IETError(f"point {x} outside [0, {self.total})")
        return bisect_right(self.breakpoints, x) - 1 + 1

    def apply(self, x: Fraction) -> Fraction:
        i = self.interval_of(x) - 1
        return Fraction(x) + Fraction(self._int_shift[i], self._scale)

    def apply_inverse(self, y: Fraction) -> Fraction:
        y = Fraction(y)
        if not 0 <= y < self.total:
            raise IETError(f"point {y} outside [0, {self.total})")
        yi = y * self._scale
        starts = sorted((self._int_image_starts[i], i) for i in range(self.k))
        pos = bisect_right([s for s, _ in starts], yi) - 1
        i = starts[pos][1]
        return y - Fraction(self._int_shift[i], self._scale)

    def image_intervals(self) -> list[tuple[Fraction, Fraction]]:
        out = []
        for i in range(self.k):
            a = Fraction(self._int_image_starts[i], self._scale)
            out.append((a, a + self.lengths[i]))
        return out


def rotation_iet(alpha: Fraction) -> IETSpec:
    """2-IET with lengths ``(alpha, 1 - alpha)``: the rotation by ``-alpha``."""
    alpha = Fraction(alpha)
    return IETSpec((alpha, 1 - alpha), (2, 1))


def random_iet(k: int, rng: np.random.Generator, perm: Sequence[int] | None = None, bits: int = 40) -> IETSpec:
    """Random rational lengths with a large common denominator.

    The default permutation is the symmetric one ``(k, k-1, ..., 1)``, which
    is irreducible for every k.
    """
    raw = [int(v) for v in rng.integers(1 << (bits - 1), 1 << bits, size=k)]
    total = sum(raw)
    lengths = tuple(Fraction(v, total) for v in raw)
    return IETSpec(lengths, tuple(perm) if perm is not None else tuple(range(k, 0, -1)))


# --------------------------------------------------------------------------
# codings


@dataclass(frozen=True)
class OrbitCoding:
    start: Fraction
    length: int
    symbols: Word


def _code_int(bps: list[int], shift: list[int], xi: int, L: int) -> bytearray:
    out = bytearray(L)
    inner = bps[1:-1]
    for n in range(L):
        i = bisect_right(inner, xi)
        out[n] = i + 1
        xi += shift[i]
    return out


def code_orbit(spec: IETSpec, x: Fraction, L: int) -> OrbitCoding:
    """Symbols ``x_0 .. x_{L-1}`` with ``x_n = i`` iff ``T^n x`` lies in interval ``i``."""
    x = Fraction(x)
    if not 0 <= x < spec.total:
        raise IETError(f"point {x} outside [0, {spec.total})")
    bps, shift, scale = spec._scaled(x.denominator)
    xi = x.numerator * (scale // x.denominator)
    return OrbitCoding(x, L, bytes(_code_int(bps, shift, xi, L)))


@dataclass(frozen=True)
class IdocReport:
    ok: bool
    depth: int
    witness: tuple | None

    def describe(self) -> str:
        if self.ok:
            return f"IDOC holds to depth {self.depth}"
        return f"IDOC fails: {self.witness}"


def idoc_check(spec: IETSpec, depth: int) -> IdocReport:
    """Forward orbits of the interior breakpoints, up to ``depth`` steps.

    Fails on the first iterate that lands on an interior breakpoint or on a
    point already visited by another (or the same) breakpoint orbit.  The
    witness is ``(i, n, what)`` with ``i`` the breakpoint index and ``n`` the
    step at which the collision happens.
    """
    if depth < 1:
        raise IETError("depth must be >= 1")
    if spec.k == 1:
        return IdocReport(True, depth, None)
    bps, shift, _ = spec._scaled()
    inner = bps[1:-1]
    interior = {b: j + 1 for j, b in enumerate(inner)}
    seen: dict[int, tuple[int, int]] = {b: (j + 1, 0) for j, b in enumerate(inner)}
    points = list(inner)
    for n in range(1, depth + 1):
        for idx in range(len(points)):
            x = points[idx]
            x += shift[bisect_right(inner, x)]
            points[idx] = x
            if x in interior:
                return IdocReport(False, depth, (idx + 1, n, f"hits breakpoint lambda_{interior[x]}"))
            if x in seen:
                j, m = seen[x]
                return IdocReport(False, depth, (idx + 1, n, f"meets orbit of lambda_{j} at step {m}"))
            seen[x] = (idx + 1, n)
    return IdocReport(True, depth, None)


def partition_points(spec: IETSpec, depth: int, extra_den: int = 1) -> list[int]:
    """Scaled left endpoints of the cells on which the first ``depth`` symbols are constant.

    These are 0 together with the preimages ``T^{-j}(lambda_i)`` for
    ``0 <= j < depth`` and interior breakpoints.
    """
    bps, shift, scale = spec._scaled(extra_den)
    k = spec.k
    starts = sorted((spec._int_image_starts[i] * extra_den, i) for i in range(k))
    img = [s for s, _ in starts]
    owner = [i for _, i in starts]
    pts = {0}
    frontier = bps[1:-1]
    for _ in range(depth):
        pts.update(frontier)
        nxt = []
        for y in frontier:
            i = owner[bisect_right(img, y) - 1]
            nxt.append(y - shift[i])
        frontier = nxt
    return sorted(pts)


def cell_words(spec: IETSpec, depth: int) -> list[tuple[Fraction, Fraction, Word]]:
    """Cells of the depth-``depth`` partition with their coding words."""
    bps, shift, scale = spec._scaled()
    pts = partition_points(spec, depth)
    ends = pts[1:] + [bps[-1]]
    out = []
    for a, b in zip(pts, ends):
        w = bytes(_code_int(bps, shift, a, depth))
        out.append((Fraction(a, scale), Fraction(b, scale), w))
    return out


@dataclass(frozen=True)
class IETExperiment:
    spec: IETSpec
    profile: ComplexityProfile
    idoc: IdocReport
    mode: str  # "exact" when IDOC holds to depth n_max, else "upper bound"
    passed: bool
    first_failure: int | None
    n_starts: int

    def expected(self, n: int) -> int:
        return (self.spec.k - 1) * n + 1


def complexity_experiment(spec: IETSpec, n_max: int, orbit_budget: int = 0, seed: int = 0) -> IETExperiment:
    """Merged factor counts of codings against ``(k - 1) n + 1``.

    Start points are the left endpoints of every cell of the depth-``n_max``
    partition (so every word of length ``n_max`` is seen) plus
    ``orbit_budget`` seeded random rational points.  Each start point is
    coded for ``n_max`` steps and all codings go into one merged index.
    """
    idoc = idoc_check(spec, n_max + 1)
    bps, shift, scale = spec._scaled()
    starts = partition_points(spec, n_max)
    rng = np.random.default_rng(seed)
    for _ in range(orbit_budget):
        starts.append(int(rng.integers(0, bps[-1])) if bps[-1] < (1 << 63) else
                      int(rng.random() * bps[-1]))
    codings = [bytes(_code_int(bps, shift, s, n_max)) for s in starts]
    idx = build_merged_index(codings)
    prof = ComplexityProfile(n_max, idx.counts(n_max).copy(), n_max)
    k = spec.k
    first_bad = None
    for n in range(1, n_max + 1):
        p, e = int(prof.counts[n]), (k - 1) * n + 1
        if (idoc.ok and p != e) or p > e:
            first_bad = n
            break
    return IETExperiment(spec, prof, idoc, "exact" if idoc.ok else "upper bound",
                         first_bad is None, first_bad, len(starts))


@dataclass(frozen=True)
class MeasureLift:
    measure: EmpiricalMeasure
    exact: dict[Word, Fraction]
    max_deviation: Fraction
    bound: Fraction
    within_bound: bool
    tol: Fraction | None = None
    within_tol: bool | None = None


def cylinder_lengths(spec: IETSpec, max_len: int) -> dict[Word, Fraction]:
    """Normalised Lebesgue measure of the pullback of every cylinder of length <= max_len."""
    out: dict[Word, Fraction] = {}
    for a, b, w in cell_words(spec, max_len):
        share = (b - a) / spec.total
        for ell in range(1, max_len + 1):
            out[w[:ell]] = out.get(w[:ell], Fraction(0)) + share
    return out


def empirical_measure_lift(spec: IETSpec, x: Fraction, L: int, word_len_max: int,
                           tol: Fraction | None = None) -> MeasureLift:
    """Cylinder frequencies along one orbit versus exact interval lengths.

    Reports the largest deviation and whether it is within
    ``2 * word_len_max / L``.  That bound holds for well-approximable
    rotations but not for every IET (orbit discrepancy is not O(1/L) in
    general), so an explicit ``tol`` can be checked as well.
    """
    coding = code_orbit(spec, x, L)
    meas = measure_of_word(coding.symbols, word_len_max, source="iet-orbit")
    exact = cylinder_lengths(spec, word_len_max)
    words = set(exact) | set(meas.freqs)
    dev = max(abs(meas.freqs.get(w, Fraction(0)) - exact.get(w, Fraction(0))) for w in words)
    bound = Fraction(2 * word_len_max, L)
    tol = None if tol is None else Fraction(tol)
    return MeasureLift(meas, exact, dev, bound, dev <= bound, tol, None if tol is None else dev <= tol)
