"""Sturmian words from continued fractions, and relabeled unions of copies.

Letter convention: symbol 0 codes the arc of length alpha, so the frequency
of 0 tends to alpha.  Concretely, with ``F(m) = floor(m * alpha + rho)``,

    y_n = 0  iff  F(n + 2) - F(n + 1) = 1      (n >= 0),

i.e. ``y_n = 0`` iff ``{(n + 1) * alpha + rho}`` lies in ``[1 - alpha, 1)``.
For ``rho = 0`` this is the characteristic word of slope alpha with its two
letters swapped; e.g. the CF ``[0; 2, 1, 1, ...]`` gives ``1011010110110...``,
the Fibonacci word ``0100101001001...`` after swapping 0 and 1.

alpha itself is never materialised.  A CF prefix ``[0; a1, ..., aK]`` pins
alpha into an open interval between two rationals, and each floor is only
emitted when both ends of that interval agree on it.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .complexity import ComplexityProfile, build_merged_index, stable_profile
from .word_core import InfiniteWordSource, Word

MIN_CF_DEPTH = 20


class CertificationError(ValueError):
    pass


def convergents(cf: Sequence[int]) -> list[Fraction]:
    """Convergents of ``[0; a1, a2, ...]``."""
    p_prev, q_prev, p, q = 1, 0, 0, 1
    out = []
    for a in cf:
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        out.append(Fraction(p, q))
    return out


def cf_bracket(cf: Sequence[int]) -> tuple[Fraction, Fraction]:
    """Open interval containing every irrational whose CF starts with ``cf``.

    Such an alpha is ``[0; a1, ..., aK, t]`` with a real tail ``t > 1``; the
    endpoints are the values at ``t = 1`` and ``t = infinity``.
    """
    p_prev, q_prev, p, q = 1, 0, 0, 1
    for a in cf:
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
    end_inf = Fraction(p, q)
    end_one = Fraction(p + p_prev, q + q_prev)
    return (min(end_inf, end_one), max(end_inf, end_one))


def cf_of_rational(r: Fraction) -> list[int]:
    if not 0 < r < 1:
        raise ValueError("rational approximation must lie in (0, 1)")
    out = []
    x = Fraction(r)
    while x:
        x = 1 / x
        a = x.numerator // x.denominator
        out.append(a)
        x -= a
    return out


_TERM = re.compile(r"^\s*(\d+)\s*(?:x\s*(\d+))?\s*$")


def parse_cf(text: str) -> tuple[int, ...]:
    """Parse ``"0;2,1x40"`` (``ax n`` repeats ``a`` n times) or ``"p/q"``.

    The rational form is expanded into its CF and warns about the depth.
    """
    text = text.strip()
    if "/" in text and ";" not in text:
        cf = cf_of_rational(Fraction(text))
        warnings.warn(f"alpha given as a rational; using its CF of depth {len(cf)} "
                      "as a CF prefix", stacklevel=2)
        return tuple(cf)
    head, _, tail = text.partition(";")
    if head.strip() not in ("", "0"):
        raise ValueError("alpha must lie in (0, 1): integer part must be 0")
    cf: list[int] = []
    for term in filter(None, (t.strip() for t in tail.split(","))):
        m = _TERM.match(term)
        if not m:
            raise ValueError(f"bad CF term {term!r}")
        a, rep = int(m.group(1)), int(m.group(2) or 1)
        cf.extend([a] * rep)
    return tuple(cf)


@dataclass(frozen=True)
class RotationParams:
    cf: tuple[int, ...]
    rho: Fraction = Fraction(0)
    bracket: tuple[Fraction, Fraction] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cf = tuple(int(a) for a in self.cf)
        object.__setattr__(self, "cf", cf)
        object.__setattr__(self, "rho", Fraction(self.rho))
        if len(cf) < MIN_CF_DEPTH:
            raise ValueError(f"CF depth {len(cf)} < {MIN_CF_DEPTH}")
        if any(a < 1 for a in cf):
            raise ValueError("partial quotients must be >= 1")
        if cf[0] == 1 and len(cf) == 1:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        object.__setattr__(self, "bracket", cf_bracket(cf))

    @classmethod
    def from_text(cls, text: str, rho: Fraction | str | int = 0) -> "RotationParams":
        return cls(parse_cf(text), Fraction(rho))

    @property
    def alpha_approx(self) -> Fraction:
        """Deepest convergent; used as the exact rational stand-in for alpha."""
        return convergents(self.cf)[-1]

    def describe(self) -> str:
        cf = self.cf
        return f"[0;{','.join(map(str, cf[:6]))}{',...' if len(cf) > 6 else ''}] (depth {len(cf)})"


def _floors(r: Fraction, rho: Fraction, m_max: int) -> np.ndarray:
    """``floor(m * r + rho)`` for ``m = 1 .. m_max``, exact."""
    den = r.denominator * rho.denominator
    a = r.numerator * rho.denominator
    b = rho.numerator * r.denominator
    if (m_max * abs(a) + abs(b)) < (1 << 62) and den < (1 << 62):
        m = np.arange(1, m_max + 1, dtype=np.int64)
        return (m * a + b) // den
    m = np.arange(1, m_max + 1, dtype=object)
    return np.array((m * a + b) // den, dtype=object)


def _certify(params: RotationParams, L: int) -> np.ndarray:
    lo, hi = params.bracket
    f_lo = _floors(lo, params.rho, L + 1)
    f_hi = _floors(hi, params.rho, L + 1)
    bad = np.flatnonzero(f_lo != f_hi)
    if len(bad):
        ok = max(0, int(bad[0]) - 1)
        raise CertificationError(
            f"CF {params.describe()} certifies only {ok} symbols, asked for {L}; deepen CF")
    return f_lo


def certified_length(params: RotationParams, limit: int = 10**7) -> int:
    """Largest L <= limit for which :func:`sturmian_prefix` is certified."""
    lo, hi = params.bracket
    f_lo = _floors(lo, params.rho, limit + 1)
    f_hi = _floors(hi, params.rho, limit + 1)
    bad = np.flatnonzero(f_lo != f_hi)
    if len(bad) == 0:
        return limit
    # index i corresponds to m = i + 1; symbols n need m = n + 1 and n + 2
    return max(0, int(bad[0]) - 1)


def sturmian_prefix(params: RotationParams, L: int) -> Word:
    if L < 0:
        raise ValueError("L must be >= 0")
    if L == 0:
        return b""
    f = _certify(params, L)
    steps = (f[1:] - f[:-1]).astype(np.uint8)
    return (1 - steps).astype(np.uint8).tobytes()


class SturmianSource(InfiniteWordSource):
    def __init__(self, params: RotationParams):
        super().__init__()
        self.params = params
        self.name = f"sturmian{params.describe()}"

    def _generate(self, L: int) -> Word:
        return sturmian_prefix(self.params, L)


# --------------------------------------------------------------------------
# relabeled unions


@dataclass(frozen=True)
class UnionShiftSpec:
    """``d`` copies of one Sturmian shift; copy ``i`` maps 0 -> 2i, 1 -> 2i + 1."""

    d: int
    base: RotationParams

    def __post_init__(self):
        if not 1 <= self.d <= 127:
            raise ValueError("d must be in [1, 127]")

    @property
    def alphabet_size(self) -> int:
        return 2 * self.d

    def letter(self, copy: int, bit: int) -> int:
        return 2 * copy + bit


def union_prefix_family(spec: UnionShiftSpec, L: int) -> list[Word]:
    base = sturmian_prefix(spec.base, L)
    out = []
    for i in range(spec.d):
        table = bytes([spec.letter(i, 0), spec.letter(i, 1)]) + bytes(254)
        out.append(base.translate(table))
    return out


@dataclass(frozen=True)
class UnionComplexity:
    profile: ComplexityProfile
    expected: list[int]
    matches: bool
    first_mismatch: int | None


def union_complexity(spec: UnionShiftSpec, n_max: int, factor: int = 50) -> UnionComplexity:
    """Merged factor counts of the d copies, checked against d * (n + 1).

    The base word's profile is certified first (stable between L/2 and L);
    the merged index over the d relabeled prefixes is then counted
    independently of the formula.
    """
    L = factor * n_max
    stable_profile(SturmianSource(spec.base), n_max, factor)
    idx = build_merged_index(union_prefix_family(spec, L))
    prof = ComplexityProfile(n_max, idx.counts(n_max).copy(), L)
    expected = [spec.d * (n + 1) for n in range(1, n_max + 1)]
    got = prof.values()
    mismatch = next((n for n, (a, b) in enumerate(zip(got, expected), 1) if a != b), None)
    return UnionComplexity(prof, expected, mismatch is None, mismatch)
