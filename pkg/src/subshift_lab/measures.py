"""Empirical cylinder measures, separation, clustering, and probes of the
complexity-versus-measures counting argument on finite samples."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .word_core import InfiniteWordSource, Word, render, window


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Exact cylinder frequencies for every word of length <= ``max_len``
    occurring in a sample window.

    ``freqs[w]`` is the number of occurrences of ``w`` divided by
    ``length - |w| + 1``; cylinders absent from the window have measure 0.
    """

    max_len: int
    freqs: dict[Word, Fraction]
    source: str
    start: int
    length: int

    def __call__(self, w: Word) -> Fraction:
        if not 1 <= len(w) <= self.max_len:
            raise MeasureError(f"cylinder length {len(w)} not covered (max {self.max_len})")
        return self.freqs.get(w, Fraction(0))

    def cylinders(self, ell: int) -> list[Word]:
        return sorted(w for w in self.freqs if len(w) == ell)

    def total(self, ell: int) -> Fraction:
        return sum((f for w, f in self.freqs.items() if len(w) == ell), Fraction(0))


def _count_factors(sample: Word, ell: int) -> Counter:
    n = len(sample) - ell + 1
    if ell <= 7:
        a = np.frombuffer(sample, dtype=np.uint8).astype(np.uint64)
        codes = np.zeros(n, dtype=np.uint64)
        for t in range(ell):
            codes = (codes << np.uint64(8)) | a[t:t + n]
        vals, cnt = np.unique(codes, return_counts=True)
        out = Counter()
        for v, c in zip(vals.tolist(), cnt.tolist()):
            out[int(v).to_bytes(ell, "big")] = c
        return out
    return Counter(sample[i:i + ell] for i in range(n))


def measure_of_word(sample: Word, max_len: int, source: str = "word", start: int = 0) -> EmpiricalMeasure:
    if max_len < 1 or len(sample) < max_len:
        raise MeasureError("window shorter than the cylinder length bound")
    freqs: dict[Word, Fraction] = {}
    for ell in range(1, max_len + 1):
        denom = len(sample) - ell + 1
        for w, c in _count_factors(sample, ell).items():
            freqs[w] = Fraction(c, denom)
    return EmpiricalMeasure(max_len, freqs, source, start, len(sample))


def empirical_measure(source: InfiniteWordSource | Word, start: int, window_length: int, m: int) -> EmpiricalMeasure:
    if m < 1 or window_length < m:
        raise MeasureError("empirical_measure needs window_length >= m >= 1")
    sample = window(source, window_length, start)
    name = getattr(source, "name", "word")
    return measure_of_word(sample, m, name, start)


def measure_distance(a: EmpiricalMeasure, b: EmpiricalMeasure, ell: int) -> Fraction:
    """Largest cylinder-wise difference over words of length ``ell``."""
    if ell < 1 or ell > a.max_len or ell > b.max_len:
        raise MeasureError(f"both measures must cover length {ell}")
    words = set(a.cylinders(ell)) | set(b.cylinders(ell))
    return max((abs(a(w) - b(w)) for w in words), default=Fraction(0))


@dataclass(frozen=True)
class Clustering:
    count: int
    labels: list[int]
    representatives: list[int]
    tau: Fraction


def generic_candidate_count(windows: Sequence[EmpiricalMeasure], ell: int, tau: Fraction) -> Clustering:
    """Greedy clustering: a window joins the first representative within ``tau``."""
    tau = Fraction(tau)
    if tau <= 0:
        raise MeasureError("separation tau must be positive")
    reps: list[int] = []
    labels: list[int] = []
    for i, m in enumerate(windows):
        for c, r in enumerate(reps):
            if measure_distance(m, windows[r], ell) <= tau:
                labels.append(c)
                break
        else:
            labels.append(len(reps))
            reps.append(i)
    return Clustering(len(reps), labels, reps, tau)


def generic_bound_consistent(count: int, min_ratio: Fraction, k: int) -> bool:
    """Finite-scale reading of the liminf bound: a ratio below ``k`` allows at most ``k - 1`` candidates."""
    if min_ratio < k:
        return count <= k - 1
    return True


def clusters_csv(clustering: Clustering, windows: Sequence[EmpiricalMeasure]) -> str:
    lines = ["window,source,start,length,cluster,representative"]
    for i, (w, lab) in enumerate(zip(windows, clustering.labels)):
        lines.append(f"{i},{w.source},{w.start},{w.length},{lab},{clustering.representatives[lab]}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# counting-argument probe


def _q(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def _indicator(sample: Word, w: Word) -> np.ndarray:
    n = len(sample) - len(w) + 1
    a = np.frombuffer(sample, dtype=np.uint8)
    mask = a[:n] == w[0]
    for t in range(1, len(w)):
        mask &= a[t:t + n] == w[t]
    return mask


def distinguishing_word(a: EmpiricalMeasure, b: EmpiricalMeasure, min_gap: Fraction) -> tuple[Word, Fraction]:
    """Shortest cylinder whose two frequencies differ by at least ``min_gap``.

    Lengths are scanned upward; within a length the largest difference wins
    and ties go to the lexicographically smallest word.
    """
    for ell in range(1, min(a.max_len, b.max_len) + 1):
        best: tuple[Fraction, Word] | None = None
        for w in sorted(set(a.cylinders(ell)) | set(b.cylinders(ell))):
            diff = abs(a(w) - b(w))
            if best is None or diff > best[0]:
                best = (diff, w)
        if best is not None and best[0] >= min_gap and best[0] > 0:
            return best[1], best[0]
    raise MeasureError("no distinguishing word within the search budget "
                       "(the sources may be generic for the same measure)")


def stabilization_horizon(sample: Word, w: Word, target: Fraction, tol: Fraction) -> int:
    """Least ``n0`` such that ``(1/n) #{k < n : w occurs at k}`` stays within ``tol``
    of ``target`` for every ``n0 <= n <= len(sample) - |w| + 1``."""
    ind = _indicator(sample, w)
    counts = np.cumsum(ind, dtype=np.int64).astype(object)
    n = np.arange(1, len(ind) + 1, dtype=object)
    # |c/n - t| < tol  <=>  |c*T_den - n*T_num| * tol_den < tol_num * n * T_den
    t_num, t_den = target.numerator, target.denominator
    lhs = np.abs(counts * t_den - n * t_num) * tol.denominator
    rhs = n * (tol.numerator * t_den)
    bad = np.flatnonzero(~(lhs < rhs).astype(bool))
    if len(bad) == 0:
        return 1
    return int(bad[-1]) + 2


@dataclass(frozen=True)
class DichotomyEntry:
    i: int
    kind: str  # "S" (all windows distinct) or "T" (a repeat, resolved through locate_K)
    size: int
    required: int
    ok: bool
    K: int | None = None


@dataclass(frozen=True)
class TheoremProbe:
    d: int
    delta: Fraction
    N: int
    horizon: int
    words: dict[tuple[int, int], Word]
    gaps: dict[tuple[int, int], Fraction]
    epsilon: Fraction
    B: Fraction
    N_i: tuple[int, ...]
    M: int
    ell_N: int
    L_N: int
    class_sizes: tuple[int, ...]
    frequency_control: bool
    disjoint: bool
    dichotomy: tuple[DichotomyEntry, ...]
    sets_disjoint: bool
    lower_bound: int

    @property
    def passed(self) -> bool:
        return self.disjoint and self.sets_disjoint and all(e.ok for e in self.dichotomy)

    def to_json(self) -> dict:
        return {
            "d": self.d, "delta": _q(self.delta), "N": self.N, "horizon": self.horizon,
            "distinguishing_words": {f"{a},{b}": render(w) for (a, b), w in sorted(self.words.items())},
            "gaps": {f"{a},{b}": _q(g) for (a, b), g in sorted(self.gaps.items())},
            "epsilon": _q(self.epsilon), "B": _q(self.B), "N_i": list(self.N_i), "M": self.M,
            "ell_N": self.ell_N, "L_N": self.L_N, "class_sizes": list(self.class_sizes),
            "frequency_control": self.frequency_control, "disjoint": self.disjoint,
            "dichotomy": [{"i": e.i, "kind": e.kind, "size": e.size, "required": e.required,
                           "ok": e.ok, "K": e.K} for e in self.dichotomy],
            "sets_disjoint": self.sets_disjoint, "lower_bound": self.lower_bound,
            "passed": self.passed,
        }


def theorem_probe(sources: Sequence[InfiniteWordSource], delta: Fraction, N: int, horizon: int,
                  max_word_len: int = 6, min_gap: Fraction = Fraction(1, 100),
                  ekm_cap: int | None = None) -> TheoremProbe:
    """Evaluate the counting argument's quantities on finite samples.

    ``mu_i`` is read off the first ``horizon`` symbols of ``x_i``.  ``M`` is
    the largest stabilization horizon of the running frequencies of the
    distinguishing words (within ``B * epsilon``) and must not exceed
    ``horizon / 2``.
    """
    from .ekm import EkmInstance, find_repeat, locate_K

    d = len(sources)
    delta = Fraction(delta)
    if d < 2:
        raise MeasureError("theorem_probe needs at least two sources")
    if not 0 < delta < 1:
        raise MeasureError("delta must lie in (0, 1)")
    samples = [s.prefix(horizon) for s in sources]
    measures = [measure_of_word(s, max_word_len, getattr(src, "name", "x"), 0)
                for s, src in zip(samples, sources)]
    words, gaps = {}, {}
    for a in range(d):
        for b in range(a + 1, d):
            w, g = distinguishing_word(measures[a], measures[b], Fraction(min_gap))
            words[(a + 1, b + 1)], gaps[(a + 1, b + 1)] = w, g
    epsilon = min(gaps.values())
    B = delta / (16 - 4 * delta)
    tol = B * epsilon
    N_i = []
    for i in range(d):
        h = 1
        for w in words.values():
            h = max(h, stabilization_horizon(samples[i], w, measures[i](w), tol))
        N_i.append(h)
    M = max(N_i)
    if 2 * M > horizon:
        raise MeasureError(f"frequencies did not stabilize: M={M} exceeds half the horizon {horizon}")
    longest = max(len(w) for w in words.values())
    if N * delta < M + longest:
        raise MeasureError(f"N={N} below the bound (M + max|w|)/delta = {(M + longest) / delta}")
    ell_N = math.floor(delta * N)
    L_N = math.floor((2 - delta) * N)
    need = max(L_N + ell_N, math.floor((1 - delta) * N) + N) + 1
    if need > horizon:
        raise MeasureError(f"horizon {horizon} too short for N={N} (needs {need})")

    classes = [{samples[i][L:L + ell_N] for L in range(M, L_N + 1)} for i in range(d)]
    disjoint = all(not (classes[a] & classes[b]) for a in range(d) for b in range(a + 1, d))
    freq_ok = True
    for i in range(d):
        for w in words.values():
            mu = measures[i](w)
            for u in classes[i]:
                if abs(Fraction(_indicator(u, w).sum(), ell_N - len(w) + 1) - mu) >= epsilon / 2:
                    freq_ok = False
                    break

    entries, sets = [], []
    top = math.floor((1 - delta) * N)
    for i in range(d):
        x, cls = samples[i], classes[i]
        wins = [x[L:L + N] for L in range(M, top + 1)]
        if len(set(wins)) == len(wins):
            picked = {u for u in wins
                      if all(u[s:s + ell_N] in cls for s in range(N - ell_N + 1))}
            req = top - M
            entries.append(DichotomyEntry(i + 1, "S", len(picked), req, len(picked) >= req))
        else:
            m1, m2 = find_repeat(x, N, M, top)
            cert = locate_K(EkmInstance(sources[i], N, ell_N, M, m1, m2), ekm_cap or 8 * horizon)
            ext = sources[i].prefix(cert.K + 2 * N)
            picked = {ext[k:k + N] for k in range(cert.K, cert.K + N - ell_N + 1)
                      if ext[k:k + ell_N] in cls}
            req = N - ell_N
            entries.append(DichotomyEntry(i + 1, "T", len(picked), req, len(picked) >= req, cert.K))
        sets.append(picked)
    sets_disjoint = all(not (sets[a] & sets[b]) for a in range(d) for b in range(a + 1, d))
    return TheoremProbe(d, delta, N, horizon, words, gaps, epsilon, B, tuple(N_i), M, ell_N, L_N,
                        tuple(len(c) for c in classes), freq_ok, disjoint, tuple(entries),
                        sets_disjoint, sum(len(s) for s in sets))
