"""From one repeated window of a non-eventually-periodic word, find a
position K after which N - N0 + 1 consecutive windows are pairwise distinct
and every short prefix of them already occurred near the start."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .word_core import InfiniteWordSource, Word, longest_periodic_extension, minimal_period, window


class EkmError(ValueError):
    pass


def find_repeat(x: InfiniteWordSource | Word, N: int, M: int, search_bound: int) -> tuple[int, int] | None:
    """Least ``(m1, m2)`` in lexicographic order with ``M <= m1 < m2 <= search_bound``
    and equal length-``N`` windows."""
    if N < 1 or M < 0:
        raise EkmError("find_repeat needs N >= 1 and M >= 0")
    if search_bound <= M:
        return None
    seg = window(x, search_bound + N, 0)
    first: dict[bytes, int] = {}
    best: tuple[int, int] | None = None
    for m in range(M, search_bound + 1):
        w = seg[m:m + N]
        if w in first:
            cand = (first[w], m)
            # m increases, so the first hit per group is its least m2
            if best is None or cand[0] < best[0]:
                best = cand
        else:
            first[w] = m
    return best


@dataclass(frozen=True)
class EkmInstance:
    x: InfiniteWordSource | Word
    N: int
    N0: int
    M: int
    m1: int
    m2: int

    def __post_init__(self):
        if not (self.M <= self.m1 < self.m2):
            raise EkmError("need M <= m1 < m2")
        if not (self.N >= self.N0 >= 1):
            raise EkmError("need N >= N0 >= 1")
        if window(self.x, self.N, self.m1) != window(self.x, self.N, self.m2):
            raise EkmError(f"windows at m1={self.m1} and m2={self.m2} differ")

    @property
    def bound_exceeds_N(self) -> bool:
        return self.m2 > self.N


@dataclass(frozen=True)
class EkmCertificate:
    K: int
    Nprime: int
    p: int
    m3: int
    distinct_ok: bool
    prefix_ok: bool
    fallback_used: bool

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def verify_conditions(x: InfiniteWordSource | Word, K: int, N: int, N0: int, M: int) -> tuple[bool, bool]:
    """Brute-force check of both conditions at ``K``."""
    top = K + N - N0
    seg = window(x, max(top, N) + N, 0)
    seen = set()
    distinct_ok = True
    for k in range(K, top + 1):
        w = seg[k:k + N]
        if w in seen:
            distinct_ok = False
            break
        seen.add(w)
    early = {seg[l:l + N0] for l in range(M, N + 1)}
    prefix_ok = all(seg[k:k + N0] in early for k in range(K, top))
    return distinct_ok, prefix_ok


def locate_K(inst: EkmInstance, cap: int) -> EkmCertificate:
    """Certificate for a valid K >= m2: the constructive candidate, else the smallest one found by scanning.

    ``N'`` is the longest run of period ``m2 - m1`` starting at ``m1``,
    ``p`` its minimal period and ``m3 = m1 + N' - N - p``.  The windows at
    ``m3`` and ``m3 + p`` both lie inside the periodic run and coincide, so
    the first start whose ``p``-shift leaves the run is ``m3 + 1``; the
    candidate ``max(m3 + 1, m2)`` is checked first.  If it fails, K is
    scanned upward from ``m2`` to ``cap``.
    """
    x, N, N0, M = inst.x, inst.N, inst.N0, inst.M
    shift = inst.m2 - inst.m1
    n_prime = longest_periodic_extension(x, inst.m1, shift, cap)
    if n_prime >= cap:
        raise EkmError(f"period {shift} survives to cap={cap} from m1={inst.m1}; increase cap "
                       "(or the source is eventually periodic)")
    p = minimal_period(window(x, n_prime, inst.m1))
    m3 = inst.m1 + n_prime - N - p
    first = max(m3 + 1, inst.m2)
    d_ok, p_ok = verify_conditions(x, first, N, N0, M)
    if d_ok and p_ok:
        return EkmCertificate(first, n_prime, p, m3, True, True, False)
    for K in range(inst.m2, cap + 1):
        d_ok, p_ok = verify_conditions(x, K, N, N0, M)
        if d_ok and p_ok:
            return EkmCertificate(K, n_prime, p, m3, True, True, True)
    raise EkmError(f"no K in [{inst.m2}, {cap}] satisfies both conditions "
                   f"(N={N}, N0={N0}, M={M}, m1={inst.m1}, m2={inst.m2}, N'={n_prime}, p={p}, m3={m3})")
