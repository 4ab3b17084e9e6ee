"""Generalized suffix automaton kernel (numba).

Symbols must already be compacted to ``0 .. sigma - 1``.  Several strings
can be inserted; each one restarts from the root, so the automaton
recognises exactly the union of their factor sets.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def build_automaton(sym, starts, ends, sigma):
    total = 0
    for s in range(len(starts)):
        total += ends[s] - starts[s]
    cap = 2 * total + 2
    length = np.zeros(cap, np.int64)
    link = np.full(cap, -1, np.int64)
    nxt = np.full((cap, sigma), -1, np.int32)
    size = 1
    for s in range(len(starts)):
        last = 0
        for pos in range(starts[s], ends[s]):
            c = sym[pos]
            q = nxt[last, c]
            if q != -1:
                # symbol already readable from `last` (only when strings share factors)
                if length[q] == length[last] + 1:
                    last = q
                    continue
                clone = size
                size += 1
                length[clone] = length[last] + 1
                for a in range(sigma):
                    nxt[clone, a] = nxt[q, a]
                link[clone] = link[q]
                link[q] = clone
                p = last
                while p != -1 and nxt[p, c] == q:
                    nxt[p, c] = clone
                    p = link[p]
                last = clone
                continue
            cur = size
            size += 1
            length[cur] = length[last] + 1
            p = last
            while p != -1 and nxt[p, c] == -1:
                nxt[p, c] = cur
                p = link[p]
            if p == -1:
                link[cur] = 0
            else:
                q = nxt[p, c]
                if length[p] + 1 == length[q]:
                    link[cur] = q
                else:
                    clone = size
                    size += 1
                    length[clone] = length[p] + 1
                    for a in range(sigma):
                        nxt[clone, a] = nxt[q, a]
                    link[clone] = link[q]
                    while p != -1 and nxt[p, c] == q:
                        nxt[p, c] = clone
                        p = link[p]
                    link[q] = clone
                    link[cur] = clone
            last = cur
    return length[:size].copy(), link[:size].copy(), nxt[:size].copy()


def counts_per_length(length: np.ndarray, link: np.ndarray, max_len: int) -> np.ndarray:
    """``out[n]`` = number of distinct factors of length ``n`` (``out[0] = 1``).

    Each non-root state owns the lengths ``(len(link), len]``; a difference
    array over those intervals gives all counts in linear time.
    """
    diff = np.zeros(max_len + 2, dtype=np.int64)
    lo = length[link[1:]] + 1
    hi = length[1:]
    np.add.at(diff, lo, 1)
    np.add.at(diff, hi + 1, -1)
    out = np.cumsum(diff)[:max_len + 1]
    out[0] = 1
    return out
