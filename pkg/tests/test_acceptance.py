"""One test per acceptance criterion; each prints a PASS/FAIL line in the summary."""
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import naive_window_classes
from subshift_lab import cli
from subshift_lab.complexity import build_index, profile, ratio_extrema, stable_profile
from subshift_lab.ekm import EkmInstance, find_repeat, locate_K
from subshift_lab.iet import IETSpec, complexity_experiment, random_iet
from subshift_lab.measures import empirical_measure, generic_bound_consistent, generic_candidate_count
from subshift_lab.sturmian import RotationParams, SturmianSource, UnionShiftSpec, union_complexity
from subshift_lab.tower import (
    ConstructionParams, TowerError, block_source, build_tower, deepen, emit_prefix, language_profile,
    probe_complexity_dip, ratio_peak, verify_constraints, verify_letter_frequency,
)


def report(n: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.append(f"criterion {n}: {'PASS' if ok else 'FAIL'} {title} ({detail})")
    assert ok, detail


def test_criterion_1_sturmian_complexity():
    t0 = time.perf_counter()
    bad = []
    for cf in ("0;2,1x40", "0;1,2x30", "0;3,1,4,1,5,9,2,6x20"):
        prof = stable_profile(SturmianSource(RotationParams.from_text(cf)), 2000)
        if prof.values() != [n + 1 for n in range(1, 2001)]:
            bad.append(cf)
    dt = time.perf_counter() - t0
    report(1, "Sturmian P(n) = n + 1, n <= 2000, three CFs", not bad and dt < 30,
           f"mismatching CFs {bad}, {dt:.1f}s of 30s")


def test_criterion_2_union_complexity():
    t0 = time.perf_counter()
    base = RotationParams.from_text("0;2,1x40")
    bad = [d for d in (2, 3, 5) if not union_complexity(UnionShiftSpec(d, base), 500).matches]
    dt = time.perf_counter() - t0
    report(2, "union of d copies P(n) = d n + d, d in {2,3,5}, n <= 500", not bad and dt < 30,
           f"failing d {bad}, {dt:.1f}s of 30s")


def test_criterion_3_iet_complexity():
    t0 = time.perf_counter()
    notes = []
    ok = True
    for k in (2, 3, 4):
        exp = complexity_experiment(random_iet(k, np.random.default_rng(100 + k)), 500)
        exact = exp.profile.values() == [(k - 1) * n + 1 for n in range(1, 501)]
        ok &= exp.idoc.ok and exp.idoc.depth >= 500 and exact
        notes.append(f"k={k} idoc={exp.idoc.ok} exact={exact}")
    rational = complexity_experiment(IETSpec((Fraction(2, 5), Fraction(3, 5)), (2, 1)), 500, orbit_budget=50)
    upper = all(p <= n + 1 for n, p in enumerate(rational.profile.values(), 1))
    ok &= upper and not rational.idoc.ok
    dt = time.perf_counter() - t0
    notes.append(f"rational 2-IET bounded={upper}")
    report(3, "IET P(n) = (k-1) n + 1 under IDOC to depth 500", ok and dt < 60, f"{'; '.join(notes)}, {dt:.1f}s of 60s")


def test_criterion_4_sharp_tower():
    t0 = time.perf_counter()
    t = build_tower(ConstructionParams.default(2, 2))
    failed = [c.name for c in verify_constraints(t) if not c.ok]
    freq = verify_letter_frequency(t)
    freq_ok = all(e.frequency >= e.bound and e.frequency > Fraction(1, 2) for e in freq)
    deep = deepen(t, 3)
    prefix = emit_prefix(deep, 10**6)
    prof = language_profile(t, 5 * 10**5)
    probes, skipped = [], []
    for j in (1, 2):
        for i in (1, 2):
            try:
                probes.append(probe_complexity_dip(t, j, i, prof))
            except TowerError:
                skipped.append((i, j))
    probe_ok = bool(probes) and all(p.ratio <= 2 + 2 * t.params.delta[p.j - 1] for p in probes)
    n_peak, peak = ratio_peak(prof)
    dt = time.perf_counter() - t0
    ok = not failed and freq_ok and probe_ok and peak >= Fraction(5, 2) and len(prefix) == 10**6 and dt < 600
    probe_txt = ", ".join(f"n*={p.n_star} ratio={float(p.ratio):.3f}<={float(p.bound):g}" for p in probes)
    report(4, "tower d=2 J=2: constraints, frequencies, dip probes, peak >= 5/2", ok,
           f"(a) {len(failed)} failed constraints; (b) min freq {float(min(e.frequency for e in freq)):.4f}; "
           f"(c) {probe_txt}; probes beyond n=5e5 not computed: {skipped}; "
           f"(d) peak {float(peak):.3f} at n={n_peak}; {dt:.1f}s of 600s")


def _naive_ekm_check(w: bytes, K: int, N: int, N0: int, M: int) -> bool:
    ws = [w[k:k + N] for k in range(K, K + N - N0 + 1)]
    early = {w[l:l + N0] for l in range(M, N + 1)}
    return len(set(ws)) == len(ws) and all(w[k:k + N0] in early for k in range(K, K + N - N0))


def test_criterion_5_ekm():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    passed = total = 0
    Ns = set()
    while total < 100:
        src = SturmianSource(RotationParams(tuple(int(a) for a in rng.integers(1, 6, 30))))
        N = int(rng.integers(5, 41))
        N0 = int(rng.integers(2, N))
        M = int(rng.integers(0, 4))
        rep = find_repeat(src, N, M, N)
        if rep is None:
            continue
        total += 1
        Ns.add(N)
        cert = locate_K(EkmInstance(src, N, N0, M, *rep), 200000)
        passed += _naive_ekm_check(src.prefix(cert.K + 2 * N), cert.K, N, N0, M)
    dt = time.perf_counter() - t0
    report(5, "EKM certificates pass brute force on 100 Sturmian instances", passed == 100 and dt < 60,
           f"{passed}/100 verified, {len(Ns)} distinct N, {dt:.1f}s of 60s")


def test_criterion_6_measure_clustering():
    t0 = time.perf_counter()
    t = build_tower(ConstructionParams.default(2, 2))
    wins = [empirical_measure(block_source(t, i, 2), 0, 20000, 2) for i in (1, 2)]
    cl = generic_candidate_count(wins, 1, Fraction(1, 10))
    ext = ratio_extrema(language_profile(t, 20000), 1)
    consistent = ext.min_ratio < 3 and generic_bound_consistent(cl.count, ext.min_ratio, 3)
    dt = time.perf_counter() - t0
    report(6, "tower deep-block windows form 2 clusters at tau = 1/10; bound consistent",
           cl.count == 2 and consistent and dt < 120,
           f"{cl.count} clusters, min ratio {float(ext.min_ratio):.3f} at n={ext.argmin}, {dt:.1f}s of 120s")


def _random_prefixes(rng):
    out = []
    for _ in range(20):
        out.append(rng.integers(0, int(rng.integers(2, 5)), 10**4, dtype=np.uint8).tobytes())
    for _ in range(20):
        params = RotationParams(tuple(int(a) for a in rng.integers(1, 5, 40)), Fraction(int(rng.integers(0, 97)), 97))
        start = int(rng.integers(0, 10**5))
        out.append(SturmianSource(params).prefix(start + 10**4)[start:])
    deep = deepen(build_tower(ConstructionParams.default(2, 2)), 3)
    for _ in range(10):
        start = int(rng.integers(0, 10**6))
        out.append(emit_prefix(deep, start + 10**4)[start:])
    return out


def test_criterion_7_oracle_equivalence():
    rng = np.random.default_rng(7)
    prefixes = _random_prefixes(rng)
    t0 = time.perf_counter()
    bad = [i for i, w in enumerate(prefixes)
           if list(build_index(w).counts(1000)) != naive_window_classes(w, 1000)]
    dt = time.perf_counter() - t0
    report(7, "suffix automaton counts equal naive window counts, 50 prefixes of 10^4, n <= 1000",
           len(prefixes) == 50 and not bad and dt < 60, f"mismatches at {bad}, {dt:.1f}s of 60s")


def test_criterion_8_performance():
    w = SturmianSource(RotationParams.from_text("0;2,1x40")).prefix(10**6)
    t0 = time.perf_counter()
    prof = profile(build_index(w), 10**4)
    dt = time.perf_counter() - t0
    report(8, "index of 10^6 symbols plus profile to n = 10^4", dt < 60 and prof[10**4] == 10**4 + 1,
           f"{dt:.2f}s of 60s on this machine")


def test_criterion_9_determinism(tmp_path):
    t0 = time.perf_counter()
    differing = []
    for sub in sorted(cli.COMMANDS):
        a, b = tmp_path / sub / "a", tmp_path / sub / "b"
        cli.run(sub, None, a, seed=11)
        cli.run(sub, None, b, seed=11)
        fa = {p.name: p.read_bytes() for p in a.iterdir()}
        fb = {p.name: p.read_bytes() for p in b.iterdir()}
        if fa != fb or not fa:
            differing.append(sub)
    dt = time.perf_counter() - t0
    report(9, "every subcommand reruns byte-identically with a fixed seed", not differing,
           f"differing: {differing}, {len(cli.COMMANDS)} subcommands, {dt:.1f}s")
