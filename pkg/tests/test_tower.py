import io
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from subshift_lab.complexity import build_index
from subshift_lab.tower import (
    ConstructionParams, TowerError, block_source, build_tower, deepen, default_kappa, emit_prefix,
    language_profile, probe_complexity_dip, tower_from_json, verify_constraints, verify_letter_frequency,
    verify_syndetic, write_prefix,
)
from subshift_lab.word_core import frequency, occurrences, syndetic_gap

from oracles import naive_factor_counts, tower_words_from_runs

SMALL = ConstructionParams(2, 2, (Fraction(3, 5), Fraction(9, 10)), (Fraction(9, 10), Fraction(4, 5)))
TERNARY = ConstructionParams(3, 1, (Fraction(3, 5),), (Fraction(9, 10),))


@pytest.fixture(scope="module")
def default2():
    return build_tower(ConstructionParams.default(2, 2))


def runs_of(tower):
    return {(i, j): [tower.N(j, i, k) for k in range(1, tower.d + 1)]
            for i in range(1, tower.d + 1) for j in range(1, tower.J + 1)}


def test_level_one_example():
    t = build_tower(ConstructionParams(2, 1, (Fraction(9, 10),), (Fraction(1, 2),)))
    assert t.flatten(1, 1) == bytes([1] * 10 + [2])
    assert t.N(1, 1, 1) == 10
    assert (t.N(1, 2, 1), t.N(1, 2, 2), t.length(2, 1)) == (55, 496, 551)
    assert 11 < Fraction(55, 4) < Fraction(496, 16) and 496 > Fraction(9, 10) * 551
    freqs = {(e.i, e.j): e.frequency for e in verify_letter_frequency(t)}
    assert freqs[(1, 1)] == Fraction(10, 11)
    # the 55-letter block repeats w_1^1 five times, adding five more 2s
    assert freqs[(2, 1)] == Fraction(501, 551) == frequency(t.flatten(2, 1), bytes([2]))


def test_infeasible_and_invalid_schedules():
    with pytest.raises(TowerError, match="infeasible"):
        build_tower(ConstructionParams(2, 1, (Fraction(1),), (Fraction(1, 2),)))
    with pytest.raises(TowerError):
        ConstructionParams(2, 2, (Fraction(7, 10), Fraction(7, 10)), (Fraction(1, 2), Fraction(1, 4)))
    with pytest.raises(TowerError):
        ConstructionParams(2, 2, (Fraction(9, 10),) * 2, (Fraction(1, 4), Fraction(1, 2)))
    with pytest.raises(TowerError):
        ConstructionParams(1, 1, (Fraction(9, 10),), (Fraction(1, 2),))
    with pytest.raises(TowerError):
        ConstructionParams(2, 0, (), ())


def test_budget_error_names_block():
    with pytest.raises(TowerError, match=r"N\^\[2\]_\(2,"):
        build_tower(ConstructionParams.default(2, 2), budget=10**6)


def test_default_kappa_product():
    ks = [default_kappa(j) for j in range(1, 11)]
    assert all(Fraction(k) ** (1 << (j + 1)) >= Fraction(1, 2) for j, k in enumerate(ks, 1))
    assert math.prod(ks) > Fraction(1, 2)
    assert float(math.prod(ks)) == pytest.approx(2 ** (-0.5 + 2.0 ** -11), abs=1e-6)


@pytest.mark.parametrize("params", [SMALL, TERNARY, ConstructionParams.default(2, 2), ConstructionParams.default(3, 1)])
def test_constraints_and_flattening_oracle(params):
    t = build_tower(params)
    bad = [c for c in verify_constraints(t) if not c.ok]
    assert not bad
    assert all(e.ok for e in verify_letter_frequency(t))
    ref = tower_words_from_runs(t.d, runs_of(t), t.J)
    for (i, j), w in ref.items():
        if len(w) <= 10**6:
            assert t.flatten(i, j) == w
            assert tuple(w.count(c) for c in range(1, t.d + 1)) == t.letter_counts(i, j)


def test_json_roundtrip(default2):
    back = tower_from_json(default2.to_json())
    assert back.words == default2.words and back.params == default2.params


def test_prefix_nesting(default2):
    assert emit_prefix(default2, default2.length(1, 1)) == default2.flatten(1, 1)
    assert emit_prefix(default2, default2.length(1, 2))[:default2.length(1, 1)] == default2.flatten(1, 1)
    with pytest.raises(TowerError, match="higher J"):
        emit_prefix(default2, default2.length(1, 2) + 1)
    deep = deepen(default2, 3)
    assert emit_prefix(deep, 60000) == emit_prefix(default2, 60000)
    buf = io.BytesIO()
    assert write_prefix(deep, 3 * 10**6, buf) == 3 * 10**6
    assert buf.getvalue()[:60000] == emit_prefix(default2, 60000)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 60000), st.integers(0, 3000))
def test_slice_matches_flat(a, n):
    t = build_tower(SMALL)
    flat = t.flatten(2, 2)
    b = min(len(flat), a + n)
    a = min(a, b)
    assert t.slice(2, 2, a, b) == flat[a:b]


def test_syndetic_gaps(default2):
    entries = verify_syndetic(default2, 1)
    assert entries and all(e.ok for e in entries)
    # back-to-back copies: occurrences are |w| apart, so every window of 2|w| - 1 letters holds one
    w11 = default2.flatten(1, 1)
    run = w11 * 20
    starts = occurrences(run, w11)
    assert {b - a for a, b in zip(starts, starts[1:])} == {len(w11)}
    assert syndetic_gap(run, w11) == 2 * len(w11) - 1
    bound = max(default2.length(i, 2) for i in (1, 2))
    assert all(e.bound == bound for e in entries)


def test_language_profile_matches_naive_oracle():
    t = build_tower(SMALL)
    w1, w2 = t.flatten(1, 2), t.flatten(2, 2)
    ref = naive_factor_counts([a + b for a in (w1, w2) for b in (w1, w2)], 80)
    assert language_profile(t, 80).values() == ref[1:]


def test_prefix_factors_are_in_language():
    t = deepen(build_tower(SMALL), 3)
    pref = build_index(emit_prefix(t, 10**6)).counts(300)
    lang = language_profile(t, 300).counts
    assert all(pref[n] <= lang[n] for n in range(1, 301))


def test_dip_probe_level_one(default2):
    for i in (1, 2):
        probe = probe_complexity_dip(default2, 1, i)
        assert probe.ok and probe.bound == 3
    with pytest.raises(TowerError):
        probe_complexity_dip(default2, 3, 1)
    with pytest.raises(TowerError, match="beyond"):
        probe_complexity_dip(default2, 2, 2)


def test_block_source_favours_its_letter(default2):
    for i in (1, 2):
        w = block_source(default2, i, 2).prefix(10**5)
        assert frequency(w, bytes([i])) > Fraction(1, 2)
