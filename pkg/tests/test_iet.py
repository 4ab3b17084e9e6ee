from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subshift_lab.complexity import build_index
from subshift_lab.iet import (
    IETError, IETSpec, cell_words, code_orbit, complexity_experiment, cylinder_lengths,
    empirical_measure_lift, idoc_check, random_iet, rotation_iet,
)

from oracles import naive_iet_apply, naive_iet_coding


@st.composite
def iets(draw, k_max=5):
    k = draw(st.integers(1, k_max))
    lengths = [Fraction(draw(st.integers(1, 50)), draw(st.integers(1, 50))) for _ in range(k)]
    perm = draw(st.permutations(list(range(1, k + 1))))
    return IETSpec(tuple(lengths), tuple(perm))


def test_apply_examples():
    ident = IETSpec((Fraction(1, 2), Fraction(1, 2)), (1, 2))
    assert ident.apply(Fraction(3, 7)) == Fraction(3, 7)
    swap = IETSpec((Fraction(1, 3), Fraction(2, 3)), (2, 1))
    assert swap.apply(Fraction(0)) == Fraction(2, 3)
    with pytest.raises(IETError):
        swap.apply(Fraction(1))
    with pytest.raises(IETError):
        swap.apply(Fraction(-1, 5))


def test_spec_validation_and_json_roundtrip():
    with pytest.raises(IETError):
        IETSpec((Fraction(1, 2), Fraction(0)), (2, 1))
    with pytest.raises(IETError):
        IETSpec((Fraction(1, 2), Fraction(1, 2)), (1, 1))
    spec = random_iet(4, np.random.default_rng(1))
    assert IETSpec.from_json(spec.to_json()) == spec
    with pytest.raises(IETError):
        IETSpec.from_json({"k": 3, "lengths": ["1/2", "1/2"], "perm": [2, 1]})
    with pytest.raises(IETError):
        IETSpec.from_json({"lengths": ["1"], "perm": [1], "extra": 0})


@settings(max_examples=150, deadline=None)
@given(iets(), st.data())
def test_apply_matches_definition_and_is_bijective(spec, data):
    x = data.draw(st.fractions(0, spec.total).filter(lambda v: v < spec.total))
    y = spec.apply(x)
    assert y == naive_iet_apply(list(spec.lengths), list(spec.perm), x)
    assert spec.apply_inverse(y) == x


@settings(max_examples=60, deadline=None)
@given(iets(4), st.data())
def test_coding_matches_naive(spec, data):
    x = data.draw(st.fractions(0, spec.total).filter(lambda v: v < spec.total))
    assert code_orbit(spec, x, 40).symbols == naive_iet_coding(list(spec.lengths), list(spec.perm), x, 40)


def test_coding_examples():
    ident = IETSpec((Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)), (1, 2, 3))
    assert code_orbit(ident, Fraction(1, 2), 20).symbols == bytes([2]) * 20
    spec = random_iet(3, np.random.default_rng(7))
    w = code_orbit(spec, Fraction(1, 3), 1000).symbols
    counts = build_index(w).counts(50)
    assert all(counts[n] <= 2 * n + 1 for n in range(1, 51))


def test_idoc_examples():
    rational = IETSpec((Fraction(1, 4), Fraction(3, 4)), (2, 1))
    rep = idoc_check(rational, 10)
    assert not rep.ok and rep.witness[1] <= 4
    assert "fails" in rep.describe()
    assert idoc_check(random_iet(3, np.random.default_rng(0)), 1000).ok
    assert idoc_check(IETSpec((Fraction(1),), (1,)), 5).ok
    with pytest.raises(IETError):
        idoc_check(rational, 0)


@settings(max_examples=40, deadline=None)
@given(iets(4))
def test_cells_cover_domain_and_match_codings(spec):
    depth = 6
    cells = cell_words(spec, depth)
    assert sum(b - a for a, b, _ in cells) == spec.total
    assert all(a < b for a, b, _ in cells)
    for a, b, w in cells:
        mid = (a + b) / 2
        assert code_orbit(spec, mid, depth).symbols == w
    # the cylinder masses of each length form a probability vector
    cyl = cylinder_lengths(spec, 3)
    for ell in (1, 2, 3):
        assert sum(v for w, v in cyl.items() if len(w) == ell) == 1


@pytest.mark.parametrize("k", [2, 4])
def test_complexity_exact_under_idoc(k):
    spec = random_iet(k, np.random.default_rng(k))
    exp = complexity_experiment(spec, 100)
    assert exp.idoc.ok and exp.mode == "exact" and exp.passed
    assert exp.profile.values() == [(k - 1) * n + 1 for n in range(1, 101)]


def test_complexity_upper_bound_without_idoc():
    exp = complexity_experiment(IETSpec((Fraction(1, 4), Fraction(3, 4)), (2, 1)), 40, orbit_budget=20)
    assert not exp.idoc.ok and exp.mode == "upper bound" and exp.passed
    assert all(p <= n + 1 for n, p in enumerate(exp.profile.values(), 1))
    assert exp.profile.counts[40] == 4  # the orbit has period 4


def test_measure_lift_examples():
    ident = IETSpec((Fraction(1, 3), Fraction(2, 3)), (1, 2))
    lift = empirical_measure_lift(ident, Fraction(1, 2), 100, 1)
    assert lift.measure(bytes([2])) == 1 and lift.measure(bytes([1])) == 0
    rot = rotation_iet(Fraction(233, 610))
    lift = empirical_measure_lift(rot, Fraction(0), 10**5, 1)
    assert abs(lift.measure(bytes([1])) - rot.lengths[0]) < Fraction(1, 1000)
    spec = random_iet(3, np.random.default_rng(5))
    lift = empirical_measure_lift(spec, Fraction(1, 5), 10**4, 2, tol=Fraction(1, 100))
    assert sum(lift.measure(bytes([i])) for i in (1, 2, 3)) == 1
    assert lift.within_tol
