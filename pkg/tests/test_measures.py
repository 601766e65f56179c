import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renyi.errors import IncomparableError, NonNormalizableError, NullEventError, ResolutionError
from renyi.measures import (Bunch, FiniteMeasure, GridMeasure, Law, condition_on_event, marginal, mass,
                            proportional)
from renyi.spaces import Axis, Box, FiniteSpace, GriddedSpace

weights = st.lists(st.fractions(min_value=0, max_value=20, max_denominator=7), min_size=1, max_size=8)


def finite(ws):
    return FiniteMeasure(FiniteSpace(tuple(range(len(ws)))), tuple(ws))


def lebesgue_line(cells=32):
    space = GriddedSpace((Axis("x", -4, 4, cells, "linear", True, True),))
    return GridMeasure.from_function(space, lambda x: np.ones_like(x))


def test_law_canonical_mass_is_one():
    law = Law.of(finite([Fraction(1), Fraction(3)]))
    assert law.mass() == 1
    assert law.rep.weights == (Fraction(1, 4), Fraction(3, 4))


def test_law_with_infinite_atom_calibrates_on_finite_part():
    law = Law.of(finite([Fraction(2), math.inf, Fraction(2)]))
    assert law.rep.weights[0] == Fraction(1, 2)
    assert law.mass({1}) == math.inf


def test_all_infinite_law_has_no_calibration():
    law = Law.of(finite([math.inf, math.inf]))
    assert law.calibration is None


def test_explicit_calibration():
    law = Law.of(finite([Fraction(1), Fraction(3)]), calibration={1})
    assert law.mass({1}) == 1 and law.mass() == Fraction(4, 3)
    with pytest.raises(NullEventError):
        Law.of(finite([Fraction(0), Fraction(3)]), calibration={0})


@settings(max_examples=60)
@given(weights, st.sampled_from([Fraction(1, 2), Fraction(3), Fraction(1000)]))
def test_scaling_leaves_the_law_unchanged(ws, c):
    if not any(ws):
        ws = ws + [Fraction(1)]
    m = finite(ws)
    a, b = Law.of(m), Law.of(m.scaled(c))
    assert a.rep.weights == b.rep.weights
    assert proportional(a, m, 0.0).proportional


@settings(max_examples=60)
@given(weights, st.data())
def test_mass_is_additive_on_disjoint_sets(ws, data):
    m = finite(ws)
    pts = list(range(len(ws)))
    a = set(data.draw(st.lists(st.sampled_from(pts), unique=True)))
    b = set(pts) - a
    assert mass(m, a) + mass(m, b) == mass(m)


@settings(max_examples=60)
@given(weights, st.data())
def test_elementary_conditioning(ws, data):
    m = finite(ws)
    pts = list(range(len(ws)))
    b = set(data.draw(st.lists(st.sampled_from(pts), min_size=1, unique=True)))
    a = set(data.draw(st.lists(st.sampled_from(pts), unique=True)))
    law = Law.of(m) if any(ws) else None
    if law is None or law.mass(b) == 0:
        return
    assert law.probability(a, b) * law.mass(b) == law.mass(a & b)


def test_conditioning_on_null_or_infinite_event_fails():
    law = Law.of(finite([Fraction(0), Fraction(1), math.inf]))
    with pytest.raises(NullEventError):
        condition_on_event(law, {0})
    with pytest.raises(NonNormalizableError):
        condition_on_event(law, {2})


def test_grid_mass_of_box_and_open_box():
    m = lebesgue_line()
    assert mass(m, Box(x=(0, 1))) == pytest.approx(1.0)
    assert mass(m, Box(x=(0, math.inf))) == math.inf


def test_open_box_with_convergent_tail():
    space = GriddedSpace((Axis.geometric("lam", 2.0 ** -8, 2.0 ** 8, 256),))
    m = GridMeasure.from_function(space, lambda l: np.exp(-l))
    assert mass(m, Box(lam=(0, math.inf))) == pytest.approx(1.0, abs=1e-9)


def test_finite_box_outside_truncation_is_rejected():
    with pytest.raises(ResolutionError):
        mass(lebesgue_line(), Box(x=(0, 6)))


def test_proportional_detects_constant_and_mismatch():
    s = GriddedSpace((Axis("x", 0, 1, 8),))
    a = GridMeasure.from_function(s, lambda x: 1 + x)
    b = a.scaled(3.0)
    p = proportional(a, b)
    assert p.proportional and p.constant == pytest.approx(3.0)
    c = GridMeasure.from_function(s, lambda x: 1 + x * x)
    assert not proportional(a, c).proportional
    z = GridMeasure(s, np.where(np.arange(8) < 4, 1.0, 0.0))
    q = proportional(GridMeasure(s, np.ones(8)), z)
    assert not q.proportional and q.spread == math.inf
    with pytest.raises(IncomparableError):
        proportional(GridMeasure(s, np.zeros(8)), z)


def test_proportional_exact_for_rationals():
    a = finite([Fraction(1), Fraction(2)])
    assert proportional(a, a.scaled(Fraction(5, 3)), 0.0).constant == Fraction(5, 3)
    assert not proportional(a, finite([Fraction(1), Fraction(2) + Fraction(1, 10 ** 30)]), 0.0)


def test_grid_marginal_matches_analytic():
    s = GriddedSpace((Axis.geometric("x", 2.0 ** -8, 2.0 ** 8, 128), Axis("y", 0, 1, 16)))
    law = Law.of(GridMeasure.from_function(s, lambda x, y: np.exp(-x) * (1 + y)))
    m = marginal(law, ["y"])
    oracle = GridMeasure.from_function(GriddedSpace((s.axes[1],)), lambda y: 1 + y)
    assert proportional(m, oracle, 1e-9).proportional


def test_marginal_of_lebesgue_plane_is_infinite():
    s = GriddedSpace(tuple(Axis(n, -4, 4, 8, "linear", True, True) for n in "xy"))
    law = Law.of(GridMeasure.from_function(s, lambda x, y: np.ones(np.broadcast_shapes(x.shape, y.shape))))
    m = marginal(law, ["y"])
    assert np.all(np.isinf(m.density)) and m.calibration is None


def test_finite_marginal():
    s = FiniteSpace(((0, "a"), (0, "b"), (1, "a")))
    law = Law.of(FiniteMeasure(s, (Fraction(1), Fraction(2), Fraction(3))))
    m = marginal(law, [0])
    assert m.rep.as_dict() == {0: Fraction(1, 2), 1: Fraction(1, 2)}


def test_bunch_validation():
    m = finite([Fraction(1), Fraction(0), Fraction(2)])
    b = Bunch.of(m, [{0}, {0, 1, 2}])
    assert b.masses == (1, 3) and b.covers(m.space)
    with pytest.raises(Exception):
        Bunch.of(m, [{1}])
    with pytest.raises(Exception):
        Bunch.of(m, [{0, 2}, {0}])
