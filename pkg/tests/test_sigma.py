import math
from fractions import Fraction

import numpy as np
import pytest

from renyi.measures import FiniteMeasure, GridMeasure, Law, mass
from renyi.sigma import Kind, sigma_finiteness_probe
from renyi.spaces import Axis, FiniteSpace, GriddedSpace

LAM = Axis.geometric("lam", 2.0 ** -8, 2.0 ** 8, 256)


def grid(fn, axes=(LAM,)):
    return GridMeasure.from_function(GriddedSpace(tuple(axes)), fn)


def test_exponential_is_finite_with_total_one():
    v = sigma_finiteness_probe(grid(lambda l: np.exp(-l)))
    assert v.kind is Kind.FINITE and v.proper
    assert v.total == pytest.approx(1.0, abs=1e-8)


def test_scale_density_is_sigma_finite_at_both_ends():
    v = sigma_finiteness_probe(grid(lambda l: 1 / l))
    assert v.kind is Kind.SIGMA_FINITE and v.sigma_finite and not v.proper
    assert set(v.diagnostics["divergent_ends"]) == {"lam:low", "lam:high"}
    w = v.witness
    assert all(0 < m < math.inf for m in w.masses)
    assert list(w.masses) == sorted(w.masses)
    # witness sets carry the recorded finite masses
    assert mass(grid(lambda l: 1 / l), w.sets[0]) == pytest.approx(w.masses[0])


def test_improper_at_zero_only():
    v = sigma_finiteness_probe(grid(lambda l: np.exp(-l) / l))
    assert v.kind is Kind.SIGMA_FINITE
    assert v.diagnostics["divergent_ends"] == ["lam:low"]
    incs = v.diagnostics["ends"]["lam:low"]["increments"]
    assert incs[-1] == pytest.approx(math.log(2), rel=1e-3)


def test_power_growth_is_reported():
    ax = Axis("x", -4, 4, 16, "linear", True, True)
    v = sigma_finiteness_probe(grid(lambda x: np.ones_like(x), (ax,)))
    assert v.kind is Kind.SIGMA_FINITE and v.diagnostics["trend"] == "power"


def test_infinite_cells_are_divergent():
    s = GriddedSpace((Axis("x", 0, 1, 4),))
    v = sigma_finiteness_probe(GridMeasure(s, np.array([1.0, np.inf, 1.0, 1.0])))
    assert v.kind is Kind.DIVERGENT and not v.sigma_finite
    f = FiniteMeasure(FiniteSpace((0, 1)), (Fraction(1), math.inf))
    assert sigma_finiteness_probe(f).kind is Kind.DIVERGENT


def test_closed_grid_and_finite_space_are_finite():
    s = GriddedSpace((Axis("x", 0, 1, 4),))
    assert sigma_finiteness_probe(GridMeasure(s, np.ones(4))).kind is Kind.FINITE
    v = sigma_finiteness_probe(Law.of(FiniteMeasure(FiniteSpace((0, 1)), (Fraction(1), Fraction(2)))))
    assert v.kind is Kind.FINITE and v.total == 1


def test_missing_density_function_is_inconclusive():
    s = GriddedSpace((Axis("x", 0, 1, 4, "linear", True, True),))
    v = sigma_finiteness_probe(GridMeasure(s, np.ones(4)))
    assert v.kind is Kind.INCONCLUSIVE


def test_verdict_to_dict_is_plain():
    d = sigma_finiteness_probe(grid(lambda l: 1 / l)).to_dict()
    assert d["kind"] == "sigma-finite" and len(d["witness"]["sets"]) == len(d["witness"]["masses"])
