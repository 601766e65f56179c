from fractions import Fraction

import pytest

from renyi.errors import InvalidBunchError
from renyi.measures import Bunch, FiniteMeasure, Law
from renyi.renyi import (RenyiFamily, all_subsets, check_renyi_consistency, renyi_campaign,
                         renyi_family_from_law, uniform_line_check)
from renyi.spaces import FiniteSpace


def _law(ws):
    return Law.of(FiniteMeasure(FiniteSpace(tuple(range(len(ws)))), tuple(map(Fraction, ws))))


def test_family_from_law_is_consistent():
    law = _law([1, 2, 0, 3])
    fam = renyi_family_from_law(law, Bunch.of(law, [{0}, {0, 1}, {0, 1, 2, 3}]))
    rep = check_renyi_consistency(fam, all_subsets(law.space))
    assert rep.exact_zero and rep.checked == 3 * 16


def test_inconsistent_family_is_caught():
    law = _law([1, 1, 1])
    bunch = Bunch.of(law, [{0, 1}, {0, 1, 2}])
    good = renyi_family_from_law(law, bunch)
    skewed = FiniteMeasure(law.space, (Fraction(2, 3), Fraction(1, 3), Fraction(0)))
    bad = RenyiFamily(bunch, (skewed, good.conditionals[1]))
    rep = check_renyi_consistency(bad, all_subsets(law.space))
    assert rep.max_violation == Fraction(1, 9)


def test_family_needs_positive_finite_sets():
    law = _law([1, 0])
    with pytest.raises(InvalidBunchError):
        Bunch.of(law, [{1}])


def test_campaign_is_exact():
    r = renyi_campaign(cases=20, seed=3)
    assert r.passed and r.checked > 0


def test_uniform_line_triple():
    rep = uniform_line_check()
    assert rep.max_violation <= 1e-12 and rep.checked == 1
