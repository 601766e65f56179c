"""Bunch-indexed families of conditional probabilities (Rényi spaces)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import InvalidBunchError, NonNormalizableError, NullEventError
from .measures import Bunch, FiniteMeasure, Law, _sum, condition_on_event, resolve


@dataclass(frozen=True, eq=False)
class RenyiFamily:
    """Conditional probabilities nu(. | B) for every B of a bunch.

    ``conditionals[n]`` is a measure on the common space meant to have total
    mass 1 and to live on ``bunch.sets[n]``.
    """

    bunch: Bunch
    conditionals: tuple

    def __post_init__(self):
        if len(self.conditionals) != len(self.bunch):
            raise ValueError("one conditional per bunch element is required")


def renyi_family_from_law(law: Law, bunch: Bunch) -> RenyiFamily:
    conds = []
    for s in bunch.sets:
        try:
            conds.append(condition_on_event(law, s).rep)
        except (NullEventError, NonNormalizableError) as exc:
            raise InvalidBunchError(f"bunch element {s!r}: {exc}") from exc
    return RenyiFamily(bunch, tuple(conds))


@dataclass(frozen=True)
class RenyiReport:
    max_violation: float
    max_relative_violation: float
    max_normalization_error: float
    worst: tuple | None
    checked: int

    @property
    def exact_zero(self) -> bool:
        return self.max_violation == 0 and self.max_normalization_error == 0

    def to_dict(self) -> dict:
        return {"maxViolation": float(self.max_violation),
                "maxRelativeViolation": float(self.max_relative_violation),
                "maxNormalizationError": float(self.max_normalization_error),
                "worst": None if self.worst is None else [repr(x) for x in self.worst],
                "checked": self.checked}


def check_renyi_consistency(family: RenyiFamily, test_sets: Iterable) -> RenyiReport:
    """Check nu(A|B1) * nu(B1|B2) == nu(A ∩ B1 | B2) for every B1 ⊂ B2 and A.

    Exact on finite spaces with rational weights.  A pair with
    nu(B1|B2) == 0 counts as a violation of size 1.
    """
    conds = family.conditionals
    space = conds[0].space
    bmasks = family.bunch.masks(space)
    test_sets = list(test_sets)
    tests = [resolve(space, a).mask for a in test_sets]
    worst, max_abs, max_rel, checked = None, 0, 0, 0
    norm_err = max(abs(_sum(c.masses()) - 1) for c in conds)
    for i, j in itertools.combinations(range(len(conds)), 2):
        b1, b2 = bmasks[i], bmasks[j]
        if not np.all(b2[b1]):
            continue
        mi, mj = conds[i].masses(), conds[j].masses()
        nu_b1_b2 = _sum(mj[b1])
        if nu_b1_b2 == 0:
            max_abs = max(max_abs, 1)
            worst = (None, family.bunch.sets[i], family.bunch.sets[j])
            continue
        for a, amask in zip(test_sets, tests):
            lhs = _sum(mi[amask]) * nu_b1_b2
            rhs = _sum(mj[amask & b1])
            v = abs(lhs - rhs)
            checked += 1
            if v > max_abs:
                max_abs, worst = v, (a, family.bunch.sets[i], family.bunch.sets[j])
            if rhs > 0:
                max_rel = max(max_rel, v / rhs)
    return RenyiReport(max_abs, max_rel, norm_err, worst, checked)


def all_subsets(space) -> list[frozenset]:
    """Every subset of a finite space, as label sets."""
    pts = space.points
    return [frozenset(p for k, p in enumerate(pts) if bits >> k & 1) for bits in range(1 << len(pts))]


def random_law(rng, max_points: int = 8) -> Law:
    """A random rational law on at most ``max_points`` points (some zero weights)."""
    from .spaces import FiniteSpace
    n = rng.randint(2, max_points)
    weights = [Fraction(rng.randint(0, 9), rng.randint(1, 6)) for _ in range(n)]
    if not any(weights):
        weights[rng.randrange(n)] = Fraction(1)
    return Law.of(FiniteMeasure(FiniteSpace(tuple(range(n))), tuple(weights)))


def random_bunch(rng, law: Law) -> Bunch:
    """Every prefix of a random ordering of the points that starts at a positive point."""
    pts = list(law.space.points)
    positive = [p for p, w in zip(pts, law.rep.weights) if w > 0]
    first = rng.choice(positive)
    order = [first] + rng.sample([p for p in pts if p != first], len(pts) - 1)
    return Bunch.of(law, [frozenset(order[:k]) for k in range(1, len(order) + 1)])


@dataclass(frozen=True)
class RenyiCampaignReport:
    cases: int
    exact: int
    checked: int
    failures: tuple = ()

    @property
    def passed(self) -> bool:
        return self.exact == self.cases

    def to_dict(self) -> dict:
        return {"cases": self.cases, "exact": self.exact, "checked": self.checked,
                "failures": list(self.failures), "passed": self.passed}


def renyi_campaign(cases: int = 100, seed: int = 0, max_points: int = 8) -> RenyiCampaignReport:
    """Families generated by seeded random finite laws, checked over every subset ``A``."""
    import random
    rng = random.Random(seed)
    exact = checked = 0
    failures = []
    for case in range(cases):
        law = random_law(rng, max_points)
        family = renyi_family_from_law(law, random_bunch(rng, law))
        report = check_renyi_consistency(family, all_subsets(law.space))
        checked += report.checked
        if report.exact_zero:
            exact += 1
        else:
            failures.append(case)
    return RenyiCampaignReport(cases, exact, checked, tuple(failures))


def uniform_line_check(half_width: float = 4.0, cells: int = 32) -> RenyiReport:
    """Uniform law on the line: nu(A|B1) nu(B1|B2) = nu(A B1|B2) with A=[0,1], B1=[-2,2], B2=[-4,4]."""
    from .measures import GridMeasure
    from .spaces import Axis, Box, GriddedSpace
    space = GriddedSpace((Axis("x", -half_width, half_width, cells, "linear", True, True),))
    law = Law.of(GridMeasure.from_function(space, lambda x: np.ones_like(x)))
    bunch = Bunch.of(law, [Box(x=(-2, 2)), Box(x=(-4, 4))])
    return check_renyi_consistency(renyi_family_from_law(law, bunch), [Box(x=(0, 1))])
