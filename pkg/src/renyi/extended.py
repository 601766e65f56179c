"""Arithmetic on extended masses: nonnegative reals together with +inf.

Masses are plain Python numbers (``int``, ``Fraction`` or ``float``); +inf is
``math.inf``.  The helpers below enforce the one rule plain floats get wrong:
``0 * inf`` is an error, never silently ``nan`` or ``0``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Real
from typing import Iterable

from .errors import InfiniteTimesZeroError

INF = math.inf


def is_inf(value: Real) -> bool:
    return isinstance(value, float) and value == INF


def check(value: Real) -> Real:
    """Validate an extended mass and return it unchanged."""
    if isinstance(value, float) and math.isnan(value):
        raise ValueError("mass is nan")
    if value < 0:
        raise ValueError(f"mass must be nonnegative, got {value!r}")
    return value


def add(a: Real, b: Real) -> Real:
    check(a)
    check(b)
    if is_inf(a) or is_inf(b):
        return INF
    return a + b


def scale(c: Real, value: Real) -> Real:
    """Multiply an extended mass by a nonnegative scalar."""
    check(value)
    if c < 0:
        raise ValueError(f"scale factor must be nonnegative, got {c!r}")
    if is_inf(value) or is_inf(c):
        if c == 0 or value == 0:
            raise InfiniteTimesZeroError("0 * inf is undefined for extended masses")
        return INF
    return c * value


def total(values: Iterable[Real]) -> Real:
    """Sum of extended masses.

    Exact when every term is an ``int`` or ``Fraction``; compensated
    (``math.fsum``) otherwise, so the result does not depend on term order.
    """
    values = list(values)
    exact = True
    for v in values:
        check(v)
        if is_inf(v):
            return INF
        if not isinstance(v, (int, Fraction)):
            exact = False
    if exact:
        return sum(values, Fraction(0))
    return math.fsum(float(v) for v in values)
