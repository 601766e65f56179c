"""Measure representations, laws, elementary conditioning and marginals."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from numbers import Real
from typing import Any, Callable, Hashable, Mapping, Sequence, Union

import numpy as np

from . import extended
from .errors import (IncomparableError, InvalidBunchError, NonNormalizableError, NullEventError,
                     ResolutionError)
from .extension import (DEFAULT_PROTOCOL, DIVERGENT, UNRESOLVED, ExtensionProtocol, integrate_axis,
                        region_trace, representative_trace)
from .spaces import Box, FiniteSpace, GriddedSpace, _mesh

DEFAULT_FLOOR = 1e-300


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    """Weights on the points of a finite space (``int``, ``Fraction``, ``float`` or +inf)."""

    space: FiniteSpace
    weights: tuple

    def __post_init__(self):
        w = tuple(self.weights)
        if len(w) != len(self.space):
            raise ValueError("one weight per point is required")
        for v in w:
            extended.check(v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_dict(cls, weights: Mapping[Hashable, Real]) -> "FiniteMeasure":
        return cls(FiniteSpace(tuple(weights)), tuple(weights.values()))

    @property
    def exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in self.weights)

    def masses(self) -> np.ndarray:
        return np.array(self.weights, dtype=object)

    def as_dict(self) -> dict:
        return dict(zip(self.space.points, self.weights))

    def scaled(self, c: Real) -> "FiniteMeasure":
        return FiniteMeasure(self.space, tuple(extended.scale(c, v) for v in self.weights))

    def restricted(self, mask: np.ndarray) -> "FiniteMeasure":
        zero = 0 if self.exact else 0.0
        return FiniteMeasure(self.space, tuple(v if keep else zero for v, keep in zip(self.weights, mask)))


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Density on a gridded space, sampled at cell centres.

    ``density_fn`` (optional) evaluates the density anywhere, which is what
    lets mass computations walk past the stored truncation.  Cells with
    ``density == inf`` carry infinite mass; ``divergence`` keeps the extension
    trace that produced them.
    """

    space: GriddedSpace
    density: np.ndarray
    density_fn: Callable | None = None
    divergence: Mapping[str, Any] | None = None

    def __post_init__(self):
        d = np.asarray(self.density, dtype=float)
        if d.shape != self.space.shape:
            raise ValueError(f"density shape {d.shape} does not match space shape {self.space.shape}")
        if np.isnan(d).any() or (d < 0).any():
            raise ValueError("densities must be nonnegative numbers")
        object.__setattr__(self, "density", _readonly(d))

    @classmethod
    def from_function(cls, space: GriddedSpace, fn: Callable) -> "GridMeasure":
        d = np.broadcast_to(np.asarray(fn(*space.mesh()), dtype=float), space.shape)
        return cls(space, d, fn)

    exact = False

    @cached_property
    def cell_masses(self) -> np.ndarray:
        return _readonly(self.density * self.space.cell_weights)

    def masses(self) -> np.ndarray:
        return self.cell_masses

    def scaled(self, c: Real) -> "GridMeasure":
        c = float(c)
        if c <= 0 or not math.isfinite(c):
            raise ValueError("scale factor must be finite and positive")
        fn = self.density_fn
        new_fn = None if fn is None else (lambda *x: c * np.asarray(fn(*x), dtype=float))
        return GridMeasure(self.space, self.density * c, new_fn, self.divergence)

    def restricted(self, mask: np.ndarray, indicator: Callable | None = None) -> "GridMeasure":
        fn = self.density_fn
        new_fn = None
        if fn is not None and indicator is not None:
            new_fn = lambda *x: np.where(indicator(*x), fn(*x), 0.0)
        return GridMeasure(self.space, np.where(mask, self.density, 0.0), new_fn, self.divergence)


Measure = Union[FiniteMeasure, GridMeasure]


# -- set descriptors ---------------------------------------------------------

@dataclass(frozen=True)
class Resolved:
    mask: np.ndarray
    box: Box | None = None
    ranges: tuple | None = None
    open_ends: tuple = ()


def resolve(space, descriptor) -> Resolved:
    """Turn a set descriptor into a cell/point mask.

    Finite spaces accept an iterable of labels or a boolean mask; gridded
    spaces accept a :class:`Box` or a boolean mask.  ``None`` is the whole
    stored space.
    """
    shape = space.shape
    if descriptor is None:
        return Resolved(np.ones(shape, dtype=bool))
    if isinstance(descriptor, np.ndarray) and descriptor.dtype == bool:
        if descriptor.shape != shape:
            raise ResolutionError(f"mask shape {descriptor.shape} does not match space {shape}")
        return Resolved(descriptor)
    if isinstance(space, FiniteSpace):
        if isinstance(descriptor, Box):
            raise ResolutionError("boxes need a gridded space")
        return Resolved(space.mask(descriptor))
    if not isinstance(descriptor, Box):
        raise ResolutionError(f"cannot resolve {type(descriptor).__name__} on a gridded space")
    ranges, open_ends = descriptor.resolve(space)
    mask = np.zeros(shape, dtype=bool)
    mask[tuple(slice(a, b) for a, b in ranges)] = True
    return Resolved(mask, descriptor, tuple(ranges), tuple(open_ends))


def _sum(values: np.ndarray) -> Real:
    if values.dtype == object:
        return extended.total(values.ravel().tolist())
    if np.isinf(values).any():
        return math.inf
    return math.fsum(values.ravel())


def _finite_mask(masses: np.ndarray) -> np.ndarray:
    if masses.dtype == object:
        flat = [not extended.is_inf(v) for v in masses.ravel().tolist()]
        return np.array(flat, dtype=bool).reshape(masses.shape)
    return np.isfinite(masses)


def mass(m: Measure, descriptor=None, protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> Real:
    """Mass of a set; +inf when any contributing cell is infinite.

    A :class:`Box` that runs past an extendable truncation bound (infinite
    bound, or 0/1 on log/logit axes) is followed outward with the extension
    protocol and reported as +inf when the mass diverges.
    """
    r = resolve(m.space, descriptor)
    base = _sum(m.masses()[r.mask])
    if not r.open_ends or extended.is_inf(base):
        return base
    if m.density_fn is None:
        raise ResolutionError("an open-ended set needs a density function to extend the truncation")
    sub = m.space.sub(r.ranges)
    masses, status, tail, _ = region_trace(m.density_fn, sub.axes, r.open_ends, protocol)
    if status == DIVERGENT:
        return math.inf
    if status == UNRESOLVED:
        raise ResolutionError("extension protocol could not decide whether the mass is finite")
    return masses[-1] + tail


# -- laws ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Law:
    """A measure up to a positive constant.

    ``rep`` is the canonical representative: it has mass exactly 1 on the
    calibration set.  Laws without any finite positive-mass set (for instance
    a marginal with +inf on every cell) keep ``calibration = None``.
    """

    rep: Measure
    calibration: np.ndarray | None
    verdict: Any = None

    @classmethod
    def of(cls, measure: Measure, calibration=None, verdict=None) -> "Law":
        if calibration is None:
            cal = _default_calibration(measure)
            if cal is None:
                return cls(measure, None, verdict)
        else:
            cal = resolve(measure.space, calibration).mask
        c = _sum(measure.masses()[cal])
        if c == 0:
            raise NullEventError("calibration set has zero mass")
        if extended.is_inf(c):
            raise NonNormalizableError("calibration set has infinite mass")
        scale = (Fraction(1) / c) if isinstance(c, (int, Fraction)) else 1.0 / c
        return cls(measure.scaled(scale), _readonly(cal), verdict)

    @property
    def space(self):
        return self.rep.space

    @property
    def density(self) -> np.ndarray:
        if isinstance(self.rep, GridMeasure):
            return self.rep.density
        return self.rep.masses()

    def mass(self, descriptor=None, protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> Real:
        return mass(self.rep, descriptor, protocol)

    def probability(self, a, given) -> Real:
        """Elementary conditional probability of ``a`` given a finite-mass event."""
        return condition_on_event(self, given).mass(
            _intersect(self.space, a, given))

    def with_verdict(self, verdict) -> "Law":
        return replace(self, verdict=verdict)

    def equivalent(self, other: "Law", tol: float = 0.0) -> bool:
        return bool(proportional(self, other, tol))


def _default_calibration(m: Measure) -> np.ndarray | None:
    masses = m.masses()
    finite = _finite_mask(masses)
    c = _sum(masses[finite]) if finite.any() else 0
    if c > 0:
        return finite
    return None


def _intersect(space, a, b) -> np.ndarray:
    return resolve(space, a).mask & resolve(space, b).mask


def condition_on_event(law: Law, event) -> Law:
    """The probability law of ``law`` restricted to ``event`` and normalised."""
    r = resolve(law.space, event)
    m = law.mass(event)
    if m == 0:
        raise NullEventError("conditioning event has zero mass")
    if extended.is_inf(m):
        raise NonNormalizableError("conditioning event has infinite mass; use disintegration")
    if r.open_ends:
        raise ResolutionError("conditioning event must lie inside the stored truncation")
    rep = law.rep
    if isinstance(rep, GridMeasure):
        indicator = _box_indicator(law.space, r.box) if r.box is not None else None
        restricted = rep.restricted(r.mask, indicator)
    else:
        restricted = rep.restricted(r.mask)
    return Law.of(restricted, r.mask)


def _box_indicator(space: GriddedSpace, box: Box) -> Callable:
    bounds = [box.interval(a) if a.name in box.bounds else (-math.inf, math.inf) for a in space.axes]

    def indicator(*x):
        out = True
        for (lo, hi), xi in zip(bounds, x):
            out = out & (xi >= lo) & (xi <= hi)
        return out

    return indicator


# -- proportionality -------------------------------------------------------------

@dataclass(frozen=True)
class Proportionality:
    proportional: bool
    constant: Real | None
    spread: Real

    def __bool__(self) -> bool:
        return self.proportional


def _values(x) -> tuple[np.ndarray, Any]:
    if isinstance(x, Law):
        x = x.rep
    if isinstance(x, GridMeasure):
        return x.density, x.space
    return x.masses(), x.space


def proportional(a, b, tol: float = 1e-9, floor: float = DEFAULT_FLOOR) -> Proportionality:
    """Decide whether ``b = c * a`` for a constant ``c > 0``.

    Compares densities (grids) or point weights (finite spaces) over the cells
    where both exceed ``floor``.  The statistic is the ratio spread
    ``max(b/a) / min(b/a)``; proportional iff spread <= 1 + tol.  A cell
    positive in one and exactly zero in the other, or infinite in only one,
    breaks proportionality.  Exact weights are compared exactly.
    """
    va, sa = _values(a)
    vb, sb = _values(b)
    if sa != sb:
        raise ValueError("laws live on different spaces")
    fa, fb = va.ravel().tolist(), vb.ravel().tolist()
    ratios = []
    mismatch = False
    for x, y in zip(fa, fb):
        ix, iy = extended.is_inf(x), extended.is_inf(y)
        if ix or iy:
            mismatch |= ix != iy
            continue
        if x > floor and y > floor:
            ratios.append(Fraction(y) / Fraction(x) if isinstance(x, (int, Fraction)) and isinstance(y, (int, Fraction))
                          else float(y) / float(x))
        elif (x > floor and y == 0) or (y > floor and x == 0):
            mismatch = True
    if not ratios:
        if all(extended.is_inf(x) for x in fa + fb) and not mismatch:
            return Proportionality(True, None, 1.0)
        raise IncomparableError("the two laws have no common positive-density region")
    hi, lo = max(ratios), min(ratios)
    spread = hi / lo
    if mismatch:
        return Proportionality(False, None, math.inf)
    ok = spread <= 1 + tol
    if isinstance(spread, Fraction) and tol == 0:
        ok = spread == 1
    const = None
    if ok:
        const = ratios[0] if isinstance(ratios[0], Fraction) else math.exp(math.fsum(math.log(r) for r in ratios) / len(ratios))
    return Proportionality(bool(ok), const, spread)


# -- marginals -----------------------------------------------------------------

def marginal(joint: Law, keep: Sequence[str] | Sequence[int],
             protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> Law:
    """Integrate (or sum) out every axis not in ``keep``.

    On grids the dropped axes are integrated one at a time with the extension
    protocol at their extendable ends; a cell whose fibre integral diverges
    gets +inf.  Finite product spaces (tuple labels) are summed exactly.
    """
    rep = joint.rep
    if isinstance(rep, FiniteMeasure):
        return Law.of(_finite_marginal(rep, [int(k) for k in keep]))
    return Law.of(marginal_measure(rep, keep, protocol))


def marginal_measure(rep: Measure, keep, protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> Measure:
    """Uncanonicalised marginal of a measure (see :func:`marginal`)."""
    if isinstance(rep, FiniteMeasure):
        return _finite_marginal(rep, [int(k) for k in keep])
    space = rep.space
    keep_idx = sorted(space.axis_index(k) if isinstance(k, str) else int(k) for k in keep)
    if not keep_idx or len(keep_idx) == space.dim:
        raise ResolutionError("marginal must keep a nonempty proper subset of axes")
    drop = [i for i in range(space.dim) if i not in keep_idx]
    kept_axes = tuple(space.axes[i] for i in keep_idx)
    new_space = GriddedSpace(kept_axes)
    if rep.density_fn is None:
        values = np.sum(rep.density * _dropped_weights(space, drop), axis=tuple(drop))
        diag = {"extension": "unavailable: no density function; stored truncation only"}
        return GridMeasure(new_space, values, None, diag)

    fn = rep.density_fn
    axes = list(space.axes)
    traces = []
    unresolved = 0
    divergence = None
    # integrate the dropped axes from the last one backwards so indices stay valid
    current_fn, current_axes = fn, list(axes)
    for i in reversed(drop):
        name = current_axes[i].name
        kept = [a for j, a in enumerate(current_axes) if j != i]
        coords = _mesh([a.centers for a in kept])
        coords = coords[:i] + [None] + coords[i:]
        res = integrate_axis(current_fn, current_axes, coords, i, protocol)
        tr = representative_trace(res, name, protocol)
        if tr is not None:
            traces.append(tr)
        unresolved += int(np.sum(res.status == UNRESOLVED))
        f_prev, axes_prev, idx = current_fn, list(current_axes), i

        def reduced(*x, f_prev=f_prev, axes_prev=axes_prev, idx=idx):
            c = list(x[:idx]) + [None] + list(x[idx:])
            return integrate_axis(f_prev, axes_prev, c, idx, protocol).values

        current_fn, current_axes = reduced, kept
        last_values = res.values
    values = np.broadcast_to(last_values, new_space.shape)
    if np.isinf(values).any():
        div_tr = [t for t in traces if t.status == "divergent"]
        divergence = {"traces": [t.to_dict() for t in (div_tr or traces)],
                      "infinite_cells": int(np.sum(np.isinf(values)))}
    if unresolved:
        divergence = dict(divergence or {})
        divergence["unresolved_cells"] = unresolved
    return GridMeasure(new_space, values, current_fn, divergence)


def _dropped_weights(space: GriddedSpace, drop) -> np.ndarray:
    vectors = [a.weights if i in drop else np.ones(a.cells) for i, a in enumerate(space.axes)]
    out = np.ones(space.shape)
    for m in _mesh(vectors):
        out = out * m
    return out


def _finite_marginal(rep: FiniteMeasure, keep: Sequence[int]) -> FiniteMeasure:
    acc: dict = {}
    for label, w in zip(rep.space.points, rep.weights):
        if not isinstance(label, tuple):
            raise ResolutionError("finite marginals need tuple-labelled product spaces")
        key = tuple(label[k] for k in keep)
        key = key[0] if len(key) == 1 else key
        acc[key] = extended.add(acc.get(key, 0), w)
    return FiniteMeasure(FiniteSpace(tuple(acc)), tuple(acc.values()))


# -- bunches -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Bunch:
    """Increasing chain of finite positive-mass sets, with recorded masses."""

    sets: tuple
    masses: tuple

    @classmethod
    def of(cls, measure: Measure | Law, sets: Sequence) -> "Bunch":
        rep = measure.rep if isinstance(measure, Law) else measure
        sets = tuple(sets)
        if not sets:
            raise InvalidBunchError("a bunch needs at least one set")
        masses = tuple(mass(rep, s) for s in sets)
        for s, m in zip(sets, masses):
            if not (0 < m < math.inf):
                raise InvalidBunchError(f"bunch element {s!r} has mass {m}, need 0 < mass < inf")
        masks = [resolve(rep.space, s).mask for s in sets]
        for a, b in zip(masks, masks[1:]):
            if not (np.all(b[a]) and b.sum() > a.sum()):
                raise InvalidBunchError("bunch elements must be strictly increasing by inclusion")
        return cls(sets, masses)

    def __len__(self) -> int:
        return len(self.sets)

    def masks(self, space) -> list[np.ndarray]:
        return [resolve(space, s).mask for s in self.sets]

    def covers(self, space) -> bool:
        return bool(np.all(resolve(space, self.sets[-1]).mask))
