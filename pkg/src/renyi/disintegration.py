"""Conditional laws given a statistic.

A statistic ``T`` partitions the source space into fibres ``T^-1{t}``.  The
conditional law ``mu^t`` is characterised (up to a positive factor per ``t``)
by the defining equation

    mu(A ∩ [T in C] ∩ B) = sum over t in C of mu^t(A | B) * mu(T = t, B)

for all ``A``, ``C`` and every ``B`` with ``0 < mu(B) < inf``, where
``mu^t(A | B) = mu^t(A ∩ B) / mu^t(B)`` and the right factor is *not*
normalised.  Three independent constructions are provided: direct fibre
restriction, the nested-bunch chain, and a subset-enumeration oracle.
"""

from __future__ import annotations

import math
import random
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Real
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np

from . import extended
from .errors import InvalidBunchError, NonNormalizableError, ResolutionError, SpaceTooLargeError
from .extension import DEFAULT_PROTOCOL, DIVERGENT, UNRESOLVED, ExtensionProtocol, region_trace
from .measures import (Bunch, FiniteMeasure, GridMeasure, Law, Measure, _finite_mask, _sum,
                       marginal_measure, mass, proportional, resolve)
from .spaces import Box, FiniteSpace, GriddedSpace

ORACLE_MAX_POINTS = 20
EXHAUSTIVE_MAX_POINTS = 10


# -- statistics ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Statistic:
    """A cell-wise constant map from a source space to a target space.

    ``kind`` is ``"mapping"`` (finite source, one label per point),
    ``"cellwise"`` (gridded source, one label per cell, optionally with
    ``label_fn`` to label points past the truncation) or ``"projection"``
    (gridded source onto the axes ``keep``).
    """

    source: FiniteSpace | GriddedSpace
    target: FiniteSpace | GriddedSpace
    kind: str
    labels: np.ndarray | None = None
    keep: tuple[int, ...] = ()
    label_fn: Callable | None = None

    @classmethod
    def mapping(cls, space: FiniteSpace, fn: Mapping | Callable) -> "Statistic":
        get = fn.__getitem__ if isinstance(fn, Mapping) else fn
        try:
            labels = [get(p) for p in space.points]
        except KeyError as exc:
            raise ResolutionError(f"statistic is not total: no image for {exc.args[0]!r}") from None
        return cls(space, FiniteSpace(_unique(labels)), "mapping", _object_array(labels))

    @classmethod
    def identity(cls, space: FiniteSpace) -> "Statistic":
        return cls.mapping(space, lambda p: p)

    @classmethod
    def constant(cls, space, value: Hashable = 0) -> "Statistic":
        if isinstance(space, FiniteSpace):
            return cls.mapping(space, lambda p: value)
        return cls.cellwise(space, lambda *x: np.full(np.broadcast_shapes(*map(np.shape, x)), value))

    @classmethod
    def cellwise(cls, space: GriddedSpace, fn: Callable) -> "Statistic":
        """Label each cell by ``fn`` at its centre; ``fn`` also labels extension cells."""
        raw = np.broadcast_to(np.asarray(fn(*space.mesh())), space.shape)
        labels = _object_array(raw.ravel().tolist()).reshape(space.shape)
        return cls(space, FiniteSpace(_unique(labels.ravel().tolist())), "cellwise", labels, (), fn)

    @classmethod
    def projection(cls, space: GriddedSpace, keep: Sequence[str]) -> "Statistic":
        idx = tuple(sorted(space.axis_index(k) for k in keep))
        if not idx or len(idx) == space.dim:
            raise ResolutionError("a projection keeps a nonempty proper subset of axes")
        return cls(space, GriddedSpace(tuple(space.axes[i] for i in idx)), "projection", None, idx)

    @property
    def finite_target(self) -> bool:
        return self.kind != "projection"

    @property
    def rest(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.source.dim) if i not in self.keep)

    def preimage(self, t) -> np.ndarray:
        """Mask of the source cells mapped to ``t``."""
        if self.kind == "projection":
            mask = np.zeros(self.source.shape, dtype=bool)
            mask[self._slice_index(t)] = True
            return mask
        flat = np.array([lab == t for lab in self.labels.ravel().tolist()], dtype=bool)
        return flat.reshape(self.labels.shape)

    def _slice_index(self, t) -> tuple:
        t = tuple(t) if isinstance(t, (tuple, list)) else (t,)
        if len(t) != len(self.keep):
            raise ResolutionError(f"target label {t} needs {len(self.keep)} cell indices")
        index: list[Any] = [slice(None)] * self.source.dim
        for i, ti in zip(self.keep, t):
            index[i] = int(ti)
        return tuple(index)

    def target_cell(self, value) -> tuple[int, ...]:
        """Target cell index of a coordinate value (projection statistics)."""
        value = tuple(value) if isinstance(value, (tuple, list)) else (value,)
        out = []
        for axis, v in zip(self.target.axes, value):
            if axis.scale == "counts":
                if int(v) != v or not axis.lo <= v <= axis.hi:
                    raise ResolutionError(f"count {v} is outside axis {axis.name!r}")
                out.append(int(v - axis.lo))
                continue
            if not axis.edges[0] <= v <= axis.edges[-1]:
                raise ResolutionError(f"value {v} lies outside the truncation of axis {axis.name!r}")
            out.append(min(int(np.searchsorted(axis.edges, v, side="right")) - 1, axis.cells - 1))
        return tuple(out)


def _unique(labels: Iterable) -> tuple:
    seen: dict = {}
    for lab in labels:
        seen.setdefault(lab, None)
    return tuple(seen)


def _object_array(values: list) -> np.ndarray:
    out = np.empty(len(values), dtype=object)
    out[:] = values
    return out


# -- conditional families -----------------------------------------------------------

class _LazyFibers(Mapping):
    """Fibre laws computed on first access (projection statistics)."""

    def __init__(self, keys: Sequence, make: Callable):
        self._keys = tuple(keys)
        self._known = set(self._keys)
        self._make = make
        self._cache: dict = {}

    def __getitem__(self, t):
        if t not in self._known:
            raise KeyError(t)
        if t not in self._cache:
            self._cache[t] = self._make(t)
        return self._cache[t]

    def __iter__(self):
        return iter(self._keys)

    def __len__(self):
        return len(self._keys)


@dataclass(frozen=True, eq=False)
class ConditionalFamily:
    """Fibre laws ``t -> mu^t`` on the domain of the statistic.

    For finite targets every fibre is a law on the source space supported on
    ``T^-1{t}``.  For projections a fibre is the slice law on the remaining
    axes.  ``pushforward`` holds the (uncanonicalised) masses
    ``mu(T = t)`` relative to ``rep``, possibly +inf.
    """

    statistic: Statistic
    fibers: Mapping
    rep: Measure
    diagnostics: dict = field(default_factory=dict)
    protocol: ExtensionProtocol = DEFAULT_PROTOCOL

    @property
    def domain(self) -> tuple:
        return tuple(self.fibers)

    def __getitem__(self, t) -> Law:
        return self.fibers[t]

    @cached_property
    def pushforward(self) -> dict:
        """``mu(T = t)`` for every label (finite targets), following extendable ends."""
        T = self.statistic
        if not T.finite_target:
            return {"law": Law.of(marginal_measure(self.rep, T.keep, self.protocol))}
        return {t: _preimage_mass(self.rep, T, t, self.protocol) for t in T.target.points}

    def embedded(self) -> np.ndarray:
        """Fibre cell masses laid out on the source grid (projection statistics).

        Slice ``t`` holds the fibre's canonical cell masses; cells outside the
        domain are zero.
        """
        T = self.statistic
        out = np.zeros(T.source.shape)
        for t, law in self.fibers.items():
            out[T._slice_index(t)] = law.rep.cell_masses
        return out

    def to_dict(self) -> dict:
        from .serialization import law_to_dict
        return {"kind": self.statistic.kind,
                "fibers": {repr(t): law_to_dict(law) for t, law in self.fibers.items()},
                "diagnostics": self.diagnostics}


def _preimage_mass(rep: Measure, T: Statistic, t, protocol: ExtensionProtocol) -> Real:
    mask = T.preimage(t)
    base = _sum(rep.masses()[mask])
    if isinstance(rep, FiniteMeasure) or extended.is_inf(base) or T.label_fn is None or rep.density_fn is None:
        return base
    axes = rep.space.axes
    ends = [(i, e) for i, a in enumerate(axes) for e in ("low", "high") if a.can_extend(e)]
    if not ends:
        return base
    fn, lab = rep.density_fn, T.label_fn
    masses, status, tail, _ = region_trace(lambda *x: np.where(np.asarray(lab(*x)) == t, fn(*x), 0.0),
                                           axes, ends, protocol)
    if status == DIVERGENT:
        return math.inf
    if status == UNRESOLVED:
        return math.nan
    return masses[-1] + tail


def _first_positive(masses: np.ndarray, mask: np.ndarray) -> np.ndarray | None:
    flat = masses.ravel().tolist()
    keep = mask.ravel()
    for k, (v, inside) in enumerate(zip(flat, keep)):
        if inside and v > 0:
            out = np.zeros(mask.size, dtype=bool)
            out[k] = True
            return out.reshape(mask.shape)
    return None


def _fiber_calibration(masses: np.ndarray, fiber: np.ndarray, anchors: Sequence[np.ndarray]) -> np.ndarray | None:
    """First anchor (bunch element) meeting the fibre in finite positive mass, else its first positive cell."""
    for a in anchors:
        m = _sum(masses[a & fiber])
        if 0 < m < math.inf:
            return a & fiber
    return _first_positive(masses, fiber & _finite_mask(masses))


def _check_source(law: Law, T: Statistic):
    if law.space != T.source:
        raise ResolutionError("statistic and law live on different spaces")
    masses = law.rep.masses()
    if not _finite_mask(masses).all():
        raise NonNormalizableError("the law has cells of infinite mass; it is not sigma-finite on its truncation")


def condition_on_statistic(law: Law, T: Statistic, bunch: Bunch | Sequence | None = None,
                           protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> ConditionalFamily:
    """Disintegrate ``law`` along ``T`` by direct fibre restriction.

    Fibres are not normalised: improper fibres are legal.  Each fibre is
    canonicalised at the first bunch element it meets with positive mass
    (the whole fibre when no bunch is given) or, failing that, at its first
    positive cell.  Null fibres are left out of the domain.
    """
    _check_source(law, T)
    rep = law.rep
    if T.kind == "projection":
        return _condition_on_projection(law, T, protocol)
    masses = rep.masses()
    anchors = [] if bunch is None else _bunch_masks(rep.space, bunch)
    fibers, null = {}, []
    for t in T.target.points:
        fiber = T.preimage(t)
        if _sum(masses[fiber]) == 0:
            null.append(t)
            continue
        cal = _fiber_calibration(masses, fiber, anchors or [np.ones(fiber.shape, dtype=bool)])
        if isinstance(rep, GridMeasure) and T.label_fn is not None:
            lab, tt = T.label_fn, t
            restricted = rep.restricted(fiber, lambda *x: np.asarray(lab(*x)) == tt)
        else:
            restricted = rep.restricted(fiber)
        fibers[t] = Law.of(restricted, cal)
    diag = {"null_labels": [repr(t) for t in null]} if null else {}
    return ConditionalFamily(T, fibers, rep, diag, protocol)


def _condition_on_projection(law: Law, T: Statistic, protocol: ExtensionProtocol) -> ConditionalFamily:
    rep = law.rep
    space = rep.space
    rest_axes = tuple(space.axes[i] for i in T.rest)
    rest_space = GriddedSpace(rest_axes)
    rest_w = GriddedSpace(rest_axes).cell_weights
    keep_centers = [space.axes[i].centers for i in T.keep]
    # slice mass per target cell, on the stored truncation
    move = np.moveaxis(rep.density, T.keep, tuple(range(len(T.keep))))
    slice_mass = np.tensordot(move, rest_w, axes=len(T.rest)) if T.rest else move
    domain, degenerate, null = [], [], 0
    for t in np.ndindex(*T.target.shape):
        if slice_mass[t] > 0:
            domain.append(t)
        elif rep.density_fn is not None and _slice_extension_mass(rep, T, t, protocol) > 0:
            degenerate.append(t)
        else:
            null += 1

    def make(t):
        dens = np.asarray(rep.density[T._slice_index(t)], dtype=float)
        fn = None
        if rep.density_fn is not None:
            fn = _slice_fn(rep.density_fn, T, tuple(float(c[i]) for c, i in zip(keep_centers, t)))
        return Law.of(GridMeasure(rest_space, dens, fn))

    diag: dict = {}
    if degenerate:
        diag["degenerate_fibers"] = [list(t) for t in degenerate]
    if null:
        diag["null_fibers"] = null
    return ConditionalFamily(T, _LazyFibers(domain, make), rep, diag, protocol)


def _slice_fn(fn: Callable, T: Statistic, point: tuple) -> Callable:
    keep, dim = T.keep, T.source.dim

    def sliced(*rest):
        args, r, k = [], iter(rest), iter(point)
        for i in range(dim):
            args.append(next(k) if i in keep else next(r))
        return fn(*args)

    return sliced


def _slice_extension_mass(rep: GridMeasure, T: Statistic, t, protocol: ExtensionProtocol) -> float:
    rest_axes = [rep.space.axes[i] for i in T.rest]
    ends = [(j, e) for j, a in enumerate(rest_axes) for e in ("low", "high") if a.can_extend(e)]
    if not ends:
        return 0.0
    point = tuple(float(rep.space.axes[i].centers[ti]) for i, ti in zip(T.keep, t))
    masses, _, _, _ = region_trace(_slice_fn(rep.density_fn, T, point), rest_axes, ends, protocol)
    return masses[-1]


def _bunch_masks(space, bunch) -> list[np.ndarray]:
    sets = bunch.sets if isinstance(bunch, Bunch) else tuple(bunch)
    return [resolve(space, s).mask for s in sets]


# -- defining equation ------------------------------------------------------------------

@dataclass(frozen=True)
class DefiningEquationReport:
    max_violation: Real
    max_relative_violation: float
    worst: tuple | None
    checked: int
    skipped_b: int = 0

    @property
    def exact_zero(self) -> bool:
        return self.max_violation == 0

    def to_dict(self) -> dict:
        return {"maxViolation": _num(self.max_violation),
                "maxRelativeViolation": float(self.max_relative_violation),
                "worstTriple": None if self.worst is None else [_describe(s) for s in self.worst],
                "checked": self.checked, "skippedB": self.skipped_b}


def _num(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    return float(v)


def _describe(s):
    if isinstance(s, Box):
        return {k: list(v) for k, v in sorted(s.bounds.items())}
    if isinstance(s, (set, frozenset)):
        return sorted(map(repr, s))
    return repr(s)


def _fiber_source_masses(F: ConditionalFamily, t) -> np.ndarray:
    """Fibre ``t`` as cell masses on the source space (zero off the fibre)."""
    T = F.statistic
    law = F.fibers[t]
    if T.kind != "projection":
        return law.rep.masses()
    out = np.zeros(T.source.shape)
    out[T._slice_index(t)] = law.rep.cell_masses
    return out


def verify_defining_equation(F: ConditionalFamily, law: Law, test_a: Iterable, test_c: Iterable,
                             test_b: Iterable) -> DefiningEquationReport:
    """Check the defining equation on every combination of test sets.

    ``test_a`` and ``test_b`` are set descriptors on the source space,
    ``test_c`` on the target (label sets, or boxes for projections).  Sets
    ``B`` whose mass is zero or infinite are skipped and counted.  Exact for
    rational finite inputs.
    """
    T = F.statistic
    masses = law.rep.masses()
    a_masks = [(a, resolve(T.source, a).mask) for a in test_a]
    c_list = list(test_c)
    domain = list(F.fibers)
    fiber_masses = {t: _fiber_source_masses(F, t) for t in domain}
    preimages = {t: T.preimage(t) for t in domain}
    if T.kind == "projection":
        c_members = [(c, [t for t in domain if resolve(T.target, c).mask[t]]) for c in c_list]
    else:
        c_members = [(c, [t for t in domain if t in set(c)]) for c in c_list]
    worst, max_abs, max_rel, checked, skipped = None, 0, 0.0, 0, 0
    for b in test_b:
        bmask = resolve(T.source, b).mask
        # open-ended B is followed past the truncation to decide whether it is usable
        mb = mass(law.rep, b, F.protocol) if isinstance(b, Box) else _sum(masses[bmask])
        if mb == 0 or extended.is_inf(mb):
            skipped += 1
            continue
        # per-fibre pieces that do not depend on A or C
        fb = {t: _sum(fiber_masses[t][bmask]) for t in domain}
        tb = {t: _sum(masses[preimages[t] & bmask]) for t in domain}
        for a, amask in a_masks:
            ab = amask & bmask
            term = {}
            for t in domain:
                term[t] = 0 if fb[t] == 0 else _sum(fiber_masses[t][ab]) / fb[t] * tb[t]
            for c, members in c_members:
                cmask = np.zeros(T.source.shape, dtype=bool)
                for t in members:
                    cmask |= preimages[t]
                lhs = _sum(masses[ab & cmask])
                rhs = sum((term[t] for t in members), 0)
                v = abs(lhs - rhs)
                checked += 1
                if v > max_abs:
                    max_abs, worst = v, (a, c, b)
                if lhs > 0:
                    max_rel = max(max_rel, float(v / lhs))
    return DefiningEquationReport(max_abs, max_rel, worst, checked, skipped)


def _as_integers(values: Sequence[Real]) -> tuple[list[int], int]:
    """Integer numerators over a common denominator."""
    fr = [Fraction(v) for v in values]
    den = math.lcm(*(f.denominator for f in fr)) if fr else 1
    return [int(f * den) for f in fr], den


def _subset_sums(weights: Sequence[int]) -> np.ndarray:
    """Sum of ``weights`` over every subset, indexed by bitmask."""
    n = len(weights)
    big = sum(abs(w) for w in weights) >= 2 ** 62
    out = np.zeros(1 << n, dtype=object if big else np.int64)
    for k, w in enumerate(weights):
        out[1 << k:1 << (k + 1)] = out[:1 << k] + w
    return out


def verify_defining_equation_exhaustive(F: ConditionalFamily, law: Law) -> DefiningEquationReport:
    """The defining equation over *every* A, C and B (finite spaces, <= 10 points).

    Exact integer arithmetic.  For fixed A and B the violation over C is
    ``|sum_{t in C} d_t|``; its maximum over all C is
    ``max(sum of positive d_t, -sum of negative d_t)``, so labels need not
    be enumerated.
    """
    T = F.statistic
    rep = law.rep
    if not isinstance(rep, FiniteMeasure) or not rep.exact:
        raise ResolutionError("the exhaustive check needs a finite space with rational weights")
    n = len(rep.space)
    if n > EXHAUSTIVE_MAX_POINTS:
        raise SpaceTooLargeError(f"exhaustive check is limited to {EXHAUSTIVE_MAX_POINTS} points, got {n}")
    mu, mu_den = _as_integers(rep.weights)
    S_mu = _subset_sums(mu)
    masks = np.arange(1 << n)
    ab = np.bitwise_and.outer(masks, masks)  # [A, B]
    positive_b = (S_mu > 0)[None, :]
    pos = np.zeros(ab.shape)
    neg = np.zeros(ab.shape)
    exact_zero = True
    tables = {}
    for t in F.fibers:
        pre = T.preimage(t)
        mu_t = [w if inside else 0 for w, inside in zip(mu, pre)]
        fib, _ = _as_integers(F.fibers[t].rep.weights)
        S_t, S_f = _subset_sums(mu_t), _subset_sums(fib)
        tables[t] = (S_t, S_f)
        # d_t * S_f[B] * mu_den = S_t[AB] * S_f[B] - S_f[AB] * S_t[B]
        has_b = (S_f != 0)[None, :]
        cross = np.where(has_b, S_t[ab] * S_f[None, :] - S_f[ab] * S_t[None, :], S_t[ab])
        cross = np.where(positive_b, cross, 0)
        if np.any(cross != 0):
            exact_zero = False
            d = cross.astype(float) / (np.where(has_b, S_f[None, :], 1).astype(float) * mu_den)
            pos += np.clip(d, 0, None)
            neg += np.clip(-d, 0, None)
    checked = int(positive_b.sum()) * (1 << n) * (1 << len(F.fibers))
    if exact_zero:
        return DefiningEquationReport(0, 0.0, None, checked)
    # floats locate the worst (A, B); the violation there is recomputed exactly
    over_c = np.maximum(pos, neg)
    a_idx, b_idx = (int(i) for i in np.unravel_index(int(np.argmax(over_c)), over_c.shape))
    ab_idx = a_idx & b_idx
    d = {}
    for t, (S_t, S_f) in tables.items():
        seen = Fraction(int(S_t[ab_idx]), mu_den)
        if S_f[b_idx] != 0:
            d[t] = seen - Fraction(int(S_f[ab_idx]), int(S_f[b_idx])) * Fraction(int(S_t[b_idx]), mu_den)
        else:
            d[t] = seen
    up = [t for t in d if d[t] > 0]
    down = [t for t in d if d[t] < 0]
    c = up if sum((d[t] for t in up), Fraction(0)) >= -sum((d[t] for t in down), Fraction(0)) else down
    v = abs(sum((d[t] for t in c), Fraction(0)))
    lhs = sum((Fraction(int(tables[t][0][ab_idx]), mu_den) for t in c), Fraction(0))
    rel = float(v / lhs) if lhs > 0 else math.inf
    worst = (_mask_labels(rep.space, a_idx), frozenset(c), _mask_labels(rep.space, b_idx))
    return DefiningEquationReport(v, rel, worst, checked)


def _mask_labels(space: FiniteSpace, bits: int) -> frozenset:
    return frozenset(p for k, p in enumerate(space.points) if int(bits) >> k & 1)


# -- nested-bunch construction ---------------------------------------------------------------

def nested_bunch_construction(law: Law, T: Statistic, bunch: Bunch | Sequence) -> ConditionalFamily:
    """Build the fibres through a chain ``B1 ⊂ B2 ⊂ ...`` covering the space.

    Per fibre: ``mu^t(B1) = 1``, ``mu^t(Bn) = 1 / mu^t(B1 | Bn)`` and, on the
    shell ``Bn \\ B(n-1)``, ``mu^t(A) = mu^t(A | Bn) * mu^t(Bn)``, where the
    per-set conditionals ``mu^t(. | B)`` come from direct restriction.  A fibre
    that misses ``B1`` is re-anchored at the first chain element it meets
    (recorded in the diagnostics).  The well-definedness identity
    ``mu^t(A | Bn) mu^t(Bn) = mu^t(A | Bm) mu^t(Bm)`` is checked for every
    cell ``A`` of ``Bn`` and every ``n < m``.
    """
    if T.kind == "projection":
        raise ResolutionError("the nested-bunch route is implemented for finite-target statistics")
    _check_source(law, T)
    rep = law.rep
    space = rep.space
    sets = bunch.sets if isinstance(bunch, Bunch) else tuple(bunch)
    chain = [resolve(space, s).mask for s in sets]
    for k, (a, b) in enumerate(zip(chain, chain[1:])):
        if not np.all(b[a]):
            raise InvalidBunchError(f"bunch element {k} is not contained in element {k + 1}")
    if not np.all(chain[-1]):
        raise InvalidBunchError("the bunch does not cover the space")
    masses = rep.masses()
    for s, c in zip(sets, chain):
        m = _sum(masses[c])
        if not (0 < m < math.inf):
            raise InvalidBunchError(f"bunch element {s!r} has mass {m}, need 0 < mass < inf")
    exact = masses.dtype == object
    zero = 0 if exact else 0.0
    fibers, diag = {}, {"reanchored": {}, "degenerate": [], "well_definedness": 0}
    worst_wd = 0
    for t in T.target.points:
        fiber = T.preimage(t)
        fm = masses * fiber if not exact else np.array([v if f else 0 for v, f in zip(masses.ravel().tolist(), fiber.ravel())],
                                                       dtype=object).reshape(masses.shape)
        if _sum(fm) == 0:
            continue
        # per-set conditionals mu^t(. | Bn) by direct restriction
        conds = []
        for c in chain:
            tot = _sum(fm[c])
            conds.append(None if tot == 0 else (np.where(c, fm, zero), tot))
        anchor = next(k for k, c in enumerate(conds) if c is not None)
        if anchor:
            diag["reanchored"][repr(t)] = anchor
        # mu^t(Bn) = mu^t(B_anchor ∪ Bn | ...) ratio; for a chain B_anchor ∪ Bn = Bn
        scale = [None] * len(chain)
        scale[anchor] = 1 if exact else 1.0
        for k in range(anchor + 1, len(chain)):
            cm, tot = conds[k]
            p_anchor = _sum(cm[chain[anchor]]) / tot
            if p_anchor == 0:
                diag["degenerate"].append(repr(t))
                break
            scale[k] = 1 / p_anchor
        if any(scale[k] is None for k in range(anchor, len(chain))):
            continue
        values = np.full(masses.shape, zero, dtype=masses.dtype)
        prev = np.zeros(masses.shape, dtype=bool)
        for k in range(anchor, len(chain)):
            shell = chain[k] & ~prev
            cm, tot = conds[k]
            for idx in zip(*np.nonzero(shell)):
                values[idx] = cm[idx] / tot * scale[k]
            prev = chain[k]
        # well-definedness (*): every cell A of Bn, n < m
        for n_ in range(anchor, len(chain)):
            cn, tn = conds[n_]
            for m_ in range(n_ + 1, len(chain)):
                cm_, tm = conds[m_]
                for idx in zip(*np.nonzero(chain[n_] & fiber)):
                    v = abs(cn[idx] / tn * scale[n_] - cm_[idx] / tm * scale[m_])
                    worst_wd = max(worst_wd, v)
        if isinstance(rep, FiniteMeasure):
            measure = FiniteMeasure(space, tuple(values.ravel().tolist()))
        else:
            measure = GridMeasure(space, values.astype(float))
        cal = chain[anchor] & fiber
        fibers[t] = Law.of(measure, cal)
    diag["well_definedness"] = worst_wd
    return ConditionalFamily(T, fibers, rep, diag)


# -- oracle --------------------------------------------------------------------------

def brute_force_oracle(m: FiniteMeasure | Law, T: Statistic) -> ConditionalFamily:
    """Fibres by enumerating ``mu(A ∩ T^-1{t})`` over every subset ``A``.

    The set function is tabulated for all ``2^n`` subsets with exact
    integers, checked to be additive, and its values on singletons give the
    fibre.  Refuses spaces of more than 20 points.
    """
    rep = m.rep if isinstance(m, Law) else m
    if not isinstance(rep, FiniteMeasure) or not rep.exact:
        raise ResolutionError("the oracle needs a finite space with rational weights")
    n = len(rep.space)
    if n > ORACLE_MAX_POINTS:
        raise SpaceTooLargeError(f"oracle refuses {n} points (limit {ORACLE_MAX_POINTS})")
    if T.kind != "mapping" or T.source != rep.space:
        raise ResolutionError("the oracle needs a mapping statistic on the measure's space")
    mu, den = _as_integers(rep.weights)
    labels = T.labels.tolist()
    fibers = {}
    for t in T.target.points:
        w = [v if lab == t else 0 for v, lab in zip(mu, labels)]
        table = _subset_sums(w)
        if table[-1] == 0:
            continue
        # additivity across every split of every subset off its lowest point
        bits = np.arange(1, 1 << n)
        low = bits & -bits
        if np.any(table[bits] != table[bits ^ low] + table[low]):
            raise ArithmeticError("subset table is not additive")
        single = [Fraction(int(table[1 << k]), den) for k in range(n)]
        fibers[t] = Law.of(FiniteMeasure(rep.space, tuple(single)))
    return ConditionalFamily(T, fibers, rep, {"subsets": 1 << n})


# -- consistency -------------------------------------------------------------------

def fiber_renyi_violation(F: ConditionalFamily, bunch: Bunch | Sequence, test_sets: Iterable) -> Real:
    """Largest violation of ``mu^t(A|B1) mu^t(B1|B2) = mu^t(A B1|B2)`` over fibres.

    Pairs with ``mu^t(B1 | B2) = 0`` are skipped (the identity is only
    required where the denominator is positive).
    """
    T = F.statistic
    chain = _bunch_masks(T.source, bunch)
    tests = [resolve(T.source, a).mask for a in test_sets]
    worst = 0
    for t in F.fibers:
        fm = _fiber_source_masses(F, t)
        for i, b1 in enumerate(chain):
            m1 = _sum(fm[b1])
            for b2 in chain[i + 1:]:
                m2 = _sum(fm[b2])
                if m1 == 0 or m2 == 0:
                    continue
                p12 = _sum(fm[b1 & b2]) / m2
                for a in tests:
                    lhs = _sum(fm[a & b1]) / m1 * p12
                    rhs = _sum(fm[a & b1 & b2]) / m2
                    worst = max(worst, abs(lhs - rhs))
    return worst


def families_agree(f1: ConditionalFamily, f2: ConditionalFamily, tol: float = 0.0) -> bool:
    """Same domain and fibre-by-fibre proportional."""
    if set(f1.fibers) != set(f2.fibers):
        return False
    return all(proportional(f1.fibers[t], f2.fibers[t], tol).proportional for t in f1.fibers)


# -- randomised campaign ----------------------------------------------------------------

@dataclass(frozen=True)
class CampaignReport:
    cases: int
    matches: int
    defining_checked: int
    defining_zero: int
    max_well_definedness: Real
    mismatches: tuple = ()

    @property
    def passed(self) -> bool:
        return self.matches == self.cases and self.defining_zero == self.defining_checked

    def to_dict(self) -> dict:
        return {"cases": self.cases, "matches": self.matches,
                "definingEquationChecked": self.defining_checked,
                "definingEquationZero": self.defining_zero,
                "maxWellDefinedness": _num(self.max_well_definedness),
                "mismatches": list(self.mismatches), "passed": self.passed}


def random_case(rng: random.Random, max_points: int = 12, max_labels: int = 4):
    """A random rational measure, statistic and strictly increasing 3-chain."""
    n = rng.randint(3, max_points)
    weights = [Fraction(rng.randint(0, 9), rng.randint(1, 6)) for _ in range(n)]
    if not any(weights):
        weights[rng.randrange(n)] = Fraction(1)
    points = tuple(range(n))
    k = rng.randint(1, max_labels)
    labels = {p: rng.randrange(k) for p in points}
    m = FiniteMeasure(FiniteSpace(points), tuple(weights))
    positive = [p for p in points if weights[p] > 0]
    first = rng.choice(positive)
    order = [first] + rng.sample([p for p in points if p != first], n - 1)
    a = rng.randint(1, n - 2)
    b = rng.randint(a + 1, n - 1)
    chain = [frozenset(order[:a]), frozenset(order[:b]), frozenset(points)]
    return m, Statistic.mapping(m.space, labels), chain


def fiber_campaign(cases: int = 200, seed: int = 0, max_points: int = 12, max_labels: int = 4) -> CampaignReport:
    """Compare the three fibre constructions on seeded random rational measures.

    Every case also runs the exhaustive defining-equation check when the
    space has at most 10 points.
    """
    rng = random.Random(seed)
    matches = checked = zero = 0
    worst_wd: Real = 0
    mismatches = []
    for case in range(cases):
        m, T, chain = random_case(rng, max_points, max_labels)
        law = Law.of(m)
        bunch = Bunch.of(law, chain)
        direct = condition_on_statistic(law, T, bunch)
        nested = nested_bunch_construction(law, T, bunch)
        oracle = brute_force_oracle(m, T)
        worst_wd = max(worst_wd, nested.diagnostics["well_definedness"])
        if families_agree(direct, oracle) and families_agree(nested, oracle):
            matches += 1
        else:
            mismatches.append(case)
        if len(m.space) <= EXHAUSTIVE_MAX_POINTS:
            checked += 1
            if verify_defining_equation_exhaustive(direct, law).exact_zero:
                zero += 1
    return CampaignReport(cases, matches, checked, zero, worst_wd, tuple(mismatches))
