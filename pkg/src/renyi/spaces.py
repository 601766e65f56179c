"""Ground spaces: finite label sets and gridded boxes of dimension 1 to 3.

A gridded axis is uniform in a working coordinate ``u`` chosen by its scale:

=========  ===================  ====================================
scale      u(x)                 typical support
=========  ===================  ====================================
linear     x                    the real line or a bounded interval
log        ln x                 (0, inf)
logit      ln(x / (1 - x))      (0, 1)
counts     x (integers)         {0, 1, 2, ...} with counting measure
=========  ===================  ====================================

Cell quadrature weights are ``dx/du`` at the cell centre times the spacing in
``u`` (the midpoint rule in the working coordinate).  For the linear scale this
is the cell width; for counts it is 1.

Truncation bounds are a numerical device.  An axis flagged as extendable at an
end stands for a support that continues past that bound; extension segments
(:meth:`Axis.extension_segment`) walk outward one bound-doubling at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ResolutionError

SCALES = ("linear", "log", "logit", "counts")
_SNAP_RTOL = 1e-9


def _to_u(scale: str, x):
    if scale == "log":
        return np.log(x)
    if scale == "logit":
        return np.log(x) - np.log1p(-np.asarray(x, dtype=float))
    return np.asarray(x, dtype=float)


def _from_u(scale: str, u):
    if scale == "log":
        return np.exp(u)
    if scale == "logit":
        return 1.0 / (1.0 + np.exp(-np.asarray(u, dtype=float)))
    return np.asarray(u, dtype=float)


def _jacobian(scale: str, x):
    if scale == "log":
        return np.asarray(x, dtype=float)
    if scale == "logit":
        return x * (1.0 - x)
    return np.ones_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    cells: int
    scale: str = "linear"
    extend_low: bool = False
    extend_high: bool = False

    def __post_init__(self):
        if self.scale not in SCALES:
            raise ValueError(f"unknown axis scale {self.scale!r}")
        if not self.lo < self.hi:
            raise ValueError(f"axis {self.name!r}: need lo < hi, got [{self.lo}, {self.hi}]")
        if self.cells < 1:
            raise ValueError(f"axis {self.name!r}: need at least one cell")
        if self.scale == "log" and self.lo <= 0:
            raise ValueError(f"log axis {self.name!r} needs lo > 0")
        if self.scale == "logit" and not (0 < self.lo and self.hi < 1):
            raise ValueError(f"logit axis {self.name!r} needs 0 < lo < hi < 1")
        if self.scale == "counts":
            if int(self.lo) != self.lo or int(self.hi) != self.hi:
                raise ValueError(f"counts axis {self.name!r} needs integer bounds")
            if self.cells != int(self.hi) - int(self.lo) + 1:
                raise ValueError(f"counts axis {self.name!r}: cells must equal hi - lo + 1")

    @classmethod
    def counts(cls, name: str, max_count: int, extend_high: bool = True) -> "Axis":
        return cls(name, 0, max_count, max_count + 1, "counts", False, extend_high)

    @classmethod
    def geometric(cls, name: str, lo: float, hi: float, cells: int,
                  extend_low: bool = True, extend_high: bool = True) -> "Axis":
        return cls(name, lo, hi, cells, "log", extend_low, extend_high)

    # -- geometry -----------------------------------------------------------
    @cached_property
    def spacing(self) -> float:
        """Cell width in the working coordinate."""
        if self.scale == "counts":
            return 1.0
        return float((_to_u(self.scale, self.hi) - _to_u(self.scale, self.lo)) / self.cells)

    @cached_property
    def edges(self) -> np.ndarray:
        if self.scale == "counts":
            e = np.arange(self.lo, self.hi + 2, dtype=float) - 0.5
        else:
            u = np.linspace(_to_u(self.scale, self.lo), _to_u(self.scale, self.hi), self.cells + 1)
            e = _from_u(self.scale, u)
            e[0], e[-1] = self.lo, self.hi
        e.setflags(write=False)
        return e

    @cached_property
    def centers(self) -> np.ndarray:
        if self.scale == "counts":
            c = np.arange(self.lo, self.hi + 1, dtype=float)
        else:
            u = np.linspace(_to_u(self.scale, self.lo), _to_u(self.scale, self.hi), self.cells + 1)
            c = _from_u(self.scale, 0.5 * (u[:-1] + u[1:]))
        c.setflags(write=False)
        return c

    @cached_property
    def weights(self) -> np.ndarray:
        w = _jacobian(self.scale, self.centers) * self.spacing
        w = np.asarray(w, dtype=float)
        w.setflags(write=False)
        return w

    def refined(self) -> "Axis":
        """The same axis with every cell halved (counts axes are returned as is)."""
        if self.scale == "counts":
            return self
        return Axis(self.name, self.lo, self.hi, 2 * self.cells, self.scale,
                    self.extend_low, self.extend_high)

    def sub(self, i0: int, i1: int) -> "Axis":
        """Axis made of cells ``i0 .. i1-1``, keeping the spacing."""
        if not 0 <= i0 < i1 <= self.cells:
            raise ResolutionError(f"bad cell range [{i0}, {i1}) on axis {self.name!r}")
        if self.scale == "counts":
            return Axis(self.name, self.lo + i0, self.lo + i1 - 1, i1 - i0, "counts",
                        self.extend_low and i0 == 0, self.extend_high and i1 == self.cells)
        return Axis(self.name, float(self.edges[i0]), float(self.edges[i1]), i1 - i0, self.scale,
                    self.extend_low and i0 == 0, self.extend_high and i1 == self.cells)

    # -- extension ----------------------------------------------------------
    def can_extend(self, end: str) -> bool:
        if end == "low":
            if not self.extend_low:
                return False
            return not (self.scale in ("linear", "counts") and self.lo == 0)
        if not self.extend_high:
            return False
        return not (self.scale == "linear" and self.hi == 0)

    def extension_segment(self, end: str, k: int) -> "Axis":
        """Cells added by the ``k``-th outward step (k = 0, 1, ...) at ``end``.

        Each step roughly doubles the distance to the finite boundary point (0
        for log axes, 0 or 1 for logit axes) or doubles the unbounded bound.
        """
        if not self.can_extend(end):
            raise ResolutionError(f"axis {self.name!r} is not extendable at the {end} end")
        s = self.scale
        if s in ("log", "logit"):
            h = self.spacing
            n = max(1, round(math.log(2.0) / h))
            if end == "low":
                u0 = float(_to_u(s, self.lo))
                ua, ub = u0 - (k + 1) * n * h, u0 - k * n * h
            else:
                u0 = float(_to_u(s, self.hi))
                ua, ub = u0 + k * n * h, u0 + (k + 1) * n * h
            lo, hi = float(_from_u(s, ua)), float(_from_u(s, ub))
            if not lo < hi or (s == "logit" and not (0 < lo and hi < 1)) or lo <= 0:
                raise ResolutionError(f"axis {self.name!r}: extension exhausted floating range")
            return Axis(self.name, lo, hi, n, s)
        if s == "counts":
            start = (int(self.hi) + 1) * 2 ** k
            return Axis(self.name, start, 2 * start - 1, start, "counts")
        w = (self.hi - self.lo) / self.cells
        if end == "low":
            if self.lo < 0:
                a, b = self.lo * 2 ** (k + 1), self.lo * 2 ** k
            else:
                a, b = self.lo / 2 ** (k + 1), self.lo / 2 ** k
        else:
            if self.hi > 0:
                a, b = self.hi * 2 ** k, self.hi * 2 ** (k + 1)
            else:
                a, b = self.hi / 2 ** k, self.hi / 2 ** (k + 1)
        # widths grow with distance, so far segments are graded rather than refined
        n = max(1, min(round((b - a) / w), max(self.cells, 16)))
        return Axis(self.name, a, b, n, "linear")

    # -- sets ---------------------------------------------------------------
    def snap(self, lo: float, hi: float) -> tuple[int, int, bool, bool]:
        """Cell index range covering the interval [lo, hi].

        Returns ``(i0, i1, open_low, open_high)`` where the open flags report
        that the interval runs past an extendable truncation bound.  For counts
        axes the bounds are inclusive integer labels.
        """
        open_low = open_high = False
        if self.scale == "counts":
            if hi > self.hi:
                if self.can_extend("high"):
                    if not math.isinf(hi):
                        raise ResolutionError(
                            f"bound {hi} lies beyond the truncation of axis {self.name!r}; "
                            "only unbounded (open) ends can be resolved past it")
                    open_high = True
                hi = self.hi
            lo = max(lo, self.lo)
            if int(lo) != lo or int(hi) != hi:
                raise ResolutionError(f"counts axis {self.name!r} needs integer bounds")
            if hi < lo:
                raise ResolutionError(f"empty interval on axis {self.name!r}")
            return int(lo - self.lo), int(hi - self.lo) + 1, open_low, open_high

        e = self.edges
        if lo < e[0] and not _close(lo, e[0]):
            if self.can_extend("low"):
                if not (math.isinf(lo) or lo <= _natural_low(self.scale)):
                    raise ResolutionError(
                        f"bound {lo} lies beyond the truncation of axis {self.name!r}; "
                        "only unbounded (open) ends can be resolved past it")
                open_low = True
            lo = e[0]
        if hi > e[-1] and not _close(hi, e[-1]):
            if self.can_extend("high"):
                if not (math.isinf(hi) or hi >= _natural_high(self.scale)):
                    raise ResolutionError(
                        f"bound {hi} lies beyond the truncation of axis {self.name!r}; "
                        "only unbounded (open) ends can be resolved past it")
                open_high = True
            hi = e[-1]
        i0 = _edge_index(e, lo, self.name)
        i1 = _edge_index(e, hi, self.name)
        if i1 <= i0:
            raise ResolutionError(f"empty interval [{lo}, {hi}] on axis {self.name!r}")
        return i0, i1, open_low, open_high


def _natural_low(scale: str) -> float:
    return 0.0 if scale in ("log", "logit") else -math.inf


def _natural_high(scale: str) -> float:
    return 1.0 if scale == "logit" else math.inf


def _close(a: float, b: float, atol: float = 0.0) -> bool:
    if not (math.isfinite(a) and math.isfinite(b)):
        return a == b
    return abs(a - b) <= max(_SNAP_RTOL * max(abs(a), abs(b)), atol)


def _edge_index(edges: np.ndarray, x: float, name: str) -> int:
    i = int(np.argmin(np.abs(edges - x)))
    width = float(np.min(np.diff(edges[max(i - 1, 0):i + 2])))
    if not _close(x, float(edges[i]), _SNAP_RTOL * width):
        raise ResolutionError(f"bound {x} is not a cell edge of axis {name!r}")
    return i


@dataclass(frozen=True)
class FiniteSpace:
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if len(set(self.points)) != len(self.points):
            raise ValueError("finite space labels must be distinct")
        if not self.points:
            raise ValueError("finite space needs at least one point")

    @cached_property
    def index(self) -> dict:
        return {p: i for i, p in enumerate(self.points)}

    @property
    def shape(self) -> tuple[int]:
        return (len(self.points),)

    def __len__(self) -> int:
        return len(self.points)

    def mask(self, labels: Iterable[Hashable]) -> np.ndarray:
        m = np.zeros(len(self.points), dtype=bool)
        for p in labels:
            try:
                m[self.index[p]] = True
            except KeyError:
                raise ResolutionError(f"point {p!r} is not in the space") from None
        return m

    def labels(self, mask: np.ndarray) -> frozenset:
        return frozenset(p for p, keep in zip(self.points, mask) if keep)


@dataclass(frozen=True)
class GriddedSpace:
    axes: tuple[Axis, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not 1 <= len(self.axes) <= 3:
            raise ValueError("gridded spaces have dimension 1 to 3")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ValueError(f"axis names must be distinct: {names}")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.cells for a in self.axes)

    def axis_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ResolutionError(f"no axis named {name!r}") from None

    def mesh(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays of the cell centres."""
        return _mesh([a.centers for a in self.axes])

    @cached_property
    def cell_weights(self) -> np.ndarray:
        w = _outer([a.weights for a in self.axes])
        w.setflags(write=False)
        return w

    def sub(self, ranges: Sequence[tuple[int, int]]) -> "GriddedSpace":
        return GriddedSpace(tuple(a.sub(i0, i1) for a, (i0, i1) in zip(self.axes, ranges)))


def _mesh(vectors: Sequence[np.ndarray]) -> list[np.ndarray]:
    n = len(vectors)
    out = []
    for i, v in enumerate(vectors):
        shape = [1] * n
        shape[i] = len(v)
        out.append(np.asarray(v, dtype=float).reshape(shape))
    return out


def _outer(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(tuple(len(v) for v in vectors))
    for m in _mesh(vectors):
        out = out * m
    return out


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; axes not mentioned span the whole space.

    Bounds may be infinite (or 0/1 on log/logit axes) to denote a region that
    continues past an extendable truncation bound.
    """

    bounds: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __init__(self, bounds: Mapping[str, tuple[float, float]] | None = None, **kw):
        b = dict(bounds or {})
        b.update(kw)
        object.__setattr__(self, "bounds", {k: (float(v[0]), float(v[1])) for k, v in b.items()})

    def __hash__(self):
        return hash(tuple(sorted(self.bounds.items())))

    def interval(self, axis: Axis) -> tuple[float, float]:
        return self.bounds.get(axis.name, (-math.inf, math.inf))

    def resolve(self, space: GriddedSpace):
        """Cell ranges per axis plus the list of open (extendable) ends."""
        for name in self.bounds:
            space.axis_index(name)
        ranges, open_ends = [], []
        for i, axis in enumerate(space.axes):
            lo, hi = self.interval(axis)
            if axis.name not in self.bounds:
                ranges.append((0, axis.cells))
                continue
            i0, i1, ol, oh = axis.snap(lo, hi)
            ranges.append((i0, i1))
            if ol:
                open_ends.append((i, "low"))
            if oh:
                open_ends.append((i, "high"))
        return ranges, open_ends

    def contains(self, other: "Box") -> bool:
        names = set(self.bounds) | set(other.bounds)
        for n in names:
            a = self.bounds.get(n, (-math.inf, math.inf))
            b = other.bounds.get(n, (-math.inf, math.inf))
            if not (a[0] <= b[0] and b[1] <= a[1]):
                return False
        return True
