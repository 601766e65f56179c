"""Truncation-extension protocol and axis-at-a-time integration.

Integrals over an unbounded direction are evaluated on the stored truncation
and then on successive outward segments (each roughly doubling the distance
to the open end).  The sequence of segment masses ("increments") decides the
verdict:

* the last increment is negligible, or increments decay geometrically:
  the integral converges (a geometric tail estimate is added);
* increments stay flat or grow at a steady ratio: the integral diverges,
  logarithmically when the running total grows by less than
  ``growth_ratio`` per step, like a power otherwise.  Steadily *growing*
  increments are only accepted as divergence after ``power_steps`` steps,
  since an integrand whose bulk lies far past the truncation looks the same
  until its peak is passed;
* anything else after ``max_steps``: unresolved.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ResolutionError
from .spaces import Axis, _mesh, _outer

UNRESOLVED, CONVERGED, DIVERGENT = 0, 1, 2
STATUS_NAMES = {UNRESOLVED: "unresolved", CONVERGED: "converged", DIVERGENT: "divergent"}

_CHUNK = 1 << 21


@dataclass(frozen=True)
class ExtensionProtocol:
    steps: int = 6
    power_steps: int = 16
    max_steps: int = 48
    growth_ratio: float = 1.5
    decay_ratio: float = 0.75
    flat_ratio: float = 0.95
    steady_spread: float = 1.25
    rtol: float = 1e-13
    tail_rtol: float = 1e-10
    max_cells: int = 1 << 22

    def __post_init__(self):
        if self.steps < 3:
            raise ValueError("the extension protocol needs at least 3 steps")
        if not self.steps <= self.power_steps <= self.max_steps:
            raise ValueError("need steps <= power_steps <= max_steps")
        if not (0 < self.decay_ratio < self.flat_ratio <= 1 < self.growth_ratio):
            raise ValueError("need 0 < decay_ratio < flat_ratio <= 1 < growth_ratio")
        if self.rtol <= 0 or self.tail_rtol <= 0:
            raise ValueError("rtol and tail_rtol must be positive")


DEFAULT_PROTOCOL = ExtensionProtocol()


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))
    return r


def classify(total: np.ndarray, window: Sequence[np.ndarray], protocol: ExtensionProtocol,
             step: int | None = None):
    """Classify running totals given the last (up to four) increments.

    ``step`` is the number of extension steps taken so far (``None`` means
    "enough" for every rule).

    Returns ``(status, tail)`` arrays shaped like ``total``.
    """
    total = np.asarray(total, dtype=float)
    status = np.full(total.shape, UNRESOLVED, dtype=np.int8)
    tail = np.zeros(total.shape)
    status[~np.isfinite(total)] = DIVERGENT
    if not window:
        return status, tail
    last = np.asarray(window[-1], dtype=float)
    tiny = np.isfinite(total) & (last <= protocol.rtol * total)
    status[tiny] = CONVERGED
    if len(window) < 4:
        return status, tail
    ratios = [_ratio(np.asarray(window[j]), np.asarray(window[j - 1])) for j in (1, 2, 3)]
    rmax = np.maximum.reduce(ratios)
    rmin = np.minimum.reduce(ratios)
    open_ = (status == UNRESOLVED)
    decaying = open_ & (rmax <= protocol.decay_ratio)
    r = np.clip(ratios[-1], 0.0, protocol.decay_ratio)
    tail = np.where(decaying, last * r / (1.0 - r), tail)
    if step is not None:
        # keep walking until the extrapolated tail is negligible
        decaying &= tail <= protocol.tail_rtol * total
        tail = np.where(decaying, tail, 0.0)
    status[decaying] = CONVERGED
    with np.errstate(divide="ignore", invalid="ignore"):
        steady = (rmin >= protocol.flat_ratio) & np.isfinite(rmax) & (rmax <= protocol.steady_spread * rmin)
    if step is not None and step < protocol.power_steps:
        steady &= rmin < protocol.growth_ratio
    status[open_ & ~decaying & steady] = DIVERGENT
    return status, tail


def trend(previous: float, current: float, protocol: ExtensionProtocol) -> str:
    if not math.isfinite(current):
        return "infinite"
    if previous > 0 and current / previous >= protocol.growth_ratio:
        return "power"
    return "logarithmic"


@dataclass(frozen=True)
class EndTrace:
    """Extension trace at one open end for one representative cell."""

    axis: str
    end: str
    masses: tuple[float, ...]
    status: str
    trend: str | None

    @property
    def increments(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.masses, self.masses[1:]))

    def to_dict(self) -> dict:
        return {"axis": self.axis, "end": self.end, "masses": list(self.masses),
                "increments": list(self.increments), "status": self.status, "trend": self.trend}


def extend_sum(segment_mass: Callable[[Axis], np.ndarray], axis: Axis, end: str,
               protocol: ExtensionProtocol, base: np.ndarray):
    """Walk outward at one end of ``axis``.

    ``segment_mass(seg)`` returns the (array of) masses contributed by the
    extension segment ``seg``.  Returns ``(extra, status, trace_cells, steps)``
    where ``extra`` is the summed increments plus tail estimates and
    ``trace_cells`` the cumulative masses of every cell per step (flattened,
    one row per step, first row = base).
    """
    base = np.asarray(base, dtype=float)
    running = base.copy()
    window: list[np.ndarray] = []
    rows = [base.ravel().copy()]
    status = np.full(base.shape, UNRESOLVED, dtype=np.int8)
    tail = np.zeros(base.shape)
    k = 0
    while k < protocol.max_steps:
        try:
            seg = axis.extension_segment(end, k)
        except ResolutionError:
            break
        if seg.cells > protocol.max_cells:
            break
        inc = np.asarray(segment_mass(seg), dtype=float)
        running = running + inc
        rows.append(running.ravel().copy())
        window = (window + [inc])[-4:]
        k += 1
        if k >= protocol.steps:
            status, tail = classify(running, window, protocol, k)
            if not np.any(status == UNRESOLVED):
                break
    if k < protocol.steps or np.any(status == UNRESOLVED):
        status, tail = classify(running, window, protocol)
    extra = running - base + tail
    extra = np.where(status == DIVERGENT, np.inf, extra)
    return extra, status, np.array(rows), k


def _integrate_nodes(fn: Callable, coords: list, i: int, seg: Axis) -> np.ndarray:
    """Sum over the nodes of ``seg`` of fn(coords with axis i at the node) * weight."""
    shape = np.broadcast_shapes(*[np.shape(c) for j, c in enumerate(coords) if j != i])
    size = max(1, int(np.prod(shape)))
    chunk = max(1, _CHUNK // size)
    centers, weights = seg.centers, seg.weights
    acc = np.zeros(shape)
    for s in range(0, len(centers), chunk):
        c = centers[s:s + chunk]
        w = weights[s:s + chunk]
        args = []
        for j, x in enumerate(coords):
            if j == i:
                args.append(c.reshape((-1,) + (1,) * len(shape)))
            else:
                args.append(np.broadcast_to(x, shape)[None, ...])
        vals = np.asarray(fn(*args), dtype=float)
        vals = np.broadcast_to(vals, (len(c),) + shape)
        acc = acc + np.sum(vals * w.reshape((-1,) + (1,) * len(shape)), axis=0)
    return acc


@dataclass
class AxisIntegral:
    values: np.ndarray
    status: np.ndarray
    traces: dict


def integrate_axis(fn: Callable, axes: Sequence[Axis], coords: list, i: int,
                   protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> AxisIntegral:
    """Integrate ``fn`` along axis ``i`` at the given coordinates of the others.

    ``coords[i]`` is ignored.  Extendable ends of ``axes[i]`` are followed with
    the extension protocol; cells whose integral diverges get +inf.
    """
    axis = axes[i]
    base = _integrate_nodes(fn, coords, i, axis)
    values = base.copy()
    status = np.full(base.shape, CONVERGED, dtype=np.int8)
    status[~np.isfinite(base)] = DIVERGENT
    traces = {}
    for end in ("low", "high"):
        if not axis.can_extend(end):
            continue
        extra, st, rows, _ = extend_sum(lambda seg: _integrate_nodes(fn, coords, i, seg),
                                        axis, end, protocol, base)
        values = values + extra
        status = np.where((st == DIVERGENT) | (status == DIVERGENT), DIVERGENT,
                          np.where((st == UNRESOLVED) | (status == UNRESOLVED), UNRESOLVED, CONVERGED))
        traces[end] = (st, rows)
    values = np.where(status == DIVERGENT, np.inf, values)
    return AxisIntegral(values, status, traces)


def representative_trace(result: AxisIntegral, axis_name: str, protocol: ExtensionProtocol) -> EndTrace | None:
    """Trace of the first divergent cell (or of cell 0 when nothing diverges)."""
    pick = None
    for end, (st, rows) in result.traces.items():
        flat = st.ravel()
        idx = np.flatnonzero(flat == DIVERGENT)
        if idx.size:
            pick = (end, int(idx[0]), rows, st)
            break
    if pick is None:
        if not result.traces:
            return None
        end, (st, rows) = next(iter(result.traces.items()))
        pick = (end, 0, rows, st)
    end, j, rows, st = pick
    masses = tuple(float(v) for v in rows[:, j])
    tr = trend(masses[-2], masses[-1], protocol) if len(masses) > 1 else None
    return EndTrace(axis_name, end, masses, STATUS_NAMES[int(st.ravel()[j])], tr)


@dataclass(frozen=True)
class DensityField:
    """A lazily evaluated density on a product of axes (any dimension).

    ``fn(*coords)`` takes broadcastable coordinate arrays in axis order.
    """

    axes: tuple[Axis, ...]
    fn: Callable

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def evaluate(self) -> np.ndarray:
        out = np.asarray(self.fn(*_mesh([a.centers for a in self.axes])), dtype=float)
        return np.broadcast_to(out, tuple(a.cells for a in self.axes)).copy()

    def integrate_out(self, name: str, protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> "DensityField":
        i = self.names.index(name)
        axes = self.axes
        fn = self.fn

        def reduced(*kept):
            coords = list(kept[:i]) + [None] + list(kept[i:])
            return integrate_axis(fn, axes, coords, i, protocol).values

        return DensityField(axes[:i] + axes[i + 1:], reduced)

    def restrict(self, bounds: dict) -> "DensityField":
        """Same density on sub-axes given as ``{name: (i0, i1)}`` cell ranges."""
        axes = tuple(a.sub(*bounds[a.name]) if a.name in bounds else a for a in self.axes)
        return DensityField(axes, self.fn)


def product_mass(fn: Callable, pieces: Sequence[Axis]) -> float:
    vals = np.asarray(fn(*_mesh([p.centers for p in pieces])), dtype=float)
    vals = np.broadcast_to(vals, tuple(p.cells for p in pieces))
    if np.isinf(vals).any():
        return math.inf
    return float(np.sum(vals * _outer([p.weights for p in pieces])))


def region_trace(fn: Callable, axes: Sequence[Axis], ends: Sequence[tuple[int, str]],
                 protocol: ExtensionProtocol = DEFAULT_PROTOCOL):
    """Masses of the region obtained by extending all ``ends`` together.

    Returns ``(masses, status, tail, regions)`` where ``masses[k]`` is the mass
    after ``k`` steps and ``regions[k]`` the per-axis (lo, hi) bounds.
    """
    pieces = [[a] for a in axes]
    base = product_mass(fn, axes)
    masses = [base]
    regions = [[(a.lo, a.hi) for a in axes]]
    window: list[np.ndarray] = []
    status, tail = np.array(UNRESOLVED), np.array(0.0)
    k = 0
    while k < protocol.max_steps:
        new = [[] for _ in axes]
        try:
            for i, end in ends:
                seg = axes[i].extension_segment(end, k)
                if seg.cells > protocol.max_cells:
                    raise ResolutionError("extension exceeds cell budget")
                new[i].append(seg)
        except ResolutionError:
            break
        inc = 0.0
        options = [[(p, False) for p in pieces[i]] + [(p, True) for p in new[i]] for i in range(len(axes))]
        for combo in itertools.product(*options):
            if any(is_new for _, is_new in combo):
                inc += product_mass(fn, [p for p, _ in combo])
        for i in range(len(axes)):
            pieces[i].extend(new[i])
        masses.append(masses[-1] + inc)
        regions.append([(min(p.lo for p in ps), max(p.hi for p in ps)) for ps in pieces])
        window = (window + [np.array(inc)])[-4:]
        k += 1
        if k >= protocol.steps:
            status, tail = classify(np.array(masses[-1]), window, protocol, k)
            if int(status) != UNRESOLVED:
                break
    if k < protocol.steps or int(status) == UNRESOLVED:
        status, tail = classify(np.array(masses[-1]), window, protocol)
    return masses, int(status), float(tail), regions
