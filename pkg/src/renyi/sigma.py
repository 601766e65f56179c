"""Numerical sigma-finiteness probe."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from numbers import Real
from typing import Any

import numpy as np

from . import extended
from .extension import (CONVERGED, DEFAULT_PROTOCOL, DIVERGENT, STATUS_NAMES, ExtensionProtocol,
                        region_trace, trend)
from .measures import Bunch, FiniteMeasure, GridMeasure, Law, _sum
from .spaces import Box


class Kind(str, enum.Enum):
    FINITE = "finite"
    SIGMA_FINITE = "sigma-finite"
    DIVERGENT = "divergent"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class SigmaFinitenessVerdict:
    kind: Kind
    total: Real | None = None
    witness: Bunch | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def proper(self) -> bool:
        return self.kind is Kind.FINITE

    @property
    def sigma_finite(self) -> bool:
        return self.kind in (Kind.FINITE, Kind.SIGMA_FINITE)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind.value}
        if self.total is not None:
            out["total"] = _jsonable(self.total)
        if self.witness is not None:
            out["witness"] = {"sets": [_box_dict(s) for s in self.witness.sets],
                              "masses": [_jsonable(m) for m in self.witness.masses]}
        out["diagnostics"] = self.diagnostics
        return out


def _jsonable(v):
    if extended.is_inf(v):
        return "inf"
    if isinstance(v, (int, float)):
        return v
    return str(v)


def _box_dict(s):
    if isinstance(s, Box):
        return {k: list(v) for k, v in sorted(s.bounds.items())}
    return repr(s)


def sigma_finiteness_probe(law: Law | FiniteMeasure | GridMeasure, protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> SigmaFinitenessVerdict:
    """Classify a law as finite, sigma-finite, divergent or inconclusive.

    * any cell (or atom) with +inf mass: divergent evidence, since a bounded
      cell that already has infinite mass cannot be covered by finite pieces;
    * otherwise each extendable end is followed outward: all ends converging
      gives a finite total; a diverging end gives a sigma-finite verdict whose
      witness bunch is the sequence of growing truncations;
    * anything the protocol cannot decide is inconclusive.
    """
    rep = law.rep if isinstance(law, Law) else law
    if isinstance(rep, FiniteMeasure):
        inf_atoms = [p for p, w in zip(rep.space.points, rep.weights) if extended.is_inf(w)]
        if inf_atoms:
            return SigmaFinitenessVerdict(Kind.DIVERGENT, diagnostics={"infinite_atoms": [repr(p) for p in inf_atoms]})
        return SigmaFinitenessVerdict(Kind.FINITE, _sum(rep.masses()))

    if np.isinf(rep.density).any():
        diag = dict(rep.divergence or {})
        diag.setdefault("infinite_cells", int(np.isinf(rep.density).sum()))
        return SigmaFinitenessVerdict(Kind.DIVERGENT, diagnostics=diag)

    axes = rep.space.axes
    ends = [(i, end) for i, a in enumerate(axes) for end in ("low", "high") if a.can_extend(end)]
    base = _sum(rep.masses())
    if not ends:
        return SigmaFinitenessVerdict(Kind.FINITE, base, diagnostics={"extension": "no extendable ends"})
    if rep.density_fn is None:
        return SigmaFinitenessVerdict(Kind.INCONCLUSIVE,
                                      diagnostics={"reason": "no density function to extend the truncation"})
    fn = rep.density_fn
    per_end = {}
    for i, end in ends:
        masses, status, tail, _ = region_trace(fn, axes, [(i, end)], protocol)
        per_end[f"{axes[i].name}:{end}"] = {
            "masses": masses,
            "increments": [b - a for a, b in zip(masses, masses[1:])],
            "status": STATUS_NAMES[status],
            "trend": trend(masses[-2], masses[-1], protocol) if status == DIVERGENT else None,
        }
    masses, status, tail, regions = region_trace(fn, axes, ends, protocol)
    diag = {"ends": per_end,
            "divergent_ends": [k for k, v in per_end.items() if v["status"] == "divergent"],
            "trace": masses}
    if status == CONVERGED:
        return SigmaFinitenessVerdict(Kind.FINITE, masses[-1] + tail, diagnostics=diag)
    if status == DIVERGENT:
        diag["trend"] = trend(masses[-2], masses[-1], protocol)
        sets = tuple(Box({a.name: r for a, r in zip(axes, reg)}) for reg in regions)
        keep = [0] + [k for k in range(1, len(masses)) if masses[k] > masses[k - 1]]
        witness = Bunch(tuple(sets[k] for k in keep), tuple(masses[k] for k in keep))
        return SigmaFinitenessVerdict(Kind.SIGMA_FINITE, None, witness, diag)
    return SigmaFinitenessVerdict(Kind.INCONCLUSIVE, diagnostics=diag)


def with_verdict(law: Law, protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> Law:
    return law.with_verdict(sigma_finiteness_probe(law, protocol))
