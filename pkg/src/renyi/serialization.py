"""JSON and CSV forms of laws.

Rationals are written as ``"p/q"`` strings and infinite masses as ``"inf"``
so finite rational laws round-trip exactly; grid densities round-trip
bit-exactly because JSON floats use the shortest repr.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from typing import Any

import numpy as np

from .measures import FiniteMeasure, GridMeasure, Law
from .spaces import Axis, FiniteSpace, GriddedSpace


def encode_mass(v) -> Any:
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if math.isinf(v):
        return "inf"
    return v


def decode_mass(v):
    if isinstance(v, str):
        if v == "inf":
            return math.inf
        return Fraction(v)
    return v


def _encode_label(p):
    return list(map(_encode_label, p)) if isinstance(p, tuple) else p


def _decode_label(p):
    return tuple(map(_decode_label, p)) if isinstance(p, list) else p


def space_to_dict(space) -> dict:
    if isinstance(space, FiniteSpace):
        return {"kind": "finite", "points": [_encode_label(p) for p in space.points]}
    return {"kind": "grid", "axes": [{"name": a.name, "lo": a.lo, "hi": a.hi, "cells": a.cells, "scale": a.scale,
                                      "extendLow": a.extend_low, "extendHigh": a.extend_high} for a in space.axes]}


def space_from_dict(d: dict):
    if d["kind"] == "finite":
        return FiniteSpace(tuple(_decode_label(p) for p in d["points"]))
    return GriddedSpace(tuple(Axis(a["name"], a["lo"], a["hi"], a["cells"], a["scale"], a["extendLow"],
                                   a["extendHigh"]) for a in d["axes"]))


def law_to_dict(law: Law) -> dict:
    rep = law.rep
    out: dict[str, Any] = {"space": space_to_dict(rep.space)}
    if isinstance(rep, FiniteMeasure):
        out["weights"] = [encode_mass(w) for w in rep.weights]
    else:
        out["shape"] = list(rep.space.shape)
        out["density"] = [encode_mass(v) for v in rep.density.ravel().tolist()]
    out["calibration"] = None if law.calibration is None else [int(i) for i in np.flatnonzero(law.calibration)]
    if law.verdict is not None:
        out["verdict"] = law.verdict.to_dict()
    return out


def law_from_dict(d: dict) -> Law:
    """Rebuild a law with its canonical representative (verdicts are not restored)."""
    space = space_from_dict(d["space"])
    if isinstance(space, FiniteSpace):
        rep = FiniteMeasure(space, tuple(decode_mass(w) for w in d["weights"]))
    else:
        dens = np.array([decode_mass(v) for v in d["density"]], dtype=float).reshape(space.shape)
        rep = GridMeasure(space, dens)
    cal = None
    if d.get("calibration") is not None:
        cal = np.zeros(int(np.prod(space.shape)), dtype=bool)
        cal[d["calibration"]] = True
        cal = cal.reshape(space.shape)
        cal.setflags(write=False)
    return Law(rep, cal)


def dumps(obj: Any) -> str:
    """Deterministic JSON (sorted keys, fixed separators, trailing newline)."""
    return json.dumps(clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def clean(o: Any) -> Any:
    """Plain JSON values: +inf as ``"inf"``, nan as ``None``, rationals as strings."""
    if isinstance(o, dict):
        return {str(k): clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [clean(v) for v in o]
    if isinstance(o, float) and math.isnan(o):
        return None
    if isinstance(o, (float, int, Fraction, np.floating, np.integer, np.bool_)) and not isinstance(o, bool):
        if isinstance(o, np.floating) and math.isnan(float(o)):
            return None
        return encode_mass(o)
    if o is None or isinstance(o, (str, bool)):
        return o
    return clean(_default(o))


def _default(o):
    if isinstance(o, (Fraction, np.floating, np.integer, np.bool_)):
        return encode_mass(o)
    if isinstance(o, np.ndarray):
        return [encode_mass(v) for v in o.tolist()]
    if isinstance(o, (set, frozenset)):
        return sorted(map(repr, o))
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def law_to_csv(law: Law) -> str:
    """Axis coordinates (cell centres or labels) then the density, 17 significant digits."""
    rep = law.rep
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(rep, FiniteMeasure):
        w.writerow(["point", "weight"])
        for p, v in zip(rep.space.points, rep.weights):
            w.writerow([repr(p), _fmt(v)])
        return buf.getvalue()
    axes = rep.space.axes
    w.writerow([a.name for a in axes] + ["density"])
    for idx in np.ndindex(*rep.space.shape):
        w.writerow([_fmt(a.centers[i]) for a, i in zip(axes, idx)] + [_fmt(rep.density[idx])])
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    v = float(v)
    if math.isinf(v):
        return "inf"
    return "%.17g" % v
