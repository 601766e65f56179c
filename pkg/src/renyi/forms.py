"""Named prior and likelihood forms, and the JSON model specification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from .errors import ResolutionError
from .spaces import Axis

PRIOR_FORMS = ("flat", "scale", "haldane", "power", "exponential", "custom-table")
LIKELIHOOD_FORMS = ("poisson-process", "bernoulli-counts", "exponential-rate", "lebesgue",
                    "stone-dawid", "custom-table")


def _ones(*x):
    return np.ones(np.broadcast_shapes(*(np.shape(v) for v in x)))


def prior_density(form: str, params: Mapping | None = None, axis: Axis | None = None) -> Callable:
    """Density ``pi(theta)`` of a named prior (vectorised over ``theta``)."""
    p = dict(params or {})
    if form == "flat":
        return _ones
    if form == "scale":
        return lambda t: 1.0 / np.asarray(t, dtype=float)
    if form == "haldane":
        return lambda t: 1.0 / (np.asarray(t, dtype=float) * (1.0 - np.asarray(t, dtype=float)))
    if form == "power":
        a = float(p.get("exponent", 0.0))
        return lambda t: np.asarray(t, dtype=float) ** a
    if form == "exponential":
        rate = float(p.get("rate", 1.0))
        return lambda t: np.exp(-rate * np.asarray(t, dtype=float))
    if form == "custom-table":
        return _table_fn(p, axis)
    raise ResolutionError(f"unknown prior form {form!r}; expected one of {PRIOR_FORMS}")


def _table_fn(p: Mapping, axis: Axis | None) -> Callable:
    if axis is None or "values" not in p:
        raise ResolutionError("custom-table needs 'values' sampled at the axis cell centres")
    values = np.asarray(p["values"], dtype=float)
    if values.shape != (axis.cells,):
        raise ResolutionError(f"custom-table has {values.size} values for {axis.cells} cells")

    def fn(t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(axis.edges, t, side="right") - 1, 0, axis.cells - 1)
        inside = (t >= axis.edges[0]) & (t <= axis.edges[-1])
        return np.where(inside, values[idx], 0.0)

    return fn


@dataclass(frozen=True)
class Likelihood:
    """A data density ``f(x | theta)``, vectorised over both arguments."""

    form: str
    params: Mapping = field(default_factory=dict)

    def __call__(self, x, theta):
        x = np.asarray(x, dtype=float)
        t = np.asarray(theta, dtype=float)
        p = self.params
        if self.form == "poisson-process":
            mu = t * float(p.get("t", 1.0))
            return np.exp(xlogy(x, mu) - mu - gammaln(x + 1.0))
        if self.form == "bernoulli-counts":
            n = float(p["n"])
            logc = gammaln(n + 1.0) - gammaln(x + 1.0) - gammaln(n - x + 1.0)
            with np.errstate(invalid="ignore"):
                out = np.exp(logc + xlogy(x, t) + xlog1py(n - x, -t))
            return np.where((x >= 0) & (x <= n), out, 0.0)
        if self.form == "exponential-rate":
            return t * np.exp(-t * x)
        if self.form == "lebesgue":
            return _ones(x, t)
        if self.form == "stone-dawid":
            return t / (t + x) ** 2
        if self.form == "custom-table":
            raise ResolutionError("custom-table likelihoods are given as explicit joint samples")
        raise ResolutionError(f"unknown likelihood form {self.form!r}; expected one of {LIKELIHOOD_FORMS}")


def ratio_density(z, theta):
    """Sampling density of the ratio statistic: ``theta^-1 (1 + z/theta)^-2``."""
    z = np.asarray(z, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return theta ** -1 * (1.0 + z / theta) ** -2


# -- model specification ----------------------------------------------------------

def axis_from_spec(spec: Mapping, default_name: str) -> Axis:
    """Build an axis from ``{name, range: [lo, hi], cells, scale, extendLow, extendHigh}``."""
    name = spec.get("name", default_name)
    if spec.get("type") == "counts":
        return Axis.counts(name, int(spec.get("maxCount", 64)), bool(spec.get("extendHigh", True)))
    try:
        lo, hi = (float(v) for v in spec["range"])
        cells = int(spec["cells"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ResolutionError(f"axis {name!r}: needs 'range' [lo, hi] and 'cells' ({exc})") from None
    if cells < 2:
        raise ResolutionError(f"axis {name!r}: 'cells' must be at least 2")
    scale = spec.get("scale", "log" if lo > 0 and hi > 1 else "linear")
    return Axis(name, lo, hi, cells, scale, bool(spec.get("extendLow", True)), bool(spec.get("extendHigh", True)))


def load_model_spec(spec: Mapping):
    """Build a :class:`~renyi.bayes.StatModel` from a model specification.

    ``{"parameterAxis": {..., "priorDensity": {"form", "params"}},
    "dataAxis": {"type": "counts" | "grid", ...},
    "likelihood": {"form", "params"}}``.  A ``custom-table`` likelihood
    supplies ``params.values`` sampled on the (data x parameter) cell grid.
    """
    from .bayes import bayes_recipe, prior_law, StatModel
    from .measures import GridMeasure, Law
    from .spaces import GriddedSpace

    for key in ("parameterAxis", "dataAxis", "likelihood"):
        if key not in spec:
            raise ResolutionError(f"model specification is missing {key!r}")
    pspec = spec["parameterAxis"]
    theta = axis_from_spec(pspec, "theta")
    prior_spec = pspec.get("priorDensity", {"form": "flat"})
    data = axis_from_spec(spec["dataAxis"], "x")
    lik = spec["likelihood"]
    form = lik.get("form")
    if form == "custom-table":
        values = np.asarray(lik.get("params", {}).get("values"), dtype=float)
        space = GriddedSpace((data, theta))
        if values.shape != space.shape:
            raise ResolutionError(f"likelihood.params.values must have shape {space.shape}")
        pri = prior_density(prior_spec.get("form", "flat"), prior_spec.get("params"), theta)
        joint = GridMeasure(space, values * pri(theta.centers)[None, :])
        return StatModel(Law.of(joint), (data.name,), (theta.name,))
    prior = prior_law(theta, prior_spec.get("form", "flat"), prior_spec.get("params"))
    return bayes_recipe(Likelihood(form, lik.get("params", {})), prior, (data,))
