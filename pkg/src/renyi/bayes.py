"""Statistical models: joint laws over data and parameter axes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from .disintegration import ConditionalFamily, Statistic, condition_on_statistic
from .errors import (ImproperLawError, NonNormalizableError, RecipeUnavailableError, ResolutionError,
                     UndefinedPosteriorError)
from .extension import DEFAULT_PROTOCOL, ExtensionProtocol
from .measures import FiniteMeasure, GridMeasure, Law, _sum, marginal, proportional
from .sigma import Kind, SigmaFinitenessVerdict, sigma_finiteness_probe
from .spaces import Axis, GriddedSpace


def verdict_of(law: Law, protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> SigmaFinitenessVerdict:
    return law.verdict if law.verdict is not None else sigma_finiteness_probe(law, protocol)


@dataclass(frozen=True, eq=False)
class StatModel:
    """A joint law on a gridded product of data axes and parameter axes.

    Joints with a cell of infinite mass are rejected: such a joint is not
    sigma-finite on any truncation.  Derived families are computed once.
    """

    joint: Law
    data_axes: tuple[str, ...]
    param_axes: tuple[str, ...]
    protocol: ExtensionProtocol = DEFAULT_PROTOCOL

    def __post_init__(self):
        space = self.joint.space
        if not isinstance(space, GriddedSpace):
            raise ResolutionError("statistical models live on gridded product spaces")
        names = set(self.data_axes) | set(self.param_axes)
        if names != set(space.names) or set(self.data_axes) & set(self.param_axes):
            raise ResolutionError(f"data {self.data_axes} and parameter {self.param_axes} axes must "
                                  f"partition {space.names}")
        if np.isinf(self.joint.density).any():
            raise NonNormalizableError("the joint has cells of infinite mass; it is not sigma-finite")

    @cached_property
    def posterior_family(self) -> ConditionalFamily:
        return condition_on_statistic(self.joint, Statistic.projection(self.joint.space, self.data_axes),
                                      protocol=self.protocol)

    @cached_property
    def model_family(self) -> ConditionalFamily:
        return condition_on_statistic(self.joint, Statistic.projection(self.joint.space, self.param_axes),
                                      protocol=self.protocol)

    @cached_property
    def prior_marginal(self) -> Law:
        return marginal(self.joint, self.param_axes, self.protocol)

    @cached_property
    def data_marginal(self) -> Law:
        return marginal(self.joint, self.data_axes, self.protocol)


def _fiber(family: ConditionalFamily, value, what: str, protocol: ExtensionProtocol) -> Law:
    t = family.statistic.target_cell(value)
    if t not in family.fibers:
        raise UndefinedPosteriorError(f"{what} at {value!r} is undefined: the slice has zero mass")
    law = family.fibers[t]
    return law.with_verdict(sigma_finiteness_probe(law, protocol))


def posterior(model: StatModel, x) -> Law:
    """Law of the parameters given data ``x``; improper results carry their verdict."""
    return _fiber(model.posterior_family, x, "posterior", model.protocol)


def model_conditional(model: StatModel, theta) -> Law:
    """Law of the data given parameter value ``theta``."""
    return _fiber(model.model_family, theta, "model conditional", model.protocol)


@dataclass(frozen=True, eq=False)
class FactorizationVerdict:
    holds: bool
    prior_verdict: SigmaFinitenessVerdict
    prior: Law
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"holds": self.holds, "priorVerdict": self.prior_verdict.to_dict(), "evidence": self.evidence}


def factorization_check(model: StatModel, tol: float = 1e-9) -> FactorizationVerdict:
    """Does the joint split uniquely as (data law given theta) x (prior)?

    That needs a sigma-finite parameter marginal.  When it is, every
    parameter slice of the joint is compared with its model conditional and
    the model conditional must have finite total mass, so that normalising
    it leaves the parameter marginal as the prior.
    """
    prior = model.prior_marginal
    pv = sigma_finiteness_probe(prior, model.protocol)
    prior = prior.with_verdict(pv)
    if not pv.sigma_finite:
        return FactorizationVerdict(False, pv, prior, {"reason": f"parameter marginal is {pv.kind.value}"})
    family = model.model_family
    rep = model.joint.rep
    T = family.statistic
    worst, improper, checked = 1.0, 0, 0
    for t, law in family.fibers.items():
        dens = rep.density[T._slice_index(t)]
        p = proportional(law, GridMeasure(law.space, dens), tol)
        worst = max(worst, float(p.spread))
        checked += 1
        if not sigma_finiteness_probe(law, model.protocol).proper:
            improper += 1
    holds = worst <= 1 + tol and improper == 0
    evidence = {"slices": checked, "maxSliceSpread": worst, "improperModelSlices": improper}
    return FactorizationVerdict(holds, pv, prior, evidence)


def prior_law(axis: Axis, form: str = "flat", params: Mapping | None = None) -> Law:
    """A prior law on one parameter axis from a named density form."""
    from .forms import prior_density
    fn = prior_density(form, params, axis)
    space = GriddedSpace((axis,))
    return Law.of(GridMeasure.from_function(space, fn))


def bayes_recipe(likelihood: Callable, prior: Law, data_axes: Sequence[Axis],
                 protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> StatModel:
    """Joint ``f(x | theta) pi(theta)`` from a model density and a prior.

    Only available for a sigma-finite prior; otherwise the joint law must be
    specified directly.  ``likelihood(*x, *theta)`` takes data coordinates
    first.
    """
    pv = verdict_of(prior, protocol)
    if not pv.sigma_finite:
        raise RecipeUnavailableError(
            f"the prior is {pv.kind.value}, not sigma-finite: specify the joint law directly instead")
    rep = prior.rep
    if not isinstance(rep, GridMeasure):
        raise ResolutionError("bayes_recipe needs a gridded prior")
    data_axes = tuple(data_axes)
    nd = len(data_axes)
    space = GriddedSpace(data_axes + rep.space.axes)
    pfn = rep.density_fn
    stored = np.asarray(rep.density)

    if pfn is not None:
        def joint_fn(*c):
            return np.asarray(likelihood(*c), dtype=float) * np.asarray(pfn(*c[nd:]), dtype=float)
        density = joint_fn(*space.mesh())
    else:
        joint_fn = None
        mesh = space.mesh()
        density = np.asarray(likelihood(*mesh), dtype=float) * stored.reshape((1,) * nd + stored.shape)
    density = np.broadcast_to(density, space.shape)
    if np.isinf(density).any():
        raise NonNormalizableError("the recipe produced cells of infinite mass")
    joint = Law.of(GridMeasure(space, density, joint_fn))
    return StatModel(joint, tuple(a.name for a in data_axes), rep.space.names, protocol)


def sequential_update(prior: Law, likelihood: Callable, x, protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> Law:
    """Law proportional to ``f(x | theta) pi(theta)`` with a fresh verdict.

    ``likelihood(x, theta)`` for gridded priors; for finite priors it is
    called with each point label and may return exact rationals.
    """
    pv = verdict_of(prior, protocol)
    if not pv.sigma_finite:
        raise RecipeUnavailableError(f"the prior is {pv.kind.value}, not sigma-finite")
    rep = prior.rep
    xs = tuple(x) if isinstance(x, (tuple, list)) else (x,)
    if isinstance(rep, FiniteMeasure):
        weights = tuple(likelihood(*xs, p) * w for p, w in zip(rep.space.points, rep.weights))
        new = FiniteMeasure(rep.space, weights)
    else:
        lik_fn = lambda *t: np.asarray(likelihood(*xs, *t), dtype=float)
        dens = lik_fn(*rep.space.mesh()) * rep.density
        fn = rep.density_fn
        new_fn = None if fn is None else (lambda *t: lik_fn(*t) * np.asarray(fn(*t), dtype=float))
        new = GridMeasure(rep.space, np.broadcast_to(dens, rep.space.shape), new_fn)
    if _sum(new.masses()) == 0:
        raise UndefinedPosteriorError("the likelihood vanishes on the support of the prior")
    law = Law.of(new)
    return law.with_verdict(sigma_finiteness_probe(law, protocol))


def mean(law: Law, axis: str | int = 0, protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> float:
    """Posterior mean along one axis; refused for improper laws."""
    v = verdict_of(law, protocol)
    if v.kind is not Kind.FINITE:
        raise ImproperLawError(f"the mean of a {v.kind.value} law is not defined")
    rep = law.rep
    if not isinstance(rep, GridMeasure):
        raise ResolutionError("mean needs a gridded law")
    i = rep.space.axis_index(axis) if isinstance(axis, str) else int(axis)
    coord = rep.space.mesh()[i]
    m = rep.cell_masses
    return math.fsum((m * coord).ravel()) / math.fsum(m.ravel())
