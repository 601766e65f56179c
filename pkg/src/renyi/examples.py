"""Worked examples: Poisson process, Haldane prior, Lebesgue plane, and the
marginalization paradox for the ratio of two exponential means.

Every pipeline is a pure function of its arguments and returns a report
with a ``to_dict`` for JSON output and a ``laws`` mapping for CSV dumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .bayes import (StatModel, bayes_recipe, factorization_check, mean, model_conditional, posterior,
                    prior_law)
from .disintegration import Statistic, condition_on_statistic, verify_defining_equation
from .extension import DEFAULT_PROTOCOL, DensityField, ExtensionProtocol, product_mass
from .forms import Likelihood, ratio_density, prior_density
from .measures import FiniteMeasure, GridMeasure, Law, Proportionality, proportional
from .sigma import Kind, SigmaFinitenessVerdict, sigma_finiteness_probe
from .spaces import Axis, Box, FiniteSpace, GriddedSpace

TOL = 1e-6


def _p(p: Proportionality) -> dict:
    return {"proportional": p.proportional, "spread": float(p.spread),
            "constant": None if p.constant is None else float(p.constant)}


def _grid_law(axis: Axis, fn: Callable) -> GridMeasure:
    return GridMeasure.from_function(GriddedSpace((axis,)), fn)


def _oracle_scale(law: Law, oracle: GridMeasure) -> float:
    """``c`` with ``law = c * oracle`` (the law must be proportional to the oracle)."""
    p = proportional(oracle, law, TOL)
    return float(p.constant) if p.constant is not None else math.nan


# -- Poisson process ------------------------------------------------------------------

@dataclass(frozen=True)
class PoissonReport:
    config: dict
    stage1: Law
    stage2: Law
    one_shot: Law
    staged_vs_one_shot: Proportionality
    final_vs_oracle: Proportionality
    stage1_vs_oracle: Proportionality
    low_end_increments: tuple

    @property
    def laws(self) -> dict:
        return {"stage1": self.stage1, "stage2": self.stage2, "one_shot": self.one_shot}

    def to_dict(self) -> dict:
        return {"pipeline": "poisson", "config": self.config,
                "stage1": {"verdict": self.stage1.verdict.to_dict(), "oracle": _p(self.stage1_vs_oracle),
                           "lowEndIncrementsOracleScale": list(self.low_end_increments)},
                "stage2": {"verdict": self.stage2.verdict.to_dict(), "oracle": _p(self.final_vs_oracle)},
                "oneShot": {"verdict": self.one_shot.verdict.to_dict()},
                "stagedVsOneShot": _p(self.staged_vs_one_shot)}


def lambda_axis(cells: int = 256) -> Axis:
    return Axis.geometric("lam", 2.0 ** -8, 2.0 ** 8, cells)


def poisson_process_example(t1: float = 1.0, t2: float = 3.0, x1: int = 0, x2: int = 2, cells: int = 256,
                            max_count: int = 64, protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> PoissonReport:
    """Scale prior ``1/lambda``, counts ``x1`` on (0, t1] and ``x2`` on (t1, t2].

    Both stages and the one-shot posterior are fibres of joint laws built
    by the Bayesian recipe (the stage-1 posterior serves as the stage-2
    prior).  The oracle is ``lambda^(x1+x2-1) exp(-lambda t2)``.
    """
    if not 0 < t1 < t2:
        raise ValueError("need 0 < t1 < t2")
    if x1 < 0 or x2 < 0:
        raise ValueError("counts must be nonnegative")
    lam = lambda_axis(cells)
    counts = (Axis.counts("k", max(max_count, x1 + x2)),)
    prior = prior_law(lam, "scale")
    stage1 = posterior(bayes_recipe(Likelihood("poisson-process", {"t": t1}), prior, counts, protocol), x1)
    stage2 = posterior(bayes_recipe(Likelihood("poisson-process", {"t": t2 - t1}), stage1, counts, protocol), x2)
    one_shot = posterior(bayes_recipe(Likelihood("poisson-process", {"t": t2}), prior, counts, protocol), x1 + x2)
    n = x1 + x2
    oracle = _grid_law(lam, lambda l: l ** (n - 1) * np.exp(-l * t2))
    oracle1 = _grid_law(lam, lambda l: l ** (x1 - 1) * np.exp(-l * t1))
    stage1_p = proportional(stage1, oracle1, TOL)
    incs: tuple = ()
    low = stage1.verdict.diagnostics.get("ends", {}).get("lam:low")
    if low is not None and stage1_p.constant is not None:
        c = float(stage1_p.constant)
        incs = tuple(float(d) * c for d in low["increments"])
    config = {"t1": t1, "t2": t2, "x1": x1, "x2": x2, "cells": cells, "maxCount": max_count}
    return PoissonReport(config, stage1, stage2, one_shot, proportional(stage2, one_shot, TOL),
                         proportional(stage2, oracle, TOL), stage1_p, incs)


# -- Haldane -------------------------------------------------------------------------------

@dataclass(frozen=True)
class HaldaneReport:
    config: dict
    posterior: Law
    oracle: Proportionality
    mean: float | None

    @property
    def verdict(self) -> SigmaFinitenessVerdict:
        return self.posterior.verdict

    @property
    def laws(self) -> dict:
        return {"posterior": self.posterior}

    def to_dict(self) -> dict:
        return {"pipeline": "haldane", "config": self.config, "verdict": self.verdict.to_dict(),
                "oracle": _p(self.oracle), "mean": self.mean}


def p_axis(cells: int = 256) -> Axis:
    return Axis("p", 2.0 ** -16, 1 - 2.0 ** -16, cells, "logit", True, True)


def haldane_example(alpha: int = 2, beta: int = 3, cells: int = 256,
                    protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> HaldaneReport:
    """Haldane prior ``p^-1 (1-p)^-1`` and ``alpha`` successes in ``alpha + beta`` trials."""
    if alpha < 0 or beta < 0 or alpha + beta < 1:
        raise ValueError("need nonnegative counts with alpha + beta >= 1")
    n = alpha + beta
    p = p_axis(cells)
    prior = prior_law(p, "haldane")
    model = bayes_recipe(Likelihood("bernoulli-counts", {"n": n}), prior,
                         (Axis.counts("k", n, extend_high=False),), protocol)
    post = posterior(model, alpha)
    oracle = _grid_law(p, lambda q: q ** (alpha - 1.0) * (1 - q) ** (beta - 1.0))
    m = mean(post, "p", protocol) if post.verdict.kind is Kind.FINITE else None
    return HaldaneReport({"alpha": alpha, "beta": beta, "cells": cells}, post,
                         proportional(post, oracle, TOL), m)


# -- marginalization paradox ------------------------------------------------------------------

@dataclass(frozen=True)
class ParadoxReport:
    config: dict
    naive_posterior: Law
    joint_conditional_x_z: Law
    joint_conditional_z_phi: Law
    variant_conditionals: tuple
    z_theta_verdict: SigmaFinitenessVerdict
    variant_z_theta_verdict: SigmaFinitenessVerdict
    proportionality_matrix: dict
    signatures: dict
    epsilon_trace: dict
    ratio_density_at_unit: float

    @property
    def laws(self) -> dict:
        return {"naive_posterior": self.naive_posterior, "xz_fiber": self.joint_conditional_x_z,
                "zphi_fiber": self.joint_conditional_z_phi, "variant_zphi_fiber": self.variant_conditionals[0],
                "variant_xz_fiber": self.variant_conditionals[1]}

    def to_dict(self) -> dict:
        return {"pipeline": "stone-dawid", "config": self.config,
                "ratioDensityAtUnit": self.ratio_density_at_unit,
                "zThetaVerdict": self.z_theta_verdict.to_dict(),
                "variantZThetaVerdict": self.variant_z_theta_verdict.to_dict(),
                "proportionalityMatrix": self.proportionality_matrix,
                "signatures": self.signatures, "epsilonTrace": self.epsilon_trace}


def _nearest(axis: Axis, value: float) -> int:
    return int(np.argmin(np.abs(np.log(axis.centers) - math.log(value))))


def _fibers(family, cells) -> list[Law]:
    return [family.fibers[t] for t in cells]


def _x_independence(laws: list[Law]) -> float:
    return max(float(proportional(laws[0], f, TOL).spread) for f in laws[1:])


def _subbox(axis: Axis, lo: float, hi: float) -> Axis:
    i0, i1, _, _ = axis.snap(lo, hi)
    return axis.sub(i0, i1)


def _field_law(fld: DensityField) -> Law:
    space = GriddedSpace(fld.axes)
    return Law.of(GridMeasure(space, fld.evaluate(), fld.fn))


def _z_theta_verdict(joint: DensityField, box: dict, protocol: ExtensionProtocol) -> SigmaFinitenessVerdict:
    """Probe the (z, theta) marginal on a bounded box by integrating ``x`` out."""
    axes = tuple(_subbox(a, *box[a.name]) if a.name in box else a for a in joint.axes)
    sub = DensityField(axes, joint.fn).integrate_out("x", protocol)
    law = Law.of(GridMeasure(GriddedSpace(sub.axes), sub.evaluate(), sub.fn))
    return sigma_finiteness_probe(law, protocol)


def stone_dawid_example(prior: str = "flat", exponent: float = 0.0, cells: int = 64, z: float = 1.0,
                        x_cells: int = 8, phi_cells: int = 5, box: tuple = (1.0, 2.0), eps_steps: int = 4,
                        protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> ParadoxReport:
    """Joint density ``pi(theta) theta phi^2 x exp(-phi x (theta + z))`` and its conditionals.

    * integrating ``phi`` out and conditioning on ``(x, z)`` gives fibres
      proportional to ``pi(theta) theta (theta + z)^-3`` for every ``x``;
    * the naive route (sampling density of ``z`` times the prior) gives
      ``pi(theta) theta (theta + z)^-2``: the paradox;
    * integrating ``x`` out and conditioning on ``(z, phi)`` also gives
      ``pi(theta) theta (theta + z)^-2``, and neither marginal of
      ``(z, theta)`` is sigma-finite, which resolves it;
    * with the extra factor ``1/phi`` in the prior both routes give
      ``pi(theta) theta (theta + z)^-2`` while ``(z, theta)`` still diverges.

    ``prior`` is ``"flat"`` or ``"power"`` (``theta^exponent``).
    """
    if prior not in ("flat", "power"):
        raise ValueError("prior must be 'flat' or 'power'")
    pi = prior_density(prior, {"exponent": exponent})
    x_ax = Axis.geometric("x", 2.0 ** -10, 2.0 ** 6, cells)
    z_ax = Axis.geometric("z", 2.0 ** -8, 2.0 ** 8, cells)
    th_ax = Axis.geometric("theta", 2.0 ** -8, 2.0 ** 8, cells)
    phi_ax = Axis.geometric("phi", 2.0 ** -8, 2.0 ** 8, cells)
    theta_space = GriddedSpace((th_ax,))

    joint = DensityField((x_ax, z_ax, th_ax, phi_ax),
                         lambda x, zz, t, f: pi(t) * t * f ** 2 * x * np.exp(-f * x * (t + zz)))
    variant = DensityField((x_ax, z_ax, th_ax, phi_ax),
                           lambda x, zz, t, f: pi(t) * t * f * x * np.exp(-f * x * (t + zz)))

    j = _nearest(z_ax, z)
    zc = float(z_ax.centers[j])
    xs = sorted({int(round(v)) for v in np.linspace(0, cells - 1, x_cells)})
    phis = sorted({int(round(v)) for v in np.linspace(0, cells - 1, phi_cells)})
    oracle3 = _grid_law(th_ax, lambda t: pi(t) * t * (t + zc) ** -3.0)
    oracle2 = _grid_law(th_ax, lambda t: pi(t) * t * (t + zc) ** -2.0)

    # integrate phi, condition on (x, z)
    no_phi_field = joint.integrate_out("phi", protocol)
    no_phi = _field_law(no_phi_field)
    fam_xz = condition_on_statistic(no_phi, Statistic.projection(no_phi.space, ("x", "z")))
    xz = _fibers(fam_xz, [(i, j) for i in xs])

    # naive recipe with the sampling density of z
    naive_model = bayes_recipe(Likelihood("stone-dawid"), Law.of(_grid_law(th_ax, pi)), (z_ax,), protocol)
    naive = posterior(naive_model, zc)

    # integrate x, condition on (z, phi); only the chosen z cell is needed
    no_x_field = joint.restrict({"z": (j, j + 1)}).integrate_out("x", protocol)
    no_x = _field_law(no_x_field)
    fam_zphi = condition_on_statistic(no_x, Statistic.projection(no_x.space, ("z", "phi")))
    zphi = _fibers(fam_zphi, [(0, k) for k in phis])

    # variant prior pi(theta) / phi, integrating x or phi
    var_z = variant.restrict({"z": (j, j + 1)})
    var_zphi_law = _field_law(var_z.integrate_out("x", protocol))
    var_zphi = _fibers(condition_on_statistic(var_zphi_law, Statistic.projection(var_zphi_law.space, ("z", "phi"))),
                       [(0, k) for k in phis])
    var_xz_law = _field_law(var_z.integrate_out("phi", protocol))
    var_xz = _fibers(condition_on_statistic(var_xz_law, Statistic.projection(var_xz_law.space, ("x", "z"))),
                     [(i, 0) for i in xs])

    # (z, theta) marginals on a bounded box
    zbox = {"z": box, "theta": box}
    z_theta = _z_theta_verdict(no_phi_field, zbox, protocol)
    variant_z_theta = _z_theta_verdict(variant.integrate_out("phi", protocol), zbox, protocol)
    eps = _epsilon_trace(no_phi_field, x_ax, zbox, eps_steps)

    ratio = GridMeasure(theta_space, xz[0].density / zphi[0].density)
    ratio_oracle = _grid_law(th_ax, lambda t: (t + zc) ** -1.0)
    paradox = proportional(xz[0], naive, TOL)
    matrix = {
        "xz_vs_naive": _p(paradox),
        "xz_vs_zphi": _p(proportional(xz[0], zphi[0], TOL)),
        "zphi_vs_naive": _p(proportional(zphi[0], naive, TOL)),
        "variant_zphi_vs_variant_xz": _p(proportional(var_zphi[0], var_xz[0], TOL)),
        "variant_zphi_vs_naive": _p(proportional(var_zphi[0], naive, TOL)),
    }
    signatures = {
        "zCell": zc,
        "xCells": [float(x_ax.centers[i]) for i in xs],
        "phiCells": [float(phi_ax.centers[k]) for k in phis],
        "xzFiberXSpread": _x_independence(xz),
        "xzFiberOracleSpread": max(float(proportional(f, oracle3, TOL).spread) for f in xz),
        "naiveOracleSpread": float(proportional(naive, oracle2, TOL).spread),
        "paradoxSpread": float(paradox.spread),
        "paradox": not paradox.proportional,
        "zphiFiberPhiSpread": _x_independence(zphi),
        "zphiFiberOracleSpread": max(float(proportional(f, oracle2, TOL).spread) for f in zphi),
        "fiberRatioSpread": float(proportional(ratio, ratio_oracle, TOL).spread),
        "variantSpread": max(float(proportional(a, b, TOL).spread) for a in var_zphi for b in var_xz),
        "zThetaDivergent": z_theta.kind is Kind.DIVERGENT,
        "variantZThetaDivergent": variant_z_theta.kind is Kind.DIVERGENT,
    }
    config = {"prior": prior, "exponent": exponent, "cells": cells, "z": z, "box": list(box)}
    return ParadoxReport(config, naive, xz[0], zphi[0], (var_zphi[0], var_xz[0]), z_theta, variant_z_theta, matrix,
                         signatures, eps, float(ratio_density(1.0, 1.0)))


def _epsilon_trace(no_phi: DensityField, x_ax: Axis, box: dict, steps: int) -> dict:
    """Mass over the (z, theta) box with x in (eps, M) as eps is halved."""
    z_sub = _subbox(no_phi.axes[1], *box["z"])
    t_sub = _subbox(no_phi.axes[2], *box["theta"])
    masses = [product_mass(no_phi.fn, [x_ax, z_sub, t_sub])]
    eps = [x_ax.lo]
    for k in range(steps):
        seg = x_ax.extension_segment("low", k)
        masses.append(masses[-1] + product_mass(no_phi.fn, [seg, z_sub, t_sub]))
        eps.append(seg.lo)
    ratios = [b / a for a, b in zip(masses, masses[1:])]
    return {"eps": eps, "masses": masses, "ratios": ratios,
            "doubling": all(abs(r - 2.0) <= 0.05 * 2.0 for r in ratios)}


# -- Lebesgue plane ----------------------------------------------------------------------------

@dataclass(frozen=True)
class LebesgueReport:
    plane: dict
    half_plane: dict
    countable: dict
    laws: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"pipeline": "lebesgue", "plane": self.plane, "halfPlane": self.half_plane,
                "countable": self.countable}


def plane_space(half_width: float = 4.0, cells: int = 32, names=("x", "theta")) -> GriddedSpace:
    return GriddedSpace(tuple(Axis(n, -half_width, half_width, cells, "linear", True, True) for n in names))


def _ones(*x):
    return np.ones(np.broadcast_shapes(*(np.shape(v) for v in x)))


def lebesgue_plane(half_width: float = 4.0, cells: int = 32) -> Law:
    return Law.of(GridMeasure.from_function(plane_space(half_width, cells), _ones))


def _is_lebesgue_line(law: Law) -> bool:
    d = law.density
    return bool(np.all(d == d.ravel()[0]) and d.ravel()[0] > 0)


def half_plane_example(half_width: float = 4.0, cells: int = 32) -> dict:
    space = plane_space(half_width, cells, ("x", "y"))
    law = Law.of(GridMeasure.from_function(space, _ones))
    T = Statistic.cellwise(space, lambda x, y: (np.asarray(y) > 0).astype(int))
    fam = condition_on_statistic(law, T)
    rel = {}
    for t in (0, 1):
        mask = T.preimage(t)
        expected = Law.of(law.rep.restricted(mask), mask).rep.density
        got = fam.fibers[t].rep.density
        on = expected > 0
        off_ok = bool(np.all(got[~on] == 0))
        err = float(np.max(np.abs(got[on] - expected[on]) / expected[on]))
        rel[t] = err if off_ok else math.inf
    boxes = [Box(x=(-2, 2), y=(-2, 2)), Box(x=(-4, 4), y=(-1, 3))]
    tests = [Box(x=(0, 1), y=(0, 1)), Box(x=(-1, 1), y=(-2, 0.5)), Box(y=(-4, 0))]
    report = verify_defining_equation(fam, law, tests, [{0}, {1}, {0, 1}], boxes)
    return {"pushforward": {str(t): v for t, v in fam.pushforward.items()},
            "fiberMaxRelativeError": {str(t): v for t, v in rel.items()},
            "definingEquation": report.to_dict(), "family": fam}


def countable_example() -> dict:
    """``T(x) = x mod 3`` on ten weighted points."""
    pts = tuple(range(10))
    m = FiniteMeasure(FiniteSpace(pts), tuple(Fraction(k + 1, 3) for k in pts))
    law = Law.of(m)
    T = Statistic.mapping(m.space, lambda p: p % 3)
    fam = condition_on_statistic(law, T)
    restriction_ok = all(
        proportional(fam.fibers[t], FiniteMeasure(m.space, tuple(w if p % 3 == t else 0 for p, w in zip(pts, m.weights))),
                     0.0).proportional for t in fam.fibers)
    A, B = {1, 2, 3, 7}, {2, 3, 4, 5, 6}
    lhs = law.probability(A, B) * law.mass(B)
    rhs = law.mass(A & B)
    return {"fibersAreRestrictions": restriction_ok, "elementary": {"lhs": lhs, "rhs": rhs, "equal": lhs == rhs}}


def lebesgue_examples(half_width: float = 4.0, cells: int = 32,
                      protocol: ExtensionProtocol = DEFAULT_PROTOCOL) -> LebesgueReport:
    """The plane factorization failure, the half-plane statistic, a countable statistic."""
    joint = lebesgue_plane(half_width, cells)
    model = StatModel(joint, ("x",), ("theta",), protocol)
    post = posterior(model, 0.1)
    cond = model_conditional(model, 0.1)
    fv = factorization_check(model)
    plane = {"posteriorIsLebesgue": _is_lebesgue_line(post), "posteriorVerdict": post.verdict.to_dict(),
             "modelConditionalIsLebesgue": _is_lebesgue_line(cond), "factorization": fv.to_dict()}
    half = half_plane_example(half_width, cells)
    fam = half.pop("family")
    laws = {"plane_posterior": post, "plane_model_conditional": cond,
            "half_plane_fiber_0": fam.fibers[0], "half_plane_fiber_1": fam.fibers[1]}
    return LebesgueReport(plane, half, countable_example(), laws)
