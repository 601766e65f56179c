import math

import pytest

from renyi.examples import (countable_example, haldane_example, lebesgue_examples, poisson_process_example,
                            stone_dawid_example)
from renyi.serialization import dumps
from renyi.sigma import Kind

TIGHT = 1 + 1e-6


@pytest.fixture(scope="module")
def flat_report():
    return stone_dawid_example("flat")


def test_poisson_default():
    r = poisson_process_example()
    assert r.staged_vs_one_shot.proportional and r.final_vs_oracle.proportional
    assert r.stage1.verdict.kind is Kind.SIGMA_FINITE
    assert r.stage2.verdict.kind is Kind.FINITE


def test_poisson_without_events_stays_improper():
    r = poisson_process_example(0.5, 2.0, 0, 0)
    assert r.stage2.verdict.kind is Kind.SIGMA_FINITE
    assert r.final_vs_oracle.spread <= TIGHT


@pytest.mark.parametrize("bad", [dict(t1=2.0, t2=1.0), dict(x1=-1)])
def test_poisson_preconditions(bad):
    with pytest.raises(ValueError):
        poisson_process_example(**bad)


@pytest.mark.parametrize("alpha,beta,kind", [(2, 3, Kind.FINITE), (1, 1, Kind.FINITE), (0, 5, Kind.SIGMA_FINITE),
                                             (4, 0, Kind.SIGMA_FINITE)])
def test_haldane_verdicts(alpha, beta, kind):
    r = haldane_example(alpha, beta)
    assert r.verdict.kind is kind
    assert r.oracle.spread <= TIGHT
    if kind is Kind.FINITE:
        assert r.mean == pytest.approx(alpha / (alpha + beta), abs=1e-6)
    else:
        assert r.mean is None


def test_haldane_divergent_end():
    assert haldane_example(0, 5).verdict.diagnostics["divergent_ends"] == ["p:low"]
    assert haldane_example(4, 0).verdict.diagnostics["divergent_ends"] == ["p:high"]
    with pytest.raises(ValueError):
        haldane_example(0, 0)


def test_paradox_flat(flat_report):
    s = flat_report.signatures
    assert flat_report.ratio_density_at_unit == 0.25
    assert s["paradox"] and s["paradoxSpread"] >= 1.4
    assert s["xzFiberXSpread"] <= TIGHT and len(s["xCells"]) >= 5
    assert s["xzFiberOracleSpread"] <= TIGHT and s["naiveOracleSpread"] <= TIGHT
    assert s["zphiFiberPhiSpread"] <= TIGHT and s["zphiFiberOracleSpread"] <= TIGHT
    assert s["fiberRatioSpread"] <= TIGHT
    assert flat_report.z_theta_verdict.kind is Kind.DIVERGENT


def test_variant_prior(flat_report):
    m = flat_report.proportionality_matrix
    assert m["variant_zphi_vs_variant_xz"]["proportional"]
    assert flat_report.signatures["variantSpread"] <= TIGHT
    assert flat_report.variant_z_theta_verdict.kind is Kind.DIVERGENT


def test_epsilon_trace_doubles(flat_report):
    eps = flat_report.epsilon_trace
    assert len(eps["ratios"]) == 4 and eps["doubling"]
    assert all(abs(r - 2) <= 0.1 for r in eps["ratios"])


@pytest.mark.parametrize("a", [-0.5, 0.5])
def test_paradox_power_priors(a):
    s = stone_dawid_example("power", a, cells=48).signatures
    assert s["paradox"] and s["paradoxSpread"] >= 1.4
    assert s["xzFiberXSpread"] <= TIGHT
    assert s["fiberRatioSpread"] <= TIGHT


def test_stone_dawid_rejects_unknown_prior():
    with pytest.raises(ValueError):
        stone_dawid_example("cauchy")


def test_lebesgue_bundle():
    r = lebesgue_examples()
    assert r.plane["posteriorIsLebesgue"] and r.plane["modelConditionalIsLebesgue"]
    assert not r.plane["factorization"]["holds"]
    assert r.half_plane["pushforward"] == {"0": math.inf, "1": math.inf}
    assert max(r.half_plane["fiberMaxRelativeError"].values()) <= 1e-12
    assert countable_example()["elementary"]["equal"]


def test_reports_are_bit_identical():
    assert dumps(poisson_process_example().to_dict()) == dumps(poisson_process_example().to_dict())
    assert dumps(stone_dawid_example(cells=32).to_dict()) == dumps(stone_dawid_example(cells=32).to_dict())
