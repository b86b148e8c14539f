import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import TWO_STATE, TWO_STATE_TIGHT, random_instance, random_prefix
from secharq.analytics import (
    DiscreteEvaluator,
    EnumerationBudgetError,
    PrefixProbs,
    connection_outage,
    evaluate_discrete,
    expected_transmissions,
    prefix_probs_discrete,
    secrecy_outage,
    secrecy_outage_expanded,
    secrecy_outage_joint,
    throughput,
    transmission_pmf,
)
from secharq.channel import DiscreteStateDist
from secharq.optimizer import optimize
from secharq.closedform import OutageConstraints
from secharq.protocols import RateSchedule

ASR = RateSchedule("asr", 1.5, [3.5, 2])


def test_two_state_prefix():
    pp = prefix_probs_discrete(TWO_STATE, ASR, 2)
    assert pp.p_ac[0] == 0.5 and pp.p_ac[1] == 0.0
    assert pp.p_b == (1.0, 0.75)


def test_single_state_decodes_first():
    m = DiscreteStateDist([(9.0, 1.0)], [(0.0, 1.0)])
    assert prefix_probs_discrete(m, RateSchedule("asr", 1, [2, 2]), 2).p_ac[0] == 0.0


def test_zero_dummy_secrecy_is_zero_state_mass():
    m = DiscreteStateDist([(1.0, 1.0)], [(0.0, 0.3), (2.0, 0.7)])
    pp = prefix_probs_discrete(m, RateSchedule("asr", 0, [0, 0]), 2)
    assert pp.p_b[0] == pytest.approx(0.3, abs=1e-15)


def test_secrecy_outage_examples():
    assert secrecy_outage(PrefixProbs([0.5, 0.0], [1.0, 0.75]), 2) == 0.125
    assert secrecy_outage(PrefixProbs([0.3, 0.2, 0.1], [1, 1, 1]), 3) == 0.0


def test_connection_and_el_examples():
    pp = PrefixProbs([0.5, 0.0], [1.0, 0.75])
    assert connection_outage(pp, 2) == 0.0
    assert connection_outage(PrefixProbs([1, 1], [1, 1]), 2) == 1.0
    assert connection_outage(PrefixProbs([0.4], [1]), 1) == 0.4
    assert expected_transmissions(pp, 2) == 1.5
    assert expected_transmissions(PrefixProbs([0, 0, 0], [1, 1, 1]), 3) == 1.0
    assert expected_transmissions(PrefixProbs([1, 1, 1], [1, 1, 1]), 3) == 3.0


def test_throughput_examples():
    assert throughput(1.5, 0, 1.5) == 1.0
    assert throughput(2.0, 1.0, 1.3) == 0.0
    assert throughput(0.0, 0.2, 2.0) == 0.0
    with pytest.raises(ValueError):
        throughput(1, 0, 0.5)


def test_validation():
    with pytest.raises(ValueError):
        secrecy_outage(PrefixProbs([0.2, 0.5], [1, 1]), 2)
    with pytest.raises(ValueError):
        connection_outage(PrefixProbs([1.2], [1]), 1)
    with pytest.raises(ValueError):
        secrecy_outage(PrefixProbs([0.2], [1]), 2)
    with pytest.raises(ValueError):
        secrecy_outage_expanded(PrefixProbs([0.2], [1]), 1)


def test_transmission_pmf_sums_to_one():
    pmf = transmission_pmf([0.6, 0.3, 0.1])
    assert np.allclose(pmf, [0.4, 0.3, 0.3])


def test_evaluate_two_state():
    rep = evaluate_discrete(TWO_STATE, ASR, 2)
    assert (rep.p_co, rep.p_so, rep.e_l, rep.eta) == (0.0, 0.125, 1.5, 1.0)


def test_modified_best_throughputs():
    c = OutageConstraints(0.25, 0.125)
    assert optimize("tomasin", TWO_STATE_TIGHT, c, 2).report.eta == pytest.approx(4 / 3, abs=1e-9)
    assert optimize("tang", TWO_STATE_TIGHT, c, 2).report.eta == pytest.approx(1.125, abs=1e-9)


def test_tang_reduction_report():
    a = evaluate_discrete(TWO_STATE, RateSchedule("asr", 2, [7, 0]))
    t = evaluate_discrete(TWO_STATE, RateSchedule("tang", 2, [7, 0]))
    assert a == t


def test_budget_error():
    m = DiscreteStateDist([(i, 0.1) for i in range(10)], [(0, 1)])
    with pytest.raises(EnumerationBudgetError, match="Monte Carlo"):
        prefix_probs_discrete(m, RateSchedule("asr", 1, [1] * 8), budget=10**6)


@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_prop1_forms_agree(seed, L):
    p_ac, p_b = random_prefix(np.random.default_rng(seed), L)
    pp = PrefixProbs(p_ac, p_b)
    assert abs(secrecy_outage(pp, L) - secrecy_outage_expanded(pp, L)) <= 1e-12


@given(st.integers(0, 2**32 - 1))
def test_factorised_equals_joint(seed):
    model, sched = random_instance(np.random.default_rng(seed), L_max=3)
    rep = evaluate_discrete(model, sched)
    assert abs(rep.p_so - secrecy_outage_joint(model, sched)) <= 1e-12


@given(st.integers(0, 2**32 - 1))
def test_report_invariants(seed):
    model, sched = random_instance(np.random.default_rng(seed))
    rep = evaluate_discrete(model, sched)
    assert 0 <= rep.p_co <= 1 and 0 <= rep.p_so <= 1
    assert 1 <= rep.e_l <= sched.L
    assert rep.eta <= sched.r * (1 - rep.p_co) + 1e-12 <= sched.r + 1e-12


def test_pso_not_monotone_in_first_dummy_rate():
    # Raising R_1 delays decoding to round 2, exposing the second round.
    lo = evaluate_discrete(TWO_STATE, RateSchedule("asr", 1.5, [3.5, 2])).p_so
    hi = evaluate_discrete(TWO_STATE, RateSchedule("asr", 1.5, [4.0, 2])).p_so
    assert (lo, hi) == (0.125, 0.25)


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 3))
def test_monotone_parts(seed, bump):
    """P_co and E[L] rise with every rate; P_so falls with the last dummy rate."""
    model, sched = random_instance(np.random.default_rng(seed), variant="asr")
    base = evaluate_discrete(model, sched)
    for k in range(sched.L):
        d = list(sched.dummy)
        d[k] += bump
        up = evaluate_discrete(model, RateSchedule("asr", sched.r, d))
        assert up.p_co >= base.p_co - 1e-12 and up.e_l >= base.e_l - 1e-12
        if k == sched.L - 1:
            assert up.p_so <= base.p_so + 1e-12


def test_breakpoints_contain_two_state_r2():
    assert 2.0 in DiscreteEvaluator(TWO_STATE).r2_breakpoints(3.5, 2)
