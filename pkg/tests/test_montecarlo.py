import math

import numpy as np
import pytest

from secharq.channel import RayleighParams
from secharq.closedform import pco_one_tx, pso_one_tx, r1_min
from secharq.lattice import LatticeEvaluator
from secharq.montecarlo import (
    McConfig,
    MonteCarloEvaluator,
    binomial_stderr,
    estimate_joint_secrecy_outage,
    estimate_prefix_probs,
    evaluate_rayleigh,
)
from secharq.protocols import RateSchedule

P = RayleighParams(31.62, 3.162)
HIGH_SNR = RayleighParams.from_db(15, 5)


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(n_trials=0)
    with pytest.raises(ValueError):
        McConfig(batch_size=0)
    with pytest.raises(ValueError):
        McConfig(n_eve_trials=0)
    assert McConfig(10, n_eve_trials=None).n_eve == 10


def test_zero_rates_always_decode():
    pp = estimate_prefix_probs(P, RateSchedule("asr", 0, [0, 0]), 2, McConfig(10**4))
    assert pp.p_ac[0] == 0.0


def test_r1_min_secrecy():
    xs, n = 0.05, 10**6
    sched = RateSchedule("asr", 0, [r1_min(xs, P.gamma_e)])
    pp = estimate_prefix_probs(P, sched, 1, McConfig(n, seed=4))
    assert abs(pp.p_b[0] - (1 - xs)) <= 3 * binomial_stderr(1 - xs, n)
    assert pp.se_p_b[0] == pytest.approx(binomial_stderr(pp.p_b[0], n))


def test_deterministic_and_batch_invariant():
    sched = RateSchedule("asr", 2.0, [4.0, 1.0, 1.0])
    cfg = McConfig(200_003, seed=9)
    a = evaluate_rayleigh(P, sched, 3, cfg)
    b = evaluate_rayleigh(P, sched, 3, cfg)
    c = evaluate_rayleigh(P, sched, 3, McConfig(200_003, seed=9, batch_size=1))
    assert a == b == c
    assert a != evaluate_rayleigh(P, sched, 3, McConfig(200_003, seed=10))


def test_l1_matches_closed_form():
    n = 10**6
    rep = evaluate_rayleigh(P, RateSchedule("asr", 1.5, [2.0]), 1, McConfig(n, seed=1))
    pco, pso = pco_one_tx(1.5, 2.0, P.gamma_d), pso_one_tx(2.0, P.gamma_e)
    assert abs(rep.p_co - pco) <= 3 * binomial_stderr(pco, n)
    assert abs(rep.p_so - pso) <= 3 * binomial_stderr(pso, n)
    est = estimate_joint_secrecy_outage(P, RateSchedule("asr", 1.5, [3.0]), 1, McConfig(n, seed=2))
    assert abs(est.value - pso_one_tx(3.0, P.gamma_e)) <= 3 * est.stderr


@pytest.mark.parametrize("variant", ["asr", "tang", "tomasin"])
def test_factorised_vs_joint(variant):
    dummy = [5.0, 1.5, 1.5, 1.5] if variant != "tang" else [8.0, 0, 0, 0]
    sched = RateSchedule(variant, 3.0, dummy)
    cfg = McConfig(400_000, seed=3)
    rep = evaluate_rayleigh(HIGH_SNR, sched, 4, cfg)
    joint = estimate_joint_secrecy_outage(HIGH_SNR, sched, 4, McConfig(400_000, seed=77))
    assert abs(rep.p_so - joint.value) <= 3 * math.hypot(rep.se_p_so, joint.stderr)


def test_huge_dummy_never_leaks():
    est = estimate_joint_secrecy_outage(HIGH_SNR, RateSchedule("asr", 1, [60] * 3), 3, McConfig(10**4))
    assert est.value == 0.0


@pytest.mark.parametrize("variant", ["asr", "tomasin"])
def test_mc_agrees_with_lattice(variant):
    sched = RateSchedule(variant, 6.0, [9.0, 1.8, 1.8, 1.8, 1.8, 1.8, 1.8, 1.8])
    mc = evaluate_rayleigh(HIGH_SNR, sched, 8, McConfig(300_000, seed=5))
    ex = LatticeEvaluator(HIGH_SNR).report(sched)
    for f in ("p_co", "p_so", "e_l", "eta"):
        assert abs(getattr(mc, f) - getattr(ex, f)) <= 4 * getattr(mc, "se_" + f) + 2e-4, f


def test_stderr_scaling():
    sched = RateSchedule("asr", 4.0, [6.0, 1.0, 1.0])
    a = evaluate_rayleigh(HIGH_SNR, sched, 3, McConfig(100_000, seed=6))
    b = evaluate_rayleigh(HIGH_SNR, sched, 3, McConfig(400_000, seed=6))
    for f in ("se_p_co", "se_p_so", "se_e_l", "se_eta"):
        assert getattr(b, f) == pytest.approx(getattr(a, f) / 2, rel=0.1), f


def test_ranges_and_eve_trials():
    sched = RateSchedule("asr", 4.0, [6.0, 1.0, 1.0])
    ev = MonteCarloEvaluator(HIGH_SNR, McConfig(20_000, seed=1, n_eve_trials=50_000))
    pp = ev.prefix_probs(sched)
    rep = ev.report(sched)
    assert all(0 <= x <= 1 for x in pp.p_ac + pp.p_b)
    assert 1 <= rep.e_l <= 3 and rep.n_trials == 20_000
    assert pp.se_p_b[0] == pytest.approx(binomial_stderr(pp.p_b[0], 50_000))


def test_schedule_length_check():
    with pytest.raises(ValueError):
        evaluate_rayleigh(P, RateSchedule("asr", 1, [1, 1]), 3, McConfig(10))
