"""Exact outage, transmission-count and throughput computations.

Everything here works from two prefix-probability vectors:

* ``p_ac[l-1] = P(A_1^c ∩ ... ∩ A_l^c)``: no decoding success in rounds 1..l
* ``p_b[l-1]  = P(B_1 ∩ ... ∩ B_l)``: rounds 1..l all secret

With decoding and secrecy events independent (the two links are), the
secrecy outage is ``1 - sum_j p_b[j] P(L = j)``. For discrete channel states
the prefix vectors are obtained by exhaustive enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from secharq.channel import DiscreteStateDist, MiTrace
from secharq.protocols import (
    RateSchedule,
    Variant,
    decode_failure_prefix,
    secrecy_prefix,
    session_secure,
    transmission_count,
)

DEFAULT_ENUM_BUDGET = 10**7
_MONO_TOL = 1e-12


class EnumerationBudgetError(ValueError):
    """Raised when exact enumeration would exceed the configured tuple budget."""


@dataclass(frozen=True)
class PrefixProbs:
    p_ac: tuple
    p_b: tuple
    se_p_ac: tuple = field(default=())
    se_p_b: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "p_ac", tuple(float(x) for x in self.p_ac))
        object.__setattr__(self, "p_b", tuple(float(x) for x in self.p_b))
        object.__setattr__(self, "se_p_ac", tuple(float(x) for x in self.se_p_ac))
        object.__setattr__(self, "se_p_b", tuple(float(x) for x in self.se_p_b))

    @property
    def L(self) -> int:
        return len(self.p_ac)


@dataclass(frozen=True)
class PerformanceReport:
    p_co: float
    p_so: float
    e_l: float
    eta: float
    se_p_co: float = 0.0
    se_p_so: float = 0.0
    se_e_l: float = 0.0
    se_eta: float = 0.0
    n_trials: int = 0


def _validate(prefix: PrefixProbs, L: int) -> tuple[np.ndarray, np.ndarray]:
    p_ac = np.asarray(prefix.p_ac, dtype=float)
    p_b = np.asarray(prefix.p_b, dtype=float)
    if len(p_ac) < L or len(p_b) < L:
        raise ValueError(f"prefix vectors shorter than L={L}")
    p_ac, p_b = p_ac[:L], p_b[:L]
    for name, v in (("p_ac", p_ac), ("p_b", p_b)):
        if np.any(v < -_MONO_TOL) or np.any(v > 1 + _MONO_TOL):
            raise ValueError(f"{name} entries must lie in [0, 1]")
        if np.any(np.diff(v) > _MONO_TOL):
            raise ValueError(f"{name} must be nonincreasing in l")
    return p_ac, p_b


def transmission_pmf(p_ac) -> np.ndarray:
    """P(L = l) for l = 1..L from the decode-failure prefix probabilities."""
    p_ac = np.asarray(p_ac, dtype=float)
    L = len(p_ac)
    before = np.concatenate([[1.0], p_ac[: L - 1]])
    pmf = before.copy()
    pmf[: L - 1] -= p_ac[: L - 1]
    return pmf


def secrecy_outage(prefix: PrefixProbs, L: int) -> float:
    p_ac, p_b = _validate(prefix, L)
    value = 1.0 - float(np.dot(p_b, transmission_pmf(p_ac)))
    return min(max(value, 0.0), 1.0)


def secrecy_outage_expanded(prefix: PrefixProbs, L: int) -> float:
    """Three-term expansion: first round, middle rounds 2..L-1, last round.

    Only meaningful for ``L >= 2``; it is kept as an algebraic cross-check of
    :func:`secrecy_outage`.
    """
    if L < 2:
        raise ValueError("the expanded form needs L >= 2")
    p_ac, p_b = _validate(prefix, L)
    middle = sum(p_b[j - 1] * (p_ac[j - 2] - p_ac[j - 1]) for j in range(2, L))
    return 1.0 - middle - p_b[0] * (1.0 - p_ac[0]) - p_b[L - 1] * p_ac[L - 2]


def connection_outage(prefix: PrefixProbs, L: int) -> float:
    p_ac, _ = _validate(prefix, L)
    return float(p_ac[L - 1])


def expected_transmissions(prefix: PrefixProbs, L: int) -> float:
    p_ac, _ = _validate(prefix, L)
    return 1.0 + float(p_ac[: L - 1].sum())


def throughput(r: float, p_co: float, e_l: float) -> float:
    """Secret bits delivered per channel use: ``r (1 - p_co) / e_l``."""
    if e_l < 1:
        raise ValueError("expected number of transmissions must be >= 1")
    return r * (1.0 - p_co) / e_l


def report_from_prefix(r: float, prefix: PrefixProbs, L: int) -> PerformanceReport:
    p_co = connection_outage(prefix, L)
    e_l = expected_transmissions(prefix, L)
    return PerformanceReport(
        p_co=p_co,
        p_so=secrecy_outage(prefix, L),
        e_l=e_l,
        eta=throughput(r, p_co, e_l),
    )


def enumerate_tuples(values: np.ndarray, probs: np.ndarray, L: int, budget: int = DEFAULT_ENUM_BUDGET):
    """All ``len(values)**L`` round tuples with their product probabilities."""
    n = len(values) ** L
    if n > budget:
        raise EnumerationBudgetError(
            f"{len(values)}^{L} = {n} tuples exceeds the enumeration budget {budget}; use Monte Carlo"
        )
    idx = np.indices((len(values),) * L).reshape(L, -1).T
    return values[idx], np.prod(probs[idx], axis=1)


def prefix_probs_discrete(
    model: DiscreteStateDist, schedule: RateSchedule, L: int | None = None, budget: int = DEFAULT_ENUM_BUDGET
) -> PrefixProbs:
    L = schedule.L if L is None else L
    if L != schedule.L:
        raise ValueError(f"schedule has {schedule.L} rounds, L={L}")
    d_vals, d_probs = model.d_arrays()
    e_vals, e_probs = model.e_arrays()
    if len(d_vals) ** L + len(e_vals) ** L > budget:
        raise EnumerationBudgetError(
            f"enumerating {len(d_vals)}^{L} + {len(e_vals)}^{L} tuples exceeds the budget {budget}; use Monte Carlo"
        )
    d_tuples, d_w = enumerate_tuples(d_vals, d_probs, L, budget)
    e_tuples, e_w = enumerate_tuples(e_vals, e_probs, L, budget)
    p_ac = d_w @ decode_failure_prefix(schedule, d_tuples)
    p_b = e_w @ secrecy_prefix(schedule, e_tuples)
    # Accumulated rounding can push sums marginally past 1.
    return PrefixProbs(np.clip(p_ac, 0.0, 1.0), np.clip(p_b, 0.0, 1.0))


def evaluate_discrete(
    model: DiscreteStateDist, schedule: RateSchedule, L: int | None = None, budget: int = DEFAULT_ENUM_BUDGET
) -> PerformanceReport:
    prefix = prefix_probs_discrete(model, schedule, L, budget)
    return report_from_prefix(schedule.r, prefix, schedule.L)


def secrecy_outage_joint(model: DiscreteStateDist, schedule: RateSchedule) -> float:
    """P_so by brute force over the joint (legitimate, eavesdropper) state space.

    Uses the scalar per-trace predicates only; no independence assumption.
    Intended as a reference for small instances.
    """
    L = schedule.L
    d_states = model.d_states
    e_states = model.e_states

    @lru_cache(maxsize=None)
    def used(d_idx):
        trace = MiTrace([d_states[i][0] for i in d_idx], [0.0] * L)
        return transmission_count(schedule, trace)[0]

    @lru_cache(maxsize=None)
    def secure(e_idx, l_used):
        trace = MiTrace([0.0] * L, [e_states[i][0] for i in e_idx])
        return session_secure(schedule, trace, l_used)

    total = 0.0
    for d_idx in itertools.product(range(len(d_states)), repeat=L):
        pd = float(np.prod([d_states[i][1] for i in d_idx]))
        if pd == 0.0:
            continue
        l_used = used(d_idx)
        for e_idx in itertools.product(range(len(e_states)), repeat=L):
            if not secure(e_idx, l_used):
                total += pd * float(np.prod([e_states[i][1] for i in e_idx]))
    return total


class DiscreteEvaluator:
    """Exact evaluator for a discrete state model, with breakpoint hints.

    ``rate_breakpoints`` lists the dummy-rate values at which any secrecy
    inequality switches; the throughput and outages are piecewise constant
    between them.
    """

    exact = True

    def __init__(self, model: DiscreteStateDist, budget: int = DEFAULT_ENUM_BUDGET):
        self.model = model
        self.budget = budget

    def prefix_probs(self, schedule: RateSchedule) -> PrefixProbs:
        return prefix_probs_discrete(self.model, schedule, schedule.L, self.budget)

    def report(self, schedule: RateSchedule) -> PerformanceReport:
        return report_from_prefix(schedule.r, self.prefix_probs(schedule), schedule.L)

    def _partial_sums(self, values, L):
        sums = {0.0}
        layer = {0.0}
        out = {}
        for l in range(1, L + 1):
            layer = {round(s + v, 12) for s in layer for v in values}
            out[l] = sorted(layer)
            sums |= layer
        return out

    def r2_breakpoints(self, r1: float, L: int) -> list[float]:
        """Candidate tied second-round rates where P_so can change."""
        e_vals = [v for v, _ in self.model.e_states]
        cands = {0.0} | {float(v) for v in e_vals}
        for l, sums in self._partial_sums(e_vals, L).items():
            if l >= 2:
                cands |= {(s - r1) / (l - 1) for s in sums if s >= r1}
        # Each breakpoint also gets its next representable neighbour so that
        # rounding in (s - r1) / (l - 1) cannot hide an exact tie.
        out = set()
        for c in cands:
            if c >= 0:
                out.add(c)
                out.add(float(np.nextafter(c, np.inf)))
        return sorted(out)
