"""Seeded Monte Carlo estimation of outages, transmission count and throughput.

Trial ``t`` of link ``k`` is drawn from substream ``(seed, k, t // CHUNK)``,
so estimates depend only on ``(seed, n_trials)`` and not on batch size or on
how trials are split between workers. Every schedule evaluated with the same
configuration sees the same channel realisations (common random numbers),
which keeps comparisons between schedules and bisection searches monotone.

The factorised estimator samples each link separately: the legitimate link
gives the decode-failure prefix frequencies, the eavesdropper link the
secrecy prefix frequencies, and the secrecy outage combines them using the
independence of the two links. ``estimate_joint_secrecy_outage`` instead
applies the per-session definition to jointly sampled traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from secharq.analytics import PerformanceReport, PrefixProbs, transmission_pmf
from secharq.channel import LINK_D, LINK_E, ChannelModel, sample_link, substream
from secharq.protocols import RateSchedule, decode_failure_prefix, rounds_used, secrecy_prefix

CHUNK = 1 << 16
# Cache sampled traces up to this many stored values per link.
_CACHE_LIMIT = 2 * 10**7


@dataclass(frozen=True)
class McConfig:
    n_trials: int = 10**6
    seed: int = 0
    batch_size: int = 1 << 18
    n_eve_trials: int | None = None

    def __post_init__(self):
        if self.n_trials < 1 or self.batch_size < 1:
            raise ValueError("n_trials and batch_size must be >= 1")
        if self.n_eve_trials is not None and self.n_eve_trials < 1:
            raise ValueError("n_eve_trials must be >= 1")

    @property
    def n_eve(self) -> int:
        return self.n_trials if self.n_eve_trials is None else self.n_eve_trials


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    n: int


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def trial_batches(model: ChannelModel, link: int, L: int, n: int, seed: int, batch_size: int) -> Iterator[np.ndarray]:
    """Yield (m, L) arrays of per-round mutual informations covering trials 0..n-1."""
    n_chunks = -(-n // CHUNK)
    per_batch = max(1, batch_size // CHUNK)
    for start in range(0, n_chunks, per_batch):
        parts = []
        for c in range(start, min(start + per_batch, n_chunks)):
            rows = min(CHUNK, n - c * CHUNK)
            rng = substream(seed, link, c)
            parts.append(sample_link(model, link, rng, (CHUNK, L))[:rows])
        yield np.concatenate(parts) if len(parts) > 1 else parts[0]


class _Sampler:
    """Batched trace source with an optional in-memory cache."""

    def __init__(self, model: ChannelModel, cfg: McConfig, cache: bool = True):
        self.model = model
        self.cfg = cfg
        self.cache = cache
        self._store: dict = {}

    def batches(self, link: int, L: int, n: int):
        key = (link, L, n)
        if key in self._store:
            yield self._store[key]
            return
        gen = trial_batches(self.model, link, L, n, self.cfg.seed, self.cfg.batch_size)
        if self.cache and n * L <= _CACHE_LIMIT:
            self._store[key] = np.concatenate(list(gen))
            yield self._store[key]
        else:
            yield from gen


@dataclass
class _DecodeStats:
    n: int
    fail_counts: np.ndarray  # sessions failing rounds 1..l, per l
    used_counts: np.ndarray  # sessions using exactly l rounds, per l
    decoded: int
    sum_l: int
    sum_l2: int
    sum_l_decoded: int


def _decode_stats(schedule: RateSchedule, batches) -> _DecodeStats:
    L = schedule.L
    fail = np.zeros(L, dtype=np.int64)
    used = np.zeros(L, dtype=np.int64)
    n = decoded = sum_l = sum_l2 = sum_ld = 0
    for i_d in batches:
        prefix = decode_failure_prefix(schedule, i_d)
        k = rounds_used(prefix).astype(np.int64)
        ok = ~prefix[:, L - 1]
        n += len(i_d)
        fail += prefix.sum(axis=0)
        used += np.bincount(k - 1, minlength=L)
        decoded += int(ok.sum())
        sum_l += int(k.sum())
        sum_l2 += int((k * k).sum())
        sum_ld += int(k[ok].sum())
    return _DecodeStats(n, fail, used, decoded, sum_l, sum_l2, sum_ld)


def _secrecy_counts(schedule: RateSchedule, batches) -> tuple[np.ndarray, int]:
    counts = np.zeros(schedule.L, dtype=np.int64)
    n = 0
    for i_e in batches:
        counts += secrecy_prefix(schedule, i_e).sum(axis=0)
        n += len(i_e)
    return counts, n


def _check_L(schedule: RateSchedule, L: int) -> None:
    if L != schedule.L:
        raise ValueError(f"schedule has {schedule.L} rounds, L={L}")


class MonteCarloEvaluator:
    """Evaluator backed by the factorised Monte Carlo estimator."""

    exact = False

    def __init__(self, model: ChannelModel, cfg: McConfig = McConfig(), cache: bool = True):
        self.model = model
        self.cfg = cfg
        self._sampler = _Sampler(model, cfg, cache)

    def _stats(self, schedule: RateSchedule):
        L = schedule.L
        d = _decode_stats(schedule, self._sampler.batches(LINK_D, L, self.cfg.n_trials))
        b_counts, n_e = _secrecy_counts(schedule, self._sampler.batches(LINK_E, L, self.cfg.n_eve))
        return d, b_counts, n_e

    def prefix_probs(self, schedule: RateSchedule) -> PrefixProbs:
        d, b_counts, n_e = self._stats(schedule)
        p_ac = d.fail_counts / d.n
        p_b = b_counts / n_e
        return PrefixProbs(
            p_ac,
            p_b,
            [binomial_stderr(p, d.n) for p in p_ac],
            [binomial_stderr(p, n_e) for p in p_b],
        )

    def report(self, schedule: RateSchedule) -> PerformanceReport:
        d, b_counts, n_e = self._stats(schedule)
        r, L, n = schedule.r, schedule.L, d.n
        p_ac = d.fail_counts / n
        p_b = b_counts / n_e
        pi = transmission_pmf(p_ac)

        p_co = float(p_ac[L - 1])
        e_l = d.sum_l / n
        var_l = max(d.sum_l2 / n - e_l**2, 0.0)
        p_dec = d.decoded / n
        eta = r * p_dec / e_l

        # Ratio estimator r * mean(U) / mean(V), U = decoded, V = rounds used.
        ratio = p_dec / e_l
        var_u = p_dec * (1 - p_dec)
        cov_uv = d.sum_l_decoded / n - p_dec * e_l
        var_ratio = (var_u - 2 * ratio * cov_uv + ratio**2 * var_l) / (n * e_l**2)
        se_eta = r * math.sqrt(max(var_ratio, 0.0))

        # P_so = 1 - sum_j p_b[j] pi[j]; the secrecy prefix indicators are nested.
        mix = float(np.dot(p_b, pi))
        p_so = min(max(1.0 - mix, 0.0), 1.0)
        pb_max = p_b[np.maximum.outer(np.arange(L), np.arange(L))]
        var_e = float(pi @ (pb_max - np.outer(p_b, p_b)) @ pi)
        var_d = float(np.dot(pi, p_b**2) - mix**2)
        se_p_so = math.sqrt(max(var_e, 0.0) / n_e + max(var_d, 0.0) / n)

        return PerformanceReport(
            p_co=p_co,
            p_so=p_so,
            e_l=e_l,
            eta=eta,
            se_p_co=binomial_stderr(p_co, n),
            se_p_so=se_p_so,
            se_e_l=math.sqrt(var_l / n),
            se_eta=se_eta,
            n_trials=n,
        )


def estimate_prefix_probs(model: ChannelModel, schedule: RateSchedule, L: int, cfg: McConfig) -> PrefixProbs:
    _check_L(schedule, L)
    return MonteCarloEvaluator(model, cfg, cache=False).prefix_probs(schedule)


def evaluate_rayleigh(model: ChannelModel, schedule: RateSchedule, L: int, cfg: McConfig) -> PerformanceReport:
    _check_L(schedule, L)
    return MonteCarloEvaluator(model, cfg, cache=False).report(schedule)


def estimate_joint_secrecy_outage(model: ChannelModel, schedule: RateSchedule, L: int, cfg: McConfig) -> McEstimate:
    """Secrecy outage from jointly sampled sessions, without factorisation."""
    _check_L(schedule, L)
    n = cfg.n_trials
    d_batches = trial_batches(model, LINK_D, L, n, cfg.seed, cfg.batch_size)
    e_batches = trial_batches(model, LINK_E, L, n, cfg.seed, cfg.batch_size)
    leaks = 0
    for i_d, i_e in zip(d_batches, e_batches):
        k = rounds_used(decode_failure_prefix(schedule, i_d))
        secure = secrecy_prefix(schedule, i_e)[np.arange(len(k)), k - 1]
        leaks += int((~secure).sum())
    p = leaks / n
    return McEstimate(p, binomial_stderr(p, n), n)
