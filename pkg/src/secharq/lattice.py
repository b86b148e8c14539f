"""Deterministic quadrature for sums of per-round Rayleigh mutual informations.

The per-round mutual information ``log2(1 + SNR)`` with exponential SNR is
discretised on a lattice of step ``h`` bits: bin ``k`` carries the exact
probability of ``[(k - 1/2) h, (k + 1/2) h)``. Prefix events of the form
``S_j <= t_j for all j <= l`` (a random walk staying under a boundary) are
then computed by repeated convolution and truncation. A bin straddling the
boundary contributes the fraction of its width lying below it, which keeps
the bias second order in ``h``.

Two entry points:

* :func:`survival_forward` evaluates one boundary sequence.
* :func:`survival_profile` evaluates, for a fixed per-round boundary slope,
  every starting offset on the lattice at once (backward recursion). The
  optimiser uses it to sweep ``(R, R_1)`` grids cheaply.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve

from secharq.analytics import PrefixProbs, report_from_prefix
from secharq.channel import RayleighParams
from secharq.protocols import RateSchedule, Variant

DEFAULT_STEP = 0.002
# Increments beyond this survival level are dropped from the pmf.
_TAIL_CUT = 1e-18


def increment_pmf(gamma: float, h: float = DEFAULT_STEP, shift: float = 0.0) -> np.ndarray:
    """Lattice pmf of ``max(log2(1 + SNR) - shift, 0)`` for SNR ~ Exp(mean gamma)."""
    top = math.log2(1.0 + gamma * math.log(1.0 / _TAIL_CUT)) - shift
    n = max(int(math.ceil(top / h)) + 2, 1)
    k = np.arange(n)
    lo = np.maximum((k - 0.5) * h, 0.0) + shift
    hi = (k + 0.5) * h + shift
    sf = lambda y: np.exp(-(np.exp2(y) - 1.0) / gamma)
    pmf = sf(lo) - sf(hi)
    pmf[0] = 1.0 - sf(hi[0])
    return pmf


def _conv(a: np.ndarray, b: np.ndarray, n: int | None = None) -> np.ndarray:
    if min(len(a), len(b)) < 64:
        out = np.convolve(a, b)
    else:
        out = fftconvolve(a, b)
    if n is not None:
        out = out[:n]
    np.maximum(out, 0.0, out=out)
    return out


def _truncate(f: np.ndarray, t: float, h: float) -> np.ndarray:
    """Keep mass below ``t``; the straddling bin keeps its lower fraction."""
    if math.isinf(t):
        return f if t > 0 else np.zeros(0)
    x = t / h + 0.5
    if x <= 0:
        return np.zeros(0)
    kb = int(math.floor(x))
    frac = x - kb
    g = f[: kb + 1].copy()
    if kb < len(g):
        g[kb] *= frac
    return g


def survival_forward(pmfs: Sequence[np.ndarray], thresholds: Sequence[float], h: float = DEFAULT_STEP) -> np.ndarray:
    """``P(S_j <= t_j for all j <= l)`` for ``l = 1..L``.

    ``pmfs[j]`` is the lattice pmf of the round-``j`` increment; a single pmf
    is reused for every round.
    """
    if isinstance(pmfs, np.ndarray):
        pmfs = [pmfs] * len(thresholds)
    f = np.array([1.0])
    out = np.empty(len(thresholds))
    for j, t in enumerate(thresholds):
        f = _truncate(_conv(f, pmfs[j]), t, h)
        out[j] = f.sum()
    return np.minimum(out, 1.0)


def survival_profile(pmf: np.ndarray, slope: float, L: int, n_points: int, h: float = DEFAULT_STEP) -> np.ndarray:
    """Array ``P[l-1, k] = P(S_j <= k h + (j - 1) slope, j = 1..l)``.

    Backward recursion on the slack ``x = boundary - S``: with ``W`` the
    probability of surviving the remaining rounds from slack ``x``,
    ``P(E_{l}(c)) = sum_i pmf_i W_{l-1}(c - i h)``.
    """
    s = slope / h
    extra = int(math.ceil(s * L)) + 2
    n = n_points + extra
    grid = np.arange(n, dtype=float)
    # Slack exactly zero lies on the boundary: half the bin is below it.
    w = np.ones(n)
    w[0] = 0.5
    out = np.empty((L, n_points))
    W = w.copy()
    for l in range(L):
        F = _conv(pmf, W, n)
        out[l] = F[:n_points]
        if l + 1 < L:
            W = w * np.interp(grid + s, grid, F, right=F[-1])
    return np.minimum(out, 1.0)


class LatticeEvaluator:
    """Rayleigh evaluator computing prefix probabilities by lattice quadrature."""

    exact = True

    def __init__(self, params: RayleighParams, h: float = DEFAULT_STEP):
        self.params = params
        self.h = h
        self.pmf_d = increment_pmf(params.gamma_d, h)
        self.pmf_e = increment_pmf(params.gamma_e, h)

    def prefix_probs(self, schedule: RateSchedule) -> PrefixProbs:
        rates = np.asarray(schedule.dummy, dtype=float)
        if schedule.variant is Variant.TOMASIN:
            pmfs = [increment_pmf(self.params.gamma_d, self.h, shift=x) for x in rates]
            p_ac = survival_forward(pmfs, [schedule.r] * schedule.L, self.h)
            ge = self.params.gamma_e
            per_round = 1.0 - np.exp(-(np.exp2(rates) - 1.0) / ge)
            p_b = np.cumprod(per_round)
        else:
            cum = np.cumsum(rates)
            p_ac = survival_forward(self.pmf_d, schedule.r + cum, self.h)
            p_b = survival_forward(self.pmf_e, cum, self.h)
        return PrefixProbs(np.clip(p_ac, 0, 1), np.clip(p_b, 0, 1))

    def report(self, schedule: RateSchedule):
        return report_from_prefix(schedule.r, self.prefix_probs(schedule), schedule.L)
