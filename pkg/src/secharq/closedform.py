"""Closed-form Rayleigh results for one transmission and dummy-rate bounds.

With one round, a schedule ``(R, R_1)`` has

    P_co = 1 - exp(-(2^(R + R_1) - 1) / gamma_d)
    P_so = exp(-(2^R_1 - 1) / gamma_e)

from which follow the compatibility test for a constraint pair and the
largest secrecy rate meeting both constraints. ``r1_min`` inverts ``P_so``;
``r1_max`` is the dummy rate whose ``L``-round cumulative eavesdropper
mutual information exceeds it with probability ``xi_s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from secharq.channel import LINK_E, RayleighParams, sample_link, substream
from secharq import lattice


class InfeasibleError(ValueError):
    """The constraint pair cannot be met."""


class ConvergenceError(RuntimeError):
    """A root search did not converge within its iteration cap."""


@dataclass(frozen=True)
class OutageConstraints:
    """Ceilings on connection and secrecy outage; 1 means unconstrained."""

    xi_c: float
    xi_s: float

    def __post_init__(self):
        for name in ("xi_c", "xi_s"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v!r}")


def pco_one_tx(r: float, r1: float, gamma_d: float) -> float:
    if r < 0 or r1 < 0 or gamma_d <= 0:
        raise ValueError("rates must be >= 0 and gamma_d > 0")
    return -math.expm1(-(2.0 ** (r + r1) - 1.0) / gamma_d)


def pso_one_tx(r1: float, gamma_e: float) -> float:
    if r1 < 0 or gamma_e <= 0:
        raise ValueError("r1 must be >= 0 and gamma_e > 0")
    return math.exp(-(2.0**r1 - 1.0) / gamma_e)


def compatible(constraints: OutageConstraints, gamma_d: float, gamma_e: float) -> bool:
    """Whether some single-round schedule meets both outage ceilings."""
    return constraints.xi_s >= (1.0 - constraints.xi_c) ** (gamma_d / gamma_e)


def compatible_difference_form(constraints: OutageConstraints, gamma_d: float, gamma_e: float) -> bool:
    """Equivalent test ``xi_s^gamma_e - (1 - xi_c)^gamma_d >= 0``, evaluated in logs."""
    lhs = gamma_e * math.log(constraints.xi_s)
    if constraints.xi_c >= 1.0:
        return True
    rhs = gamma_d * math.log1p(-constraints.xi_c)
    return lhs >= rhs


def r1_min(xi_s: float, gamma_e: float) -> float:
    """Smallest first-round dummy rate with ``pso_one_tx <= xi_s``."""
    if not 0 < xi_s <= 1 or gamma_e <= 0:
        raise ValueError("xi_s must lie in (0, 1] and gamma_e > 0")
    return math.log2(1.0 - gamma_e * math.log(xi_s))


def r1_decode_max(r: float, xi_c: float, gamma_d: float) -> float:
    """Largest first-round dummy rate with ``pco_one_tx(r, r1) <= xi_c`` (may be negative)."""
    if xi_c >= 1.0:
        return math.inf
    return math.log2(1.0 - gamma_d * math.log1p(-xi_c)) - r


def max_secrecy_rate_one_tx(constraints: OutageConstraints, gamma_d: float, gamma_e: float) -> float:
    """Largest R for which a single-round schedule meets both ceilings.

    Unbounded (``inf``) when ``xi_c = 1``.
    """
    if not compatible(constraints, gamma_d, gamma_e):
        raise InfeasibleError(
            f"constraints (xi_c={constraints.xi_c}, xi_s={constraints.xi_s}) are incompatible "
            f"at gamma_d={gamma_d}, gamma_e={gamma_e}"
        )
    if constraints.xi_c >= 1.0:
        return math.inf
    num = 1.0 - gamma_d * math.log1p(-constraints.xi_c)
    den = 1.0 - gamma_e * math.log(constraints.xi_s)
    return max(math.log2(num / den), 0.0)


class SumTail:
    """Estimator of ``P(sum_{j<=L} log2(1 + SNR_e,j) >= x)``.

    ``method="mc"`` draws ``n_samples`` sums from a fixed seed once and answers
    queries from the sorted sample; ``method="quadrature"`` uses the lattice
    convolution.
    """

    def __init__(self, gamma_e: float, L: int, method: str = "mc", n_samples: int = 10**6, seed: int = 0,
                 h: float = lattice.DEFAULT_STEP):
        if L < 1:
            raise ValueError("L must be >= 1")
        self.gamma_e, self.L, self.method = gamma_e, L, method
        self.n_samples = n_samples
        self.h = h
        if method == "mc":
            rng = substream(seed, LINK_E, 0xA11)
            sums = np.zeros(n_samples)
            model = RayleighParams(1.0, gamma_e)
            for _ in range(L):
                sums += sample_link(model, LINK_E, rng, n_samples)
            self._sorted = np.sort(sums)
        elif method == "quadrature":
            pmf = lattice.increment_pmf(gamma_e, h)
            total = np.array([1.0])
            for _ in range(L):
                total = lattice._conv(total, pmf)
            self._total = total
        else:
            raise ValueError(f"unknown tail method {method!r}")

    def __call__(self, x: float) -> float:
        if self.method == "mc":
            n = len(self._sorted)
            return (n - np.searchsorted(self._sorted, x, side="left")) / n
        # Tail summed from the top keeps small probabilities accurate.
        kept = lattice._truncate(self._total, x, self.h)
        above = self._total[len(kept):].sum() + (self._total[len(kept) - 1] - kept[-1] if len(kept) else 0.0)
        return float(min(max(above, 0.0), 1.0))

    def stderr(self, p: float) -> float:
        if self.method != "mc":
            return 0.0
        return math.sqrt(max(p * (1 - p), 0.0) / self.n_samples)


def _bisect_tail(tail, target: float, tol: float, max_iter: int) -> float:
    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        if tail(hi) <= target:
            break
        lo, hi = hi, 2 * hi
    else:
        raise ConvergenceError("could not bracket the tail root")
    for _ in range(max_iter):
        if hi - lo <= tol:
            return hi
        mid = 0.5 * (lo + hi)
        if tail(mid) > target:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"bisection did not reach tolerance {tol} in {max_iter} iterations")


def r1_max(xi_s: float, gamma_e: float, L: int, method: str = "mc", n_samples: int = 10**6, seed: int = 0,
           tol: float = 1e-4, max_iter: int = 200, tail: SumTail | None = None) -> float:
    """Dummy rate covering the ``L``-round eavesdropper sum except with probability ``xi_s``.

    For ``L = 1`` the closed form ``r1_min`` is returned.
    """
    if not 0 < xi_s < 1 or gamma_e <= 0 or L < 1:
        raise ValueError("need 0 < xi_s < 1, gamma_e > 0, L >= 1")
    if L == 1:
        return r1_min(xi_s, gamma_e)
    if tail is None:
        tail = SumTail(gamma_e, L, method=method, n_samples=n_samples, seed=seed)
    return _bisect_tail(tail, xi_s, tol, max_iter)
