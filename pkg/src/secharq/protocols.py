"""Rate schedules and per-round decoding/secrecy predicates.

Three variants share one schedule type:

* ``ASR``: the dummy-message budget is split over rounds. Round ``l`` decodes
  when ``R + sum(R_1..R_l) <= sum(I_d,1..I_d,l)`` and is secret when
  ``sum(R_1..R_l) >= sum(I_e,1..I_e,l)``.
* ``TANG``: single dummy rate ``R_1`` (all later rates are zero); same
  inequalities as ASR.
* ``TOMASIN``: each round carries its own dummy message. Decoding accumulates
  ``max(I_d,j - R_j, 0)`` against ``R``; secrecy requires ``R_j >= I_e,j`` in
  every round.

The published region equations for the two baselines print the legitimate
mutual information inside their secrecy conditions. That is a typo: the
secrecy tests here use the eavesdropper mutual information, as the event
definitions and region captions require.

Ties count as success for both decoding (``<=``) and secrecy (``>=``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from secharq.channel import MiTrace


class Variant(str, enum.Enum):
    ASR = "asr"
    TANG = "tang"
    TOMASIN = "tomasin"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown protocol {value!r}; expected one of asr, tang, tomasin") from None


@dataclass(frozen=True)
class RateSchedule:
    """Secrecy rate ``r`` and per-round dummy-message rates (bits/channel use)."""

    variant: Variant
    r: float
    dummy: tuple

    def __init__(self, variant, r: float, dummy: Sequence[float]):
        variant = Variant.parse(variant)
        dummy = tuple(float(x) for x in dummy)
        if len(dummy) < 1:
            raise ValueError("schedule needs at least one round")
        if r < 0 or any(x < 0 for x in dummy):
            raise ValueError("rates must be nonnegative")
        if variant is Variant.TANG and any(x != 0 for x in dummy[1:]):
            raise ValueError("TANG schedules carry a single dummy rate; dummy[2..L] must be 0")
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "r", float(r))
        object.__setattr__(self, "dummy", dummy)

    @property
    def L(self) -> int:
        return len(self.dummy)

    def with_variant(self, variant) -> "RateSchedule":
        return RateSchedule(variant, self.r, self.dummy)


@dataclass(frozen=True)
class TiedSchedule:
    """Three-parameter schedule with ``R_2 = ... = R_L``."""

    r: float
    r1: float
    r2: float
    L: int

    def expand(self, variant=Variant.ASR) -> RateSchedule:
        return RateSchedule(variant, self.r, [self.r1] + [self.r2] * (self.L - 1))


def _check_round(schedule: RateSchedule, l: int) -> None:
    if not 1 <= l <= schedule.L:
        raise ValueError(f"round index {l} outside 1..{schedule.L}")


def _trace_prefix(values, l):
    if len(values) < l:
        raise ValueError(f"trace has {len(values)} rounds, need {l}")
    return np.asarray(values[:l], dtype=float)


def decode_event(schedule: RateSchedule, trace: MiTrace, l: int) -> bool:
    """True when the legitimate decoder succeeds with the first ``l`` rounds."""
    _check_round(schedule, l)
    i_d = _trace_prefix(trace.i_d, l)
    rates = np.asarray(schedule.dummy[:l])
    if schedule.variant is Variant.TOMASIN:
        return bool(schedule.r <= np.maximum(i_d - rates, 0.0).sum())
    return bool(schedule.r + rates.sum() <= i_d.sum())


def secrecy_event(schedule: RateSchedule, trace: MiTrace, l: int) -> bool:
    """True when round ``l`` does not leak under the variant's secrecy test."""
    _check_round(schedule, l)
    i_e = _trace_prefix(trace.i_e, l)
    rates = np.asarray(schedule.dummy[:l])
    if schedule.variant is Variant.TOMASIN:
        return bool(np.all(rates >= i_e))
    return bool(rates.sum() >= i_e.sum())


def transmission_count(schedule: RateSchedule, trace: MiTrace) -> tuple[int, bool]:
    """Rounds used and whether the message was decoded.

    A message that is not decoded after ``L`` rounds is dropped: ``(L, False)``.
    """
    for l in range(1, schedule.L + 1):
        if decode_event(schedule, trace, l):
            return l, True
    return schedule.L, False


def session_secure(schedule: RateSchedule, trace: MiTrace, l_used: int) -> bool:
    """Secrecy holds in every round the eavesdropper observed."""
    _check_round(schedule, l_used)
    return all(secrecy_event(schedule, trace, j) for j in range(1, l_used + 1))


# Vectorised forms over many sessions: arrays of shape (n, L).

def decode_failure_prefix(schedule: RateSchedule, i_d: np.ndarray) -> np.ndarray:
    """Boolean (n, L): column ``l-1`` is the event that rounds 1..l all fail to decode."""
    i_d = np.asarray(i_d, dtype=float)
    rates = np.asarray(schedule.dummy, dtype=float)
    if schedule.variant is Variant.TOMASIN:
        acc = np.cumsum(np.maximum(i_d - rates, 0.0), axis=1)
        ok = schedule.r <= acc
    else:
        ok = schedule.r + np.cumsum(rates) <= np.cumsum(i_d, axis=1)
    return np.logical_and.accumulate(~ok, axis=1)


def secrecy_prefix(schedule: RateSchedule, i_e: np.ndarray) -> np.ndarray:
    """Boolean (n, L): column ``l-1`` is the event that rounds 1..l are all secret."""
    i_e = np.asarray(i_e, dtype=float)
    rates = np.asarray(schedule.dummy, dtype=float)
    if schedule.variant is Variant.TOMASIN:
        ok = rates >= i_e
    else:
        ok = np.cumsum(rates) >= np.cumsum(i_e, axis=1)
    return np.logical_and.accumulate(ok, axis=1)


def rounds_used(fail_prefix: np.ndarray) -> np.ndarray:
    """Transmission count per session from a decode-failure prefix matrix."""
    L = fail_prefix.shape[1]
    return np.minimum(1 + fail_prefix[:, : L - 1].sum(axis=1), L)
