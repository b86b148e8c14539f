"""Channel-state models producing per-round mutual informations.

Two models are supported: a finite distribution over mutual-information
values (one table per link) and Rayleigh block fading parameterised by the
mean SNRs of the legitimate and eavesdropper links. All mutual informations
are in bits. Draws are i.i.d. across rounds and independent across links.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

# Link identifiers used to derive independent substreams.
LINK_D = 0
LINK_E = 1


def substream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the substream ``(seed, *key)``.

    Distinct keys give statistically independent streams, so results do not
    depend on how work is partitioned between batches or workers.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def db_to_linear(db: float) -> float:
    if not math.isfinite(db):
        raise ValueError(f"decibel value must be finite, got {db!r}")
    return 10.0 ** (db / 10.0)


def mutual_info_from_snr(snr):
    """Gaussian-input mutual information ``log2(1 + snr)`` in bits.

    Accepts scalars or arrays; raises ``ValueError`` on negative or
    non-finite input.
    """
    arr = np.asarray(snr, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("snr must be finite and nonnegative")
    out = np.log2(1.0 + arr)
    return float(out) if out.ndim == 0 else out


def sample_snr(gamma: float, rng: np.random.Generator, size=None):
    """Exponentially distributed SNR with mean ``gamma`` (Rayleigh fading power).

    Draws by inversion from uniforms so that each sample consumes exactly one
    raw output of the generator.
    """
    if not gamma > 0 or not math.isfinite(gamma):
        raise ValueError(f"mean SNR must be positive and finite, got {gamma!r}")
    u = rng.random(size)
    return -gamma * np.log1p(-u)


def snr_tail(x: float, gamma: float) -> float:
    """P(SNR > x) for an exponential SNR of mean ``gamma``."""
    if x < 0:
        raise ValueError("threshold must be nonnegative")
    if not gamma > 0:
        raise ValueError("mean SNR must be positive")
    return math.exp(-x / gamma)


@dataclass(frozen=True)
class RayleighParams:
    """Mean SNRs (linear) of the legitimate and eavesdropper links."""

    gamma_d: float
    gamma_e: float

    def __post_init__(self):
        for name in ("gamma_d", "gamma_e"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")

    @classmethod
    def from_db(cls, gamma_d_db: float, gamma_e_db: float) -> "RayleighParams":
        return cls(db_to_linear(gamma_d_db), db_to_linear(gamma_e_db))


def _check_states(states, name):
    if len(states) == 0:
        raise ValueError(f"{name} must contain at least one state")
    values = np.array([float(v) for v, _ in states])
    probs = np.array([float(p) for _, p in states])
    if np.any(~np.isfinite(values)) or np.any(values < 0):
        raise ValueError(f"{name}: mutual-information values must be finite and >= 0")
    if np.any(probs < 0):
        raise ValueError(f"{name}: probabilities must be nonnegative")
    if abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError(f"{name}: probabilities sum to {probs.sum()!r}, expected 1")
    return values, probs


@dataclass(frozen=True)
class DiscreteStateDist:
    """Finite per-round distribution of mutual informations for each link.

    ``d_states`` and ``e_states`` are sequences of ``(value_bits, probability)``.
    """

    d_states: tuple
    e_states: tuple

    def __init__(self, d_states: Sequence, e_states: Sequence):
        d = tuple((float(v), float(p)) for v, p in d_states)
        e = tuple((float(v), float(p)) for v, p in e_states)
        _check_states(d, "d_states")
        _check_states(e, "e_states")
        object.__setattr__(self, "d_states", d)
        object.__setattr__(self, "e_states", e)

    def d_arrays(self):
        return _check_states(self.d_states, "d_states")

    def e_arrays(self):
        return _check_states(self.e_states, "e_states")


ChannelModel = Union[RayleighParams, DiscreteStateDist]


@dataclass(frozen=True)
class MiTrace:
    """Realised per-round mutual informations of one HARQ session."""

    i_d: tuple
    i_e: tuple

    def __init__(self, i_d: Sequence[float], i_e: Sequence[float]):
        i_d = tuple(float(x) for x in i_d)
        i_e = tuple(float(x) for x in i_e)
        if len(i_d) != len(i_e):
            raise ValueError("legitimate and eavesdropper traces differ in length")
        if any(x < 0 for x in i_d + i_e):
            raise ValueError("mutual informations must be nonnegative")
        object.__setattr__(self, "i_d", i_d)
        object.__setattr__(self, "i_e", i_e)

    def __len__(self):
        return len(self.i_d)


def sample_link(model: ChannelModel, link: int, rng: np.random.Generator, size) -> np.ndarray:
    """Array of i.i.d. per-round mutual informations for one link."""
    if isinstance(model, RayleighParams):
        gamma = model.gamma_d if link == LINK_D else model.gamma_e
        return np.log2(1.0 + sample_snr(gamma, rng, size))
    if isinstance(model, DiscreteStateDist):
        values, probs = model.d_arrays() if link == LINK_D else model.e_arrays()
        if len(values) == 1:
            return np.full(size, values[0])
        idx = np.searchsorted(np.cumsum(probs), rng.random(size), side="right")
        return values[np.minimum(idx, len(values) - 1)]
    raise ValueError(f"unsupported channel model {type(model).__name__}")


def sample_trace(model: ChannelModel, L: int, rng: np.random.Generator) -> MiTrace:
    """One session's trace of ``L`` rounds; legitimate draws come first."""
    if L < 1:
        raise ValueError("L must be >= 1")
    i_d = sample_link(model, LINK_D, rng, L)
    i_e = sample_link(model, LINK_E, rng, L)
    return MiTrace(i_d, i_e)
