import sys

import numpy as np

from secharq.channel import DiscreteStateDist
from secharq.protocols import RateSchedule

TWO_STATE = DiscreteStateDist([(4, 0.5), (5, 0.5)], [(2, 0.5), (3.5, 0.5)])
TWO_STATE_TIGHT = DiscreteStateDist([(4, 0.5), (5, 0.5)], [(2, 0.5), (3, 0.5)])


def _states(rng, k_max=3, step=0.5, top=6.0):
    k = int(rng.integers(1, k_max + 1))
    vals = rng.choice(np.arange(0.0, top + step, step), size=k, replace=False)
    probs = rng.dirichlet(np.ones(k))
    probs[-1] = 1.0 - probs[:-1].sum()
    return list(zip(vals.tolist(), probs.tolist()))


def random_instance(rng, variant=None, L_max=4):
    """Small discrete model plus schedule on a half-bit lattice (exact ties occur)."""
    model = DiscreteStateDist(_states(rng), _states(rng))
    L = int(rng.integers(1, L_max + 1))
    variant = variant or str(rng.choice(["asr", "tang", "tomasin"]))
    r = float(rng.integers(0, 9)) * 0.5
    dummy = (rng.integers(0, 9, size=L) * 0.5).astype(float)
    if variant == "tang":
        dummy[1:] = 0.0
    return model, RateSchedule(variant, r, dummy)


def random_prefix(rng, L):
    p_ac = np.sort(rng.random(L))[::-1]
    p_b = np.sort(rng.random(L))[::-1]
    return p_ac, p_b


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
