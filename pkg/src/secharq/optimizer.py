"""Constrained secrecy-throughput maximisation and outage trade-off curves.

ASR and Tomasin schedules are searched in the tied form ``(R, R_1, R_2)`` with
``R_2 = ... = R_L``: for every ``(R, R_1)`` grid point the second dummy rate
is the smallest ``R_2`` meeting the secrecy ceiling, since throughput only
falls as dummy rates grow. Tang schedules search ``(R, R_1)`` with ``R_2 = 0``.

Evaluators supply ``report(schedule)``; :class:`~secharq.analytics.DiscreteEvaluator`
and :class:`~secharq.lattice.LatticeEvaluator` are exact, Monte Carlo is not.
For Rayleigh ASR/Tang the lattice evaluator enables a table-driven sweep over
whole ``(R, R_1)`` grids per ``R_2`` value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from secharq import lattice
from secharq.analytics import DiscreteEvaluator, PerformanceReport, transmission_pmf
from secharq.channel import DiscreteStateDist, RayleighParams
from secharq.closedform import OutageConstraints, compatible, r1_max, r1_min
from secharq.montecarlo import McConfig, MonteCarloEvaluator
from secharq.protocols import RateSchedule, TiedSchedule, Variant

# Slack allowed on constraints for exact evaluators.
EXACT_TOL = 1e-12
# Dummy rate (bits) beyond which no realistic round can leak.
R2_CAP = 64.0


@dataclass(frozen=True)
class Grids:
    """Search grids; ``None`` bounds are derived from the model."""

    r_step: float = 0.1
    r_max: Optional[float] = 12.0
    r1_step: float = 0.05
    r1_lo: Optional[float] = None
    r1_hi: Optional[float] = None
    r2_step: float = 0.02
    r2_max: float = 8.0
    r2_tol: float = 1e-4
    prob_rtol: float = 1e-3

    def __post_init__(self):
        if self.r_step <= 0 or self.r1_step <= 0 or self.r2_step <= 0:
            raise ValueError("grid steps must be positive")

    @classmethod
    def discrete_default(cls) -> "Grids":
        return cls(r_step=0.25, r_max=None, r1_step=0.25)


@dataclass(frozen=True)
class TradeoffPoint:
    p_co: float
    p_so: float
    schedule: RateSchedule
    se_p_co: float = 0.0
    se_p_so: float = 0.0


@dataclass
class OptResult:
    schedule: Optional[RateSchedule]
    report: Optional[PerformanceReport]
    feasible: bool
    search_log: list = field(default_factory=list)
    search_report: Optional[PerformanceReport] = None
    active: tuple = ()

    @property
    def r(self) -> float:
        return self.schedule.r if self.schedule else float("nan")

    @property
    def r1(self) -> float:
        return self.schedule.dummy[0] if self.schedule else float("nan")

    @property
    def r2(self) -> float:
        if not self.schedule:
            return float("nan")
        return self.schedule.dummy[1] if self.schedule.L > 1 else 0.0


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    if hi < lo:
        return np.zeros(0)
    n = int(math.floor((hi - lo) / step + 1e-9))
    return np.round(lo + step * np.arange(n + 1), 12)


def _within(report: PerformanceReport, constraints: OutageConstraints, nsig: float = 0.0) -> bool:
    return (
        report.p_co <= constraints.xi_c + EXACT_TOL + nsig * report.se_p_co
        and report.p_so <= constraints.xi_s + EXACT_TOL + nsig * report.se_p_so
    )


def _better(a: tuple, b: Optional[tuple]) -> bool:
    """Compare (eta, e_l, total_dummy) keys: higher eta, then lower E[L], then lower dummy."""
    if b is None:
        return True
    if a[0] != b[0]:
        return a[0] > b[0]
    if a[1] != b[1]:
        return a[1] < b[1]
    return a[2] < b[2]


def _tied(variant: Variant, r: float, r1: float, r2: float, L: int) -> RateSchedule:
    return TiedSchedule(r, r1, r2 if variant is not Variant.TANG else 0.0, L).expand(variant)


def find_r2_star(r: float, r1: float, constraints: OutageConstraints, model, L: int, evaluator=None,
                 variant=Variant.ASR, grids: Grids = Grids(), bracket: Optional[tuple] = None):
    """Smallest tied ``R_2 >= 0`` with ``P_so <= xi_s``, or ``None`` if none exists.

    Discrete evaluators scan their finite set of breakpoints (exact). Other
    evaluators bisect on ``R_2`` until the bracket is below ``grids.r2_tol``
    bits or the secrecy outage is within ``grids.prob_rtol`` (relative) of the
    ceiling.
    """
    variant = Variant.parse(variant)
    evaluator = evaluator or default_evaluator(model)
    xi_s = constraints.xi_s

    def pso(r2):
        return evaluator.report(_tied(variant, r, r1, r2, L)).p_so

    if L == 1:
        return 0.0 if pso(0.0) <= xi_s + EXACT_TOL else None

    if isinstance(evaluator, DiscreteEvaluator):
        if variant is Variant.TOMASIN:
            cands = sorted({0.0} | {v for v, _ in model.e_states})
        else:
            cands = evaluator.r2_breakpoints(r1, L)
        for c in cands:
            if pso(c) <= xi_s + EXACT_TOL:
                return c
        return None

    lo, hi = bracket if bracket else (0.0, None)
    if bracket is None:
        if pso(0.0) <= xi_s:
            return 0.0
        # Secrecy floor: with R_2 unbounded only round 1 can leak.
        if pso(R2_CAP) > xi_s:
            return None
        hi = 1.0
        while pso(hi) > xi_s:
            lo, hi = hi, min(2 * hi, R2_CAP)
    while hi - lo > grids.r2_tol:
        mid = 0.5 * (lo + hi)
        p = pso(mid)
        if p <= xi_s:
            hi = mid
            if xi_s - p <= grids.prob_rtol * xi_s:
                break
        else:
            lo = mid
    return hi


def default_evaluator(model):
    if isinstance(model, DiscreteStateDist):
        return DiscreteEvaluator(model)
    if isinstance(model, RayleighParams):
        return lattice.LatticeEvaluator(model)
    raise ValueError(f"unsupported channel model {type(model).__name__}")


def _r_axis(model, L: int, grids: Grids) -> np.ndarray:
    r_max = grids.r_max
    if r_max is None:
        if isinstance(model, DiscreteStateDist):
            r_max = L * max(v for v, _ in model.d_states)
        else:
            r_max = 12.0
    return _axis(0.0, r_max, grids.r_step)


def _r1_axis(model, L: int, constraints: OutageConstraints, grids: Grids) -> np.ndarray:
    if isinstance(model, DiscreteStateDist):
        lo = 0.0 if grids.r1_lo is None else grids.r1_lo
        hi = L * max(v for v, _ in model.e_states) if grids.r1_hi is None else grids.r1_hi
        return _axis(lo, hi, grids.r1_step)
    ge = model.gamma_e
    lo = r1_min(constraints.xi_s, ge) if grids.r1_lo is None else grids.r1_lo
    if grids.r1_hi is not None:
        hi = grids.r1_hi
    elif constraints.xi_s >= 1.0:
        hi = lo
    else:
        hi = r1_max(constraints.xi_s, ge, L, method="quadrature") + grids.r1_step
    # Start on the step lattice at or above lo.
    lo = math.ceil(lo / grids.r1_step - 1e-9) * grids.r1_step
    return _axis(lo, hi, grids.r1_step)


def _generic_search(variant, model, constraints, L, grids, evaluator, r_axis, r1_axis, log):
    best_key = None
    best = None
    for r in r_axis:
        for r1 in r1_axis:
            if variant is Variant.TANG or L == 1:
                r2 = 0.0
                sched = _tied(variant, r, r1, 0.0, L)
                rep = evaluator.report(sched)
                if rep.p_so > constraints.xi_s + EXACT_TOL:
                    continue
            else:
                r2 = find_r2_star(r, r1, constraints, model, L, evaluator, variant, grids)
                if r2 is None:
                    continue
                sched = _tied(variant, r, r1, r2, L)
                rep = evaluator.report(sched)
            ok = _within(rep, constraints)
            log.append((float(r), float(r1), float(r2), rep.eta, rep.p_co, rep.p_so, rep.e_l, ok))
            if not ok:
                continue
            key = (rep.eta, rep.e_l, sum(sched.dummy))
            if _better(key, best_key):
                best_key, best = key, (sched, rep)
    return best


class _TableSweep:
    """Exact-on-grid sweep of ``(R, R_1)`` using lattice survival profiles.

    For each ``R_2`` on an increasing grid the decode and secrecy prefix
    probabilities of every ``(R, R_1)`` cell come from two profile arrays.
    Each cell keeps the first ``R_2`` meeting the secrecy ceiling. The sweep
    stops once no unresolved cell can beat the incumbent, since throughput is
    nonincreasing in ``R_2``.
    """

    def __init__(self, ev: lattice.LatticeEvaluator, L: int, r_axis, r1_axis, grids: Grids):
        self.ev, self.L, self.grids = ev, L, grids
        h = ev.h
        self.r_axis, self.r1_axis = r_axis, r1_axis
        self.r_idx = np.rint(r_axis / h).astype(int)
        self.r1_idx = np.rint(r1_axis / h).astype(int)
        self.c_idx = self.r_idx[:, None] + self.r1_idx[None, :]

    def metrics(self, r2: float):
        L, ev = self.L, self.ev
        n_d = int(self.c_idx.max()) + 1
        n_e = int(self.r1_idx.max()) + 1
        pd = lattice.survival_profile(ev.pmf_d, r2, L, n_d, ev.h)
        pe = lattice.survival_profile(ev.pmf_e, r2, L, n_e, ev.h)
        pac = pd[:, self.c_idx]  # (L, nR, nR1)
        pb = pe[:, self.r1_idx]  # (L, nR1)
        before = np.concatenate([np.ones((1,) + pac.shape[1:]), pac[: L - 1]], axis=0)
        pi = before.copy()
        pi[: L - 1] -= pac[: L - 1]
        p_so = np.clip(1.0 - np.einsum("lij,lj->ij", pi, pb), 0.0, 1.0)
        p_co = pac[L - 1]
        e_l = 1.0 + pac[: L - 1].sum(axis=0)
        eta = self.r_axis[:, None] * (1.0 - p_co) / e_l
        return eta, p_co, p_so, e_l

    def run(self, constraints: OutageConstraints, r2_values):
        shape = self.c_idx.shape
        found = np.zeros(shape, dtype=bool)
        out = {k: np.full(shape, np.nan) for k in ("eta", "p_co", "p_so", "e_l", "r2")}
        incumbent = -np.inf
        for r2 in r2_values:
            eta, p_co, p_so, e_l = self.metrics(r2)
            newly = ~found & (p_so <= constraints.xi_s + EXACT_TOL)
            for k, v in (("eta", eta), ("p_co", p_co), ("p_so", p_so), ("e_l", e_l)):
                out[k][newly] = v[newly]
            out["r2"][newly] = r2
            found |= newly
            ok = found & (out["p_co"] <= constraints.xi_c + EXACT_TOL)
            if ok.any():
                incumbent = max(incumbent, np.nanmax(np.where(ok, out["eta"], -np.inf)))
            open_cells = ~found & (p_co <= constraints.xi_c + EXACT_TOL)
            if not open_cells.any() or np.max(eta[open_cells]) <= incumbent:
                break
        out["found"] = found
        return out


def _table_search(variant, model, constraints, L, grids, ev, r_axis, r1_axis, log):
    sweep = _TableSweep(ev, L, r_axis, r1_axis, grids)
    if variant is Variant.TANG or L == 1:
        r2_values = [0.0]
    else:
        r2_values = _axis(0.0, grids.r2_max, grids.r2_step)
    res = sweep.run(constraints, r2_values)
    ok = res["found"] & (res["p_co"] <= constraints.xi_c + EXACT_TOL)
    for i, j in zip(*np.nonzero(res["found"])):
        log.append((float(r_axis[i]), float(r1_axis[j]), float(res["r2"][i, j]), float(res["eta"][i, j]),
                    float(res["p_co"][i, j]), float(res["p_so"][i, j]), float(res["e_l"][i, j]), bool(ok[i, j])))
    if not ok.any():
        return None
    eta = np.where(ok, res["eta"], -np.inf)
    # Tie-break on E[L] then total dummy rate.
    dummy_total = r1_axis[None, :] + (L - 1) * np.nan_to_num(res["r2"])
    order = np.lexsort((dummy_total.ravel(), res["e_l"].ravel(), -eta.ravel()))
    i, j = np.unravel_index(order[0], eta.shape)
    return _refine(variant, model, constraints, L, grids, ev, float(r_axis[i]), float(r1_axis[j]),
                   float(res["r2"][i, j]))


def _refine(variant, model, constraints, L, grids, ev, r, r1, r2):
    """Re-evaluate a table cell, tightening ``R_2`` inside its last grid step."""
    if r2 > 0:
        lo = max(r2 - grids.r2_step, 0.0)
        refined = find_r2_star(r, r1, constraints, model, L, ev, variant, grids, bracket=(lo, r2))
        cand = _tied(variant, r, r1, refined, L)
        rep = ev.report(cand)
        if _within(rep, constraints):
            return cand, rep
    sched = _tied(variant, r, r1, r2, L)
    return sched, ev.report(sched)


def _setup(protocol, model, constraints, L, grids, evaluator, r_values):
    variant = Variant.parse(protocol)
    if grids is None:
        grids = Grids.discrete_default() if isinstance(model, DiscreteStateDist) else Grids()
    evaluator = evaluator or default_evaluator(model)
    r_axis = np.asarray(r_values, dtype=float) if r_values is not None else _r_axis(model, L, grids)
    r1_axis = _r1_axis(model, L, constraints, grids)
    if len(r_axis) == 0 or len(r1_axis) == 0:
        raise ValueError("empty search grid")
    use_table = (
        isinstance(evaluator, lattice.LatticeEvaluator)
        and variant is not Variant.TOMASIN
        and np.allclose(r_axis / evaluator.h, np.rint(r_axis / evaluator.h))
        and np.allclose(r1_axis / evaluator.h, np.rint(r1_axis / evaluator.h))
    )
    return variant, grids, evaluator, r_axis, r1_axis, use_table


def _incompatible_one_tx(model, constraints, L) -> bool:
    return L == 1 and isinstance(model, RayleighParams) and not compatible(
        constraints, model.gamma_d, model.gamma_e)


def _finalize(sched, rep, log, constraints, model, rescore) -> OptResult:
    result = OptResult(sched, rep, True, log, search_report=rep)
    if rescore is not None:
        mc = MonteCarloEvaluator(model, rescore, cache=False).report(sched)
        result.report = mc
        result.feasible = _within(mc, constraints, nsig=3.0)
    result.active = _active(result.report, constraints)
    return result


def optimize(protocol, model, constraints: OutageConstraints, L: int, grids: Optional[Grids] = None,
             evaluator=None, rescore: Optional[McConfig] = None, r_values=None) -> OptResult:
    """Maximise secrecy throughput over the grid subject to both outage ceilings.

    ``rescore`` re-evaluates the winner with Monte Carlo; the returned
    report is then the Monte Carlo one and feasibility allows three standard
    errors. ``r_values`` overrides the secrecy-rate axis.
    """
    variant, grids, evaluator, r_axis, r1_axis, use_table = _setup(
        protocol, model, constraints, L, grids, evaluator, r_values)
    log: list = []
    if _incompatible_one_tx(model, constraints, L):
        return OptResult(None, None, False, log)
    search = _table_search if use_table else _generic_search
    best = search(variant, model, constraints, L, grids, evaluator, r_axis, r1_axis, log)
    if best is None:
        return OptResult(None, None, False, log)
    return _finalize(*best, log, constraints, model, rescore)


def optimize_per_rate(protocol, model, constraints: OutageConstraints, L: int, grids: Optional[Grids] = None,
                      evaluator=None, rescore: Optional[McConfig] = None, r_values=None) -> list:
    """Best dummy rates for each secrecy rate on the axis; one OptResult per rate.

    All rates share a single search, so this costs about as much as
    :func:`optimize`. Rates with no feasible point get ``feasible=False``.
    """
    variant, grids, evaluator, r_axis, r1_axis, use_table = _setup(
        protocol, model, constraints, L, grids, evaluator, r_values)
    if _incompatible_one_tx(model, constraints, L):
        return [OptResult(None, None, False) for _ in r_axis]
    log: list = []
    search = _table_search if use_table else _generic_search
    search(variant, model, constraints, L, grids, evaluator, r_axis, r1_axis, log)
    best: dict = {}
    for r, r1, r2, eta, p_co, p_so, e_l, ok in log:
        if not ok:
            continue
        key = (eta, e_l, r1 + (L - 1) * r2)
        if _better(key, best.get(r, (None,))[0]):
            best[r] = (key, r1, r2)
    out = []
    for r in r_axis:
        r = float(r)
        if r not in best:
            out.append(OptResult(None, None, False))
            continue
        _, r1, r2 = best[r]
        if use_table:
            sched, rep = _refine(variant, model, constraints, L, grids, evaluator, r, r1, r2)
        else:
            sched = _tied(variant, r, r1, r2, L)
            rep = evaluator.report(sched)
        out.append(_finalize(sched, rep, [], constraints, model, rescore))
    return out


def _active(rep: PerformanceReport, constraints: OutageConstraints, rtol: float = 0.05) -> tuple:
    out = []
    if constraints.xi_c < 1 and rep.p_co >= (1 - rtol) * constraints.xi_c:
        out.append("xi_c")
    if constraints.xi_s < 1 and rep.p_so >= (1 - rtol) * constraints.xi_s:
        out.append("xi_s")
    return tuple(out)


def pareto_filter(points: list) -> list:
    """Points not dominated in (P_co, P_so), sorted by increasing P_co."""
    pts = sorted(points, key=lambda p: (p.p_co, p.p_so))
    front = []
    best_so = math.inf
    for p in pts:
        if p.p_so < best_so:
            front.append(p)
            best_so = p.p_so
    return front


def tradeoff_curve(protocol, model, L: int, r: float = 0.0, r1_values=None, r2_values=None,
                   evaluator=None) -> list:
    """Pareto front of (P_co, P_so) over dummy-rate grids at fixed secrecy rate ``r``."""
    variant = Variant.parse(protocol)
    evaluator = evaluator or default_evaluator(model)
    if r1_values is None:
        r1_values = _axis(0.0, 30.0, 0.1)
    if r2_values is None or variant is Variant.TANG or L == 1:
        r2_values = [0.0]
    points = []
    for r1 in r1_values:
        for r2 in r2_values:
            sched = _tied(variant, r, float(r1), float(r2), L)
            rep = evaluator.report(sched)
            points.append(TradeoffPoint(rep.p_co, rep.p_so, sched, rep.se_p_co, rep.se_p_so))
    return pareto_filter(points)


def front_pso_at(front: list, p_co: float) -> float:
    """Smallest P_so on the front among points with P_co at most ``p_co``."""
    vals = [p.p_so for p in front if p.p_co <= p_co]
    return min(vals) if vals else 1.0
