"""Adaptive large neighborhood search over offer selections.

Three destroy operators (random demands, a time window, a BFS region of the
demand conflict graph) are paired with two repair operators (randomized
greedy and exact completion by branch and bound).  Operators are picked by
roulette over adaptive weights and candidates are accepted by a simulated
annealing rule.
"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .conflict import DemandConflictGraph, OfferConflictGraph, build_demand_conflict_graph
from .core import UNASSIGNED, Instance, Solution
from .exact.bnb import BranchAndBoundConfig, solve_bnb
from .exact.model import build_model, restrict
from .greedy import SortCriterion, blocked_by, fill, greedy, order_demands

log = logging.getLogger(__name__)

DESTROY_OPS = ("random", "time_interval", "conflict_bfs")
REPAIR_OPS = ("greedy", "exact")

# outcome labels used for rewards and in the per-iteration log
NEW_BEST, IMPROVING, ACCEPTED, REJECTED, DUPLICATE = (
    "new-best", "improving", "accepted-worse", "rejected", "duplicate")

MIN_REPAIR_SECONDS = 0.001
MIN_WEIGHT = 1e-12
EFFORT_SECONDS = 1e-6  # one unit of counted work in the deterministic clock


@dataclass
class AlnsConfig:
    sigma1: float = 23.0
    sigma2: float = 40.0
    sigma3: float = 50.0
    lam: float = 0.2377
    w: float = 0.0373
    p_w: float = 0.656
    c: float = 0.2267
    destroy: tuple = DESTROY_OPS
    repair: tuple = REPAIR_OPS
    r_des: float = 0.15
    r_rep: float = 0.1
    criterion: str = "MaxMinCost"
    time_limit: float | None = 60.0
    iterations: int | None = None
    seed: int = 0
    exact_node_cap: int = 50_000
    target_cost: float | None = None
    temperature_cap: float = 1e6
    trace_every: float = 10.0
    clock: str = "auto"  # "wall", "effort", or "auto" (effort when only iterations limit the run)

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValueError("lam must lie in (0, 1)")
        if not 0 < self.c < 1:
            raise ValueError("cooling rate c must lie in (0, 1)")
        if not 0 < self.p_w < 1:
            raise ValueError("p_w must lie in (0, 1)")
        if self.w <= 0:
            raise ValueError("w must be positive (w = 0 gives a zero start temperature)")
        for name in ("r_des", "r_rep"):
            if not 0 < getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        self.destroy = tuple(self.destroy)
        self.repair = tuple(self.repair)
        if not self.destroy or any(d not in DESTROY_OPS for d in self.destroy):
            raise ValueError(f"destroy operators must be among {DESTROY_OPS}")
        if not self.repair or any(r not in REPAIR_OPS for r in self.repair):
            raise ValueError(f"repair operators must be among {REPAIR_OPS}")
        self.criterion = SortCriterion.parse(self.criterion).value
        if self.time_limit is not None and self.time_limit < 0:
            raise ValueError("time_limit must be non-negative")
        if self.time_limit is None and self.iterations is None and self.target_cost is None:
            raise ValueError("set time_limit, iterations or target_cost")
        if self.clock not in ("auto", "wall", "effort"):
            raise ValueError(f"unknown clock {self.clock!r}")

    @property
    def deterministic(self) -> bool:
        if self.clock == "auto":
            return self.time_limit is None
        return self.clock == "effort"

    @classmethod
    def from_dict(cls, raw: dict) -> "AlnsConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known - {"preset"}
        if unknown:
            raise ValueError(f"unknown ALNS options: {sorted(unknown)}")
        base = cls.lns(raw["preset"]) if "preset" in raw else cls()
        return replace(base, **{k: v for k, v in raw.items() if k != "preset"})

    @classmethod
    def lns(cls, destroy: str, **overrides) -> "AlnsConfig":
        """Single-destroy-operator configurations with their tuned rates."""
        presets = {
            "random": dict(destroy=("random",), repair=("greedy",), r_des=0.1580, r_rep=0.1308),
            "time_interval": dict(destroy=("time_interval",), repair=("greedy",),
                                  r_des=0.1053, r_rep=0.1063),
            "conflict_bfs": dict(destroy=("conflict_bfs",), repair=("exact",), r_des=0.1836),
        }
        if destroy not in presets:
            raise ValueError(f"unknown LNS preset {destroy!r}")
        return cls(**{**presets[destroy], "criterion": "MaxMinCost", **overrides})


@dataclass
class AlnsState:
    current: Solution
    best: Solution
    rho_minus: np.ndarray
    rho_plus: np.ndarray
    temperature: float
    rng: np.random.Generator
    seen: set = field(default_factory=set)
    iteration: int = 0


@dataclass
class AlnsResult:
    best: Solution
    initial: Solution
    iterations: int
    trace: list  # (elapsed_s, iteration, best_cost)
    outcomes: dict
    runtime: float
    state: AlnsState | None = None

    @property
    def feasible(self) -> bool:
        return self.best.feasible and self.best.complete


# ---------------------------------------------------------------------------
# acceptance, temperature and weights


def accept(candidate_cost: float, current_cost: float, temperature: float,
           rng: np.random.Generator) -> bool:
    delta = candidate_cost - current_cost
    if delta <= 0:
        return True
    if temperature <= 0:
        return False
    return bool(rng.random() < math.exp(-delta / temperature))


def init_temperature(initial_cost: float, w: float, p_w: float, cap: float = 1e6) -> float:
    """Temperature at which a candidate ``w`` (fraction) worse than ``initial_cost`` is accepted with ``p_w``."""
    if w <= 0:
        raise ValueError("w must be positive")
    if not 0 < p_w < 1:
        raise ValueError("p_w must lie in (0, 1)")
    if initial_cost == 0:
        return 1.0
    t = -(w * initial_cost) / math.log(p_w)
    return min(t, cap * abs(initial_cost))


def reward(outcome: str, cfg: AlnsConfig) -> float:
    return {NEW_BEST: cfg.sigma1, IMPROVING: cfg.sigma2, ACCEPTED: cfg.sigma3}.get(outcome, 0.0)


def update_weights(rho_minus, rho_plus, i: int, j: int, sigma: float, lam: float,
                   repair_time: float | None = None):
    """Blend ``sigma`` into destroy weight ``i`` and repair weight ``j``.

    When ``repair_time`` (seconds) is given, ``sigma`` is first divided by
    ``max(repair_time, 1 ms)``.  Returns new arrays.
    """
    if repair_time is not None:
        sigma = sigma / max(repair_time, MIN_REPAIR_SECONDS)
    rm = np.array(rho_minus, dtype=float)
    rp = np.array(rho_plus, dtype=float)
    rm[i] = max(lam * rm[i] + (1 - lam) * sigma, MIN_WEIGHT)
    rp[j] = max(lam * rp[j] + (1 - lam) * sigma, MIN_WEIGHT)
    return rm, rp


def select_operator(weights, rng: np.random.Generator) -> int:
    cum = np.cumsum(weights)
    return int(min(np.searchsorted(cum, rng.random() * cum[-1], side="right"), len(cum) - 1))


def solution_hash(selection) -> bytes:
    arr = np.asarray(selection, dtype=np.int64)
    return hashlib.blake2b(arr.tobytes(), digest_size=8).digest()


# ---------------------------------------------------------------------------
# destroy operators; each returns sorted demand indices


def destroy_count(r_des: float, num_demands: int) -> int:
    return min(num_demands, math.ceil(r_des * num_demands - 1e-12))


def destroy_random(instance: Instance, selection, r_des: float, rng: np.random.Generator) -> list[int]:
    k = destroy_count(r_des, instance.num_demands)
    return sorted(int(d) for d in rng.choice(instance.num_demands, size=k, replace=False))


def time_windows(lo: int, hi: int, r_des: float, start: int) -> list[tuple[int, int]]:
    """Window of length ``ceil((hi - lo) * r_des)`` at ``start``, wrapped around ``[lo, hi)``."""
    length = math.ceil((hi - lo) * r_des - 1e-12)
    end = start + length
    if end <= hi:
        return [(start, end)]
    return [(start, hi), (lo, lo + (end - hi))]


def destroy_time_interval(instance: Instance, selection, r_des: float, rng: np.random.Generator,
                          start: int | None = None) -> list[int]:
    lo, hi = int(instance.start.min()), int(instance.end.max())
    if start is None:
        start = int(rng.integers(lo, hi + 1))
    windows = time_windows(lo, hi, r_des, start)
    out = []
    for d, o in enumerate(selection):
        if o == UNASSIGNED:
            continue
        a, b = instance.start[o], instance.end[o]
        if any(a < we and ws < b for ws, we in windows):
            out.append(d)
    return out


def destroy_conflict_bfs(instance: Instance, selection, dg: DemandConflictGraph, r_des: float,
                         rng: np.random.Generator, start: int | None = None) -> list[int]:
    quota = destroy_count(r_des, instance.num_demands)
    visited = np.zeros(instance.num_demands, dtype=bool)
    out = []
    first = True
    while len(out) < quota:
        if first and start is not None:
            root = start
        else:
            unvisited = np.flatnonzero(~visited)
            root = int(unvisited[rng.integers(len(unvisited))])
        first = False
        visited[root] = True
        queue = deque([root])
        while queue and len(out) < quota:
            d = queue.popleft()
            out.append(d)
            for h in dg.adj[d]:
                if not visited[h]:
                    visited[h] = True
                    queue.append(h)
    return sorted(out)


# ---------------------------------------------------------------------------
# repair operators


def repair_greedy_rcl(instance: Instance, g: OfferConflictGraph, selection, unassigned,
                      crit, r_rep: float, rng: np.random.Generator,
                      stats: dict | None = None) -> Solution:
    """Complete ``selection`` with a randomized greedy over the unassigned demands."""
    sel = list(selection)
    if not unassigned:
        return Solution.from_selection(instance, sel)
    ordering = order_demands(instance, crit, rng=rng, subset=unassigned)
    rcl = max(1, math.ceil(r_rep * instance.num_demands - 1e-12))
    fill(instance, g, sel, ordering, blocked=blocked_by(g, sel), rcl_size=rcl, rng=rng, stats=stats)
    return Solution.from_selection(instance, sel)


class ExactRepair:
    """Exact completion of a partial selection; the full model is built once."""

    def __init__(self, instance: Instance, g: OfferConflictGraph, node_cap: int = 50_000):
        self.instance = instance
        self.model = build_model(instance, g, "clique")
        self.node_cap = node_cap

    def __call__(self, selection, current: Solution | None = None,
                 time_limit: float | None = None, stats: dict | None = None) -> Solution:
        inst = self.instance
        var = self.model.var_of_offer()
        fixed = [var[o] for o in selection if o != UNASSIGNED]
        sub = restrict(self.model, fixed)
        cfg = BranchAndBoundConfig(time_limit=time_limit, node_limit=self.node_cap,
                                   incumbent=current if current is not None and current.complete else None)
        res = solve_bnb(sub, cfg)
        if stats is not None:
            stats["nodes"] = stats.get("nodes", 0) + res.nodes
            stats["lp_iterations"] = stats.get("lp_iterations", 0) + res.lp_iterations
        if res.solution is None:
            return Solution.from_selection(inst, list(selection))
        return res.solution


def repair_exact(instance: Instance, g: OfferConflictGraph, selection, current: Solution | None = None,
                 node_cap: int = 50_000) -> Solution:
    return ExactRepair(instance, g, node_cap)(selection, current)


# ---------------------------------------------------------------------------
# main loop


def _effort(stats: dict) -> int:
    return (stats.get("edge_touches", 0) + stats.get("demands", 0)
            + 10 * stats.get("lp_iterations", 0) + 100 * stats.get("nodes", 0))


def run_alns(instance: Instance, g: OfferConflictGraph | None = None,
             dg: DemandConflictGraph | None = None, cfg: AlnsConfig | None = None,
             initial: Solution | None = None, keep_state: bool = False) -> AlnsResult:
    """Search from ``initial`` (greedy by ``cfg.criterion`` when omitted).

    The run stops at the first of ``cfg.time_limit`` seconds, ``cfg.iterations``
    iterations, or a best cost at or below ``cfg.target_cost``.  The trace holds
    ``(elapsed_s, iteration, best_cost)`` at the start, every
    ``cfg.trace_every`` seconds and at the end.
    """
    from .conflict import build_offer_conflict_graph

    cfg = cfg or AlnsConfig()
    t0 = time.perf_counter()
    if g is None:
        g = build_offer_conflict_graph(instance)
    if dg is None and "conflict_bfs" in cfg.destroy:
        dg = build_demand_conflict_graph(g)
    rng = np.random.default_rng(cfg.seed)
    exact = ExactRepair(instance, g, cfg.exact_node_cap) if "exact" in cfg.repair else None

    if initial is None:
        initial = greedy(instance, g, cfg.criterion, seed=cfg.seed)
        if not (initial.feasible and initial.complete) and exact is not None:
            initial = exact([UNASSIGNED] * instance.num_demands)
    if not (initial.feasible and initial.complete):
        return AlnsResult(initial, initial, 0, [(0.0, 0, math.inf)], {}, time.perf_counter() - t0)

    state = AlnsState(
        current=initial, best=initial,
        rho_minus=np.ones(len(cfg.destroy)), rho_plus=np.ones(len(cfg.repair)),
        temperature=init_temperature(initial.objective, cfg.w, cfg.p_w, cfg.temperature_cap),
        rng=rng,
    )
    outcomes = {k: 0 for k in (NEW_BEST, IMPROVING, ACCEPTED, REJECTED, DUPLICATE)}
    deterministic = cfg.deterministic
    effort_total = 0

    def elapsed():
        return effort_total * EFFORT_SECONDS if deterministic else time.perf_counter() - t0

    trace = [(0.0, 0, initial.objective)]
    next_trace = cfg.trace_every
    deadline = cfg.time_limit

    def done():
        if cfg.target_cost is not None and state.best.objective <= cfg.target_cost:
            return True
        if cfg.iterations is not None and state.iteration >= cfg.iterations:
            return True
        if deadline is not None and time.perf_counter() - t0 >= deadline:
            return True
        return False

    while not done():
        i = select_operator(state.rho_minus, rng)
        j = select_operator(state.rho_plus, rng)
        sel = list(state.current.selection)
        op = cfg.destroy[i]
        if op == "random":
            removed = destroy_random(instance, sel, cfg.r_des, rng)
        elif op == "time_interval":
            removed = destroy_time_interval(instance, sel, cfg.r_des, rng)
        else:
            removed = destroy_conflict_bfs(instance, sel, dg, cfg.r_des, rng)
        for d in removed:
            sel[d] = UNASSIGNED

        stats = {"demands": len(removed)}
        r0 = time.perf_counter()
        if cfg.repair[j] == "greedy":
            cand = repair_greedy_rcl(instance, g, sel, removed, cfg.criterion, cfg.r_rep, rng, stats)
        else:
            budget = None
            if deadline is not None:
                budget = max(deadline - (time.perf_counter() - t0), 1e-3)
            cand = exact(sel, state.current, budget, stats)
        effort = _effort(stats)
        effort_total += effort
        repair_time = effort * EFFORT_SECONDS if deterministic else time.perf_counter() - r0

        key = solution_hash(cand.selection)
        duplicate = key in state.seen
        state.seen.add(key)
        c_t, c_s, c_b = cand.objective, state.current.objective, state.best.objective
        if not (cand.feasible and cand.complete):
            outcome = REJECTED
        elif c_t < c_b:
            outcome = NEW_BEST
        elif c_t < c_s:
            outcome = IMPROVING
        elif accept(c_t, c_s, state.temperature, rng):
            outcome = ACCEPTED
        else:
            outcome = REJECTED
        if outcome != REJECTED:
            state.current = cand
            if outcome == NEW_BEST:
                state.best = cand
        sigma = 0.0 if duplicate else reward(outcome, cfg)
        outcomes[DUPLICATE if duplicate else outcome] += 1
        state.rho_minus, state.rho_plus = update_weights(
            state.rho_minus, state.rho_plus, i, j, sigma, cfg.lam, repair_time)
        state.temperature *= cfg.c
        state.iteration += 1

        now = elapsed()
        while now >= next_trace:
            trace.append((next_trace, state.iteration, state.best.objective))
            next_trace += cfg.trace_every
        log.debug("it %d %s/%s %s cand=%.4f best=%.4f", state.iteration, op, cfg.repair[j],
                  outcome, c_t, state.best.objective)

    trace.append((round(elapsed(), 6), state.iteration, state.best.objective))
    return AlnsResult(state.best, initial, state.iteration, trace, outcomes,
                      time.perf_counter() - t0, state if keep_state else None)
