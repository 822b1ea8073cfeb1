"""Greedy construction: sort the demands, then give each its cheapest selectable offer."""

from __future__ import annotations

import enum

import numpy as np

from .conflict import OfferConflictGraph
from .core import UNASSIGNED, Instance, Solution


class SortCriterion(str, enum.Enum):
    MIN_MIN_COST = "MinMinCost"
    MAX_MIN_COST = "MaxMinCost"
    MIN_MIN_COST_PER_TIME = "MinMinCostPerTime"
    MAX_MIN_COST_PER_TIME = "MaxMinCostPerTime"
    MIN_AVE_COST = "MinAveCost"
    MAX_AVE_COST = "MaxAveCost"
    RANDOM = "Random"

    @classmethod
    def parse(cls, text) -> "SortCriterion":
        if isinstance(text, cls):
            return text
        key = str(text).replace("-", "").replace("_", "").lower()
        for c in cls:
            if c.value.lower() == key:
                return c
        raise ValueError(f"unknown sort criterion {text!r}; "
                         f"choose from {', '.join(c.value for c in cls)}")


def demand_keys(instance: Instance, crit: SortCriterion) -> np.ndarray:
    """The per-demand value that ``crit`` sorts on (before any sign flip)."""
    crit = SortCriterion.parse(crit)
    cost = instance.cost
    if crit in (SortCriterion.MIN_MIN_COST_PER_TIME, SortCriterion.MAX_MIN_COST_PER_TIME):
        per_time = cost / (instance.end - instance.start)
        return np.array([per_time[list(d.offers)].min() for d in instance.demands])
    if crit in (SortCriterion.MIN_AVE_COST, SortCriterion.MAX_AVE_COST):
        return np.array([cost[list(d.offers)].mean() for d in instance.demands])
    return np.array([cost[list(d.offers)].min() for d in instance.demands])


def order_demands(instance: Instance, crit, seed=None, rng: np.random.Generator | None = None,
                  subset=None) -> list[int]:
    """Demand indices in the order ``crit`` prescribes.

    Demand indices follow ascending demand id, so a stable sort on the key
    breaks ties by id.  ``Random`` needs ``seed`` or ``rng``.  ``subset``
    restricts the ordering to the given demand indices.
    """
    crit = SortCriterion.parse(crit)
    idx = np.arange(instance.num_demands) if subset is None else np.array(sorted(subset), dtype=np.int64)
    if crit is SortCriterion.RANDOM:
        if rng is None:
            if seed is None:
                raise ValueError("the Random criterion needs a seed")
            rng = np.random.default_rng(seed)
        return [int(d) for d in rng.permutation(idx)]
    keys = demand_keys(instance, crit)[idx]
    if crit.value.startswith("Max"):
        keys = -keys
    return [int(d) for d in idx[np.argsort(keys, kind="stable")]]


def _check_unit_capacity(instance: Instance):
    if any(c > 1 for c in instance.capacity):
        raise ValueError("greedy construction needs unit-capacity resources; "
                         "expand vehicle classes first")


def blocked_by(g: OfferConflictGraph, selection) -> bytearray:
    """Mark every offer adjacent (through a vehicle) to a selected offer."""
    blocked = bytearray(g.instance.num_offers)
    for o in selection:
        if o != UNASSIGNED:
            for p in g.vehicle_adj[o]:
                blocked[p] = 1
    return blocked


def _cheapest(instance: Instance, d: int, blocked) -> int:
    best, best_cost = UNASSIGNED, np.inf
    cost = instance.cost
    for o in instance.demands[d].offers:
        if not blocked[o] and cost[o] < best_cost:
            best, best_cost = o, cost[o]
    return best


def fill(instance: Instance, g: OfferConflictGraph, selection: list[int], ordering,
         blocked: bytearray | None = None, rcl_size: int = 1,
         rng: np.random.Generator | None = None, stats: dict | None = None) -> list[int]:
    """Assign the demands of ``ordering`` in place, on top of ``selection``.

    With ``rcl_size > 1`` the next demand is drawn uniformly from the first
    ``rcl_size`` not yet handled ones.  Offers of already-assigned demands
    never need blocking because each demand is visited once.
    """
    if blocked is None:
        blocked = blocked_by(g, selection)
    pending = list(ordering)
    touched = 0
    adj = g.vehicle_adj
    pos = 0
    while pos < len(pending):
        if rcl_size > 1:
            # the RCL is pending[pos:pos+rcl_size]; the others keep their order
            k = int(rng.integers(min(rcl_size, len(pending) - pos)))
            if k:
                pending.insert(pos, pending.pop(pos + k))
        d = pending[pos]
        pos += 1
        o = _cheapest(instance, d, blocked)
        selection[d] = o
        if o == UNASSIGNED:
            continue
        touched += len(instance.demands[d].offers) - 1
        for p in adj[o]:
            blocked[p] = 1
        touched += len(adj[o])
    if stats is not None:
        stats["edge_touches"] = stats.get("edge_touches", 0) + touched
    return selection


def greedy_select(instance: Instance, g: OfferConflictGraph, ordering,
                  stats: dict | None = None) -> Solution:
    """Visit demands in ``ordering`` and pick each one's cheapest selectable offer.

    Demands left without a selectable offer stay unassigned and the returned
    solution is flagged infeasible.
    """
    _check_unit_capacity(instance)
    selection = [UNASSIGNED] * instance.num_demands
    fill(instance, g, selection, ordering, stats=stats)
    return Solution.from_selection(instance, selection)


def greedy(instance: Instance, g: OfferConflictGraph, crit="MaxMinCost", seed=None,
           stats: dict | None = None) -> Solution:
    return greedy_select(instance, g, order_demands(instance, crit, seed), stats)


def greedy_g1mw(instance: Instance, g: OfferConflictGraph, stats: dict | None = None) -> Solution:
    """Repeatedly take the globally cheapest selectable offer of an unserved demand."""
    _check_unit_capacity(instance)
    n = instance.num_offers
    # lexsort: last key is primary; offer indices already run by (demand, offer id)
    order = np.lexsort((np.arange(n), instance.offer_demand, instance.cost))
    blocked = bytearray(n)
    selection = [UNASSIGNED] * instance.num_demands
    touched = 0
    remaining = instance.num_demands
    for o in order:
        if remaining == 0:
            break
        d = instance.offer_demand[o]
        if blocked[o] or selection[d] != UNASSIGNED:
            continue
        selection[d] = int(o)
        remaining -= 1
        touched += len(instance.demands[d].offers) - 1
        for p in g.vehicle_adj[o]:
            blocked[p] = 1
        touched += len(g.vehicle_adj[o])
    if stats is not None:
        stats["edge_touches"] = stats.get("edge_touches", 0) + touched
    return Solution.from_selection(instance, selection)
