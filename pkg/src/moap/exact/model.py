"""Binary models over offers: assignment rows plus clique or edge capacity rows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..conflict import OfferConflictGraph
from ..core import Instance


@dataclass
class IlpModel:
    """``min c.x`` s.t. one selected offer per demand and capacity rows ``sum(x_K) <= rhs``.

    A model built from a full instance has one variable per offer.  Models
    produced by :func:`restrict` keep only the free variables of a partially
    fixed selection; ``var_offer`` maps variables back to offer indices and
    ``fixed_offers`` lists offers fixed to one (their cost is in ``offset``).
    """

    instance: Instance
    costs: np.ndarray
    var_offer: np.ndarray
    eq_rows: list[tuple[int, ...]]
    eq_demand: list[int]
    cap_rows: list[tuple[tuple[int, ...], int]]
    formulation: str = "clique"
    classes: bool = False
    offset: float = 0.0
    fixed_offers: tuple[int, ...] = ()
    infeasible: bool = False
    cap_origin: list[str] = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return len(self.costs)

    @property
    def names(self) -> list[str]:
        return [f"x_{self.instance.offers[o].id}" for o in self.var_offer]

    def var_of_offer(self) -> dict[int, int]:
        return {int(o): v for v, o in enumerate(self.var_offer)}

    def is_feasible(self, values) -> bool:
        x = np.asarray(values)
        for row in self.eq_rows:
            if x[list(row)].sum() != 1:
                return False
        for row, rhs in self.cap_rows:
            if x[list(row)].sum() > rhs:
                return False
        return not self.infeasible


def build_model(instance: Instance, g: OfferConflictGraph, formulation: str = "clique",
                classes: bool = False) -> IlpModel:
    """Assignment rows per demand plus capacity rows.

    ``clique``: one row per maximal clique of each vehicle (or class) with
    right-hand side 1 (or the class size); singleton cliques are dropped.
    ``edge``: one row ``x_a + x_b <= 1`` per vehicle conflict edge.
    """
    if formulation not in ("clique", "edge"):
        raise ValueError(f"unknown formulation {formulation!r}")
    if classes and not instance.classes:
        raise ValueError("class model requested but the instance has no vehicle classes")
    if not classes and instance.has_class_offers:
        raise ValueError("instance has class offers; build with classes=True or expand_classes()")
    if formulation == "edge" and any(c > 1 for c in instance.capacity):
        raise ValueError("edge formulation needs unit capacities; use the clique formulation")

    n = instance.num_offers
    cap_rows, origin = [], []
    if formulation == "clique":
        for r, cliques in enumerate(g.resource_cliques):
            rhs = instance.capacity[r]
            label = instance.resources[r][1]
            for c in cliques:
                if len(c) > rhs:
                    cap_rows.append((tuple(c), rhs))
                    origin.append(label)
    else:
        for a, b in g.vehicle_edges:
            cap_rows.append(((a, b), 1))
            origin.append(instance.resources[instance.offer_resource[a]][1])
    return IlpModel(
        instance=instance,
        costs=instance.cost.copy(),
        var_offer=np.arange(n, dtype=np.int64),
        eq_rows=[tuple(d.offers) for d in instance.demands],
        eq_demand=list(range(instance.num_demands)),
        cap_rows=cap_rows,
        formulation=formulation,
        classes=classes,
        cap_origin=origin,
    )


def restrict(model: IlpModel, fixed_one) -> IlpModel:
    """Model over the variables left free after fixing ``fixed_one`` (variable indices) to 1."""
    ones = set(int(v) for v in fixed_one)
    n = model.num_vars
    zero = np.zeros(n, dtype=bool)
    infeasible = model.infeasible
    eq_kept = []
    for r, row in enumerate(model.eq_rows):
        k = sum(1 for v in row if v in ones)
        if k > 1:
            infeasible = True
        if k:
            for v in row:
                if v not in ones:
                    zero[v] = True
        else:
            eq_kept.append(r)
    residual = []
    for row, rhs in model.cap_rows:
        k = sum(1 for v in row if v in ones)
        left = rhs - k
        if left < 0:
            infeasible = True
        if left <= 0:
            for v in row:
                if v not in ones:
                    zero[v] = True
        residual.append(left)

    free = [v for v in range(n) if v not in ones and not zero[v]]
    new_index = {v: i for i, v in enumerate(free)}
    eq_rows, eq_demand = [], []
    for r in eq_kept:
        row = tuple(new_index[v] for v in model.eq_rows[r] if v in new_index)
        if not row:
            infeasible = True
        eq_rows.append(row)
        eq_demand.append(model.eq_demand[r])
    cap_rows, origin = [], []
    for (row, _), left, label in zip(model.cap_rows, residual,
                                      model.cap_origin or [""] * len(model.cap_rows)):
        if left <= 0:
            continue
        sub = tuple(new_index[v] for v in row if v in new_index)
        if len(sub) > left:
            cap_rows.append((sub, left))
            origin.append(label)
    fixed = tuple(sorted(set(model.fixed_offers) | {int(model.var_offer[v]) for v in ones}))
    return IlpModel(
        instance=model.instance,
        costs=model.costs[free].copy(),
        var_offer=model.var_offer[free].copy(),
        eq_rows=eq_rows,
        eq_demand=eq_demand,
        cap_rows=cap_rows,
        formulation=model.formulation,
        classes=model.classes,
        offset=model.offset + float(sum(model.costs[v] for v in ones)),
        fixed_offers=fixed,
        infeasible=infeasible,
        cap_origin=origin,
    )
