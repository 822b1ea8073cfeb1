"""Offer and demand conflict graphs.

Two offers conflict when they belong to the same demand or when they need
the same vehicle (or vehicle class) during overlapping absence intervals.
Per vehicle the conflicts form an interval graph whose maximal cliques are
enumerated by a single endpoint sweep.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cmp_to_key
from typing import Hashable, Iterable

from .core import Instance, natural_key

LEFT, RIGHT = 1, 0  # right endpoints sort first at equal times


def _endpoint_key(e):
    time, side, node = e
    return (time, side, node)


def max_cliques_interval(items: Iterable[tuple[Hashable, int, int]], stats: dict | None = None):
    """Report all maximal cliques of an interval graph.

    ``items`` are ``(node, start, end)`` triples of half-open intervals.
    Cliques are returned as sorted tuples, in sweep order.  If ``stats`` is
    given it receives ``comparisons`` (made while sorting endpoints) and
    ``sweep_steps``.
    """
    endpoints = []
    for node, start, end in items:
        endpoints.append((start, LEFT, node))
        endpoints.append((end, RIGHT, node))

    if stats is None:
        endpoints.sort(key=_endpoint_key)
    else:
        count = [0]

        def cmp(a, b):
            count[0] += 1
            ka, kb = _endpoint_key(a), _endpoint_key(b)
            return (ka > kb) - (ka < kb)

        endpoints.sort(key=cmp_to_key(cmp))
        stats["comparisons"] = count[0]
        stats["sweep_steps"] = len(endpoints)

    current: set = set()
    cliques = []
    previous_left = False
    for _, side, node in endpoints:
        if side == LEFT:
            current.add(node)
            previous_left = True
        else:
            if previous_left:
                cliques.append(tuple(sorted(current)))
            current.discard(node)
            previous_left = False
    return cliques


@dataclass
class OfferConflictGraph:
    """Conflict structure over offer indices of one instance.

    ``resource_offers[r]`` and ``resource_cliques[r]`` are indexed like
    ``instance.resources``; a resource is a vehicle or a vehicle class.
    """

    instance: Instance
    demand_cliques: list[tuple[int, ...]]
    resource_offers: list[tuple[int, ...]]
    resource_cliques: list[list[tuple[int, ...]]]
    vehicle_edges: list[tuple[int, int]]
    vehicle_adj: list[list[int]]

    @property
    def num_edges(self) -> int:
        demand_edges = sum(len(c) * (len(c) - 1) // 2 for c in self.demand_cliques)
        return demand_edges + len(self.vehicle_edges)

    @property
    def vehicle_max_cliques(self) -> dict[tuple[str, str], list[tuple[int, ...]]]:
        return dict(zip(self.instance.resources, self.resource_cliques))

    def neighbors(self, o: int):
        d = self.instance.offer_demand[o]
        for p in self.demand_cliques[d]:
            if p != o:
                yield p
        yield from self.vehicle_adj[o]

    def edge_set(self) -> set[tuple[int, int]]:
        edges = set(self.vehicle_edges)
        for c in self.demand_cliques:
            for i, a in enumerate(c):
                for b in c[i + 1:]:
                    edges.add((a, b))
        return edges


def build_offer_conflict_graph(instance: Instance) -> OfferConflictGraph:
    n = instance.num_offers
    per_resource: list[list[int]] = [[] for _ in instance.resources]
    for o in range(n):
        r = instance.offer_resource[o]
        if r >= 0:
            per_resource[r].append(o)

    start, end = instance.start, instance.end
    cliques = []
    edges = []
    adj: list[list[int]] = [[] for _ in range(n)]
    for offers in per_resource:
        cliques.append(max_cliques_interval((o, int(start[o]), int(end[o])) for o in offers))
        # active-set sweep: each new interval meets every interval still open
        order = sorted(offers, key=lambda o: (int(start[o]), o))
        active: list[int] = []
        for o in order:
            s = start[o]
            active = [a for a in active if end[a] > s]
            for a in active:
                edges.append((a, o) if a < o else (o, a))
                adj[a].append(o)
                adj[o].append(a)
            active.append(o)
    for lst in adj:
        lst.sort()
    edges.sort()
    return OfferConflictGraph(
        instance=instance,
        demand_cliques=[d.offers for d in instance.demands],
        resource_offers=[tuple(lst) for lst in per_resource],
        resource_cliques=cliques,
        vehicle_edges=edges,
        vehicle_adj=adj,
    )


@dataclass
class DemandConflictGraph:
    num_demands: int
    edges: list[tuple[int, int]]
    adj: list[list[int]]

    def edge_ids(self, instance: Instance) -> set[frozenset[str]]:
        return {frozenset((instance.demands[a].id, instance.demands[b].id)) for a, b in self.edges}

    def components(self) -> list[list[int]]:
        seen = [False] * self.num_demands
        comps = []
        for s in range(self.num_demands):
            if seen[s]:
                continue
            seen[s] = True
            comp, queue = [], deque([s])
            while queue:
                u = queue.popleft()
                comp.append(u)
                for w in self.adj[u]:
                    if not seen[w]:
                        seen[w] = True
                        queue.append(w)
            comps.append(comp)
        return comps


def build_demand_conflict_graph(g: OfferConflictGraph) -> DemandConflictGraph:
    """Quotient of the offer conflict graph under the demand partition."""
    owner = g.instance.offer_demand
    pairs = set()
    for a, b in g.vehicle_edges:
        da, db = int(owner[a]), int(owner[b])
        if da != db:
            pairs.add((da, db) if da < db else (db, da))
    n = g.instance.num_demands
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    for lst in adj:
        lst.sort()
    return DemandConflictGraph(n, sorted(pairs), adj)


def to_dot(g: OfferConflictGraph, dg: DemandConflictGraph | None = None) -> str:
    """Graphviz text: dashed same-demand edges, solid vehicle edges."""
    inst = g.instance
    lines = ["graph conflicts {", "  node [shape=circle];"]
    for d, offers in enumerate(g.demand_cliques):
        lines.append(f'  subgraph "cluster_{inst.demands[d].id}" {{')
        lines.append(f'    label="{inst.demands[d].id}";')
        for o in offers:
            lines.append(f'    "{inst.offers[o].id}";')
        for i, a in enumerate(offers):
            for b in offers[i + 1:]:
                lines.append(f'    "{inst.offers[a].id}" -- "{inst.offers[b].id}" [style=dashed];')
        lines.append("  }")
    for a, b in g.vehicle_edges:
        lines.append(f'  "{inst.offers[a].id}" -- "{inst.offers[b].id}";')
    if dg is not None:
        for a, b in dg.edges:
            lines.append(f'  // demand edge {inst.demands[a].id} -- {inst.demands[b].id}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def clique_ids(instance: Instance, cliques) -> list[tuple[str, ...]]:
    """Translate index cliques to sorted offer-id tuples (for tests and dumps)."""
    return [tuple(sorted((instance.offers[o].id for o in c), key=natural_key)) for c in cliques]
