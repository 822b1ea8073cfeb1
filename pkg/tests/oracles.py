"""Brute-force reference computations, independent of the solver code paths."""

from __future__ import annotations

import itertools
import math

import numpy as np

from moap.core import Instance, Offer


def sample_raw(costs=None):
    """The two-vehicle, three-demand example with interval endpoints scaled to ticks."""
    costs = costs or {"A1": 5, "A2": 6, "A3": 2, "A4": 10, "B1": 3, "B2": 8,
                      "C1": 4, "C2": 1, "C3": 9}
    spec = {
        "A": [("A1", 125, 325, "V1"), ("A2", 700, 900, "V1"), ("A3", 100, 350, "V2"),
              ("A4", 100, 350, None)],
        "B": [("B1", 650, 950, "V2"), ("B2", 700, 1000, None)],
        "C": [("C1", 350, 750, "V1"), ("C2", 275, 825, "V2"), ("C3", 250, 850, None)],
    }
    return {
        "meta": {"time_unit": "tick", "name": "sample"},
        "vehicles": [{"id": "V1"}, {"id": "V2"}],
        "demands": [
            {"id": d, "offers": [{"id": o, "start": s, "end": e, "cost": costs[o], "vehicle": v}
                                 for o, s, e, v in offers]}
            for d, offers in spec.items()
        ],
    }


def overlap(a: Offer, b: Offer) -> bool:
    return a.start < b.end and b.start < a.end


def pairwise_vehicle_edges(instance: Instance) -> set[tuple[int, int]]:
    out = set()
    offers = instance.offers
    for i in range(len(offers)):
        for j in range(i + 1, len(offers)):
            a, b = offers[i], offers[j]
            if a.resource is not None and a.resource == b.resource and overlap(a, b):
                out.add((i, j))
    return out


def pairwise_demand_edges(instance: Instance) -> set[tuple[int, int]]:
    out = set()
    for d in range(instance.num_demands):
        for h in range(d + 1, instance.num_demands):
            hit = any(
                instance.offers[a].resource is not None
                and instance.offers[a].resource == instance.offers[b].resource
                and overlap(instance.offers[a], instance.offers[b])
                for a in instance.demands[d].offers for b in instance.demands[h].offers)
            if hit:
                out.add((d, h))
    return out


def feasible_selection(instance: Instance, chosen) -> bool:
    offers = [instance.offers[o] for o in chosen]
    for a, b in itertools.combinations(offers, 2):
        if a.vehicle is not None and a.vehicle == b.vehicle and overlap(a, b):
            return False
    if instance.classes:
        for cls in set(o.vehicle_class for o in offers if o.vehicle_class):
            members = [o for o in offers if o.vehicle_class == cls]
            cap = sum(1 for v in instance.vehicles if instance.classes[v] == cls)
            for t in {o.start for o in members}:
                if sum(1 for o in members if o.start <= t < o.end) > cap:
                    return False
    return True


def exhaustive_optimum(instance: Instance):
    """Optimal cost and selection by enumerating every combination (inf, None if infeasible)."""
    best, best_sel = math.inf, None
    choices = [d.offers for d in instance.demands]
    for combo in itertools.product(*choices):
        cost = sum(instance.offers[o].cost for o in combo)
        if cost < best - 1e-12 and feasible_selection(instance, combo):
            best, best_sel = cost, combo
    return best, best_sel


def search_optimum(instance: Instance):
    """Same answer as :func:`exhaustive_optimum`, enumerating only conflict-free prefixes."""
    demands = [list(d.offers) for d in instance.demands]
    best = [math.inf, None]

    def rec(d, chosen, cost):
        if cost >= best[0] - 1e-12:
            return
        if d == len(demands):
            best[0], best[1] = cost, tuple(chosen)
            return
        for o in demands[d]:
            chosen.append(o)
            if feasible_selection(instance, chosen):
                rec(d + 1, chosen, cost + instance.offers[o].cost)
            chosen.pop()

    rec(0, [], 0.0)
    return best[0], best[1]


def maximal_cliques_bruteforce(n: int, edges) -> set[frozenset[int]]:
    """All maximal cliques by a subset DP over bitmasks (n <= ~16)."""
    nbr = [0] * n
    for a, b in edges:
        nbr[a] |= 1 << b
        nbr[b] |= 1 << a
    size = 1 << n
    is_clique = bytearray(size)
    common = [0] * size
    is_clique[0] = 1
    common[0] = (1 << n) - 1
    out = set()
    for mask in range(1, size):
        low = mask & -mask
        v = low.bit_length() - 1
        rest = mask ^ low
        if is_clique[rest] and (nbr[v] & rest) == rest:
            is_clique[mask] = 1
            common[mask] = common[rest] & nbr[v]
            if common[mask] & ~mask == 0:
                out.add(frozenset(i for i in range(n) if mask >> i & 1))
    return out


def random_instance(rng: np.random.Generator, n_demands: int, max_offers: int = 4,
                    n_vehicles: int = 3, horizon: int = 20, taxi: bool = True,
                    same_vehicle_alternatives: bool = True, max_len: int = 8) -> Instance:
    """Small random instance; optionally a taxi offer per demand and repeated vehicles per demand."""
    offers = []
    vehicles = [f"v{k}" for k in range(n_vehicles)]
    for d in range(n_demands):
        k = int(rng.integers(1, max_offers + 1))
        used = set()
        for j in range(k):
            if taxi and j == k - 1:
                vehicle = None
            else:
                choices = [v for v in vehicles if same_vehicle_alternatives or v not in used]
                if not choices:
                    vehicle = None
                else:
                    vehicle = choices[int(rng.integers(len(choices)))]
                    used.add(vehicle)
            s = int(rng.integers(0, horizon))
            e = s + int(rng.integers(1, max_len + 1))
            cost = float(rng.integers(1, 20)) if vehicle else float(rng.integers(15, 40))
            offers.append(Offer(f"d{d}_o{j}", f"d{d}", s, e, cost, vehicle))
    return Instance.from_offers(offers, vehicles, meta={"time_unit": "tick"})


def isma_feasible(machines, jobs) -> bool:
    """Backtracking check whether all jobs fit on machines (half-open intervals)."""
    order = sorted(range(len(jobs)), key=lambda j: jobs[j][0])
    placed = [[] for _ in machines]

    def rec(k):
        if k == len(order):
            return True
        s, f = jobs[order[k]]
        for m, (a, b) in enumerate(machines):
            if a <= s and f <= b and all(f <= s2 or f2 <= s for s2, f2 in placed[m]):
                placed[m].append((s, f))
                if rec(k + 1):
                    return True
                placed[m].pop()
        return False

    return rec(0)
