"""Lift a class-model solution to concrete vehicles by interval-graph coloring."""

from __future__ import annotations

import heapq
from collections import defaultdict

from ..core import UNASSIGNED, Instance, Solution, natural_key


class CapacityExceeded(ValueError):
    pass


def color_intervals(items, colors: int):
    """Assign each ``(key, start, end)`` interval the lowest free color.

    Uses at most as many colors as the maximum number of pairwise
    overlapping intervals; raises :class:`CapacityExceeded` when that
    exceeds ``colors``.
    """
    events = []
    for key, start, end in items:
        events.append((start, 1, key))
        events.append((end, 0, key))
    events.sort(key=lambda e: (e[0], e[1], natural_key(str(e[2]))))
    free = list(range(colors))
    heapq.heapify(free)
    color = {}
    for _, kind, key in events:
        if kind == 0:
            heapq.heappush(free, color[key])
        elif not free:
            raise CapacityExceeded(f"more than {colors} overlapping intervals at {key!r}")
        else:
            color[key] = heapq.heappop(free)
    return color


def assign_vehicles(instance: Instance, class_solution: Solution) -> Solution:
    """Give every selected class offer a vehicle of its class.

    Offers of one class are colored with the class's vehicles in the order
    they are listed on the instance; the number of vehicles used equals the
    largest number of simultaneously selected offers of that class.
    """
    by_class = defaultdict(list)
    for o in class_solution.selection:
        if o == UNASSIGNED:
            continue
        offer = instance.offers[o]
        if offer.vehicle_class is not None:
            by_class[offer.vehicle_class].append(o)
    assignment = {}
    for cls in sorted(by_class, key=natural_key):
        vehicles = instance.vehicles_of_class(cls)
        items = [(o, int(instance.start[o]), int(instance.end[o])) for o in by_class[cls]]
        try:
            colors = color_intervals(items, len(vehicles))
        except CapacityExceeded as exc:
            raise CapacityExceeded(f"capacity exceeded for class {cls!r}: {exc}") from None
        for o, c in colors.items():
            assignment[o] = vehicles[c]
    return Solution.from_selection(instance, class_solution.selection, assignment)
