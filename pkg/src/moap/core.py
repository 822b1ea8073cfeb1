"""Domain types, validation, JSON formats and objective evaluation.

Times are integer ticks in the unit declared by ``meta["time_unit"]``
(hours for AG instances, minutes for RW instances).  Absence intervals
are half-open, so ``[a, b)`` and ``[b, c)`` never conflict.
"""

from __future__ import annotations

import json
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

UNASSIGNED = -1
REL_TOL = 1e-9


def natural_key(text: str):
    """Sort key that orders ``d2`` before ``d10``."""
    parts = re.split(r"(\d+)", text)
    return tuple(int(p) if i % 2 else p for i, p in enumerate(parts))


@dataclass(frozen=True, slots=True)
class TimeInterval:
    start: int
    end: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"degenerate interval [{self.start}, {self.end})")

    def duration(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "TimeInterval") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True, slots=True)
class Offer:
    """One way of fulfilling a demand.

    At most one of ``vehicle`` and ``vehicle_class`` is set; when both are
    ``None`` the offer needs no fleet resource (taxi, public transport).
    """

    id: str
    demand: str
    start: int
    end: int
    cost: float
    vehicle: str | None = None
    vehicle_class: str | None = None

    @property
    def interval(self) -> TimeInterval:
        return TimeInterval(self.start, self.end)

    @property
    def duration(self) -> int:
        return self.end - self.start

    @property
    def resource(self) -> tuple[str, str] | None:
        if self.vehicle is not None:
            return ("vehicle", self.vehicle)
        if self.vehicle_class is not None:
            return ("class", self.vehicle_class)
        return None


@dataclass(frozen=True, slots=True)
class Demand:
    id: str
    offers: tuple[int, ...]  # indices into Instance.offers


class ValidationError(ValueError):
    """Raised by :func:`validate_instance`; ``errors`` holds ``(kind, id, message)`` triples."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{kind} ({ident}): {msg}" for kind, ident, msg in self.errors))

    @property
    def kinds(self) -> set[str]:
        return {kind for kind, _, _ in self.errors}


@dataclass(frozen=True, eq=False)
class Instance:
    """A validated, canonically ordered problem instance.

    Use :meth:`from_offers` or :func:`validate_instance` to construct one.
    Demands are sorted by id and offers by ``(demand id, offer id)``, so an
    offer's position in ``offers`` is a stable index used by all solvers.
    """

    demands: tuple[Demand, ...]
    offers: tuple[Offer, ...]
    vehicles: tuple[str, ...]
    classes: Mapping[str, str] | None = None
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.offers)
        demand_index = {d.id: i for i, d in enumerate(self.demands)}
        offer_demand = np.empty(n, dtype=np.int64)
        for i, d in enumerate(self.demands):
            for o in d.offers:
                offer_demand[o] = i
        start = np.fromiter((o.start for o in self.offers), dtype=np.int64, count=n)
        end = np.fromiter((o.end for o in self.offers), dtype=np.int64, count=n)
        cost = np.fromiter((o.cost for o in self.offers), dtype=np.float64, count=n)

        resources: list[tuple[str, str]] = []
        resource_index: dict[tuple[str, str], int] = {}
        offer_resource = np.full(n, -1, dtype=np.int64)
        for i, o in enumerate(self.offers):
            key = o.resource
            if key is None:
                continue
            r = resource_index.get(key)
            if r is None:
                r = resource_index[key] = len(resources)
                resources.append(key)
            offer_resource[i] = r
        class_size: dict[str, int] = defaultdict(int)
        for v in self.vehicles:
            if self.classes and v in self.classes:
                class_size[self.classes[v]] += 1
        capacity = [1 if kind == "vehicle" else class_size[name] for kind, name in resources]

        set_ = object.__setattr__
        set_(self, "demand_index", demand_index)
        set_(self, "offer_index", {o.id: i for i, o in enumerate(self.offers)})
        set_(self, "offer_demand", offer_demand)
        set_(self, "start", start)
        set_(self, "end", end)
        set_(self, "cost", cost)
        set_(self, "resources", tuple(resources))
        set_(self, "resource_index", resource_index)
        set_(self, "offer_resource", offer_resource)
        set_(self, "capacity", tuple(capacity))
        set_(self, "class_size", dict(class_size))

    @property
    def num_demands(self) -> int:
        return len(self.demands)

    @property
    def num_offers(self) -> int:
        return len(self.offers)

    @property
    def time_unit(self) -> str:
        return self.meta.get("time_unit", "tick")

    @property
    def has_class_offers(self) -> bool:
        return any(kind == "class" for kind, _ in self.resources)

    def vehicles_of_class(self, cls: str) -> list[str]:
        return [v for v in self.vehicles if self.classes and self.classes.get(v) == cls]

    @classmethod
    def from_offers(cls, offers: Iterable[Offer], vehicles: Sequence[str] = (),
                    classes: Mapping[str, str] | None = None, meta: Mapping | None = None,
                    demand_ids: Iterable[str] = ()) -> "Instance":
        """Build a canonical instance from a flat offer list.

        ``demand_ids`` lists demands that must exist even without offers, so
        empty demands are reported rather than silently dropped.
        """
        offers = list(offers)
        errors = []
        vehicles = tuple(vehicles)
        vset = set(vehicles)
        if len(vset) != len(vehicles):
            errors.append(("duplicate id", "vehicles", "vehicle ids must be distinct"))
        if classes is not None:
            classes = dict(classes)
            for v in vehicles:
                if v not in classes:
                    errors.append(("dangling reference", v, "vehicle has no class"))
            for v in classes:
                if v not in vset:
                    errors.append(("dangling reference", v, "class map names unknown vehicle"))
        class_names = set(classes.values()) if classes else set()

        by_demand: dict[str, list[Offer]] = {d: [] for d in demand_ids}
        seen = set()
        for o in offers:
            if o.id in seen:
                errors.append(("duplicate id", o.id, "offer id used twice"))
            seen.add(o.id)
            if not o.start < o.end:
                errors.append(("degenerate interval", o.id, f"[{o.start}, {o.end}) is empty"))
            if not math.isfinite(o.cost):
                errors.append(("bad value", o.id, "cost must be finite"))
            elif o.cost < 0:
                errors.append(("negative cost", o.id, f"cost {o.cost} < 0"))
            if o.vehicle is not None and o.vehicle_class is not None:
                errors.append(("bad value", o.id, "offer names both a vehicle and a class"))
            if o.vehicle is not None and o.vehicle not in vset:
                errors.append(("dangling reference", o.id, f"unknown vehicle {o.vehicle!r}"))
            if o.vehicle_class is not None and o.vehicle_class not in class_names:
                errors.append(("dangling reference", o.id, f"unknown class {o.vehicle_class!r}"))
            by_demand.setdefault(o.demand, []).append(o)
        for d, lst in by_demand.items():
            if not lst:
                errors.append(("empty demand", d, "demand lists no offers"))
        if errors:
            raise ValidationError(errors)

        ordered: list[Offer] = []
        demands = []
        for d in sorted(by_demand, key=natural_key):
            lst = sorted(by_demand[d], key=lambda o: natural_key(o.id))
            first = len(ordered)
            ordered.extend(lst)
            demands.append(Demand(d, tuple(range(first, len(ordered)))))
        return cls(tuple(demands), tuple(ordered), vehicles, classes, dict(meta or {}))


# ---------------------------------------------------------------------------
# JSON instance format


def _as_tick(value, ident, name, errors):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(("bad value", ident, f"{name} must be a number"))
        return None
    if isinstance(value, float):
        if not value.is_integer():
            errors.append(("bad value", ident, f"{name}={value} is not an integer tick"))
            return None
        value = int(value)
    return value


def validate_instance(raw: Mapping) -> Instance:
    """Turn decoded instance JSON into an :class:`Instance`.

    Raises :class:`ValidationError` listing every problem found.
    """
    errors = []
    meta = dict(raw.get("meta") or {})
    vehicles, classes = [], {}
    for v in raw.get("vehicles", []):
        if isinstance(v, str):
            vehicles.append(v)
            continue
        vehicles.append(str(v["id"]))
        if v.get("class") is not None:
            classes[str(v["id"])] = str(v["class"])
    if classes and len(classes) != len(vehicles):
        missing = [v for v in vehicles if v not in classes]
        errors.append(("dangling reference", missing[0], "class map must cover every vehicle"))

    offers, demand_ids = [], []
    for d in raw.get("demands", []):
        did = str(d["id"])
        demand_ids.append(did)
        for o in d.get("offers", []):
            oid = str(o["id"])
            start = _as_tick(o.get("start"), oid, "start", errors)
            end = _as_tick(o.get("end"), oid, "end", errors)
            cost = o.get("cost")
            if isinstance(cost, bool) or not isinstance(cost, (int, float)):
                errors.append(("bad value", oid, "cost must be a number"))
                continue
            if start is None or end is None:
                continue
            vehicle = o.get("vehicle")
            vclass = o.get("class")
            offers.append(Offer(oid, did, start, end, float(cost),
                                None if vehicle is None else str(vehicle),
                                None if vclass is None else str(vclass)))
    if len(set(demand_ids)) != len(demand_ids):
        errors.append(("duplicate id", "demands", "demand ids must be distinct"))
    if errors:
        raise ValidationError(errors)
    return Instance.from_offers(offers, vehicles, classes or None, meta, demand_ids)


def _num(x) -> str:
    if isinstance(x, float) and x.is_integer() and abs(x) < 1e15:
        return repr(float(x))
    return json.dumps(x)


def instance_to_dict(instance: Instance) -> dict:
    vehicles = []
    for v in instance.vehicles:
        entry = {"id": v}
        if instance.classes:
            entry["class"] = instance.classes[v]
        vehicles.append(entry)
    demands = []
    for d in instance.demands:
        offers = []
        for i in d.offers:
            o = instance.offers[i]
            entry = {"id": o.id, "start": o.start, "end": o.end, "cost": o.cost}
            if o.vehicle_class is not None:
                entry["class"] = o.vehicle_class
            else:
                entry["vehicle"] = o.vehicle
            offers.append(entry)
        demands.append({"id": d.id, "offers": offers})
    return {"meta": dict(instance.meta), "vehicles": vehicles, "demands": demands}


def dumps_instance(instance: Instance) -> str:
    """Canonical text: one vehicle or offer per line, fixed key order."""
    meta = json.dumps(dict(instance.meta), sort_keys=True)
    lines = ["{", f'  "meta": {meta},', '  "vehicles": [']
    vrows = []
    for v in instance.vehicles:
        if instance.classes:
            vrows.append(f'    {{"id": {json.dumps(v)}, "class": {json.dumps(instance.classes[v])}}}')
        else:
            vrows.append(f'    {{"id": {json.dumps(v)}}}')
    lines.append(",\n".join(vrows))
    lines.append("  ],")
    lines.append('  "demands": [')
    drows = []
    for d in instance.demands:
        orows = []
        for i in d.offers:
            o = instance.offers[i]
            if o.vehicle_class is not None:
                res = f'"class": {json.dumps(o.vehicle_class)}'
            else:
                res = f'"vehicle": {json.dumps(o.vehicle)}'
            orows.append(f'      {{"id": {json.dumps(o.id)}, "start": {o.start}, "end": {o.end}, '
                         f'"cost": {_num(o.cost)}, {res}}}')
        drows.append(f'    {{"id": {json.dumps(d.id)}, "offers": [\n' + ",\n".join(orows) + "]}")
    lines.append(",\n".join(drows))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(line for line in lines if line) + "\n"


def read_instance(path) -> Instance:
    with open(path) as fh:
        return validate_instance(json.load(fh))


def write_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_instance(instance))


# ---------------------------------------------------------------------------
# Solutions and evaluation


@dataclass(frozen=True)
class Violation:
    kind: str  # "overlap", "capacity", "foreign", "missing"
    items: tuple[str, ...]
    resource: str | None = None


@dataclass(frozen=True)
class Evaluation:
    objective: float
    feasible: bool
    violations: tuple[Violation, ...]

    def overlap_pairs(self) -> set[frozenset[str]]:
        return {frozenset(v.items) for v in self.violations if v.kind == "overlap"}


def _selection_indices(instance: Instance, selection) -> list[int]:
    if isinstance(selection, Mapping):
        out = [UNASSIGNED] * instance.num_demands
        for d, o in selection.items():
            di = instance.demand_index[d]
            out[di] = UNASSIGNED if o is None else instance.offer_index[o]
        return out
    return [int(o) for o in selection]


def _overlapping_pairs(items):
    """All overlapping pairs among ``(start, end, idx)`` triples, by sweep."""
    items = sorted(items)
    active: list[tuple[int, int]] = []
    pairs = []
    for s, e, i in items:
        active = [(ae, ai) for ae, ai in active if ae > s]
        pairs.extend((ai, i) for _, ai in active)
        active.append((e, i))
    return pairs


def evaluate(instance: Instance, selection, vehicle_assignment: Mapping | None = None) -> Evaluation:
    """Objective and feasibility of a selection.

    ``selection`` is either a mapping demand id -> offer id or a sequence of
    offer indices in demand order (``-1`` for unassigned).  Class offers are
    checked against class capacity unless ``vehicle_assignment`` (offer id or
    index -> vehicle id) lifts them to concrete vehicles.
    """
    idx = _selection_indices(instance, selection)
    violations = []
    objective = 0.0
    chosen = []
    for d, o in enumerate(idx):
        did = instance.demands[d].id
        if o == UNASSIGNED:
            violations.append(Violation("missing", (did,)))
            continue
        if instance.offer_demand[o] != d:
            violations.append(Violation("foreign", (did, instance.offers[o].id)))
        objective += float(instance.cost[o])
        chosen.append(o)

    assign = {}
    if vehicle_assignment:
        for k, v in vehicle_assignment.items():
            assign[k if isinstance(k, (int, np.integer)) else instance.offer_index[k]] = v

    per_vehicle = defaultdict(list)
    per_class = defaultdict(list)
    for o in chosen:
        offer = instance.offers[o]
        if offer.vehicle is not None:
            per_vehicle[offer.vehicle].append(o)
        elif offer.vehicle_class is not None:
            if o in assign:
                v = assign[o]
                if not instance.classes or instance.classes.get(v) != offer.vehicle_class:
                    violations.append(Violation("foreign", (offer.id, v), offer.vehicle_class))
                per_vehicle[v].append(o)
            else:
                per_class[offer.vehicle_class].append(o)

    for v in sorted(per_vehicle, key=natural_key):
        trip = [(int(instance.start[o]), int(instance.end[o]), o) for o in per_vehicle[v]]
        for a, b in _overlapping_pairs(trip):
            violations.append(Violation("overlap", (instance.offers[a].id, instance.offers[b].id), v))
    for c in sorted(per_class, key=natural_key):
        cap = instance.class_size.get(c, 0)
        events = []
        for o in per_class[c]:
            events.append((int(instance.start[o]), 1, o))
            events.append((int(instance.end[o]), 0, o))
        events.sort()
        active = set()
        for _, kind, o in events:
            if kind == 0:
                active.discard(o)
                continue
            active.add(o)
            if len(active) > cap:
                items = tuple(instance.offers[a].id for a in sorted(active))
                violations.append(Violation("capacity", items, c))
    return Evaluation(objective, not violations, tuple(violations))


@dataclass(frozen=True)
class Solution:
    """One selected offer index per demand (``-1`` where unassigned)."""

    selection: tuple[int, ...]
    objective: float
    feasible: bool
    vehicle_assignment: Mapping[int, str] | None = None

    @classmethod
    def from_selection(cls, instance: Instance, selection, vehicle_assignment=None) -> "Solution":
        idx = tuple(_selection_indices(instance, selection))
        ev = evaluate(instance, idx, vehicle_assignment)
        return cls(idx, ev.objective, ev.feasible,
                   None if vehicle_assignment is None else dict(vehicle_assignment))

    @property
    def unassigned(self) -> list[int]:
        return [d for d, o in enumerate(self.selection) if o == UNASSIGNED]

    @property
    def complete(self) -> bool:
        return UNASSIGNED not in self.selection

    def selection_ids(self, instance: Instance) -> dict[str, str | None]:
        return {instance.demands[d].id: (None if o == UNASSIGNED else instance.offers[o].id)
                for d, o in enumerate(self.selection)}

    def to_dict(self, instance: Instance, solver: str = "", runtime_ms: float = 0.0,
                seed: int | None = None) -> dict:
        out = {
            "objective": self.objective,
            "selection": self.selection_ids(instance),
            "feasible": self.feasible,
            "solver": solver,
            "runtime_ms": round(runtime_ms, 3),
            "seed": seed,
        }
        if self.vehicle_assignment is not None:
            out["vehicle_assignment"] = {instance.offers[o].id: v
                                         for o, v in sorted(self.vehicle_assignment.items())}
        return out


def solution_from_dict(instance: Instance, raw: Mapping) -> Solution:
    assignment = raw.get("vehicle_assignment")
    if assignment is not None:
        assignment = {instance.offer_index[k]: v for k, v in assignment.items()}
    return Solution.from_selection(instance, raw["selection"], assignment)


def objectives_match(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=REL_TOL)


def lower_bound_per_demand(instance: Instance) -> float:
    """Sum over demands of the cheapest offer cost."""
    return float(sum(instance.cost[list(d.offers)].min() for d in instance.demands))


# ---------------------------------------------------------------------------
# Plain <-> class model transformations


def expand_classes(instance: Instance) -> Instance:
    """Replace every class offer by one offer per vehicle of its class.

    Expanded offer ids are ``<offer id>@<vehicle id>``.
    """
    if not instance.has_class_offers:
        return instance
    members = defaultdict(list)
    for v in instance.vehicles:
        members[instance.classes[v]].append(v)
    offers = []
    for o in instance.offers:
        if o.vehicle_class is None:
            offers.append(o)
            continue
        for v in members[o.vehicle_class]:
            offers.append(Offer(f"{o.id}@{v}", o.demand, o.start, o.end, o.cost, vehicle=v))
    meta = dict(instance.meta, expanded_from_classes=True)
    return Instance.from_offers(offers, instance.vehicles, None, meta,
                                [d.id for d in instance.demands])


def singleton_classes(instance: Instance) -> Instance:
    """Class-model view of a plain instance: one class per vehicle."""
    classes = {v: f"cls_{v}" for v in instance.vehicles}
    offers = [Offer(o.id, o.demand, o.start, o.end, o.cost,
                    vehicle_class=None if o.vehicle is None else classes[o.vehicle])
              for o in instance.offers]
    return Instance.from_offers(offers, instance.vehicles, classes, dict(instance.meta),
                                [d.id for d in instance.demands])
