"""Company-fleet instances built from synthetic employee work weeks.

Each employee gets a week of events (work, meetings, private activities,
home).  A demand is a tour that leaves the office after one work event and
returns before the next one; every transport mode the employee accepts
yields one offer.  Vehicles of one limited mode are interchangeable, so
those offers name the mode as a vehicle class.

The city is synthetic: 250 points on a sunflower spiral of radius 10 km,
with office and home location weights decaying with distance from the
centre.  All times are minutes from Monday 00:00.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..core import Instance, Offer

SALARY_PER_MIN = 0.6  # employer cost of one working minute, EUR
CO2_EUR_PER_G = 5.0 / 1e6  # 5 EUR per ton
REBATE = 0.8
WORK_DAYS = 5
NUM_LOCATIONS = 250
CITY_RADIUS_KM = 10.0
OFFICE_DECAY_KM = 2.5
HOME_DECAY_KM = 6.0
NUM_DEPOTS = 2


@dataclass(frozen=True)
class Mode:
    id: str
    limited: bool
    emission: float  # g CO2 per km
    speed: float  # km/h
    cost_per_km: float  # EUR
    setup: int  # seconds
    sloping: float  # road distance / aerial distance


MODES = (
    Mode("foot", False, 0.0, 5.0, 0.0, 0, 1.3),
    Mode("pt", False, 40.0, 20.0, 0.10, 300, 1.5),
    Mode("taxi", False, 150.0, 30.0, 1.40, 300, 1.4),
    Mode("bike", True, 0.0, 16.0, 0.05, 120, 1.3),
    Mode("bev_smart", True, 0.0, 30.0, 0.32, 600, 1.4),
    Mode("bev_leaf", True, 0.0, 30.0, 0.36, 600, 1.4),
    Mode("bev_imiev", True, 0.0, 30.0, 0.30, 600, 1.4),
    Mode("icev_small", True, 120.0, 30.0, 0.38, 600, 1.4),
    Mode("icev_large", True, 170.0, 30.0, 0.52, 600, 1.4),
)
MODE = {m.id: m for m in MODES}
LIMITED = tuple(m.id for m in MODES if m.limited)
BEV = ("bev_smart", "bev_leaf", "bev_imiev")
ICEV = ("icev_small", "icev_large")

# accepted-mode combinations, each with its acceptance scenarios
COMBINATIONS = {
    "foot_only": [("foot",)],
    "pt_only": [("pt", "foot")],
    "bike_pt": [("bike", "pt", "foot")],
    "car_only": [BEV + ICEV + ("taxi",), ICEV + ("taxi",), BEV + ("taxi",)],
    "green": [("bike",) + BEV + ("pt", "foot")],
    "car_pt": [ICEV + ("pt",), BEV + ("pt",)],
    "all": [tuple(m.id for m in MODES)],
}
COMBINATION_P_LICENSE = {"foot_only": .03, "pt_only": .15, "bike_pt": .12, "car_only": .15,
                         "green": .15, "car_pt": .20, "all": .20}
COMBINATION_P_NO_LICENSE = {"foot_only": .15, "pt_only": .50, "bike_pt": .35}
LICENSE_P = {"f": 0.80, "m": 0.90}

FEMALE_P = 0.4678
HIERARCHY_P = {"b": 0.01, "m": 0.10, "w": 0.89}
# daily working hours (min, max), drawn in half hours
WORK_HOURS = {("b", "f"): (9, 11), ("b", "m"): (9, 11), ("m", "f"): (8, 10), ("m", "m"): (8, 10),
              ("w", "f"): (6, 9), ("w", "m"): (7, 9)}
# probability of a meeting day and the meeting minutes aimed for on such a day
MEETING_DAY_P = {"b": 0.9, "m": 0.6, "w": 0.1}
MEETING_MINUTES = {"b": 240, "m": 120, "w": 60}
MEETING_DURATIONS = tuple(range(30, 181, 15))
MEETING_GAP = 60  # minutes kept free around a meeting for getting there and back
MORNING_PRIVATE_P = 0.20
EVENING_PRIVATE_P = 0.65
HOME_GAP = 45


@dataclass(frozen=True)
class RwParams:
    employees: int = 500
    nu: float = 0.05
    seed: int = 0
    modes: tuple = field(default=MODES, repr=False)

    def __post_init__(self):
        if self.employees < 1:
            raise ValueError("employees must be positive")
        if not 0 <= self.nu <= 1:
            raise ValueError("nu must lie in [0, 1]")


@dataclass
class Event:
    alpha: int  # latest arrival, minutes
    beta: int  # earliest departure
    loc: int
    kind: str  # "w", "m", "p", "h"


def locations(n: int = NUM_LOCATIONS, radius: float = CITY_RADIUS_KM) -> np.ndarray:
    i = np.arange(n)
    r = radius * np.sqrt((i + 0.5) / n)
    theta = i * math.pi * (3 - math.sqrt(5))
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _weights(points: np.ndarray, decay: float) -> np.ndarray:
    w = np.exp(-np.hypot(points[:, 0], points[:, 1]) / decay)
    return w / w.sum()


def gamma(kind_from: str, kind_to: str) -> int:
    """1 on legs between a work event and a meeting (either direction), else 0."""
    return int({kind_from, kind_to} == {"w", "m"})


def _round15(x: float) -> int:
    return int(round(x / 15.0)) * 15


def _employee_week(rng: np.random.Generator, office: int, p_home, p_office):
    """Draw one employee's attributes and their ordered event list for the week."""
    gender = "f" if rng.random() < FEMALE_P else "m"
    hierarchy = str(rng.choice(list(HIERARCHY_P), p=list(HIERARCHY_P.values())))
    home = int(rng.choice(len(p_home), p=p_home))
    tau_s = _round15(rng.triangular(300, 480, 660))
    lo, hi = WORK_HOURS[hierarchy, gender]
    tau_e = tau_s + 30 * int(rng.integers(2 * lo, 2 * hi + 1))

    if rng.random() < LICENSE_P[gender]:
        probs = COMBINATION_P_LICENSE
    else:
        probs = COMBINATION_P_NO_LICENSE
    combo = str(rng.choice(list(probs), p=list(probs.values())))
    scenarios = COMBINATIONS[combo]
    accepted = scenarios[int(rng.integers(len(scenarios)))]

    events: list[Event] = []
    for day in range(WORK_DAYS):
        base = day * 1440
        start, end = base + tau_s, base + tau_e
        if day > 0:
            # home overnight, after any evening activity of the previous day
            home_alpha = events[-1].beta + HOME_GAP
            events.append(Event(home_alpha, home_alpha, home, "h"))
        if rng.random() < MORNING_PRIVATE_P:
            alpha = start - 120
            events.append(Event(alpha, alpha + 60, int(rng.choice(len(p_home), p=p_home)), "p"))
        events.append(Event(start, start, office, "w"))

        meetings = []
        if rng.random() < MEETING_DAY_P[hierarchy]:
            spent, attempts = 0, 0
            while spent < MEETING_MINUTES[hierarchy] and attempts < 25:
                attempts += 1
                s = int(rng.choice(MEETING_DURATIONS))
                first, last = start + MEETING_GAP, end - MEETING_GAP - s
                if last < first:
                    continue
                alpha = first + 15 * int(rng.integers((last - first) // 15 + 1))
                if any(alpha - MEETING_GAP < b and a < alpha + s + MEETING_GAP for a, b in meetings):
                    continue
                meetings.append((alpha, alpha + s))
                spent += s
        meetings.sort()
        for k, (a, b) in enumerate(meetings):
            events.append(Event(a, b, int(rng.choice(len(p_office), p=p_office)), "m"))
            back = (b + meetings[k + 1][0]) // 2 if k + 1 < len(meetings) else end
            events.append(Event(back, back, office, "w"))
        if not meetings:
            events.append(Event(end, end, office, "w"))
        if rng.random() < EVENING_PRIVATE_P:
            alpha = end + _round15(rng.integers(60, 181))
            events.append(Event(alpha, alpha + 120, int(rng.choice(len(p_home), p=p_home)), "p"))

    # home events last until shortly before the next morning's first event
    for k, e in enumerate(events):
        if e.kind == "h":
            e.beta = max(e.alpha, events[k + 1].alpha - HOME_GAP)
    attrs = {"gender": gender, "hierarchy": hierarchy, "home": home, "office": office,
             "work_start": tau_s, "work_end": tau_e, "combination": combo, "accepted": list(accepted)}
    return attrs, events


def tours(events: list[Event]):
    """Slices ``events[j:q+1]`` between consecutive work events with something in between."""
    work = [i for i, e in enumerate(events) if e.kind == "w"]
    return [events[j:q + 1] for j, q in zip(work, work[1:]) if q > j + 1]


def leg(points, mode: Mode, i: int, j: int):
    """Road distance (km), travel time (min) and cost (EUR) of one leg."""
    d = float(np.hypot(*(points[i] - points[j]))) * mode.sloping
    t = 60.0 * d / mode.speed
    c = mode.cost_per_km * d + SALARY_PER_MIN * t + mode.emission * d * CO2_EUR_PER_G
    return d, t, c


def tour_offer(points, mode: Mode, tour: list[Event]):
    """Absence interval (whole minutes) and cost of doing ``tour`` with ``mode``."""
    office = tour[0].loc
    half_setup = mode.setup / 120.0
    _, t_out, _ = leg(points, mode, office, tour[1].loc)
    _, t_back, _ = leg(points, mode, tour[-2].loc, office)
    a = math.floor(tour[1].alpha - t_out - half_setup)
    b = math.ceil(tour[-2].beta + t_back + half_setup)
    cost = mode.setup / 60.0 * SALARY_PER_MIN
    for e, f in zip(tour, tour[1:]):
        _, t, c = leg(points, mode, e.loc, f.loc)
        cost += c - REBATE * t * SALARY_PER_MIN * (1 - gamma(e.kind, f.kind))
    return a, max(b, a + 1), round(cost, 2)


def generate_rw(params: RwParams) -> Instance:
    root = np.random.SeedSequence(params.seed)
    company = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(0,)))
    points = locations()
    p_office = _weights(points, OFFICE_DECAY_KM)
    p_home = _weights(points, HOME_DECAY_KM)
    depots = [int(x) for x in company.choice(len(points), size=NUM_DEPOTS, replace=False, p=p_office)]
    modes = {m.id: m for m in params.modes}
    cap = math.floor(params.nu * params.employees)
    fleet = {m.id: int(company.integers(0, cap + 1)) for m in params.modes if m.limited}

    vehicles, classes = [], {}
    for mid, n in fleet.items():
        for k in range(n):
            vid = f"{mid}_{k + 1:03d}"
            vehicles.append(vid)
            classes[vid] = mid

    offers = []
    demand_ids = []
    employees_meta = []
    width = max(4, len(str(params.employees)))
    for p in range(params.employees):
        rng = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(1, p)))
        office = depots[int(rng.integers(len(depots)))]
        attrs, events = _employee_week(rng, office, p_home, p_office)
        employees_meta.append(attrs)
        for i, tour in enumerate(tours(events)):
            did = f"p{p:0{width}d}_t{i:02d}"
            demand_ids.append(did)
            for mid in attrs["accepted"]:
                mode = modes[mid]
                if mode.limited and fleet.get(mid, 0) == 0:
                    continue
                a, b, cost = tour_offer(points, mode, tour)
                offers.append(Offer(f"{did}_{mid}", did, a, b, cost,
                                    vehicle_class=mid if mode.limited else None))

    meta = {
        "generator": "rw",
        "params": {"employees": params.employees, "nu": params.nu, "seed": params.seed},
        "time_unit": "minute",
        "fleet": fleet,
        "depots": depots,
        "employees": employees_meta,
        "modes": [asdict(m) for m in params.modes],
        "synthetic": {
            "locations": f"{NUM_LOCATIONS} spiral points within {CITY_RADIUS_KM} km",
            "office_weight": f"exp(-r/{OFFICE_DECAY_KM})",
            "home_weight": f"exp(-r/{HOME_DECAY_KM})",
            "work_start": "triangular 5:00-11:00, mode 8:00, 15 min grid",
            "meeting_minutes": "uniform on 30..180 step 15",
            "salary_per_min": SALARY_PER_MIN,
        },
    }
    return Instance.from_offers(offers, vehicles, classes or None, meta, demand_ids)


def expanded_offer_count(instance: Instance) -> int:
    """Number of offers the instance has once every class offer is split per vehicle."""
    return sum(instance.class_size.get(o.vehicle_class, 0) if o.vehicle_class else 1
               for o in instance.offers)
