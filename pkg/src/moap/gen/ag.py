"""Artificial benchmark instances with a mixed four-category fleet.

Times are whole hours over a four-week horizon.  Every demand gets a
no-vehicle fallback offer (taxi), so every instance is feasible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..core import Instance, Offer

HORIZON = 24 * 7 * 4
CATEGORIES = ("small", "medium", "large", "van")
CATEGORY_COST = (2, 3, 4, 7)
CATEGORY_PORTION = (0.15, 0.35, 0.35, 0.15)
SHORT_DURATION = (1, 6)
LONG_MIN_DURATION = 7
RELATIVE_START = (2, 168)
# Alternative dates per accepted vehicle (and per fallback offer), inclusive
# bounds.  Drawing 1..3 overshoots the reference offer counts by about half on
# the large instances; 1..2 lands within about 15% on all sixteen.
INTERVALS_PER_VEHICLE = (1, 2)
COST_PER_TIME = (10, 30)
TAXI_PERCENT = (300, 600)
PT_PROBABILITY = 0.5
PT_PERCENT = (100, 300)

# Share of the expected base duration that one demand keeps a vehicle busy.
# Chosen so the closed-form fleet size reproduces the reference fleet sizes
# for P_a = 0.6, P_l = 0.02 (any value in roughly [0.4435, 0.4507] does).
FLEET_BUSY_SHARE = 0.447

GRID = {
    "num_demands": (200, 1000, 2000, 5000),
    "pu": (0.2, 0.4, 0.6, 0.8),
    "pa": (0.4, 0.6, 0.8),
    "pl": (0.01, 0.02, 0.05),
}


@dataclass(frozen=True)
class AgParams:
    num_demands: int = 200
    pu: float = 0.2
    pa: float = 0.6
    pl: float = 0.02
    seed: int = 0
    horizon: int = HORIZON

    def __post_init__(self):
        if self.num_demands < 1:
            raise ValueError("num_demands must be positive")
        if not 0 < self.pu <= 1:
            raise ValueError("pu must lie in (0, 1]")
        if not 0 <= self.pa <= 1 or not 0 <= self.pl <= 1:
            raise ValueError("pa and pl are probabilities")
        if self.horizon < LONG_MIN_DURATION + RELATIVE_START[1]:
            raise ValueError("horizon too short")


def grid(seed: int = 0, **fixed):
    """All parameter combinations of the reference grid (optionally with some fixed)."""
    keys = list(GRID)
    values = [(fixed[k],) if k in fixed else GRID[k] for k in keys]
    for combo in itertools.product(*values):
        yield AgParams(**dict(zip(keys, combo)), seed=seed)


def expected_base_duration(pl: float, horizon: int = HORIZON) -> float:
    short = sum(SHORT_DURATION) / 2
    long = (LONG_MIN_DURATION + horizon) / 2
    return (1 - pl) * short + pl * long


def fleet_sizes(num_demands: int, pu: float, pl: float = 0.02, horizon: int = HORIZON) -> list[int]:
    """Vehicles per category: busy hours demanded, spread at utilization ``pu``, rounded up."""
    busy = FLEET_BUSY_SHARE * expected_base_duration(pl, horizon)
    total = num_demands * busy / (horizon * pu)
    return [math.ceil(p * total - 1e-9) for p in CATEGORY_PORTION]


def _du(rng, lo, hi):
    return int(rng.integers(lo, hi + 1))


def generate_ag(params: AgParams) -> Instance:
    sizes = fleet_sizes(params.num_demands, params.pu, params.pl, params.horizon)
    vehicles, cat_of = [], {}
    for c, (name, n) in enumerate(zip(CATEGORIES, sizes)):
        for k in range(n):
            vid = f"{name}{k + 1:03d}"
            vehicles.append(vid)
            cat_of[vid] = c
    by_min_cat = [[v for v in vehicles if cat_of[v] >= c] for c in range(len(CATEGORIES))]

    width = max(5, len(str(params.num_demands)))
    offers = []
    root = np.random.SeedSequence(params.seed)
    for i in range(params.num_demands):
        rng = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(i,)))
        did = f"d{i:0{width}d}"
        long = rng.random() < params.pl
        duration = _du(rng, LONG_MIN_DURATION, params.horizon) if long else _du(rng, *SHORT_DURATION)
        min_cat = int(rng.choice(len(CATEGORIES), p=CATEGORY_PORTION))
        per_time = _du(rng, *COST_PER_TIME)
        anchor = _du(rng, 0, params.horizon - RELATIVE_START[1])

        for v in by_min_cat[min_cat]:
            if rng.random() >= params.pa:
                continue
            k = _du(rng, *INTERVALS_PER_VEHICLE)
            starts = rng.choice(np.arange(RELATIVE_START[0], RELATIVE_START[1] + 1), size=k, replace=False)
            cost = per_time * duration * CATEGORY_COST[cat_of[v]]
            for j, rs in enumerate(sorted(int(s) for s in starts)):
                a = anchor + rs
                offers.append(Offer(f"{did}_{v}_{j}", did, a, a + duration, float(cost), v))

        # fallback offers get alternative dates like vehicle offers do
        base = per_time * duration * CATEGORY_COST[min_cat]
        for tag, percent, p in (("taxi", TAXI_PERCENT, 1.0), ("pt", PT_PERCENT, PT_PROBABILITY)):
            if p < 1.0 and rng.random() >= p:
                continue
            for j in range(_du(rng, *INTERVALS_PER_VEHICLE)):
                a = anchor + _du(rng, *RELATIVE_START)
                cost = round(base * _du(rng, *percent) / 100, 2)
                offers.append(Offer(f"{did}_{tag}_{j}", did, a, a + duration, cost))

    meta = {
        "generator": "ag",
        "params": asdict(params),
        "time_unit": "hour",
        "categories": {v: CATEGORIES[c] for v, c in cat_of.items()},
    }
    return Instance.from_offers(offers, vehicles, meta=meta)
