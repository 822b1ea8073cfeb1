"""Interval scheduling with machine availabilities, encoded as an allocation instance.

A job fits on a machine when the machine's availability interval contains
the job's processing interval.  Every job becomes a demand with a free offer
per fitting machine and a unit-cost offer that needs no machine, so the
scheduling instance is feasible exactly when the allocation optimum is 0
(below 1).
"""

from __future__ import annotations

from ..core import Instance, Offer


def reduce_isma_to_moap(machines, jobs) -> Instance:
    """``machines`` and ``jobs`` are sequences of ``(start, end)`` pairs (half-open)."""
    mids = [f"m{i}" for i in range(len(machines))]
    offers = []
    for j, (s, f) in enumerate(jobs):
        did = f"j{j}"
        for mid, (a, b) in zip(mids, machines):
            if a <= s and f <= b:
                offers.append(Offer(f"{did}_{mid}", did, s, f, 0.0, mid))
        offers.append(Offer(f"{did}_none", did, s, f, 1.0))
    meta = {"generator": "isma", "time_unit": "tick", "machines": [list(m) for m in machines]}
    return Instance.from_offers(offers, mids, meta=meta, demand_ids=[f"j{j}" for j in range(len(jobs))])


def parse_isma(text: str):
    """Read ``machine A B`` / ``job S F`` lines; ``#`` starts a comment."""
    machines, jobs = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("machine", "job"):
            raise ValueError(f"line {lineno}: expected 'machine A B' or 'job S F'")
        try:
            a, b = int(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"line {lineno}: interval bounds must be integers") from None
        if a >= b:
            raise ValueError(f"line {lineno}: empty interval [{a}, {b})")
        (machines if parts[0] == "machine" else jobs).append((a, b))
    return machines, jobs
