"""Experiment harness: run solver configurations over instance sets and summarize.

A run spec is JSON::

    {"instances": {"generator": "ag", "grid": {"num_demands": [200], "pu": [0.2, 0.4]},
                   "seeds": [0, 1]},
     "methods": [{"name": "greedy", "method": "greedy", "criterion": "MaxMinCost"},
                 {"name": "bnb", "method": "bnb"}],
     "time_limit": 60, "repetitions": 1, "seeds": [0], "output": "results"}

``instances`` may instead be a list of paths or ``{"glob": "dir/*.json"}``.
"""

from __future__ import annotations

import csv
import glob as globmod
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from statistics import mean

from .alns import AlnsConfig, run_alns
from .conflict import build_offer_conflict_graph
from .core import Instance, Solution, expand_classes, read_instance
from .exact import BranchAndBoundConfig, assign_vehicles, build_model, solve_bnb
from .greedy import greedy, greedy_g1mw

log = logging.getLogger(__name__)

CSV_VERSION = "moap-results v1"
METHODS = ("greedy", "g1mw", "bnb", "bnb-classes", "alns")
PARAM_COLUMNS = ("num_demands", "pu", "pa", "pl", "employees", "nu")


class SpecError(ValueError):
    pass


@dataclass
class MethodSpec:
    name: str
    method: str
    criterion: str = "MaxMinCost"
    formulation: str = "clique"
    bound: str = "lp"
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise SpecError(f"unknown method {self.method!r} (known: {', '.join(METHODS)})")


@dataclass
class ExperimentSpec:
    instances: object
    methods: list
    time_limit: float | None = 60.0
    iterations: int | None = None
    repetitions: int = 1
    seeds: list = field(default_factory=lambda: [0])
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.repetitions < 1:
            raise SpecError("repetitions must be at least 1")
        self.methods = [m if isinstance(m, MethodSpec) else MethodSpec(**m) for m in self.methods]
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise SpecError("method names must be unique")

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        raw = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        if set(raw) - known:
            raise SpecError(f"unknown spec keys: {sorted(set(raw) - known)}")
        spec = cls(**raw)
        if spec.output is not None and not Path(spec.output).is_absolute():
            spec.output = str(Path(path).parent / spec.output)
        return spec


@dataclass
class ResultRow:
    instance: str
    method: str
    seed: int
    repetition: int
    objective: float
    feasible: bool
    runtime_ms: float
    bound: float | None = None
    gap: float | None = None
    optimal: bool = False
    rel_diff: float | None = None
    params: dict = field(default_factory=dict)
    error: str = ""


# ---------------------------------------------------------------------------
# solving one instance with one method


@dataclass
class RunOutput:
    solution: Solution
    bound: float | None = None
    optimal: bool = False
    nodes: int | None = None
    trace: list | None = None


def collapse_expanded(original: Instance, expanded: Instance, sol: Solution) -> Solution:
    """Map a solution of ``expand_classes(original)`` back onto ``original``."""
    selection, assignment = [], {}
    for o in sol.selection:
        if o < 0:
            selection.append(o)
            continue
        oid = expanded.offers[o].id
        base, _, vehicle = oid.rpartition("@")
        if base and base in original.offer_index and original.offers[original.offer_index[base]].vehicle_class:
            idx = original.offer_index[base]
            assignment[idx] = vehicle
        else:
            idx = original.offer_index[oid]
        selection.append(idx)
    return Solution.from_selection(original, selection, assignment if original.has_class_offers else None)


def run_method(instance: Instance, m: MethodSpec, seed: int = 0, time_limit: float | None = 60.0,
               iterations: int | None = None) -> RunOutput:
    """Solve ``instance`` with method spec ``m``; the solution refers to ``instance``."""
    if m.method == "bnb-classes":
        g = build_offer_conflict_graph(instance)
        model = build_model(instance, g, m.formulation, classes=True)
        res = solve_bnb(model, BranchAndBoundConfig(time_limit=time_limit, bound=m.bound,
                                                    node_limit=iterations))
        sol = res.solution
        if sol is not None:
            sol = assign_vehicles(instance, sol)
        return RunOutput(sol if sol is not None else _empty(instance), res.bound, res.optimal, res.nodes)

    work = expand_classes(instance) if instance.has_class_offers else instance
    g = build_offer_conflict_graph(work)
    out: RunOutput
    if m.method == "greedy":
        out = RunOutput(greedy(work, g, m.criterion, seed=seed))
    elif m.method == "g1mw":
        out = RunOutput(greedy_g1mw(work, g))
    elif m.method == "bnb":
        model = build_model(work, g, m.formulation)
        res = solve_bnb(model, BranchAndBoundConfig(time_limit=time_limit, bound=m.bound,
                                                    node_limit=iterations))
        out = RunOutput(res.solution if res.solution is not None else _empty(work),
                        res.bound, res.optimal, res.nodes)
    else:
        overrides = dict(m.config)
        overrides.setdefault("seed", seed)
        if iterations is not None:
            overrides.setdefault("iterations", iterations)
            overrides.setdefault("time_limit", None)
        else:
            overrides.setdefault("time_limit", time_limit)
        overrides.setdefault("criterion", m.criterion)
        cfg = AlnsConfig.from_dict(overrides)
        res = run_alns(work, g, cfg=cfg)
        out = RunOutput(res.best, trace=res.trace)
    if work is not instance:
        out.solution = collapse_expanded(instance, work, out.solution)
    return out


def _empty(instance: Instance) -> Solution:
    return Solution.from_selection(instance, [-1] * instance.num_demands)


# ---------------------------------------------------------------------------
# instance sets


def resolve_instances(source) -> list[tuple[str, object]]:
    """``(instance id, loader)`` pairs; loaders are picklable descriptors."""
    if isinstance(source, list):
        return [(Path(p).stem, ("file", str(p))) for p in source]
    if isinstance(source, dict) and "glob" in source:
        paths = sorted(globmod.glob(source["glob"]))
        if not paths:
            raise SpecError(f"no instance files match {source['glob']!r}")
        return [(Path(p).stem, ("file", p)) for p in paths]
    if isinstance(source, dict) and "generator" in source:
        kind = source["generator"]
        grid = source.get("grid", {})
        seeds = source.get("seeds", [0])
        keys = sorted(grid)
        out = []
        for combo in itertools.product(*(grid[k] for k in keys)):
            for s in seeds:
                params = dict(zip(keys, combo), seed=s)
                ident = f"{kind}_" + "_".join(f"{k}{v}" for k, v in zip(keys, combo)) + f"_s{s}"
                out.append((ident, ("gen", kind, params)))
        if not out:
            raise SpecError("generator grid is empty")
        return out
    raise SpecError("instances must be a list of paths, {'glob': ...} or {'generator': ...}")


def load(descriptor) -> Instance:
    if descriptor[0] == "file":
        return read_instance(descriptor[1])
    _, kind, params = descriptor
    from .gen import AgParams, RwParams, generate_ag, generate_rw
    if kind == "ag":
        return generate_ag(AgParams(**params))
    if kind == "rw":
        return generate_rw(RwParams(**params))
    raise SpecError(f"unknown generator {kind!r}")


def _params_of(instance: Instance) -> dict:
    params = instance.meta.get("params") or {}
    return {k: params[k] for k in PARAM_COLUMNS if k in params}


def _one_run(job):
    ident, descriptor, m, seed, rep, time_limit, iterations = job
    t0 = time.perf_counter()
    try:
        inst = load(descriptor)
        out = run_method(inst, m, seed, time_limit, iterations)
        sol = out.solution
        ok = bool(sol.feasible and sol.complete)
        gap = None
        if out.bound is not None and ok and math.isfinite(out.bound):
            gap = 0.0 if sol.objective == 0 else max(0.0, (sol.objective - out.bound) / abs(sol.objective))
        row = ResultRow(ident, m.name, seed, rep, sol.objective if ok else math.inf, ok,
                        (time.perf_counter() - t0) * 1000, out.bound, gap, out.optimal,
                        params=_params_of(inst))
        return row, out.trace
    except Exception as exc:  # recorded, never fatal for the batch
        log.warning("run %s/%s/%s failed: %s", ident, m.name, seed, exc)
        return ResultRow(ident, m.name, seed, rep, math.inf, False,
                         (time.perf_counter() - t0) * 1000,
                         error=f"{type(exc).__name__}: {exc}".replace("\n", " ")), None


def fill_rel_diff(rows: list[ResultRow]) -> None:
    """Set ``rel_diff`` against the best feasible objective per instance."""
    best = {}
    for r in rows:
        if r.feasible:
            best[r.instance] = min(best.get(r.instance, math.inf), r.objective)
    for r in rows:
        b = best.get(r.instance)
        if not r.feasible or b is None:
            r.rel_diff = None
        elif b == 0:
            r.rel_diff = 0.0 if r.objective == 0 else math.inf
        else:
            r.rel_diff = (r.objective - b) / abs(b)


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """Run every (instance, method, seed, repetition); write CSV and traces when ``spec.output`` is set."""
    instances = resolve_instances(spec.instances)
    jobs = [(ident, desc, m, seed, rep, spec.time_limit, spec.iterations)
            for ident, desc in instances for m in spec.methods
            for seed in spec.seeds for rep in range(spec.repetitions)]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]
    results.sort(key=lambda rt: (rt[0].instance, rt[0].method, rt[0].seed, rt[0].repetition))
    rows = [r for r, _ in results]
    fill_rel_diff(rows)
    if spec.output:
        out = Path(spec.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(rows_to_csv(rows))
        for row, trace in results:
            if trace:
                name = f"{row.instance}__{row.method}__s{row.seed}_r{row.repetition}.csv"
                (out / "traces").mkdir(exist_ok=True)
                (out / "traces" / name).write_text(trace_to_csv(trace))
    return rows


# ---------------------------------------------------------------------------
# CSV in and out

BASE_COLUMNS = ("instance", "method", "seed", "repetition", "objective", "feasible", "runtime_ms",
                "bound", "gap", "optimal", "rel_diff", "error")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    return str(v)


def rows_to_csv(rows: list[ResultRow]) -> str:
    params = [c for c in PARAM_COLUMNS if any(c in r.params for r in rows)]
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(BASE_COLUMNS) + params)
    for r in rows:
        d = asdict(r)
        base = [_cell(round(d[c], 3) if c == "runtime_ms" else d[c]) for c in BASE_COLUMNS]
        w.writerow(base + [_cell(r.params.get(c)) for c in params])
    return buf.getvalue()


def trace_to_csv(trace) -> str:
    lines = ["elapsed_s,iteration,best_cost"]
    lines += [f"{t!r},{it},{c!r}" for t, it, c in trace]
    return "\n".join(lines) + "\n"


def read_rows(path) -> list[dict]:
    return parse_rows(Path(path).read_text())


def parse_rows(text: str) -> list[dict]:
    """Parse results CSV text into dicts with numeric fields converted."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        row = {}
        for k, v in rec.items():
            if k in ("instance", "method", "error"):
                row[k] = v
            elif k in ("feasible", "optimal"):
                row[k] = v == "1"
            elif v == "":
                row[k] = None
            else:
                row[k] = float(v)
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class GroupSummary:
    key: object
    method: str
    n_instances: int
    n_solved: int
    mean_gap: float | None
    mean_rel_diff: float | None
    mean_runtime_ms: float


def aggregate(rows, group_by: str | None = None) -> list[GroupSummary]:
    """Summarize rows per (group value, method).

    ``n_solved`` counts feasible rows, and for methods that report an
    optimality flag only optimal ones.  Means skip missing values.
    """
    rows = list(rows)
    if group_by is not None and rows and group_by not in rows[0]:
        raise KeyError(f"unknown group key {group_by!r}; columns are {sorted(rows[0])}")
    groups: dict = {}
    for r in rows:
        key = r.get(group_by) if group_by else "all"
        groups.setdefault((key, r["method"]), []).append(r)
    out = []
    for (key, method), rs in sorted(groups.items(), key=lambda kv: (_sortable(kv[0][0]), kv[0][1])):
        exact = any(r.get("bound") is not None for r in rs)
        solved = sum(1 for r in rs if r["feasible"] and (r.get("optimal") or not exact))
        gaps = [r["gap"] for r in rs if r.get("gap") is not None]
        rel = [r["rel_diff"] for r in rs if r.get("rel_diff") is not None]
        out.append(GroupSummary(key, method, len({r["instance"] for r in rs}), solved,
                                mean(gaps) if gaps else None, mean(rel) if rel else None,
                                mean(r["runtime_ms"] for r in rs)))
    return out


def _sortable(v):
    return (0, v, "") if isinstance(v, (int, float)) else (1, 0, str(v))


def render_table(summary: list[GroupSummary], group_by: str | None = None) -> str:
    head = f"{group_by or 'group':>12} {'method':<20} {'#I':>4} {'#S':>4} {'gap%':>8} {'reldiff%':>9} {'time_ms':>10}"
    lines = [head, "-" * len(head)]

    def pct(x):
        return "-" if x is None else f"{100 * x:.2f}"

    for s in summary:
        key = f"{s.key:g}" if isinstance(s.key, float) else str(s.key)
        lines.append(f"{key:>12} {s.method:<20} {s.n_instances:>4} {s.n_solved:>4} "
                     f"{pct(s.mean_gap):>8} {pct(s.mean_rel_diff):>9} {s.mean_runtime_ms:>10.1f}")
    return "\n".join(lines) + "\n"


def failed_rows(rows) -> list:
    return [r for r in rows if (r.error if isinstance(r, ResultRow) else r.get("error"))]
