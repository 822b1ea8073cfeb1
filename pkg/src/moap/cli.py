"""Command line interface: ``moap generate|solve|bench``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .core import ValidationError, expand_classes, read_instance, write_instance

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 2, 3

log = logging.getLogger("moap")


def _write_text(path: str | None, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_generate(args) -> int:
    from .core import dumps_instance
    from .gen import AgParams, RwParams, generate_ag, generate_rw, parse_isma, reduce_isma_to_moap

    if args.family == "ag":
        inst = generate_ag(AgParams(args.demands, args.pu, args.pa, args.pl, args.seed))
    elif args.family == "rw":
        inst = generate_rw(RwParams(args.employees, args.nu, args.seed))
    else:
        machines, jobs = parse_isma(Path(args.file).read_text())
        inst = reduce_isma_to_moap(machines, jobs)
    if args.output and args.output != "-":
        write_instance(inst, args.output)
    else:
        sys.stdout.write(dumps_instance(inst))
    log.info("generated %d demands, %d offers, %d vehicles", inst.num_demands, inst.num_offers,
             len(inst.vehicles))
    return EXIT_OK


def _load_config(path):
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def cmd_solve(args) -> int:
    from .bench import MethodSpec, run_method, trace_to_csv
    from .conflict import build_demand_conflict_graph, build_offer_conflict_graph, to_dot
    from .exact import build_model, export_model

    inst = read_instance(args.instance)
    classes = args.method == "bnb-classes"
    if args.export_lp or args.export_mps or args.dot:
        work = inst if classes or not inst.has_class_offers else expand_classes(inst)
        g = build_offer_conflict_graph(work)
        if args.dot:
            _write_text(args.dot, to_dot(g, build_demand_conflict_graph(g)))
        model = None
        if args.export_lp or args.export_mps:
            model = build_model(work, g, args.formulation, classes=classes)
        if args.export_lp:
            _write_text(args.export_lp, export_model(model, "LP"))
        if args.export_mps:
            _write_text(args.export_mps, export_model(model, "MPS"))

    config = _load_config(args.config)
    method = MethodSpec(args.method, args.method, criterion=args.criterion,
                        formulation=args.formulation, bound=args.bound, config=config)
    t0 = time.perf_counter()
    out = run_method(inst, method, args.seed, args.time_limit, args.iterations)
    runtime_ms = (time.perf_counter() - t0) * 1000
    sol = out.solution
    payload = sol.to_dict(inst, solver=args.method, runtime_ms=0.0 if args.iterations else runtime_ms,
                          seed=args.seed)
    if out.bound is not None:
        payload["bound"] = out.bound
        payload["optimal"] = out.optimal
        payload["nodes"] = out.nodes
    _write_text(args.output, json.dumps(payload, indent=1, sort_keys=True) + "\n")
    if args.trace and out.trace:
        _write_text(args.trace, trace_to_csv(out.trace))
    ok = sol.feasible and sol.complete
    print(f"{args.method}: objective={sol.objective:.6g} feasible={ok} "
          f"unassigned={len(sol.unassigned)} time_ms={runtime_ms:.1f}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_PARTIAL


def cmd_bench_run(args) -> int:
    from .bench import ExperimentSpec, failed_rows, rows_to_csv, run_experiment

    spec = ExperimentSpec.from_json(args.spec)
    if args.output:
        spec.output = args.output
    if args.workers:
        spec.workers = args.workers
    rows = run_experiment(spec)
    if not spec.output:
        sys.stdout.write(rows_to_csv(rows))
    failures = failed_rows(rows)
    for r in failures:
        print(f"failed: {r.instance} {r.method} seed={r.seed}: {r.error}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_bench_aggregate(args) -> int:
    from .bench import aggregate, read_rows, render_table

    rows = read_rows(args.results)
    try:
        summary = aggregate(rows, args.group_by)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_INVALID
    _write_text(args.output, render_table(summary, args.group_by))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="moap", description="Mobility offer allocation toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a benchmark instance")
    gsub = gen.add_subparsers(dest="family", required=True)
    ag = gsub.add_parser("ag", help="artificial instance")
    ag.add_argument("--demands", type=int, default=200)
    ag.add_argument("--pu", type=float, default=0.2, help="fleet utilization (fraction)")
    ag.add_argument("--pa", type=float, default=0.6, help="vehicle acceptance probability")
    ag.add_argument("--pl", type=float, default=0.02, help="long demand probability")
    rw = gsub.add_parser("rw", help="company fleet instance")
    rw.add_argument("--employees", type=int, default=500)
    rw.add_argument("--nu", type=float, default=0.05, help="vehicles per employee and mode (max)")
    isma = gsub.add_parser("isma", help="reduce an interval scheduling instance")
    isma.add_argument("file", help="lines 'machine A B' and 'job S F'")
    for q in (ag, rw, isma):
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("-o", "--output")
    gen.set_defaults(func=cmd_generate)

    solve = sub.add_parser("solve", help="solve an instance file")
    solve.add_argument("instance")
    solve.add_argument("--method", choices=("greedy", "g1mw", "bnb", "bnb-classes", "alns"),
                       default="greedy")
    solve.add_argument("--criterion", default="MaxMinCost")
    solve.add_argument("--formulation", choices=("clique", "edge"), default="clique")
    solve.add_argument("--bound", choices=("lp", "mincost"), default="lp")
    solve.add_argument("--time-limit", type=float, default=60.0)
    solve.add_argument("--iterations", type=int, help="iteration (ALNS) or node (B&B) limit; "
                       "makes runs reproducible")
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--config", help="JSON file with ALNS option overrides")
    solve.add_argument("--export-lp")
    solve.add_argument("--export-mps")
    solve.add_argument("--dot", help="write the conflict graphs in DOT format")
    solve.add_argument("--trace", help="write the ALNS convergence trace as CSV")
    solve.add_argument("-o", "--output")
    solve.set_defaults(func=cmd_solve)

    bench = sub.add_parser("bench", help="experiments")
    bsub = bench.add_subparsers(dest="bench_command", required=True)
    run = bsub.add_parser("run")
    run.add_argument("spec")
    run.add_argument("-o", "--output", help="output directory (overrides the spec)")
    run.add_argument("--workers", type=int)
    run.set_defaults(func=cmd_bench_run)
    agg = bsub.add_parser("aggregate")
    agg.add_argument("results")
    agg.add_argument("--group-by")
    agg.add_argument("-o", "--output")
    agg.set_defaults(func=cmd_bench_aggregate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        for kind, ident, msg in exc.errors:
            print(f"invalid instance: {kind}: {ident}: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
