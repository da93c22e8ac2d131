"""Command line entry point: ``jobshop-dd {gen,solve,bench,export,exact}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from jobshop_dd import bench
from jobshop_dd.dd import a_star_search, dd_branch_and_bound, full_expansion
from jobshop_dd.export import export_disjunctive_lp, export_start_vector
from jobshop_dd.graph import graph_from_schedule, graph_to_schedule, lns1_refine
from jobshop_dd.instance import generate_random_instance, load_instance, write_instance

log = logging.getLogger("jobshop_dd")


def _instance(ref: str):
    """A file path, or the name of a bundled JSPLIB instance."""
    path = Path(ref)
    if path.exists():
        return load_instance(path)
    if ref in bench.jsplib_names():
        return bench.load_jsplib(ref)
    raise FileNotFoundError(f"{ref}: no such file or bundled instance")


def _spec(args) -> bench.HeuristicSpec:
    return bench.HeuristicSpec(args.rule, width=args.width, model=args.model, collect=args.collect)


def _size(text: str):
    try:
        n, m = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected JOBSxMACHINES, got {text!r}") from None
    return n, m


def cmd_gen(args) -> int:
    n, m = args.size
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        inst = generate_random_instance(n, m, args.seed + i)
        text = write_instance(inst)
        if out is None:
            sys.stdout.write(text)
        else:
            (out / f"{inst.name}.txt").write_text(text, encoding="utf-8")
    return 0


def _solve(inst, args):
    spec = _spec(args)
    schedules = bench.run_heuristic(inst, spec, collect=args.refine)
    best = schedules[0]
    if args.refine:
        for s in schedules:
            length, graph = lns1_refine(graph_from_schedule(inst, s), args.budget)
            if length < best.makespan:
                best = graph_to_schedule(graph)
    return spec, best


def cmd_solve(args) -> int:
    inst = _instance(args.instance)
    spec, sched = _solve(inst, args)
    print(f"# {inst.name} {spec.label}{' +LNS1' if args.refine else ''} makespan {sched.makespan}")
    for j in range(inst.n_jobs):
        print(" ".join(str(int(t)) for t in sched.start[j]))
    return 0


def cmd_bench(args) -> int:
    if args.random:
        n, m = args.random
        instances = bench.random_instances(n, m, args.count, args.seed)
    elif args.instances:
        instances = [_instance(r) for r in args.instances]
    else:
        instances = [bench.load_jsplib(name) for name in bench.jsplib_names()]
    heuristics = args.heuristic or ["SPT", "MWR", "MOR", "SB", f"DD:W={args.width}:model={args.model}"]
    if args.optima in ("exact", "none"):
        source, registry = args.optima, {}
    else:
        source = "registry"
        registry = bench.load_optima_registry(None if args.optima == "bundled" else args.optima)
    cfg = bench.BenchConfig(
        instances, heuristics, refine=args.refine, optima=source, registry=registry, budget=args.budget, workers=args.workers
    )
    report = bench.run_suite(cfg)
    text = report.to_csv() if args.format == "csv" else report.to_table()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 1 if any(r.error for r in report.rows) else 0


def cmd_export(args) -> int:
    inst = _instance(args.instance)
    lp = export_disjunctive_lp(inst)
    if args.lp:
        Path(args.lp).write_text(lp, encoding="utf-8")
    else:
        sys.stdout.write(lp)
    if args.start:
        _, sched = _solve(inst, args)
        Path(args.start).write_text(export_start_vector(inst, sched), encoding="utf-8")
    return 0


def cmd_exact(args) -> int:
    inst = _instance(args.instance)
    if args.method == "full":
        res = full_expansion(inst, args.model)
        print(f"{inst.name} optimum {res.optimum} valid_nodes {res.valid_nodes}")
    elif args.method == "bnb":
        res = dd_branch_and_bound(inst, width=args.width, model=args.model)
        print(f"{inst.name} optimum {res.optimum} subproblems {res.nodes}")
    else:
        res = a_star_search(inst)
        print(f"{inst.name} optimum {res.optimum} expanded {res.nodes}")
    return 0


def _heuristic_flags(p, width=200):
    p.add_argument("--rule", default="DD", type=str.upper, choices=bench.KINDS, help="heuristic to run")
    p.add_argument("--width", type=int, default=width, help="restricted/relaxed DD width")
    p.add_argument("--model", choices=("m1", "m2"), default="m2")
    p.add_argument("--collect", type=int, default=32, help="DD terminal solutions handed to LNS1")
    p.add_argument("--refine", action="store_true", help="post-refine with LNS1")
    p.add_argument("--budget", type=int, default=10_000, help="LNS1 graph evaluations")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jobshop-dd", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="write random instances")
    p.add_argument("size", type=_size, help="JOBSxMACHINES, e.g. 10x10")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", help="directory to write into (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run one heuristic on one instance")
    p.add_argument("instance", help="instance file or bundled name such as ft10")
    _heuristic_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a heuristic suite")
    p.add_argument("instances", nargs="*", help="files or bundled names (default: bundled JSPLIB set)")
    p.add_argument("--random", type=_size, help="use seeded random instances of this size")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--heuristic", action="append", help="SPT, MWR, MOR, SB or DD[:W=400][:model=m1]; repeatable")
    p.add_argument("--width", type=int, default=200)
    p.add_argument("--model", choices=("m1", "m2"), default="m2")
    p.add_argument("--refine", action="store_true")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--optima", default="bundled", help="registry path, 'bundled', 'exact' or 'none'")
    p.add_argument("--format", choices=("csv", "table"), default="table")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export", help="write the MIP as LP text and an optional start file")
    p.add_argument("instance")
    p.add_argument("--lp", help="LP output path (default: stdout)")
    p.add_argument("--start", help="also write a start vector from --rule to this path")
    _heuristic_flags(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("exact", help="solve a small instance exactly")
    p.add_argument("instance")
    p.add_argument("--method", choices=("full", "bnb", "astar"), default="bnb")
    p.add_argument("--model", choices=("m1", "m2"), default="m2")
    p.add_argument("--width", type=int, default=8)
    p.set_defaults(func=cmd_exact)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
