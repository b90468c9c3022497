"""Command-line entry points: solve, validate, oracle, bench, gen."""

from __future__ import annotations

import argparse
import json
import sys

from .model import read_instance, write_instance
from .bnp import SolveConfig, search
from .oracle import oracle_solve, validate_solution
from .bench import format_tables, run_benchmark
from .instgen import GenConfig, generate_micro, read_source, transform


def _solve_config(args) -> SolveConfig:
    return SolveConfig(time_limit=args.time_limit, kappa=args.kappa,
                       half_point=args.half_point, search=args.search,
                       threads=args.threads, max_columns=args.max_columns)


def cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    rep = search(inst, _solve_config(args))
    text = rep.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if rep.status == "no_solution":
        return 1
    print(f"status={rep.status} objective={rep.objective} "
          f"nodes={rep.nodes} time={rep.timeTotalSec:.2f}s", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    inst = read_instance(args.instance)
    with open(args.report, encoding="utf-8") as fh:
        report = json.load(fh)
    violations = validate_solution(inst, report)
    if violations:
        for v in violations:
            print(v)
        return 1
    print("pass")
    return 0


def cmd_oracle(args) -> int:
    inst = read_instance(args.instance)
    obj, sol = oracle_solve(inst)
    print(json.dumps({"objective": obj, "solution": sol}, sort_keys=True))
    return 0


def cmd_bench(args) -> int:
    rows = run_benchmark(args.directory, _solve_config(args))
    text = format_tables(rows)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {args.out} ({len(rows)} instances)", file=sys.stderr)
    return 0


def cmd_gen(args) -> int:
    if args.source is None:
        inst = generate_micro(args.n, args.tau, seed=args.seed, k2=args.k2,
                              n_suppliers=args.suppliers,
                              n_satellites=args.satellites)
    else:
        src = read_source(args.source)
        cfg = GenConfig(n_suppliers=args.suppliers,
                        n_satellites=args.satellites,
                        k2=args.k2, seed=args.seed)
        inst = transform(src, cfg)
    write_instance(inst, args.out)
    return 0


def _add_solve_opts(p):
    p.add_argument("--time-limit", type=float, default=3600.0)
    p.add_argument("--kappa", type=int, default=5)
    p.add_argument("--half-point", type=float, default=0.5)
    p.add_argument("--search", choices=["best-first", "local-depth-first"],
                   default="best-first")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--max-columns", type=int, default=50)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="teirp",
        description="Two-echelon inventory-routing branch-and-price solver")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("instance")
    _add_solve_opts(p)
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a report against an instance")
    p.add_argument("instance")
    p.add_argument("report")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="exact reference solve (small instances)")
    p.add_argument("instance")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="solve a directory and emit CSV tables")
    p.add_argument("directory")
    _add_solve_opts(p)
    p.add_argument("--out", default="results.csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--source", default=None,
                   help="single-depot source file; omit for a micro instance")
    p.add_argument("--suppliers", type=int, default=1)
    p.add_argument("--satellites", type=int, default=2)
    p.add_argument("--k2", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=4, help="micro: customer count")
    p.add_argument("--tau", type=int, default=2, help="micro: horizon")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
