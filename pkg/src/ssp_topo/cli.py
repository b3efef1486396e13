"""Command line: ``ssp-topo {solve,gen,bench,verify}``.

Exit codes: 0 success, 1 usage / parse / validation / spec errors (and
failed verification), 2 divergent value or non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .bench import Manifest, run_bench, write_summary
from .errors import DivergentValue, InvalidSpec, ParseError, SspError, Unsatisfiable, ValidationError
from .generators import GoalCountSpec, GridSpec, LayeredSpec, gen_goalcount, gen_grid, gen_layered
from .io import read_mdp, serialize_mdp
from .solve import ALGORITHMS, RunOptions, RunRecord, run_algorithm
from .verify import verify_instance

EXIT_OK, EXIT_USAGE, EXIT_DIVERGENT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; we reserve 2 for divergence."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _heuristic(s: str) -> str:
    if s in ("hmin", "zero") or (s.startswith("file:") and len(s) > 5):
        return s
    raise argparse.ArgumentTypeError("expected hmin, zero or file:PATH")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ssp-topo", description="Topological value iteration toolkit for SSP MDPs.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one MDP file and print a CSV row")
    s.add_argument("--algo", required=True, choices=ALGORITHMS)
    s.add_argument("--input", required=True, type=Path)
    s.add_argument("--delta", type=float, default=1e-6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--x", type=int, default=100, help="search iterations per batch (ftvi)")
    s.add_argument("--y", type=float, default=3.0, help="batch improvement threshold in percent")
    s.add_argument("--upper-passes", type=int, default=3)
    s.add_argument("--intra-component", action="store_true")
    s.add_argument("--no-reachability", action="store_true",
                   help="tvi: decompose the whole state space")
    s.add_argument("--heuristic", type=_heuristic, default="hmin")
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--value-cap", type=float, default=1e12)
    s.add_argument("--header", action="store_true", help="print the CSV header first")
    s.add_argument("--problem", help="problem id for the CSV row (default: file stem)")

    g = sub.add_parser("gen", help="generate an MDP file")
    gsub = g.add_subparsers(dest="family", required=True, parser_class=_Parser)
    gl = gsub.add_parser("layered")
    gl.add_argument("--states", type=int, required=True)
    gl.add_argument("--layers", type=int, required=True)
    gl.add_argument("--actions", type=int, default=10)
    gl.add_argument("--succ", type=int, default=10)
    gg = gsub.add_parser("goalcount")
    gg.add_argument("--states", type=int, required=True)
    gg.add_argument("--goals", type=int, default=1)
    gg.add_argument("--depth", type=int, default=6)
    gr = gsub.add_parser("grid")
    gr.add_argument("--width", type=int, required=True)
    gr.add_argument("--height", type=int, required=True)
    gr.add_argument("--p-sticky", type=float, default=0.5)
    for q in (gl, gg, gr):
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--out", type=Path, help="output file (default: stdout)")

    b = sub.add_parser("bench", help="run a benchmark manifest")
    b.add_argument("manifest", type=Path)
    b.add_argument("--out", type=Path, help="per-cell CSV (default: stdout)")
    b.add_argument("--summary", type=Path, help="also write medians over seeds here")
    b.add_argument("--repeats", type=int, default=10)
    b.add_argument("--timeout", type=float, default=300.0, help="seconds per run")

    v = sub.add_parser("verify", help="check solvers against the oracle on one MDP file")
    v.add_argument("--input", required=True, type=Path)
    v.add_argument("--delta", type=float, default=1e-6)
    v.add_argument("--tol", type=float, default=1e-4)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--algos", nargs="+", choices=ALGORITHMS, default=list(ALGORITHMS))
    return p


def cmd_solve(args) -> int:
    mdp = read_mdp(args.input)
    opts = RunOptions(delta=args.delta, seed=args.seed, x=args.x, y=args.y,
                      upper_passes=args.upper_passes, intra_component=args.intra_component,
                      reachability=not args.no_reachability, value_cap=args.value_cap,
                      heuristic=args.heuristic, scale=args.scale)
    _, stats = run_algorithm(mdp, args.algo, opts)
    rec = RunRecord.from_stats(args.problem or args.input.stem, stats, args.seed, args.delta)
    w = csv.writer(sys.stdout, lineterminator="\n")
    if args.header:
        w.writerow(RunRecord.header())
    w.writerow(rec.row())
    return EXIT_OK if stats.converged else EXIT_DIVERGENT


def cmd_gen(args) -> int:
    if args.family == "layered":
        mdp = gen_layered(LayeredSpec(args.states, args.layers, args.actions, args.succ, args.seed))
    elif args.family == "goalcount":
        mdp = gen_goalcount(GoalCountSpec(args.states, args.goals, args.depth, args.seed))
    else:
        mdp = gen_grid(GridSpec(args.width, args.height, args.p_sticky, args.seed))
    text = serialize_mdp(mdp)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    manifest = Manifest.load(args.manifest)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        records = run_bench(manifest, out, args.repeats, args.timeout)
    finally:
        if args.out:
            out.close()
    if args.summary:
        with open(args.summary, "w", newline="") as fh:
            write_summary(records, fh)
    return EXIT_OK


def cmd_verify(args) -> int:
    mdp = read_mdp(args.input)
    rep = verify_instance(mdp, tuple(args.algos), args.delta, args.tol, args.seed)
    print("\n".join(rep.lines()))
    return EXIT_OK if rep.ok else EXIT_USAGE


COMMANDS = {"solve": cmd_solve, "gen": cmd_gen, "bench": cmd_bench, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except DivergentValue as exc:
        print(f"DivergentValue: {exc}", file=sys.stderr)
        return EXIT_DIVERGENT
    except (ParseError, ValidationError, InvalidSpec, Unsatisfiable) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, SspError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
