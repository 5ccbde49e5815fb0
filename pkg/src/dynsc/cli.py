"""Command line entry point: ``dynsc run | verify | baseline | gen-stream | gen-instance``.

Exit codes: 0 ok, 1 usage, 2 invariant violation, 3 I/O.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import warnings
from pathlib import Path

from dynsc.baselines import brute_force_opt, greedy_cover, static_threshold_cover
from dynsc.errors import InvalidArgument, InvariantViolation
from dynsc.harness import (STREAM_KINDS, ExperimentConfig, emit_report, gen_stream,
                           random_coverage, read_stream, run_experiment, write_stream)
from dynsc.oracle import load_problem, problem_to_json

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--eps-del", type=float)
    p.add_argument("--n-max", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("theory", "practical"), default="practical")
    p.add_argument("--t-override", type=int, default=200,
                   help="simulation count in practical mode (default 200)")
    p.add_argument("--theory-t", action="store_true", help="same as --mode theory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dynsc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="replay a stream and write per-update metrics")
    _add_run_args(run)
    run.add_argument("--check", action="store_true", help="check invariants after every op")
    run.add_argument("--retrieve-every", type=int, default=1)
    run.add_argument("--out", required=True)
    run.add_argument("--format", choices=("jsonl", "csv"), default=None,
                     help="defaults to the --out suffix, else jsonl")

    ver = sub.add_parser("verify", help="replay with invariant checks; nonzero exit on violation")
    _add_run_args(ver)

    gs = sub.add_parser("gen-stream", help="write an update stream file")
    gs.add_argument("--kind", choices=STREAM_KINDS, required=True)
    gs.add_argument("--n", type=int, help="ids v0..v{n-1} (ignored with --instance)")
    gs.add_argument("--instance", help="take ids from this instance file")
    gs.add_argument("--ops", type=int)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("--window", type=int)
    gs.add_argument("--churn", type=float, default=0.5)
    gs.add_argument("--out", required=True)

    gi = sub.add_parser("gen-instance", help="write a random weighted coverage instance")
    gi.add_argument("--n", type=int, required=True)
    gi.add_argument("--universe", type=int, required=True)
    gi.add_argument("--rho", type=float, default=4.0)
    gi.add_argument("--max-cover", type=int, default=8)
    gi.add_argument("--seed", type=int, default=0)
    gi.add_argument("--out", required=True)

    bl = sub.add_parser("baseline", help="solve the full instance with a static solver")
    bl.add_argument("--instance", required=True)
    bl.add_argument("--algo", choices=("greedy", "brute", "static"), required=True)
    bl.add_argument("--tau", type=float)
    bl.add_argument("--target-fraction", type=float, default=1.0)
    return parser


def _experiment_config(args, check: bool) -> ExperimentConfig:
    theory = args.mode == "theory" or args.theory_t
    if theory:
        warnings.warn("theory mode: simulation counts follow the high-probability formula "
                      "and make every rebuild very expensive", RuntimeWarning)
    return ExperimentConfig(eps=args.epsilon, eps_del=args.eps_del, n_max=args.n_max,
                            seed=args.seed, t_override=None if theory else args.t_override,
                            check=check, retrieve_every=getattr(args, "retrieve_every", 1))


def _jsonable(obj):
    if isinstance(obj, (set, frozenset)):
        return sorted(obj, key=str)
    raise TypeError(type(obj).__name__)


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, default=_jsonable))


def _cmd_run(args, check: bool) -> int:
    problem = load_problem(args.instance)
    ops = read_stream(args.stream)
    config = _experiment_config(args, check)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        records, summary = run_experiment(problem, ops, config)
    if args.command == "run":
        fmt = args.format or ("csv" if args.out.endswith(".csv") else "jsonl")
        emit_report(records, fmt, args.out)
    _print(dataclasses.asdict(summary))
    return EXIT_INVARIANT if summary.invariant_violations else EXIT_OK


def _cmd_gen_stream(args) -> int:
    if args.instance:
        ids = load_problem(args.instance).ground.ids
    elif args.n is not None:
        ids = [f"v{i}" for i in range(args.n)]
    else:
        raise UsageError("gen-stream needs --n or --instance")
    ops = gen_stream(args.kind, ids, args.ops, args.seed, args.window, args.churn)
    write_stream(ops, args.out)
    return EXIT_OK


def _cmd_gen_instance(args) -> int:
    covers, weights = random_coverage(args.n, args.universe, args.rho, args.seed, args.max_cover)
    Path(args.out).write_text(json.dumps(problem_to_json(covers, weights, args.rho), indent=1))
    return EXIT_OK


def _cmd_baseline(args) -> int:
    problem = load_problem(args.instance)
    V = problem.ground.ids
    if args.algo == "greedy":
        S = greedy_cover(problem, V, args.target_fraction)
    elif args.algo == "brute":
        S, _ = brute_force_opt(problem, V, args.target_fraction)
    else:
        if args.tau is None:
            raise UsageError("--algo static needs --tau")
        S = static_threshold_cover(problem, V, args.tau)
    _print({"algo": args.algo, "solution": problem.ground.ordered(S),
            "cost": problem.cost(S), "value": problem.value(S) if S else 0.0,
            "f_V": problem.value(V) if V else 0.0})
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, args.check)
        if args.command == "verify":
            return _cmd_run(args, True)
        if args.command == "gen-stream":
            return _cmd_gen_stream(args)
        if args.command == "gen-instance":
            return _cmd_gen_instance(args)
        return _cmd_baseline(args)
    except (UsageError, InvalidArgument, KeyError) as exc:
        print(f"dynsc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"dynsc: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (OSError, json.JSONDecodeError) as exc:
        print(f"dynsc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
