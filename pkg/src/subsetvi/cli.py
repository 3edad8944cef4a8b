"""Command-line interface: analyze, solve, simulate, gen."""

from __future__ import annotations

import argparse
import sys
import warnings

from .dp import ENUM_CAP
from .io.files import FileFormatError, read_classes, read_value, write_stats, write_value
from .io.generators import GENERATORS, GeneratorError, generate
from .io.pomdpfile import PomdpSyntaxError, read_pomdp, write_pomdp
from .model import ModelError, analyze_properness, informativeness_report
from .policy import ImprovingPolicy, qmdp_policy, simulate
from .solvers import (ITERATION_CAP, RESOURCE_ABORT, SolveConfig, classify_actions_heuristic,
                      solve)

EXIT_OK, EXIT_ERROR, EXIT_CAP, EXIT_RESOURCE = 0, 1, 2, 3


def _names(names, n):
    return names or tuple(str(i) for i in range(n))


def cmd_analyze(args, out):
    model = read_pomdp(args.model)
    an = _names(model.action_names, model.num_actions)
    zn = _names(model.observation_names, model.num_observations)
    S = model.num_states
    out.write(f"model: {S} states, {model.num_actions} actions, "
              f"{model.num_observations} observations, discount {model.discount}\n")
    rep = analyze_properness(model)
    out.write("transformational matrices:\n")
    for (a, z), (deg, rank) in rep.entries.items():
        out.write(f"  {an[a]} {zn[z]}: rank {rank}/{S} {'degenerate' if deg else 'invertible'}\n")
    out.write(f"verdict: {rep.verdict}\n")
    info = informativeness_report(model)
    out.write("observation supports:\n")
    for (a, z), n in info.sizes.items():
        out.write(f"  {an[a]} {zn[z]}: {n}/{S}\n")
    out.write(f"max support size: {info.max_size}\n")
    cls = classify_actions_heuristic(model, args.fraction)
    out.write("suggested classification:\n")
    for a in range(model.num_actions):
        kind = "rich" if a in cls.information_rich else "poor"
        out.write(f"  {an[a]} {kind} (mean support fraction {info.mean_fraction(a):.4f})\n")
    return EXIT_OK


def cmd_solve(args, out):
    model = read_pomdp(args.model)
    cfg = SolveConfig(epsilon=args.epsilon, max_iterations=args.max_iter, mode=args.mode,
                      criterion=args.criterion, seed=args.seed, enum_cap=args.enum_cap,
                      incremental=args.incremental, deadline=args.deadline,
                      max_expansions=args.max_expansions)
    classes = read_classes(args.classes, model) if args.classes else None
    result = solve(model, args.algo, cfg, classes)
    if args.out:
        write_value(result.value, args.out)
    if args.stats:
        write_stats(result.stats, args.stats)
    count = result.value.total_count() if hasattr(result.value, "total_count") else len(result.value)
    out.write(f"{result.algorithm}: {result.reason} after {result.iterations} iterations, "
              f"residual {result.residual:.6g}, {count} vectors\n")
    if "error" in result.extra:
        sys.stderr.write(f"resource abort: {result.extra['error']}\n")
    if result.reason == RESOURCE_ABORT:
        return EXIT_RESOURCE
    if result.reason == ITERATION_CAP:
        return EXIT_CAP
    return EXIT_OK


def cmd_simulate(args, out):
    model = read_pomdp(args.model)
    if args.policy == "qmdp":
        policy = qmdp_policy(model)
    else:
        policy = ImprovingPolicy(model, read_value(args.policy, model))
    rep = simulate(model, policy, args.trials, args.horizon, args.seed)
    if args.csv:
        out.write(rep.CSV_HEADER + "\n" + rep.csv_row() + "\n")
    else:
        out.write(rep.summary() + "\n")
    return EXIT_OK


def _param(text):
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, found {text!r}")

    def num(v):
        try:
            return int(v)
        except ValueError:
            return float(v)

    try:
        value = tuple(num(v) for v in val.split(",")) if "," in val else num(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value in {text!r}") from None
    return key, value


def cmd_gen(args, out):
    model = generate(args.problem, **dict(args.params))
    write_pomdp(model, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subsetvi", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="properness and informativeness reports")
    a.add_argument("model", help="model file or - for stdin")
    a.add_argument("--fraction", type=float, default=0.5,
                   help="mean support fraction at or below which an action is information-rich")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("solve", help="run a solver")
    s.add_argument("model")
    s.add_argument("--algo", choices=("vi", "ssvi", "infovi", "spvi"), required=True)
    s.add_argument("--mode", choices=("collective", "individual"), default="collective")
    s.add_argument("--epsilon", type=float, default=0.01)
    s.add_argument("--criterion", choices=("loose", "strict"), default=None)
    s.add_argument("--max-iter", type=int, default=1000)
    s.add_argument("--deadline", type=float, default=None, help="wall-clock seconds")
    s.add_argument("--max-expansions", type=int, default=None)
    s.add_argument("--classes", help="action classification file (name rich|poor)")
    s.add_argument("--out", help="alpha-vector set output file")
    s.add_argument("--stats", help="per-iteration CSV output file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--enum-cap", type=int, default=ENUM_CAP)
    s.add_argument("--incremental", action="store_true", help="prune partial cross-sums")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="Monte-Carlo evaluation of a policy")
    m.add_argument("model")
    m.add_argument("policy", help="alpha-vector set file or 'qmdp'")
    m.add_argument("--trials", type=int, default=1000)
    m.add_argument("--horizon", type=int, default=100)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--csv", action="store_true", help="print a CSV row instead of a summary")
    m.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gen", help="emit a benchmark model")
    g.add_argument("problem", choices=sorted(GENERATORS))
    g.add_argument("params", nargs="*", type=_param, help="key=value generator parameters")
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args, sys.stdout)
    except (OSError, PomdpSyntaxError, FileFormatError, GeneratorError, ModelError,
            ValueError) as exc:
        sys.stderr.write(f"subsetvi {args.command}: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
