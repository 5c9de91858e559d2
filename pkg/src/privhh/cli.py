"""Command line entry points.

    bench run            one experiment configuration -> CSV
    bench sweep          the same configuration across one varied parameter
    bench verify-states  randomized / exhaustive neighbour-pair verification

Exit codes: 0 ok, 2 parameter error, 3 state-machine violation.
"""

from __future__ import annotations

import argparse
import sys

from . import neighbors
from .bench import (
    ExperimentConfig,
    FileSource,
    ZipfSource,
    run_experiment,
    sweep,
)

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_VIOLATION = 3


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--algo", required=True, help="mg|ss|dpss|dpmg|eehh-cms|eehh-cs|exact")
    parser.add_argument("--k", type=int, required=True, help="heavy-hitter threshold parameter")
    parser.add_argument("--ktilde-factor", type=int, default=2, help="expanded capacity factor (default 2)")
    parser.add_argument("--eps", type=float, default=1.0, help="privacy budget epsilon")
    parser.add_argument("--delta", type=float, default=0.001, help="privacy failure probability")
    parser.add_argument("--zipf", type=float, metavar="SKEW", help="synthetic source: zipf skew")
    parser.add_argument("--length", type=int, help="synthetic source: stream length")
    parser.add_argument("--universe", type=int, help="synthetic source: universe size")
    parser.add_argument("--input", help="file source: path")
    parser.add_argument("--format", choices=("tokens", "u64le"), help="file source: record format")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--workers", type=int, default=1, help="parallel repeats (processes)")
    parser.add_argument(
        "--timing-strict",
        action="store_true",
        help="force sequential repeats so update timings never share a core",
    )


def _source_from_args(args: argparse.Namespace):
    if args.zipf is not None:
        if args.length is None or args.universe is None:
            raise ValueError("--zipf needs --length and --universe")
        if args.input is not None:
            raise ValueError("give either --zipf or --input, not both")
        return ZipfSource(args.zipf, args.length, args.universe)
    if args.input is not None:
        if args.format is None:
            raise ValueError("--input needs --format")
        return FileSource(args.input, args.format)
    raise ValueError("a stream source is required: --zipf ... or --input ...")


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        algo=args.algo,
        k=args.k,
        source=_source_from_args(args),
        k_tilde_factor=args.ktilde_factor,
        epsilon=args.eps,
        delta=args.delta,
        seed=args.seed,
        repeats=args.repeats,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    rows = run_experiment(config, args.out, args.workers, args.timing_strict)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    rows = sweep(config, args.param, args.values, args.out, args.workers, args.timing_strict)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_verify_states(args: argparse.Namespace) -> int:
    if args.k_max < args.k_min:
        raise ValueError("--k-max must be >= --k-min")
    ks = tuple(range(args.k_min, args.k_max + 1))
    relation = (
        neighbors.STATED_TRANSITIONS
        if args.relation == "stated"
        else neighbors.COMPLETED_TRANSITIONS
    )
    total = 0
    if args.exhaustive_universe and args.exhaustive_length:
        result = neighbors.verify_exhaustive(
            args.exhaustive_universe, args.exhaustive_length, ks, relation=relation
        )
        total += result["trajectories"]
        print(f"exhaustive: {result['trajectories']} trajectories, zero violations")
    result = neighbors.verify_random_trials(
        trials=args.trials,
        universe=args.universe,
        length=args.length,
        ks=ks,
        seed=args.seed,
        relation=relation,
    )
    total += result["trajectories"]
    observed = sorted(neighbors.observed_transitions(result["coverage"]))
    print(f"random: {result['trajectories']} trajectories, zero violations")
    print(f"observed transitions: {', '.join(f'{a}->{b}' for a, b in observed)}")
    print(f"verified {total} trajectories total against the {args.relation} relation")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run one experiment configuration")
    _add_run_arguments(run_parser)
    run_parser.set_defaults(func=_cmd_run)

    sweep_parser = sub.add_parser("sweep", help="run a configuration across parameter values")
    _add_run_arguments(sweep_parser)
    sweep_parser.add_argument("--param", required=True, choices=("k", "skew", "eps", "ktilde"))
    sweep_parser.add_argument("--values", required=True, nargs="+", type=float)
    sweep_parser.set_defaults(func=_cmd_sweep)

    verify_parser = sub.add_parser("verify-states", help="verify neighbour-pair state legality")
    verify_parser.add_argument("--universe", type=int, default=16)
    verify_parser.add_argument("--length", type=int, default=200)
    verify_parser.add_argument("--k-min", type=int, default=2)
    verify_parser.add_argument("--k-max", type=int, default=8)
    verify_parser.add_argument("--trials", type=int, default=100_000)
    verify_parser.add_argument("--seed", type=int, default=0)
    verify_parser.add_argument(
        "--exhaustive-universe", type=int, default=0, help="also enumerate all streams up to this universe"
    )
    verify_parser.add_argument(
        "--exhaustive-length", type=int, default=0, help="length bound for the exhaustive pass"
    )
    verify_parser.add_argument(
        "--relation",
        choices=("stated", "completed"),
        default="stated",
        help="transition relation to enforce; 'stated' is refuted by two reachable "
        "moves (S1->S3, S3->S2), 'completed' includes them",
    )
    verify_parser.set_defaults(func=_cmd_verify_states)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except neighbors.StateMachineViolation as violation:
        print(f"state-machine violation: {violation}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ValueError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    sys.exit(main())
