"""Command-line driver: one subcommand per experiment, plus shard merging."""
import argparse
import sys
from typing import List, Optional

from ..config.config import Config
from ..models.errors import InvariantViolation
from ..orchestrator.engine import ExperimentEngine
from ..orchestrator.parser import ExperimentConfigParser
from ..orchestrator.results_store import ResultStore
from ..orchestrator.sample_executor import SampleExecutor
from ..utils.logger import ExperimentLogger, configure_logging

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INVARIANT = 2

EXPERIMENTS = {
    "variance-scan": ("run_variance_scan", "Variance of dist(0, v) along a coordinate axis"),
    "circ-scan": ("run_circumference_scan", "Variance of the minimal circumference of torus products"),
    "tail": ("run_tail_estimate", "Exceedance curve of |dist - median| and sub-Gaussian fit"),
    "midpoint": ("run_midpoint_probe", "Probability that the geodesic passes near v/2"),
    "influence-map": ("run_influence_map", "Per-edge geodesic frequencies with and without shift"),
    "check-bool": ("check_boolean", "Hypercube inequality campaign (JSON report)"),
    "check-lemma": ("check_lemma", "Exact audit of the staircase level distribution (JSON report)"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpp", description="First passage percolation variance toolkit")
    parser.add_argument("--log-level", default=None, help="Overrides FPP_LOG_LEVEL")
    parser.add_argument("--log-format", choices=["json", "console"], default=None, help="Overrides FPP_LOG_FORMAT")
    subcommands = parser.add_subparsers(dest="command", required=True)

    for name, (_, description) in EXPERIMENTS.items():
        sub = subcommands.add_parser(name, help=description, description=description)
        sub.add_argument("--config", help="YAML or JSON experiment file")
        sub.add_argument("--seed", type=int, help="Overrides the config seed")
        sub.add_argument("--samples", type=int, help="Overrides the config sample count")
        sub.add_argument("--shard", help="Shard i/k: this process owns the i-th of k sample blocks")
        sub.add_argument("--out", help="Output path; stdout when omitted")
        sub.add_argument("--workers", type=int, help="Worker processes (default FPP_WORKERS)")

    merge = subcommands.add_parser("merge", help="Exact merge of shard artifacts")
    merge.add_argument("paths", nargs="*", help="Shard artifacts of one experiment")
    merge.add_argument("--out", help="Output path; stdout when omitted")
    return parser


def _run(args: argparse.Namespace) -> str:
    store = ResultStore()
    if args.command == "merge":
        artifact = store.merge_shards(args.paths, out=args.out)
        return store.write(artifact, args.out)

    parser = ExperimentConfigParser()
    if args.config:
        config = parser.parse_file(args.config, kind=args.command)
    else:
        config = parser.parse({}, kind=args.command)
    config = parser.apply_overrides(config, seed=args.seed, samples=args.samples, shard=args.shard, out=args.out)

    workers = args.workers if args.workers is not None else Config.WORKERS
    engine = ExperimentEngine(executor=SampleExecutor(workers, Config.CHUNK_SIZE), store=store)
    method, _ = EXPERIMENTS[args.command]
    outcome = getattr(engine, method)(config)
    if isinstance(outcome, dict):
        return store.write_report(outcome)
    return store.render(outcome)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_format)
    logger = ExperimentLogger(component="cli")
    try:
        Config.validate()
        text = _run(args)
    except InvariantViolation as e:
        logger.log_error("cli", args.command, str(e))
        print(f"invariant violated: {e}", file=sys.stderr)
        if e.report is not None and getattr(args, "out", None) is None:
            sys.stdout.write(ResultStore().write_report(e.report))
        return EXIT_INVARIANT
    except (ValueError, FileNotFoundError) as e:
        logger.log_error("cli", args.command, str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    if getattr(args, "out", None) is None:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
