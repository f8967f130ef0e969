"""Command-line front end for the sequential steering simulator."""

import argparse
import io
import logging
import sys

from . import protocol
from .analytic import correlation_tables
from .constants import (
    DEFAULT_SEED,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_USAGE,
    VERIFY_TOLERANCE,
    VERIFY_TRIALS,
)
from .density import joint_distribution
from .experiments import EXPERIMENTS, SCENARIOS, bundled_scenario, reproduce_all
from .inequalities import evaluate_all
from .model import DomainError, InfeasibleError, SteeringError
from .optimizer import (
    FREE,
    PLATONIC,
    Budget,
    conjecture_probe,
    lambda_grid,
    maximize,
    sweep_lambda,
)
from .verify import run_suite

logger = logging.getLogger(__name__)


def _budget(text):
    try:
        return Budget.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid(text):
    try:
        start, stop, step = (float(part) for part in text.split(","))
        return lambda_grid(start, stop, step)
    except (ValueError, DomainError) as exc:
        message = f"grid must look like START,STOP,STEP: {exc}"
        raise argparse.ArgumentTypeError(message) from None


def _choices(text):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        message = f"choices must be comma-separated ints: {text!r}"
        raise argparse.ArgumentTypeError(message) from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="steering-chain",
        description="Sequential unsharp steering: one Alice, a chain of Bobs",
    )
    level = parser.add_mutually_exclusive_group()
    level.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    level.add_argument("-q", "--quiet", action="store_true", help="Warnings only")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="Write the report here instead of stdout")
    common.add_argument(
        "--format",
        choices=protocol.FORMATS,
        default=protocol.FORMAT_JSON,
        help="Report format (default json-text)",
    )
    common.add_argument(
        "--seed", type=int, help="Random seed (default: the config's seed, else 0)"
    )

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--budget", type=_budget, help="Restarts and iterations as R,I")
    search.add_argument(
        "--workers", type=int, default=1, help="Processes for parallel restarts"
    )

    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="Evaluate a scenario")
    run.add_argument(
        "--config", required=True, help=f"Scenario file or bundled name {sorted(SCENARIOS)}"
    )
    run.add_argument(
        "--distribution",
        type=_choices,
        metavar="X,Y1,...",
        help="Also dump the joint outcome distribution for these setting indices",
    )

    opt = sub.add_parser(
        "optimize", parents=[common, search], help="Maximize a Bob's steering value"
    )
    opt.add_argument("--config", required=True, help="Problem file")

    sweep = sub.add_parser("sweep", parents=[common, search], help="Sweep one sharpness")
    sweep.add_argument("--config", required=True, help="Problem file")
    sweep.add_argument("--bob", type=int, required=True, help="Bob whose lambda is swept")
    sweep.add_argument(
        "--grid", type=_grid, required=True, metavar="START,STOP,STEP", help="Inclusive grid"
    )

    verify = sub.add_parser("verify", parents=[common], help="Run the property suite")
    verify.add_argument("--trials", type=int, default=VERIFY_TRIALS)
    verify.add_argument("--tolerance", type=float, default=VERIFY_TOLERANCE)

    conj = sub.add_parser(
        "conjecture", parents=[common, search], help="How many Bobs share CJWR steering"
    )
    conj.add_argument("--settings", type=int, required=True, help="Settings per party")
    conj.add_argument("--bobs", type=int, required=True, help="Chain length")
    conj.add_argument("--family", choices=(FREE, PLATONIC), default=FREE)

    rep = sub.add_parser(
        "reproduce-all", parents=[common, search], help="Run every pinned experiment"
    )
    rep.add_argument(
        "--only",
        nargs="+",
        choices=[spec.name for spec in EXPERIMENTS],
        help="Run just these experiments",
    )
    return parser


def configure_logging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        logger.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _seed(args):
    return DEFAULT_SEED if args.seed is None else args.seed


def _csv(writer, *items):
    buf = io.StringIO()
    writer(*items, buf)
    return buf.getvalue()


# --- Subcommands ---


def _scenario(config):
    if config in SCENARIOS:
        return bundled_scenario(config)
    return protocol.load_scenario(config)


def cmd_run(args):
    scenario = _scenario(args.config)
    tables = correlation_tables(scenario)
    evaluations = evaluate_all(tables)
    dist = None
    if args.distribution is not None:
        dist = joint_distribution(scenario, args.distribution[0], args.distribution[1:])
    if args.format == protocol.FORMAT_CSV:
        text = _csv(protocol.write_evaluations_csv, evaluations)
        for table in tables:
            text += f"\n# correlation table, Bob {table.bob_index}\n"
            text += _csv(protocol.write_table_csv, table)
        if dist is not None:
            text += "\n" + _csv(protocol.write_distribution_csv, dist)
    else:
        report = {
            "scenario": protocol.serialize_scenario(scenario),
            "tables": [protocol.serialize_table(t) for t in tables],
            "evaluations": [protocol.serialize_evaluation(e) for e in evaluations],
        }
        if dist is not None:
            report["distribution"] = [
                {"outcomes": list(o), "probability": p} for o, p in dist.rows()
            ]
        text = protocol.encode(report)
    emit(args, text)
    return EXIT_OK


def _argmax_evaluations(scenario, cjwr_limit):
    return evaluate_all(correlation_tables(scenario), cjwr_limit)


def cmd_optimize(args):
    problem, budget, seed = protocol.load_problem(args.config)
    if args.budget is not None:
        budget = args.budget
    if args.seed is not None:
        seed = args.seed
    try:
        result = maximize(problem, budget, seed, args.workers)
    except InfeasibleError as exc:
        logger.error("%s (residuals %s)", exc, exc.residuals)
        if exc.best is not None:
            emit(args, protocol.encode(protocol.serialize_result(exc.best)))
        return EXIT_FAILURE
    if args.format == protocol.FORMAT_CSV:
        text = _csv(
            protocol.write_evaluations_csv,
            _argmax_evaluations(result.argmax, problem.cjwr_limit),
        )
    else:
        text = protocol.encode(protocol.serialize_result(result))
    emit(args, text)
    return EXIT_OK


def cmd_sweep(args):
    problem, budget, seed = protocol.load_problem(args.config)
    if args.budget is not None:
        budget = args.budget
    if args.seed is not None:
        seed = args.seed
    result = sweep_lambda(problem, args.bob, args.grid, budget, seed)
    if args.format == protocol.FORMAT_CSV:
        text = _csv(protocol.write_sweep_csv, result)
    else:
        text = protocol.encode(protocol.serialize_sweep(result))
    emit(args, text)
    return EXIT_OK


def cmd_verify(args):
    report = run_suite(args.trials, _seed(args), args.tolerance)
    if args.format == protocol.FORMAT_CSV:
        text = _csv(protocol.write_verify_csv, report)
    else:
        text = protocol.encode(protocol.serialize_verify(report))
    emit(args, text)
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_conjecture(args):
    table = conjecture_probe(
        args.settings, args.bobs, args.family, args.budget, _seed(args), args.workers
    )
    if args.format == protocol.FORMAT_CSV:
        text = _csv(
            protocol.write_evaluations_csv,
            _argmax_evaluations(table.result.argmax, table.bound),
        )
    else:
        text = protocol.encode(protocol.serialize_conjecture(table))
    emit(args, text)
    return EXIT_OK


def cmd_reproduce_all(args):
    outcomes = reproduce_all(args.only, args.budget, args.seed)
    if args.format == protocol.FORMAT_CSV:
        text = _csv(protocol.write_outcomes_csv, outcomes)
    else:
        text = protocol.encode(
            {
                "passed": all(o.passed for o in outcomes),
                "experiments": [protocol.serialize_outcome(o) for o in outcomes],
            }
        )
    emit(args, text)
    failed = [o.spec.name for o in outcomes if not o.passed]
    if failed:
        logger.error("missed pinned values: %s", ", ".join(failed))
        return EXIT_FAILURE
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "conjecture": cmd_conjecture,
    "reproduce-all": cmd_reproduce_all,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)
    try:
        return COMMANDS[args.command](args)
    except InfeasibleError as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE
    except SteeringError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
