"""Command-line entry point: generate, compose, train, sweep, status, analyze, plot."""

import argparse
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .analysis import analyze_results
from .config import SweepConfig, get_settings, load_config, resolve_output
from .errors import (
    ConfigurationError,
    DomainError,
    ModelFormatError,
    ResultsParseError,
    SelectionError,
    StudyError,
)
from .main import RESULTS_NAME, compose_one, generate, ledger_status, run_sweep, train_one
from .models import CompositionMode, DatasetBudgetSpec
from .reporting import emit_plots
from .utils import add_file_handler, get_logger, load_text, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED_CELLS = 1
EXIT_CONFIG = 2

# Bad settings or bad input files
_INPUT_ERRORS = (
    ConfigurationError, DomainError, ResultsParseError, ModelFormatError, SelectionError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multifid",
        description="Dataset budget and fidelity-mix scaling studies.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML study configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--seed", type=int, help="seed override for this subcommand")
    common.add_argument("--log-level", help="console log level (default from MULTIFID_LOG_LEVEL)")

    cell = argparse.ArgumentParser(add_help=False)
    cell.add_argument("--budget", type=float, required=True, help="dataset budget D_b")
    cell.add_argument("--dc", type=float, required=True, help="high-fidelity share D_c")
    cell.add_argument(
        "--mode", choices=[m.value for m in CompositionMode], help="composition mode"
    )

    results = argparse.ArgumentParser(add_help=False)
    results.add_argument("--results", help=f"results file (default <out>/{RESULTS_NAME})")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="solve the sample pool")
    sub.add_parser("compose", parents=[common, cell], help="compose one training set")
    sub.add_parser("train", parents=[common, cell], help="train and evaluate one cell")
    sub.add_parser("sweep", parents=[common], help="run the budget x composition x seed grid")
    sub.add_parser("status", parents=[common], help="show the sweep ledger")
    sub.add_parser("analyze", parents=[common, results], help="aggregate, fit and judge results")
    sub.add_parser("plot", parents=[common, results], help="write SVG charts")
    return parser


def _apply_seed(config: SweepConfig, command: str, seed: Optional[int]) -> SweepConfig:
    """--seed sets the pool seed for generate and sweep."""
    if seed is None or command not in ("generate", "sweep"):
        return config
    return config.model_copy(update={"pool": config.pool.model_copy(update={"seed": seed})})


def _cell_spec(args, config: SweepConfig) -> tuple[DatasetBudgetSpec, int]:
    mode = CompositionMode(args.mode) if args.mode else config.grid.mode
    try:
        spec = DatasetBudgetSpec(budget_db=args.budget, composition_dc=args.dc, mode=mode)
    except ValueError as e:
        raise ConfigurationError(f"invalid cell: {e}") from e
    seed = args.seed if args.seed is not None else config.grid.seeds[0]
    return spec, seed


def run(args) -> int:
    settings = get_settings()
    setup_logging(args.log_level or settings.log_level)

    config = _apply_seed(load_config(args.config), args.command, args.seed)
    out_dir, workers = resolve_output(config, args.out, args.workers, settings)
    out_dir.mkdir(parents=True, exist_ok=True)
    add_file_handler(out_dir / "logs")
    logger.info(f"multifid {__version__} {args.command}: out={out_dir} workers={workers}")

    if args.command == "generate":
        study = generate(config, out_dir, workers)
        logger.info(f"Pool of {len(study.pool)} pairs in {out_dir}")
        return EXIT_OK

    if args.command == "compose":
        spec, seed = _cell_spec(args, config)
        compose_one(config, out_dir, spec, seed, workers)
        return EXIT_OK

    if args.command == "train":
        spec, seed = _cell_spec(args, config)
        record, model_path = train_one(config, out_dir, spec, seed, workers)
        logger.info(f"mse_u={record.mse_u:.4e} mse_tau={record.mse_tau:.4e} ({model_path})")
        return EXIT_OK

    if args.command == "sweep":
        outcome = run_sweep(config, out_dir, workers)
        for key in outcome.failed:
            logger.error(f"Failed cell: {key}")
        return EXIT_FAILED_CELLS if outcome.failed else EXIT_OK

    if args.command == "status":
        print(ledger_status(out_dir), end="")
        return EXIT_OK

    results_path = Path(args.results) if args.results else out_dir / RESULTS_NAME
    if args.command == "analyze":
        analysis = analyze_results(results_path, out_dir)
        print(load_text(analysis.paths["summary"]) or "", end="")
        return EXIT_OK

    emit_plots(results_path, out_dir / "figures")
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    """Parse arguments, run the subcommand and map errors to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK

    try:
        return run(args)
    except _INPUT_ERRORS as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except StudyError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILED_CELLS


if __name__ == "__main__":
    sys.exit(main())
