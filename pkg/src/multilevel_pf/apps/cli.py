"""CLI entry point for the ``mlpf`` filtering and benchmark commands.

Usage examples::

    # Simulate an OU dataset with the default config
    mlpf simulate --out runs/ou

    # Plain particle filter at the configured level
    mlpf pf --config ou.json --seed 1 --out runs/ou

    # Multilevel particle filter
    mlpf mlpf --config ou.json --seed 1 --out runs/ou

    # Strong-rate study and cost-versus-MSE benchmark
    mlpf rates --config nlm.json --out runs/nlm
    mlpf bench --config gbm.json --out runs/gbm -v

    # Ground truth: Kalman for OU/GBM, a reference filter otherwise
    mlpf kalman --config ou.json --out runs/ou

    # Re-run from the config embedded in any result file
    mlpf pf --config runs/ou/pf.csv --out runs/ou-again
"""

import argparse
import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeAlias

import numpy as np
import pandas as pd

from multilevel_pf.allocation import level_allocation
from multilevel_pf.config import DEFAULTS, ExperimentConfig, load_config
from multilevel_pf.datasets import (
    ingest_returns,
    read_dataset_csv,
    simulate_dataset,
    synthetic_returns,
    write_dataset_csv,
)
from multilevel_pf.errors import MultilevelPFError
from multilevel_pf.experiment import (
    cost_frame,
    cost_slopes_frame,
    estimate_strong_rates,
    mse_vs_cost,
    pf_particles,
    rate_slopes_frame,
    rates_frame,
    require_levels,
    resolve_truth,
)
from multilevel_pf.mlpf import FILTER_STREAM, mlpf_run
from multilevel_pf.models import Observation
from multilevel_pf.oracle import (
    has_exact_filter,
    kalman_reference,
    reference_pf,
    write_reference_csv,
)
from multilevel_pf.particle_filter import pf_run
from multilevel_pf.rng import StreamFactory
from multilevel_pf.sde.base import DiffusionModel
from multilevel_pf.sde.registry import builtin_model
from multilevel_pf.tables import write_table
from multilevel_pf.version import PACKAGE_VERSION

EXIT_OK = 0
EXIT_ERROR = 2

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

logger = logging.getLogger(__name__)

Command: TypeAlias = Callable[[ExperimentConfig, Path], list[Path]]


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------


def _model(config: ExperimentConfig) -> DiffusionModel[Any]:
    """Build the configured model with its constant overrides."""
    return builtin_model(config.model, config.overrides)


def _observations(
    config: ExperimentConfig, model: DiffusionModel[Any]
) -> tuple[Observation, ...]:
    """Resolve the observation source named by ``config``.

    A ``data`` file wins, then a ``returns`` file. Langevin configs without
    either use the synthetic return series; every other model simulates
    ``observations`` steps at ``truth_level``.
    """
    if config.data is not None:
        return read_dataset_csv(config.data, model).observations
    if config.returns is not None:
        return ingest_returns(config.returns).observations()
    if model.name == "LANGEVIN":
        return synthetic_returns(seed=config.seed).observations()
    return simulate_dataset(
        model, config.observations, config.truth_level, config.seed
    ).observations


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _simulate(config: ExperimentConfig, out: Path) -> list[Path]:
    """Write ``dataset.csv``."""
    model = _model(config)
    dataset = simulate_dataset(model, config.observations, config.truth_level, config.seed)
    return [write_dataset_csv(out / "dataset.csv", dataset, config)]


def _pf(config: ExperimentConfig, out: Path) -> list[Path]:
    """Write ``pf.csv``."""
    model = _model(config)
    observations = _observations(config, model)
    particles = config.particles or pf_particles(config.level)
    rng = StreamFactory(config.seed).generator(config.level, FILTER_STREAM)
    output = pf_run(model, observations, config.level, particles, rng, config.ess_fraction)
    frame = pd.DataFrame(
        {
            "step": np.arange(1, output.steps + 1),
            "predictor": output.predictor_estimates,
            "filter": output.filter_estimates,
            "ess": output.ess,
            "resampled": output.resampled.astype(int),
            "log_normalizing_constant": np.cumsum(output.log_increments),
        }
    )
    return [write_table(out / "pf.csv", frame, config)]


def _mlpf(config: ExperimentConfig, out: Path) -> list[Path]:
    """Write ``mlpf.csv`` and ``mlpf_levels.csv``."""
    model = _model(config)
    observations = _observations(config, model)
    if config.particles is None:
        allocation = level_allocation(config.level, model)
    else:
        allocation = level_allocation(
            config.level, model, "explicit", base_particles=config.particles
        )
    output = mlpf_run(
        model,
        observations,
        allocation,
        StreamFactory(config.seed),
        config.ess_fraction,
        workers=config.workers,
    )
    steps = np.arange(1, len(output.estimates) + 1)
    estimates = pd.DataFrame({"step": steps, "estimate": output.estimates})

    base = output.base
    frames = [
        pd.DataFrame(
            {
                "level": 0,
                "step": steps,
                "increment": base.filter_estimates,
                "coupling": 1.0,
                "coarse_ess": np.nan,
                "particles": base.particles,
            }
        )
    ]
    frames.extend(
        pd.DataFrame(
            {
                "level": item.level,
                "step": steps,
                "increment": item.increments,
                "coupling": item.coupling,
                "coarse_ess": item.coarse_ess,
                "particles": item.particles,
            }
        )
        for item in output.levels
    )
    return [
        write_table(out / "mlpf.csv", estimates, config),
        write_table(out / "mlpf_levels.csv", pd.concat(frames, ignore_index=True), config),
    ]


def _rates(config: ExperimentConfig, out: Path) -> list[Path]:
    """Write ``rates.csv`` and ``slopes.csv``."""
    model = _model(config)
    observations = _observations(config, model)
    rates = estimate_strong_rates(
        model,
        config.level_max,
        config.repetitions,
        config.seed,
        observations=observations,
        particles=config.particles or DEFAULTS.rate_particles,
        min_level=max(1, config.level_min),
        ess_fraction=config.rate_ess_fraction,
        workers=config.workers,
    )
    for series in rates.series():
        for note in series.failures:
            logger.warning("%s", note)
    return [
        write_table(out / "rates.csv", rates_frame(model.name, rates), config),
        write_table(out / "slopes.csv", rate_slopes_frame(model, rates), config),
    ]


def _bench(config: ExperimentConfig, out: Path) -> list[Path]:
    """Write ``cost.csv`` and ``slopes.csv``."""
    model = _model(config)
    observations = _observations(config, model)
    truth = resolve_truth(model, observations, config)
    levels = require_levels(config.level_min, config.level_max)
    methods = ("PF", "MLPF") if config.method == "both" else (config.method,)
    results = [
        mse_vs_cost(
            model,
            method,
            levels,
            config.repetitions,
            truth,
            config.seed,
            observations=observations,
            ess_fraction=config.ess_fraction,
            workers=config.workers,
            record_walltime=config.record_walltime,
        )
        for method in methods
    ]
    for result in results:
        for note in result.failures:
            logger.warning("%s %s: %s", result.model, result.method, note)
    return [
        write_table(out / "cost.csv", cost_frame(results), config),
        write_table(out / "slopes.csv", cost_slopes_frame(results), config),
    ]


def _kalman(config: ExperimentConfig, out: Path) -> list[Path]:
    """Write ``reference.csv``."""
    model = _model(config)
    observations = _observations(config, model)
    if has_exact_filter(model):
        reference = kalman_reference(model, observations)
    else:
        reference = reference_pf(
            model,
            observations,
            config.reference_level,
            config.reference_particles,
            config.seed,
            seeds=config.reference_seeds,
            ess_fraction=config.ess_fraction,
            workers=config.workers,
        )
    return [write_reference_csv(out / "reference.csv", reference, config)]


COMMANDS: dict[str, tuple[Command, str]] = {
    "simulate": (_simulate, "Simulate a synthetic dataset."),
    "pf": (_pf, "Run a single-level particle filter."),
    "mlpf": (_mlpf, "Run the multilevel particle filter."),
    "rates": (_rates, "Estimate strong rates from coupled filters."),
    "bench": (_bench, "Measure cost against MSE for PF and MLPF."),
    "kalman": (_kalman, "Compute ground-truth filter values."),
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    """Construct the CLI argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-c",
        "--config",
        default=None,
        metavar="FILE",
        help="Flat JSON config, or a result CSV whose first line embeds one.",
    )
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Master seed. Overrides the config's 'seed'.",
    )
    common.add_argument(
        "-o",
        "--out",
        default=".",
        metavar="DIR",
        help="Directory for result files (created if missing).",
    )
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress to stderr; repeat for debug output.",
    )

    parser = argparse.ArgumentParser(
        prog="mlpf",
        description="Multilevel particle filters for discretely observed diffusions.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=PACKAGE_VERSION,
        help="Show package version and exit.",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, (_, summary) in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=summary, description=summary)
    return parser


def _configure_logging(verbosity: int) -> None:
    """Send library logs to stderr at a level chosen by ``-v`` repeats."""
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Load the config file, if any, and apply command-line overrides."""
    config = ExperimentConfig() if args.config is None else load_config(args.config)
    return config.with_overrides(seed=args.seed)


# ---------------------------------------------------------------------------
# Main
# ---------------------------------------------------------------------------


def run_cli(argv: list[str] | None = None) -> int:
    """Entry point for the ``mlpf`` command.

    Args:
        argv: Argument list (defaults to sys.argv[1:]).

    Returns:
        Exit code suitable for ``sys.exit``.
    """
    parser = _build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    command, _ = COMMANDS[args.command]

    try:
        config = _resolve_config(args)
        written = command(config, Path(args.out))
    except (OSError, MultilevelPFError) as exc:
        print(f"mlpf: {exc}", file=sys.stderr)
        return EXIT_ERROR

    for path in written:
        print(path, flush=True)
    return EXIT_OK


def main() -> None:
    """Thin wrapper that calls ``sys.exit`` with the CLI return code."""
    sys.exit(run_cli())
