# /// script
# requires-python = ">=3.11"
# dependencies = ["numpy", "pandas", "scipy", "typing-extensions"]
# ///
"""Run the strong-rate and cost-versus-MSE studies for every built-in model.

Writes ``rates.csv``, ``rate_slopes.csv``, ``cost.csv`` and ``cost_slopes.csv``
covering all models, plus a one-line summary per model on stdout.

Example:
    uv run benchmark/desk_scale.py --output benchmark/output --workers 8
    uv run benchmark/desk_scale.py --models OU NLM --rate-level-max 5 --repetitions 20
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any

REPO_ROOT = Path(__file__).resolve().parents[1]
SRC_ROOT = REPO_ROOT / "src"
if str(SRC_ROOT) not in sys.path:
    sys.path.insert(0, str(SRC_ROOT))

import pandas as pd  # noqa: E402

from multilevel_pf.config import DEFAULTS, ExperimentConfig  # noqa: E402
from multilevel_pf.datasets import simulate_dataset, synthetic_returns  # noqa: E402
from multilevel_pf.experiment import (  # noqa: E402
    cost_frame,
    cost_slopes_frame,
    estimate_strong_rates,
    mse_vs_cost,
    rate_slopes_frame,
    rates_frame,
    resolve_truth,
    strong_rate_prediction,
)
from multilevel_pf.models import Observation  # noqa: E402
from multilevel_pf.sde import builtin_model, builtin_names  # noqa: E402
from multilevel_pf.sde.base import DiffusionModel  # noqa: E402
from multilevel_pf.tables import write_table  # noqa: E402

logger = logging.getLogger("desk_scale")


def parse_args() -> argparse.Namespace:
    """Parse command-line arguments."""
    parser = argparse.ArgumentParser(
        description="Measure strong rates and cost against MSE for PF and MLPF."
    )
    parser.add_argument(
        "--models",
        nargs="+",
        default=list(builtin_names()),
        help="Models to study.",
    )
    parser.add_argument(
        "--rate-level-max",
        type=int,
        default=DEFAULTS.rate_level_max,
        help="Finest level of the strong-rate study.",
    )
    parser.add_argument(
        "--cost-level-max",
        type=int,
        default=DEFAULTS.cost_level_max,
        help="Finest level of the cost study.",
    )
    parser.add_argument(
        "--repetitions",
        type=int,
        default=50,
        help="Independent runs per level.",
    )
    parser.add_argument(
        "--observations",
        type=int,
        default=DEFAULTS.synthetic_observations,
        help="Synthetic observations per model (Langevin uses the return window).",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Master seed.",
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Process-pool size. Defaults to MLPF_WORKERS or 1.",
    )
    parser.add_argument(
        "--output",
        default="benchmark/output",
        help="Output directory.",
    )
    return parser.parse_args()


def observations_for(
    model: DiffusionModel[Any], config: ExperimentConfig
) -> tuple[Observation, ...]:
    """Return the synthetic data set each model is studied on."""
    if model.name == "LANGEVIN":
        return synthetic_returns(seed=config.seed).observations()
    return simulate_dataset(
        model, config.observations, config.truth_level, config.seed
    ).observations


def study_model(
    name: str, args: argparse.Namespace
) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    """Run both studies for one model and return their four tables."""
    config = ExperimentConfig(
        model=name,
        observations=args.observations,
        seed=args.seed,
        repetitions=args.repetitions,
        level_max=args.cost_level_max,
        workers=args.workers,
    )
    model = builtin_model(name)
    observations = observations_for(model, config)

    started = time.perf_counter()
    rates = estimate_strong_rates(
        model,
        args.rate_level_max,
        config.repetitions,
        config.seed,
        observations=observations,
        workers=config.workers,
    )
    logger.info("%s rates done in %.1fs", name, time.perf_counter() - started)

    truth = resolve_truth(model, observations, config)
    results = [
        mse_vs_cost(
            model,
            method,
            range(config.level_min, config.level_max + 1),
            config.repetitions,
            truth,
            config.seed,
            observations=observations,
            workers=config.workers,
        )
        for method in ("PF", "MLPF")
    ]
    logger.info("%s cost study done in %.1fs", name, time.perf_counter() - started)

    for result in results:
        for note in result.failures:
            logger.warning("%s %s: %s", name, result.method, note)
    costs = ", ".join(
        f"{result.method} cost slope {result.slope:.2f} (predicted {result.predicted_slope:.2f})"
        for result in results
    )
    print(
        f"{name}: variance slope {rates.variance.slope:.2f}, "
        f"coupling slope {rates.coupling.slope:.2f} "
        f"(predicted {strong_rate_prediction(model):.2f}), {costs}",
        flush=True,
    )
    return (
        rates_frame(name, rates),
        rate_slopes_frame(model, rates),
        cost_frame(results),
        cost_slopes_frame(results),
    )


def main() -> None:
    """Run every requested model and write the combined tables."""
    args = parse_args()
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    output = Path(args.output)
    tables: list[list[pd.DataFrame]] = [[], [], [], []]
    for name in args.models:
        for bucket, frame in zip(tables, study_model(name.upper(), args), strict=True):
            bucket.append(frame)

    names = ("rates.csv", "rate_slopes.csv", "cost.csv", "cost_slopes.csv")
    for name, frames in zip(names, tables, strict=True):
        path = write_table(output / name, pd.concat(frames, ignore_index=True))
        print("Table written:", path)


if __name__ == "__main__":
    main()
