"""Synthetic observation datasets and real return-series ingestion."""

import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .config import CONFIG_LINE_PREFIX, DEFAULTS, ExperimentConfig
from .errors import ContractError, IngestionError
from .kernels import simulate_transition
from .models import Dataset, ReturnSeries, observations_from_values
from .rng import StreamFactory
from .sde.base import DiffusionModel
from .sde.registry import builtin_model
from .tables import read_table, write_table

logger = logging.getLogger(__name__)

DATA_STREAM = "data"
PRICE_COLUMN = "price"
RETURN_COLUMN = "log_return"
DATE_COLUMN = "date"
NORMALIZATION_TOLERANCE = 1e-12


def simulate_dataset(
    model: DiffusionModel[Any],
    n: int,
    truth_level: int = DEFAULTS.truth_level,
    seed: int = 0,
) -> Dataset:
    """Simulate a latent path at ``truth_level`` and draw ``y_k ~ G(., x_k)``.

    The path and the observation noise share the ``"data"`` stream of ``seed``.

    Raises:
        ContractError: ``n < 1`` or ``truth_level < 0``.
    """
    if n < 1:
        raise ContractError("a dataset needs at least one observation")
    if truth_level < 0:
        raise ContractError("truth_level must be non-negative")
    rng = StreamFactory(seed).generator(DATA_STREAM)
    state = np.array([model.initial_state])
    latent = np.empty(n)
    values = np.empty(n)
    for position in range(n):
        state = simulate_transition(model, state, truth_level, rng)
        latent[position] = state[0]
        values[position] = model.sample_observation(state, rng)[0]
    logger.info("simulated %d %s observations at level %d", n, model.name, truth_level)
    return Dataset(
        model=model.name,
        observations=observations_from_values(values),
        latent=latent,
        obs_interval=model.obs_interval,
    )


def dataset_frame(dataset: Dataset) -> pd.DataFrame:
    """Return the ``step,time,y,x`` table of a dataset."""
    return pd.DataFrame(
        {
            "step": np.arange(1, len(dataset.observations) + 1),
            "time": dataset.times,
            "y": dataset.values,
            "x": dataset.latent,
        }
    )


def write_dataset_csv(
    path: str | Path, dataset: Dataset, config: ExperimentConfig | None = None
) -> Path:
    """Persist observations and latent states as ``dataset.csv``."""
    return write_table(path, dataset_frame(dataset), config)


def read_dataset_csv(path: str | Path, model: DiffusionModel[Any]) -> Dataset:
    """Load a dataset written by :func:`write_dataset_csv`.

    The ``x`` column is optional; missing latent states read as NaN.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        IngestionError: The ``y`` column is missing or not numeric.
    """
    frame = read_table(path)
    if "y" not in frame.columns:
        raise IngestionError(f"{path}: dataset needs a 'y' column")
    values = pd.to_numeric(frame["y"], errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise IngestionError(f"{path}: unparseable observation", row=_file_row(path, bad[0]))
    latent = (
        frame["x"].to_numpy(dtype=np.float64)
        if "x" in frame.columns
        else np.full(len(values), np.nan)
    )
    return Dataset(
        model=model.name,
        observations=observations_from_values(values),
        latent=latent,
        obs_interval=model.obs_interval,
    )


def _file_row(path: str | Path, data_index: int) -> int:
    """Map a 0-based data row to its 1-based line in the file."""
    header_lines = 2 if _has_config_line(path) else 1
    return int(data_index) + header_lines + 1


def _has_config_line(path: str | Path) -> bool:
    """Return whether the file opens with an embedded config line."""
    with Path(path).open(encoding="utf-8") as handle:
        return handle.readline().startswith(CONFIG_LINE_PREFIX)


def normalize_returns(values: np.ndarray) -> np.ndarray:
    """Divide by the population standard deviation.

    Raises:
        IngestionError: The series is constant.
    """
    spread = float(np.std(values))
    if spread == 0.0:
        raise IngestionError("returns have zero variance")
    if abs(spread - 1.0) <= NORMALIZATION_TOLERANCE:
        return values.copy()
    return values / spread


def ingest_returns(path: str | Path) -> ReturnSeries:
    """Read daily prices or log returns and normalize to unit variance.

    The file must hold a ``price`` or a ``log_return`` column; a ``date``
    column is passed through as opaque labels. Prices become
    ``r_k = ln(p_k / p_(k-1))``.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        IngestionError: Missing columns, unparseable or non-positive values,
            or fewer than 3 prices / 2 returns. Row numbers are 1-based file
            lines.
    """
    frame = read_table(path)
    if PRICE_COLUMN in frame.columns:
        column, minimum = PRICE_COLUMN, 3
    elif RETURN_COLUMN in frame.columns:
        column, minimum = RETURN_COLUMN, 2
    else:
        raise IngestionError(
            f"{path}: expected a '{PRICE_COLUMN}' or '{RETURN_COLUMN}' column"
        )
    if len(frame) < minimum:
        raise IngestionError(
            f"{path}: need at least {minimum} {column} rows, got {len(frame)}"
        )
    raw = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(raw))
    if bad.size:
        raise IngestionError(
            f"unparseable {column} {frame[column].iloc[bad[0]]!r}",
            row=_file_row(path, bad[0]),
        )
    if DATE_COLUMN in frame.columns:
        labels = tuple(str(item) for item in frame[DATE_COLUMN])
    else:
        labels = tuple(str(index) for index in range(1, len(frame) + 1))

    if column == PRICE_COLUMN:
        non_positive = np.flatnonzero(raw <= 0.0)
        if non_positive.size:
            raise IngestionError(
                f"price must be positive, got {raw[non_positive[0]]}",
                row=_file_row(path, non_positive[0]),
            )
        returns = np.diff(np.log(raw))
        labels = labels[1:]
    else:
        returns = raw
    try:
        values = normalize_returns(returns)
    except IngestionError as exc:
        raise IngestionError(f"{path}: {exc}") from exc
    return ReturnSeries(dates=labels, values=values)


def synthetic_returns(
    n: int = DEFAULTS.synthetic_returns_length, seed: int = 0
) -> ReturnSeries:
    """Simulate Langevin stochastic-volatility returns normalized to unit variance.

    Stands in for a daily index return series of the same length.
    """
    model = builtin_model("LANGEVIN")
    dataset = simulate_dataset(model, n, truth_level=DEFAULTS.truth_level, seed=seed)
    values = normalize_returns(dataset.values)
    return ReturnSeries(
        dates=tuple(str(index) for index in range(1, n + 1)),
        values=values,
    )


def returns_frame(series: ReturnSeries) -> pd.DataFrame:
    """Return the ``date,log_return`` table of a return series."""
    return pd.DataFrame({DATE_COLUMN: list(series.dates), RETURN_COLUMN: series.values})
