"""CSV result tables with an embedded config line."""

import io
from pathlib import Path

import pandas as pd

from .config import CONFIG_LINE_PREFIX, ExperimentConfig


def render_table(frame: pd.DataFrame, config: ExperimentConfig | None = None) -> str:
    """Render ``frame`` as CSV text, prefixed by ``# config: {...}`` when given."""
    body = frame.to_csv(index=False, lineterminator="\n", na_rep="nan")
    if config is None:
        return body
    return f"{CONFIG_LINE_PREFIX}{config.to_json()}\n{body}"


def write_table(
    path: str | Path, frame: pd.DataFrame, config: ExperimentConfig | None = None
) -> Path:
    """Write ``frame`` to ``path`` as UTF-8 CSV with LF line endings."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        handle.write(render_table(frame, config))
    return target


def read_table(path: str | Path) -> pd.DataFrame:
    """Read a CSV table, skipping a leading config line if present.

    Raises:
        FileNotFoundError: ``path`` does not exist.
    """
    source = Path(path)
    if not source.is_file():
        raise FileNotFoundError(f"{source}: No such file")
    text = source.read_text(encoding="utf-8")
    if text.startswith(CONFIG_LINE_PREFIX):
        text = text.split("\n", 1)[1] if "\n" in text else ""
    return pd.read_csv(io.StringIO(text), float_precision="round_trip")
