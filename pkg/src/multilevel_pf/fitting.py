"""Log-log regression helpers shared by rate and cost studies."""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy import stats

from .errors import ContractError, DomainError

MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class LogLogFit:
    """Ordinary least-squares fit of ``ln y = slope * ln x + intercept``."""

    slope: float
    intercept: float
    stderr: float
    points: int


def fit_loglog(x: npt.ArrayLike, y: npt.ArrayLike) -> LogLogFit:
    """Fit a power law through positive ``(x, y)`` pairs.

    Raises:
        ContractError: Fewer than three points, or mismatched lengths.
        DomainError: A coordinate is not a positive finite number.
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ContractError("x and y must have equal lengths")
    if len(xs) < MIN_FIT_POINTS:
        raise ContractError(f"a log-log fit needs at least {MIN_FIT_POINTS} points")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise DomainError("log-log fits need finite values")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise DomainError("log-log fits need strictly positive values")
    result = stats.linregress(np.log(xs), np.log(ys))
    return LogLogFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        stderr=float(result.stderr),
        points=len(xs),
    )


def fit_loglog_slope(points: Iterable[Sequence[float]]) -> tuple[float, float]:
    """Return ``(slope, intercept)`` of the log-log fit through ``points``."""
    pairs = [(float(px), float(py)) for px, py in points]
    fit = fit_loglog([px for px, _ in pairs], [py for _, py in pairs])
    return fit.slope, fit.intercept


def positive_points(
    x: npt.ArrayLike, y: npt.ArrayLike
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return the ``(x, y)`` pairs with positive finite ``y`` and their mask."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    keep = np.isfinite(ys) & (ys > 0.0)
    return xs[keep], ys[keep], keep
