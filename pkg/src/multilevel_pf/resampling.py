"""Weight normalization, effective sample size, and index resampling.

Indices are 0-based. Both resamplers draw every uniform they may need before
branching, so the number of draws taken from a stream depends only on the
cloud size.
"""

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.special import logsumexp

from .config import DEFAULTS
from .errors import ContractError, DegenerateWeightsError
from .sde.base import FloatArray

IndexArray = npt.NDArray[np.intp]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CoupledIndices:
    """Ancestor indices for the fine (``first``) and coarse (``second``) clouds.

    ``coupled[k]`` is true when pair ``k`` took the common-ancestor branch, in
    which case ``first[k] == second[k]``.
    """

    first: IndexArray
    second: IndexArray
    coupled: npt.NDArray[np.bool_]
    probability: float


def normalize_weights(log_unnormalized: npt.ArrayLike) -> FloatArray:
    """Turn log weights into normalized weights without overflow.

    Raises:
        ContractError: The input is empty or holds NaN.
        DegenerateWeightsError: Every weight is zero, or one is infinite.
    """
    log_weights = np.asarray(log_unnormalized, dtype=np.float64)
    if log_weights.size == 0:
        raise ContractError("cannot normalize an empty weight vector")
    if np.any(np.isnan(log_weights)):
        raise ContractError("log weights must not be NaN")
    peak = float(np.max(log_weights))
    if peak == -np.inf:
        raise DegenerateWeightsError("all importance weights are zero")
    if peak == np.inf:
        raise DegenerateWeightsError("an importance weight is infinite")
    weights = np.exp(log_weights - peak)
    return weights / weights.sum()


def log_evidence_increment(
    log_weights: npt.ArrayLike, log_potentials: npt.ArrayLike
) -> float:
    """Return ``log sum_i w_i G_i`` for weights normalized from ``log_weights``.

    This is the log of one factor ``eta_p(G_p)`` of the normalizing-constant
    product; with uniform weights it is the log mean of ``G``.
    """
    previous = np.asarray(log_weights, dtype=np.float64)
    updated = previous + np.asarray(log_potentials, dtype=np.float64)
    return float(logsumexp(updated) - logsumexp(previous))


def ess(weights: npt.ArrayLike) -> float:
    """Return the effective sample size ``1 / sum w_i^2``."""
    values = np.asarray(weights, dtype=np.float64)
    return float(1.0 / np.sum(values * values))


def _categorical(probabilities: FloatArray, uniforms: FloatArray) -> IndexArray:
    """Map uniforms through the cumulative sum of unnormalized ``probabilities``."""
    cumulative = np.cumsum(probabilities)
    total = cumulative[-1]
    indices = np.searchsorted(cumulative, uniforms * total, side="right")
    return np.minimum(indices, len(probabilities) - 1)


def multinomial_resample(
    weights: npt.ArrayLike,
    rng: np.random.Generator,
    size: int | None = None,
) -> IndexArray:
    """Draw ``size`` (default ``N``) i.i.d. indices with ``P(i) = w_i``."""
    values = np.asarray(weights, dtype=np.float64)
    count = len(values) if size is None else size
    return _categorical(values, rng.random(count))


def _check_pair(first: npt.ArrayLike, second: npt.ArrayLike) -> tuple[FloatArray, FloatArray]:
    """Return both weight vectors as arrays of equal length."""
    w1 = np.asarray(first, dtype=np.float64)
    w2 = np.asarray(second, dtype=np.float64)
    if w1.shape != w2.shape:
        raise ContractError(
            f"weight vectors differ in length: {w1.shape} vs {w2.shape}"
        )
    return w1, w2


def coupling_probability(first: npt.ArrayLike, second: npt.ArrayLike) -> float:
    """Return ``alpha = sum_i min(w1_i, w2_i)``, clipped into ``[0, 1]``.

    Computed as ``1 - sum_i |w1_i - w2_i| / 2``, equal to the sum of minima
    for normalized weights and exactly 1 for identical vectors.

    Raises:
        ContractError: The vectors differ in length.
    """
    w1, w2 = _check_pair(first, second)
    return float(np.clip(1.0 - 0.5 * np.abs(w1 - w2).sum(), 0.0, 1.0))


def coupled_resample(
    first: npt.ArrayLike,
    second: npt.ArrayLike,
    rng: np.random.Generator,
    size: int | None = None,
) -> CoupledIndices:
    """Draw index pairs from the maximal coupling of ``first`` and ``second``.

    With probability ``alpha`` a pair shares one index drawn from
    ``min(w1, w2) / alpha``; otherwise each index is drawn independently from
    its residual ``w_j - min(w1, w2)``. Each residual is renormalized by its own
    sum. When ``alpha`` is within ``coupling_tolerance`` of 1 every pair is
    common, and within the tolerance of 0 every pair is independent.

    Raises:
        ContractError: The vectors differ in length.
    """
    w1, w2 = _check_pair(first, second)
    count = len(w1) if size is None else size
    tolerance = DEFAULTS.coupling_tolerance

    overlap = np.minimum(w1, w2)
    alpha = float(np.clip(overlap.sum(), 0.0, 1.0))
    branch_uniforms = rng.random(count)
    common_uniforms = rng.random(count)
    first_uniforms = rng.random(count)
    second_uniforms = rng.random(count)

    if alpha >= 1.0 - tolerance:
        coupled = np.ones(count, dtype=bool)
    elif alpha <= tolerance:
        coupled = np.zeros(count, dtype=bool)
    else:
        coupled = branch_uniforms < alpha

    if alpha > tolerance:
        common = _categorical(overlap, common_uniforms)
    else:
        common = np.zeros(count, dtype=np.intp)
    if alpha < 1.0 - tolerance:
        first_residual = _categorical(np.maximum(w1 - overlap, 0.0), first_uniforms)
        second_residual = _categorical(np.maximum(w2 - overlap, 0.0), second_uniforms)
    else:
        first_residual = second_residual = common

    logger.debug("coupled resample: alpha=%.6f, common=%d/%d", alpha, coupled.sum(), count)
    return CoupledIndices(
        first=np.where(coupled, common, first_residual),
        second=np.where(coupled, common, second_residual),
        coupled=coupled,
        probability=alpha,
    )


def weighted_mean(weights: npt.ArrayLike, values: npt.ArrayLike) -> float:
    """Return ``sum_i w_i v_i / sum_i w_i``; zero total weight gives 0.

    A constant ``values`` vector returns that constant exactly.
    """
    w = np.asarray(weights, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    total = np.sum(w)
    if total == 0.0:
        return 0.0
    if v.size and np.all(v == v.flat[0]):
        return float(v.flat[0])
    return float(np.sum(w * v) / total)
