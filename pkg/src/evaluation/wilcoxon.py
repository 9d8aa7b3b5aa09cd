"""
Two-sided Wilcoxon signed-rank test.

Zero differences are dropped and tied magnitudes share their average rank.
Up to EXACT_LIMIT non-zero pairs the null distribution is enumerated exactly
(counting sign assignments over doubled ranks, which stay integral under
ties); above it a normal approximation with tie and continuity correction
is used.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

from src.errors import EvaluationError

logger = logging.getLogger(__name__)

EXACT_LIMIT = 25
RECOMMENDED_PAIRS = 5


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # min(W+, W-)
    p_value: float
    n: int  # non-zero differences
    w_plus: float
    method: str  # exact | normal


def signed_rank_counts(doubled_ranks) -> np.ndarray:
    """counts[s] = number of sign assignments whose positive doubled-rank sum is s."""
    total = int(np.sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for rank in doubled_ranks:
        rank = int(rank)
        shifted = np.zeros_like(counts)
        shifted[rank:] = counts[: total + 1 - rank]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(a, b) -> WilcoxonResult:
    """
    Test whether paired samples ``a`` and ``b`` differ in location.

    Returns:
        WilcoxonResult with the two-sided p-value
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise EvaluationError(f"paired samples must be 1-d of equal length, got {a.shape} and {b.shape}")

    diff = a - b
    diff = diff[diff != 0]
    n = len(diff)
    if n == 0:
        raise EvaluationError("degenerate comparison")
    if n < RECOMMENDED_PAIRS:
        logger.warning(f"Wilcoxon test on only {n} non-zero differences")

    ranks = rankdata(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    total = w_plus + w_minus

    if n <= EXACT_LIMIT:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = signed_rank_counts(doubled)
        sums = np.arange(len(counts))
        observed = int(round(2 * w_plus))
        doubled_total = int(doubled.sum())
        # as or more extreme than observed, both tails
        extreme = np.abs(2 * sums - doubled_total) >= abs(2 * observed - doubled_total)
        p_value = float(counts[extreme].sum() / counts.sum())
        method = "exact"
    else:
        _, tie_counts = np.unique(ranks, return_counts=True)
        mean = total / 2.0
        variance = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
        deviation = max(abs(w_plus - mean) - 0.5, 0.0)
        p_value = float(2.0 * norm.sf(deviation / np.sqrt(variance))) if variance > 0 else 1.0
        method = "normal"

    return WilcoxonResult(
        statistic=min(w_plus, w_minus),
        p_value=min(1.0, p_value),
        n=n,
        w_plus=w_plus,
        method=method,
    )
