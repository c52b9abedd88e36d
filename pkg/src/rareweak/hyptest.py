"""Global tests of "pure noise" against the rare/weak signal model.

Three statistics, each with a fixed rejection threshold (no data-driven
tuning):

* simple_agg_test      - chi-square of the column-average vector,
  standardized; rejects when it clears 2 sqrt(2 log p).
* sparse_agg_test      - scaled L1 value of the best N-column
  aggregation, against a folded-normal concentration level.
* higher_criticism_test - sorted column P-values compared with uniform
  quantiles, maximized over the lower half order statistics.

All three depend on the data only through column norms or column sums,
so they are invariant under row permutations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cluster import sparse_aggregation_exact, sparse_aggregation_greedy
from .numerics import chisq_sf_vec
from .spectral import chi2_scores

__all__ = [
    "TestOutcome",
    "simple_agg_test",
    "sparse_agg_test",
    "higher_criticism_test",
    "hc_statistic",
    "column_pvalues",
]


@dataclass
class TestOutcome:
    statistic: float
    threshold: float
    reject: bool
    method: str

    def __post_init__(self):
        if self.reject != (self.statistic >= self.threshold):
            raise ValueError("reject flag inconsistent with statistic/threshold")


def _outcome(stat: float, threshold: float, method: str) -> TestOutcome:
    return TestOutcome(statistic=stat, threshold=threshold, reject=stat >= threshold, method=method)


def simple_agg_test(X: np.ndarray) -> TestOutcome:
    """Standardized squared norm of the column average.

    xbar = (1/p) sum_j x_j has null law N(0, I_n / p), so
    p ||xbar||^2 is chi-square with n degrees of freedom; the statistic
    (p ||xbar||^2 - n) / sqrt(2n) is compared with 2 sqrt(2 log p).
    """
    n, p = X.shape
    xbar = X.mean(axis=1)
    stat = (p * float(xbar @ xbar) - n) / math.sqrt(2 * n)
    return _outcome(stat, 2.0 * math.sqrt(2 * math.log(p)), "agg_chi2")


def sparse_agg_test(
    X: np.ndarray,
    N: int,
    greedy: bool = False,
    budget: int = 2_000_000,
    restarts: int = 8,
    seed: int = 0,
) -> TestOutcome:
    """Best N-column aggregation value against its null concentration level.

    The statistic is N^(-1/2) max_S ||sum_{j in S} x_j||_1; under noise
    each candidate behaves like a sum of folded normals with mean
    sqrt(2/pi) n, and the threshold adds the union-bound deviation
    sqrt(2 n (N + 2) log p).
    """
    n, p = X.shape
    if greedy:
        res = sparse_aggregation_greedy(X, N, restarts=restarts, seed=seed)
    else:
        res = sparse_aggregation_exact(X, N, budget=budget)
    stat = res.objective / math.sqrt(N)
    threshold = math.sqrt(2 / math.pi) * n + math.sqrt(2 * n * (N + 2) * math.log(p))
    return _outcome(stat, threshold, "sparse_agg_l1")


def column_pvalues(X: np.ndarray) -> np.ndarray:
    """Per-column P-values of the standardized squared norms.

    pi_j = P(chi2_n >= n + sqrt(2n) Q(j)), clipped below at the
    distribution's support (scores so negative that the quantile would
    be below zero get P-value 1).
    """
    n = X.shape[0]
    Q = chi2_scores(X)
    quantiles = np.maximum(n + math.sqrt(2 * n) * Q, 0.0)
    return chisq_sf_vec(quantiles, n)


def hc_statistic(pvalues: np.ndarray) -> float:
    """Higher-criticism maximum over the lower half of sorted P-values.

    Terms whose sorted P-value is exactly 0 or 1 have a zero denominator
    and are skipped. Returns -inf if every term in range is skipped.
    """
    pv = np.sort(np.asarray(pvalues, dtype=float))
    p = pv.size
    half = p // 2
    i = np.arange(1, half + 1)
    ps = pv[:half]
    ok = (ps > 0.0) & (ps < 1.0)
    if not ok.any():
        return -math.inf
    vals = math.sqrt(p) * (i[ok] / p - ps[ok]) / np.sqrt(ps[ok] * (1.0 - ps[ok]))
    return float(vals.max())


def higher_criticism_test(X: np.ndarray) -> TestOutcome:
    """HC of the column chi-square P-values versus 2 sqrt(2 log log p)."""
    p = X.shape[1]
    if p < 8:
        raise ValueError("need p >= 8 so that log log p is positive")
    stat = hc_statistic(column_pvalues(X))
    return _outcome(stat, 2.0 * math.sqrt(2 * math.log(math.log(p))), "higher_criticism")
