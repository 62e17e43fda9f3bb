"""Exact expectations by exhaustive enumeration of all 2**m assignments.

Each assignment vector gets its Bernoulli probability weight, the exposure
indicators and observed outcomes are constructed from the potential-outcome
table, and a user statistic is evaluated.  With at most ``MAX_ENUMERABLE_M``
intervention units this is exact (up to float roundoff) and fast, making it
the reference oracle for unbiasedness and variance identities.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .design import Assignment, Exposure
from .errors import EnumerationGuardError, InvalidProbabilityError
from .graph import BipartiteGraph
from .population import PotentialTable

__all__ = ["MAX_ENUMERABLE_M", "Statistic", "exact_expectation", "exact_variance"]

MAX_ENUMERABLE_M = 12

# statistic(assignment, exposure, observed_outcomes) -> value
Statistic = Callable[[Assignment, Exposure, np.ndarray], float]


def _enumerate(
    g: BipartiteGraph, p: float, pt: PotentialTable
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if not 0.0 < p < 1.0:
        raise InvalidProbabilityError(f"probability must lie in (0, 1), got {p}")
    if g.m > MAX_ENUMERABLE_M:
        raise EnumerationGuardError(
            f"enumeration limited to m <= {MAX_ENUMERABLE_M}, got m={g.m}"
        )
    if pt.n != g.n:
        raise ValueError(f"table has n={pt.n}, graph has n={g.n}")
    count = 1 << g.m
    bits = ((np.arange(count)[:, None] >> np.arange(g.m)[None, :]) & 1).astype(np.int64)
    weights = np.ones(count)
    for k in range(g.m):  # sequential products match the scalar probability path
        weights *= np.where(bits[:, k] == 1, p, 1.0 - p)
    z_flat = bits[:, g._flat_out]
    t = np.multiply.reduceat(z_flat, g._out_starts, axis=1)
    c = np.multiply.reduceat(1 - z_flat, g._out_starts, axis=1)
    y = t * pt.y1 + c * pt.y0 + (1 - t - c) * pt.intermediate_value
    return bits, weights, t, c, y


def _evaluate_all(
    g: BipartiteGraph, p: float, pt: PotentialTable, statistic: Statistic
) -> tuple[np.ndarray, np.ndarray]:
    bits, weights, t, c, y = _enumerate(g, p, pt)
    values = np.empty(weights.shape[0])
    for row in range(weights.shape[0]):
        a = Assignment(z=bits[row], p=p)
        e = Exposure(t=t[row], c=c[row])
        values[row] = statistic(a, e, y[row])
    return weights, values


def exact_expectation(
    g: BipartiteGraph, p: float, pt: PotentialTable, statistic: Statistic
) -> float:
    """Expectation of the statistic over the full assignment distribution."""
    weights, values = _evaluate_all(g, p, pt, statistic)
    return float(weights @ values)


def exact_variance(
    g: BipartiteGraph, p: float, pt: PotentialTable, statistic: Statistic
) -> float:
    """Variance of the statistic, via a centered second pass for stability."""
    weights, values = _evaluate_all(g, p, pt, statistic)
    mean = weights @ values
    centered = values - mean
    return float(weights @ (centered * centered))
