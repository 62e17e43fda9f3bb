"""Sparse multilinear polynomials in i.i.d. centered variables.

A statistic of the form

    sum_k a_k * z_k  +  sum_{k1<k2} a_{k1 k2} * z_k1 * z_k2  +  ...

with symmetric sparse coefficient arrays covers every inverse-probability
estimator in this package once the assignment indicators are centered.  This
module evaluates such polynomials, computes their exact variance
(``sum over orders s of sigma**(2s) * sum of squared coefficients``), and runs
a Monte Carlo normality diagnostic on the standardized distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import (
    DegenerateVarianceError,
    DimensionMismatchError,
    InvalidProbabilityError,
    InvalidRepsError,
)

__all__ = [
    "MultilinearPolynomial",
    "CltDiagnostic",
    "centered_bernoulli",
    "clt_diagnostic",
]

# draw(rng, size) -> centered i.i.d. sample of the given shape
Draw = Callable[[np.random.Generator, tuple[int, ...]], np.ndarray]


class MultilinearPolynomial:
    """Multilinear polynomial with sparse, symmetric coefficients.

    Coefficients are keyed by strictly increasing index tuples; inserting a
    term under any permutation of its indices stores (and reads back) the same
    canonical entry, which is how the symmetric-array convention becomes a
    storage invariant instead of runtime bookkeeping.
    """

    def __init__(self, m: int, terms: Iterable[tuple[tuple[int, ...], float]] = ()):
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        self.m = int(m)
        self._coeffs: dict[tuple[int, ...], float] = {}
        self._compiled: list[tuple[np.ndarray, np.ndarray]] | None = None
        for indices, value in terms:
            self.set_term(indices, value)

    def _canonical(self, indices: Iterable[int]) -> tuple[int, ...]:
        key = tuple(sorted(int(k) for k in indices))
        if not key:
            raise ValueError("a term needs at least one index")
        if len(set(key)) != len(key):
            raise ValueError(f"indices must be distinct, got {key}")
        if key[0] < 0 or key[-1] >= self.m:
            raise IndexError(f"indices {key} out of range for m={self.m}")
        return key

    def set_term(self, indices: Iterable[int], value: float) -> None:
        self._coeffs[self._canonical(indices)] = float(value)
        self._compiled = None

    def add_term(self, indices: Iterable[int], value: float) -> None:
        key = self._canonical(indices)
        self._coeffs[key] = self._coeffs.get(key, 0.0) + float(value)
        self._compiled = None

    def coefficient(self, indices: Iterable[int]) -> float:
        return self._coeffs.get(self._canonical(indices), 0.0)

    @property
    def max_order(self) -> int:
        return max((len(k) for k in self._coeffs), default=0)

    @property
    def term_count(self) -> int:
        return len(self._coeffs)

    def _compile(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Group terms by order into (index-matrix, coefficient-vector) pairs."""
        if self._compiled is None:
            by_order: dict[int, tuple[list[tuple[int, ...]], list[float]]] = {}
            for key, value in self._coeffs.items():
                idx, vals = by_order.setdefault(len(key), ([], []))
                idx.append(key)
                vals.append(value)
            self._compiled = [
                (np.array(idx, dtype=np.int64), np.array(vals))
                for _, (idx, vals) in sorted(by_order.items())
            ]
        return self._compiled

    def evaluate(self, z_tilde: np.ndarray) -> float | np.ndarray:
        """Evaluate at one centered vector (m,) or a batch (reps, m)."""
        z = np.asarray(z_tilde, dtype=float)
        batch = z.ndim == 2
        if (batch and z.shape[1] != self.m) or (not batch and z.shape != (self.m,)):
            raise DimensionMismatchError(
                f"expected shape ({self.m},) or (reps, {self.m}), got {z.shape}"
            )
        total = np.zeros(z.shape[0]) if batch else 0.0
        for idx, coeffs in self._compile():
            gathered = z[:, idx] if batch else z[idx]
            prods = gathered.prod(axis=-1)
            total = total + prods @ coeffs
        return total if batch else float(total)

    def exact_variance(self, sigma2: float) -> float:
        """Closed-form variance when the inputs are i.i.d. with variance sigma2."""
        sigma2 = float(sigma2)
        if sigma2 < 0.0:
            raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
        total = 0.0
        for idx, coeffs in self._compile():
            total += (sigma2 ** idx.shape[1]) * float(coeffs @ coeffs)
        return total


def centered_bernoulli(p: float) -> Draw:
    """Draw function producing Bernoulli(p) - p values (variance p*(1-p))."""
    if not 0.0 < p < 1.0:
        raise InvalidProbabilityError(f"probability must lie in (0, 1), got {p}")

    def draw(rng: np.random.Generator, size: tuple[int, ...]) -> np.ndarray:
        return (rng.random(size) < p).astype(float) - p

    return draw


@dataclass(frozen=True)
class CltDiagnostic:
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    reps: int


def _normal_cdf_vector(x: np.ndarray) -> np.ndarray:
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    return 0.5 * np.array([math.erfc(-v * inv_sqrt2) for v in x])


def clt_diagnostic(
    rp: MultilinearPolynomial,
    draw: Draw,
    sigma2: float,
    reps: int,
    rng: np.random.Generator | int | None,
    *,
    batch: int = 4096,
) -> CltDiagnostic:
    """Monte Carlo normality check of the standardized polynomial.

    Draws ``reps`` i.i.d. evaluations, standardizes by the exact standard
    deviation, and reports sample skewness, excess kurtosis and the
    Kolmogorov-Smirnov distance to the standard normal CDF.
    """
    if reps < 1:
        raise InvalidRepsError(f"reps must be >= 1, got {reps}")
    scale2 = rp.exact_variance(sigma2)
    if scale2 <= 0.0:
        raise DegenerateVarianceError(
            "polynomial has zero variance; nothing to standardize"
        )
    rng = np.random.default_rng(rng)
    values = np.empty(reps)
    done = 0
    while done < reps:
        take = min(batch, reps - done)
        z = draw(rng, (take, rp.m))
        values[done : done + take] = rp.evaluate(z)
        done += take
    values /= math.sqrt(scale2)
    centered = values - values.mean()
    m2 = float(np.mean(centered**2))
    m3 = float(np.mean(centered**3))
    m4 = float(np.mean(centered**4))
    skew = m3 / m2**1.5
    kurt = m4 / m2**2 - 3.0
    order = np.sort(values)
    cdf = _normal_cdf_vector(order)
    grid = np.arange(1, reps + 1) / reps
    ks = float(max((grid - cdf).max(), (cdf - (grid - 1.0 / reps)).max()))
    return CltDiagnostic(
        skewness=skew, excess_kurtosis=kurt, ks_distance=ks, reps=reps
    )
