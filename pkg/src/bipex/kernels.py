"""Sparse second-order exposure-dependence weights over outcome-unit pairs.

For outcome units i and j that share at least one intervention unit, the
joint exposure indicators are dependent.  That dependence enters every
variance formula through three symmetric n-by-n weight matrices whose (i, j)
entries are

    treated:  p**(-overlap(i, j)) - 1
    control:  (1 - p)**(-overlap(i, j)) - 1
    cross:    1 if overlap(i, j) > 0 else 0

All three vanish when the neighborhoods are disjoint (``p**0 - 1 == 0``), so
only overlapping pairs are ever stored: off-diagonal pairs as flat arrays and
the diagonal (one entry per outcome unit, with overlap equal to the degree)
as vectors aligned with the unit index.  Dense matrices are materialized only
inside the structural checks at the bottom of this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import InvalidProbabilityError, SizeGuardError
from .graph import BipartiteGraph

__all__ = [
    "ExposureKernels",
    "build_kernels",
    "min_joint_eigenvalue",
    "binomial_decomposition_residual",
    "PSD_SIZE_GUARD",
    "DECOMPOSITION_SIZE_GUARD",
]

PSD_SIZE_GUARD = 2000
DECOMPOSITION_SIZE_GUARD = 10_000


@dataclass(frozen=True)
class ExposureKernels:
    """Precomputed pair weights for one (graph, p) combination.

    Off-diagonal arrays hold each unordered pair (i < j) once; symmetric sums
    account for both orders analytically.  ``ipw_*`` arrays carry the inverse
    joint exposure probabilities ``p**(-union)`` and ``(1-p)**(-union)`` used
    by the plug-in estimators.
    """

    n: int
    p: float
    off_i: np.ndarray
    off_j: np.ndarray
    off_overlap: np.ndarray
    off_union: np.ndarray
    off_treated: np.ndarray
    off_control: np.ndarray
    off_ipw_treated: np.ndarray
    off_ipw_control: np.ndarray
    diag_overlap: np.ndarray
    diag_treated: np.ndarray
    diag_control: np.ndarray
    diag_ipw_treated: np.ndarray
    diag_ipw_control: np.ndarray

    @property
    def stored_pairs(self) -> int:
        """Total stored pairs: off-diagonal pairs plus one diagonal per unit."""
        return int(self.off_i.shape[0]) + self.n

    @cached_property
    def _off_index(self) -> dict[tuple[int, int], int]:
        return {
            (int(i), int(j)): pos
            for pos, (i, j) in enumerate(zip(self.off_i, self.off_j))
        }

    def _lookup(self, i: int, j: int) -> tuple[str, int]:
        if i == j:
            return "diag", i
        key = (i, j) if i < j else (j, i)
        pos = self._off_index.get(key, -1)
        return "off", pos

    def overlap_entry(self, i: int, j: int) -> int:
        kind, pos = self._lookup(i, j)
        if kind == "diag":
            return int(self.diag_overlap[pos])
        return int(self.off_overlap[pos]) if pos >= 0 else 0

    def treated_entry(self, i: int, j: int) -> float:
        kind, pos = self._lookup(i, j)
        if kind == "diag":
            return float(self.diag_treated[pos])
        return float(self.off_treated[pos]) if pos >= 0 else 0.0

    def control_entry(self, i: int, j: int) -> float:
        kind, pos = self._lookup(i, j)
        if kind == "diag":
            return float(self.diag_control[pos])
        return float(self.off_control[pos]) if pos >= 0 else 0.0

    def cross_entry(self, i: int, j: int) -> float:
        return 1.0 if self.overlap_entry(i, j) > 0 else 0.0

    # -- dense reconstructions (checks and small-instance tests only) ------

    def dense(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Materialize the three matrices densely (treated, control, cross)."""
        n = self.n
        treated = np.zeros((n, n))
        control = np.zeros((n, n))
        cross = np.zeros((n, n))
        oi, oj = self.off_i, self.off_j
        treated[oi, oj] = self.off_treated
        treated[oj, oi] = self.off_treated
        control[oi, oj] = self.off_control
        control[oj, oi] = self.off_control
        cross[oi, oj] = 1.0
        cross[oj, oi] = 1.0
        d = np.arange(n)
        treated[d, d] = self.diag_treated
        control[d, d] = self.diag_control
        cross[d, d] = 1.0
        return treated, control, cross

    # -- sparse reductions shared by population and estimation code --------

    def quad_form(self, which: str, u: np.ndarray, v: np.ndarray) -> float:
        """Full double sum ``sum_ij u_i * W_ij * v_j`` over all ordered pairs."""
        off_w, diag_w = self._weights(which)
        off = off_w @ (u[self.off_i] * v[self.off_j] + u[self.off_j] * v[self.off_i])
        diag = diag_w @ (u * v)
        return float(off + diag)

    def weighted_vector(self, which: str, x: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Covariate-by-residual contraction ``sum_ij x_i * W_ij * r_j`` (d-vector)."""
        off_w, diag_w = self._weights(which)
        out = x[self.off_i].T @ (off_w * r[self.off_j])
        out += x[self.off_j].T @ (off_w * r[self.off_i])
        out += x.T @ (diag_w * r)
        return out

    def xtx(self, which: str, x: np.ndarray) -> np.ndarray:
        """Covariate Gram block ``x.T @ W @ x`` (d-by-d)."""
        off_w, diag_w = self._weights(which)
        half = x[self.off_i].T @ (off_w[:, None] * x[self.off_j])
        return half + half.T + x.T @ (diag_w[:, None] * x)

    def _weights(self, which: str) -> tuple[np.ndarray, np.ndarray]:
        if which == "treated":
            return self.off_treated, self.diag_treated
        if which == "control":
            return self.off_control, self.diag_control
        if which == "cross":
            ones_off = np.ones_like(self.off_treated)
            ones_diag = np.ones(self.n)
            return ones_off, ones_diag
        raise ValueError(f"unknown weight selector {which!r}")


def build_kernels(g: BipartiteGraph, p: float) -> ExposureKernels:
    """Enumerate overlapping pairs of ``g`` and precompute all pair weights."""
    if not 0.0 < p < 1.0:
        raise InvalidProbabilityError(f"probability must lie in (0, 1), got {p}")
    off_pairs = [(i, j) for i, j in g.overlapping_pairs() if i != j]
    if off_pairs:
        off_i = np.array([i for i, _ in off_pairs], dtype=np.int64)
        off_j = np.array([j for _, j in off_pairs], dtype=np.int64)
        off_overlap = np.array(
            [g.overlap_size(i, j) for i, j in off_pairs], dtype=np.int64
        )
    else:
        off_i = np.empty(0, dtype=np.int64)
        off_j = np.empty(0, dtype=np.int64)
        off_overlap = np.empty(0, dtype=np.int64)
    degrees = g.out_degrees
    off_union = degrees[off_i] + degrees[off_j] - off_overlap
    q = 1.0 - p
    return ExposureKernels(
        n=g.n,
        p=float(p),
        off_i=off_i,
        off_j=off_j,
        off_overlap=off_overlap,
        off_union=off_union,
        off_treated=np.power(p, -off_overlap.astype(float)) - 1.0,
        off_control=np.power(q, -off_overlap.astype(float)) - 1.0,
        off_ipw_treated=np.power(p, -off_union.astype(float)),
        off_ipw_control=np.power(q, -off_union.astype(float)),
        diag_overlap=degrees.copy(),
        diag_treated=np.power(p, -degrees.astype(float)) - 1.0,
        diag_control=np.power(q, -degrees.astype(float)) - 1.0,
        diag_ipw_treated=np.power(p, -degrees.astype(float)),
        diag_ipw_control=np.power(q, -degrees.astype(float)),
    )


def min_joint_eigenvalue(ker: ExposureKernels, *, size_guard: int = PSD_SIZE_GUARD) -> float:
    """Smallest eigenvalue of the stacked 2n-by-2n weight matrix.

    The stacked matrix [[treated, cross], [cross, control]] is positive
    semi-definite for every bipartite graph, so up to eigensolver roundoff the
    result should never fall below zero.
    """
    if ker.n > size_guard:
        raise SizeGuardError(
            f"dense eigen-check limited to n <= {size_guard}, got n={ker.n}"
        )
    treated, control, cross = ker.dense()
    stacked = np.block([[treated, cross], [cross, control]])
    return float(np.linalg.eigvalsh(stacked).min())


def binomial_decomposition_residual(
    g: BipartiteGraph,
    p: float,
    max_k: int,
    *,
    size_guard: int = DECOMPOSITION_SIZE_GUARD,
) -> float:
    """Truncation residual of the membership-matrix expansion of the treated weights.

    Writing r = (1-p)/p, the dense treated-weight matrix (plus the all-ones
    matrix) expands as ``sum_k r**k * M_k.T @ M_k`` where row S of ``M_k``
    (one row per k-subset of intervention units) marks the outcome units
    connected to every member of S.  The residual is the largest absolute
    entry left after truncating at ``max_k``; it hits zero exactly once
    ``max_k`` reaches the maximum outcome degree.
    """
    if not 0.0 < p < 1.0:
        raise InvalidProbabilityError(f"probability must lie in (0, 1), got {p}")
    if max_k < 1:
        raise ValueError(f"max_k must be >= 1, got {max_k}")
    if g.n * g.m > size_guard:
        raise SizeGuardError(
            f"dense decomposition limited to n*m <= {size_guard}, got {g.n * g.m}"
        )
    n = g.n
    overlap = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i, n):
            overlap[i, j] = overlap[j, i] = g.overlap_size(i, j)
    target = np.power(p, -overlap.astype(float)) - 1.0
    ratio = (1.0 - p) / p
    residual = target.copy()
    for k in range(1, max_k + 1):
        members: dict[tuple[int, ...], list[int]] = {}
        for i, nbrs in enumerate(g.out_adj):
            for subset in combinations(nbrs, k):
                members.setdefault(subset, []).append(i)
        block = np.zeros((n, n))
        for units in members.values():
            idx = np.array(units, dtype=np.int64)
            block[np.ix_(idx, idx)] += 1.0
        residual -= (ratio**k) * block
    return float(np.abs(residual).max())
