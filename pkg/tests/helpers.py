"""Independent brute-force oracles used by the test suite.

Everything here recomputes quantities straight from edge lists and dense
matrices, deliberately avoiding the package's sparse data structures so that
agreement between the two routes is meaningful.
"""

from __future__ import annotations

import itertools

import numpy as np


def neighbor_sets(n: int, edges: list[tuple[int, int]]) -> list[set[int]]:
    """Outcome-unit neighborhoods from a 0-based (intervention, outcome) edge list."""
    out = [set() for _ in range(n)]
    for k, i in edges:
        out[i].add(k)
    return out


def dense_weight_matrices(n: int, edges: list[tuple[int, int]], p: float):
    """Dense treated/control/cross weight matrices built from set intersections."""
    nbrs = neighbor_sets(n, edges)
    overlap = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            overlap[i, j] = len(nbrs[i] & nbrs[j])
    treated = np.power(p, -overlap.astype(float)) - 1.0
    control = np.power(1.0 - p, -overlap.astype(float)) - 1.0
    cross = (overlap > 0).astype(float)
    return overlap, treated, control, cross


def all_assignments(m: int):
    """Yield every binary assignment vector of length m as a numpy array."""
    for bits in itertools.product((0, 1), repeat=m):
        yield np.array(bits, dtype=np.int64)


def assignment_weight(z: np.ndarray, p: float) -> float:
    w = 1.0
    for bit in z:
        w *= p if bit == 1 else 1.0 - p
    return w


def exposure_vectors(n: int, edges: list[tuple[int, int]], z: np.ndarray):
    nbrs = neighbor_sets(n, edges)
    t = np.array([int(all(z[k] == 1 for k in nb)) for nb in nbrs], dtype=np.int64)
    c = np.array([int(all(z[k] == 0 for k in nb)) for nb in nbrs], dtype=np.int64)
    return t, c


def dense_population_variance(
    n: int,
    edges: list[tuple[int, int]],
    p: float,
    y1: np.ndarray,
    y0: np.ndarray,
    x: np.ndarray | None = None,
    beta1: np.ndarray | None = None,
    beta0: np.ndarray | None = None,
):
    """(total, treated, control, upper_bound) via dense matrix products."""
    _, treated_w, control_w, cross_w = dense_weight_matrices(n, edges, p)
    r1 = y1 - y1.mean()
    r0 = y0 - y0.mean()
    if beta1 is not None:
        r1 = r1 - x @ beta1
        r0 = r0 - x @ beta0
    inv_n2 = 1.0 / n**2
    v1 = inv_n2 * (r1 @ treated_w @ r1)
    v0 = inv_n2 * (r0 @ control_w @ r0)
    cross = inv_n2 * (r1 @ cross_w @ r0)
    total = v1 + v0 + 2.0 * cross
    ub = (max(v1, 0.0) ** 0.5 + max(v0, 0.0) ** 0.5) ** 2
    return total, v1, v0, ub


def random_connected_edges(rng: np.random.Generator, m: int, n: int, max_degree: int):
    """Random edge list in which every outcome unit has degree >= 1."""
    edges = []
    for i in range(n):
        degree = int(rng.integers(1, min(max_degree, m) + 1))
        for k in rng.choice(m, size=degree, replace=False):
            edges.append((int(k), i))
    return edges


def random_instance(rng: np.random.Generator, *, max_m=10, max_n=14, max_degree=3, d=0):
    """Random (m, n, edges, y1, y0[, x]) instance for oracle-based tests."""
    m = int(rng.integers(2, max_m + 1))
    n = int(rng.integers(2, max_n + 1))
    edges = random_connected_edges(rng, m, n, max_degree)
    y1 = rng.normal(size=n)
    y0 = rng.normal(size=n)
    if d == 0:
        return m, n, edges, y1, y0
    x = rng.normal(size=(n, d))
    x = x - x.mean(axis=0)
    return m, n, edges, y1, y0, x


def subset_expansion_coefficients(n, edges, p, y1, y0, mu1, mu0):
    """Coefficients of the centered contrast as a multilinear polynomial.

    Expanding the product exposure indicators around the centered assignment
    variables turns the treated and control inverse-probability sums into a
    multilinear polynomial; the coefficient of a subset S collects
    (y - mu) / (n * p**|S|) over units whose neighborhood contains S, with the
    control arm alternating in sign.  Returns {subset: coefficient}.
    """
    nbrs = neighbor_sets(len(y1), edges)
    coeffs: dict[tuple[int, ...], float] = {}
    n_units = len(y1)
    for i, nb in enumerate(nbrs):
        members = sorted(nb)
        for size in range(1, len(members) + 1):
            for subset in itertools.combinations(members, size):
                c_t = (y1[i] - mu1) / (n_units * p**size)
                c_c = ((-1.0) ** size) * (y0[i] - mu0) / (n_units * (1.0 - p) ** size)
                coeffs[subset] = coeffs.get(subset, 0.0) + (c_t - c_c)
    return coeffs
