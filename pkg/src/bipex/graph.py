"""Immutable bipartite graphs linking intervention units to outcome units.

The graph is stored as two sorted adjacency views: for each outcome unit the
intervention units it is connected to, and for each intervention unit the
outcome units it reaches.  Everything downstream (exposure probabilities,
pair-overlap weights, variance sums) touches only neighbor sets, overlaps and
unions, so no dense adjacency matrix is ever materialized; memory is
O(edges).

Conventions:

* indices are 0-based throughout the in-process API; CSV files use 1-based
  identifiers and are translated by the loaders,
* every outcome unit must have degree >= 1 (exposure probabilities degenerate
  otherwise); use :func:`prune_isolated` before :func:`build` on raw data,
* intervention units with degree 0 are tolerated: they are randomized but
  affect nothing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    AllUnitsIsolatedError,
    DataFormatError,
    DuplicateEdgeError,
    EmptyClusterError,
    GraphIndexError,
    InvalidDegreeBoundError,
    IsolatedOutcomeUnitError,
)

__all__ = [
    "BipartiteGraph",
    "SparsityReport",
    "PruneMaps",
    "build",
    "generate_random",
    "cluster_graph",
    "identity_graph",
    "prune_isolated",
    "load_edge_csv",
]


@dataclass(frozen=True)
class SparsityReport:
    """Degree and connectivity diagnostics of a bipartite graph.

    ``max_connectivity`` is the largest number of *other* intervention units
    any single intervention unit shares an outcome unit with; small values
    mean assignment dependence between outcome units stays local.
    """

    max_outcome_degree: int
    max_intervention_degree: int
    max_connectivity: int
    overlapping_pair_count: int  # unordered off-diagonal pairs with shared units


@dataclass(frozen=True)
class PruneMaps:
    """Index bookkeeping produced by :func:`prune_isolated`.

    ``intervention_kept[new_index] == original_index`` and likewise for
    outcome units, so results computed on the pruned graph can be reported
    against the original identifiers.
    """

    intervention_kept: tuple[int, ...]
    outcome_kept: tuple[int, ...]
    intervention_dropped: tuple[int, ...]
    outcome_dropped: tuple[int, ...]

    @property
    def is_identity(self) -> bool:
        return not self.intervention_dropped and not self.outcome_dropped


@dataclass(frozen=True)
class BipartiteGraph:
    """Fixed bipartite graph over ``m`` intervention and ``n`` outcome units.

    Instances are immutable; construct them with :func:`build` or one of the
    generators, which enforce the invariants (sorted duplicate-free adjacency,
    mutual consistency of the two views, outcome degrees >= 1).
    """

    m: int
    n: int
    out_adj: tuple[tuple[int, ...], ...]
    int_adj: tuple[tuple[int, ...], ...]

    # -- cached array views for the vectorized hot paths ------------------

    @cached_property
    def out_degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.out_adj], dtype=np.int64)

    @cached_property
    def int_degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.int_adj], dtype=np.int64)

    @cached_property
    def _flat_out(self) -> np.ndarray:
        """All outcome-unit neighbor lists concatenated."""
        if self.n == 0:
            return np.empty(0, dtype=np.int64)
        return np.concatenate([np.asarray(nbrs, dtype=np.int64) for nbrs in self.out_adj])

    @cached_property
    def _out_starts(self) -> np.ndarray:
        """Start offset of each outcome unit inside :attr:`_flat_out`."""
        degs = self.out_degrees
        starts = np.zeros(self.n, dtype=np.int64)
        np.cumsum(degs[:-1], out=starts[1:])
        return starts

    # -- queries -----------------------------------------------------------

    def out_degree(self, i: int) -> int:
        self._check_outcome(i)
        return len(self.out_adj[i])

    def int_degree(self, k: int) -> int:
        self._check_intervention(k)
        return len(self.int_adj[k])

    def overlap_size(self, i: int, j: int) -> int:
        """Number of intervention units connected to both outcome units."""
        self._check_outcome(i)
        self._check_outcome(j)
        return _sorted_intersection_size(self.out_adj[i], self.out_adj[j])

    def union_size(self, i: int, j: int) -> int:
        """Number of intervention units connected to at least one of the two."""
        return len(self.out_adj[i]) + len(self.out_adj[j]) - self.overlap_size(i, j)

    def overlapping_pairs(self) -> Iterator[tuple[int, int]]:
        """Yield each unordered outcome pair (i, j), i <= j, with shared units.

        Enumeration walks the outcome clique of every intervention unit and
        deduplicates, which costs O(sum over k of int_degree(k)**2) instead of
        O(n**2).  Diagonal pairs (i, i) are included for every outcome unit
        because degrees are >= 1.
        """
        seen: set[tuple[int, int]] = set()
        for clique in self.int_adj:
            for a_pos in range(len(clique)):
                i = clique[a_pos]
                for b_pos in range(a_pos, len(clique)):
                    pair = (i, clique[b_pos])
                    if pair not in seen:
                        seen.add(pair)
                        yield pair

    def sparsity_report(self) -> SparsityReport:
        """Compute the degree/connectivity diagnostics in one pass."""
        partners: list[set[int]] = [set() for _ in range(self.m)]
        for nbrs in self.out_adj:
            for k in nbrs:
                partners[k].update(nbrs)
        max_conn = 0
        for k, linked in enumerate(partners):
            linked.discard(k)
            if len(linked) > max_conn:
                max_conn = len(linked)
        off_diagonal = sum(1 for i, j in self.overlapping_pairs() if i != j)
        return SparsityReport(
            max_outcome_degree=int(self.out_degrees.max()) if self.n else 0,
            max_intervention_degree=int(self.int_degrees.max()) if self.m else 0,
            max_connectivity=max_conn,
            overlapping_pair_count=off_diagonal,
        )

    # -- internals ----------------------------------------------------------

    def _check_outcome(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise GraphIndexError(f"outcome index {i} out of range for n={self.n}")

    def _check_intervention(self, k: int) -> None:
        if not 0 <= k < self.m:
            raise GraphIndexError(f"intervention index {k} out of range for m={self.m}")


def _sorted_intersection_size(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    ia = ib = hits = 0
    la, lb = len(a), len(b)
    while ia < la and ib < lb:
        va, vb = a[ia], b[ib]
        if va == vb:
            hits += 1
            ia += 1
            ib += 1
        elif va < vb:
            ia += 1
        else:
            ib += 1
    return hits


def build(m: int, n: int, edges: Iterable[tuple[int, int]]) -> BipartiteGraph:
    """Construct a validated graph from an edge list of (intervention, outcome).

    Raises :class:`GraphIndexError` for out-of-range endpoints,
    :class:`DuplicateEdgeError` for repeated edges, and
    :class:`IsolatedOutcomeUnitError` (listing the offenders) if any outcome
    unit ends up with degree 0.
    """
    if m < 1 or n < 1:
        raise GraphIndexError(f"graph requires m >= 1 and n >= 1, got m={m}, n={n}")
    out: list[list[int]] = [[] for _ in range(n)]
    into: list[list[int]] = [[] for _ in range(m)]
    for k, i in edges:
        k, i = int(k), int(i)
        if not 0 <= k < m:
            raise GraphIndexError(f"edge ({k}, {i}): intervention index out of range for m={m}")
        if not 0 <= i < n:
            raise GraphIndexError(f"edge ({k}, {i}): outcome index out of range for n={n}")
        out[i].append(k)
        into[k].append(i)
    for i, nbrs in enumerate(out):
        nbrs.sort()
        for a, b in zip(nbrs, nbrs[1:]):
            if a == b:
                raise DuplicateEdgeError(f"edge ({a}, {i}) listed more than once")
    isolated = [i for i, nbrs in enumerate(out) if not nbrs]
    if isolated:
        raise IsolatedOutcomeUnitError(isolated)
    for nbrs in into:
        nbrs.sort()
    return BipartiteGraph(
        m=m,
        n=n,
        out_adj=tuple(tuple(nbrs) for nbrs in out),
        int_adj=tuple(tuple(nbrs) for nbrs in into),
    )


def generate_random(
    n: int,
    m: int,
    max_degree: int,
    rng: np.random.Generator | int | None,
) -> BipartiteGraph:
    """Random graph: each outcome unit's degree is uniform on {1..max_degree}.

    Neighbors are drawn uniformly without replacement (Floyd's algorithm,
    O(degree) per unit).  Deterministic given a seeded generator; intervention
    units can come out unconnected, which is allowed.
    """
    rng = np.random.default_rng(rng)
    if not 1 <= max_degree <= m:
        raise InvalidDegreeBoundError(
            f"max_degree must lie in [1, m]={1, m}, got {max_degree}"
        )
    edges: list[tuple[int, int]] = []
    for i in range(n):
        degree = int(rng.integers(1, max_degree + 1))
        chosen: set[int] = set()
        for j in range(m - degree, m):
            t = int(rng.integers(0, j + 1))
            chosen.add(j if t in chosen else t)
        edges.extend((k, i) for k in chosen)
    return build(m, n, edges)


def cluster_graph(cluster_sizes: Iterable[int]) -> BipartiteGraph:
    """Graph where intervention unit k owns a block of consecutive outcome units."""
    sizes = [int(s) for s in cluster_sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise EmptyClusterError(f"cluster sizes must all be >= 1, got {sizes}")
    edges = []
    i = 0
    for k, size in enumerate(sizes):
        for _ in range(size):
            edges.append((k, i))
            i += 1
    return build(len(sizes), i, edges)


def identity_graph(n: int) -> BipartiteGraph:
    """One-to-one graph (m == n, unit k connected to outcome k only)."""
    return cluster_graph([1] * n)


def prune_isolated(
    m: int, n: int, edges: Iterable[tuple[int, int]]
) -> tuple[BipartiteGraph, PruneMaps]:
    """Drop degree-0 nodes on both sides and relabel the survivors.

    Returns the pruned graph plus :class:`PruneMaps` recording which original
    indices survived.  Raises :class:`AllUnitsIsolatedError` when no edge
    remains.
    """
    edges = [(int(k), int(i)) for k, i in edges]
    for k, i in edges:
        if not 0 <= k < m or not 0 <= i < n:
            raise GraphIndexError(f"edge ({k}, {i}) out of range for m={m}, n={n}")
    if not edges:
        raise AllUnitsIsolatedError("no edges: every unit on both sides is isolated")
    live_int = sorted({k for k, _ in edges})
    live_out = sorted({i for _, i in edges})
    int_new = {orig: new for new, orig in enumerate(live_int)}
    out_new = {orig: new for new, orig in enumerate(live_out)}
    relabeled = [(int_new[k], out_new[i]) for k, i in edges]
    graph = build(len(live_int), len(live_out), relabeled)
    maps = PruneMaps(
        intervention_kept=tuple(live_int),
        outcome_kept=tuple(live_out),
        intervention_dropped=tuple(k for k in range(m) if k not in int_new),
        outcome_dropped=tuple(i for i in range(n) if i not in out_new),
    )
    return graph, maps


def load_edge_csv(path: str | Path) -> tuple[int, int, list[tuple[int, int]]]:
    """Read an edge list CSV with header ``intervention_id,outcome_id``.

    File identifiers are 1-based; the returned edges are 0-based.  The
    returned (m, n) are the largest identifiers seen, which callers may widen
    when other files mention additional units.
    """
    path = Path(path)
    edges: list[tuple[int, int]] = []
    max_k = max_i = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["intervention_id", "outcome_id"]:
            raise DataFormatError(
                f"{path}: line 1: expected header 'intervention_id,outcome_id'"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise DataFormatError(f"{path}: line {lineno}: expected 2 columns")
            try:
                k = int(row[0])
                i = int(row[1])
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
            if k < 1 or i < 1:
                raise DataFormatError(
                    f"{path}: line {lineno}: identifiers are 1-based, got ({k}, {i})"
                )
            edges.append((k - 1, i - 1))
            max_k = max(max_k, k)
            max_i = max(max_i, i)
    return max_k, max_i, edges
