"""Bernoulli assignment of intervention units and induced exposure indicators.

An outcome unit is *treated-exposed* when every intervention unit it connects
to is treated, and *control-exposed* when every one of them is in control.
Under independent Bernoulli(p) assignment the exposure probabilities are
``p**degree`` and ``(1-p)**degree``, and two units' joint exposure probability
is ``p`` (or ``1-p``) to the power of their neighborhood union size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidProbabilityError
from .graph import BipartiteGraph

__all__ = [
    "Assignment",
    "Exposure",
    "sample",
    "exposures",
    "marginal_prob",
    "joint_prob",
    "pow_int",
    "replication_rng",
]

_ARMS = ("treated", "control")


def pow_int(base: float, exponent: int) -> float:
    """base**exponent by repeated multiplication (exact for the small degrees here)."""
    out = 1.0
    for _ in range(exponent):
        out *= base
    return out


def _check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise InvalidProbabilityError(f"probability must lie in (0, 1), got {p}")
    return p


@dataclass(frozen=True)
class Assignment:
    """Realized binary treatment vector over the m intervention units."""

    z: np.ndarray
    p: float

    def __post_init__(self) -> None:
        _check_probability(self.p)
        z = np.asarray(self.z, dtype=np.int64)
        if z.ndim != 1 or (z.size and not np.all((z == 0) | (z == 1))):
            raise ValueError("z must be a 1-D vector of 0/1 indicators")
        object.__setattr__(self, "z", z)

    @property
    def m(self) -> int:
        return int(self.z.shape[0])


@dataclass(frozen=True)
class Exposure:
    """Per-outcome-unit indicators: t[i] all-treated, c[i] all-control."""

    t: np.ndarray
    c: np.ndarray


def sample(p: float, m: int, rng: np.random.Generator | int | None) -> Assignment:
    """Draw m i.i.d. Bernoulli(p) treatment indicators."""
    _check_probability(p)
    rng = np.random.default_rng(rng)
    z = (rng.random(m) < p).astype(np.int64)
    return Assignment(z=z, p=p)


def exposures(g: BipartiteGraph, a: Assignment) -> Exposure:
    """Compute both exposure indicator vectors for a realized assignment."""
    if a.m != g.m:
        raise DimensionMismatchError(f"assignment has {a.m} units, graph has m={g.m}")
    z_flat = a.z[g._flat_out]
    t = np.multiply.reduceat(z_flat, g._out_starts)
    c = np.multiply.reduceat(1 - z_flat, g._out_starts)
    return Exposure(t=t, c=c)


def marginal_prob(g: BipartiteGraph, p: float, i: int, arm: str) -> float:
    """Exposure probability of outcome unit i for the given arm."""
    _check_probability(p)
    if arm not in _ARMS:
        raise ValueError(f"arm must be one of {_ARMS}, got {arm!r}")
    degree = g.out_degree(i)
    return pow_int(p if arm == "treated" else 1.0 - p, degree)


def joint_prob(g: BipartiteGraph, p: float, i: int, j: int, arm: str) -> float:
    """Joint exposure probability of outcome units i and j for the given arm."""
    _check_probability(p)
    if arm not in _ARMS:
        raise ValueError(f"arm must be one of {_ARMS}, got {arm!r}")
    union = g.union_size(i, j)
    return pow_int(p if arm == "treated" else 1.0 - p, union)


def replication_rng(master_seed: int, stream: tuple[int, ...] | int) -> np.random.Generator:
    """Counter-based per-replication generator.

    Seeding with ``(master_seed, stream)`` makes every replication's stream a
    pure function of its index, so Monte Carlo results do not depend on
    execution order or thread count.
    """
    key = (stream,) if isinstance(stream, int) else tuple(stream)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))
