"""Ground-truth quantities computed from a full potential-outcome table.

Only simulations and tests can use this module: it needs both counterfactual
outcome vectors (all intervention units treated / none treated), which real
experiments never observe together.  Estimators only ever touch outcomes of
units whose whole neighborhood landed in one arm, so the table stores just
the two extreme vectors; the enumeration oracle fills intermediate exposures
with an arbitrary constant to make that irrelevance testable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .errors import DimensionMismatchError, NonFiniteDataError
from .kernels import ExposureKernels

if TYPE_CHECKING:  # pragma: no cover
    from .design import Exposure
    from .estimators import AdjustmentCoefficients

__all__ = ["PotentialTable", "VarianceDecomposition", "true_estimand", "true_variance", "efficiency_gain"]


@dataclass(frozen=True)
class PotentialTable:
    """Both extreme-assignment outcome vectors for every outcome unit.

    ``intermediate_value`` is what :func:`bipex.enumeration.exact_expectation`
    substitutes for outcomes of units exposed to a mixed neighborhood; no
    estimator or variance formula may depend on it.
    """

    y1: np.ndarray
    y0: np.ndarray
    intermediate_value: float = 0.0

    def __post_init__(self) -> None:
        y1 = np.asarray(self.y1, dtype=float)
        y0 = np.asarray(self.y0, dtype=float)
        if y1.shape != y0.shape or y1.ndim != 1:
            raise DimensionMismatchError(
                f"potential outcome vectors must be 1-D with equal length, "
                f"got {y1.shape} and {y0.shape}"
            )
        if not (np.isfinite(y1).all() and np.isfinite(y0).all()):
            raise NonFiniteDataError("potential outcomes must be finite")
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y0", y0)

    @property
    def n(self) -> int:
        return int(self.y1.shape[0])

    @cached_property
    def centered1(self) -> np.ndarray:
        return self.y1 - self.y1.mean()

    @cached_property
    def centered0(self) -> np.ndarray:
        return self.y0 - self.y0.mean()

    def realize(self, expo: "Exposure") -> np.ndarray:
        """Observed outcome vector for a draw with the given exposures."""
        t, c = expo.t, expo.c
        return t * self.y1 + c * self.y0 + (1 - t - c) * self.intermediate_value


class VarianceDecomposition(NamedTuple):
    """Population variance pieces of the treated/control contrast."""

    total: float  # variance of the contrast (not estimable from one draw)
    treated: float
    control: float
    upper_bound: float  # (sqrt(treated) + sqrt(control))**2 >= total


def true_estimand(pt: PotentialTable) -> tuple[float, float, float]:
    """Return (tau, mu1, mu0): the all-treated vs all-control mean contrast."""
    mu1 = float(pt.y1.mean())
    mu0 = float(pt.y0.mean())
    return mu1 - mu0, mu1, mu0


def _residualized(
    pt: PotentialTable,
    x: np.ndarray | None,
    coef: "AdjustmentCoefficients | None",
) -> tuple[np.ndarray, np.ndarray]:
    r1 = pt.centered1
    r0 = pt.centered0
    if coef is not None:
        if x is None:
            raise DimensionMismatchError("adjustment coefficients supplied without covariates")
        if x.shape[0] != pt.n or x.shape[1] != coef.beta1.shape[0]:
            raise DimensionMismatchError(
                f"covariates {x.shape} incompatible with n={pt.n}, d={coef.beta1.shape[0]}"
            )
        r1 = r1 - x @ coef.beta1
        r0 = r0 - x @ coef.beta0
    return r1, r0


def true_variance(
    ker: ExposureKernels,
    pt: PotentialTable,
    *,
    x: np.ndarray | None = None,
    coef: "AdjustmentCoefficients | None" = None,
) -> VarianceDecomposition:
    """Population variance of the (optionally covariate-adjusted) contrast.

    total = n**-2 * (r1' W_treated r1 + r0' W_control r0 + 2 r1' W_cross r0)
    with r1, r0 the centered potential outcomes minus ``x @ beta`` when
    coefficients are given.  The treated/control pieces are the two estimable
    quadratic forms and the upper bound combines them by Cauchy-Schwarz.
    """
    if pt.n != ker.n:
        raise DimensionMismatchError(f"table has n={pt.n}, kernels have n={ker.n}")
    r1, r0 = _residualized(pt, x, coef)
    inv_n2 = 1.0 / (ker.n**2)
    treated = inv_n2 * ker.quad_form("treated", r1, r1)
    control = inv_n2 * ker.quad_form("control", r0, r0)
    cross = inv_n2 * ker.quad_form("cross", r1, r0)
    total = treated + control + 2.0 * cross
    # quadratic forms are PSD; clip eigen-roundoff negatives before sqrt
    ub = (max(treated, 0.0) ** 0.5 + max(control, 0.0) ** 0.5) ** 2
    return VarianceDecomposition(total=total, treated=treated, control=control, upper_bound=ub)


def efficiency_gain(
    ker: ExposureKernels,
    x: np.ndarray,
    pt: PotentialTable,
    beta1: np.ndarray,
    beta0: np.ndarray,
) -> float:
    """Asymptotic variance reduction of the adjusted contrast at (beta1, beta0).

    Evaluates the closed-form quadratic ``-b' Omega b / n**2 + 2 c' b / n**2``
    in the stacked coefficient vector b, where Omega stacks the covariate Gram
    blocks and c the covariate-outcome contractions.  Equals
    ``true_variance(...).total - true_variance(..., coef).total`` identically;
    tests verify the two routes against each other.
    """
    x = np.asarray(x, dtype=float)
    beta1 = np.asarray(beta1, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if x.ndim != 2 or x.shape[0] != pt.n:
        raise DimensionMismatchError(f"covariates must be (n, d) with n={pt.n}, got {x.shape}")
    d = x.shape[1]
    if beta1.shape != (d,) or beta0.shape != (d,):
        raise DimensionMismatchError(
            f"coefficients must have shape ({d},), got {beta1.shape} and {beta0.shape}"
        )
    b = np.concatenate([beta1, beta0])
    omega = np.block(
        [
            [ker.xtx("treated", x), ker.xtx("cross", x)],
            [ker.xtx("cross", x), ker.xtx("control", x)],
        ]
    )
    c = np.concatenate(
        [
            ker.weighted_vector("treated", x, pt.centered1)
            + ker.weighted_vector("cross", x, pt.centered0),
            ker.weighted_vector("control", x, pt.centered0)
            + ker.weighted_vector("cross", x, pt.centered1),
        ]
    )
    inv_n2 = 1.0 / (ker.n**2)
    return float(inv_n2 * (-b @ omega @ b + 2.0 * c @ b))
