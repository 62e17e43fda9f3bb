"""Point estimators for the all-treated versus all-control contrast.

Implements the ratio-normalized (Hajek) estimator, the unbiased
inverse-probability (Horvitz-Thompson) estimator, their linearly
covariate-adjusted variants, and the two routes to adjustment coefficients:
the infeasible population optimum (for simulations, where the full
potential-outcome table is known) and its plug-in estimate built from
pair-level inverse probability weighting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .design import Assignment, Exposure, exposures
from .errors import (
    DimensionMismatchError,
    NoControlExposureError,
    NonFiniteDataError,
    NoTreatedExposureError,
)
from .graph import BipartiteGraph
from .kernels import ExposureKernels

if TYPE_CHECKING:  # pragma: no cover
    from .population import PotentialTable

__all__ = [
    "Dataset",
    "PointEstimate",
    "AdjustmentCoefficients",
    "AdjustmentSystem",
    "hajek",
    "horvitz_thompson",
    "adjusted_hajek",
    "build_adjustment_system",
    "estimate_beta",
    "oracle_beta",
]

PINV_RCOND = 1e-10  # singular values below this fraction of the largest are zero
CENTERING_TOL = 1e-9  # per-unit tolerance on covariate column sums


@dataclass(frozen=True)
class Dataset:
    """Observed outcomes and column-centered covariates for the n outcome units.

    Covariates are centered exactly once, at construction; ``x_means`` records
    what was subtracted so reports can translate coefficients back to the raw
    scale.  Use :meth:`centered` to build from raw columns.
    """

    y: np.ndarray
    x: np.ndarray
    x_means: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        x_means = np.asarray(self.x_means, dtype=float)
        if y.ndim != 1:
            raise DimensionMismatchError(f"y must be 1-D, got shape {y.shape}")
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise DimensionMismatchError(
                f"x must be (n, d) with n={y.shape[0]}, got {x.shape}"
            )
        if x_means.shape != (x.shape[1],):
            raise DimensionMismatchError(
                f"x_means must have shape ({x.shape[1]},), got {x_means.shape}"
            )
        if not np.isfinite(y).all() or not np.isfinite(x).all():
            raise NonFiniteDataError("outcomes and covariates must be finite")
        if x.size and np.abs(x.sum(axis=0)).max() > CENTERING_TOL * max(x.shape[0], 1):
            raise ValueError("covariate columns must be centered; use Dataset.centered")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "x_means", x_means)

    @classmethod
    def centered(
        cls,
        y: np.ndarray,
        x: np.ndarray | None = None,
        *,
        degrees_from: BipartiteGraph | None = None,
    ) -> "Dataset":
        """Build a dataset from raw covariates, centering each column.

        ``degrees_from`` appends the outcome-unit degree of the given graph as
        one extra (centered) covariate column, a cheap graph-derived covariate.
        """
        y = np.asarray(y, dtype=float)
        cols = []
        if x is not None:
            arr = np.asarray(x, dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1)
            if arr.ndim != 2 or arr.shape[0] != y.shape[0]:
                raise DimensionMismatchError(
                    f"x must have one row per outcome ({y.shape[0]}), got {arr.shape}"
                )
            cols.append(arr)
        if degrees_from is not None:
            cols.append(degrees_from.out_degrees.astype(float).reshape(-1, 1))
        raw = np.hstack(cols) if cols else np.empty((y.shape[0], 0))
        means = raw.mean(axis=0) if raw.size else np.zeros(raw.shape[1])
        return cls(y=y, x=raw - means, x_means=means)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def d(self) -> int:
        return int(self.x.shape[1])


@dataclass(frozen=True)
class PointEstimate:
    """Point estimate of the contrast plus the per-arm means it came from."""

    tau_hat: float
    mu1_hat: float
    mu0_hat: float
    n_treated_exposed: int
    n_control_exposed: int


@dataclass(frozen=True)
class AdjustmentCoefficients:
    """Linear adjustment coefficients for the treated and control arms."""

    beta1: np.ndarray
    beta0: np.ndarray
    rank: int
    source: str  # "oracle" | "estimated" | "user"

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta1", np.asarray(self.beta1, dtype=float))
        object.__setattr__(self, "beta0", np.asarray(self.beta0, dtype=float))

    @classmethod
    def zero(cls, d: int, source: str = "user") -> "AdjustmentCoefficients":
        return cls(beta1=np.zeros(d), beta0=np.zeros(d), rank=0, source=source)


def _validate(g: BipartiteGraph, a: Assignment, ds: Dataset) -> None:
    if a.m != g.m:
        raise DimensionMismatchError(f"assignment has {a.m} units, graph has m={g.m}")
    if ds.n != g.n:
        raise DimensionMismatchError(f"dataset has n={ds.n}, graph has n={g.n}")


def _ipw_vectors(g: BipartiteGraph, p: float) -> tuple[np.ndarray, np.ndarray]:
    degs = g.out_degrees.astype(float)
    return np.power(p, -degs), np.power(1.0 - p, -degs)


def _hajek_means(
    e: Exposure,
    wt_t: np.ndarray,
    wt_c: np.ndarray,
    y_treated: np.ndarray,
    y_control: np.ndarray,
) -> tuple[float, float]:
    t_w = e.t * wt_t
    c_w = e.c * wt_c
    den_t = t_w.sum()
    den_c = c_w.sum()
    if den_t == 0.0:
        raise NoTreatedExposureError("no outcome unit fully treated-exposed in this draw")
    if den_c == 0.0:
        raise NoControlExposureError("no outcome unit fully control-exposed in this draw")
    return float(t_w @ y_treated / den_t), float(c_w @ y_control / den_c)


def hajek(
    g: BipartiteGraph,
    a: Assignment,
    ds: Dataset,
    *,
    expo: Exposure | None = None,
) -> PointEstimate:
    """Ratio-normalized inverse-probability estimate of the contrast.

    Requires at least one exposed unit in each arm; raises
    :class:`NoTreatedExposureError` / :class:`NoControlExposureError` when the
    realized draw cannot identify an arm.
    """
    _validate(g, a, ds)
    e = expo if expo is not None else exposures(g, a)
    wt_t, wt_c = _ipw_vectors(g, a.p)
    mu1, mu0 = _hajek_means(e, wt_t, wt_c, ds.y, ds.y)
    return PointEstimate(
        tau_hat=mu1 - mu0,
        mu1_hat=mu1,
        mu0_hat=mu0,
        n_treated_exposed=int(e.t.sum()),
        n_control_exposed=int(e.c.sum()),
    )


def horvitz_thompson(
    g: BipartiteGraph,
    a: Assignment,
    ds: Dataset,
    *,
    expo: Exposure | None = None,
) -> PointEstimate:
    """Unnormalized inverse-probability estimate; unbiased but less stable."""
    _validate(g, a, ds)
    e = expo if expo is not None else exposures(g, a)
    wt_t, wt_c = _ipw_vectors(g, a.p)
    mu1 = float((e.t * ds.y * wt_t).mean())
    mu0 = float((e.c * ds.y * wt_c).mean())
    return PointEstimate(
        tau_hat=mu1 - mu0,
        mu1_hat=mu1,
        mu0_hat=mu0,
        n_treated_exposed=int(e.t.sum()),
        n_control_exposed=int(e.c.sum()),
    )


def adjusted_hajek(
    g: BipartiteGraph,
    a: Assignment,
    ds: Dataset,
    coef: AdjustmentCoefficients,
    *,
    expo: Exposure | None = None,
) -> PointEstimate:
    """Hajek estimate on linearly adjusted residuals.

    Replaces the outcome with ``y - beta1 @ x`` in the treated arm and
    ``y - beta0 @ x`` in the control arm; with zero coefficients this is
    exactly :func:`hajek`.
    """
    _validate(g, a, ds)
    if coef.beta1.shape != (ds.d,) or coef.beta0.shape != (ds.d,):
        raise DimensionMismatchError(
            f"coefficients must have shape ({ds.d},), got "
            f"{coef.beta1.shape} and {coef.beta0.shape}"
        )
    e = expo if expo is not None else exposures(g, a)
    wt_t, wt_c = _ipw_vectors(g, a.p)
    y_t = ds.y - ds.x @ coef.beta1
    y_c = ds.y - ds.x @ coef.beta0
    mu1, mu0 = _hajek_means(e, wt_t, wt_c, y_t, y_c)
    return PointEstimate(
        tau_hat=mu1 - mu0,
        mu1_hat=mu1,
        mu0_hat=mu0,
        n_treated_exposed=int(e.t.sum()),
        n_control_exposed=int(e.c.sum()),
    )


@dataclass(frozen=True)
class AdjustmentSystem:
    """Precomputed left-hand side of the adjustment normal equations.

    The 2d-by-2d Gram matrix stacks the covariate blocks for the treated,
    control and cross weights; it depends only on (graph, p, covariates), so
    simulations build it once per population.  ``pinv`` applies the
    Moore-Penrose pseudoinverse with singular values below ``PINV_RCOND``
    times the largest treated as zero.
    """

    omega: np.ndarray
    pinv: np.ndarray
    rank: int


def build_adjustment_system(ker: ExposureKernels, x: np.ndarray) -> AdjustmentSystem:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != ker.n:
        raise DimensionMismatchError(f"covariates must be (n, d) with n={ker.n}, got {x.shape}")
    omega = np.block(
        [
            [ker.xtx("treated", x), ker.xtx("cross", x)],
            [ker.xtx("cross", x), ker.xtx("control", x)],
        ]
    )
    if omega.size == 0:
        return AdjustmentSystem(omega=omega, pinv=omega.copy(), rank=0)
    u, s, vt = np.linalg.svd(omega, hermitian=True)
    cutoff = PINV_RCOND * s[0] if s.size and s[0] > 0 else np.inf
    keep = s > cutoff
    rank = int(keep.sum())
    pinv = (vt[keep].T / s[keep]) @ u[:, keep].T if rank else np.zeros_like(omega)
    return AdjustmentSystem(omega=omega, pinv=pinv, rank=rank)


def _solve(system: AdjustmentSystem, rhs: np.ndarray, d: int, source: str) -> AdjustmentCoefficients:
    beta = system.pinv @ rhs if rhs.size else rhs
    return AdjustmentCoefficients(
        beta1=beta[:d], beta0=beta[d:], rank=system.rank, source=source
    )


def estimate_beta(
    g: BipartiteGraph,
    a: Assignment,
    ds: Dataset,
    ker: ExposureKernels,
    *,
    point: PointEstimate | None = None,
    expo: Exposure | None = None,
    system: AdjustmentSystem | None = None,
) -> AdjustmentCoefficients:
    """Plug-in adjustment coefficients from one realized draw.

    The right-hand side replaces the unobservable covariate-outcome
    contractions with pair-level inverse-probability-weighted sums over
    exposed pairs, while the left-hand side keeps the known population Gram
    matrix.  ``point`` defaults to the Hajek means of this draw; pass a fixed
    one to study the estimator at known arm means.
    """
    _validate(g, a, ds)
    if ker.n != g.n:
        raise DimensionMismatchError(f"kernels have n={ker.n}, graph has n={g.n}")
    e = expo if expo is not None else exposures(g, a)
    pe = point if point is not None else hajek(g, a, ds, expo=e)
    sys_ = system if system is not None else build_adjustment_system(ker, ds.x)
    x, y = ds.x, ds.y
    r1 = y - pe.mu1_hat
    r0 = y - pe.mu0_hat
    t, c = e.t.astype(float), e.c.astype(float)
    oi, oj = ker.off_i, ker.off_j

    tt = t[oi] * t[oj]
    cc = c[oi] * c[oj]
    tt_ipw = tt * ker.off_ipw_treated
    cc_ipw = cc * ker.off_ipw_control
    t_diag = t * ker.diag_ipw_treated
    c_diag = c * ker.diag_ipw_control

    def paired(w_off: np.ndarray, w_diag: np.ndarray, r: np.ndarray) -> np.ndarray:
        out = x[oi].T @ (w_off * r[oj])
        out += x[oj].T @ (w_off * r[oi])
        out += x.T @ (w_diag * r)
        return out

    top = paired(tt_ipw * ker.off_treated, t_diag * ker.diag_treated, r1)
    top += paired(cc_ipw, c_diag, r0)  # cross weight is 1 on stored pairs
    bottom = paired(tt_ipw, t_diag, r1)
    bottom += paired(cc_ipw * ker.off_control, c_diag * ker.diag_control, r0)
    rhs = np.concatenate([top, bottom])
    return _solve(sys_, rhs, ds.d, source="estimated")


def oracle_beta(
    ker: ExposureKernels,
    ds: Dataset,
    pt: "PotentialTable",
    *,
    system: AdjustmentSystem | None = None,
) -> AdjustmentCoefficients:
    """Population-optimal adjustment coefficients (needs the full table).

    Maximizes the efficiency gain; the pseudoinverse picks one solution when
    the Gram matrix is rank-deficient.
    """
    if pt.n != ker.n or ds.n != ker.n:
        raise DimensionMismatchError(
            f"sizes disagree: kernels n={ker.n}, dataset n={ds.n}, table n={pt.n}"
        )
    sys_ = system if system is not None else build_adjustment_system(ker, ds.x)
    x = ds.x
    top = ker.weighted_vector("treated", x, pt.centered1)
    top += ker.weighted_vector("cross", x, pt.centered0)
    bottom = ker.weighted_vector("control", x, pt.centered0)
    bottom += ker.weighted_vector("cross", x, pt.centered1)
    rhs = np.concatenate([top, bottom])
    return _solve(sys_, rhs, ds.d, source="oracle")
