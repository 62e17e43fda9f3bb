from __future__ import annotations

import numpy as np
import pytest

from bipex import (
    Assignment,
    Dataset,
    PotentialTable,
    build,
    build_kernels,
    confidence_interval,
    exact_expectation,
    exposures,
    hajek,
    identity_graph,
    reject_null,
    sample,
    standard_normal_quantile,
    true_estimand,
    true_variance,
    variance_estimate,
)
from bipex.errors import InvalidAlphaError
from bipex.estimators import AdjustmentCoefficients, PointEstimate
from bipex.variance import VarianceEstimate

from .helpers import random_connected_edges


class TestVarianceEstimate:
    def test_zero_residuals_give_zero(self, toy_graph):
        a = Assignment(z=np.array([1, 0, 1, 1]), p=0.5)
        e = exposures(toy_graph, a)
        # outcomes equal to the arm means wherever exposed
        y = np.where(e.t == 1, 2.5, np.where(e.c == 1, 1.5, 0.0))
        ds = Dataset.centered(y)
        ker = build_kernels(toy_graph, 0.5)
        pe = PointEstimate(
            tau_hat=1.0, mu1_hat=2.5, mu0_hat=1.5, n_treated_exposed=3, n_control_exposed=1
        )
        ve = variance_estimate(toy_graph, a, ds, ker, pe, expo=e)
        assert ve.v1_hat == 0.0 and ve.v0_hat == 0.0 and ve.v_ub_hat == 0.0
        assert not ve.clamped1 and not ve.clamped0

    def test_fixed_mean_components_unbiased(self, rng):
        """Enumeration: with the true arm means plugged in, the estimated
        per-arm variances are exactly unbiased for the population values."""
        for _ in range(8):
            m, n = int(rng.integers(2, 6)), int(rng.integers(3, 9))
            p = float(rng.uniform(0.3, 0.7))
            edges = random_connected_edges(rng, m, n, 2)
            g = build(m, n, edges)
            ker = build_kernels(g, p)
            pt = PotentialTable(y1=rng.normal(size=n), y0=rng.normal(size=n))
            tau, mu1, mu0 = true_estimand(pt)
            fixed = PointEstimate(
                tau_hat=tau, mu1_hat=mu1, mu0_hat=mu0,
                n_treated_exposed=0, n_control_exposed=0,
            )

            def component(which):
                def stat(a, e, y):
                    ds = Dataset(y=y, x=np.empty((n, 0)), x_means=np.empty(0))
                    ve = variance_estimate(g, a, ds, ker, fixed, expo=e)
                    return ve.v1_hat if which == "treated" else ve.v0_hat

                return stat

            dec = true_variance(ker, pt)
            got1 = exact_expectation(g, p, pt, component("treated"))
            got0 = exact_expectation(g, p, pt, component("control"))
            assert got1 == pytest.approx(dec.treated, abs=1e-12)
            assert got0 == pytest.approx(dec.control, abs=1e-12)

    def test_adjusted_components_unbiased_at_true_means(self, rng):
        """Enumeration: with fixed coefficients and true arm means, the
        adjusted per-arm variance estimates are exactly unbiased for the
        residualized population components."""
        for _ in range(5):
            m, n = int(rng.integers(2, 6)), int(rng.integers(3, 8))
            p = float(rng.uniform(0.3, 0.7))
            edges = random_connected_edges(rng, m, n, 2)
            g = build(m, n, edges)
            ker = build_kernels(g, p)
            x = rng.normal(size=(n, 2))
            x -= x.mean(axis=0)
            pt = PotentialTable(y1=rng.normal(size=n), y0=rng.normal(size=n))
            tau, mu1, mu0 = true_estimand(pt)
            fixed = PointEstimate(
                tau_hat=tau, mu1_hat=mu1, mu0_hat=mu0,
                n_treated_exposed=0, n_control_exposed=0,
            )
            coef = AdjustmentCoefficients(
                beta1=rng.normal(size=2), beta0=rng.normal(size=2), rank=4, source="user"
            )
            dec = true_variance(ker, pt, x=x, coef=coef)

            def component(which):
                def stat(a, e, y):
                    ds = Dataset(y=y, x=x, x_means=np.zeros(2))
                    ve = variance_estimate(g, a, ds, ker, fixed, coef=coef, expo=e)
                    return ve.v1_hat if which == 1 else ve.v0_hat

                return stat

            got1 = exact_expectation(g, p, pt, component(1))
            got0 = exact_expectation(g, p, pt, component(0))
            assert got1 == pytest.approx(dec.treated, abs=1e-12)
            assert got0 == pytest.approx(dec.control, abs=1e-12)

    def test_identity_graph_reduces_to_per_unit_sum(self, rng):
        """On the one-to-one graph at p=0.5, the treated component is the
        classic weighted sum of squared residuals of exposed units."""
        n, p = 12, 0.5
        g = identity_graph(n)
        ker = build_kernels(g, p)
        y = rng.normal(size=n)
        ds = Dataset.centered(y)
        a = sample(p, n, rng)
        e = exposures(g, a)
        pe = hajek(g, a, ds, expo=e)
        ve = variance_estimate(g, a, ds, ker, pe, expo=e)
        # diagonal weight (1/p - 1) = 1, inverse joint probability 1/p = 2
        manual = float((e.t * (y - pe.mu1_hat) ** 2 * 1.0 * 2.0).sum()) / n**2
        assert ve.v1_hat == pytest.approx(manual, abs=1e-14)

    def test_shift_invariance(self, toy_graph, rng):
        ker = build_kernels(toy_graph, 0.5)
        a = Assignment(z=np.array([1, 0, 1, 1]), p=0.5)
        e = exposures(toy_graph, a)
        y = rng.normal(size=5)
        ds = Dataset.centered(y)
        pe = hajek(toy_graph, a, ds, expo=e)
        ve = variance_estimate(toy_graph, a, ds, ker, pe, expo=e)
        ds_shift = Dataset.centered(y + 4.2)
        pe_shift = hajek(toy_graph, a, ds_shift, expo=e)
        ve_shift = variance_estimate(toy_graph, a, ds_shift, ker, pe_shift, expo=e)
        assert ve_shift.v1_hat == pytest.approx(ve.v1_hat, abs=1e-10)
        assert ve_shift.v0_hat == pytest.approx(ve.v0_hat, abs=1e-10)

    def test_upper_bound_combination_and_clamping(self):
        ve = VarianceEstimate(
            v1_hat=-0.5, v0_hat=4.0, v_ub_hat=4.0, clamped1=True, clamped0=False
        )
        assert ve.v_ub_hat == (max(ve.v1_hat, 0.0) ** 0.5 + ve.v0_hat**0.5) ** 2

    def test_negative_component_clamped_and_flagged(self, rng):
        """Hunt a draw with a negative off-diagonal-dominated component."""
        found = False
        for seed in range(200):
            rng2 = np.random.default_rng(seed)
            m, n = 4, 8
            g = build(m, n, random_connected_edges(rng2, m, n, 3))
            ker = build_kernels(g, 0.5)
            y = rng2.normal(size=n)
            ds = Dataset.centered(y)
            a = sample(0.5, m, rng2)
            e = exposures(g, a)
            if e.t.sum() == 0 or e.c.sum() == 0:
                continue
            pe = hajek(g, a, ds, expo=e)
            ve = variance_estimate(g, a, ds, ker, pe, expo=e)
            if ve.v1_hat < 0 or ve.v0_hat < 0:
                found = True
                assert ve.clamped1 == (ve.v1_hat < 0)
                assert ve.clamped0 == (ve.v0_hat < 0)
                assert ve.v_ub_hat >= 0.0
                break
        assert found, "expected at least one draw with a negative component"

    def test_adjusted_residuals_used(self, toy_graph, rng):
        ker = build_kernels(toy_graph, 0.5)
        a = Assignment(z=np.array([1, 0, 1, 1]), p=0.5)
        e = exposures(toy_graph, a)
        x = rng.normal(size=(5, 1))
        ds = Dataset.centered(rng.normal(size=5), x)
        pe = hajek(toy_graph, a, ds, expo=e)
        coef = AdjustmentCoefficients(
            beta1=np.array([0.7]), beta0=np.array([-0.3]), rank=2, source="user"
        )
        ve_adj = variance_estimate(toy_graph, a, ds, ker, pe, coef=coef, expo=e)
        # same computation with pre-residualized outcomes and zero coefficients
        ds1 = Dataset(y=ds.y - ds.x @ coef.beta1, x=ds.x, x_means=ds.x_means)
        ve1 = variance_estimate(toy_graph, a, ds1, ker, pe, expo=e)
        ds0 = Dataset(y=ds.y - ds.x @ coef.beta0, x=ds.x, x_means=ds.x_means)
        ve0 = variance_estimate(toy_graph, a, ds0, ker, pe, expo=e)
        assert ve_adj.v1_hat == pytest.approx(ve1.v1_hat, abs=1e-14)
        assert ve_adj.v0_hat == pytest.approx(ve0.v0_hat, abs=1e-14)

    def test_consistency_at_scale(self, rng):
        """Stochastic: mean of the estimated bound tracks the population bound."""
        n, m, p = 2000, 200, 0.5
        g = build(m, n, random_connected_edges(rng, m, n, 3))
        ker = build_kernels(g, p)
        x = rng.uniform(0, 10, size=(n, 2))
        pt = PotentialTable(
            y1=2.0 + x @ np.array([1.0, 0.5]) + rng.normal(size=n),
            y0=x @ np.array([1.0, 0.5]) + rng.normal(size=n),
        )
        target = true_variance(ker, pt).upper_bound
        reps, total = 500, 0.0
        used = 0
        for _ in range(reps):
            a = sample(p, m, rng)
            e = exposures(g, a)
            if e.t.sum() == 0 or e.c.sum() == 0:
                continue
            y = pt.realize(e)
            ds = Dataset.centered(y)
            pe = hajek(g, a, ds, expo=e)
            ve = variance_estimate(g, a, ds, ker, pe, expo=e)
            total += ve.v_ub_hat
            used += 1
        ratio = (total / used) / target
        assert 0.9 <= ratio <= 1.1


class TestNormalQuantile:
    def test_reference_values(self):
        # reference quantiles of the standard normal distribution
        assert standard_normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-6)
        assert standard_normal_quantile(0.75) == pytest.approx(0.674489750196082, abs=1e-8)
        assert standard_normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)
        assert standard_normal_quantile(0.995) == pytest.approx(2.5758293035489004, abs=1e-8)

    def test_accuracy_against_erfc_inverse_sweep(self):
        # round-trip through the exact CDF: |Phi(quantile(p)) - p| tiny
        import math

        for p in np.linspace(1e-6, 1 - 1e-6, 2001):
            x = standard_normal_quantile(float(p))
            phi = 0.5 * math.erfc(-x / math.sqrt(2))
            assert abs(phi - p) < 1e-12

    def test_symmetry(self):
        for p in (0.6, 0.9, 0.999):
            assert standard_normal_quantile(p) == pytest.approx(
                -standard_normal_quantile(1 - p), abs=1e-12
            )

    def test_domain(self):
        with pytest.raises(InvalidAlphaError):
            standard_normal_quantile(0.0)
        with pytest.raises(InvalidAlphaError):
            standard_normal_quantile(1.0)


class TestConfidenceInterval:
    def test_alpha_05_quantile(self):
        ve = VarianceEstimate(v1_hat=1.0, v0_hat=1.0, v_ub_hat=4.0, clamped1=False, clamped0=False)
        ci = confidence_interval(1.0, ve, 0.05)
        assert ci.z_quantile == pytest.approx(1.95996398, abs=1e-6)
        assert ci.lower == pytest.approx(1.0 - 2 * ci.z_quantile, abs=1e-12)
        assert ci.upper == pytest.approx(1.0 + 2 * ci.z_quantile, abs=1e-12)
        assert ci.level == 0.95

    def test_alpha_half(self):
        ve = VarianceEstimate(v1_hat=0.0, v0_hat=0.0, v_ub_hat=1.0, clamped1=False, clamped0=False)
        ci = confidence_interval(0.0, ve, 0.5)
        assert ci.z_quantile == pytest.approx(0.67449, abs=1e-5)

    def test_degenerate_interval(self):
        ve = VarianceEstimate(v1_hat=0.0, v0_hat=0.0, v_ub_hat=0.0, clamped1=False, clamped0=False)
        ci = confidence_interval(2.5, ve, 0.05)
        assert ci.lower == ci.upper == 2.5

    def test_invalid_alpha(self):
        ve = VarianceEstimate(v1_hat=0.0, v0_hat=0.0, v_ub_hat=0.0, clamped1=False, clamped0=False)
        for bad in (0.0, 1.0, -0.1, 2.0):
            with pytest.raises(InvalidAlphaError):
                confidence_interval(0.0, ve, bad)


class TestRejectNull:
    def test_outside(self):
        ci = confidence_interval(
            0.3,
            VarianceEstimate(v1_hat=0.0025, v0_hat=0.0, v_ub_hat=0.0025,
                             clamped1=False, clamped0=False),
            0.05,
        )
        assert reject_null(ci, 0.0) is True
        assert reject_null(ci, 0.3) is False

    def test_boundary_not_rejected(self):
        from bipex.variance import ConfidenceInterval

        ci = ConfidenceInterval(lower=0.1, upper=0.5, level=0.95, z_quantile=1.96)
        assert reject_null(ci, 0.1) is False
        assert reject_null(ci, 0.5) is False
        assert reject_null(ci, 0.0999) is True
