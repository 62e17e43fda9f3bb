from __future__ import annotations

import numpy as np
import pytest

from bipex import (
    PotentialTable,
    build,
    build_kernels,
    cluster_graph,
    efficiency_gain,
    identity_graph,
    oracle_beta,
    true_estimand,
    true_variance,
)
from bipex.errors import DimensionMismatchError
from bipex.estimators import AdjustmentCoefficients, Dataset

from .helpers import dense_population_variance, random_connected_edges


def identity_closed_form(p, y1, y0):
    """Per-unit closed form of the contrast variance on the one-to-one graph.

    The treated and control exposure indicators of a unit are antithetic, so
    the two scaled outcomes combine with a plus sign inside the square; exact
    enumeration of all assignments confirms this form.
    """
    n = y1.shape[0]
    r1 = y1 - y1.mean()
    r0 = y0 - y0.mean()
    return p * (1 - p) / n**2 * float(((r1 / p + r0 / (1 - p)) ** 2).sum())


def cluster_closed_form(sizes, p, y1, y0):
    """Within-cluster-sum closed form of the contrast variance."""
    r1 = y1 - y1.mean()
    r0 = y0 - y0.mean()
    n = y1.shape[0]
    total = 0.0
    start = 0
    for size in sizes:
        block = slice(start, start + size)
        total += float((r1[block] / p + r0[block] / (1 - p)).sum()) ** 2
        start += size
    return p * (1 - p) / n**2 * total


class TestEstimand:
    def test_equal_tables_give_zero(self):
        y = np.array([1.0, 2.0, 3.0])
        tau, mu1, mu0 = true_estimand(PotentialTable(y1=y, y0=y))
        assert tau == 0.0 and mu1 == mu0

    def test_constant_shift(self, rng):
        y0 = rng.normal(size=20)
        tau, _, _ = true_estimand(PotentialTable(y1=y0 + 5.5, y0=y0))
        assert tau == pytest.approx(5.5, abs=1e-12)

    def test_small_case(self):
        tau, mu1, mu0 = true_estimand(
            PotentialTable(y1=np.array([2.0, 4.0]), y0=np.array([1.0, 1.0]))
        )
        assert (tau, mu1, mu0) == (2.0, 3.0, 1.0)

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            PotentialTable(y1=np.ones(3), y0=np.ones(4))


class TestTrueVariance:
    def test_identity_graph_closed_form(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 30))
            p = float(rng.uniform(0.1, 0.9))
            y1, y0 = rng.normal(size=n), rng.normal(size=n)
            ker = build_kernels(identity_graph(n), p)
            dec = true_variance(ker, PotentialTable(y1=y1, y0=y0))
            assert dec.total == pytest.approx(identity_closed_form(p, y1, y0), abs=1e-12)

    def test_cluster_graph_closed_form(self, rng):
        for _ in range(100):
            k = int(rng.integers(1, 6))
            sizes = [int(s) for s in rng.integers(1, 5, size=k)]
            p = float(rng.uniform(0.1, 0.9))
            n = sum(sizes)
            y1, y0 = rng.normal(size=n), rng.normal(size=n)
            ker = build_kernels(cluster_graph(sizes), p)
            dec = true_variance(ker, PotentialTable(y1=y1, y0=y0))
            assert dec.total == pytest.approx(
                cluster_closed_form(sizes, p, y1, y0), abs=1e-12
            )

    def test_constant_outcomes_zero(self, toy_graph):
        ker = build_kernels(toy_graph, 0.5)
        pt = PotentialTable(y1=np.full(5, 3.0), y0=np.full(5, 1.0))
        dec = true_variance(ker, pt)
        assert dec.total == 0.0 and dec.upper_bound == 0.0

    def test_matches_dense_route(self, rng):
        for _ in range(25):
            m, n = int(rng.integers(2, 8)), int(rng.integers(2, 12))
            p = float(rng.uniform(0.15, 0.85))
            edges = random_connected_edges(rng, m, n, 3)
            g = build(m, n, edges)
            y1, y0 = rng.normal(size=n), rng.normal(size=n)
            ker = build_kernels(g, p)
            dec = true_variance(ker, PotentialTable(y1=y1, y0=y0))
            ref = dense_population_variance(n, edges, p, y1, y0)
            assert dec.total == pytest.approx(ref[0], abs=1e-12)
            assert dec.treated == pytest.approx(ref[1], abs=1e-12)
            assert dec.control == pytest.approx(ref[2], abs=1e-12)
            assert dec.upper_bound == pytest.approx(ref[3], abs=1e-12)

    def test_upper_bound_dominates(self, rng):
        for _ in range(50):
            m, n = int(rng.integers(2, 9)), int(rng.integers(2, 20))
            p = float(rng.uniform(0.1, 0.9))
            g = build(m, n, random_connected_edges(rng, m, n, 3))
            ker = build_kernels(g, p)
            pt = PotentialTable(y1=rng.normal(size=n), y0=rng.normal(size=n))
            dec = true_variance(ker, pt)
            assert dec.upper_bound - dec.total >= -1e-10

    def test_proportional_tables_reach_equality_on_identity_graph(self, rng):
        for _ in range(20):
            n = int(rng.integers(3, 25))
            p = float(rng.uniform(0.2, 0.8))
            zeta = float(rng.uniform(0.2, 4.0))
            y0 = rng.normal(size=n)
            y1 = zeta * (y0 - y0.mean()) + rng.normal()
            ker = build_kernels(identity_graph(n), p)
            dec = true_variance(ker, PotentialTable(y1=y1, y0=y0))
            assert abs(dec.upper_bound - dec.total) <= 1e-10

    def test_constant_cluster_effects_reach_equality(self, rng):
        # proportional within-cluster sums make the bound tight on cluster graphs
        for _ in range(20):
            sizes = [int(s) for s in rng.integers(1, 5, size=int(rng.integers(2, 6)))]
            p = float(rng.uniform(0.2, 0.8))
            zeta = float(rng.uniform(0.2, 3.0))
            g = cluster_graph(sizes)
            n = g.n
            y0 = rng.normal(size=n)
            y1 = zeta * (y0 - y0.mean())
            ker = build_kernels(g, p)
            dec = true_variance(ker, PotentialTable(y1=y1, y0=y0))
            assert abs(dec.upper_bound - dec.total) <= 1e-10


class TestEfficiencyGain:
    def test_zero_coefficients_give_zero(self, toy_graph, rng):
        ker = build_kernels(toy_graph, 0.5)
        pt = PotentialTable(y1=rng.normal(size=5), y0=rng.normal(size=5))
        x = rng.normal(size=(5, 2))
        x -= x.mean(axis=0)
        assert efficiency_gain(ker, x, pt, np.zeros(2), np.zeros(2)) == 0.0

    def test_identity_with_variance_difference(self, rng):
        """The closed-form gain must equal the difference of the two variances
        (1000 random (instance, coefficient) draws)."""
        for _ in range(200):
            m, n = int(rng.integers(2, 8)), int(rng.integers(3, 12))
            p = float(rng.uniform(0.15, 0.85))
            d = int(rng.integers(1, 4))
            edges = random_connected_edges(rng, m, n, 3)
            g = build(m, n, edges)
            ker = build_kernels(g, p)
            x = rng.normal(size=(n, d))
            x -= x.mean(axis=0)
            pt = PotentialTable(y1=rng.normal(size=n), y0=rng.normal(size=n))
            base = true_variance(ker, pt).total
            for _ in range(5):
                beta1, beta0 = rng.normal(size=d), rng.normal(size=d)
                coef = AdjustmentCoefficients(
                    beta1=beta1, beta0=beta0, rank=2 * d, source="user"
                )
                gain = efficiency_gain(ker, x, pt, beta1, beta0)
                direct = base - true_variance(ker, pt, x=x, coef=coef).total
                assert gain == pytest.approx(direct, abs=1e-10, rel=1e-10)

    def test_oracle_coefficients_never_hurt(self, rng):
        for _ in range(50):
            m, n = int(rng.integers(2, 8)), int(rng.integers(3, 12))
            p = float(rng.uniform(0.2, 0.8))
            d = int(rng.integers(1, 3))
            g = build(m, n, random_connected_edges(rng, m, n, 3))
            ker = build_kernels(g, p)
            x = rng.normal(size=(n, d))
            ds = Dataset.centered(np.zeros(n), x)
            pt = PotentialTable(y1=rng.normal(size=n), y0=rng.normal(size=n))
            coef = oracle_beta(ker, ds, pt)
            gain = efficiency_gain(ker, ds.x, pt, coef.beta1, coef.beta0)
            assert gain >= -1e-12
            adjusted = true_variance(ker, pt, x=ds.x, coef=coef).total
            assert adjusted <= true_variance(ker, pt).total + 1e-12


class TestIntermediateFill:
    def test_realize_uses_fill_only_for_mixed_exposure(self, toy_graph):
        from bipex import Assignment, exposures

        pt = PotentialTable(
            y1=np.arange(5.0), y0=-np.arange(5.0), intermediate_value=99.0
        )
        e = exposures(toy_graph, Assignment(z=np.array([1, 0, 1, 1]), p=0.5))
        y = pt.realize(e)
        assert y.tolist() == [0.0, -1.0, 99.0, 3.0, 4.0]
