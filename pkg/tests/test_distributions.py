"""Model types, divergences, and sample fitting."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from fairsteer.distributions import (
    DivergenceReport,
    FairDistribution,
    JointWeights,
    MultivariateSubgroupGaussian,
    SubgroupGaussian,
    fit_from_samples,
    gaussian_cdf,
    js_divergence,
    kl_divergence,
)
from fairsteer.errors import (
    DegenerateStd,
    InputValidationError,
    KeyMismatch,
    NonPositiveFeature,
    SingularCovariance,
    WeightsMismatch,
)

from conftest import make_binary, random_instance
from oracles import kl_dists_quad, kl_gaussian_quad


class TestSubgroupGaussian:
    def test_logpdf_matches_scipy(self):
        g = SubgroupGaussian(1.3, 0.7)
        xs = np.linspace(-4, 6, 41)
        np.testing.assert_allclose(g.logpdf(xs), stats.norm(1.3, 0.7).logpdf(xs), rtol=1e-12)

    def test_rejects_nonpositive_std(self):
        with pytest.raises(DegenerateStd):
            SubgroupGaussian(0.0, 0.0)
        with pytest.raises(DegenerateStd):
            SubgroupGaussian(0.0, -1.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(InputValidationError):
            SubgroupGaussian(np.nan, 1.0)


class TestMultivariateSubgroupGaussian:
    def test_logpdf_matches_scipy(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(3, 3))
        cov = np.eye(3) + a @ a.T
        mean = rng.normal(size=3)
        g = MultivariateSubgroupGaussian(mean, cov)
        xs = rng.normal(size=(20, 3))
        expected = stats.multivariate_normal(mean, cov).logpdf(xs)
        np.testing.assert_allclose(g.logpdf(xs), expected, rtol=1e-10)

    def test_rejects_asymmetric_cov(self):
        with pytest.raises(InputValidationError):
            MultivariateSubgroupGaussian(np.zeros(2), np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_rejects_singular_cov(self):
        with pytest.raises(SingularCovariance):
            MultivariateSubgroupGaussian(np.zeros(2), np.array([[1.0, 1.0], [1.0, 1.0]]))


class TestJointWeights:
    def test_sum_must_be_one(self):
        with pytest.raises(InputValidationError):
            JointWeights({(0, 0): 0.5, (1, 0): 0.6})

    def test_tolerates_tiny_drift(self):
        w = JointWeights({(0, 0): 0.5, (1, 0): 0.5 + 5e-13})
        assert abs(sum(w.q.values()) - 1.0) < 1e-9

    def test_marginals(self):
        w = JointWeights({(0, 0): 0.3, (1, 0): 0.2, (0, 1): 0.1, (1, 1): 0.4})
        assert w.class_marginal(0) == pytest.approx(0.4)
        assert w.group_marginal(1) == pytest.approx(0.5)

    def test_rejects_negative(self):
        with pytest.raises(InputValidationError):
            JointWeights({(0, 0): -0.1, (1, 0): 1.1})


class TestFairDistribution:
    def test_basic_accessors(self):
        dist = make_binary(
            {(0, 0): 0.0, (1, 0): 2.0, (0, 1): 1.0, (1, 1): 3.0},
            {key: 1.0 for key in ((0, 0), (1, 0), (0, 1), (1, 1))},
            {(0, 0): 0.3, (1, 0): 0.2, (0, 1): 0.1, (1, 1): 0.4},
        )
        assert dist.is_univariate and dist.is_binary and dist.dim == 1
        assert dist.q(1, 1) == pytest.approx(0.4)
        assert dist.class_given_group(1, 0) == pytest.approx(0.4)
        assert dist.subgroup(1, 0).mean == 2.0

    def test_missing_cell_rejected(self):
        with pytest.raises(KeyMismatch):
            FairDistribution(
                JointWeights({(0, 0): 0.5, (1, 0): 0.5}),
                {(0, 0): SubgroupGaussian(0, 1)},
                (0, 1),
                (0,),
            )

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(InputValidationError):
            FairDistribution(
                JointWeights({(0, 0): 0.5, (1, 0): 0.5}),
                {
                    (0, 0): SubgroupGaussian(0, 1),
                    (1, 0): MultivariateSubgroupGaussian(np.zeros(2), np.eye(2)),
                },
                (0, 1),
                (0,),
            )

    def test_with_subgroups_replaces_only_named_cells(self):
        dist = random_instance(np.random.default_rng(5))
        new = dist.with_subgroups({(0, 0): SubgroupGaussian(9.0, 2.0)})
        assert new.subgroup(0, 0).mean == 9.0
        assert new.subgroup(1, 1).mean == dist.subgroup(1, 1).mean

    def test_allclose(self):
        dist = random_instance(np.random.default_rng(6))
        assert dist.allclose(dist)
        shifted = dist.with_subgroups({(0, 0): SubgroupGaussian(99.0, 1.0)})
        assert not dist.allclose(shifted)


class TestGaussianCdf:
    @given(st.floats(-6, 6), st.floats(-3, 3), st.floats(0.1, 4))
    def test_matches_scipy(self, x, mean, std):
        g = SubgroupGaussian(mean, std)
        assert gaussian_cdf(x, g) == pytest.approx(
            stats.norm(mean, std).cdf(x), abs=1e-13
        )


class TestKLDivergence:
    def test_zero_on_identical(self):
        dist = random_instance(np.random.default_rng(1))
        assert kl_divergence(dist, dist) == 0.0

    def test_matches_quadrature_univariate(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            a = random_instance(rng)
            b = a.with_subgroups(
                {
                    key: SubgroupGaussian(
                        a.subgroup(*key).mean + rng.normal(0, 0.5),
                        a.subgroup(*key).std * rng.uniform(0.7, 1.4),
                    )
                    for key in a.keys()
                }
            )
            assert kl_divergence(b, a) == pytest.approx(kl_dists_quad(b, a), abs=1e-8)

    def test_single_cell_closed_form(self):
        got = kl_gaussian_quad(1.0, 2.0, -0.5, 1.5)
        expected = (
            np.log(1.5 / 2.0) + (4.0 + 2.25) / (2 * 2.25) - 0.5
        )
        assert got == pytest.approx(expected, abs=1e-9)

    def test_multivariate_matches_formula(self):
        rng = np.random.default_rng(3)
        d = 3
        a_mat = rng.normal(size=(d, d)) * 0.3
        cov_a = np.eye(d) + a_mat @ a_mat.T
        b_mat = rng.normal(size=(d, d)) * 0.3
        cov_b = np.eye(d) + b_mat @ b_mat.T
        mu_a, mu_b = rng.normal(size=d), rng.normal(size=d)

        cells = {(0, 0): (mu_a, cov_a), (1, 0): (mu_b, cov_b)}
        dist_p = FairDistribution(
            JointWeights({(0, 0): 0.5, (1, 0): 0.5}),
            {k: MultivariateSubgroupGaussian(m, c) for k, (m, c) in cells.items()},
            (0, 1),
            (0,),
        )
        dist_q = FairDistribution(
            dist_p.weights,
            {
                (0, 0): MultivariateSubgroupGaussian(mu_b, cov_b),
                (1, 0): MultivariateSubgroupGaussian(mu_a, cov_a),
            },
            (0, 1),
            (0,),
        )

        def kl_cell(m0, c0, m1, c1):
            inv1 = np.linalg.inv(c1)
            diff = m1 - m0
            return 0.5 * (
                np.trace(inv1 @ c0)
                + diff @ inv1 @ diff
                - d
                + np.log(np.linalg.det(c1) / np.linalg.det(c0))
            )

        expected = 0.5 * kl_cell(mu_a, cov_a, mu_b, cov_b) + 0.5 * kl_cell(
            mu_b, cov_b, mu_a, cov_a
        )
        assert kl_divergence(dist_p, dist_q) == pytest.approx(expected, rel=1e-10)

    def test_requires_same_cells(self):
        dist = random_instance(np.random.default_rng(4))
        other = FairDistribution(
            JointWeights({(0, 0): 0.5, (1, 0): 0.5}),
            {(0, 0): SubgroupGaussian(0, 1), (1, 0): SubgroupGaussian(1, 1)},
            (0, 1),
            (0,),
        )
        with pytest.raises(KeyMismatch):
            kl_divergence(dist, other)

    def test_weights_must_match(self):
        dist = random_instance(np.random.default_rng(7))
        q = dict(dist.weights.q)
        (k0, k1) = list(q)[:2]
        q[k0] += 0.05
        q[k1] -= 0.05
        other = dist.with_weights(JointWeights(q))
        with pytest.raises(WeightsMismatch):
            kl_divergence(other, dist)


class TestJSDivergence:
    def test_zero_on_identical(self):
        dist = random_instance(np.random.default_rng(8))
        assert js_divergence(dist, dist) == pytest.approx(0.0, abs=1e-10)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(9)
        a = random_instance(rng)
        b = a.with_subgroups(
            {(0, 0): SubgroupGaussian(a.subgroup(0, 0).mean + 2.0, 1.0)}
        )
        ab = js_divergence(a, b)
        ba = js_divergence(b, a)
        assert ab == pytest.approx(ba, abs=1e-9)
        assert 0.0 <= ab <= np.log(2.0)

    def test_far_apart_approaches_ln2(self):
        a = make_binary(
            {(0, 0): -60.0, (1, 0): -50.0, (0, 1): -60.0, (1, 1): -50.0},
            {key: 1.0 for key in ((0, 0), (1, 0), (0, 1), (1, 1))},
            {key: 0.25 for key in ((0, 0), (1, 0), (0, 1), (1, 1))},
        )
        b = make_binary(
            {(0, 0): 60.0, (1, 0): 50.0, (0, 1): 60.0, (1, 1): 50.0},
            {key: 1.0 for key in ((0, 0), (1, 0), (0, 1), (1, 1))},
            {key: 0.25 for key in ((0, 0), (1, 0), (0, 1), (1, 1))},
        )
        assert js_divergence(a, b) == pytest.approx(np.log(2.0), abs=1e-6)


class TestDivergenceReport:
    def test_clamps_tiny_negative_kl(self):
        rep = DivergenceReport(-1e-12, 0.01)
        assert rep.kl == 0.0

    def test_rejects_large_negative(self):
        with pytest.raises(InputValidationError):
            DivergenceReport(-1e-3, 0.01)


class TestFitFromSamples:
    def test_recovers_moments(self):
        rng = np.random.default_rng(10)
        truth = make_binary(
            {(0, 0): 0.0, (1, 0): 2.0, (0, 1): 1.0, (1, 1): 3.5},
            {(0, 0): 1.0, (1, 0): 1.5, (0, 1): 0.8, (1, 1): 2.0},
            {(0, 0): 0.3, (1, 0): 0.2, (0, 1): 0.1, (1, 1): 0.4},
        )
        rows = []
        n = 40_000
        for key in truth.keys():
            g = truth.subgroup(*key)
            count = int(round(truth.q(*key) * n))
            rows.extend(
                (np.array([x]), key[0], key[1])
                for x in rng.normal(g.mean, g.std, count)
            )
        fitted = fit_from_samples(rows)
        for key in truth.keys():
            assert fitted.subgroup(*key).mean == pytest.approx(
                truth.subgroup(*key).mean, abs=0.1
            )
            assert fitted.subgroup(*key).std == pytest.approx(
                truth.subgroup(*key).std, rel=0.1
            )
            assert fitted.q(*key) == pytest.approx(truth.q(*key), abs=0.02)

    def test_log_transform_fits_lognormal(self):
        rng = np.random.default_rng(11)
        rows = []
        for cls, mu in ((0, 0.0), (1, 1.0)):
            rows.extend(
                (np.array([x]), cls, 0)
                for x in np.exp(rng.normal(mu, 0.5, 5000))
            )
        fitted = fit_from_samples(rows, log_transform=True)
        assert fitted.subgroup(0, 0).mean == pytest.approx(0.0, abs=0.05)
        assert fitted.subgroup(1, 0).mean == pytest.approx(1.0, abs=0.05)

    def test_log_transform_rejects_nonpositive(self):
        rows = [(np.array([1.0]), 0, 0), (np.array([-2.0]), 0, 0)] * 2
        with pytest.raises(NonPositiveFeature):
            fit_from_samples(rows, log_transform=True)

    def test_multivariate_fit(self):
        rng = np.random.default_rng(12)
        cov = np.array([[1.0, 0.6], [0.6, 2.0]])
        rows = []
        for cls, shift in ((0, 0.0), (1, 3.0)):
            xs = rng.multivariate_normal([shift, -shift], cov, 4000)
            rows.extend((x, cls, 0) for x in xs)
        fitted = fit_from_samples(rows)
        assert fitted.dim == 2
        np.testing.assert_allclose(
            fitted.subgroup(1, 0).mean_vec, [3.0, -3.0], atol=0.15
        )
        np.testing.assert_allclose(fitted.subgroup(0, 0).cov, cov, atol=0.25)
