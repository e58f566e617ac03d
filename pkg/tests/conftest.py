"""Shared generators for random test instances."""

from __future__ import annotations

import numpy as np
from hypothesis import HealthCheck, settings

from fairsteer.distributions import (
    FairDistribution,
    JointWeights,
    MultivariateSubgroupGaussian,
    SubgroupGaussian,
)

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def make_binary(means, stds, q) -> FairDistribution:
    """Binary two-group univariate model from {(i, a): value} maps."""
    subgroups = {key: SubgroupGaussian(means[key], stds[key]) for key in means}
    return FairDistribution(JointWeights(dict(q)), subgroups, (0, 1), (0, 1))


def equal_ratio_weights(rng: np.random.Generator) -> dict:
    """Random valid weights with equal class ratios across groups."""
    m0 = rng.uniform(0.15, 0.85)
    p = rng.uniform(0.1, 0.9)
    return {
        (0, 0): m0 * (1 - p),
        (1, 0): m0 * p,
        (0, 1): (1 - m0) * (1 - p),
        (1, 1): (1 - m0) * p,
    }


def random_instance(rng: np.random.Generator) -> FairDistribution:
    """Random binary univariate instance satisfying the weight precondition."""
    means = {key: rng.uniform(-5.0, 5.0) for key in ((0, 0), (1, 0), (0, 1), (1, 1))}
    stds = {key: rng.uniform(0.2, 5.0) for key in means}
    return make_binary(means, stds, equal_ratio_weights(rng))


def random_ideal(rng: np.random.Generator) -> FairDistribution:
    """Random exactly ideal binary univariate instance."""
    gap = rng.uniform(-3.0, 3.0)
    scale = rng.uniform(0.3, 3.0)
    means = {}
    stds = {}
    for a in (0, 1):
        mu0 = rng.uniform(-5.0, 5.0)
        s0 = rng.uniform(0.2, 4.0)
        s1 = scale * s0
        means[(0, a)] = mu0
        stds[(0, a)] = s0
        means[(1, a)] = mu0 - gap * s1
        stds[(1, a)] = s1
    return make_binary(means, stds, equal_ratio_weights(rng))


def random_multivariate(
    rng: np.random.Generator, d: int, spread: float = 1.0
) -> FairDistribution:
    """Random binary two-group d-dimensional instance, equal weight ratios."""

    def cell(center_scale):
        mean = rng.uniform(-2.0, 2.0, d) * center_scale
        a = rng.normal(size=(d, d)) * 0.4 * spread
        cov = np.eye(d) * rng.uniform(0.4, 1.6) + a @ a.T
        return MultivariateSubgroupGaussian(mean, cov)

    subgroups = {
        (0, 0): cell(1.0),
        (1, 0): cell(1.5),
        (0, 1): cell(1.0),
        (1, 1): cell(1.5),
    }
    return FairDistribution(
        JointWeights(equal_ratio_weights(rng)), subgroups, (0, 1), (0, 1)
    )
