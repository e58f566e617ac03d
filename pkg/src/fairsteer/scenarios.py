"""Ready-made simulation scenarios and synthetic corpora.

A scenario bundles a univariate two-class, two-group model with a decision
threshold and the list of interventions to compare. The built-in set covers
four regimes:

* ``already-fair``: the model satisfies the exact fairness conditions, so
  every intervention should leave it essentially untouched;
* ``shifted-symmetric``: equal unit variances but unequal class gaps, the
  simplest genuinely unfair case;
* ``cost-3-4``: heteroskedastic groups evaluated at the asymmetric cost
  threshold 3/4 (false positives three times as expensive as false
  negatives);
* ``high-dp``: equal means but very different scales, which produces a large
  demographic disparity and an even larger opportunity gap.

``synthetic_biased_corpus`` builds the embedding-style dataset used by the
representation-steering pipeline: one group sees clean class-separated
Gaussian features, the other sees compressed and shifted copies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .distributions import FairDistribution, JointWeights, SubgroupGaussian
from .errors import InputValidationError, ParseError
from .specfile import dist_from_dict

__all__ = [
    "SIMULATION_METHODS",
    "SimulationScenario",
    "builtin_scenarios",
    "load_scenario",
    "synthetic_biased_corpus",
]

SIMULATION_METHODS = ("affirmative", "all", "mean-match")


@dataclass(frozen=True)
class SimulationScenario:
    """A named model plus the threshold and interventions to evaluate."""

    name: str
    dist: FairDistribution
    threshold: float = 0.5
    methods: tuple[str, ...] = SIMULATION_METHODS

    def __post_init__(self) -> None:
        if not self.name:
            raise InputValidationError("scenario name must be non-empty")
        if not (0.0 < self.threshold < 1.0):
            raise InputValidationError(
                f"threshold must lie strictly inside (0, 1), got {self.threshold}"
            )
        if not self.methods:
            raise InputValidationError("scenario must list at least one method")
        bad = [m for m in self.methods if m not in SIMULATION_METHODS]
        if bad:
            raise InputValidationError(
                f"unknown methods {bad}; choose from {SIMULATION_METHODS}"
            )
        if not self.dist.is_univariate:
            raise InputValidationError("simulation scenarios must be univariate")


def _two_by_two(
    means: dict[tuple[int, int], float],
    stds: dict[tuple[int, int], float],
    q: dict[tuple[int, int], float],
) -> FairDistribution:
    subgroups = {key: SubgroupGaussian(means[key], stds[key]) for key in means}
    return FairDistribution(JointWeights(q), subgroups, (0, 1), (0, 1))


_UNIFORM_Q = {(0, 0): 0.25, (1, 0): 0.25, (0, 1): 0.25, (1, 1): 0.25}


def builtin_scenarios() -> dict[str, SimulationScenario]:
    """The four named regimes shipped with the command line tools."""
    already_fair = _two_by_two(
        means={(0, 0): 0.0, (1, 0): 2.0, (0, 1): 1.0, (1, 1): 4.0},
        stds={(0, 0): 1.0, (1, 0): 1.0, (0, 1): 1.5, (1, 1): 1.5},
        q=dict(_UNIFORM_Q),
    )
    shifted = _two_by_two(
        means={(0, 0): 0.0, (1, 0): 2.0, (0, 1): 1.0, (1, 1): 4.0},
        stds={key: 1.0 for key in _UNIFORM_Q},
        q=dict(_UNIFORM_Q),
    )
    cost_3_4 = _two_by_two(
        means={(0, 0): 0.0, (1, 0): 2.0, (0, 1): 0.5, (1, 1): 2.5},
        stds={(0, 0): 0.8, (1, 0): 0.8, (0, 1): 1.6, (1, 1): 1.6},
        q=dict(_UNIFORM_Q),
    )
    high_dp = _two_by_two(
        means={(0, 0): 0.0, (1, 0): 2.0, (0, 1): 0.0, (1, 1): 2.0},
        stds={(0, 0): 0.5, (1, 0): 0.5, (0, 1): 2.0, (1, 1): 2.0},
        q={(0, 0): 0.4, (1, 0): 0.1, (0, 1): 0.4, (1, 1): 0.1},
    )
    scenarios = (
        SimulationScenario("already-fair", already_fair),
        SimulationScenario("shifted-symmetric", shifted),
        SimulationScenario("cost-3-4", cost_3_4, threshold=0.75),
        SimulationScenario("high-dp", high_dp),
    )
    return {s.name: s for s in scenarios}


def load_scenario(path: str) -> SimulationScenario:
    """Parse a scenario description file.

    The file is a JSON object with fields ``name``, ``spec`` (an inline
    distribution document) and optional ``threshold`` (default 0.5) and
    ``methods`` (default all three interventions).
    """
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: scenario file must be a JSON object")
    if "name" not in obj or "spec" not in obj:
        raise ParseError(f"{path}: scenario file needs 'name' and 'spec' fields")
    name = obj["name"]
    if not isinstance(name, str):
        raise ParseError(f"{path}: 'name' must be a string")
    threshold = obj.get("threshold", 0.5)
    if isinstance(threshold, bool) or not isinstance(threshold, (int, float)):
        raise ParseError(f"{path}: 'threshold' must be a number")
    methods = obj.get("methods", list(SIMULATION_METHODS))
    if not isinstance(methods, list) or not all(isinstance(m, str) for m in methods):
        raise ParseError(f"{path}: 'methods' must be an array of strings")
    dist = dist_from_dict(obj["spec"])
    return SimulationScenario(name, dist, float(threshold), tuple(methods))


def synthetic_biased_corpus(
    n: int = 50_000,
    d: int = 16,
    n_classes: int = 5,
    seed: int = 7,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Generate an embedding corpus where one group's features are degraded.

    Group 1 draws from clean class-conditional Gaussians N(mu_y, I). Group 0
    sees the same classes through a compressed and shifted lens: means are
    scaled toward the origin, displaced by a common offset, and the noise is
    rescaled. A group-blind classifier therefore separates group 1 well and
    group 0 poorly, giving a large spread of per-class recalls.

    Returns (features, labels, groups) with features float32 of shape (n, d).
    """
    if n < n_classes * 4 or d < 1 or n_classes < 2:
        raise InputValidationError("corpus needs n >= 4*n_classes, d >= 1, n_classes >= 2")
    rng = np.random.default_rng(seed)
    anchors = np.zeros((n_classes, d))
    for y in range(n_classes):
        anchors[y, y % d] = 2.2
    anchors += 0.4 * rng.normal(size=(n_classes, d))
    offset = 0.8 * rng.normal(size=d)

    labels = rng.integers(0, n_classes, size=n)
    groups = (rng.random(n) < 0.5).astype(int)
    noise = rng.normal(size=(n, d))

    features = np.empty((n, d))
    clean = groups == 1
    features[clean] = anchors[labels[clean]] + noise[clean]
    degraded = ~clean
    features[degraded] = (
        0.55 * anchors[labels[degraded]] + offset + 0.7 * noise[degraded]
    )
    return features.astype(np.float32), labels, groups
