"""Cost-sensitive Bayes-optimal classifiers and exact fairness analytics.

For a binary univariate Gaussian mixture the group-aware Bayes classifier at
posterior threshold t predicts the positive class exactly on

    { x : log(p_1a(x) / p_0a(x)) >= log(t / (1 - t)) + log(q_0a / q_1a) },

which expands to a quadratic inequality A x**2 + B x + C >= 0 per group, hence
to at most two intervals of the real line. Error rate, demographic parity and
equal opportunity then reduce to Gaussian CDF differences over those
intervals and are computed exactly, with a seeded Monte-Carlo fallback for
multivariate distributions.

Conventions: classes[1] is the positive class; groups are compared pairwise
and the binary analytics assume exactly two groups.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any

import numpy as np

from .distributions import (
    FairDistribution,
    MultivariateSubgroupGaussian,
    SubgroupGaussian,
    gaussian_cdf,
)
from .errors import (
    DegenerateCost,
    DimensionMismatch,
    InputValidationError,
    LengthMismatch,
    UnknownGroup,
)

__all__ = [
    "CostMatrix",
    "DecisionRegions",
    "FairnessReport",
    "cost_threshold",
    "decision_regions",
    "positive_rate",
    "fairness_report",
    "fairness_report_mc",
    "tpr_gap_multiclass",
]

Interval = tuple[float, float]

# Discriminants smaller than this count as a tangent boundary (measure zero).
_DISC_CLAMP = 1e-14


@dataclass(frozen=True, slots=True)
class CostMatrix:
    """Cost c[i][j] of predicting class j when the truth is class i.

    The binary case must satisfy c10 > c00 and c01 > c11 so that the induced
    posterior threshold lies strictly inside (0, 1).
    """

    c: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise InputValidationError(f"cost matrix must be square with size >= 2, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InputValidationError("cost matrix has non-finite entries")
        if c.shape == (2, 2):
            if not (c[1, 0] > c[0, 0] and c[0, 1] > c[1, 1]):
                raise DegenerateCost(
                    "binary costs must satisfy c10 > c00 and c01 > c11 "
                    f"(got c00={c[0, 0]}, c01={c[0, 1]}, c10={c[1, 0]}, c11={c[1, 1]})"
                )
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def binary(cls, c00: float, c01: float, c10: float, c11: float) -> "CostMatrix":
        return cls(np.array([[c00, c01], [c10, c11]], dtype=float))

    @classmethod
    def zero_one(cls, n_classes: int = 2) -> "CostMatrix":
        return cls(np.ones((n_classes, n_classes)) - np.eye(n_classes))


def cost_threshold(cost: CostMatrix) -> float:
    """Posterior threshold t = (c10 - c00) / (c10 - c00 + c01 - c11) of a 2x2 cost matrix."""
    c = cost.c
    if c.shape != (2, 2):
        raise DimensionMismatch("cost_threshold is defined for 2x2 cost matrices")
    num = c[1, 0] - c[0, 0]
    den = (c[1, 0] - c[0, 0]) + (c[0, 1] - c[1, 1])
    if den <= 0.0 or num <= 0.0 or num >= den:
        raise DegenerateCost(f"costs induce no threshold in (0,1): numerator {num}, denominator {den}")
    return float(num / den)


def _check_threshold(t: float) -> float:
    t = float(t)
    if not (0.0 < t < 1.0):
        raise InputValidationError(f"threshold must lie strictly inside (0, 1), got {t}")
    return t


@dataclass(frozen=True, slots=True)
class DecisionRegions:
    """Per group: the sorted disjoint open intervals on which class 1 is predicted."""

    intervals: Mapping[Any, tuple[Interval, ...]]
    threshold: float

    def __post_init__(self) -> None:
        cleaned: dict[Any, tuple[Interval, ...]] = {}
        for group, ivs in dict(self.intervals).items():
            ivs = tuple((float(lo), float(hi)) for lo, hi in ivs)
            for lo, hi in ivs:
                if not lo < hi:
                    raise InputValidationError(f"empty or inverted interval ({lo}, {hi})")
            for (_, hi), (lo, _) in zip(ivs, ivs[1:]):
                if hi > lo:
                    raise InputValidationError("intervals must be sorted and disjoint")
            cleaned[group] = ivs
        object.__setattr__(self, "intervals", MappingProxyType(cleaned))
        object.__setattr__(self, "threshold", _check_threshold(self.threshold))

    def for_group(self, group: Any) -> tuple[Interval, ...]:
        try:
            return self.intervals[group]
        except KeyError:
            raise UnknownGroup(f"no decision region for group {group!r}") from None


def _quadratic_region(a: float, b: float, c: float) -> tuple[Interval, ...]:
    """Solution set of a*x**2 + b*x + c >= 0 as open intervals (boundary is measure zero)."""
    full: tuple[Interval, ...] = ((-math.inf, math.inf),)
    if a == 0.0:
        if b == 0.0:
            return full if c >= 0.0 else ()
        root = -c / b
        return ((root, math.inf),) if b > 0.0 else ((-math.inf, root),)
    # Extended precision keeps b*b - 4*a*c meaningful when the terms nearly cancel.
    al, bl, cl = np.longdouble(a), np.longdouble(b), np.longdouble(c)
    disc = bl * bl - np.longdouble(4.0) * al * cl
    if abs(float(disc)) < _DISC_CLAMP or disc < 0.0:
        # Tangent or rootless: the parabola never changes sign.
        return full if a > 0.0 else ()
    sq = np.sqrt(disc)
    qf = -(bl + np.copysign(sq, bl)) / np.longdouble(2.0)
    r1 = float(qf / al)
    r2 = float(cl / qf)
    lo, hi = (r1, r2) if r1 <= r2 else (r2, r1)
    if a > 0.0:
        return ((-math.inf, lo), (hi, math.inf))
    return ((lo, hi),)


def decision_regions(dist: FairDistribution, t: float) -> DecisionRegions:
    """Exact predict-positive regions of the threshold-t Bayes classifier, per group."""
    t = _check_threshold(t)
    if not (dist.is_binary and dist.is_univariate):
        raise DimensionMismatch("decision_regions requires a binary univariate distribution")
    neg, pos = dist.classes
    out: dict[Any, tuple[Interval, ...]] = {}
    for a in dist.groups:
        g0 = dist.subgroup(neg, a)
        g1 = dist.subgroup(pos, a)
        assert isinstance(g0, SubgroupGaussian) and isinstance(g1, SubgroupGaussian)
        tau = math.log(t / (1.0 - t)) + math.log(dist.q(neg, a) / dist.q(pos, a))
        v0, v1 = g0.var, g1.var
        qa = 0.5 / v0 - 0.5 / v1
        qb = g1.mean / v1 - g0.mean / v0
        qc = (
            g0.mean * g0.mean / (2.0 * v0)
            - g1.mean * g1.mean / (2.0 * v1)
            + math.log(g0.std / g1.std)
            - tau
        )
        if g0.std == g1.std:
            qa = 0.0
        out[a] = _quadratic_region(qa, qb, qc)
    return DecisionRegions(out, t)


def _interval_mass(g: SubgroupGaussian, intervals: tuple[Interval, ...]) -> float:
    return math.fsum(gaussian_cdf(hi, g) - gaussian_cdf(lo, g) for lo, hi in intervals)


def positive_rate(
    dist: FairDistribution,
    regions: DecisionRegions,
    group: Any,
    condition: Any | None = None,
) -> float:
    """Probability of predicting the positive class for one group.

    ``condition=None`` evaluates the group mixture (cells weighted by
    P(Y=i | A=a)); ``condition=i`` evaluates the class-i conditional, which
    for the positive class is the group's true positive rate.
    """
    if group not in dist.groups:
        raise UnknownGroup(f"group {group!r} is not one of {dist.groups!r}")
    ivs = regions.for_group(group)
    if condition is None:
        total = 0.0
        for i in dist.classes:
            g = dist.subgroup(i, group)
            if not isinstance(g, SubgroupGaussian):
                raise DimensionMismatch("positive_rate requires univariate subgroups")
            total += dist.class_given_group(i, group) * _interval_mass(g, ivs)
        return min(max(total, 0.0), 1.0)
    if condition not in dist.classes:
        raise InputValidationError(f"condition {condition!r} is not one of {dist.classes!r}")
    g = dist.subgroup(condition, group)
    if not isinstance(g, SubgroupGaussian):
        raise DimensionMismatch("positive_rate requires univariate subgroups")
    return min(max(_interval_mass(g, ivs), 0.0), 1.0)


def _clamp01(x: float, slack: float = 1e-9) -> float:
    if x < -slack or x > 1.0 + slack:
        raise InputValidationError(f"probability-valued metric out of range: {x}")
    return min(max(x, 0.0), 1.0)


@dataclass(frozen=True, slots=True)
class FairnessReport:
    """Error rate and group-fairness gaps of a threshold classifier; all in [0, 1]."""

    bayes_error: float
    delta_dp: float
    delta_eo: float
    per_class_tpr_gap: Mapping[Any, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bayes_error", _clamp01(float(self.bayes_error)))
        object.__setattr__(self, "delta_dp", _clamp01(float(self.delta_dp)))
        object.__setattr__(self, "delta_eo", _clamp01(float(self.delta_eo)))
        gaps = {k: _clamp01(float(v)) for k, v in dict(self.per_class_tpr_gap).items()}
        object.__setattr__(self, "per_class_tpr_gap", MappingProxyType(gaps))

    def csv_header(self) -> str:
        gap_cols = ",".join(f"gap_{c}" for c in self.per_class_tpr_gap)
        return "t,BE,dDP,dEO" + ("," + gap_cols if gap_cols else "")

    def csv_row(self, t: float) -> str:
        cells = [repr(float(t)), repr(self.bayes_error), repr(self.delta_dp), repr(self.delta_eo)]
        cells.extend(repr(v) for v in self.per_class_tpr_gap.values())
        return ",".join(cells)


def fairness_report(
    dist: FairDistribution, t: float, regions: DecisionRegions | None = None
) -> FairnessReport:
    """Exact error, demographic-parity and equal-opportunity gaps at threshold t.

    ``regions`` defaults to this distribution's own Bayes regions; passing the
    regions of a different (for example steered) distribution evaluates that
    classifier on this distribution instead.
    """
    if not (dist.is_binary and dist.is_univariate):
        raise DimensionMismatch("fairness_report requires a binary univariate distribution")
    if regions is None:
        regions = decision_regions(dist, t)
    neg, pos = dist.classes
    a0, a1 = dist.groups
    mass = {
        (i, a): positive_rate(dist, regions, a, condition=i)
        for i in dist.classes
        for a in dist.groups
    }
    # A cell's contribution to the error is its mass on the wrong side of the regions.
    error = math.fsum(
        dist.q(i, a) * (mass[(i, a)] if i == neg else 1.0 - mass[(i, a)])
        for i in dist.classes
        for a in dist.groups
    )
    pr = {a: positive_rate(dist, regions, a, condition=None) for a in dist.groups}
    gaps = {
        neg: abs((1.0 - mass[(neg, a0)]) - (1.0 - mass[(neg, a1)])),
        pos: abs(mass[(pos, a0)] - mass[(pos, a1)]),
    }
    return FairnessReport(
        bayes_error=error,
        delta_dp=abs(pr[a0] - pr[a1]),
        delta_eo=gaps[pos],
        per_class_tpr_gap=gaps,
    )


def _log_ratio_predict(
    dist: FairDistribution, t: float, group: Any, x: np.ndarray
) -> np.ndarray:
    """Boolean predict-positive decisions of dist's Bayes rule for points of one group."""
    neg, pos = dist.classes
    g0, g1 = dist.subgroup(neg, group), dist.subgroup(pos, group)
    tau = math.log(t / (1.0 - t)) + math.log(dist.q(neg, group) / dist.q(pos, group))
    return np.asarray(g1.logpdf(x)) - np.asarray(g0.logpdf(x)) >= tau


def fairness_report_mc(
    dist: FairDistribution,
    t: float,
    *,
    classifier_dist: FairDistribution | None = None,
    n_per_cell: int = 200_000,
    seed: int = 0,
) -> FairnessReport:
    """Monte-Carlo fairness report for distributions without exact region analytics.

    Draws ``n_per_cell`` points from every (class, group) cell of ``dist`` with
    a fixed seed and applies the Bayes rule of ``classifier_dist`` (default:
    ``dist`` itself). Accuracy scales as 1/sqrt(n_per_cell); results are
    deterministic for fixed inputs.
    """
    t = _check_threshold(t)
    if not dist.is_binary:
        raise DimensionMismatch("fairness_report_mc requires a binary distribution")
    clf = classifier_dist if classifier_dist is not None else dist
    if set(clf.keys()) != set(dist.keys()):
        raise InputValidationError("classifier distribution must share the same cells")
    rng = np.random.default_rng(seed)
    neg, pos = dist.classes
    a0, a1 = dist.groups
    pos_frac: dict[tuple[Any, Any], float] = {}
    for i in dist.classes:
        for a in dist.groups:
            g = dist.subgroup(i, a)
            if isinstance(g, SubgroupGaussian):
                draws = rng.normal(g.mean, g.std, n_per_cell)
            else:
                assert isinstance(g, MultivariateSubgroupGaussian)
                chol = np.linalg.cholesky(g.cov)
                draws = g.mean_vec + rng.standard_normal((n_per_cell, g.dim)) @ chol.T
            pos_frac[(i, a)] = float(np.mean(_log_ratio_predict(clf, t, a, draws)))
    error = math.fsum(
        dist.q(i, a) * (pos_frac[(i, a)] if i == neg else 1.0 - pos_frac[(i, a)])
        for i in dist.classes
        for a in dist.groups
    )
    pr = {
        a: math.fsum(dist.class_given_group(i, a) * pos_frac[(i, a)] for i in dist.classes)
        for a in dist.groups
    }
    gaps = {
        neg: abs((1.0 - pos_frac[(neg, a0)]) - (1.0 - pos_frac[(neg, a1)])),
        pos: abs(pos_frac[(pos, a0)] - pos_frac[(pos, a1)]),
    }
    return FairnessReport(
        bayes_error=error,
        delta_dp=abs(pr[a0] - pr[a1]),
        delta_eo=gaps[pos],
        per_class_tpr_gap=gaps,
    )


def tpr_gap_multiclass(
    labels: Sequence[Any], groups: Sequence[Any], preds: Sequence[Any]
) -> dict[Any, float]:
    """Per-class empirical TPR gap, maximized over group pairs.

    For each class y the gap is max over groups a, a' of
    |P[h=y | Y=y, A=a] - P[h=y | Y=y, A=a']| estimated from counts. Classes
    with an empty (y, a) cell are omitted with a warning.
    """
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    preds = np.asarray(preds)
    if not (labels.shape == groups.shape == preds.shape) or labels.ndim != 1:
        raise LengthMismatch(
            f"labels, groups, preds must be equal-length 1-d sequences, got "
            f"{labels.shape}, {groups.shape}, {preds.shape}"
        )
    group_values = [g for g in dict.fromkeys(groups.tolist())]
    out: dict[Any, float] = {}
    for y in dict.fromkeys(labels.tolist()):
        rates: list[float] = []
        skip = False
        for a in group_values:
            cell = (labels == y) & (groups == a)
            count = int(cell.sum())
            if count == 0:
                warnings.warn(
                    f"class {y!r}: no samples for group {a!r}; omitting its TPR gap",
                    stacklevel=2,
                )
                skip = True
                break
            rates.append(float(np.mean(preds[cell] == y)))
        if skip:
            continue
        out[y] = max(abs(r1 - r2) for r1 in rates for r2 in rates) if len(rates) > 1 else 0.0
    return out
