"""Certifying that a distribution is fair for every cost-sensitive Bayes classifier.

A class- and group-conditioned Gaussian distribution is *ideal* when the Bayes
classifier of every cost matrix is simultaneously fair for demographic parity
and equal opportunity. Ideality is a closed-form property of the moments:

* univariate, binary: the standardized mean gap (mu_0a - mu_1a) / sigma_1a,
  the scale ratio sigma_1a / sigma_0a, and the weight ratio q_1a / q_0a must
  each be independent of the group a (necessary and sufficient);
* multivariate (any number of classes): for every ordered class pair (i, j)
  the whitened mean gap v = Sigma_ia^{-1/2} (mu_ia - mu_ja), the conjugated
  scale matrix M = Sigma_ia^{1/2} Sigma_ja^{-1} Sigma_ia^{1/2}, and the
  weight ratio q_ia / q_ja must be group-independent (sufficient).

A matrix square root is only defined up to an orthogonal factor, so the
multivariate conditions are compared through complete rotation invariants of
the pair (v, M): the sorted spectrum of M (whose 2-norm deviation equals the
smallest possible Frobenius distance over re-rotations) and the moment
functionals v' (M/c)^k v for k < d. Two groups have zero residuals exactly
when one orthogonal map aligns both quantities at once; in the binary-class
case that is the same as one affine map transporting every cell of one group
onto the other, which is what makes every Bayes classifier fair. The
univariate check keeps the raw signed quantities instead, matching the
necessary-and-sufficient scalar characterization. The module also provides
the classic reweighing baseline (make class and group independent) and
distance-to-fairness bounds derived from Pinsker's inequality.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any

import numpy as np

from ._linalg import sym_inv, sym_inv_sqrt, sym_sqrt
from .distributions import (
    FairDistribution,
    JointWeights,
    MultivariateSubgroupGaussian,
    SubgroupGaussian,
)
from .errors import DimensionMismatch, InputValidationError, NegativeKL

__all__ = [
    "IdealityVerdict",
    "PinskerBounds",
    "check_ideal_univariate",
    "check_ideal_multivariate",
    "reweigh_kamiran",
    "pinsker_bounds",
]

STANDARDIZED_GAP = "standardized_gap_gap"
VARIANCE_RATIO = "variance_ratio_gap"
WEIGHT_RATIO = "weight_ratio_gap"

_CONDITION_TITLES = {
    STANDARDIZED_GAP: "standardized mean gap",
    VARIANCE_RATIO: "scale ratio",
    WEIGHT_RATIO: "class-weight ratio",
}


@dataclass(frozen=True, slots=True)
class IdealityVerdict:
    """Outcome of an ideality check.

    ``residuals`` holds the worst cross-group mismatch of each of the three
    conditions; ``is_ideal`` is exactly the statement that every residual is
    within ``tolerance``. ``report`` is a plain-text account listing each
    condition with both sides and the residual.
    """

    is_ideal: bool
    residuals: Mapping[str, float]
    tolerance: float
    report: str

    def __post_init__(self) -> None:
        res = {str(k): float(v) for k, v in dict(self.residuals).items()}
        for key, value in res.items():
            if not (value >= 0.0 and math.isfinite(value)):
                raise InputValidationError(f"residual {key!r} must be finite and >= 0, got {value}")
        tol = float(self.tolerance)
        if not (tol > 0.0 and math.isfinite(tol)):
            raise InputValidationError(f"tolerance must be positive and finite, got {tol}")
        if self.is_ideal != (max(res.values()) <= tol):
            raise InputValidationError("verdict flag contradicts the residuals")
        object.__setattr__(self, "residuals", MappingProxyType(res))
        object.__setattr__(self, "tolerance", tol)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    def __str__(self) -> str:
        return self.report


def _format_side(value: Any) -> str:
    if isinstance(value, np.ndarray):
        return np.array2string(value, precision=6, separator=", ", suppress_small=True)
    return f"{value:.6g}"


def _verdict(
    residuals: dict[str, float],
    sides: dict[str, list[tuple[str, Any]]],
    tol: float,
) -> IdealityVerdict:
    tol = float(tol)
    if not (tol > 0.0 and math.isfinite(tol)):
        raise InputValidationError(f"tolerance must be positive and finite, got {tol}")
    is_ideal = max(residuals.values()) <= tol
    lines = []
    if is_ideal:
        lines.append(
            f"ideal: every Bayes classifier is exactly group-fair "
            f"(max residual {max(residuals.values()):.3g} <= tolerance {tol:.3g})"
        )
    else:
        worst = max(residuals, key=residuals.get)
        lines.append(
            f"not ideal: {_CONDITION_TITLES[worst]} mismatch "
            f"{residuals[worst]:.6g} > tolerance {tol:.3g}"
        )
    for key, residual in residuals.items():
        pieces = "; ".join(f"{label}: {_format_side(v)}" for label, v in sides[key])
        lines.append(f"  {_CONDITION_TITLES[key]}: {pieces}; residual {residual:.6g}")
    return IdealityVerdict(
        is_ideal=is_ideal, residuals=residuals, tolerance=tol, report="\n".join(lines)
    )


def check_ideal_univariate(dist: FairDistribution, tol: float = 1e-8) -> IdealityVerdict:
    """Exact (necessary and sufficient) ideality check for binary univariate distributions.

    Residuals are the largest over group pairs of the mismatch in the
    standardized mean gap, the within-group scale ratio, and the class-weight
    ratio.
    """
    if not (dist.is_binary and dist.is_univariate):
        raise DimensionMismatch("check_ideal_univariate requires a binary univariate distribution")
    neg, pos = dist.classes
    gap: dict[Any, float] = {}
    scale: dict[Any, float] = {}
    wratio: dict[Any, float] = {}
    for a in dist.groups:
        g0 = dist.subgroup(neg, a)
        g1 = dist.subgroup(pos, a)
        assert isinstance(g0, SubgroupGaussian) and isinstance(g1, SubgroupGaussian)
        gap[a] = (g0.mean - g1.mean) / g1.std
        scale[a] = g1.std / g0.std
        wratio[a] = dist.q(pos, a) / dist.q(neg, a)
    pairs = list(itertools.combinations(dist.groups, 2))
    residuals = {
        STANDARDIZED_GAP: max(abs(gap[a] - gap[b]) for a, b in pairs),
        VARIANCE_RATIO: max(abs(scale[a] - scale[b]) for a, b in pairs),
        WEIGHT_RATIO: max(abs(wratio[a] - wratio[b]) for a, b in pairs),
    }
    sides = {
        key: [(f"group {a!r}", values[a]) for a in dist.groups]
        for key, values in ((STANDARDIZED_GAP, gap), (VARIANCE_RATIO, scale), (WEIGHT_RATIO, wratio))
    }
    return _verdict(residuals, sides, tol)


def _as_matrix_gaussian(
    g: SubgroupGaussian | MultivariateSubgroupGaussian,
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(g, SubgroupGaussian):
        return np.array([g.mean]), np.array([[g.var]])
    return np.asarray(g.mean_vec), np.asarray(g.cov)


def _gap_moments(v: np.ndarray, m: np.ndarray, scale: float) -> np.ndarray:
    """Rotation invariants v' (m/scale)^k v for k = 0 .. d-1."""
    d = v.shape[0]
    out = np.empty(d)
    u = v.copy()
    normalized = m / scale
    for k in range(d):
        out[k] = float(v @ u)
        if k + 1 < d:
            u = normalized @ u
    return out


def check_ideal_multivariate(dist: FairDistribution, tol: float = 1e-8) -> IdealityVerdict:
    """Sufficient-condition ideality check for distributions of any dimension.

    For every ordered class pair the whitened mean gap v and conjugated scale
    matrix M of each group are compared through their simultaneous rotation
    invariants: the sorted spectrum of M and the moments v' (M/c)^k v (the
    whitening root is only determined up to rotation, so the raw quantities
    of two equivalent groups may differ by an orthogonal map). Univariate
    subgroups are lifted to 1x1 matrices, where the invariants reduce to the
    scalar conditions up to sign and squaring, so binary univariate verdicts
    agree with :func:`check_ideal_univariate` away from exact mirror images.
    For each condition the report shows the class/group combination with the
    largest mismatch.
    """
    if len(dist.classes) < 2:
        raise DimensionMismatch("ideality needs at least two classes")
    moments = {key: _as_matrix_gaussian(dist.subgroup(*key)) for key in dist.keys()}
    inv_sqrt = {key: sym_inv_sqrt(cov) for key, (_, cov) in moments.items()}
    sqrt = {key: sym_sqrt(cov) for key, (_, cov) in moments.items()}
    inv = {key: sym_inv(cov) for key, (_, cov) in moments.items()}
    residuals = {STANDARDIZED_GAP: 0.0, VARIANCE_RATIO: 0.0, WEIGHT_RATIO: 0.0}
    sides: dict[str, list[tuple[str, Any]]] = {k: [] for k in residuals}
    group_pairs = list(itertools.combinations(dist.groups, 2))
    for i, j in itertools.permutations(dist.classes, 2):
        whitened = {}
        conjugated = {}
        spectrum = {}
        ratio = {}
        for a in dist.groups:
            mu_i, _ = moments[(i, a)]
            mu_j, _ = moments[(j, a)]
            whitened[a] = inv_sqrt[(i, a)] @ (mu_i - mu_j)
            conjugated[a] = sqrt[(i, a)] @ inv[(j, a)] @ sqrt[(i, a)]
            spectrum[a] = np.linalg.eigvalsh(0.5 * (conjugated[a] + conjugated[a].T))
            ratio[a] = dist.q(i, a) / dist.q(j, a)
        for a, b in group_pairs:
            # One normalizer per comparison keeps the two moment vectors commensurable.
            c = max(spectrum[a][-1], spectrum[b][-1])
            gaps = {
                g: _gap_moments(whitened[g], conjugated[g], c) for g in (a, b)
            }
            checks = (
                (STANDARDIZED_GAP, float(np.max(np.abs(gaps[a] - gaps[b]))), gaps),
                (VARIANCE_RATIO, float(np.linalg.norm(spectrum[a] - spectrum[b])), spectrum),
                (WEIGHT_RATIO, abs(ratio[a] - ratio[b]), ratio),
            )
            for key, value, data in checks:
                if value >= residuals[key]:
                    residuals[key] = value
                    sides[key] = [
                        (f"classes ({i!r},{j!r}) group {a!r}", data[a]),
                        (f"classes ({i!r},{j!r}) group {b!r}", data[b]),
                    ]
    return _verdict(residuals, sides, tol)


def reweigh_kamiran(weights: JointWeights) -> JointWeights:
    """Replace joint class-group weights by the product of their marginals.

    This is the classical reweighing preprocessing step: it enforces
    statistical independence of class and group (q_ia = P(Y=i) P(A=a)),
    which makes the weight-ratio ideality condition hold exactly. The map is
    idempotent, and already-independent weights pass through unchanged.
    """
    classes = sorted({i for i, _ in weights.q}, key=repr)
    groups = sorted({a for _, a in weights.q}, key=repr)
    class_m = {i: weights.class_marginal(i) for i in classes}
    group_m = {a: weights.group_marginal(a) for a in groups}
    return JointWeights({(i, a): class_m[i] * group_m[a] for (i, a) in weights.q})


@dataclass(frozen=True, slots=True)
class PinskerBounds:
    """What KL distortion guarantees about deploying the steered classifier.

    ``err_transfer`` = sqrt(2 KL) bounds the absolute risk difference of any
    fixed classifier between the two distributions; ``eo_bound`` = sqrt(8 KL)
    bounds the equal-opportunity gap of the steered Bayes classifier on the
    original distribution. Both are raw bound values; the ``*_clamped``
    properties cut them at 1, the trivial bound for probabilities.
    """

    err_transfer: float
    eo_bound: float

    def __post_init__(self) -> None:
        for name in ("err_transfer", "eo_bound"):
            v = float(getattr(self, name))
            if not (v >= 0.0 and math.isfinite(v)):
                raise InputValidationError(f"{name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)

    @property
    def err_transfer_clamped(self) -> float:
        return min(self.err_transfer, 1.0)

    @property
    def eo_bound_clamped(self) -> float:
        return min(self.eo_bound, 1.0)


def pinsker_bounds(kl: float) -> PinskerBounds:
    """Pinsker-type fairness and error bounds from a KL divergence in nats."""
    kl = float(kl)
    if math.isnan(kl) or kl < 0.0:
        raise NegativeKL(f"KL divergence must be >= 0, got {kl}")
    return PinskerBounds(err_transfer=math.sqrt(2.0 * kl), eo_bound=math.sqrt(8.0 * kl))
