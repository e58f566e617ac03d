"""KL-nearest ideal distributions for binary univariate Gaussian mixtures.

Three intervention families, each returning the closest distribution in
KL(steered || original) within its feasible set:

* ``affirmative_univariate`` moves only the first group (means and scales of
  both classes); the optimum is closed form via a single quadratic in the
  scale parameter gamma.
* ``all_subgroups_univariate`` moves every subgroup; for a fixed cross-group
  scale ratio gamma the optimum is closed form, and the scalar gamma profile
  is minimized by a log-uniform grid scan refined with golden-section search.
* ``mean_matching`` shifts only the first group's means so both groups share
  the same overall feature mean; a weaker target than ideality, but always
  applicable and closed form.

The first two produce ideal distributions and keep the joint class-group
weights fixed, so they require the weight ratio q_1a / q_0a to already be
group-independent; otherwise the steered distribution could not be ideal and
the functions refuse to run (reweigh first, see ``reweigh_kamiran``).

Every intervention returns an :class:`InterventionResult` carrying the
steered distribution plus diagnostics: KL and JS divergences, fairness
reports before and after at a reference threshold, and Pinsker transfer
bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classify import FairnessReport, fairness_report, fairness_report_mc
from .distributions import (
    DivergenceReport,
    FairDistribution,
    SubgroupGaussian,
    js_divergence,
    kl_divergence,
)
from .errors import (
    DimensionMismatch,
    InputValidationError,
    SearchDiverged,
    WeightRatioViolation,
)
from .ideality import PinskerBounds, pinsker_bounds

__all__ = [
    "InterventionResult",
    "DIAGNOSTICS_HEADER",
    "check_weight_ratio",
    "affirmative_univariate",
    "affirmative_steered_at",
    "affirmative_objective",
    "all_subgroups_univariate",
    "all_subgroups_steered_at",
    "all_subgroups_objective",
    "mean_matching",
]

WEIGHT_RATIO_TOL = 1e-9

DIAGNOSTICS_HEADER = (
    "method,gamma_star,KL,JS,BE_before,BE_after,dDP_before,dDP_after,dEO_before,dEO_after"
)

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, slots=True)
class InterventionResult:
    """A steered distribution together with how it was reached and what it buys.

    ``gamma_star`` is the optimal scalar scale parameter (absent for mean
    matching and for matrix-valued steering, which fills ``gamma_matrix``
    instead). ``divergences`` measures the steered-versus-original distortion,
    the fairness reports compare the Bayes classifier at the reference
    threshold before and after, and ``pinsker`` bounds what deploying the
    steered classifier on the original data can cost. ``converged`` is False
    when an iterative solver stopped at its budget instead of a stationary
    point.
    """

    steered: FairDistribution
    divergences: DivergenceReport
    report_before: FairnessReport
    report_after: FairnessReport
    pinsker: PinskerBounds
    method: str
    gamma_star: float | None = None
    gamma_matrix: np.ndarray | None = None
    converged: bool = True
    iterations: int | None = None

    def diagnostics_row(self) -> str:
        """One CSV row matching DIAGNOSTICS_HEADER."""
        cells = [
            self.method,
            "" if self.gamma_star is None else repr(float(self.gamma_star)),
            repr(self.divergences.kl),
            repr(self.divergences.js),
            repr(self.report_before.bayes_error),
            repr(self.report_after.bayes_error),
            repr(self.report_before.delta_dp),
            repr(self.report_after.delta_dp),
            repr(self.report_before.delta_eo),
            repr(self.report_after.delta_eo),
        ]
        return ",".join(cells)


def _build_result(
    original: FairDistribution,
    steered: FairDistribution,
    method: str,
    t: float,
    *,
    gamma_star: float | None = None,
    gamma_matrix: np.ndarray | None = None,
    converged: bool = True,
    iterations: int | None = None,
) -> InterventionResult:
    kl = kl_divergence(steered, original)
    js = js_divergence(steered, original)
    if original.is_univariate:
        before = fairness_report(original, t)
        after = fairness_report(steered, t)
    else:
        before = fairness_report_mc(original, t)
        after = fairness_report_mc(steered, t)
    return InterventionResult(
        steered=steered,
        divergences=DivergenceReport(kl=kl, js=js),
        report_before=before,
        report_after=after,
        pinsker=pinsker_bounds(kl),
        method=method,
        gamma_star=gamma_star,
        gamma_matrix=gamma_matrix,
        converged=converged,
        iterations=iterations,
    )


def check_weight_ratio(dist: FairDistribution, tol: float = WEIGHT_RATIO_TOL) -> None:
    """Require the class-weight ratio q_1a / q_0a to be the same for every group.

    Interventions that keep the joint weights fixed can only reach an ideal
    distribution when this already holds; violations raise
    WeightRatioViolation instead of being silently reweighed (reweighing
    changes the distribution and must be an explicit caller step).
    """
    neg, pos = dist.classes[0], dist.classes[1]
    ratios = [dist.q(pos, a) / dist.q(neg, a) for a in dist.groups]
    worst = max(abs(r - ratios[0]) for r in ratios)
    if worst > tol:
        raise WeightRatioViolation(
            f"class-weight ratios differ across groups by {worst:.3g} (> {tol:.1g}); "
            "reweigh the weights first (see reweigh_kamiran)"
        )


def _check_threshold(t: float) -> float:
    t = float(t)
    if not (0.0 < t < 1.0):
        raise InputValidationError(f"threshold must lie strictly inside (0, 1), got {t}")
    return t


def _binary_two_group_moments(dist: FairDistribution, op: str):
    if not (dist.is_binary and dist.is_univariate):
        raise DimensionMismatch(f"{op} requires a binary univariate distribution")
    neg, pos = dist.classes
    a0, a1 = dist.groups
    g = {}
    for i in (neg, pos):
        for a in (a0, a1):
            sub = dist.subgroup(i, a)
            assert isinstance(sub, SubgroupGaussian)
            g[(i, a)] = sub
    return neg, pos, a0, a1, g


def _positive_root(qa: float, qb: float, qc: float) -> float:
    """Unique positive root of qa*g**2 + qb*g + qc with qa > 0 and qc < 0.

    The sign pattern guarantees one positive and one negative real root; the
    arithmetic picks the root formula whose numerator adds same-signed terms,
    avoiding cancellation in large-coefficient regimes.
    """
    disc = qb * qb - 4.0 * qa * qc
    sq = math.sqrt(disc)
    if qb <= 0.0:
        return (-qb + sq) / (2.0 * qa)
    return (2.0 * qc) / (-qb - sq)


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (gamma > 0.0 and math.isfinite(gamma)):
        raise InputValidationError(f"gamma must be positive and finite, got {gamma}")
    return gamma


def affirmative_steered_at(dist: FairDistribution, gamma: float) -> FairDistribution:
    """Best first-group-only steering for a fixed scale parameter gamma.

    The first group's scales become gamma times the second group's, and its
    class means take the precision-weighted least-KL positions that reproduce
    the second group's standardized mean gap.
    """
    gamma = _check_gamma(gamma)
    neg, pos, a0, a1, g = _binary_two_group_moments(dist, "affirmative_steered_at")
    d1 = g[(neg, a1)].mean - g[(pos, a1)].mean
    w0 = dist.q(neg, a0) / g[(neg, a0)].var
    w1 = dist.q(pos, a0) / g[(pos, a0)].var
    mu_pos = (w0 * (g[(neg, a0)].mean - gamma * d1) + w1 * g[(pos, a0)].mean) / (w0 + w1)
    mu_neg = mu_pos + gamma * d1
    return dist.with_subgroups(
        {
            (neg, a0): SubgroupGaussian(mu_neg, gamma * g[(neg, a1)].std),
            (pos, a0): SubgroupGaussian(mu_pos, gamma * g[(pos, a1)].std),
        }
    )


def affirmative_objective(dist: FairDistribution, gamma: float) -> float:
    """KL(affirmative_steered_at(dist, gamma) || dist) in closed form."""
    gamma = _check_gamma(gamma)
    neg, pos, a0, a1, g = _binary_two_group_moments(dist, "affirmative_objective")
    q0, q1 = dist.q(neg, a0), dist.q(pos, a0)
    d0 = g[(neg, a0)].mean - g[(pos, a0)].mean
    d1 = g[(neg, a1)].mean - g[(pos, a1)].mean
    spread = g[(neg, a0)].var / q0 + g[(pos, a0)].var / q1
    mean_term = 0.5 * (d0 - gamma * d1) ** 2 / spread
    var_term = 0.5 * q0 * (gamma * gamma * g[(neg, a1)].var / g[(neg, a0)].var - 1.0)
    var_term += 0.5 * q1 * (gamma * gamma * g[(pos, a1)].var / g[(pos, a0)].var - 1.0)
    log_term = (q0 + q1) * math.log(1.0 / gamma)
    log_term += q0 * math.log(g[(neg, a0)].std / g[(neg, a1)].std)
    log_term += q1 * math.log(g[(pos, a0)].std / g[(pos, a1)].std)
    return mean_term + var_term + log_term


def affirmative_univariate(dist: FairDistribution, *, t: float = 0.5) -> InterventionResult:
    """KL-nearest ideal distribution that changes only the first group.

    The optimal gamma is the unique positive root of a quadratic in the scale
    parameter; the steered means follow in closed form. Requires
    group-independent class-weight ratios. ``t`` is only the reference
    threshold for the before/after fairness reports.
    """
    t = _check_threshold(t)
    check_weight_ratio(dist)
    neg, pos, a0, a1, g = _binary_two_group_moments(dist, "affirmative_univariate")
    q0, q1 = dist.q(neg, a0), dist.q(pos, a0)
    d0 = g[(neg, a0)].mean - g[(pos, a0)].mean
    d1 = g[(neg, a1)].mean - g[(pos, a1)].mean
    v00, v10 = g[(neg, a0)].var, g[(pos, a0)].var
    v01, v11 = g[(neg, a1)].var, g[(pos, a1)].var
    qa = d1 * d1 + v01 + v11 + (q1 * v00 / (q0 * v10)) * v11 + (q0 * v10 / (q1 * v00)) * v01
    qb = -d0 * d1
    qc = -(q0 + q1) * (v00 / q0 + v10 / q1)
    gamma = _positive_root(qa, qb, qc)
    steered = affirmative_steered_at(dist, gamma)
    return _build_result(dist, steered, "affirmative", t, gamma_star=gamma)


def all_subgroups_steered_at(dist: FairDistribution, gamma: float) -> FairDistribution:
    """Best steering of all four subgroups for a fixed cross-group scale ratio gamma.

    gamma is the ratio of the second group's scales to the first's in the
    steered distribution, shared by both classes. Scales are
    precision-pooled per class; means move along the least-KL direction that
    equalizes the standardized mean gaps.
    """
    gamma = _check_gamma(gamma)
    neg, pos, a0, a1, g = _binary_two_group_moments(dist, "all_subgroups_steered_at")
    q = {key: dist.q(*key) for key in g}
    lam_num = gamma * (g[(neg, a0)].mean - g[(pos, a0)].mean) - (
        g[(neg, a1)].mean - g[(pos, a1)].mean
    )
    lam_den = (
        g[(neg, a1)].var / q[(neg, a1)]
        + g[(pos, a1)].var / q[(pos, a1)]
        + gamma * gamma * (g[(neg, a0)].var / q[(neg, a0)] + g[(pos, a0)].var / q[(pos, a0)])
    )
    lam = lam_num / lam_den
    new = {}
    for i in (neg, pos):
        pooled = (q[(i, a0)] + q[(i, a1)]) / (
            q[(i, a0)] / g[(i, a0)].var + q[(i, a1)] * gamma * gamma / g[(i, a1)].var
        )
        s0 = math.sqrt(pooled)
        sign = -1.0 if i == neg else 1.0
        mu0 = g[(i, a0)].mean + sign * gamma * lam * g[(i, a0)].var / q[(i, a0)]
        mu1 = g[(i, a1)].mean - sign * lam * g[(i, a1)].var / q[(i, a1)]
        new[(i, a0)] = SubgroupGaussian(mu0, s0)
        new[(i, a1)] = SubgroupGaussian(mu1, gamma * s0)
    return dist.with_subgroups(new)


def all_subgroups_objective(dist: FairDistribution, gamma: float) -> float:
    """KL(all_subgroups_steered_at(dist, gamma) || dist) in closed form."""
    gamma = _check_gamma(gamma)
    neg, pos, a0, a1, g = _binary_two_group_moments(dist, "all_subgroups_objective")
    q = {key: dist.q(*key) for key in g}
    num = gamma * (g[(neg, a0)].mean - g[(pos, a0)].mean) - (
        g[(neg, a1)].mean - g[(pos, a1)].mean
    )
    den = (
        g[(neg, a1)].var / q[(neg, a1)]
        + g[(pos, a1)].var / q[(pos, a1)]
        + gamma * gamma * (g[(neg, a0)].var / q[(neg, a0)] + g[(pos, a0)].var / q[(pos, a0)])
    )
    total = 0.5 * num * num / den
    for i in (neg, pos):
        qi0, qi1 = q[(i, a0)], q[(i, a1)]
        ratio = qi0 / qi1
        scale = gamma * gamma * g[(i, a0)].var / g[(i, a1)].var
        total += 0.5 * (qi0 + qi1) * (math.log(ratio + scale) - math.log(ratio + 1.0))
        total -= qi1 * math.log(gamma)
        total -= qi1 * math.log(g[(i, a0)].std / g[(i, a1)].std)
    return total


def all_subgroups_univariate(
    dist: FairDistribution,
    *,
    gamma_min: float = 1e-3,
    gamma_max: float = 1e3,
    grid_points: int = 2000,
    refine_iters: int = 60,
    t: float = 0.5,
) -> InterventionResult:
    """KL-nearest ideal distribution when every subgroup may move.

    Scans the scale-ratio profile on a log-uniform grid over
    [gamma_min, gamma_max] (ties resolved toward gamma = 1), then runs
    ``refine_iters`` golden-section steps between the argmin's neighbors. A
    minimum on the grid boundary means the objective keeps improving outside
    the window and raises SearchDiverged rather than guessing. Requires
    group-independent class-weight ratios.
    """
    t = _check_threshold(t)
    check_weight_ratio(dist)
    if not (0.0 < gamma_min < gamma_max and math.isfinite(gamma_max)):
        raise InputValidationError(
            f"need 0 < gamma_min < gamma_max, got ({gamma_min}, {gamma_max})"
        )
    if grid_points < 16:
        raise InputValidationError(f"grid_points must be at least 16, got {grid_points}")
    if refine_iters < 0:
        raise InputValidationError(f"refine_iters must be >= 0, got {refine_iters}")
    logs = np.linspace(math.log(gamma_min), math.log(gamma_max), int(grid_points))
    values = np.array([all_subgroups_objective(dist, math.exp(u)) for u in logs])
    best = float(values.min())
    tied = np.flatnonzero(values == best)
    idx = int(tied[np.argmin(np.abs(logs[tied]))])
    if idx == 0 or idx == len(logs) - 1:
        raise SearchDiverged(
            f"objective minimized at the gamma grid boundary (gamma ~ {math.exp(logs[idx]):.3g}); "
            "widen the [gamma_min, gamma_max] window"
        )
    lo, hi = logs[idx - 1], logs[idx + 1]
    u1 = hi - _INVPHI * (hi - lo)
    u2 = lo + _INVPHI * (hi - lo)
    f1 = all_subgroups_objective(dist, math.exp(u1))
    f2 = all_subgroups_objective(dist, math.exp(u2))
    for _ in range(int(refine_iters)):
        if f1 <= f2:
            hi, u2, f2 = u2, u1, f1
            u1 = hi - _INVPHI * (hi - lo)
            f1 = all_subgroups_objective(dist, math.exp(u1))
        else:
            lo, u1, f1 = u1, u2, f2
            u2 = lo + _INVPHI * (hi - lo)
            f2 = all_subgroups_objective(dist, math.exp(u2))
    gamma = math.exp(u1 if f1 <= f2 else u2)
    steered = all_subgroups_steered_at(dist, gamma)
    return _build_result(
        dist, steered, "all", t, gamma_star=gamma, iterations=int(refine_iters)
    )


def mean_matching(dist: FairDistribution, *, t: float = 0.5) -> InterventionResult:
    """Shift the first group's class means so both groups share one overall mean.

    The target is the second group's class-weighted feature mean; the shift
    is spread across the first group's classes in proportion to q * variance,
    which is the least-KL way to meet a linear constraint on means. Scales,
    weights and the second group are untouched. This matches first moments
    only, so the result is generally not ideal; no weight-ratio precondition
    applies.
    """
    t = _check_threshold(t)
    neg, pos, a0, a1, g = _binary_two_group_moments(dist, "mean_matching")
    q00, q10 = dist.q(neg, a0), dist.q(pos, a0)
    q01, q11 = dist.q(neg, a1), dist.q(pos, a1)
    target = (q00 + q10) * (q11 * g[(pos, a1)].mean + q01 * g[(neg, a1)].mean) / (q11 + q01)
    lam = (target - q00 * g[(neg, a0)].mean - q10 * g[(pos, a0)].mean) / (
        q00 * g[(neg, a0)].var + q10 * g[(pos, a0)].var
    )
    steered = dist.with_subgroups(
        {
            (neg, a0): SubgroupGaussian(
                g[(neg, a0)].mean + lam * g[(neg, a0)].var, g[(neg, a0)].std
            ),
            (pos, a0): SubgroupGaussian(
                g[(pos, a0)].mean + lam * g[(pos, a0)].var, g[(pos, a0)].std
            ),
        }
    )
    return _build_result(dist, steered, "mean-match", t)
