"""First-group steering for multivariate Gaussian mixtures.

Generalizes the univariate affirmative intervention: the steering parameter
becomes a symmetric positive semidefinite matrix Gamma that maps the second
group's geometry onto the first. For a fixed Gamma the best means and
covariances are closed form (``inner_solution``); Gamma itself is found by
projected gradient descent on the reduced objective, since no closed form is
known beyond one dimension.

The optimizer is deliberately plain: central finite-difference gradients,
projection onto the PSD cone by eigenvalue clipping, Armijo backtracking.
Non-convergence within the iteration budget returns the best iterate with
``converged=False`` and a warning rather than raising, because a near-optimal
steering is still usable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._linalg import project_psd, sym_inv, sym_inv_sqrt, sym_sqrt
from .distributions import (
    FairDistribution,
    MultivariateSubgroupGaussian,
    SubgroupGaussian,
)
from .errors import DimensionMismatch, InputValidationError
from .steer_univariate import InterventionResult, _build_result, check_weight_ratio

__all__ = [
    "MAX_STEER_DIM",
    "GammaMatrix",
    "InnerSolution",
    "lift_univariate",
    "inner_solution",
    "affirmative_multivariate",
]

MAX_STEER_DIM = 64

_SYM_TOL = 1e-10
_ARMIJO = 1e-4
_BACKTRACK = 0.5
_MIN_STEP = 1e-14


@dataclass(frozen=True)
class GammaMatrix:
    """Symmetric PSD steering matrix; the multivariate analogue of a scale ratio."""

    gamma: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DimensionMismatch(f"gamma must be a square matrix, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise InputValidationError("gamma contains non-finite entries")
        if not np.allclose(g, g.T, atol=_SYM_TOL, rtol=0.0):
            raise InputValidationError("gamma must be symmetric")
        g = 0.5 * (g + g.T)
        eigs = np.linalg.eigvalsh(g)
        if eigs.min() < -_SYM_TOL:
            raise InputValidationError(
                f"gamma must be positive semidefinite (min eigenvalue {eigs.min():.3g})"
            )
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class InnerSolution:
    """Closed-form best first-group moments for a fixed steering matrix.

    ``objective`` is KL(steered || original), which only the first group's
    cells contribute to.
    """

    gamma: GammaMatrix
    mean_neg: np.ndarray
    mean_pos: np.ndarray
    cov_neg: np.ndarray
    cov_pos: np.ndarray
    objective: float

    def apply(self, dist: FairDistribution) -> FairDistribution:
        """The steered distribution these moments describe."""
        neg, pos = dist.classes
        a0 = dist.groups[0]
        return dist.with_subgroups(
            {
                (neg, a0): MultivariateSubgroupGaussian(self.mean_neg, self.cov_neg),
                (pos, a0): MultivariateSubgroupGaussian(self.mean_pos, self.cov_pos),
            }
        )


def lift_univariate(dist: FairDistribution) -> FairDistribution:
    """Reshape scalar subgroups into 1-dimensional multivariate ones."""
    if not dist.is_univariate:
        return dist
    new = {}
    for key in dist.keys():
        sub = dist.subgroup(*key)
        assert isinstance(sub, SubgroupGaussian)
        new[key] = MultivariateSubgroupGaussian(
            np.array([sub.mean]), np.array([[sub.var]])
        )
    return dist.with_subgroups(new)


class _SteeringProblem:
    """Caches the fixed quantities of one steering instance.

    Works on raw square arrays for Gamma so finite-difference probes need not
    be symmetric or PSD; cells that would get a non-PD covariance score
    +inf, which backtracking then rejects.
    """

    def __init__(self, dist: FairDistribution):
        if dist.is_univariate:
            dist = lift_univariate(dist)
        if not dist.is_binary:
            raise DimensionMismatch("steering requires a binary distribution")
        if dist.dim > MAX_STEER_DIM:
            raise DimensionMismatch(
                f"dimension {dist.dim} exceeds the supported cap of {MAX_STEER_DIM}"
            )
        self.dist = dist
        self.dim = dist.dim
        neg, pos = dist.classes
        a0, a1 = dist.groups
        g = {key: dist.subgroup(*key) for key in dist.keys()}
        self.q00 = dist.q(neg, a0)
        self.q10 = dist.q(pos, a0)
        self.mu00 = g[(neg, a0)].mean_vec
        self.mu10 = g[(pos, a0)].mean_vec
        self.cov00 = g[(neg, a0)].cov
        self.cov10 = g[(pos, a0)].cov
        self.cov01 = g[(neg, a1)].cov
        self.cov11 = g[(pos, a1)].cov
        self.inv00 = sym_inv(self.cov00)
        self.inv10 = sym_inv(self.cov10)
        _, self.logdet00 = np.linalg.slogdet(self.cov00)
        _, self.logdet10 = np.linalg.slogdet(self.cov10)
        # Mean-gap of the template group, pointing from positive to negative.
        self.delta = g[(neg, a1)].mean_vec - g[(pos, a1)].mean_vec
        self.precision = self.q00 * self.inv00 + self.q10 * self.inv10

    def solve(self, gamma: np.ndarray):
        """Best means and covariances for this Gamma, plus the objective value."""
        cov_neg = gamma @ self.cov01 @ gamma.T
        cov_pos = gamma @ self.cov11 @ gamma.T
        cov_neg = 0.5 * (cov_neg + cov_neg.T)
        cov_pos = 0.5 * (cov_pos + cov_pos.T)
        shift = gamma @ self.delta
        rhs = self.q00 * (self.inv00 @ (self.mu00 - shift)) + self.q10 * (
            self.inv10 @ self.mu10
        )
        mean_pos = np.linalg.solve(self.precision, rhs)
        mean_neg = mean_pos + shift
        obj = self.q00 * self._cell_kl(
            mean_neg, cov_neg, self.mu00, self.inv00, self.logdet00
        )
        obj += self.q10 * self._cell_kl(
            mean_pos, cov_pos, self.mu10, self.inv10, self.logdet10
        )
        return mean_neg, mean_pos, cov_neg, cov_pos, float(obj)

    def _cell_kl(self, mean_new, cov_new, mean_old, inv_old, logdet_old) -> float:
        sign, logdet_new = np.linalg.slogdet(cov_new)
        if sign <= 0:
            return math.inf
        diff = mean_new - mean_old
        quad = float(diff @ inv_old @ diff)
        trace = float(np.trace(inv_old @ cov_new))
        return 0.5 * (quad + trace - self.dim + logdet_old - logdet_new)

    def objective(self, gamma: np.ndarray) -> float:
        return self.solve(gamma)[4]

    def gradient(self, gamma: np.ndarray) -> np.ndarray:
        """Central finite-difference gradient, symmetrized."""
        h = 1e-6 * (1.0 + float(np.linalg.norm(gamma)))
        grad = np.zeros_like(gamma)
        for i in range(self.dim):
            for j in range(self.dim):
                probe = gamma.copy()
                probe[i, j] += h
                up = self.objective(probe)
                probe[i, j] -= 2.0 * h
                down = self.objective(probe)
                grad[i, j] = (up - down) / (2.0 * h)
        return 0.5 * (grad + grad.T)


def inner_solution(dist: FairDistribution, gamma: GammaMatrix | np.ndarray) -> InnerSolution:
    """Best first-group steering for a fixed symmetric PSD matrix gamma.

    The first group's covariances become gamma-conjugates of the second
    group's, and its class means take the precision-weighted least-KL
    positions that reproduce the second group's mean gap through gamma.
    Requires group-independent class-weight ratios.
    """
    if not isinstance(gamma, GammaMatrix):
        gamma = GammaMatrix(np.asarray(gamma, dtype=float))
    check_weight_ratio(dist)
    problem = _SteeringProblem(dist)
    if gamma.dim != problem.dim:
        raise DimensionMismatch(
            f"gamma is {gamma.dim}x{gamma.dim} but the distribution has dimension {problem.dim}"
        )
    mean_neg, mean_pos, cov_neg, cov_pos, obj = problem.solve(gamma.gamma)
    return InnerSolution(
        gamma=gamma,
        mean_neg=mean_neg,
        mean_pos=mean_pos,
        cov_neg=cov_neg,
        cov_pos=cov_pos,
        objective=obj,
    )


def _initial_gamma(problem: _SteeringProblem) -> np.ndarray:
    """PSD projection of the whitening-recoloring map between the groups."""
    raw = sym_inv_sqrt(problem.cov01) @ sym_sqrt(problem.cov00)
    start = project_psd(raw)
    eigs = np.linalg.eigvalsh(start)
    if eigs.min() <= 0.0:
        start = start + (abs(eigs.min()) + 1e-6) * np.eye(problem.dim)
    return start


def affirmative_multivariate(
    dist: FairDistribution,
    *,
    max_iters: int = 5000,
    step_init: float = 1.0,
    grad_tol: float = 1e-8,
    t: float = 0.5,
) -> InterventionResult:
    """KL-nearest ideal distribution moving only the first group, any dimension.

    Projected gradient descent over the steering matrix with closed-form
    inner moments at each probe. Descent is monotone by construction. If the
    gradient norm fails to fall below ``grad_tol`` within ``max_iters``, the
    best iterate is returned with ``converged=False`` and a warning. ``t``
    is only the reference threshold for the before/after fairness reports
    (estimated by Monte Carlo above one dimension).
    """
    if max_iters < 1:
        raise InputValidationError(f"max_iters must be positive, got {max_iters}")
    if not (step_init > 0.0 and math.isfinite(step_init)):
        raise InputValidationError(f"step_init must be positive and finite, got {step_init}")
    if not (grad_tol > 0.0):
        raise InputValidationError(f"grad_tol must be positive, got {grad_tol}")
    check_weight_ratio(dist)
    problem = _SteeringProblem(dist)
    gamma = _initial_gamma(problem)
    value = problem.objective(gamma)
    step = float(step_init)
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        grad = problem.gradient(gamma)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= grad_tol:
            converged = True
            break
        accepted = False
        while step >= _MIN_STEP:
            candidate = project_psd(gamma - step * grad)
            cand_value = problem.objective(candidate)
            decrease = float(np.sum(grad * (gamma - candidate)))
            if cand_value <= value - _ARMIJO * decrease and cand_value < math.inf:
                gamma, value = candidate, cand_value
                accepted = True
                break
            step *= _BACKTRACK
        if not accepted:
            # No descent step exists at float resolution; treat a small
            # gradient as success and anything else as a failed run.
            converged = grad_norm <= max(grad_tol, 1e-6)
            break
        step = min(step * 2.0, float(step_init))
    if not converged:
        warnings.warn(
            "steering matrix search stopped before reaching the gradient tolerance; "
            "returning the best iterate found",
            RuntimeWarning,
            stacklevel=2,
        )
    solution = inner_solution(problem.dist, GammaMatrix(gamma))
    steered = solution.apply(problem.dist)
    return _build_result(
        problem.dist,
        steered,
        "multivariate",
        t,
        gamma_matrix=solution.gamma.gamma,
        converged=converged,
        iterations=iterations,
    )
