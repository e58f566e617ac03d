"""Domain types for class- and group-conditioned Gaussian mixtures.

A data distribution over (features X, class label Y, group membership A) is
described by joint cell weights q_ia = P(Y=i, A=a) together with one Gaussian
per cell for X | Y=i, A=a. Keys are always (class, group) tuples, written
(i, a) throughout.

Conventions used by the binary steering code:

  * ``classes[1]`` is the positive class, ``classes[0]`` the negative one;
  * ``groups[0]`` is the under-privileged group (the one interventions are
    allowed to change), ``groups[1]`` the reference group.

All types are immutable value objects and all functions are pure, so
everything here is safe to share across threads.

Divergences are reported in nats.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any

import numpy as np
from scipy import integrate

from ._linalg import EPS_PD, check_symmetric, eigh_pd, logdet_pd, sym_inv
from .errors import (
    DegenerateStd,
    DimensionMismatch,
    EmptyCell,
    InputValidationError,
    KeyMismatch,
    NonPositiveFeature,
    QuadratureFailure,
    WeightsMismatch,
)

__all__ = [
    "EPS_PD",
    "EPS_STD",
    "WEIGHT_SUM_TOL",
    "WEIGHT_MATCH_TOL",
    "Key",
    "SubgroupGaussian",
    "MultivariateSubgroupGaussian",
    "JointWeights",
    "FairDistribution",
    "DivergenceReport",
    "gaussian_cdf",
    "kl_divergence",
    "js_divergence",
    "fit_from_samples",
]

Key = tuple[Any, Any]

# Floor applied to fitted standard deviations; interventions divide by variances.
EPS_STD = 1e-8

# Joint weights must sum to one within this tolerance.
WEIGHT_SUM_TOL = 1e-12

# The mixture KL decomposition requires cell weights identical within this tolerance.
WEIGHT_MATCH_TOL = 1e-12

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Quadrature integration window: means padded by this many max-stds on each side.
_QUAD_PAD_SIGMAS = 10.0
_QUAD_ABS_TOL = 1e-8

# Fixed seed for the Monte-Carlo fallback used by multivariate JS estimates.
_JS_MC_SEED = 74233991
_JS_MC_SAMPLES = 1 << 16


@dataclass(frozen=True, slots=True)
class SubgroupGaussian:
    """Univariate feature distribution of one (class, group) cell: N(mean, std**2)."""

    mean: float
    std: float

    def __post_init__(self) -> None:
        mean = float(self.mean)
        std = float(self.std)
        if not (math.isfinite(mean) and math.isfinite(std)):
            raise InputValidationError(f"non-finite Gaussian parameters ({mean}, {std})")
        if std <= 0.0:
            raise DegenerateStd(f"std must be positive, got {std}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def var(self) -> float:
        return self.std * self.std

    def logpdf(self, x: np.ndarray | float) -> np.ndarray | float:
        z = (np.asarray(x, dtype=float) - self.mean) / self.std
        return -0.5 * z * z - math.log(self.std) - _LOG_SQRT_2PI


@dataclass(frozen=True, slots=True, eq=False)
class MultivariateSubgroupGaussian:
    """Multivariate cell distribution N(mean_vec, cov) with cov symmetric PD."""

    mean_vec: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean_vec, dtype=float).reshape(-1)
        if not np.all(np.isfinite(mean)):
            raise InputValidationError("non-finite mean vector")
        cov = check_symmetric(self.cov)
        if cov.shape[0] != mean.shape[0]:
            raise DimensionMismatch(
                f"mean has dimension {mean.shape[0]} but cov is {cov.shape[0]}x{cov.shape[1]}"
            )
        eigh_pd(cov, EPS_PD)  # rejects non-PD covariance
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean_vec", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return int(self.mean_vec.shape[0])

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        delta = x - self.mean_vec
        sol = np.linalg.solve(self.cov, delta.T).T
        quad = np.einsum("ij,ij->i", delta, sol)
        return -0.5 * quad - 0.5 * logdet_pd(self.cov) - self.dim * _LOG_SQRT_2PI


Subgroup = SubgroupGaussian | MultivariateSubgroupGaussian


def _validated_keys(q: Mapping[Key, float]) -> dict[Key, float]:
    out: dict[Key, float] = {}
    for key, value in q.items():
        if not (isinstance(key, tuple) and len(key) == 2):
            raise InputValidationError(f"weight keys must be (class, group) pairs, got {key!r}")
        out[key] = float(value)
    return out


@dataclass(frozen=True, slots=True)
class JointWeights:
    """Joint cell probabilities q_ia = P(Y=i, A=a); positive and summing to one."""

    q: Mapping[Key, float]

    def __post_init__(self) -> None:
        q = _validated_keys(self.q)
        if not q:
            raise InputValidationError("weights are empty")
        for key, value in q.items():
            if not math.isfinite(value) or value <= 0.0:
                raise InputValidationError(f"weight q{key} must be positive, got {value}")
        total = math.fsum(q.values())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InputValidationError(f"weights sum to {total!r}, expected 1 within {WEIGHT_SUM_TOL}")
        object.__setattr__(self, "q", MappingProxyType(q))

    def __getitem__(self, key: Key) -> float:
        return self.q[key]

    def class_marginal(self, i: Any) -> float:
        return math.fsum(v for (ci, _), v in self.q.items() if ci == i)

    def group_marginal(self, a: Any) -> float:
        return math.fsum(v for (_, ca), v in self.q.items() if ca == a)

    def allclose(self, other: "JointWeights", tol: float = WEIGHT_MATCH_TOL) -> bool:
        if set(self.q) != set(other.q):
            return False
        return all(abs(self.q[k] - other.q[k]) <= tol for k in self.q)


@dataclass(frozen=True, slots=True)
class FairDistribution:
    """A joint distribution over (X, Y, A): cell weights plus one Gaussian per cell."""

    weights: JointWeights
    subgroups: Mapping[Key, Subgroup]
    classes: Sequence[Any]
    groups: Sequence[Any]

    def __post_init__(self) -> None:
        classes = tuple(self.classes)
        groups = tuple(self.groups)
        if len(set(classes)) != len(classes) or not classes:
            raise InputValidationError(f"classes must be nonempty and unique, got {classes!r}")
        if len(set(groups)) != len(groups) or not groups:
            raise InputValidationError(f"groups must be nonempty and unique, got {groups!r}")
        expected = {(i, a) for i in classes for a in groups}
        if set(self.weights.q) != expected:
            raise KeyMismatch("weight keys do not cover exactly classes x groups")
        sub = dict(self.subgroups)
        if set(sub) != expected:
            raise KeyMismatch("subgroup keys do not cover exactly classes x groups")
        kinds = {type(g) for g in sub.values()}
        if len(kinds) != 1:
            raise DimensionMismatch("subgroups mix univariate and multivariate Gaussians")
        dims = {g.dim for g in sub.values() if isinstance(g, MultivariateSubgroupGaussian)}
        if len(dims) > 1:
            raise DimensionMismatch(f"subgroups have inconsistent dimensions {sorted(dims)}")
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "subgroups", MappingProxyType(sub))

    # -- structure ---------------------------------------------------------

    @property
    def is_univariate(self) -> bool:
        first = next(iter(self.subgroups.values()))
        return isinstance(first, SubgroupGaussian)

    @property
    def dim(self) -> int:
        first = next(iter(self.subgroups.values()))
        return 1 if isinstance(first, SubgroupGaussian) else first.dim

    @property
    def is_binary(self) -> bool:
        return len(self.classes) == 2 and len(self.groups) == 2

    def keys(self) -> tuple[Key, ...]:
        return tuple((i, a) for i in self.classes for a in self.groups)

    def subgroup(self, i: Any, a: Any) -> Subgroup:
        return self.subgroups[(i, a)]

    def q(self, i: Any, a: Any) -> float:
        return self.weights.q[(i, a)]

    def class_given_group(self, i: Any, a: Any) -> float:
        return self.q(i, a) / self.weights.group_marginal(a)

    # -- functional updates --------------------------------------------------

    def with_subgroups(self, replacements: Mapping[Key, Subgroup]) -> "FairDistribution":
        unknown = set(replacements) - set(self.subgroups)
        if unknown:
            raise KeyMismatch(f"replacement keys {sorted(unknown)!r} not present")
        merged = dict(self.subgroups)
        merged.update(replacements)
        return FairDistribution(self.weights, merged, self.classes, self.groups)

    def with_weights(self, weights: JointWeights) -> "FairDistribution":
        return FairDistribution(weights, dict(self.subgroups), self.classes, self.groups)

    def allclose(self, other: "FairDistribution", tol: float = 1e-12) -> bool:
        if self.keys() != other.keys():
            return False
        if not self.weights.allclose(other.weights, tol):
            return False
        for key in self.keys():
            a, b = self.subgroups[key], other.subgroups[key]
            if isinstance(a, SubgroupGaussian):
                if not isinstance(b, SubgroupGaussian):
                    return False
                if abs(a.mean - b.mean) > tol or abs(a.std - b.std) > tol:
                    return False
            else:
                if not isinstance(b, MultivariateSubgroupGaussian):
                    return False
                if not (
                    np.allclose(a.mean_vec, b.mean_vec, rtol=0.0, atol=tol)
                    and np.allclose(a.cov, b.cov, rtol=0.0, atol=tol)
                ):
                    return False
        return True


@dataclass(frozen=True, slots=True)
class DivergenceReport:
    """KL and Jensen-Shannon divergence between two distributions, in nats."""

    kl: float
    js: float

    def __post_init__(self) -> None:
        kl = float(self.kl)
        js = float(self.js)
        # Quadrature and closed forms may undershoot zero by rounding noise.
        if kl < 0.0:
            if kl < -1e-9:
                raise InputValidationError(f"kl must be nonnegative, got {kl}")
            kl = 0.0
        ln2 = math.log(2.0)
        if js < 0.0 or js > ln2:
            if js < -1e-9 or js > ln2 + 1e-9:
                raise InputValidationError(f"js must lie in [0, ln 2], got {js}")
            js = min(max(js, 0.0), ln2)
        object.__setattr__(self, "kl", kl)
        object.__setattr__(self, "js", js)


# ---------------------------------------------------------------------------
# Gaussian primitives
# ---------------------------------------------------------------------------


def gaussian_cdf(x: float, g: SubgroupGaussian) -> float:
    """P(X <= x) for X ~ N(g.mean, g.std**2), accurate in both tails."""
    if isinstance(g, MultivariateSubgroupGaussian):
        raise DimensionMismatch("gaussian_cdf is defined for univariate subgroups")
    if math.isnan(x):
        raise InputValidationError("gaussian_cdf received NaN")
    z = (x - g.mean) / g.std
    return 0.5 * math.erfc(-z / _SQRT2)


def _kl_univariate(new: SubgroupGaussian, orig: SubgroupGaussian) -> float:
    dm = new.mean - orig.mean
    return (
        (dm * dm) / (2.0 * orig.var)
        + (new.var - orig.var) / (2.0 * orig.var)
        + math.log(orig.std / new.std)
    )


def _kl_multivariate(new: MultivariateSubgroupGaussian, orig: MultivariateSubgroupGaussian) -> float:
    if new.dim != orig.dim:
        raise DimensionMismatch("KL between Gaussians of different dimensions")
    inv_orig = sym_inv(orig.cov)
    delta = new.mean_vec - orig.mean_vec
    quad = float(delta @ inv_orig @ delta)
    trace = float(np.trace(inv_orig @ new.cov))
    logdet = logdet_pd(orig.cov) - logdet_pd(new.cov)
    return 0.5 * (quad + trace - new.dim + logdet)


def _require_same_keys(a: FairDistribution, b: FairDistribution) -> None:
    if set(a.keys()) != set(b.keys()):
        raise KeyMismatch("distributions are indexed by different (class, group) sets")


def kl_divergence(dist_new: FairDistribution, dist_orig: FairDistribution) -> float:
    """KL(new || orig) for two mixtures sharing identical cell weights.

    With (Y, A) unchanged the joint KL decomposes into the weighted sum of
    per-cell Gaussian divergences; differing weights are rejected because the
    decomposition does not hold for them.
    """
    _require_same_keys(dist_new, dist_orig)
    if not dist_new.weights.allclose(dist_orig.weights, WEIGHT_MATCH_TOL):
        raise WeightsMismatch(
            f"cell weights differ by more than {WEIGHT_MATCH_TOL}; the KL decomposition requires identical weights"
        )
    total = 0.0
    for key in dist_new.keys():
        new, orig = dist_new.subgroups[key], dist_orig.subgroups[key]
        if isinstance(new, SubgroupGaussian) != isinstance(orig, SubgroupGaussian):
            raise DimensionMismatch("cannot mix univariate and multivariate cells")
        if isinstance(new, SubgroupGaussian):
            cell = _kl_univariate(new, orig)
        else:
            cell = _kl_multivariate(new, orig)
        total += dist_new.weights.q[key] * cell
    return max(total, 0.0)


def _js_cell_univariate(
    qa: float, ga: SubgroupGaussian, qb: float, gb: SubgroupGaussian
) -> float:
    """JS contribution of one (i, a) cell between joint densities qa*pa and qb*pb."""
    lo = min(ga.mean, gb.mean) - _QUAD_PAD_SIGMAS * max(ga.std, gb.std)
    hi = max(ga.mean, gb.mean) + _QUAD_PAD_SIGMAS * max(ga.std, gb.std)
    log_qa, log_qb = math.log(qa), math.log(qb)

    def one_sided(log_self, log_other, own_logq, other_logq):
        def integrand(x: float) -> float:
            lf = own_logq + float(log_self(x))
            lg = other_logq + float(log_other(x))
            lm = np.logaddexp(lf, lg) - math.log(2.0)
            return math.exp(lf) * (lf - lm)

        value, abserr = integrate.quad(integrand, lo, hi, limit=200, epsabs=1e-10, epsrel=1e-10)
        if abserr > _QUAD_ABS_TOL:
            raise QuadratureFailure(
                f"JS quadrature error {abserr:.2e} exceeds tolerance {_QUAD_ABS_TOL:.0e}"
            )
        return value

    term_a = one_sided(ga.logpdf, gb.logpdf, log_qa, log_qb)
    term_b = one_sided(gb.logpdf, ga.logpdf, log_qb, log_qa)
    return 0.5 * term_a + 0.5 * term_b


def _js_cell_multivariate(
    qa: float,
    ga: MultivariateSubgroupGaussian,
    qb: float,
    gb: MultivariateSubgroupGaussian,
    rng: np.random.Generator,
) -> float:
    """Fixed-seed Monte-Carlo JS contribution of one cell (no multivariate quadrature)."""
    log_qa, log_qb = math.log(qa), math.log(qb)

    def one_sided(g_self, g_other, own_logq, other_logq):
        vals, vecs = np.linalg.eigh(g_self.cov)
        root = vecs * np.sqrt(np.clip(vals, 0.0, None))
        draws = g_self.mean_vec + rng.standard_normal((_JS_MC_SAMPLES, g_self.dim)) @ root.T
        lf = own_logq + g_self.logpdf(draws)
        lg = other_logq + g_other.logpdf(draws)
        lm = np.logaddexp(lf, lg) - math.log(2.0)
        return float(np.mean(lf - lm))

    term_a = one_sided(ga, gb, log_qa, log_qb)
    term_b = one_sided(gb, ga, log_qb, log_qa)
    return 0.5 * qa * term_a + 0.5 * qb * term_b


def js_divergence(dist_a: FairDistribution, dist_b: FairDistribution) -> float:
    """Jensen-Shannon divergence between two joint densities q_ia * p_ia(x), in nats.

    The (i, a) cells partition the joint support, so the divergence is the sum
    of per-cell contributions computed against the midpoint mixture. Univariate
    cells use adaptive quadrature; multivariate cells fall back to a fixed-seed
    Monte-Carlo average (accuracy around 1e-3), since JS is a report-only
    diagnostic and no closed form exists.
    """
    _require_same_keys(dist_a, dist_b)
    total = 0.0
    rng = np.random.default_rng(_JS_MC_SEED)
    for key in dist_a.keys():
        qa, qb = dist_a.weights.q[key], dist_b.weights.q[key]
        ga, gb = dist_a.subgroups[key], dist_b.subgroups[key]
        if isinstance(ga, SubgroupGaussian) != isinstance(gb, SubgroupGaussian):
            raise DimensionMismatch("cannot mix univariate and multivariate cells")
        if isinstance(ga, SubgroupGaussian):
            cell = _js_cell_univariate(qa, ga, qb, gb)
        else:
            cell = _js_cell_multivariate(qa, ga, qb, gb, rng)
        total += cell
    return min(max(total, 0.0), math.log(2.0))


# ---------------------------------------------------------------------------
# Moment estimation
# ---------------------------------------------------------------------------


def _stable_sorted(values: Iterable[Any]) -> list[Any]:
    unique = list(dict.fromkeys(values))
    try:
        return sorted(unique)
    except TypeError:
        return sorted(unique, key=str)


def fit_from_samples(
    rows: Iterable[tuple[Any, Any, Any]], *, log_transform: bool = False
) -> FairDistribution:
    """Estimate a FairDistribution from (x, class, group) samples.

    Cell weights are empirical frequencies; cell moments are the sample mean
    and unbiased sample std/covariance. Requires at least two samples per
    (class, group) cell. With ``log_transform`` the features are replaced by
    their natural log first (all values must be strictly positive), which maps
    log-normal data into the Gaussian family handled here.
    """
    cells: dict[Key, list[np.ndarray]] = {}
    n_rows = 0
    dim: int | None = None
    for x, label, group in rows:
        vec = np.atleast_1d(np.asarray(x, dtype=float))
        if vec.ndim != 1:
            raise InputValidationError("feature rows must be scalars or flat vectors")
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise DimensionMismatch(f"row has dimension {vec.shape[0]}, expected {dim}")
        if log_transform:
            if np.any(vec <= 0.0):
                raise NonPositiveFeature("log transform requires strictly positive features")
            vec = np.log(vec)
        cells.setdefault((label, group), []).append(vec)
        n_rows += 1
    if not cells:
        raise EmptyCell("no samples provided")
    classes = _stable_sorted(i for (i, _) in cells)
    groups = _stable_sorted(a for (_, a) in cells)
    subgroups: dict[Key, Subgroup] = {}
    weights: dict[Key, float] = {}
    for i in classes:
        for a in groups:
            data = cells.get((i, a))
            if data is None or len(data) < 2:
                raise EmptyCell(f"cell (class={i!r}, group={a!r}) has fewer than 2 samples")
            mat = np.vstack(data)
            weights[(i, a)] = len(data) / n_rows
            if dim == 1:
                std = float(np.std(mat[:, 0], ddof=1))
                subgroups[(i, a)] = SubgroupGaussian(float(np.mean(mat[:, 0])), max(std, EPS_STD))
            else:
                cov = np.cov(mat, rowvar=False, ddof=1)
                vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
                cov = (vecs * np.maximum(vals, 2.0 * EPS_PD)) @ vecs.T
                subgroups[(i, a)] = MultivariateSubgroupGaussian(mat.mean(axis=0), cov)
    # Renormalize away float rounding in the frequencies.
    total = math.fsum(weights.values())
    weights = {k: v / total for k, v in weights.items()}
    return FairDistribution(JointWeights(weights), subgroups, classes, groups)
