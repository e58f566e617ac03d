"""Multi-class debiasing of vector features by per-coordinate affine steering.

Works on per-(class, group) diagonal Gaussian moments estimated from a
feature matrix. One class is picked as the anchor (the class whose baseline
TPR gap is smallest); every other class is moved, per coordinate, to the
KL-nearest moments satisfying

    sigma_y1~ = gamma * sigma_y0~
    mu_y1~ - mu_{y*,1} = gamma * (mu_y0~ - mu_{y*,0})

where gamma = sigma_{y*,1} / sigma_{y*,0} is fixed by the anchor class y*.
The anchor's own moments are preserved. These targets are then realized on
raw features by per-cell affine maps x -> a x + b with |a| = sigma~ / sigma,
whose sign is chosen greedily on validation data: flipping the sign in one
cell only changes predictions of that cell's rows, so per-cell selection in
key order is exact.

The weight condition needed for ideality is imposed on the count-derived
weights, either by reweighing (product of marginals) or by assuming balanced
groups within each class.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any

import numpy as np

from .classify import tpr_gap_multiclass
from .distributions import EPS_STD, _stable_sorted
from .errors import (
    DegenerateStd,
    DimensionMismatch,
    EmptyCell,
    InputValidationError,
    LengthMismatch,
    MissingCell,
)

__all__ = [
    "ClassGroupMoments",
    "AffineMap",
    "PlugInClassifier",
    "PipelineReport",
    "pick_anchor_class",
    "ef_affirmative_targets",
    "fit_affine",
    "apply_affine",
    "run_pipeline",
    "evaluate_pipeline",
]

Key = tuple[Any, Any]


def _check_arrays(
    features: np.ndarray, labels: np.ndarray, groups: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    if features.ndim != 2:
        raise DimensionMismatch(f"feature matrix must be 2-d, got shape {features.shape}")
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    if labels.shape != (features.shape[0],) or groups.shape != (features.shape[0],):
        raise LengthMismatch(
            f"labels and groups must have one entry per feature row: "
            f"{features.shape[0]} rows, {labels.shape} labels, {groups.shape} groups"
        )
    return features, labels, groups


@dataclass(frozen=True, slots=True)
class ClassGroupMoments:
    """Per-(class, group) diagonal Gaussian moments with sample counts."""

    classes: tuple
    groups: tuple
    mean: Mapping[Key, np.ndarray]
    std: Mapping[Key, np.ndarray]
    count: Mapping[Key, int]

    def __post_init__(self) -> None:
        classes = tuple(self.classes)
        groups = tuple(self.groups)
        keys = {(y, a) for y in classes for a in groups}
        mean = {k: np.asarray(v, dtype=float) for k, v in dict(self.mean).items()}
        std = {k: np.asarray(v, dtype=float) for k, v in dict(self.std).items()}
        count = {k: int(v) for k, v in dict(self.count).items()}
        for part, name in ((mean, "mean"), (std, "std"), (count, "count")):
            if set(part) != keys:
                raise DimensionMismatch(f"{name} keys do not cover classes x groups")
        dims = {v.shape for v in mean.values()} | {v.shape for v in std.values()}
        if len(dims) != 1 or len(next(iter(dims))) != 1:
            raise DimensionMismatch(f"moment vectors must share one 1-d shape, got {dims}")
        for k in keys:
            if not (np.all(np.isfinite(mean[k])) and np.all(np.isfinite(std[k]))):
                raise InputValidationError(f"non-finite moments in cell {k}")
            if np.any(std[k] <= 0.0):
                raise DegenerateStd(f"cell {k} has non-positive std entries")
            if count[k] < 2:
                raise EmptyCell(f"cell {k} has {count[k]} samples; at least 2 required")
            mean[k].setflags(write=False)
            std[k].setflags(write=False)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "mean", MappingProxyType(mean))
        object.__setattr__(self, "std", MappingProxyType(std))
        object.__setattr__(self, "count", MappingProxyType(count))

    @property
    def dim(self) -> int:
        return next(iter(self.mean.values())).shape[0]

    def keys(self) -> tuple[Key, ...]:
        return tuple((y, a) for y in self.classes for a in self.groups)

    def weights(self) -> dict[Key, float]:
        """Joint weights q_ya derived from the sample counts."""
        total = sum(self.count.values())
        return {k: self.count[k] / total for k in self.keys()}

    @classmethod
    def from_data(
        cls, features: np.ndarray, labels: Sequence[Any], groups: Sequence[Any]
    ) -> "ClassGroupMoments":
        """Estimate per-cell moments (sample std, floored at a tiny scale)."""
        features, labels, groups = _check_arrays(features, np.asarray(labels), np.asarray(groups))
        classes = tuple(_stable_sorted(set(labels.tolist())))
        group_vals = tuple(_stable_sorted(set(groups.tolist())))
        mean: dict[Key, np.ndarray] = {}
        std: dict[Key, np.ndarray] = {}
        count: dict[Key, int] = {}
        for y in classes:
            for a in group_vals:
                rows = features[(labels == y) & (groups == a)]
                if rows.shape[0] < 2:
                    raise EmptyCell(
                        f"cell ({y!r}, {a!r}) has {rows.shape[0]} samples; at least 2 required"
                    )
                mean[(y, a)] = rows.mean(axis=0)
                std[(y, a)] = np.maximum(rows.std(axis=0, ddof=1), EPS_STD)
                count[(y, a)] = rows.shape[0]
        return cls(classes, group_vals, mean, std, count)


def pick_anchor_class(
    labels: Sequence[Any], groups: Sequence[Any], preds: Sequence[Any]
) -> Any:
    """The class whose baseline TPR gap is smallest (ties: smallest class).

    Unlike the reporting helper, an empty (class, group) cell is an error
    here: the anchor must be grounded in every group.
    """
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    preds = np.asarray(preds)
    if not (labels.shape == groups.shape == preds.shape) or labels.ndim != 1 or labels.size == 0:
        raise LengthMismatch("labels, groups, preds must be equal-length nonempty 1-d sequences")
    classes = _stable_sorted(set(labels.tolist()))
    group_vals = _stable_sorted(set(groups.tolist()))
    best_class = None
    best_gap = math.inf
    for y in classes:
        rates = []
        for a in group_vals:
            cell = (labels == y) & (groups == a)
            if not cell.any():
                raise EmptyCell(f"no samples for cell ({y!r}, {a!r})")
            rates.append(float(np.mean(preds[cell] == y)))
        gap = max(abs(r1 - r2) for r1 in rates for r2 in rates)
        if gap < best_gap:
            best_class, best_gap = y, gap
    return best_class


def _imposed_weights(moments: ClassGroupMoments, weight_mode: str) -> dict[Key, float]:
    q = moments.weights()
    class_m = {y: sum(q[(y, a)] for a in moments.groups) for y in moments.classes}
    if weight_mode == "reweigh":
        group_m = {a: sum(q[(y, a)] for y in moments.classes) for a in moments.groups}
        return {(y, a): class_m[y] * group_m[a] for (y, a) in moments.keys()}
    if weight_mode == "balanced":
        n_groups = len(moments.groups)
        return {(y, a): class_m[y] / n_groups for (y, a) in moments.keys()}
    raise InputValidationError(f"weight_mode must be 'reweigh' or 'balanced', got {weight_mode!r}")


def ef_affirmative_targets(
    moments: ClassGroupMoments, anchor: Any, *, weight_mode: str = "reweigh"
) -> ClassGroupMoments:
    """Per-coordinate KL-nearest moments aligned to the anchor class.

    The anchor class fixes gamma (its cross-group std ratio, per coordinate)
    and keeps its own moments; every other class y moves both groups to the
    closest moments with std ratio gamma and class-to-anchor mean gaps in the
    gamma proportion. ``weight_mode`` controls how the weight condition is
    imposed on the count-derived weights: ``"reweigh"`` uses the product of
    marginals, ``"balanced"`` assumes equal group shares within each class.
    """
    if anchor not in moments.classes:
        raise InputValidationError(f"anchor {anchor!r} is not one of {moments.classes!r}")
    if len(moments.groups) != 2:
        raise DimensionMismatch("this intervention is defined for exactly two groups")
    a0, a1 = moments.groups
    q = _imposed_weights(moments, weight_mode)
    gamma = moments.std[(anchor, a1)] / moments.std[(anchor, a0)]
    anchor_shift = moments.mean[(anchor, a1)] - gamma * moments.mean[(anchor, a0)]
    new_mean: dict[Key, np.ndarray] = {}
    new_std: dict[Key, np.ndarray] = {}
    for y in moments.classes:
        q0, q1 = q[(y, a0)], q[(y, a1)]
        v0 = moments.std[(y, a0)] ** 2
        v1 = moments.std[(y, a1)] ** 2
        h = q0 / v0 + gamma * gamma * q1 / v1
        s0 = np.sqrt((q0 + q1) / h)
        mu0 = moments.mean[(y, a0)]
        mu1 = moments.mean[(y, a1)]
        new_std[(y, a0)] = s0
        new_std[(y, a1)] = gamma * s0
        new_mean[(y, a0)] = (q0 * mu0 / v0 + gamma * q1 * (mu1 - anchor_shift) / v1) / h
        new_mean[(y, a1)] = (q0 * (anchor_shift + gamma * mu0) / v0 + gamma * gamma * q1 * mu1 / v1) / h
    return ClassGroupMoments(moments.classes, moments.groups, new_mean, new_std, dict(moments.count))


@dataclass(frozen=True, slots=True)
class AffineMap:
    """Per-(class, group), per-coordinate feature maps x -> scale * x + offset."""

    scale: Mapping[Key, np.ndarray]
    offset: Mapping[Key, np.ndarray]

    def __post_init__(self) -> None:
        scale = {k: np.asarray(v, dtype=float) for k, v in dict(self.scale).items()}
        offset = {k: np.asarray(v, dtype=float) for k, v in dict(self.offset).items()}
        if set(scale) != set(offset):
            raise DimensionMismatch("scale and offset must cover the same cells")
        for k, s in scale.items():
            if s.shape != offset[k].shape or s.ndim != 1:
                raise DimensionMismatch(f"cell {k}: scale and offset shapes differ")
            if np.any(s == 0.0) or not np.all(np.isfinite(s)) or not np.all(np.isfinite(offset[k])):
                raise InputValidationError(f"cell {k}: scales must be finite and nonzero")
            s.setflags(write=False)
            offset[k].setflags(write=False)
        object.__setattr__(self, "scale", MappingProxyType(scale))
        object.__setattr__(self, "offset", MappingProxyType(offset))


@dataclass(frozen=True, slots=True)
class PlugInClassifier:
    """Group-blind per-class diagonal Gaussian likelihood classifier."""

    classes: tuple
    means: np.ndarray
    stds: np.ndarray
    log_priors: np.ndarray

    @classmethod
    def from_moments(cls, moments: ClassGroupMoments) -> "PlugInClassifier":
        """Pool each class's groups (count-weighted mixture moments)."""
        q = moments.weights()
        means = []
        stds = []
        priors = []
        for y in moments.classes:
            wts = np.array([q[(y, a)] for a in moments.groups])
            wts = wts / wts.sum()
            mus = np.stack([moments.mean[(y, a)] for a in moments.groups])
            variances = np.stack([moments.std[(y, a)] ** 2 for a in moments.groups])
            pooled_mean = wts @ mus
            pooled_var = wts @ (variances + mus**2) - pooled_mean**2
            means.append(pooled_mean)
            stds.append(np.sqrt(np.maximum(pooled_var, EPS_STD**2)))
            priors.append(sum(q[(y, a)] for a in moments.groups))
        return cls(
            classes=moments.classes,
            means=np.stack(means),
            stds=np.stack(stds),
            log_priors=np.log(np.asarray(priors)),
        )

    def predict(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[1] != self.means.shape[1]:
            raise DimensionMismatch(
                f"features have dimension {x.shape[1]}, classifier expects {self.means.shape[1]}"
            )
        z = (x[:, None, :] - self.means[None, :, :]) / self.stds[None, :, :]
        scores = -0.5 * np.sum(z * z, axis=2) - np.sum(np.log(self.stds), axis=1) + self.log_priors
        idx = np.argmax(scores, axis=1)
        return np.asarray([self.classes[i] for i in idx])


def fit_affine(
    orig: ClassGroupMoments,
    target: ClassGroupMoments,
    validation: tuple[np.ndarray, Sequence[Any], Sequence[Any]] | None = None,
) -> AffineMap:
    """Per-cell affine maps sending the original moments onto the targets.

    |scale| = target std / original std and offset = target mean -
    scale * original mean, so either sign maps N(mu, sigma^2) to the target
    Gaussian exactly. With validation data the sign of each cell is chosen to
    minimize that cell's misclassification under a plug-in classifier on the
    target moments; without it the positive sign is used everywhere.
    """
    if orig.classes != target.classes or orig.groups != target.groups:
        raise DimensionMismatch("original and target moments must share classes and groups")
    if orig.dim != target.dim:
        raise DimensionMismatch(f"dimension mismatch: {orig.dim} vs {target.dim}")
    base_scale = {k: target.std[k] / orig.std[k] for k in orig.keys()}
    signs = {k: 1.0 for k in orig.keys()}
    if validation is not None:
        features, labels, groups = _check_arrays(
            np.asarray(validation[0]), np.asarray(validation[1]), np.asarray(validation[2])
        )
        if features.shape[1] != orig.dim:
            raise DimensionMismatch(
                f"validation features have dimension {features.shape[1]}, moments have {orig.dim}"
            )
        scorer = PlugInClassifier.from_moments(target)
        for key in orig.keys():
            y, a = key
            rows = features[(labels == y) & (groups == a)]
            if rows.shape[0] == 0:
                continue
            errors = {}
            for sign in (1.0, -1.0):
                scale = sign * base_scale[key]
                offset = target.mean[key] - scale * orig.mean[key]
                preds = scorer.predict(rows * scale + offset)
                errors[sign] = int(np.sum(preds != y))
            signs[key] = 1.0 if errors[1.0] <= errors[-1.0] else -1.0
    scale = {k: signs[k] * base_scale[k] for k in orig.keys()}
    offset = {k: target.mean[k] - scale[k] * orig.mean[k] for k in orig.keys()}
    return AffineMap(scale, offset)


def apply_affine(
    amap: AffineMap,
    features: np.ndarray,
    labels: Sequence[Any],
    groups: Sequence[Any],
) -> np.ndarray:
    """Transform every row by its (label, group) cell's map."""
    features, labels, groups = _check_arrays(features, np.asarray(labels), np.asarray(groups))
    out = np.empty_like(features)
    done = np.zeros(features.shape[0], dtype=bool)
    for key, scale in amap.scale.items():
        y, a = key
        rows = (labels == y) & (groups == a)
        if not rows.any():
            continue
        out[rows] = features[rows] * scale + amap.offset[key]
        done |= rows
    if not done.all():
        missing = int(np.argmax(~done))
        raise MissingCell(
            f"row {missing} has cell ({labels[missing]!r}, {groups[missing]!r}) "
            "with no affine map entry"
        )
    return out


@dataclass(frozen=True, slots=True)
class PipelineReport:
    """Before/after metrics of the end-to-end steering pipeline on held-out data."""

    accuracy_before: float
    accuracy_after: float
    per_class_gap_before: Mapping[Any, float]
    per_class_gap_after: Mapping[Any, float]
    rms_gap_before: float
    rms_gap_after: float
    anchor: Any

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "per_class_gap_before", MappingProxyType(dict(self.per_class_gap_before))
        )
        object.__setattr__(
            self, "per_class_gap_after", MappingProxyType(dict(self.per_class_gap_after))
        )


def _rms(gaps: Mapping[Any, float]) -> float:
    if not gaps:
        return 0.0
    return math.sqrt(math.fsum(v * v for v in gaps.values()) / len(gaps))


def run_pipeline(
    features: np.ndarray,
    labels: Sequence[Any],
    groups: Sequence[Any],
    split: tuple[float, float, float] = (0.6, 0.2, 0.2),
    *,
    seed: int = 0,
    weight_mode: str = "reweigh",
) -> tuple[PipelineReport, AffineMap]:
    """Run the full steering pipeline and measure its effect on held-out data.

    Splits the rows into train/validation/test by a seeded permutation, fits
    the baseline plug-in classifier on train, picks the anchor class from its
    validation predictions, steers the train moments, fits the affine maps
    (signs chosen on validation), then compares test accuracy and per-class
    TPR gaps before and after transforming the features. Deterministic for
    fixed inputs and seed. Returns the report together with the fitted maps
    so callers can transform further data.
    """
    features, labels, groups = _check_arrays(features, np.asarray(labels), np.asarray(groups))
    fracs = tuple(float(f) for f in split)
    if len(fracs) != 3 or any(f <= 0.0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
        raise InputValidationError(f"split must be three positive fractions summing to 1, got {split}")
    n = features.shape[0]
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fracs[0] * n))
    n_val = int(round(fracs[1] * n))
    if n_train < 1 or n_val < 1 or n_train + n_val >= n:
        raise InputValidationError(f"split {split} leaves an empty part for {n} rows")
    tr, va, te = order[:n_train], order[n_train : n_train + n_val], order[n_train + n_val :]
    x_tr, y_tr, g_tr = features[tr], labels[tr], groups[tr]
    x_va, y_va, g_va = features[va], labels[va], groups[va]
    x_te, y_te, g_te = features[te], labels[te], groups[te]

    moments = ClassGroupMoments.from_data(x_tr, y_tr, g_tr)
    baseline = PlugInClassifier.from_moments(moments)
    anchor = pick_anchor_class(y_va, g_va, baseline.predict(x_va))
    targets = ef_affirmative_targets(moments, anchor, weight_mode=weight_mode)
    amap = fit_affine(moments, targets, validation=(x_va, y_va, g_va))

    steered_clf = PlugInClassifier.from_moments(
        ClassGroupMoments.from_data(apply_affine(amap, x_tr, y_tr, g_tr), y_tr, g_tr)
    )
    preds_before = baseline.predict(x_te)
    preds_after = steered_clf.predict(apply_affine(amap, x_te, y_te, g_te))
    gaps_before = tpr_gap_multiclass(y_te, g_te, preds_before)
    gaps_after = tpr_gap_multiclass(y_te, g_te, preds_after)
    report = PipelineReport(
        accuracy_before=float(np.mean(preds_before == y_te)),
        accuracy_after=float(np.mean(preds_after == y_te)),
        per_class_gap_before=gaps_before,
        per_class_gap_after=gaps_after,
        rms_gap_before=_rms(gaps_before),
        rms_gap_after=_rms(gaps_after),
        anchor=anchor,
    )
    return report, amap


def evaluate_pipeline(
    features: np.ndarray,
    labels: Sequence[Any],
    groups: Sequence[Any],
    split: tuple[float, float, float] = (0.6, 0.2, 0.2),
    *,
    seed: int = 0,
    weight_mode: str = "reweigh",
) -> PipelineReport:
    """Like ``run_pipeline`` but returning only the metrics report."""
    report, _ = run_pipeline(
        features, labels, groups, split, seed=seed, weight_mode=weight_mode
    )
    return report
