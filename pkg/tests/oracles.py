"""Independent numerical oracles used to pin expected values.

Everything here recomputes quantities by a route different from the library
implementation: adaptive quadrature instead of closed forms, Monte Carlo
instead of exact CDF algebra, posterior thresholding instead of interval
membership, and generic constrained optimization instead of the dedicated
solvers. Tests freeze library outputs against these.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate, optimize, stats

from fairsteer.distributions import FairDistribution


def kl_gaussian_quad(mean_p, std_p, mean_q, std_q) -> float:
    """KL(N(mean_p, std_p^2) || N(mean_q, std_q^2)) by adaptive quadrature."""
    p = stats.norm(mean_p, std_p)
    q = stats.norm(mean_q, std_q)
    lo = mean_p - 14.0 * std_p
    hi = mean_p + 14.0 * std_p

    def integrand(x):
        return p.pdf(x) * (p.logpdf(x) - q.logpdf(x))

    value, err = integrate.quad(
        integrand, lo, hi, limit=500, epsabs=1e-11, epsrel=1e-11,
        points=[mean_p, mean_q] if lo < mean_q < hi else [mean_p],
    )
    assert err <= 1e-8 * max(1.0, abs(value))
    return value


def kl_dists_quad(new: FairDistribution, old: FairDistribution) -> float:
    """Joint KL(new || old) for univariate models, cell by cell, by quadrature."""
    total = 0.0
    for key, g_new in new.subgroups.items():
        g_old = old.subgroup(*key)
        total += new.q(*key) * kl_gaussian_quad(
            g_new.mean, g_new.std, g_old.mean, g_old.std
        )
    return total


def mc_fairness(
    dist: FairDistribution,
    t: float,
    *,
    classifier_dist: FairDistribution | None = None,
    n_per_cell: int = 400_000,
    seed: int = 1234,
) -> tuple[float, float, float]:
    """Monte Carlo (bayes_error, dp_gap, eo_gap) via posterior thresholding.

    Predictions come from the posterior odds of ``classifier_dist`` (default:
    the data distribution itself), never from the library's decision-region
    algebra, so this checks that algebra end to end.
    """
    ref = dist if classifier_dist is None else classifier_dist
    neg, pos = dist.classes
    rng = np.random.default_rng(seed)
    log_t_odds = np.log(t) - np.log1p(-t)

    err_mass = 0.0
    pos_rate: dict = {}
    tpr: dict = {}
    for a in dist.groups:
        qn, qp = dist.q(neg, a), dist.q(pos, a)
        rn = ref.q(neg, a) / (ref.q(neg, a) + ref.q(pos, a))
        rp = 1.0 - rn
        rates = {}
        for cls, mass in ((neg, qn), (pos, qp)):
            g = dist.subgroup(cls, a)
            x = rng.normal(g.mean, g.std, n_per_cell)
            lp = ref.subgroup(pos, a).logpdf(x) + np.log(rp)
            ln = ref.subgroup(neg, a).logpdf(x) + np.log(rn)
            predict_pos = (lp - ln) >= log_t_odds
            rates[cls] = float(np.mean(predict_pos))
            wrong = rates[cls] if cls == neg else 1.0 - rates[cls]
            err_mass += mass * wrong
        pos_rate[a] = (qn * rates[neg] + qp * rates[pos]) / (qn + qp)
        tpr[a] = rates[pos]
    groups = list(dist.groups)
    dp = max(abs(pos_rate[a] - pos_rate[b]) for a in groups for b in groups)
    eo = max(abs(tpr[a] - tpr[b]) for a in groups for b in groups)
    return err_mass, dp, eo


def golden_min(fn, lo: float, hi: float, iters: int = 80) -> float:
    """Golden-section minimizer on [lo, hi] (unimodal fn), returns argmin."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def grid_refine_min(fn, lo: float, hi: float, n_grid: int) -> tuple[float, float, float]:
    """Log-grid scan plus golden refinement around the argmin.

    Returns (raw grid argmin, raw grid min value, refined argmin).
    """
    grid = np.exp(np.linspace(np.log(lo), np.log(hi), n_grid))
    values = np.array([fn(g) for g in grid])
    k = int(np.argmin(values))
    left = grid[max(k - 1, 0)]
    right = grid[min(k + 1, n_grid - 1)]
    refined = np.exp(golden_min(lambda u: fn(np.exp(u)), np.log(left), np.log(right)))
    return float(grid[k]), float(values[k]), float(refined)


def minimize_targets_kl(moments, weights, anchor, gamma_by_key):
    """Generic solver for the per-coordinate multi-class target problem.

    For a single coordinate: given per-(class, group) means/stds, weights q,
    and the fixed anchor-derived scale gamma and shift for that coordinate,
    minimize sum q_ia KL(target_ia || data_ia) over target means subject to
    mean_y1 = shift + gamma * mean_y0, with target stds fixed to the pooled
    form. Solved by scipy, used only on tiny instances.
    """

    classes = sorted({k[0] for k in moments}, key=str)
    gamma = gamma_by_key["gamma"]
    shift = gamma_by_key["shift"]

    def unpack(vec):
        means = {}
        for idx, y in enumerate(classes):
            means[(y, 0)] = vec[idx]
            means[(y, 1)] = shift + gamma * vec[idx]
        return means

    def objective(vec):
        means = unpack(vec)
        total = 0.0
        for y in classes:
            q0, q1 = weights[(y, 0)], weights[(y, 1)]
            v0 = moments[(y, 0)][1] ** 2
            v1 = moments[(y, 1)][1] ** 2
            s0 = np.sqrt((q0 + q1) / (q0 / v0 + gamma**2 * q1 / v1))
            s1 = gamma * s0
            for grp, q, s_t in ((0, q0, s0), (1, q1, s1)):
                mu_d, sd_d = moments[(y, grp)]
                mu_t = means[(y, grp)]
                total += q * (
                    np.log(sd_d / s_t)
                    + (s_t**2 + (mu_t - mu_d) ** 2) / (2 * sd_d**2)
                    - 0.5
                )
        return total

    x0 = np.array([moments[(y, 0)][0] for y in classes])
    res = optimize.minimize(objective, x0, method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
    assert res.success or res.fun <= objective(x0) + 1e-12
    return unpack(res.x), float(res.fun)


def empirical_tpr_by_class_group(labels, groups, predictions):
    """Per-(class, group) recall counted directly from arrays."""
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    predictions = np.asarray(predictions)
    out = {}
    for y in np.unique(labels):
        for a in np.unique(groups):
            mask = (labels == y) & (groups == a)
            if mask.any():
                out[(y, a)] = float(np.mean(predictions[mask] == y))
    return out
