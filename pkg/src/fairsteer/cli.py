"""Command line front end.

Subcommands:

* ``fit``: estimate a distribution spec from a samples CSV;
* ``check``: test a spec for exact fairness of all cost-weighted optimal
  classifiers, printing the per-condition report;
* ``steer``: compute the KL-nearest fair model under a chosen intervention
  and write the steered spec plus a diagnostics CSV;
* ``simulate``: run one of the built-in scenarios (or a scenario file)
  through several interventions, writing curve CSVs, SVG figures, and a
  metrics table;
* ``steer-embeddings``: run the multi-class representation pipeline on a
  packed feature matrix and write the steered matrix plus metrics.

Exit codes: 0 on success (and for ``check`` when the model is fair), 2 when
``check`` finds a violation, 64 on usage errors, 1 on runtime failures
(unreadable files, malformed content, solver errors). Output files are
written atomically. Set FAIRSTEER_LOG=DEBUG (or INFO) for progress logs.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Any

import numpy as np

from .classify import decision_regions, fairness_report
from .distributions import FairDistribution, fit_from_samples
from .errors import FairsteerError, InputValidationError
from .ideality import check_ideal_multivariate, check_ideal_univariate
from .multiclass import apply_affine, run_pipeline
from .scenarios import builtin_scenarios, load_scenario
from .specfile import (
    atomic_write_text,
    load_spec,
    read_labels_csv,
    read_matrix,
    read_samples_csv,
    save_spec,
    write_csv,
    write_matrix,
)
from .steer_multivariate import affirmative_multivariate
from .steer_univariate import (
    DIAGNOSTICS_HEADER,
    InterventionResult,
    affirmative_univariate,
    all_subgroups_univariate,
    mean_matching,
)
from .svg import build_curves, curves_to_csv, render_svg

__all__ = ["main"]

EXIT_OK = 0
EXIT_NOT_IDEAL = 2
EXIT_USAGE = 64
EXIT_ERROR = 1

STEER_METHODS = ("affirmative", "all", "mean-match", "multivariate")

log = logging.getLogger("fairsteer.cli")


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures exit with code 64."""

    def error(self, message: str) -> Any:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _stem(path: str) -> str:
    return os.path.splitext(path)[0]


def _run_method(
    dist: FairDistribution,
    method: str,
    *,
    t: float,
    gamma_max: float = 1e3,
    grid: int = 2000,
) -> InterventionResult:
    if method != "multivariate" and not dist.is_univariate:
        raise InputValidationError(
            f"method {method!r} handles univariate models only; use --method multivariate"
        )
    if method == "affirmative":
        return affirmative_univariate(dist, t=t)
    if method == "all":
        return all_subgroups_univariate(
            dist, gamma_min=1.0 / gamma_max, gamma_max=gamma_max, grid_points=grid, t=t
        )
    if method == "mean-match":
        return mean_matching(dist, t=t)
    if method == "multivariate":
        return affirmative_multivariate(dist, t=t)
    raise InputValidationError(f"unknown method {method!r}")


def _before_after_table(result: InterventionResult) -> str:
    rows = [
        ("BE", result.report_before.bayes_error, result.report_after.bayes_error),
        ("dDP", result.report_before.delta_dp, result.report_after.delta_dp),
        ("dEO", result.report_before.delta_eo, result.report_after.delta_eo),
    ]
    lines = [f"{'metric':<8}{'before':>12}{'after':>12}"]
    for name, before, after in rows:
        lines.append(f"{name:<8}{before:>12.6f}{after:>12.6f}")
    lines.append(f"KL(steered||original) = {result.divergences.kl:.9g}")
    lines.append(f"JS = {result.divergences.js:.9g}")
    if result.gamma_star is not None:
        lines.append(f"gamma* = {result.gamma_star:.12g}")
    if result.gamma_matrix is not None:
        lines.append(
            f"converged = {result.converged}, iterations = {result.iterations}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_fit(args: argparse.Namespace) -> int:
    rows = read_samples_csv(args.samples)
    dist = fit_from_samples(rows, log_transform=args.log_transform)
    out = args.out or _stem(args.samples) + "_spec.json"
    save_spec(dist, out)
    kind = "univariate" if dist.is_univariate else f"{dist.dim}-dimensional"
    print(
        f"fitted {kind} model: {len(dist.classes)} classes x "
        f"{len(dist.groups)} groups from {len(rows)} samples"
    )
    print(f"wrote {out}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    dist = load_spec(args.spec)
    if dist.is_univariate:
        verdict = check_ideal_univariate(dist, tol=args.tol)
    else:
        verdict = check_ideal_multivariate(dist, tol=args.tol)
    print(verdict.report)
    return EXIT_OK if verdict.is_ideal else EXIT_NOT_IDEAL


def cmd_steer(args: argparse.Namespace) -> int:
    dist = load_spec(args.spec)
    result = _run_method(
        dist,
        args.method,
        t=args.threshold,
        gamma_max=args.gamma_max,
        grid=args.grid,
    )
    out = args.out or _stem(args.spec) + "_steered.json"
    diag = _stem(out) + "_diagnostics.csv"
    save_spec(result.steered, out)
    write_csv(diag, DIAGNOSTICS_HEADER, [result.diagnostics_row()])
    print(_before_after_table(result))
    print(f"wrote {out}")
    print(f"wrote {diag}")
    return EXIT_OK


def _finite_cuts(dist: FairDistribution, t: float) -> dict[Any, tuple[float, ...]]:
    regions = decision_regions(dist, t)
    cuts: dict[Any, tuple[float, ...]] = {}
    for group, intervals in regions.intervals.items():
        ends = [v for lo, hi in intervals for v in (lo, hi) if np.isfinite(v)]
        cuts[group] = tuple(ends)
    return cuts


def cmd_simulate(args: argparse.Namespace) -> int:
    if (args.scenario is None) == (args.builtin is None):
        args.parser.error("pass exactly one of a scenario file or --builtin NAME")
    if args.builtin is not None:
        catalog = builtin_scenarios()
        if args.builtin not in catalog:
            raise InputValidationError(
                f"unknown builtin scenario {args.builtin!r}; "
                f"choose from {sorted(catalog)}"
            )
        scenario = catalog[args.builtin]
    else:
        scenario = load_scenario(args.scenario)
    os.makedirs(args.out_dir, exist_ok=True)

    t = scenario.threshold
    before_report = fairness_report(scenario.dist, t)
    print(f"scenario {scenario.name} at threshold {t:g}")
    print(
        f"  before: BE {before_report.bayes_error:.6f}  "
        f"dDP {before_report.delta_dp:.6f}  dEO {before_report.delta_eo:.6f}"
    )
    metric_rows = []
    cuts_before = _finite_cuts(scenario.dist, t)
    for method in scenario.methods:
        log.info("running %s on %s", method, scenario.name)
        result = _run_method(scenario.dist, method, t=t)
        metric_rows.append(result.diagnostics_row())

        curves = build_curves(scenario.dist, result.steered)
        header, rows = curves_to_csv(curves)
        base = os.path.join(args.out_dir, f"{scenario.name}_{method}")
        write_csv(base + "_curves.csv", header, rows)

        ra, rb = result.report_after, result.report_before
        annotations = (
            f"BE  {rb.bayes_error:.6f} -> {ra.bayes_error:.6f}",
            f"dDP {rb.delta_dp:.6f} -> {ra.delta_dp:.6f}",
            f"dEO {rb.delta_eo:.6f} -> {ra.delta_eo:.6f}",
            f"KL {result.divergences.kl:.6g}   JS {result.divergences.js:.6g}",
        )
        figure = render_svg(
            curves,
            title=f"{scenario.name}: {method} (t = {t:g})",
            thresholds_before=cuts_before,
            thresholds_after=_finite_cuts(result.steered, t),
            annotations=annotations,
        )
        atomic_write_text(base + ".svg", figure)
        print(
            f"  {method:<11} KL {result.divergences.kl:>10.6f}  "
            f"BE {ra.bayes_error:.6f}  dDP {ra.delta_dp:.2e}  dEO {ra.delta_eo:.2e}"
        )
    metrics_path = os.path.join(args.out_dir, f"{scenario.name}_metrics.csv")
    write_csv(metrics_path, DIAGNOSTICS_HEADER, metric_rows)
    print(f"wrote {metrics_path}")
    return EXIT_OK


def cmd_steer_embeddings(args: argparse.Namespace) -> int:
    features = read_matrix(args.features)
    labels, groups = read_labels_csv(args.labels, features.shape[0])
    weight_mode = "reweigh" if args.reweigh else "balanced"
    report, amap = run_pipeline(
        features, labels, groups, seed=args.seed, weight_mode=weight_mode
    )
    steered = apply_affine(amap, features, labels, groups)
    out = args.out or _stem(args.features) + "_steered.efaf"
    write_matrix(out, steered)
    metrics_path = _stem(out) + "_metrics.csv"
    write_csv(
        metrics_path,
        "accuracy_before,accuracy_after,rms_gap_before,rms_gap_after,anchor",
        [
            ",".join(
                [
                    repr(report.accuracy_before),
                    repr(report.accuracy_after),
                    repr(report.rms_gap_before),
                    repr(report.rms_gap_after),
                    str(report.anchor),
                ]
            )
        ],
    )
    print(f"anchor class: {report.anchor}  (weights: {weight_mode})")
    print(
        f"rms TPR gap: {report.rms_gap_before:.6f} -> {report.rms_gap_after:.6f}"
    )
    print(
        f"accuracy:    {report.accuracy_before:.6f} -> {report.accuracy_after:.6f}"
    )
    print(f"wrote {out}")
    print(f"wrote {metrics_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(
        prog="fairsteer",
        description="Check and steer group-conditioned Gaussian models toward exact fairness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="estimate a model spec from samples")
    p_fit.add_argument("samples", help="CSV with header x_0,...,x_{d-1},class,group")
    p_fit.add_argument(
        "--log-transform",
        action="store_true",
        help="fit on the natural log of the features (requires positive values)",
    )
    p_fit.add_argument("--out", help="output spec path (default: <samples>_spec.json)")
    p_fit.set_defaults(func=cmd_fit)

    p_check = sub.add_parser("check", help="test a spec for exact fairness")
    p_check.add_argument("spec", help="distribution spec JSON")
    p_check.add_argument(
        "--tol", type=float, default=1e-8, help="residual tolerance (default 1e-8)"
    )
    p_check.set_defaults(func=cmd_check)

    p_steer = sub.add_parser("steer", help="compute the KL-nearest fair model")
    p_steer.add_argument("spec", help="distribution spec JSON")
    p_steer.add_argument(
        "--method", required=True, choices=STEER_METHODS, help="intervention family"
    )
    p_steer.add_argument(
        "--threshold",
        type=float,
        default=0.5,
        help="cost threshold in (0, 1) for the reported metrics (default 0.5)",
    )
    p_steer.add_argument(
        "--gamma-max",
        type=float,
        default=1e3,
        help="scale-search bound; the grid covers [1/gamma-max, gamma-max]",
    )
    p_steer.add_argument(
        "--grid", type=int, default=2000, help="scale-search grid points (default 2000)"
    )
    p_steer.add_argument("--out", help="steered spec path (default: <spec>_steered.json)")
    p_steer.set_defaults(func=cmd_steer)

    p_sim = sub.add_parser("simulate", help="compare interventions on a scenario")
    p_sim.add_argument("scenario", nargs="?", help="scenario JSON file")
    p_sim.add_argument(
        "--builtin",
        help="use a named built-in scenario instead of a file "
        "(already-fair, shifted-symmetric, cost-3-4, high-dp)",
    )
    p_sim.add_argument("--out-dir", default=".", help="directory for outputs (default .)")
    p_sim.set_defaults(func=cmd_simulate, parser=p_sim)

    p_emb = sub.add_parser(
        "steer-embeddings", help="steer a multi-class feature matrix"
    )
    p_emb.add_argument("features", help="packed matrix (EFAF) or numeric CSV")
    p_emb.add_argument("labels", help="companion CSV with header row,label,group")
    p_emb.add_argument(
        "--out", help="steered matrix path (default: <features>_steered.efaf)"
    )
    p_emb.add_argument("--seed", type=int, default=0, help="split seed (default 0)")
    p_emb.add_argument(
        "--reweigh",
        action="store_true",
        help="impose product-of-marginals weights instead of balanced group weights",
    )
    p_emb.set_defaults(func=cmd_steer_embeddings)
    return parser


def _configure_logging() -> None:
    name = os.environ.get("FAIRSTEER_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except FairsteerError as exc:
        print(f"fairsteer: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"fairsteer: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
