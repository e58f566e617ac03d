"""Sweep the cost threshold and tabulate error against fairness gaps.

Steers a scenario once, then evaluates the Bayes classifier of the original
and the steered model across a grid of cost thresholds. The printed table
(and optional CSV) shows how the error/parity/opportunity trade-off moves
when the underlying distribution is repaired rather than the classifier.

Usage:
    python scripts/tradeoff_curve.py [--builtin shifted-symmetric] [--method all]
"""

import argparse

import numpy as np

from fairsteer.classify import fairness_report
from fairsteer.scenarios import builtin_scenarios
from fairsteer.specfile import write_csv
from fairsteer.steer_univariate import (
    affirmative_univariate,
    all_subgroups_univariate,
    mean_matching,
)

INTERVENTIONS = {
    "affirmative": affirmative_univariate,
    "all": all_subgroups_univariate,
    "mean-match": mean_matching,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--builtin",
        default="shifted-symmetric",
        choices=sorted(builtin_scenarios()),
        help="scenario to sweep",
    )
    parser.add_argument(
        "--method", default="all", choices=sorted(INTERVENTIONS), help="intervention"
    )
    parser.add_argument("--points", type=int, default=19, help="thresholds in (0, 1)")
    parser.add_argument("--out", help="optional CSV path for the table")
    args = parser.parse_args(argv)

    scenario = builtin_scenarios()[args.builtin]
    result = INTERVENTIONS[args.method](scenario.dist, t=scenario.threshold)
    print(f"scenario {scenario.name}, method {args.method}, "
          f"KL {result.divergences.kl:.6f}")
    print(f"{'t':>5} {'BE':>8} {'BE steered':>10} {'dDP':>8} {'dDP steered':>11} "
          f"{'dEO':>8} {'dEO steered':>11}")
    rows = []
    for t in np.linspace(0.05, 0.95, args.points):
        t = float(round(t, 4))
        before = fairness_report(scenario.dist, t)
        after = fairness_report(result.steered, t)
        print(f"{t:5.2f} {before.bayes_error:8.4f} {after.bayes_error:10.4f} "
              f"{before.delta_dp:8.4f} {after.delta_dp:11.4f} "
              f"{before.delta_eo:8.4f} {after.delta_eo:11.4f}")
        rows.append(
            ",".join(
                repr(v)
                for v in (
                    t,
                    before.bayes_error,
                    after.bayes_error,
                    before.delta_dp,
                    after.delta_dp,
                    before.delta_eo,
                    after.delta_eo,
                )
            )
        )
    if args.out:
        write_csv(
            args.out,
            "t,be_before,be_after,ddp_before,ddp_after,deo_before,deo_after",
            rows,
        )
        print(f"table written to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
