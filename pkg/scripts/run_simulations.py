"""Run every built-in scenario through the simulation pipeline.

For each named regime this produces, per intervention, the sampled density
curves (CSV), the before/after figure (SVG) and one shared metrics table,
all under --out-dir. The per-method comparison tables are printed as the
runs complete.

Usage:
    python scripts/run_simulations.py [--out-dir out/simulations]
"""

import argparse
import os

from fairsteer.cli import main as fairsteer_main
from fairsteer.scenarios import builtin_scenarios


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out-dir", default="out/simulations", help="where to put curves, figures, metrics"
    )
    args = parser.parse_args(argv)
    os.makedirs(args.out_dir, exist_ok=True)

    for name in builtin_scenarios():
        print(f"=== scenario: {name} ===")
        code = fairsteer_main(["simulate", "--builtin", name, "--out-dir", args.out_dir])
        if code != 0:
            return code
        print()
    print(f"outputs in {args.out_dir}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
