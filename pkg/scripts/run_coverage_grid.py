#!/usr/bin/env python3
"""Run the coverage experiment grid and write mean TDP-bound curves to CSV.

Usage:
    python3 scripts/run_coverage_grid.py --out results/coverage --trials 2000
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from eguard.sim import SimConfig, run_grid


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--alpha", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", default="results/coverage")
    args = parser.parse_args()

    cfg = SimConfig(
        n=args.n,
        trials=args.trials,
        alpha=args.alpha,
        mu_a=(2.0, 4.0),
        pi_a=(0.1, 0.5),
        methods=("admissible-os", "boosted-gro", "calibrated", "m-os"),
        seed=args.seed,
    )
    grid = run_grid(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "curves.csv").write_text(grid.to_csv())
    summary = {
        f"{m}@mu={mu},pi={pi}": round(1.0 - cov, 4)
        for (m, mu, pi), cov in sorted(grid.coverage.items())
    }
    (out / "violations.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"wrote {out}/curves.csv")
    for key, frac in summary.items():
        print(f"violation fraction {key}: {frac}")


if __name__ == "__main__":
    main()
