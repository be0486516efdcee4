"""Rate experiments: RMSE against effective sample size, with fitted log-log slopes.

Usage: python3 scripts/rates.py [--reps 200] [--seed 11] [--workers N] [--out rates.json]
"""

from __future__ import annotations

import argparse
import json
import os
import time

from cuberoot.dgp import DgpSpec
from cuberoot.estimators import EstimatorConfig
from cuberoot.montecarlo import rate_experiment

EXPERIMENTS = [
    ("max_score", "max_score", [250, 500, 1000, 2000, 4000]),
    ("rc_binary", "localized_max_score", [250, 500, 1000, 2000, 4000]),
    ("hough_line", "hough", [250, 500, 1000, 2000, 4000]),
    ("lms", "lms_location", [250, 500, 1000, 2000, 4000]),
    ("minvol_pred", "min_volume_region", [500, 1000, 2000, 4000, 8000]),
    ("panel_hk", "honore_kyriazidou", [500, 1000, 2000, 4000, 8000]),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--only", nargs="*", help="estimator names to run")
    ap.add_argument("--out")
    args = ap.parse_args()
    reports = []
    for model, est, ns in EXPERIMENTS:
        if args.only and est not in args.only:
            continue
        t = time.perf_counter()
        rep = rate_experiment(DgpSpec(model, ns[0], 0), EstimatorConfig(est), ns, args.reps, args.seed, args.workers, est)
        rmse = " ".join(f"{r.rmse:.4f}" for r in rep.rows)
        print(f"{est:22s} slope {rep.slope:+.3f} (se {rep.slope_se:.3f})  rmse {rmse}  [{time.perf_counter() - t:.0f}s]")
        reports.append(rep.to_dict())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(reports, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
