"""Coverage experiments for subsampling intervals, criterion-based sets and set estimates.

Usage: python3 scripts/coverage.py [--reps 500] [--seed 41] [--workers N]
"""

from __future__ import annotations

import argparse
import math
import os
import time

import numpy as np

from cuberoot.dgp import DgpSpec
from cuberoot.estimators import EstimatorConfig
from cuberoot.montecarlo import ci_covers, confset_covers, coverage_experiment, set_contains_identified


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=41)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--alpha", type=float, default=0.1)
    args = ap.parse_args()
    lms = EstimatorConfig("lms_location")
    angles = (tuple(np.linspace(-math.pi, math.pi, 73)[:-1]),)
    mt = EstimatorConfig("manski_tamer", grid=(tuple(np.linspace(0.0, 2.5, 251)),))
    runs = [
        ("lms_location CI, rate-corrected", DgpSpec("lms", 2000, 0), ci_covers(lms, alpha=args.alpha)),
        ("lms_location CI, plain inversion", DgpSpec("lms", 2000, 0), _Plain(lms, args.alpha)),
        ("max_score criterion set", DgpSpec("max_score", 200, 0), confset_covers(EstimatorConfig("max_score"), angles, alpha=args.alpha)),
        ("manski_tamer containment", DgpSpec("interval_binary", 1000, 0), set_contains_identified(mt)),
    ]
    for label, tpl, pred in runs:
        t = time.perf_counter()
        rep = coverage_experiment(tpl, pred, args.reps, args.seed, args.workers)
        print(f"{label:34s} {rep.rate:.3f} (se {rep.se:.3f}, {rep.reps} reps)  [{time.perf_counter() - t:.0f}s]")


class _Plain:
    """Coverage of the uncorrected subsampling interval."""

    def __init__(self, cfg, alpha):
        self.cfg, self.alpha = cfg, alpha

    def __call__(self, sample, spec):
        from cuberoot.dgp import true_parameter
        from cuberoot.inference import subsample_ci

        ci = subsample_ci(sample, self.cfg, alpha=self.alpha, rate_correction=False)
        return ci.contains(true_parameter(spec)[:1])


if __name__ == "__main__":
    main()
