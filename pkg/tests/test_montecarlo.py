from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cuberoot.dgp import DgpSpec, derive_seed
from cuberoot.errors import ExperimentAborted, InvalidSpec
from cuberoot.estimators import EstimatorConfig
from cuberoot.limitlaw import LimitLawSpec, lms_location_limit
from cuberoot.montecarlo import (
    _normalized_rep,
    coverage_experiment,
    effective_regressor,
    estimation_error,
    limit_comparison,
    rate_experiment,
    rate_report_from_errors,
)

NS = [500, 1000, 2000, 4000, 8000]
LMS = EstimatorConfig("lms_location")


def test_power_law_errors_recover_slope():
    errs = [[n ** (-1 / 3)] * 10 for n in NS]
    rep = rate_report_from_errors(NS, [1.0] * 5, NS, errs)
    assert rep.slope == pytest.approx(-1 / 3, abs=1e-12)
    assert rep.slope_se == pytest.approx(0.0, abs=1e-7)
    flat = rate_report_from_errors(NS, [1.0] * 5, NS, [[0.2] * 10 for _ in NS])
    assert flat.slope == pytest.approx(0.0, abs=1e-12)


def test_rmse_is_root_mean_square():
    rep = rate_report_from_errors([10, 20, 30], [1.0] * 3, [10, 20, 30], [[3.0, 4.0], [1.0], [2.0, 2.0]])
    assert rep.rows[0].rmse == pytest.approx(math.sqrt(12.5))
    assert [r.reps for r in rep.rows] == [2, 1, 2]
    assert len(rep.csv_rows()) == 3
    assert rep.to_dict()["slope"] == rep.slope


@given(st.permutations(list(range(20))))
def test_rate_report_permutation_invariant(perm):
    rng = np.random.default_rng(0)
    errs = [list(rng.exponential(size=20) * n ** (-1 / 3)) for n in NS]
    a = rate_report_from_errors(NS, [1.0] * 5, NS, errs)
    b = rate_report_from_errors(NS, [1.0] * 5, NS, [[e[i] for i in perm] for e in errs])
    assert a.slope == b.slope


def test_effective_regressor_families():
    assert effective_regressor(100.0, "nh") == math.log(100.0)
    assert effective_regressor(100.0, "nh2") == math.log(100.0)
    assert effective_regressor(100.0, "nh_over_log") == pytest.approx(math.log(100.0 / math.log(100.0)))
    with pytest.raises(InvalidSpec):
        effective_regressor(100.0, "other")


def test_rate_needs_three_sizes_and_reps():
    t = DgpSpec("lms", 100, 0)
    with pytest.raises(InvalidSpec):
        rate_experiment(t, LMS, [100, 200], 50, 1)
    with pytest.raises(InvalidSpec):
        rate_experiment(t, LMS, [100, 200, 400], 10, 1)


def test_rate_experiment_deterministic():
    t = DgpSpec("lms", 100, 0)
    a = rate_experiment(t, LMS, [100, 200, 400], 50, 7)
    b = rate_experiment(t, LMS, [100, 200, 400], 50, 7)
    assert a == b
    assert a.slope < 0


def test_failure_abort():
    t = DgpSpec("rc_binary", 100, 0)
    cfg = EstimatorConfig("localized_max_score", c=50.0)
    with pytest.raises(ExperimentAborted):
        rate_experiment(t, cfg, [100, 200, 400], 50, 1)


def test_trivial_coverage():
    t = DgpSpec("lms", 50, 0)
    yes = coverage_experiment(t, lambda s, spec: True, 100, 3)
    no = coverage_experiment(t, lambda s, spec: False, 100, 3)
    assert (yes.rate, yes.se, yes.hits) == (1.0, 0.0, 100)
    assert (no.rate, no.se) == (0.0, 0.0)
    with pytest.raises(InvalidSpec):
        coverage_experiment(t, lambda s, spec: True, 99, 3)


def test_estimation_error_kinds():
    from cuberoot.dgp import generate
    from cuberoot.estimators import fit

    spec = DgpSpec("max_score", 300, 1)
    cfg = EstimatorConfig("max_score")
    est = fit(generate(spec), cfg)
    e = estimation_error(est, spec, cfg)
    assert 0.0 <= e <= math.pi
    spec = DgpSpec("interval_binary", 300, 1)
    cfg = EstimatorConfig("manski_tamer", grid=(tuple(np.linspace(0, 2.5, 26)),))
    assert estimation_error(fit(generate(spec), cfg), spec, cfg) >= 0.0


def test_limit_comparison_batched_matches_generic():
    t = DgpSpec("lms", 300, 0)
    spec = lms_location_limit(m=101)
    rep = limit_comparison(t, LMS, 300, 40, spec, 200, 5)
    generic = np.array([_normalized_rep((t, LMS, 300, derive_seed(5, 300, r)))[0] for r in range(40)])
    assert np.allclose(rep.estimator_sample, generic, atol=1e-12)
    from cuberoot.limitlaw import ks_distance

    assert rep.ks == ks_distance(rep.estimator_sample, rep.limit_sample)


def test_degenerate_limit_gives_point_mass():
    spec = LimitLawSpec(1, -np.eye(1), lambda a, b: np.zeros((len(a), len(b))), 3.0, 31)
    rep = limit_comparison(DgpSpec("lms", 200, 0), LMS, 200, 30, spec, 100, 1)
    assert np.all(rep.limit_sample == 0.0)
    # KS against a point mass at 0 is the larger of the shares on either side
    e = rep.estimator_sample
    assert rep.ks == pytest.approx(max(np.mean(e < 0), np.mean(e > 0)), abs=1e-12)
