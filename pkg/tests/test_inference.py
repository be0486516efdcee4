from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cuberoot.core import TimeSeriesSample
from cuberoot.dgp import DgpSpec, generate
from cuberoot.errors import BlockTooShort, EmptyGrid, InvalidSpec
from cuberoot.estimators import EstimatorConfig, fit
from cuberoot.inference import (
    block_starts,
    criterion_confidence_set,
    default_block_length,
    subsample_ci,
    type1_quantile,
    wrap_angle,
)

LMS = EstimatorConfig("lms_location")


def test_default_block_length():
    assert default_block_length(1000) == 100
    assert default_block_length(8) == 4
    assert default_block_length(10) == 5


def test_block_starts_exhaustive_and_capped():
    assert np.array_equal(block_starts(10, 3), np.arange(8))
    capped = block_starts(10_000, 10, cap=50)
    assert capped.size == 50
    assert capped[0] == 0 and capped[-1] == 10_000 - 10
    assert np.all(np.diff(capped) > 0)
    for s in (1, 10, 11):
        with pytest.raises(InvalidSpec):
            block_starts(10, s)


def test_type1_quantile():
    v = np.array([1.0, 2.0, 3.0, 4.0])
    assert type1_quantile(v, 0.25) == 1.0
    assert type1_quantile(v, 0.26) == 2.0
    assert type1_quantile(v, 1.0) == 4.0
    assert type1_quantile(v, 0.0) == 1.0


@given(st.floats(-50, 50))
def test_wrap_angle_range(a):
    w = float(wrap_angle(a))
    assert -math.pi < w <= math.pi + 1e-12
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)


def test_constant_data_zero_width():
    s = TimeSeriesSample({"y": np.full(200, 3.0)})
    ci = subsample_ci(s, LMS)
    assert ci.lower[0] == ci.upper[0] == 3.0


def test_alpha_one_returns_point():
    s = generate(DgpSpec("lms", 300, 1))
    ci = subsample_ci(s, LMS, alpha=1.0)
    assert ci.lower[0] == ci.upper[0] == fit(s, LMS).theta_hat[0]
    assert ci.n_blocks == 0


def test_ci_nested_in_alpha():
    s = generate(DgpSpec("lms", 500, 2))
    wide = subsample_ci(s, LMS, alpha=0.05)
    narrow = subsample_ci(s, LMS, alpha=0.3)
    assert wide.lower[0] <= narrow.lower[0] <= narrow.upper[0] <= wide.upper[0]


def test_rate_correction_widens():
    s = generate(DgpSpec("lms", 500, 3))
    a = subsample_ci(s, LMS, keep_stats=True)
    b = subsample_ci(s, LMS, rate_correction=False)
    assert a.stats.shape == (a.n_blocks, 1)
    assert (a.upper - a.lower)[0] > (b.upper - b.lower)[0]
    n, k = 500, default_block_length(500)
    ratio = (n ** (1 / 3)) / (n ** (1 / 3) - k ** (1 / 3))
    assert (a.upper - a.lower)[0] == pytest.approx(ratio * (b.upper - b.lower)[0], rel=1e-12)


def test_ci_fast_path_matches_generic():
    # the batched LMS path and the generic per-block refit agree
    from cuberoot.inference import _block_charts

    s = generate(DgpSpec("lms", 120, 4))
    starts = block_starts(120, 25)
    fast = _block_charts(s, LMS, 25, starts)
    slow = np.array([fit(s.block(int(b), 25), LMS).theta_hat for b in starts])
    assert np.array_equal(fast.reshape(-1), slow.reshape(-1))


def test_ci_sphere_chart():
    s = generate(DgpSpec("max_score", 300, 5, {"angle": 3.1}))
    cfg = EstimatorConfig("max_score")
    ci = subsample_ci(s, cfg, alpha=0.2)
    assert ci.lower[0] <= ci.theta_hat[0] <= ci.upper[0] or ci.lower[0] <= ci.upper[0]
    assert ci.contains(ci.theta_hat, sphere=True)
    assert ci.contains(ci.theta_hat + 2 * math.pi, sphere=True)


def test_ci_rejects_sets():
    s = generate(DgpSpec("interval_binary", 100, 1))
    with pytest.raises(InvalidSpec):
        subsample_ci(s, EstimatorConfig("manski_tamer", grid=((0.0, 1.0),)))


def test_block_too_short():
    rng = np.random.default_rng(0)
    n = 200
    w = np.where(np.arange(n) < 30, 0.5, 9.0)
    s = TimeSeriesSample(
        {"sign_y": rng.choice([-1.0, 1.0], n), "x1": rng.normal(size=n), "x2": rng.normal(size=n), "w": w}
    )
    with pytest.raises(BlockTooShort):
        subsample_ci(s, EstimatorConfig("localized_max_score"), s=20)


def test_confset_point_grid_and_contains_estimate():
    s = generate(DgpSpec("lms", 400, 6))
    est = fit(s, LMS)
    cs = criterion_confidence_set(s, LMS, [[est.theta_hat[0]]])
    assert cs.grid.mask.all()
    assert cs.Q[0] == 0.0


def test_confset_nested_in_alpha():
    s = generate(DgpSpec("lms", 400, 7))
    axes = [np.linspace(-1, 1, 41)]
    a = criterion_confidence_set(s, LMS, axes, alpha=0.05)
    b = criterion_confidence_set(s, LMS, axes, alpha=0.3)
    assert b.grid.is_subset(a.grid)
    assert np.all(a.q >= b.q)


def test_confset_empty_grid():
    s = generate(DgpSpec("lms", 100, 1))
    with pytest.raises(EmptyGrid):
        criterion_confidence_set(s, LMS, [])
    with pytest.raises(EmptyGrid):
        criterion_confidence_set(s, LMS, [[]])


def test_confset_sphere_angles():
    s = generate(DgpSpec("max_score", 200, 8))
    cfg = EstimatorConfig("max_score")
    cs = criterion_confidence_set(s, cfg, [np.linspace(-math.pi, math.pi, 36, endpoint=False)])
    assert cs.grid.mask.any()
    assert cs.block_Q is None


def test_subsampling_deterministic():
    s = generate(DgpSpec("lms", 300, 9))
    a = subsample_ci(s, LMS)
    b = subsample_ci(s, LMS)
    assert np.array_equal(a.lower, b.lower) and np.array_equal(a.upper, b.upper)
