from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cuberoot.core import BandwidthRule, Kernel, TimeSeriesSample
from cuberoot.dgp import DgpSpec, generate, true_parameter
from cuberoot.errors import DataError, DegenerateData, EmptyGrid, ZeroEffectiveSample
from cuberoot.estimators import (
    EstimatorConfig,
    criterion,
    criterion_gap,
    criterion_gaps,
    fit,
    grenander_at,
    honore_kyriazidou,
    hough_estimate,
    lms_location,
    lms_regression,
    localized_max_score,
    manski_tamer_set,
    max_score,
    min_volume_region,
    min_volume_weighted,
)
from oracles import grenander_oracle, max_coverage, min_halfwidth_oracle, shorth_oracle


def _ms_sample(x, s, **extra):
    x = np.asarray(x, dtype=float)
    cols = {"sign_y": np.asarray(s, dtype=float), "x1": x[:, 0], "x2": x[:, 1]}
    cols.update(extra)
    return TimeSeriesSample(cols)


# -- maximum score ---------------------------------------------------------------


def test_max_score_separable():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((80, 2))
    star = np.array([math.cos(1.0), math.sin(1.0)])
    s = np.where(x @ star >= 0, 1.0, -1.0)
    est = max_score(_ms_sample(x, s))
    assert est.value == 1.0
    assert np.all(np.where(x @ est.theta_hat >= 0, 1.0, -1.0) == s)


def test_max_score_single_point():
    est = max_score(_ms_sample([[1.0, 0.0]], [1.0]))
    assert np.allclose(est.theta_hat, [1.0, 0.0], atol=1e-15)
    assert est.report.region == pytest.approx((-math.pi / 2 % (2 * math.pi), 2 * math.pi + math.pi / 2))


def test_max_score_beats_truth():
    spec = DgpSpec("max_score", 200, 4, {"angle": 0.0})
    sample = generate(spec)
    cfg = EstimatorConfig("max_score")
    est = fit(sample, cfg)
    assert est.value >= criterion(sample, cfg, true_parameter(spec)[None, :])[0]
    assert est.value == criterion(sample, cfg, est.theta_hat[None, :])[0]


@given(seed=st.integers(0, 10**6), lam=st.floats(0.01, 100))
def test_max_score_sign_only(seed, lam):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((40, 2))
    y = x @ [1.0, 0.5] + rng.standard_normal(40)
    a = max_score(_ms_sample(x, np.where(y >= 0, 1.0, -1.0)))
    b = max_score(_ms_sample(x, np.where(lam * y >= 0, 1.0, -1.0)))
    assert np.array_equal(a.theta_hat, b.theta_hat)


def test_max_score_needs_signs():
    with pytest.raises(DataError):
        max_score(_ms_sample([[1.0, 0.0]], [0.5]))


# -- conditional and localized maximum score ---------------------------------------


def _panel(n, rng):
    cols = {f"y{t}": rng.integers(0, 2, n).astype(float) for t in range(4)}
    cols.update({f"x{t}": rng.standard_normal(n) for t in range(1, 4)})
    return cols


def test_hk_single_effective_point():
    rng = np.random.default_rng(1)
    cols = _panel(10, rng)
    cols["y1"][:] = cols["y2"][:] = 0.0
    cols["y2"][3] = 1.0
    cols["x3"][3] = cols["x2"][3]
    s = TimeSeriesSample(cols)
    est = honore_kyriazidou(s, bandwidth=BandwidthRule(0.5, 0.0))
    z = np.array([cols["x2"][3] - cols["x1"][3], cols["y3"][3] - cols["y0"][3]])
    # the arc {theta: z'theta >= 0} has midpoint z/|z|
    assert np.allclose(est.theta_hat, z / np.linalg.norm(z), atol=1e-12)


def test_hk_zero_weights():
    rng = np.random.default_rng(2)
    cols = _panel(10, rng)
    cols["y2"] = cols["y1"].copy()
    with pytest.raises(ZeroEffectiveSample):
        honore_kyriazidou(TimeSeriesSample(cols))


def test_hk_wide_kernel_is_weighted_max_score():
    rng = np.random.default_rng(3)
    cols = _panel(60, rng)
    s = TimeSeriesSample(cols)
    est = honore_kyriazidou(s, Kernel("boxcar", 1e6), BandwidthRule(1.0, 0.0))
    e = cols["y2"] - cols["y1"]
    z = np.column_stack([cols["x2"] - cols["x1"], cols["y3"] - cols["y0"]])
    phis = np.linspace(0, 2 * math.pi, 20_000, endpoint=False)
    th = np.column_stack([np.cos(phis), np.sin(phis)])
    vals = (e[:, None] * np.where(z @ th.T >= 0, 1.0, -1.0)).sum(axis=0)
    got = float(e @ np.where(z @ est.theta_hat >= 0, 1.0, -1.0))
    assert got >= vals.max()


def test_localized_wide_boxcar_matches_max_score():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((70, 2))
    s = rng.choice([-1.0, 1.0], 70)
    sample = _ms_sample(x, s, w=rng.uniform(0, 1, 70))
    a = localized_max_score(sample, 0.5, Kernel("boxcar", 10.0), BandwidthRule(1.0, 0.0))
    b = max_score(sample)
    assert np.array_equal(a.theta_hat, b.theta_hat)


def test_localized_single_weight():
    x = np.array([[1.0, 1.0], [1.0, -3.0], [-2.0, 0.5]])
    sample = _ms_sample(x, [1.0, -1.0, 1.0], w=np.array([0.5, 5.0, 9.0]))
    est = localized_max_score(sample, 0.5, Kernel(), BandwidthRule(1.0, 0.0))
    assert np.allclose(est.theta_hat, x[0] / np.linalg.norm(x[0]), atol=1e-12)


def test_localized_zero_weights():
    sample = _ms_sample([[1.0, 0.0]], [1.0], w=np.array([9.0]))
    with pytest.raises(ZeroEffectiveSample):
        localized_max_score(sample, 0.5)


# -- minimum volume region -------------------------------------------------------


def test_min_volume_examples():
    y, w = [0.0, 1.0, 2.0, 10.0], [1.0, 1.0, 1.0, 1.0]
    theta, nu, cov = min_volume_weighted(y, w, 0.5)
    assert (theta, nu) == (0.5, 0.5)
    assert cov >= 0.5
    assert min_halfwidth_oracle(y, w, 0.5) == 0.5
    theta, nu, _ = min_volume_weighted([3.0, 1.0, 2.0], [1.0, 0.0, 1.0], 1e-9)
    assert (theta, nu) == (2.0, 0.0)


def test_min_volume_region_kernel():
    s = TimeSeriesSample({"y": [0.0, 1.0, 2.0, 10.0], "x": [0.5, 0.5, 0.5, 0.5]})
    est = min_volume_region(s, 0.5, 0.5, Kernel("boxcar"), BandwidthRule(1.0, 0.0))
    assert (est.theta_hat, est.nu_hat) == (0.5, 0.5)
    with pytest.raises(ZeroEffectiveSample):
        min_volume_region(s, 50.0, 0.5)


@given(
    seed=st.integers(0, 10**6),
    n=st.integers(1, 40),
    alpha=st.floats(0.01, 0.99),
)
def test_min_volume_exhaustive(seed, n, alpha):
    rng = np.random.default_rng(seed)
    y = np.round(rng.normal(size=n), 2)
    w = rng.choice([0.0, 0.3, 1.0], n)
    if not np.any(w > 0):
        w[-1] = 1.0
    theta, nu, cov = min_volume_weighted(y, w, alpha)
    assert cov >= alpha - 1e-12
    assert nu == pytest.approx(min_halfwidth_oracle(y, w, alpha), abs=1e-12)
    assert max_coverage(y, w, nu) == pytest.approx(cov, abs=1e-12)


# -- least median of squares -----------------------------------------------------


@pytest.mark.parametrize("y,expected", [([0, 1, 2, 10], 0.5), ([5], 5.0), ([-1, 0, 1], -0.5)])
def test_lms_location_examples(y, expected):
    assert lms_location(y).theta_hat[0] == expected


@given(st.lists(st.integers(-20, 20).map(float), min_size=1, max_size=30))
def test_lms_location_oracle(y):
    assert lms_location(y).theta_hat[0] == shorth_oracle(y)


def test_lms_regression_recovers_line():
    rng = np.random.default_rng(5)
    x = rng.uniform(-3, 3, 21)
    y = 1.5 - 0.5 * x
    y[:9] += rng.uniform(5, 10, 9)
    est = lms_regression(TimeSeriesSample({"y": y, "x": x}))
    assert est.extras["nu_hat"] == pytest.approx(0.0, abs=1e-12)
    assert est.theta_hat == pytest.approx([1.5, -0.5], abs=1e-9)


def test_lms_regression_three_points():
    x = np.array([0.0, 1.0, 3.0])
    y = np.array([0.0, 2.0, 1.0])
    est = lms_regression(TimeSeriesSample({"y": y, "x": x}))
    best = math.inf
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        s = (y[j] - y[i]) / (x[j] - x[i])
        r = np.sort(y - s * x)
        widths = r[1:] - r[:-1]
        best = min(best, widths.min())
    assert 2 * est.extras["nu_hat"] == pytest.approx(best, abs=1e-12)


def test_lms_regression_degenerate():
    with pytest.raises(DegenerateData):
        lms_regression(TimeSeriesSample({"y": [1.0, 2.0, 3.0], "x": [1.0, 1.0, 1.0]}))


# -- Hough -------------------------------------------------------------------------


def test_hough_noiseless():
    x = np.linspace(-1, 1, 30)
    s = TimeSeriesSample({"y": 2.0 + 0.3 * x, "x": x})
    est = hough_estimate(s, BandwidthRule(0.05, 0.0))
    assert est.value * s.n * 0.05 == pytest.approx(30)


def test_hough_engines_agree():
    s = generate(DgpSpec("hough_line", 120, 8))
    a = hough_estimate(s, method="vertex")
    b = hough_estimate(s)
    assert np.array_equal(a.theta_hat, b.theta_hat)
    assert a.value == b.value


def test_hough_single_observation():
    with pytest.raises(DataError):
        hough_estimate(TimeSeriesSample({"y": [1.0], "x": [0.5]}))


# -- Grenander -------------------------------------------------------------------


def test_grenander_examples():
    assert grenander_at([2.0], 1.0) == 0.5
    assert grenander_at([1.0, 3.0], 0.5) == 0.5
    assert grenander_at([1.0, 3.0], 2.0) == 0.25
    assert grenander_at([1.0, 3.0], 3.5) == 0.0


@given(st.lists(st.floats(0.01, 10), min_size=1, max_size=25, unique=True), st.floats(0.001, 11))
def test_grenander_matches_oracle(z, c):
    assert grenander_at(z, c) == pytest.approx(grenander_oracle(z, c)[0], abs=1e-12)


@given(st.lists(st.floats(0.01, 10), min_size=1, max_size=25))
def test_grenander_density_shape(z):
    zs = np.sort(z)
    cs = np.concatenate([zs, 0.5 * (np.concatenate([[0.0], zs[:-1]]) + zs)])
    cs = np.sort(cs[cs > 0])
    vals = np.array([grenander_at(z, c) for c in cs])
    assert np.all(np.diff(vals) <= 1e-12)
    # integral of the left derivative over (0, z_(n)] is the rise of the majorant
    knots = np.unique(np.concatenate([[0.0], zs]))
    integral = sum(grenander_at(z, b) * (b - a) for a, b in zip(knots[:-1], knots[1:]))
    assert integral == pytest.approx(1.0, abs=1e-9)


# -- Manski-Tamer set --------------------------------------------------------------


GRID = [tuple(np.linspace(0, 2.5, 51))]


def test_mt_cutoff_extremes():
    s = generate(DgpSpec("interval_binary", 300, 2))
    assert manski_tamer_set(s, GRID, cutoff=1e9).grid.mask.all()
    est = manski_tamer_set(s, GRID, cutoff=0.0)
    assert np.array_equal(est.grid.mask.reshape(-1), est.values == est.values.max())


def test_mt_nested_in_cutoff():
    s = generate(DgpSpec("interval_binary", 300, 3))
    small = manski_tamer_set(s, GRID, cutoff=0.5).grid
    big = manski_tamer_set(s, GRID, cutoff=3.0).grid
    assert small.is_subset(big)
    est = manski_tamer_set(s, GRID)
    assert est.cutoff == pytest.approx(math.log(300))
    assert est.grid.mask.reshape(-1)[int(np.argmax(est.values))]


def test_mt_point_identified_shrinks():
    def width(n):
        ws = []
        for seed in range(20):
            s = generate(DgpSpec("interval_binary", n, seed, {"delta": 0.0}))
            pts = manski_tamer_set(s, GRID, cutoff=1.0).grid.points()[:, 0]
            ws.append(max(abs(pts - 1.0)))
        return np.median(ws)

    assert width(2000) < width(200)


def test_mt_empty_grid():
    s = generate(DgpSpec("interval_binary", 50, 3))
    with pytest.raises(EmptyGrid):
        manski_tamer_set(s, [()])


# -- criterion gaps ----------------------------------------------------------------


def test_criterion_gap_toy():
    x = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]
    s = _ms_sample(x, [1.0, 1.0, -1.0])
    cfg = EstimatorConfig("max_score")
    est = fit(s, cfg)
    assert est.value == 1.0
    assert criterion_gap(s, cfg, est.theta_hat) == 0.0
    # at (0, -1) only the first point scores: count gap 2 of n = 3
    assert criterion_gap(s, cfg, [0.0, -1.0]) == pytest.approx((2 / 3) * 3 ** (2 / 3), abs=1e-12)


@pytest.mark.parametrize(
    "name,model,extra",
    [
        ("max_score", "max_score", {}),
        ("localized_max_score", "rc_binary", {}),
        ("lms_location", "lms", {}),
        ("hough", "hough_line", {}),
        ("min_volume_region", "minvol_pred", {"c": 0.5}),
    ],
)
def test_criterion_gaps_nonnegative_and_zero_at_fit(name, model, extra):
    s = generate(DgpSpec(model, 150, 6))
    cfg = EstimatorConfig(name, **extra)
    est = fit(s, cfg)
    rng = np.random.default_rng(0)
    if cfg.spec.sphere:
        phi = rng.uniform(0, 2 * math.pi, 50)
        th = np.column_stack([np.cos(phi), np.sin(phi)])
        at_fit = est.theta_hat
    elif cfg.spec.kind == "interval":
        th = rng.normal(size=(50, 1))
        at_fit = [est.theta_hat]
    else:
        th = rng.normal(size=(50, np.size(est.theta_hat)))
        at_fit = est.theta_hat
    assert np.all(criterion_gaps(s, cfg, th, est) >= 0)
    assert criterion_gap(s, cfg, at_fit, est) == 0.0


def test_estimators_deterministic():
    s = generate(DgpSpec("rc_binary", 200, 1))
    cfg = EstimatorConfig("localized_max_score")
    assert np.array_equal(fit(s, cfg).theta_hat, fit(s, cfg).theta_hat)
