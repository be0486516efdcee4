"""The estimators, each a criterion builder composed with an optimizer.

Criteria are normalized as sample averages ``P_n f_{n,theta}``, including
the ``1/h_n`` localization factor, so that ``(n h_n)^{2/3}`` times a
criterion gap is on the scale of the limit process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .core import BandwidthRule, GridSet, Kernel, TimeSeriesSample
from .errors import (
    DataError,
    DegenerateData,
    EmptyGrid,
    InvalidSpec,
    ZeroEffectiveSample,
)
from .optim import (
    OptimizerReport,
    grid_refine,
    halfplane_score,
    halfplane_sweep,
    max_weighted_window,
    slab_branch_and_bound,
    vertex_sweep_2d,
)

__all__ = [
    "PointEstimate",
    "IntervalEstimate",
    "SetEstimate",
    "EstimatorConfig",
    "ESTIMATORS",
    "max_score",
    "localized_max_score",
    "honore_kyriazidou",
    "min_volume_region",
    "min_volume_weighted",
    "lms_location",
    "lms_location_batch",
    "lms_regression",
    "hough_estimate",
    "grenander_at",
    "manski_tamer_set",
    "nadaraya_watson",
    "criterion_gap",
    "criterion_gaps",
    "chart",
    "fit",
    "criterion",
]


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class PointEstimate:
    """Point estimate with its criterion value and effective sample size.

    ``theta_hat`` is a unit vector for the circle-valued estimators. It is
    not sign-canonicalized there because the criteria are not symmetric
    under ``theta -> -theta``.
    """

    theta_hat: np.ndarray
    value: float
    effective_size: float
    report: OptimizerReport | None = None
    bandwidth: float = 1.0
    extras: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class IntervalEstimate:
    """Minimum-volume region ``[theta_hat - nu_hat, theta_hat + nu_hat]``."""

    theta_hat: float
    nu_hat: float
    coverage: float
    effective_size: float
    bandwidth: float = 1.0


@dataclass(frozen=True)
class SetEstimate:
    """Level-set estimate on a grid.

    ``values`` holds the criterion at every grid node (C order) and
    ``threshold`` the admitted gap ``cutoff * (n h_n)^{-1/2}``.
    """

    grid: GridSet
    cutoff: float
    criterion_max: float
    threshold: float
    values: np.ndarray
    effective_size: float


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class EstimatorConfig:
    """Everything an estimator needs beyond the sample.

    ``bandwidth=None`` selects the estimator's default rule. ``grid`` is a
    tuple of axis arrays (set estimation only).
    """

    estimator: str
    kernel: Kernel = field(default_factory=Kernel)
    bandwidth: BandwidthRule | None = None
    c: float | None = None
    alpha: float = 0.5
    cutoff: float | None = None
    grid: tuple[tuple[float, ...], ...] | None = None
    nuisance_bandwidth: BandwidthRule = field(default_factory=lambda: BandwidthRule(1.0, 0.2))
    method: str = "auto"
    at: float | None = None

    def __post_init__(self) -> None:
        if self.estimator not in ESTIMATORS:
            raise InvalidSpec(f"unknown estimator {self.estimator!r}; choose from {sorted(ESTIMATORS)}")
        if not (0.0 < self.alpha < 1.0):
            raise InvalidSpec("alpha must lie in (0, 1)")
        if self.grid is not None:
            object.__setattr__(
                self, "grid", tuple(tuple(float(v) for v in ax) for ax in self.grid)
            )

    @property
    def spec(self) -> EstimatorDef:
        return ESTIMATORS[self.estimator]

    def rule(self) -> BandwidthRule:
        return self.bandwidth if self.bandwidth is not None else self.spec.default_bandwidth

    def h(self, n: int) -> float:
        return self.rule().at(n)

    def effective_size(self, n: int) -> float:
        return self.rule().effective_size(n, self.spec.power)

    def to_dict(self) -> dict[str, Any]:
        r = self.rule()
        return {
            "estimator": self.estimator,
            "kernel": {"id": self.kernel.id, "support_radius": self.kernel.support_radius},
            "bandwidth": {"c": r.c, "a": r.a},
            "c": self.c,
            "alpha": self.alpha,
            "cutoff": self.cutoff,
            "grid": [list(ax) for ax in self.grid] if self.grid is not None else None,
            "nuisance_bandwidth": {
                "c": self.nuisance_bandwidth.c,
                "a": self.nuisance_bandwidth.a,
            },
            "method": self.method,
            "at": self.at,
        }


# --------------------------------------------------------------------------
# maximum score family


def _x2(sample: TimeSeriesSample, fields: Sequence[str] = ("x1", "x2")) -> np.ndarray:
    sample.require(*fields)
    return np.column_stack([sample[f] for f in fields])


def _sphere_fit(x: np.ndarray, w: np.ndarray, const: float, norm: float) -> tuple[np.ndarray, float, OptimizerReport]:
    """Maximize ``(const + sum w_i I{x_i' theta >= 0}) / norm`` over the unit sphere."""
    # zero weights cut cells without changing the score
    keep = w != 0
    if keep.any():
        x, w = x[keep], w[keep]
    if x.shape[1] == 2:
        rep = halfplane_sweep(x, w)
        return rep.point, (const + rep.value) / norm, rep
    d = x.shape[1]

    def ev(pts):
        nrm = np.linalg.norm(pts, axis=1)
        safe = np.where(nrm > 0, nrm, 1.0)
        out = halfplane_score(x, w, pts / safe[:, None])
        return np.where(nrm > 0, out, -np.inf)

    rep = grid_refine(ev, [(-1.0, 1.0)] * d, vectorized=True)
    theta = rep.point / np.linalg.norm(rep.point)
    value = float(halfplane_score(x, w, theta))
    rep = replace(rep, point=theta, value=value)
    return theta, (const + value) / norm, rep


def _sphere_criterion(x, w, const, norm, thetas):
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    return (const + halfplane_score(x, w, thetas)) / norm


def _max_score_parts(sample: TimeSeriesSample):
    sample.require("sign_y")
    s = np.asarray(sample["sign_y"])
    if not np.all(np.isin(s, (-1.0, 1.0))):
        raise DataError("sign_y must take values -1 and +1")
    fields = [f for f in sample.schema if f.startswith("x") and f[1:].isdigit()]
    fields.sort(key=lambda f: int(f[1:]))
    if len(fields) < 2:
        raise DataError("maximum score needs regressors x1, x2, ...")
    x = _x2(sample, fields)
    return x, s


def max_score(sample: TimeSeriesSample) -> PointEstimate:
    """Maximum score estimator with ``h_n = 1``.

    Maximizes ``sum_t I{y_t >= 0, x_t' theta >= 0} + I{y_t < 0, x_t' theta < 0}``
    over the unit circle exactly (grid search if ``d >= 3``). Only the sign
    of ``y`` enters, through the ``sign_y`` field.
    """
    x, s = _max_score_parts(sample)
    n = sample.n
    const = float(np.sum(s < 0))
    theta, value, rep = _sphere_fit(x, s, const, n)
    return PointEstimate(theta, value, float(n), rep, 1.0)


def _max_score_crit(sample, cfg, thetas, est=None):
    x, s = _max_score_parts(sample)
    return _sphere_criterion(x, s, float(np.sum(s < 0)), sample.n, thetas)


def _localized_parts(sample, cfg):
    x, s = _max_score_parts(sample)
    sample.require("w")
    n = sample.n
    b = cfg.h(n)
    c = 0.5 if cfg.c is None else float(cfg.c)
    k = cfg.kernel((sample["w"] - c) / b)
    if not np.any(k > 0):
        raise ZeroEffectiveSample("no observation has positive kernel weight")
    return x, k * s, float(np.sum(k[s < 0])), n * b, b


def localized_max_score(
    sample: TimeSeriesSample,
    c: float = 0.5,
    kernel: Kernel | None = None,
    bandwidth: BandwidthRule | None = None,
) -> PointEstimate:
    """Kernel-localized maximum score at ``w = c``, ``h_n = b_n``."""
    cfg = EstimatorConfig("localized_max_score", kernel or Kernel(), bandwidth, c=c)
    return _localized_fit(sample, cfg)


def _localized_fit(sample, cfg):
    x, w, const, norm, b = _localized_parts(sample, cfg)
    theta, value, rep = _sphere_fit(x, w, const, norm)
    return PointEstimate(theta, value, cfg.effective_size(sample.n), rep, b)


def _localized_crit(sample, cfg, thetas, est=None):
    x, w, const, norm, _ = _localized_parts(sample, cfg)
    return _sphere_criterion(x, w, const, norm, thetas)


def _hk_parts(sample, cfg):
    sample.require("y0", "y1", "y2", "y3", "x1", "x2", "x3")
    n = sample.n
    b = cfg.h(n)
    e = cfg.kernel((sample["x2"] - sample["x3"]) / b) * (sample["y2"] - sample["y1"])
    if not np.any(e != 0):
        raise ZeroEffectiveSample("all conditional maximum score weights are zero")
    z = np.column_stack([sample["x2"] - sample["x1"], sample["y3"] - sample["y0"]])
    # sgn(v) = 2 I{v >= 0} - 1
    return z, 2.0 * e, -float(np.sum(e)), n * b, b


def honore_kyriazidou(
    sample: TimeSeriesSample,
    kernel: Kernel | None = None,
    bandwidth: BandwidthRule | None = None,
) -> PointEstimate:
    """Conditional maximum score for the dynamic panel logit, ``(beta, gamma)`` on the circle.

    Maximizes ``sum_i K((x_i2 - x_i3)/b) (y_i2 - y_i1) sgn{(x_i2 - x_i1) beta + (y_i3 - y_i0) gamma}``
    with ``sgn(v) = 2 I{v >= 0} - 1``; ``h_n = b_n``.
    """
    cfg = EstimatorConfig("honore_kyriazidou", kernel or Kernel(), bandwidth)
    return _hk_fit(sample, cfg)


def _hk_fit(sample, cfg):
    z, w, const, norm, b = _hk_parts(sample, cfg)
    theta, value, rep = _sphere_fit(z, w, const, norm)
    return PointEstimate(theta, value, cfg.effective_size(sample.n), rep, b)


def _hk_crit(sample, cfg, thetas, est=None):
    z, w, const, norm, _ = _hk_parts(sample, cfg)
    return _sphere_criterion(z, w, const, norm, thetas)


# --------------------------------------------------------------------------
# windows: minimum volume region and least median of squares


def _min_halfwidth(ys: np.ndarray, ws: np.ndarray, alpha: float) -> float:
    """Smallest ``nu`` such that some closed window of width ``2 nu`` holds weight share >= alpha.

    For each left point the shortest sufficient window ends at the first
    index where the cumulative weight reaches the target; the answer is
    the smallest such half-gap, which is also the smallest member of the
    pairwise half-gap candidate set that attains ``alpha``.
    """
    n = ys.size
    cw = np.concatenate([[0.0], np.cumsum(ws)])
    total = cw[-1]
    i = np.arange(n)

    def enough(j):
        jj = np.minimum(j, n)
        return (j <= n) & ((cw[jj] - cw[i]) / total >= alpha - 1e-12)

    # window i..j-1; start from the cumulative-weight guess, then settle on the predicate
    j = np.searchsorted(cw, cw[:-1] + alpha * total, side="left")
    j = np.clip(j, i + 1, n + 1)
    for _ in range(8):
        up = (j <= n) & ~enough(j)
        down = (j - 1 > i) & enough(j - 1)
        if not (up.any() or down.any()):
            break
        j = j + up - down
    valid = enough(j)
    nu = 0.5 * (ys[np.minimum(j, n) - 1] - ys)
    return float(np.min(nu[valid]))


def _window_inputs(y, w):
    y = np.asarray(y, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    pos = w > 0
    if not np.any(pos):
        raise ZeroEffectiveSample("kernel weights sum to zero")
    order = np.argsort(y[pos], kind="stable")
    return y[pos][order], w[pos][order]


def min_volume_weighted(y, w, alpha: float) -> tuple[float, float, float]:
    """``(theta_hat, nu_hat, coverage)`` for weights ``w`` and level ``alpha``."""
    ys, ws = _window_inputs(y, w)
    nu = _min_halfwidth(ys, ws, alpha)
    theta, weight = max_weighted_window(ys, ws, nu)
    return float(theta), nu, weight / float(np.sum(ws))


def min_volume_region(
    sample: TimeSeriesSample,
    c: float,
    alpha: float,
    kernel: Kernel | None = None,
    bandwidth: BandwidthRule | None = None,
) -> IntervalEstimate:
    """Smallest kernel-weighted interval ``[theta +- nu]`` with conditional coverage >= alpha at ``x = c``."""
    cfg = EstimatorConfig("min_volume_region", kernel or Kernel(), bandwidth, c=c, alpha=alpha)
    return _minvol_fit(sample, cfg)


def _minvol_weights(sample, cfg):
    sample.require("y", "x")
    if cfg.c is None:
        raise InvalidSpec("min_volume_region needs the localization point c")
    h = cfg.h(sample.n)
    return cfg.kernel((sample["x"] - float(cfg.c)) / h), h


def _minvol_fit(sample, cfg):
    k, h = _minvol_weights(sample, cfg)
    theta, nu, cov = min_volume_weighted(sample["y"], k, cfg.alpha)
    return IntervalEstimate(theta, nu, cov, cfg.effective_size(sample.n), h)


def _minvol_crit(sample, cfg, thetas, est=None):
    est = est or _minvol_fit(sample, cfg)
    k, h = _minvol_weights(sample, cfg)
    th = np.asarray(thetas, dtype=float).reshape(-1, 1)
    inside = np.abs(sample["y"][None, :] - th) <= est.nu_hat
    return (inside @ k) / (sample.n * h)


def lms_location(y) -> PointEstimate:
    """Shorth midpoint: the shortest closed interval holding ``ceil(n/2)`` points.

    Ties go to the leftmost interval. ``value`` is the share of points in
    ``[theta_hat - nu_hat, theta_hat + nu_hat]``; ``nu_hat`` is in ``extras``.
    """
    y = np.sort(np.asarray(y, dtype=float).reshape(-1))
    n = y.size
    if n == 0:
        raise DataError("empty sample")
    k = (n + 1) // 2
    widths = y[k - 1 :] - y[: n - k + 1]
    i = int(np.argmin(widths))
    theta = 0.5 * (y[i] + y[i + k - 1])
    nu = 0.5 * float(widths[i])
    value = float(np.mean(np.abs(y - theta) <= nu))
    return PointEstimate(np.array([theta]), value, float(n), None, 1.0, {"nu_hat": nu})


def lms_location_batch(blocks: np.ndarray) -> np.ndarray:
    """Shorth midpoints of each row of ``blocks`` (shape ``(m, s)``)."""
    y = np.sort(np.asarray(blocks, dtype=float), axis=1)
    n = y.shape[1]
    k = (n + 1) // 2
    widths = y[:, k - 1 :] - y[:, : n - k + 1]
    i = np.argmin(widths, axis=1)
    rows = np.arange(y.shape[0])
    return 0.5 * (y[rows, i] + y[rows, i + k - 1])


def _lms_loc_fit(sample, cfg):
    sample.require("y")
    return lms_location(sample["y"])


def _lms_loc_crit(sample, cfg, thetas, est=None):
    est = est or _lms_loc_fit(sample, cfg)
    th = np.asarray(thetas, dtype=float).reshape(-1, 1)
    return np.mean(np.abs(sample["y"][None, :] - th) <= est.extras["nu_hat"], axis=1)


def lms_regression(sample: TimeSeriesSample, chunk: int = 2048) -> PointEstimate:
    """Least median of squares line over the pairwise-slope candidate class.

    For each slope through two data points the best intercept is the shorth
    midpoint of the residuals. The candidate with the smallest shorth wins,
    ties to the smallest slope. ``theta_hat = (intercept, slope)``.
    """
    sample.require("y", "x")
    y, x = sample["y"], sample["x"]
    n = y.size
    if n < 3:
        raise DataError("lms_regression needs n >= 3")
    i, j = np.triu_indices(n, k=1)
    ok = x[i] != x[j]
    if not np.any(ok):
        raise DegenerateData("all regressor values are equal")
    slopes = np.unique((y[j][ok] - y[i][ok]) / (x[j][ok] - x[i][ok]))
    k = (n + 1) // 2
    best = (np.inf, 0.0, 0.0)
    for start in range(0, slopes.size, chunk):
        sl = slopes[start : start + chunk]
        r = np.sort(y[None, :] - sl[:, None] * x[None, :], axis=1)
        widths = r[:, k - 1 :] - r[:, : n - k + 1]
        arg = np.argmin(widths, axis=1)
        wmin = widths[np.arange(sl.size), arg]
        q = int(np.argmin(wmin))
        if wmin[q] < best[0]:
            a = 0.5 * (r[q, arg[q]] + r[q, arg[q] + k - 1])
            best = (float(wmin[q]), a, float(sl[q]))
    nu = 0.5 * best[0]
    theta = np.array([best[1], best[2]])
    value = float(np.mean(np.abs(y - theta[0] - theta[1] * x) <= nu))
    return PointEstimate(theta, value, float(n), None, 1.0, {"nu_hat": nu})


def _lms_reg_fit(sample, cfg):
    return lms_regression(sample)


def _lms_reg_crit(sample, cfg, thetas, est=None):
    est = est or lms_regression(sample)
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    res = sample["y"][None, :] - th[:, :1] - th[:, 1:2] * sample["x"][None, :]
    return np.mean(np.abs(res) <= est.extras["nu_hat"], axis=1)


# --------------------------------------------------------------------------
# Hough transform


def _hough_parts(sample, cfg):
    sample.require("y", "x")
    h = cfg.h(sample.n)
    r = h * np.sqrt(1.0 + sample["x"] ** 2)
    return sample["y"], sample["x"], r, h


def hough_estimate(
    sample: TimeSeriesSample,
    bandwidth: BandwidthRule | None = None,
    method: str = "auto",
) -> PointEstimate:
    """Hough transform line fit ``argmax_beta sum_t I{|y_t - x_t' beta| <= h_n |x_t|}``.

    ``x_t = (1, x_t)``; ``theta_hat = (intercept, slope)``. ``method`` is
    ``"bnb"`` (branch and bound, default) or ``"vertex"`` (full arrangement
    enumeration); both return the same exact maximizer.
    """
    cfg = EstimatorConfig("hough", bandwidth=bandwidth, method=method)
    return _hough_fit(sample, cfg)


def _hough_fit(sample, cfg):
    y, x, r, h = _hough_parts(sample, cfg)
    if sample.n < 2:
        raise DataError("hough needs n >= 2")
    engine = vertex_sweep_2d if cfg.method == "vertex" else slab_branch_and_bound
    rep = engine(y - r, y + r, x)
    value = float(_hough_crit(sample, cfg, rep.point[None, :])[0])
    return PointEstimate(rep.point, value, cfg.effective_size(sample.n), rep, h)


def _hough_crit(sample, cfg, thetas, est=None):
    y, x, r, h = _hough_parts(sample, cfg)
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    res = y[None, :] - th[:, :1] - th[:, 1:2] * x[None, :]
    return np.sum(np.abs(res) <= r[None, :], axis=1) / (sample.n * h)


# --------------------------------------------------------------------------
# Grenander


def grenander_at(z, c: float) -> float:
    """Left derivative at ``c`` of the least concave majorant of the empirical cdf.

    The majorant is the upper hull of ``(0, 0), (z_(1), 1/n), ..., (z_(n), 1)``;
    segment slopes are computed as ``((j - i)/n) / (z_(j) - z_(i))``.
    Returns 0 for ``c > z_(n)``.
    """
    z = np.sort(np.asarray(z, dtype=float).reshape(-1))
    if z.size == 0 or np.any(z <= 0):
        raise DataError("grenander_at needs a nonempty sample of positive values")
    if not c > 0:
        raise DataError("evaluation point must be positive")
    knots, slopes = _lcm(z)
    if c > knots[-1]:
        return 0.0
    k = int(np.searchsorted(knots, c, side="left"))  # first knot >= c
    return float(slopes[k - 1])


def _lcm(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hull knots (x positions, starting at 0) and slopes of the segments between them."""
    n = z.size
    xs = np.concatenate([[0.0], z])
    idx = np.arange(n + 1)
    # keep only the top of each run of ties
    last = np.ones(n + 1, dtype=bool)
    last[:-1] = xs[1:] != xs[:-1]
    xs, idx = xs[last], idx[last]
    hull: list[int] = []
    for m in range(xs.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            s_ab = ((idx[b] - idx[a]) / n) / (xs[b] - xs[a])
            s_bm = ((idx[m] - idx[b]) / n) / (xs[m] - xs[b])
            if s_bm >= s_ab:
                hull.pop()
            else:
                break
        hull.append(m)
    h = np.array(hull)
    slopes = ((idx[h[1:]] - idx[h[:-1]]) / n) / (xs[h[1:]] - xs[h[:-1]])
    return xs[h], slopes


def _grenander_fit(sample, cfg):
    sample.require("z")
    if cfg.at is None:
        raise InvalidSpec("grenander needs an evaluation point (--at)")
    v = grenander_at(sample["z"], cfg.at)
    return PointEstimate(np.array([v]), v, float(sample.n), None, 1.0)


# --------------------------------------------------------------------------
# set estimation with an interval regressor


def nadaraya_watson(xt: np.ndarray, y: np.ndarray, h: float, kernel: Kernel | None = None) -> np.ndarray:
    """Leave-in Nadaraya-Watson fit at the sample points with a product kernel.

    One scalar bandwidth on the raw coordinates. Each point's own
    observation is included, so the denominator is never zero.
    """
    kernel = kernel or Kernel()
    xt = np.asarray(xt, dtype=float)
    if xt.ndim == 1:
        xt = xt[:, None]
    wmat = np.ones((xt.shape[0], xt.shape[0]))
    for j in range(xt.shape[1]):
        wmat *= kernel((xt[:, None, j] - xt[None, :, j]) / h)
    return (wmat @ y) / wmat.sum(axis=1)


def _mt_fields(sample):
    sample.require("y", "w_l", "w_u")
    if sample.has("x"):
        return ["x"]
    fields = sorted((f for f in sample.schema if f.startswith("x") and f[1:].isdigit()), key=lambda f: int(f[1:]))
    if not fields:
        raise DataError("interval regressor model needs x or x1, x2, ...")
    return fields


def _mt_scores(sample, cfg, nodes):
    fields = _mt_fields(sample)
    x = np.column_stack([sample[f] for f in fields])
    y = sample["y"]
    xt = np.column_stack([x, sample["w_l"], sample["w_u"]])
    q = nadaraya_watson(xt, y, cfg.nuisance_bandwidth.at(sample.n), cfg.kernel)
    hi = q > 0.5
    idx = x @ nodes.T
    sgn = np.where(hi[:, None], np.sign(idx + sample["w_u"][:, None]), np.sign(idx + sample["w_l"][:, None]))
    return ((y - 0.5) @ sgn) / sample.n


def manski_tamer_set(
    sample: TimeSeriesSample,
    grid: Sequence[Sequence[float]],
    nuisance_bandwidth: BandwidthRule | None = None,
    cutoff: float | None = None,
    kernel: Kernel | None = None,
) -> SetEstimate:
    """Level set ``{theta: max S_n - S_n(theta) <= cutoff n^{-1/2}}`` over a grid.

    ``S_n(theta) = P_n (y - .5)[I{q(x~) > .5} sgn(x' theta + w_u) + I{q(x~) <= .5} sgn(x' theta + w_l)]``
    with ``q`` a Nadaraya-Watson fit of ``y`` on ``x~ = (x, w_l, w_u)``.
    The default cutoff is ``log n``.
    """
    cfg = EstimatorConfig(
        "manski_tamer",
        kernel or Kernel(),
        cutoff=cutoff,
        grid=tuple(tuple(a) for a in grid),
        nuisance_bandwidth=nuisance_bandwidth or BandwidthRule(1.0, 0.2),
    )
    return _mt_fit(sample, cfg)


def _grid_of(cfg) -> GridSet:
    if cfg.grid is None or any(len(a) == 0 for a in cfg.grid):
        raise EmptyGrid("parameter grid is empty")
    return GridSet.full([np.asarray(a) for a in cfg.grid])


def _mt_fit(sample, cfg):
    g = _grid_of(cfg)
    nodes = g.nodes()
    vals = _mt_scores(sample, cfg, nodes)
    n = sample.n
    cut = math.log(n) if cfg.cutoff is None else float(cfg.cutoff)
    thr = cut * n ** -0.5
    top = float(vals.max())
    mask = (top - vals) <= thr
    return SetEstimate(g.with_mask(mask.reshape(g.shape)), cut, top, thr, vals, float(n))


def _mt_crit(sample, cfg, thetas, est=None):
    return _mt_scores(sample, cfg, np.atleast_2d(np.asarray(thetas, dtype=float)))


# --------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class EstimatorDef:
    """Registry entry.

    ``power`` is the exponent of ``h_n`` in the effective size; ``family``
    names the rate; ``sphere`` marks circle-valued estimators (charted by
    angle for subsampling).
    """

    fit: Callable
    criterion: Callable | None
    default_bandwidth: BandwidthRule
    power: int = 1
    family: str = "nh"
    sphere: bool = False
    kind: str = "point"


ESTIMATORS: dict[str, EstimatorDef] = {
    "max_score": EstimatorDef(lambda s, c: max_score(s), _max_score_crit, BandwidthRule(1.0, 0.0), sphere=True),
    "localized_max_score": EstimatorDef(_localized_fit, _localized_crit, BandwidthRule(1.0, 0.125), sphere=True),
    "honore_kyriazidou": EstimatorDef(_hk_fit, _hk_crit, BandwidthRule(1.0, 0.24), sphere=True),
    "min_volume_region": EstimatorDef(_minvol_fit, _minvol_crit, BandwidthRule(1.0, 0.25), kind="interval"),
    "lms_location": EstimatorDef(_lms_loc_fit, _lms_loc_crit, BandwidthRule(1.0, 0.0)),
    "lms_regression": EstimatorDef(_lms_reg_fit, _lms_reg_crit, BandwidthRule(1.0, 0.0)),
    "hough": EstimatorDef(_hough_fit, _hough_crit, BandwidthRule(1.0, 0.19), power=2, family="nh2"),
    "grenander": EstimatorDef(_grenander_fit, None, BandwidthRule(1.0, 0.0)),
    "manski_tamer": EstimatorDef(_mt_fit, _mt_crit, BandwidthRule(1.0, 0.0), family="nh_over_log", kind="set"),
}


def fit(sample: TimeSeriesSample, cfg: EstimatorConfig):
    """Run the configured estimator."""
    return cfg.spec.fit(sample, cfg)


def criterion(sample: TimeSeriesSample, cfg: EstimatorConfig, thetas, est=None) -> np.ndarray:
    """Normalized sample criterion ``P_n f_{n,theta}`` at each row of ``thetas``."""
    if cfg.spec.criterion is None:
        raise InvalidSpec(f"{cfg.estimator} has no criterion representation")
    return np.asarray(cfg.spec.criterion(sample, cfg, thetas, est), dtype=float)


def estimate_value(est) -> float:
    if isinstance(est, IntervalEstimate):
        return float("nan")
    if isinstance(est, SetEstimate):
        return est.criterion_max
    return est.value


def chart(est, cfg: EstimatorConfig) -> np.ndarray:
    """Coordinates used for subsampling: angle on the circle, centre for intervals."""
    if isinstance(est, IntervalEstimate):
        return np.array([est.theta_hat])
    if isinstance(est, SetEstimate):
        raise InvalidSpec("set estimates have no point chart")
    th = np.asarray(est.theta_hat, dtype=float)
    if cfg.spec.sphere and th.size == 2:
        return np.array([math.atan2(th[1], th[0])])
    return th.reshape(-1)


def criterion_gap(sample: TimeSeriesSample, cfg: EstimatorConfig, theta, est=None) -> float:
    """``(n h_n^p)^{2/3} (max P_n f - P_n f_theta)``, never negative."""
    return float(criterion_gaps(sample, cfg, np.atleast_2d(theta), est)[0])


def criterion_gaps(sample: TimeSeriesSample, cfg: EstimatorConfig, thetas, est=None) -> np.ndarray:
    est = est if est is not None else fit(sample, cfg)
    vals = criterion(sample, cfg, thetas, est)
    if isinstance(est, IntervalEstimate):
        top = float(criterion(sample, cfg, [[est.theta_hat]], est)[0])
    else:
        top = estimate_value(est)
    top = max(top, float(np.max(vals)))
    return cfg.effective_size(sample.n) ** (2.0 / 3.0) * (top - vals)
