"""Subsampling confidence intervals and criterion-based confidence sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GridSet, TimeSeriesSample
from .errors import BlockTooShort, CubeRootError, EmptyGrid, InvalidSpec
from .estimators import (
    EstimatorConfig,
    chart,
    criterion_gaps,
    fit,
    lms_location_batch,
)

__all__ = [
    "SubsampleCI",
    "ConfidenceSet",
    "default_block_length",
    "block_starts",
    "type1_quantile",
    "subsample_ci",
    "criterion_confidence_set",
    "wrap_angle",
]

BLOCK_CAP = 2000
CONFSET_NOTE = (
    "grid search over the parameter space; the grid resolution sets both the "
    "cost and the precision of the set"
)


def default_block_length(n: int) -> int:
    """``ceil(n^{2/3})``."""
    return int(math.ceil(n ** (2.0 / 3.0) - 1e-9))


def block_starts(n: int, s: int, cap: int = BLOCK_CAP) -> np.ndarray:
    """Starts of the consecutive blocks ``[b, b + s - 1]``.

    All ``n - s + 1`` starts when that is at most ``cap``, otherwise ``cap``
    equispaced starts including the first and the last.
    """
    if not (2 <= s < n):
        raise InvalidSpec(f"block length must satisfy 2 <= s < n (got s={s}, n={n})")
    total = n - s + 1
    if total <= cap:
        return np.arange(total)
    return np.unique(np.round(np.linspace(0, total - 1, cap)).astype(np.int64))


def type1_quantile(sorted_vals: np.ndarray, p: float) -> float:
    """Inverse empirical cdf: the smallest value ``v`` with ``F(v) >= p``."""
    m = sorted_vals.shape[0]
    k = max(int(math.ceil(p * m - 1e-12)), 1)
    return sorted_vals[min(k, m) - 1]


def wrap_angle(a):
    """Map angles to ``(-pi, pi]``."""
    return math.pi - np.mod(math.pi - np.asarray(a, dtype=float), 2.0 * math.pi)


@dataclass(frozen=True)
class SubsampleCI:
    """Equal-tailed subsampling interval, coordinate-wise in the estimator's chart.

    For circle-valued estimators the chart is the polar angle and the
    bounds may leave ``(-pi, pi]``.
    """

    lower: np.ndarray
    upper: np.ndarray
    theta_hat: np.ndarray
    s: int
    alpha: float
    n_blocks: int
    rate_exponent: float = 1.0 / 3.0
    rate_correction: bool = True
    stats: np.ndarray | None = field(default=None, repr=False)
    starts: np.ndarray | None = field(default=None, repr=False)

    def contains(self, point, sphere: bool = False) -> bool:
        p = np.asarray(point, dtype=float).reshape(-1)
        if sphere:
            # compare on the branch nearest to the estimate
            p = self.theta_hat + wrap_angle(p - self.theta_hat)
        return bool(np.all((self.lower <= p) & (p <= self.upper)))


def _block_charts(sample, cfg, s, starts):
    if cfg.estimator == "lms_location":
        sample.require("y")
        y = sample["y"]
        win = np.lib.stride_tricks.sliding_window_view(y, s)[starts]
        return lms_location_batch(win)[:, None]
    out = []
    for b in starts:
        try:
            est = fit(sample.block(int(b), s), cfg)
        except CubeRootError as exc:
            raise BlockTooShort(
                f"{cfg.estimator} failed on block starting at {int(b)} of length {s}: {exc}"
            ) from exc
        out.append(chart(est, cfg))
    return np.array(out)


def subsample_ci(
    sample: TimeSeriesSample,
    cfg: EstimatorConfig,
    s: int | None = None,
    alpha: float = 0.1,
    cap: int = BLOCK_CAP,
    keep_stats: bool = False,
    rate_correction: bool = True,
) -> SubsampleCI:
    """Subsampling interval from blocks of ``s`` consecutive observations.

    The block statistic is ``(s h_s^p)^{1/3} (theta_b - theta_hat)`` with
    ``h_s`` the bandwidth rule applied at ``s``. With type-1 quantiles
    ``q_{a}`` of its empirical law, the interval is
    ``[theta_hat - q_{1-alpha/2} / r_n, theta_hat - q_{alpha/2} / r_n]``,
    ``r_n = (n h_n^p)^{1/3}``. ``alpha >= 1`` returns the point ``theta_hat``.

    Because the block statistic is centred at ``theta_hat`` rather than the
    truth, it is shifted by ``-r_s (theta_hat - theta0)``. With cube-root
    rates ``r_s / r_n = (s h_s^p / n h_n^p)^{1/3}`` is far from zero at
    realistic sizes (0.43 at ``n = 2000``, ``s = n^{2/3}``), which makes the
    plain inversion undercover. ``rate_correction`` divides by
    ``r_n - r_s`` instead of ``r_n``, which cancels the shift to first
    order; pass ``False`` for the plain inversion.
    """
    if cfg.spec.kind == "set":
        raise InvalidSpec("subsample_ci needs a point or interval estimator")
    if not alpha > 0:
        raise InvalidSpec("alpha must be positive")
    n = sample.n
    s = default_block_length(n) if s is None else int(s)
    starts = block_starts(n, s, cap)
    full = chart(fit(sample, cfg), cfg)
    if alpha >= 1.0:
        return SubsampleCI(full.copy(), full.copy(), full, s, float(alpha), 0)
    charts = _block_charts(sample, cfg, s, starts)
    diff = charts - full[None, :]
    if cfg.spec.sphere:
        diff = wrap_angle(diff)
    stats = cfg.effective_size(s) ** (1.0 / 3.0) * diff
    srt = np.sort(stats, axis=0)
    q_lo = np.array([type1_quantile(srt[:, j], alpha / 2.0) for j in range(srt.shape[1])])
    q_hi = np.array([type1_quantile(srt[:, j], 1.0 - alpha / 2.0) for j in range(srt.shape[1])])
    r_n = cfg.effective_size(n) ** (1.0 / 3.0)
    if rate_correction:
        r_n -= cfg.effective_size(s) ** (1.0 / 3.0)
    return SubsampleCI(
        lower=full - q_hi / r_n,
        upper=full - q_lo / r_n,
        theta_hat=full,
        s=s,
        alpha=float(alpha),
        n_blocks=int(starts.size),
        rate_correction=rate_correction,
        stats=stats if keep_stats else None,
        starts=starts if keep_stats else None,
    )


@dataclass(frozen=True)
class ConfidenceSet:
    """``C_n = {theta : Q_n(theta) <= q_s(theta, 1 - alpha)}`` on a grid."""

    grid: GridSet
    q: np.ndarray
    Q: np.ndarray
    s: int
    alpha: float
    n_blocks: int
    note: str = CONFSET_NOTE
    block_Q: np.ndarray | None = field(default=None, repr=False)


def grid_nodes(cfg: EstimatorConfig, axes) -> tuple[GridSet, np.ndarray]:
    """Grid and parameter values at its nodes.

    For circle-valued estimators a single axis is read as polar angles.
    """
    if axes is None or len(axes) == 0 or any(len(a) == 0 for a in axes):
        raise EmptyGrid("parameter grid is empty")
    g = GridSet.full([np.asarray(a, dtype=float) for a in axes])
    nodes = g.nodes()
    if cfg.spec.sphere and g.d == 1:
        nodes = np.column_stack([np.cos(nodes[:, 0]), np.sin(nodes[:, 0])])
    return g, nodes


def criterion_confidence_set(
    sample: TimeSeriesSample,
    cfg: EstimatorConfig,
    axes,
    s: int | None = None,
    alpha: float = 0.1,
    cap: int = BLOCK_CAP,
    keep_blocks: bool = False,
) -> ConfidenceSet:
    """Criterion-based confidence set with node-wise subsampling critical values.

    ``Q_n(theta) = (n h_n^p)^{2/3} (max P_n f - P_n f_theta)`` on the full
    sample is compared with the type-1 ``1 - alpha`` quantile of the same
    statistic recomputed on every block.
    """
    g, nodes = grid_nodes(cfg, axes)
    n = sample.n
    s = default_block_length(n) if s is None else int(s)
    starts = block_starts(n, s, cap)
    Q = criterion_gaps(sample, cfg, nodes)
    blocks = np.empty((starts.size, nodes.shape[0]))
    for k, b in enumerate(starts):
        try:
            blocks[k] = criterion_gaps(sample.block(int(b), s), cfg, nodes)
        except CubeRootError as exc:
            raise BlockTooShort(
                f"{cfg.estimator} failed on block starting at {int(b)} of length {s}: {exc}"
            ) from exc
    srt = np.sort(blocks, axis=0)
    q = np.array([type1_quantile(srt[:, j], 1.0 - alpha) for j in range(nodes.shape[0])])
    mask = (Q <= q).reshape(g.shape)
    return ConfidenceSet(
        g.with_mask(mask),
        q,
        Q,
        s,
        float(alpha),
        int(starts.size),
        block_Q=blocks if keep_blocks else None,
    )
