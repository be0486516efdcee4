"""Exact and approximate maximizers for piecewise-constant criteria.

Every routine follows one tie rule: among maximizing regions take the
leftmost one (smallest left end, or smallest midpoint angle on the circle)
and report its midpoint.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import AllZeroWeights, DataError, DegenerateData

__all__ = [
    "OptimizerReport",
    "dedupe_sorted",
    "scan_1d",
    "angle_sweep_s1",
    "halfplane_sweep",
    "max_depth_1d",
    "depth_batch",
    "vertex_sweep_2d",
    "slab_branch_and_bound",
    "max_weighted_window",
    "grid_refine",
]

TWO_PI = 2.0 * math.pi
DEDUPE_TOL = 1e-12


@dataclass(frozen=True)
class OptimizerReport:
    """Result of a maximization.

    Attributes
    ----------
    point : ndarray
        Reported maximizer.
    value : float
        Objective at ``point`` (recomputed there, not carried over from a
        running sum).
    n_evals : int
        Number of objective evaluations (or depth evaluations for sweeps).
    method : str
        Engine id.
    region : tuple or None
        Maximizing interval, arc ``(start, end)`` in radians, or cell.
    approximate : bool
        True for grid search.
    """

    point: np.ndarray
    value: float
    n_evals: int
    method: str
    region: tuple | None = None
    approximate: bool = False


def dedupe_sorted(b: np.ndarray, tol: float = DEDUPE_TOL) -> np.ndarray:
    """Sort and drop entries within ``tol`` of their kept predecessor."""
    b = np.sort(np.asarray(b, dtype=float).reshape(-1))
    if b.size <= 1:
        return b
    keep = np.ones(b.size, dtype=bool)
    keep[1:] = np.diff(b) > tol
    out = b[keep]
    # a run of close gaps can leave neighbours within tol; a second pass fixes it
    if out.size > 1 and np.any(np.diff(out) <= tol):
        kept = [out[0]]
        for v in out[1:]:
            if v - kept[-1] > tol:
                kept.append(v)
        out = np.array(kept)
    return out


def _evaluate(evaluator: Callable, pts: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized:
        return np.asarray(evaluator(pts), dtype=float).reshape(-1)
    return np.array([float(evaluator(p)) for p in pts])


def _first_max(vals: np.ndarray) -> int:
    return int(np.argmax(vals))


# --------------------------------------------------------------------------
# one-dimensional scan


def scan_1d(
    breakpoints: Sequence[float],
    evaluator: Callable,
    vectorized: bool = False,
) -> OptimizerReport:
    """Maximize a function that is constant between breakpoints.

    Probes every inter-breakpoint midpoint and the two outer half-lines at
    ``+-(max|b| + 1)``. Breakpoints closer than 1e-12 are merged.

    Examples
    --------
    >>> scan_1d([0.0], lambda t: float(t >= 0)).point
    array(1.)
    """
    b = dedupe_sorted(breakpoints)
    if b.size == 0:
        raise DataError("scan_1d needs at least one breakpoint")
    outer = float(np.max(np.abs(b))) + 1.0
    probes = np.concatenate([[-outer], 0.5 * (b[:-1] + b[1:]), [outer]])
    lefts = np.concatenate([[-np.inf], b])
    rights = np.concatenate([b, [np.inf]])
    vals = _evaluate(evaluator, probes, vectorized)
    k = _first_max(vals)
    return OptimizerReport(
        point=np.asarray(probes[k]),
        value=float(vals[k]),
        n_evals=int(probes.size),
        method="scan_1d",
        region=(float(lefts[k]), float(rights[k])),
    )


# --------------------------------------------------------------------------
# circle


def _arcs(angles: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arc starts, ends (possibly > 2 pi) and midpoints mod 2 pi."""
    c = dedupe_sorted(np.mod(angles, TWO_PI))
    if c.size > 1 and c[-1] - c[0] >= TWO_PI - DEDUPE_TOL:
        c = c[:-1]
    starts = c
    ends = np.concatenate([c[1:], [c[0] + TWO_PI]])
    mids = np.mod(0.5 * (starts + ends), TWO_PI)
    return starts, ends, mids


def _leftmost_on_circle(vals: np.ndarray, mids: np.ndarray, tol: float = 0.0) -> int:
    top = np.max(vals)
    cand = np.flatnonzero(vals >= top - tol)
    return int(cand[np.argmin(mids[cand])])


def angle_sweep_s1(
    angles: Sequence[float],
    evaluator: Callable,
    vectorized: bool = False,
) -> OptimizerReport:
    """Exact maximizer over the unit circle of an arc-wise constant function.

    ``evaluator`` receives unit vectors ``(cos phi, sin phi)``; with
    ``vectorized=True`` it receives an ``(k, 2)`` array. Ties go to the arc
    whose midpoint angle in ``[0, 2 pi)`` is smallest.
    """
    a = np.asarray(angles, dtype=float).reshape(-1)
    if a.size == 0:
        raise DegenerateData("no critical angles: the objective carries no direction information")
    starts, ends, mids = _arcs(a)
    pts = np.column_stack([np.cos(mids), np.sin(mids)])
    vals = _evaluate(evaluator, pts, vectorized)
    k = _leftmost_on_circle(vals, mids)
    return OptimizerReport(
        point=pts[k].copy(),
        value=float(vals[k]),
        n_evals=int(mids.size),
        method="angle_sweep_s1",
        region=(float(starts[k]), float(ends[k])),
    )


def halfplane_score(x: np.ndarray, w: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """``sum_i w_i I{x_i' theta >= 0}`` for one direction or a stack of them."""
    theta = np.asarray(theta, dtype=float)
    s = x @ theta.T
    return w @ (s >= 0.0)


def halfplane_sweep(x: np.ndarray, w: np.ndarray) -> OptimizerReport:
    """Exact ``argmax_{|theta|=1} sum_i w_i I{x_i' theta >= 0}`` for ``x`` in R^2.

    Runs in O(n log n): observation ``i`` is active on the closed arc
    ``[alpha_i - pi/2, alpha_i + pi/2]`` with ``alpha_i`` its polar angle, so
    the score on consecutive arcs differs by the weights entering and leaving
    at the shared endpoint. The winning arc's score is then recomputed
    directly at its midpoint; arcs are re-ranked by direct evaluation if
    rounding ever makes the two disagree. Rows with ``x_i = 0`` are active
    for every direction.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float).reshape(-1)
    if x.ndim != 2 or x.shape[1] != 2 or x.shape[0] != w.size:
        raise DataError("halfplane_sweep needs x of shape (n, 2) and matching weights")
    nz = np.any(x != 0.0, axis=1)
    if not np.any(nz):
        raise DegenerateData("all regressors are zero")
    const = float(np.sum(w[~nz]))
    xs, ws = x[nz], w[nz]
    alpha = np.arctan2(xs[:, 1], xs[:, 0])
    enter = np.mod(alpha - 0.5 * math.pi, TWO_PI)
    leave = np.mod(alpha + 0.5 * math.pi, TWO_PI)
    starts, ends, mids = _arcs(np.concatenate([enter, leave]))
    m = starts.size
    # net change at each critical angle, matched to its deduplicated anchor
    pos = np.concatenate([enter, leave])
    idx = np.searchsorted(starts, pos + DEDUPE_TOL, side="right") - 1
    idx = np.where(pos >= starts[0] + TWO_PI - DEDUPE_TOL, 0, np.maximum(idx, 0))
    delta = np.zeros(m)
    np.add.at(delta, idx, np.concatenate([ws, -ws]))
    wrap_mid = mids[m - 1]
    theta_wrap = np.array([math.cos(wrap_mid), math.sin(wrap_mid)])
    base = float(ws @ (xs @ theta_wrap >= 0.0))
    # arc j (start starts[j]) has score base + sum_{k<=j} delta_k, for j < m-1
    vals = np.empty(m)
    vals[: m - 1] = base + np.cumsum(delta[: m - 1])
    vals[m - 1] = base
    scale = float(np.sum(np.abs(ws))) + 1.0
    tol = 1e-12 * scale
    k = _leftmost_on_circle(vals, mids, tol)
    theta = np.array([math.cos(mids[k]), math.sin(mids[k])])
    exact = float(halfplane_score(xs, ws, theta))
    n_evals = 1
    if abs(exact - vals[k]) > tol:
        pts = np.column_stack([np.cos(mids), np.sin(mids)])
        vals = halfplane_score(xs, ws, pts)
        k = _leftmost_on_circle(vals, mids)
        theta = pts[k].copy()
        exact = float(vals[k])
        n_evals += m
    return OptimizerReport(
        point=theta,
        value=exact + const,
        n_evals=n_evals,
        method="halfplane_sweep",
        region=(float(starts[k]), float(ends[k])),
    )


# --------------------------------------------------------------------------
# interval depth


def depth_batch(
    lo: np.ndarray, hi: np.ndarray, w: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Maximum weighted depth of closed intervals, row by row.

    Parameters
    ----------
    lo, hi : ndarray, shape (k, n)
        Interval ends, ``lo <= hi``.
    w : ndarray, shape (n,), optional
        Positive weights (default one).

    Returns
    -------
    value, left, right : ndarray, shape (k,)
        Maximum depth and the leftmost maximizing region ``[left, right]``.
    """
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    k, n = lo.shape
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    pos = np.concatenate([lo, hi], axis=1)
    # stable sort keeps starts (first n columns) ahead of ends at equal
    # positions, so touching closed intervals overlap
    order = np.argsort(pos, axis=1, kind="stable")
    inc = np.concatenate([w, -w])[order]
    ps = np.take_along_axis(pos, order, axis=1)
    run = np.cumsum(inc, axis=1)
    tol = 1e-12 * (float(np.sum(w)) + 1.0)
    top = run.max(axis=1)
    first = np.argmax(run >= top[:, None] - tol, axis=1)
    rows = np.arange(k)
    left = ps[rows, first]
    right = ps[rows, np.minimum(first + 1, 2 * n - 1)]
    return top, left, right


def max_depth_1d(lo, hi, w=None) -> OptimizerReport:
    """Leftmost point covered by the largest weight of closed intervals."""
    lo = np.asarray(lo, dtype=float).reshape(1, -1)
    hi = np.asarray(hi, dtype=float).reshape(1, -1)
    if lo.size == 0:
        raise DataError("no intervals")
    v, l, r = depth_batch(lo, hi, w)
    return OptimizerReport(
        point=np.asarray(0.5 * (l[0] + r[0])),
        value=float(v[0]),
        n_evals=1,
        method="max_depth_1d",
        region=(float(l[0]), float(r[0])),
    )


# --------------------------------------------------------------------------
# slabs in the plane
#
# Observation i constrains (intercept a, slope s) to
#     lower_i - s c_i <= a <= upper_i - s c_i.
# Viewed as 2n lines  v_k(s) = p_k - s c_k  in the (s, value) plane, the
# depth as a function of s is constant between consecutive crossings of
# these lines; a crossing of lines k and l sits at s = (p_k - p_l)/(c_k - c_l).


def _crossings(p: np.ndarray, c: np.ndarray) -> np.ndarray:
    dp = p[:, None] - p[None, :]
    dc = c[:, None] - c[None, :]
    iu = np.triu_indices(p.size, k=1)
    dp, dc = dp[iu], dc[iu]
    ok = dc != 0.0
    return dp[ok] / dc[ok]


def _slope_range(p: np.ndarray, c: np.ndarray) -> tuple[float, float] | None:
    """Smallest and largest crossing slope among the lines ``p_k - s c_k``.

    The crossing of two lines is the slope of the segment joining the points
    ``(c_k, p_k)`` and ``(c_l, p_l)``; its extremes are attained by points in
    consecutive distinct-``c`` groups.
    """
    uc, inv = np.unique(c, return_inverse=True)
    if uc.size < 2:
        return None
    gmax = np.full(uc.size, -np.inf)
    gmin = np.full(uc.size, np.inf)
    np.maximum.at(gmax, inv, p)
    np.minimum.at(gmin, inv, p)
    dc = np.diff(uc)
    hi = np.maximum((gmax[1:] - gmin[:-1]) / dc, (gmin[1:] - gmax[:-1]) / dc)
    lo = np.minimum((gmax[1:] - gmin[:-1]) / dc, (gmin[1:] - gmax[:-1]) / dc)
    return float(lo.min()), float(hi.max())


def _slab_depth(lower, upper, c, w, slopes):
    s = np.asarray(slopes, dtype=float).reshape(-1, 1)
    return depth_batch(lower[None, :] - s * c[None, :], upper[None, :] - s * c[None, :], w)


def _chunked_depth(lower, upper, c, w, slopes, chunk_elems=2_000_000):
    slopes = np.asarray(slopes, dtype=float)
    step = max(1, chunk_elems // max(1, 2 * lower.size))
    parts = [_slab_depth(lower, upper, c, w, slopes[i : i + step]) for i in range(0, slopes.size, step)]
    return tuple(np.concatenate([p[j] for p in parts]) for j in range(3))


def _slab_inputs(lower, upper, slope_coef, weights):
    lower = np.asarray(lower, dtype=float).reshape(-1)
    upper = np.asarray(upper, dtype=float).reshape(-1)
    c = np.asarray(slope_coef, dtype=float).reshape(-1)
    if not (lower.size == upper.size == c.size) or lower.size == 0:
        raise DataError("slab boundaries must be nonempty and of equal length")
    if np.any(upper < lower):
        raise DataError("slab upper boundary below lower boundary")
    w = np.ones(lower.size) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if w.size != lower.size or np.any(w <= 0):
        raise DataError("slab weights must be positive")
    if np.all(c == c[0]):
        raise DegenerateData("all slope coefficients are equal; the slope is not identified")
    return lower, upper, c, w


def _cell_report(lower, upper, c, w, s_left, s_right, outer, method, n_evals):
    """Report the midpoint of slope cell ``(s_left, s_right)`` and its best intercept."""
    if np.isinf(s_left):
        s = -outer
    elif np.isinf(s_right):
        s = outer
    else:
        s = 0.5 * (s_left + s_right)
    v, l, r = _slab_depth(lower, upper, c, w, [s])
    a = 0.5 * (l[0] + r[0])
    inside = (lower - s * c <= a) & (a <= upper - s * c)
    value = float(np.sum(w[inside]))
    return OptimizerReport(
        point=np.array([a, s]),
        value=value,
        n_evals=n_evals,
        method=method,
        region=(float(s_left), float(s_right), float(l[0]), float(r[0])),
    )


def vertex_sweep_2d(lower, upper, slope_coef, weights=None) -> OptimizerReport:
    """Exact maximizer of the (weighted) number of slabs containing ``(a, s)``.

    Enumerates every pairwise crossing of the 2n boundary lines; between two
    consecutive crossings the ordering of the boundaries, hence the depth, is
    fixed. Each slope cell is probed at its midpoint (outer cells at
    ``+-(max|crossing| + 1)``) and the best intercept interval is found by a
    1-D depth scan. Returns the leftmost maximizing slope cell and the
    leftmost intercept interval within it, both reported by midpoint.
    O(n^3 log n); meant for n up to a few hundred and as an oracle.

    Notes
    -----
    Probing cells rather than vertices is exact for data in general
    position, where every nonempty intersection of slabs has interior.
    """
    lower, upper, c, w = _slab_inputs(lower, upper, slope_coef, weights)
    p = np.concatenate([lower, upper])
    cc = np.concatenate([c, c])
    cuts = dedupe_sorted(_crossings(p, cc))
    outer = float(np.max(np.abs(cuts))) + 1.0
    probes = np.concatenate([[-outer], 0.5 * (cuts[:-1] + cuts[1:]), [outer]])
    vals, _, _ = _chunked_depth(lower, upper, c, w, probes)
    tol = 1e-12 * (float(np.sum(w)) + 1.0)
    k = int(np.argmax(vals >= vals.max() - tol))
    lefts = np.concatenate([[-np.inf], cuts])
    rights = np.concatenate([cuts, [np.inf]])
    return _cell_report(lower, upper, c, w, lefts[k], rights[k], outer, "vertex_sweep_2d", probes.size)


def _order_at(p, c, s, side):
    """Line order just right (side=+1) or left (side=-1) of slope ``s``."""
    v = p - s * c
    return np.lexsort((-side * c, v))


def _involved(p, c, sl, sr):
    """Indices of lines whose order relative to some other line flips in (sl, sr)."""
    o_l = _order_at(p, c, sl, +1)
    o_r = _order_at(p, c, sr, -1)
    rank_r = np.empty(p.size, dtype=np.int64)
    rank_r[o_r] = np.arange(p.size)
    seq = rank_r[o_l]
    pre = np.maximum.accumulate(np.concatenate([[-1], seq[:-1]]))
    suf = np.minimum.accumulate(np.concatenate([seq[1:], [p.size]])[::-1])[::-1]
    bad = (pre > seq) | (suf < seq)
    return o_l[bad]


def _neighbour_events(p, c, s):
    """Nearest crossing slopes strictly left and right of ``s``."""
    out = []
    for side in (-1, +1):
        o = _order_at(p, c, s, side)
        pa, pb = p[o[:-1]], p[o[1:]]
        ca, cb = c[o[:-1]], c[o[1:]]
        ok = ca != cb
        x = (pa[ok] - pb[ok]) / (ca[ok] - cb[ok])
        if side < 0:
            x = x[x < s]
            out.append(float(x.max()) if x.size else -np.inf)
        else:
            x = x[x > s]
            out.append(float(x.min()) if x.size else np.inf)
    return out[0], out[1]


def slab_branch_and_bound(
    lower,
    upper,
    slope_coef,
    weights=None,
    resolve_cap: int = 64,
    involved_cap: int = 400,
) -> OptimizerReport:
    """Same maximizer as :func:`vertex_sweep_2d`, found by branch and bound on the slope.

    A slope interval is bounded above by the depth of the intervals' hulls
    over it and below by the depth at its midpoint. Intervals with at most
    ``resolve_cap`` crossings are resolved exactly by probing every cell.
    The leftmost optimal cell is kept by exploring ties that lie left of the
    incumbent. Cost is driven by how sharply the depth peaks, not by n^2.
    """
    lower, upper, c, w = _slab_inputs(lower, upper, slope_coef, weights)
    p = np.concatenate([lower, upper])
    cc = np.concatenate([c, c])
    rng_ = _slope_range(p, cc)
    if rng_ is None:
        raise DegenerateData("all slope coefficients are equal; the slope is not identified")
    s_min, s_max = rng_
    outer = max(abs(s_min), abs(s_max)) + 1.0
    tol = 1e-12 * (float(np.sum(w)) + 1.0)
    n_evals = 0

    # incumbent: (value, key) where key is the left end of the best cell
    v_out, _, _ = _slab_depth(lower, upper, c, w, [-outer, outer])
    n_evals += 2
    best_val, best_key, best_s = float(v_out[0]), -np.inf, -outer
    if v_out[1] > best_val + tol:
        best_val, best_key, best_s = float(v_out[1]), s_max, outer

    def better(val, key):
        return val > best_val + tol or (val >= best_val - tol and key < best_key)

    def upper_bound(sl, sr):
        lo = lower - np.maximum(sl * c, sr * c)
        hi = upper - np.minimum(sl * c, sr * c)
        return float(depth_batch(lo[None, :], hi[None, :], w)[0][0])

    heap: list[tuple[float, float, float, float]] = []
    if s_max > s_min:
        heapq.heappush(heap, (-upper_bound(s_min, s_max), s_min, s_min, s_max))
        n_evals += 1
    else:
        # a single crossing slope: two outer cells only
        pass
    while heap:
        neg_ub, _, sl, sr = heapq.heappop(heap)
        ub = -neg_ub
        if ub < best_val - tol or (ub <= best_val + tol and sl >= best_key):
            continue
        width = sr - sl
        cuts = None
        inv = _involved(p, cc, sl, sr)
        if inv.size <= involved_cap:
            x = _crossings(p[inv], cc[inv])
            x = x[(x > sl) & (x < sr)]
            if x.size <= resolve_cap or width <= 1e-12 * max(1.0, abs(sl), abs(sr)):
                cuts = dedupe_sorted(x)
        if cuts is not None:
            edges = np.concatenate([[sl], cuts, [sr]])
            probes = 0.5 * (edges[:-1] + edges[1:])
            vals, _, _ = _chunked_depth(lower, upper, c, w, probes)
            n_evals += probes.size
            top = float(vals.max())
            k = int(np.argmax(vals >= top - tol))
            if better(top, edges[k]):
                best_val, best_key, best_s = top, float(edges[k]), float(probes[k])
            continue
        mid = 0.5 * (sl + sr)
        v_mid, _, _ = _slab_depth(lower, upper, c, w, [mid])
        n_evals += 1
        if better(float(v_mid[0]), mid):
            # the key must not exceed the true left end of the cell holding mid
            left_evt, _ = _neighbour_events(p, cc, mid)
            best_val, best_key, best_s = float(v_mid[0]), left_evt, mid
        for a, b in ((sl, mid), (mid, sr)):
            if b > a:
                ub_ab = upper_bound(a, b)
                n_evals += 1
                if ub_ab >= best_val - tol:
                    heapq.heappush(heap, (-ub_ab, a, a, b))

    if best_s <= -outer:
        s_left, s_right = -np.inf, s_min
    elif best_s >= outer:
        s_left, s_right = s_max, np.inf
    else:
        s_left, s_right = _neighbour_events(p, cc, best_s)
    return _cell_report(lower, upper, c, w, s_left, s_right, outer, "slab_bnb", n_evals)


# --------------------------------------------------------------------------
# window of fixed width


def _window_ends(ys: np.ndarray, width: float) -> np.ndarray:
    """For each i, one past the last j with ``ys[j] - ys[i] <= width``."""
    e = np.searchsorted(ys, ys + width, side="right")
    n = ys.size
    idx = np.arange(n)
    # searchsorted on ys + width can be off by rounding; settle on the difference test
    for _ in range(4):
        grow = (e < n) & (ys[np.minimum(e, n - 1)] - ys <= width)
        shrink = (e > idx + 1) & (ys[np.maximum(e - 1, 0)] - ys > width)
        if not (grow.any() or shrink.any()):
            break
        e = e + grow - shrink
    return e


def max_weighted_window(y, w, nu: float) -> tuple[float, float]:
    """Maximize ``sum_t w_t I{|y_t - theta| <= nu}`` over theta.

    Only positive-weight points matter. Among windows of maximal weight the
    one with the smallest left end wins; theta is the midpoint of the
    smallest and largest covered points.

    Returns
    -------
    (theta, weight)

    Examples
    --------
    >>> max_weighted_window([0.0, 1.0, 2.0], [1, 1, 1], 1.0)
    (1.0, 3.0)
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    if y.size != w.size:
        raise DataError("y and w differ in length")
    if np.any(w < 0):
        raise DataError("weights must be nonnegative")
    pos = w > 0
    if not pos.any():
        raise AllZeroWeights("all weights are zero")
    order = np.argsort(y[pos], kind="stable")
    ys, ws = y[pos][order], w[pos][order]
    theta, weight, _ = _window_sorted(ys, ws, float(nu))
    return theta, weight


def _window_sorted(ys: np.ndarray, ws: np.ndarray, nu: float):
    e = _window_ends(ys, 2.0 * nu)
    cw = np.concatenate([[0.0], np.cumsum(ws)])
    tot = cw[e] - cw[:-1]
    tol = 1e-12 * (cw[-1] + 1.0)
    i = int(np.argmax(tot >= tot.max() - tol))
    j = int(e[i]) - 1
    return 0.5 * (ys[i] + ys[j]), float(tot[i]), (i, j)


# --------------------------------------------------------------------------
# grid search


def grid_refine(
    evaluator: Callable,
    box: Sequence[tuple[float, float]],
    levels: int = 3,
    points: int = 21,
    shrink: float = 0.2,
    vectorized: bool = False,
) -> OptimizerReport:
    """Nested grid search, flagged approximate.

    Level 0 lays ``points`` nodes per axis over ``box``; each later level
    recentres a box ``shrink`` times smaller on the incumbent. Nodes are
    scanned in C order and only a strictly better value replaces the
    incumbent.
    """
    box = np.asarray(box, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2 or not np.all(np.isfinite(box)):
        raise DataError("box must be a finite (d, 2) array")
    if levels < 1 or points < 2:
        raise DataError("need levels >= 1 and points >= 2")
    center = box.mean(axis=1)
    half = 0.5 * (box[:, 1] - box[:, 0])
    unit = np.linspace(-1.0, 1.0, points)
    best_pt, best_val, n_evals = None, -np.inf, 0
    for _ in range(levels):
        axes = [center[j] + half[j] * unit for j in range(box.shape[0])]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.reshape(-1) for m in mesh])
        vals = _evaluate(evaluator, pts, vectorized)
        n_evals += pts.shape[0]
        k = _first_max(vals)
        if vals[k] > best_val:
            best_val, best_pt = float(vals[k]), pts[k].copy()
        center = best_pt
        half = half * shrink
    return OptimizerReport(
        point=best_pt,
        value=best_val,
        n_evals=n_evals,
        method="grid_refine",
        approximate=True,
    )
