"""Replicated experiments: convergence rates, coverage and limit-law agreement."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.stats import linregress

from .core import GridSet
from .dgp import DgpSpec, derive_seed, generate, identified_interval, true_parameter
from .errors import CubeRootError, ExperimentAborted, InvalidSpec
from .estimators import EstimatorConfig, IntervalEstimate, PointEstimate, SetEstimate, fit
from .limitlaw import LimitLawSpec, ks_distance, simulate_argmax_law

__all__ = [
    "RateRow",
    "RateReport",
    "CoverageReport",
    "KSReport",
    "FAILURE_LIMIT",
    "estimation_error",
    "effective_regressor",
    "rate_report_from_errors",
    "rate_experiment",
    "coverage_experiment",
    "limit_comparison",
    "ci_covers",
    "set_contains_identified",
    "confset_covers",
]

FAILURE_LIMIT = 0.05
FAMILIES = ("nh", "nh_over_log", "nh2")


@dataclass(frozen=True)
class RateRow:
    n: int
    h: float
    effective_size: float
    rmse: float
    reps: int
    failures: int = 0


@dataclass(frozen=True)
class RateReport:
    """RMSE per sample size with the OLS slope of log RMSE on the log rate regressor."""

    rows: tuple[RateRow, ...]
    slope: float
    slope_se: float
    intercept: float
    family: str
    target: float = -1.0 / 3.0
    label: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "rows": [vars(r) for r in self.rows],
            "slope": self.slope,
            "slope_se": self.slope_se,
            "intercept": self.intercept,
            "family": self.family,
            "target": self.target,
            "label": self.label,
        }

    def csv_rows(self) -> list[list]:
        return [[r.n, r.h, r.effective_size, r.rmse, r.reps, r.failures] for r in self.rows]


@dataclass(frozen=True)
class CoverageReport:
    rate: float
    se: float
    reps: int
    hits: int
    failures: int = 0

    def to_dict(self) -> dict[str, Any]:
        return vars(self).copy()


@dataclass(frozen=True)
class KSReport:
    ks: float
    reps: int
    draws: int
    boundary_mass: float
    failures: int = 0
    estimator_sample: np.ndarray = field(default=None, repr=False)
    limit_sample: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "ks": self.ks,
            "reps": self.reps,
            "draws": self.draws,
            "boundary_mass": self.boundary_mass,
            "failures": self.failures,
        }


# --------------------------------------------------------------------------
# errors and regressors


def _geodesic(a: np.ndarray, b: np.ndarray) -> float:
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(math.acos(min(1.0, max(-1.0, float(a @ b)))))


def _interval_grid_distance(g: GridSet, lo: float, hi: float) -> float:
    """``rho(Theta_hat, [lo, hi])``: furthest masked node from the interval."""
    pts = g.points()
    if pts.shape[0] == 0:
        return math.inf
    x = pts[:, 0]
    return float(np.max(np.maximum(0.0, np.maximum(lo - x, x - hi))))


def estimation_error(est, spec: DgpSpec, cfg: EstimatorConfig) -> float:
    """Distance from the estimate to the truth.

    Geodesic angle for circle-valued estimates, ``|theta_hat - theta0|`` for
    the minimum-volume centre, Euclidean otherwise, and
    ``rho(Theta_hat, Theta_I)`` for set estimates.
    """
    if isinstance(est, SetEstimate):
        lo, hi = identified_interval(spec)
        return _interval_grid_distance(est.grid, lo, hi)
    theta0 = true_parameter(spec)
    if isinstance(est, IntervalEstimate):
        return abs(est.theta_hat - float(theta0[0]))
    th = np.asarray(est.theta_hat, dtype=float).reshape(-1)
    if cfg.spec.sphere:
        return _geodesic(th, theta0)
    return float(np.linalg.norm(th - theta0))


def effective_regressor(eff: float, family: str) -> float:
    """``log`` of the rate base for the family, given ``eff = n h^p``."""
    if family == "nh" or family == "nh2":
        return math.log(eff)
    if family == "nh_over_log":
        return math.log(eff / math.log(eff))
    raise InvalidSpec(f"unknown rate family {family!r}")


def rate_report_from_errors(
    ns: Sequence[int],
    hs: Sequence[float],
    effs: Sequence[float],
    errors: Sequence[Sequence[float]],
    family: str = "nh",
    failures: Sequence[int] | None = None,
    label: str = "",
) -> RateReport:
    """Aggregate per-replication errors into RMSEs and fit the log-log slope."""
    if len(set(int(n) for n in ns)) < 3:
        raise InvalidSpec("need at least 3 distinct sample sizes")
    failures = failures or [0] * len(ns)
    rows = []
    for n, h, e, errs, f in zip(ns, hs, effs, errors, failures):
        errs = np.sort(np.asarray(errs, dtype=float))
        rows.append(RateRow(int(n), float(h), float(e), float(math.sqrt(np.mean(errs**2))), int(errs.size), int(f)))
    x = np.array([effective_regressor(r.effective_size, family) for r in rows])
    rm = np.array([r.rmse for r in rows])
    if np.any(rm <= 0):
        raise ExperimentAborted("zero RMSE at some sample size; slope undefined")
    fitres = linregress(x, np.log(rm))
    return RateReport(tuple(rows), float(fitres.slope), float(fitres.stderr), float(fitres.intercept), family, label=label)


# --------------------------------------------------------------------------
# replication machinery


def _one_rep(args):
    template, cfg, n, seed = args
    spec = template.with_n_seed(n, seed)
    try:
        return estimation_error(fit(generate(spec), cfg), spec, cfg)
    except CubeRootError:
        return None


def _map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _check_failures(failed: int, total: int) -> None:
    if failed > FAILURE_LIMIT * total:
        raise ExperimentAborted(f"{failed} of {total} replications failed (limit {FAILURE_LIMIT:.0%})")


def rate_experiment(
    template: DgpSpec,
    cfg: EstimatorConfig,
    ns: Sequence[int],
    R: int,
    seed: int,
    workers: int = 1,
    label: str = "",
) -> RateReport:
    """Monte Carlo RMSE at each ``n`` and the fitted rate slope.

    Replication ``r`` at size ``n`` uses the seed derived from
    ``(seed, n, r)``, so the report depends only on the inputs.
    """
    if len(set(ns)) < 3:
        raise InvalidSpec("need at least 3 distinct sample sizes")
    if R < 50:
        raise InvalidSpec("need R >= 50 replications")
    jobs = [(template, cfg, int(n), derive_seed(seed, int(n), r)) for n in ns for r in range(R)]
    out = _map(_one_rep, jobs, workers)
    failed = sum(v is None for v in out)
    _check_failures(failed, len(out))
    errors, fails = [], []
    for i, n in enumerate(ns):
        chunk = out[i * R : (i + 1) * R]
        errors.append([v for v in chunk if v is not None])
        fails.append(sum(v is None for v in chunk))
    return rate_report_from_errors(
        ns,
        [cfg.h(n) for n in ns],
        [cfg.effective_size(n) for n in ns],
        errors,
        cfg.spec.family,
        fails,
        label,
    )


def _cover_rep(args):
    spec, covers = args
    try:
        return bool(covers(generate(spec), spec))
    except CubeRootError:
        return None


def coverage_experiment(
    template: DgpSpec,
    covers: Callable,
    R: int,
    seed: int,
    workers: int = 1,
    n: int | None = None,
) -> CoverageReport:
    """Share of replications where ``covers(sample, spec)`` holds, with its binomial SE.

    ``covers`` must be picklable when ``workers > 1``.
    """
    if R < 100:
        raise InvalidSpec("need R >= 100 replications")
    n = template.n if n is None else n
    jobs = [(template.with_n_seed(n, derive_seed(seed, n, r)), covers) for r in range(R)]
    out = _map(_cover_rep, jobs, workers)
    failed = sum(v is None for v in out)
    _check_failures(failed, R)
    ok = [v for v in out if v is not None]
    p = sum(ok) / len(ok)
    return CoverageReport(p, math.sqrt(p * (1 - p) / len(ok)), len(ok), int(sum(ok)), failed)


@dataclass(frozen=True)
class ci_covers:
    """Coverage predicate: subsampling CI contains the true parameter."""

    cfg: EstimatorConfig
    s: int | None = None
    alpha: float = 0.1

    def __call__(self, sample, spec) -> bool:
        from .inference import subsample_ci

        ci = subsample_ci(sample, self.cfg, self.s, self.alpha)
        theta0 = true_parameter(spec)
        if self.cfg.spec.sphere:
            return ci.contains([math.atan2(theta0[1], theta0[0])], sphere=True)
        if self.cfg.spec.kind == "interval":
            return ci.contains(theta0[:1])
        return ci.contains(theta0)


@dataclass(frozen=True)
class set_contains_identified:
    """Coverage predicate: every grid node inside ``Theta_I`` is in the set estimate."""

    cfg: EstimatorConfig

    def __call__(self, sample, spec) -> bool:
        est = fit(sample, self.cfg)
        lo, hi = identified_interval(spec)
        x = est.grid.nodes()[:, 0]
        inside = (x >= lo) & (x <= hi)
        return bool(np.all(est.grid.mask.reshape(-1)[inside]))


@dataclass(frozen=True)
class confset_covers:
    """Coverage predicate: ``C_n`` contains the grid node nearest to the truth."""

    cfg: EstimatorConfig
    axes: tuple
    s: int | None = None
    alpha: float = 0.1

    def __call__(self, sample, spec) -> bool:
        from .inference import criterion_confidence_set

        cs = criterion_confidence_set(sample, self.cfg, self.axes, self.s, self.alpha)
        theta0 = true_parameter(spec)
        if self.cfg.spec.sphere and len(self.axes) == 1:
            theta0 = np.array([math.atan2(theta0[1], theta0[0])])
        nodes = cs.grid.nodes()
        d = np.linalg.norm(nodes - theta0[None, : nodes.shape[1]], axis=1)
        return bool(cs.grid.mask.reshape(-1)[int(np.argmin(d))])


def _normalized_rep(args):
    template, cfg, n, seed = args
    spec = template.with_n_seed(n, seed)
    try:
        est = fit(generate(spec), cfg)
    except CubeRootError:
        return None
    theta0 = true_parameter(spec)
    if isinstance(est, IntervalEstimate):
        diff = np.array([est.theta_hat - theta0[0]])
    elif isinstance(est, PointEstimate):
        diff = np.asarray(est.theta_hat, dtype=float).reshape(-1) - theta0
    else:
        raise InvalidSpec("limit comparison needs a point or interval estimator")
    return cfg.effective_size(n) ** (1.0 / 3.0) * diff


def limit_comparison(
    template: DgpSpec,
    cfg: EstimatorConfig,
    n: int,
    R: int,
    limit: LimitLawSpec,
    M: int,
    seed: int,
    workers: int = 1,
    coordinate: int = 0,
) -> KSReport:
    """KS distance between ``(n h^p)^{1/3}(theta_hat - theta0)`` and the simulated argmax law.

    The comparison is for one coordinate (``coordinate``) of both samples.
    """
    if cfg.estimator == "lms_location":
        # batched shorth over all replications
        from .estimators import lms_location_batch

        seeds = [derive_seed(seed, n, r) for r in range(R)]
        Y = np.array([generate(template.with_n_seed(n, s))["y"] for s in seeds])
        theta0 = float(true_parameter(template.with_n_seed(n, seeds[0]))[0])
        est = cfg.effective_size(n) ** (1.0 / 3.0) * (lms_location_batch(Y) - theta0)
        failed = 0
    else:
        jobs = [(template, cfg, n, derive_seed(seed, n, r)) for r in range(R)]
        out = _map(_normalized_rep, jobs, workers)
        failed = sum(v is None for v in out)
        _check_failures(failed, R)
        est = np.array([v[coordinate] for v in out if v is not None])
    sim = simulate_argmax_law(limit, M, derive_seed(seed, 0xA16))
    lim = sim.points[:, coordinate]
    return KSReport(ks_distance(est, lim), R - failed, M, sim.boundary_mass, failed, est, lim)
