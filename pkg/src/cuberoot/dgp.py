"""Seeded generators for the example models.

All randomness flows from a Philox counter-based generator (numpy's
``Philox``, 4x64 rounds=10) keyed by a ``SeedSequence``. Serial dependence
comes from stationary Gaussian AR(1) latent processes, which are
exponentially beta-mixing; non-Gaussian marginals are obtained by monotone
transforms of the standardized latent series, which preserves the mixing
rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.signal import lfilter
from scipy.special import log_ndtr, ndtr, ndtri

from .core import TimeSeriesSample
from .errors import InvalidSpec

__all__ = [
    "MODELS",
    "DgpSpec",
    "make_rng",
    "derive_seed",
    "generate",
    "true_parameter",
    "identified_interval",
    "BURN_IN",
]

BURN_IN = 1000
_U64 = 2**64

MODELS = (
    "ar1",
    "max_score",
    "panel_hk",
    "rc_binary",
    "interval_binary",
    "monotone_density",
    "hough_line",
    "minvol_pred",
    "lms",
)

_DEFAULTS: dict[str, dict[str, Any]] = {
    "ar1": {"rho": 0.5, "sigma": 1.0},
    "max_score": {"rho": 0.5, "angle": math.pi / 4, "u_scale": 1.0},
    "panel_hk": {"rho": 0.5, "beta": 1.0, "gamma": 0.5, "alpha_scale": 1.0},
    "rc_binary": {"rho": 0.5, "angle": math.pi / 4, "slope": 0.5, "c": 0.5, "u_scale": 1.0},
    "interval_binary": {
        "rho": 0.5,
        "theta0": 1.0,
        "delta": 0.5,
        "x_range": (1.0, 2.0),
        "w_range": (-3.0, 0.0),
        "u_scale": 0.25,
    },
    "monotone_density": {"rho": 0.5, "rate": 1.0},
    "hough_line": {"rho": 0.5, "beta0": (0.0, 1.0), "trunc": 5.0},
    "minvol_pred": {"rho": 0.5, "sigma": 1.0, "c": 0.5, "alpha": 0.5},
    "lms": {"rho": 0.5, "mode": "location", "theta0": 0.0, "scale": 1.0},
}


def make_rng(seed: int | tuple[int, ...] | list[int]) -> np.random.Generator:
    """Philox generator keyed by a seed or a tuple of seed words."""
    words = [int(seed)] if np.isscalar(seed) else [int(s) for s in seed]
    for w in words:
        if w < 0 or w >= _U64:
            raise InvalidSpec("seeds must be 64-bit unsigned integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for ``(master, *keys)``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class DgpSpec:
    """Model id, sample size, seed and model parameters (defaults filled in)."""

    model: str
    n: int
    seed: int
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise InvalidSpec(f"unknown model {self.model!r}; choose from {MODELS}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidSpec("n must be a positive integer")
        if int(self.seed) != self.seed or not (0 <= self.seed < _U64):
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        unknown = set(self.params) - set(_DEFAULTS[self.model])
        if unknown:
            raise InvalidSpec(f"unknown parameters for {self.model}: {sorted(unknown)}")
        merged = dict(_DEFAULTS[self.model])
        merged.update(self.params)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "params", merged)
        _validate(self.model, merged)

    def with_n_seed(self, n: int, seed: int) -> DgpSpec:
        return DgpSpec(self.model, n, seed, dict(self.params))

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "n": self.n,
            "seed": self.seed,
            "params": {k: _jsonable(v) for k, v in sorted(self.params.items())},
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> DgpSpec:
        try:
            return cls(d["model"], d.get("n", 1), d.get("seed", 0), dict(d.get("params", {})))
        except KeyError as exc:
            raise InvalidSpec(f"dgp spec missing {exc}") from None


def _jsonable(v):
    if isinstance(v, (tuple, list, np.ndarray)):
        return [float(x) for x in v]
    return v


def _validate(model: str, p: Mapping[str, Any]) -> None:
    if not (-1.0 < float(p["rho"]) < 1.0):
        raise InvalidSpec("AR coefficient rho must lie in (-1, 1)")
    for key in ("sigma", "u_scale", "scale", "rate", "alpha_scale", "trunc"):
        if key in p and not float(p[key]) > 0:
            raise InvalidSpec(f"{key} must be positive")
    if model == "interval_binary":
        xl, xu = p["x_range"]
        wl, wu = p["w_range"]
        if not (0 < xl < xu) or not (wl < wu) or p["delta"] < 0:
            raise InvalidSpec("interval_binary needs 0 < x_lo < x_hi, w_lo < w_hi, delta >= 0")
        if p["theta0"] <= 0:
            raise InvalidSpec("interval_binary needs theta0 > 0")
    if model == "minvol_pred" and not (0 < p["alpha"] < 1):
        raise InvalidSpec("alpha must lie in (0, 1)")
    if model == "lms":
        if p["mode"] not in ("location", "regression"):
            raise InvalidSpec("lms mode must be 'location' or 'regression'")
        if p["mode"] == "regression" and np.size(p["theta0"]) != 2:
            raise InvalidSpec("lms regression needs theta0 = (intercept, slope)")
    if model == "hough_line" and np.size(p["beta0"]) != 2:
        raise InvalidSpec("hough_line needs beta0 = (intercept, slope)")


# --------------------------------------------------------------------------
# latent processes


def _ar1_path(rng: np.random.Generator, n: int, rho: float, sigma: float) -> np.ndarray:
    """``x_t = rho x_{t-1} + sigma e_t`` started from the stationary law, burn-in dropped."""
    v = sigma * rng.standard_normal(BURN_IN + n)
    v[0] /= math.sqrt(1.0 - rho * rho)
    x = lfilter([1.0], [1.0, -rho], v)
    return x[BURN_IN:]


def _std_ar1(rng: np.random.Generator, n: int, rho: float) -> np.ndarray:
    """Stationary AR(1) with N(0, 1) marginal."""
    return _ar1_path(rng, n, rho, math.sqrt(1.0 - rho * rho))


def _logistic(rng: np.random.Generator, size: int) -> np.ndarray:
    p = rng.random(size)
    return np.log(p) - np.log1p(-p)


# --------------------------------------------------------------------------
# models


def _gen_ar1(rng, n, p):
    return {"x": _ar1_path(rng, n, float(p["rho"]), float(p["sigma"]))}


def _sign_col(y: np.ndarray) -> np.ndarray:
    return np.where(y >= 0.0, 1.0, -1.0)


def _gen_max_score(rng, n, p):
    rho = float(p["rho"])
    x1, x2 = _std_ar1(rng, n, rho), _std_ar1(rng, n, rho)
    u = float(p["u_scale"]) * _std_ar1(rng, n, rho)
    a = float(p["angle"])
    y = math.cos(a) * x1 + math.sin(a) * x2 + u
    return {"sign_y": _sign_col(y), "x1": x1, "x2": x2}


def _rc_angle(p, w):
    return float(p["angle"]) + float(p["slope"]) * (w - float(p["c"]))


def _gen_rc_binary(rng, n, p):
    rho = float(p["rho"])
    x1, x2 = _std_ar1(rng, n, rho), _std_ar1(rng, n, rho)
    w = ndtr(_std_ar1(rng, n, rho))
    u = float(p["u_scale"]) * _std_ar1(rng, n, rho)
    a = _rc_angle(p, w)
    y = np.cos(a) * x1 + np.sin(a) * x2 + u
    return {"sign_y": _sign_col(y), "x1": x1, "x2": x2, "w": w}


def _gen_panel_hk(rng, n, p):
    rho = float(p["rho"])
    beta, gamma = float(p["beta"]), float(p["gamma"])
    x = np.column_stack([_std_ar1(rng, n, rho) for _ in range(3)])
    alpha = float(p["alpha_scale"]) * _std_ar1(rng, n, rho)
    eps = _logistic(rng, 4 * n).reshape(n, 4)
    y = np.empty((n, 4))
    y[:, 0] = (x.mean(axis=1) + alpha + eps[:, 0] >= 0).astype(float)
    for t in range(1, 4):
        y[:, t] = (beta * x[:, t - 1] + gamma * y[:, t - 1] + alpha + eps[:, t] >= 0).astype(float)
    out = {f"y{t}": y[:, t] for t in range(4)}
    out.update({f"x{t}": x[:, t - 1] for t in range(1, 4)})
    return out


def _gen_interval_binary(rng, n, p):
    rho = float(p["rho"])
    xl, xu = (float(v) for v in p["x_range"])
    wl, wu = (float(v) for v in p["w_range"])
    delta = float(p["delta"])
    x = xl + (xu - xl) * ndtr(_std_ar1(rng, n, rho))
    w = wl + (wu - wl) * ndtr(_std_ar1(rng, n, rho))
    u = float(p["u_scale"]) * _std_ar1(rng, n, rho)
    y = (float(p["theta0"]) * x + w + u >= 0).astype(float)
    if delta == 0.0:
        lo = hi = w
    else:
        lo = np.floor(w / delta) * delta
        lo = np.minimum(lo, w)
        hi = lo + delta
    return {"y": y, "x": x, "w_l": lo, "w_u": hi}


def _gen_monotone_density(rng, n, p):
    z = _std_ar1(rng, n, float(p["rho"]))
    # Exp(rate) via the upper-tail log cdf, accurate far into the tail
    return {"z": -log_ndtr(-z) / float(p["rate"])}


def _trunc_normal(z: np.ndarray, c: float) -> np.ndarray:
    lo = ndtr(-c)
    return ndtri(lo + ndtr(z) * (1.0 - 2.0 * lo))


def _gen_hough_line(rng, n, p):
    rho = float(p["rho"])
    x = _std_ar1(rng, n, rho)
    u = _trunc_normal(_std_ar1(rng, n, rho), float(p["trunc"]))
    b0, b1 = (float(v) for v in p["beta0"])
    return {"y": b0 + b1 * x + u, "x": x}


def _gen_minvol_pred(rng, n, p):
    y = _ar1_path(rng, n + 1, float(p["rho"]), float(p["sigma"]))
    return {"y": y[1:], "x": y[:-1]}


def _gen_lms(rng, n, p):
    rho = float(p["rho"])
    u = float(p["scale"]) * _std_ar1(rng, n, rho)
    if p["mode"] == "location":
        return {"y": float(p["theta0"]) + u}
    x = _std_ar1(rng, n, rho)
    b0, b1 = (float(v) for v in p["theta0"])
    return {"y": b0 + b1 * x + u, "x": x}


_GEN = {
    "ar1": _gen_ar1,
    "max_score": _gen_max_score,
    "panel_hk": _gen_panel_hk,
    "rc_binary": _gen_rc_binary,
    "interval_binary": _gen_interval_binary,
    "monotone_density": _gen_monotone_density,
    "hough_line": _gen_hough_line,
    "minvol_pred": _gen_minvol_pred,
    "lms": _gen_lms,
}


def generate(spec: DgpSpec) -> TimeSeriesSample:
    """Draw a sample; identical specs give bit-identical output."""
    rng = make_rng(spec.seed)
    cols = _GEN[spec.model](rng, spec.n, spec.params)
    return TimeSeriesSample(cols)


# --------------------------------------------------------------------------
# population quantities


def true_parameter(spec: DgpSpec) -> np.ndarray:
    """Pseudo-true parameter of the model (for interval_binary: theta0)."""
    p = spec.params
    m = spec.model
    if m == "max_score":
        a = float(p["angle"])
        return np.array([math.cos(a), math.sin(a)])
    if m == "rc_binary":
        a = _rc_angle(p, float(p["c"]))
        return np.array([math.cos(a), math.sin(a)])
    if m == "panel_hk":
        v = np.array([float(p["beta"]), float(p["gamma"])])
        return v / np.linalg.norm(v)
    if m == "interval_binary":
        return np.array([float(p["theta0"])])
    if m == "hough_line":
        return np.array([float(v) for v in p["beta0"]])
    if m == "minvol_pred":
        return np.array([float(p["rho"]) * float(p["c"])])
    if m == "lms":
        return np.atleast_1d(np.asarray(p["theta0"], dtype=float))
    if m == "ar1":
        return np.array([0.0])
    raise InvalidSpec(f"model {m!r} has no finite-dimensional target")


def minvol_halfwidth(spec: DgpSpec) -> float:
    """Population half-width of the minimum volume region for ``minvol_pred``."""
    p = spec.params
    return float(p["sigma"]) * float(ndtri(0.5 * (1.0 + float(p["alpha"]))))


def identified_interval(spec: DgpSpec) -> tuple[float, float]:
    """Closed identified interval for the scalar ``interval_binary`` model.

    With ``x`` supported on ``[x_lo, x_hi]`` independently of ``w`` and
    ``w_l = floor(w / delta) delta``, the identified set is ``[L, U]`` with
    ``L = sup{-w_u/x : x theta0 + w_l > 0}`` and
    ``U = inf{-w_l/x : x theta0 + w_u <= 0}``, both ranging over the support
    cells. On each cell the maps are monotone in ``x``, so the extremes sit at
    the ends of the feasible ``x`` interval.
    """
    if spec.model != "interval_binary":
        raise InvalidSpec("identified_interval needs the interval_binary model")
    p = spec.params
    th = float(p["theta0"])
    delta = float(p["delta"])
    if delta == 0.0:
        return th, th
    xl, xu = (float(v) for v in p["x_range"])
    wl, wu = (float(v) for v in p["w_range"])
    lo_cand = [-math.inf]
    hi_cand = [math.inf]
    k0 = math.floor(wl / delta)
    k1 = math.ceil(wu / delta)
    for k in range(k0, k1):
        a = k * delta
        cell_lo, cell_hi = max(a, wl), min(a + delta, wu)
        if cell_hi > cell_lo:
            w_l, w_u = a, a + delta
            # x theta0 + w_l > 0  <=>  x > -w_l / theta0
            s, e = max(xl, -w_l / th), xu
            if e > s:
                lo_cand.extend([-w_u / s, -w_u / e])
            # x theta0 + w_u <= 0  <=>  x <= -w_u / theta0
            s, e = xl, min(xu, -w_u / th)
            if e > s:
                hi_cand.extend([-w_l / s, -w_l / e])
    return max(lo_cand), min(hi_cand)
