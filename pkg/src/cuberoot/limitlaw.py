"""Simulation of ``argmax_s Z(s)`` for Gaussian ``Z`` with drift ``s'Vs/2`` and kernel ``H``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from .dgp import derive_seed, make_rng
from .errors import FactorizationFailure, GridTooLarge, InvalidDensity, InvalidSpec

__all__ = [
    "LimitLawSpec",
    "ArgmaxSample",
    "abs_projection",
    "plugin_draws",
    "abs_weighted_second_moment",
    "build_kernel_lms",
    "build_kernel_hough",
    "lms_location_limit",
    "density_derivatives",
    "normal_pdf",
    "simulate_argmax_law",
    "ks_distance",
    "covariance_on_grid",
    "factorize",
    "MAX_NODES",
]

MAX_NODES = 100_000
N_DRAWS = 1_000_000
EXPECTATION_SEED = 20240607

Kernel2 = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LimitLawSpec:
    """Gaussian process on ``[-K, K]^d`` with drift ``s'Vs/2`` and covariance ``H``.

    ``H(s1, s2)`` takes arrays of shape ``(a, d)`` and ``(b, d)`` and returns
    the ``(a, b)`` covariance matrix.
    """

    d: int
    V: np.ndarray
    H: Kernel2
    K: float = 3.0
    m: int | None = None

    def __post_init__(self) -> None:
        V = np.atleast_2d(np.asarray(self.V, dtype=float))
        if V.shape != (self.d, self.d):
            raise InvalidSpec(f"V must be {self.d}x{self.d}")
        if np.max(np.abs(V - V.T)) > 1e-12:
            raise InvalidSpec("V must be symmetric")
        if np.max(np.linalg.eigvalsh(0.5 * (V + V.T))) >= 0:
            raise InvalidSpec("V must be negative definite")
        if not (self.K > 0):
            raise InvalidSpec("grid radius K must be positive")
        m = self.m if self.m is not None else (201 if self.d == 1 else 41)
        if m < 3:
            raise InvalidSpec("need at least 3 grid points per axis")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "m", int(m))
        probe = np.random.default_rng(0).uniform(-self.K, self.K, size=(8, self.d))
        hp = self.H(probe, probe)
        if np.min(np.diag(hp)) < -1e-12 or np.max(np.abs(hp - hp.T)) > 1e-12 * (1 + np.max(np.abs(hp))):
            raise InvalidSpec("H must be symmetric with H(s, s) >= 0")

    def with_grid(self, K: float | None = None, m: int | None = None) -> LimitLawSpec:
        return LimitLawSpec(self.d, self.V, self.H, self.K if K is None else K, self.m if m is None else m)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(-self.K, self.K, self.m) for _ in range(self.d)]

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.column_stack([g.reshape(-1) for g in mesh])


# --------------------------------------------------------------------------
# kernel builders


def abs_projection(x_draws: np.ndarray, n_angles: int = 4096) -> Callable[[np.ndarray], np.ndarray]:
    """Plug-in ``u -> P|x'u|`` from draws of ``x``.

    In one dimension this is ``|u| P|x|``. In two dimensions
    ``P|x'u| = |u| g(angle of u)`` with ``g`` tabulated on ``[0, pi)`` and
    interpolated linearly (``g`` has period pi).
    """
    x = np.asarray(x_draws, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    d = x.shape[1]
    if d == 1:
        m1 = float(np.mean(np.abs(x[:, 0])))
        return lambda u: m1 * np.abs(np.asarray(u, dtype=float).reshape(-1, 1)[:, 0])
    if d != 2:
        raise InvalidSpec("abs_projection supports d = 1 or 2")
    phi = np.linspace(0.0, math.pi, n_angles, endpoint=False)
    g = np.empty(n_angles)
    for k0 in range(0, n_angles, 256):
        dirs = np.column_stack([np.cos(phi[k0 : k0 + 256]), np.sin(phi[k0 : k0 + 256])])
        g[k0 : k0 + 256] = np.mean(np.abs(x @ dirs.T), axis=0)
    step = math.pi / n_angles

    def f(u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        r = np.hypot(u[:, 0], u[:, 1])
        a = np.mod(np.arctan2(u[:, 1], u[:, 0]), math.pi) / step
        i0 = np.floor(a).astype(np.int64) % n_angles
        t = a - np.floor(a)
        return r * ((1.0 - t) * g[i0] + t * g[(i0 + 1) % n_angles])

    return f


def plugin_draws(sampler: Callable[[np.random.Generator, int], np.ndarray], n: int = N_DRAWS) -> np.ndarray:
    """``n`` draws of ``x`` from ``sampler(rng, n)`` with the fixed expectation seed."""
    return np.asarray(sampler(make_rng(EXPECTATION_SEED), n), dtype=float)


def abs_weighted_second_moment(x_draws: np.ndarray) -> np.ndarray:
    """Plug-in ``P(|x| xx')`` with ``|x|`` the Euclidean norm."""
    x = np.asarray(x_draws, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    r = np.linalg.norm(x, axis=1)
    return (x * r[:, None]).T @ x / x.shape[0]


def _kernel_from_L(scale: float, proj: Callable[[np.ndarray], np.ndarray], d: int) -> Kernel2:
    """``H(s1, s2) = (L(s1, 0) + L(0, s2) - L(s1, s2)) / 2`` with ``L(a, b) = scale P|x'(a - b)|``."""

    def H(s1, s2):
        a = np.asarray(s1, dtype=float).reshape(-1, d)
        b = np.asarray(s2, dtype=float).reshape(-1, d)
        la = scale * proj(a)
        lb = scale * proj(b)
        diff = (a[:, None, :] - b[None, :, :]).reshape(-1, d)
        lab = scale * proj(diff).reshape(a.shape[0], b.shape[0])
        return 0.5 * (la[:, None] + lb[None, :] - lab)

    return H


def build_kernel_lms(
    gamma_nu: float,
    gamma_dot_nu: float,
    Pxx: np.ndarray,
    proj: Callable[[np.ndarray], np.ndarray],
    K: float = 3.0,
    m: int | None = None,
) -> LimitLawSpec:
    """Least median of squares limit: ``L = 2 gamma(nu0) P|x'(s1 - s2)|``, ``V = 2 gamma'(nu0) Pxx'``.

    ``gamma`` is the error density and ``nu0`` the median of ``|u|``.
    """
    if not (gamma_nu > 0 and math.isfinite(gamma_nu)):
        raise InvalidDensity("error density at nu0 must be positive")
    if not (gamma_dot_nu < 0):
        raise InvalidDensity("error density must be decreasing at nu0")
    Pxx = np.atleast_2d(np.asarray(Pxx, dtype=float))
    d = Pxx.shape[0]
    return LimitLawSpec(d, 2.0 * gamma_dot_nu * Pxx, _kernel_from_L(2.0 * gamma_nu, proj, d), K, m)


def build_kernel_hough(
    gamma0: float,
    gamma_ddot0: float,
    P_absx_xx: np.ndarray,
    proj: Callable[[np.ndarray], np.ndarray],
    K: float = 3.0,
    m: int | None = None,
) -> LimitLawSpec:
    """Hough transform limit: ``L = 2 gamma(0) P|x'(s1 - s2)|``, ``V = 2 gamma''(0) P(|x| xx')``.

    The factor 2 in ``V`` comes from expanding
    ``h^{-1} P{|u - x'theta| <= h|x|} = 2 P[|x| gamma(x'theta)] + o(1)`` to
    second order, which gives drift ``gamma''(0) s'P(|x|xx')s = s'Vs/2``.
    """
    if not (gamma0 > 0 and math.isfinite(gamma0)):
        raise InvalidDensity("error density at 0 must be positive")
    if not (gamma_ddot0 < 0):
        raise InvalidDensity("error density must have a strict local maximum at 0")
    M = np.atleast_2d(np.asarray(P_absx_xx, dtype=float))
    d = M.shape[0]
    return LimitLawSpec(d, 2.0 * gamma_ddot0 * M, _kernel_from_L(2.0 * gamma0, proj, d), K, m)


def normal_pdf(t, scale: float = 1.0, trunc: float | None = None):
    """N(0, scale^2) density, optionally truncated to ``[-trunc*scale, trunc*scale]``."""
    t = np.asarray(t, dtype=float) / scale
    out = np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi) / scale
    if trunc is not None:
        out = np.where(np.abs(t) <= trunc, out / (1.0 - 2.0 * ndtr(-trunc)), 0.0)
    return out


def density_derivatives(pdf: Callable, t: float, step: float = 1e-3) -> tuple[float, float, float]:
    """``(gamma(t), gamma'(t), gamma''(t))`` by central differences."""
    f0 = float(pdf(t))
    fp, fm = float(pdf(t + step)), float(pdf(t - step))
    return f0, (fp - fm) / (2 * step), (fp - 2 * f0 + fm) / (step * step)


def lms_location_limit(scale: float = 1.0, K: float = 3.0, m: int = 401) -> LimitLawSpec:
    """Limit of ``n^{1/3}(shorth midpoint - theta0)`` for N(0, scale^2) errors.

    ``nu0 = scale * Phi^{-1}(3/4)``; with ``x = 1``, ``P|x'u| = |u|`` and
    ``Pxx' = 1``.
    """
    nu0 = scale * float(ndtri(0.75))
    g, gd, _ = density_derivatives(lambda t: normal_pdf(t, scale), nu0, 1e-4 * scale)
    proj = lambda u: np.abs(np.asarray(u, dtype=float).reshape(-1, 1)[:, 0])
    return build_kernel_lms(g, gd, np.eye(1), proj, K, m)


# --------------------------------------------------------------------------
# simulation


def covariance_on_grid(spec: LimitLawSpec) -> tuple[np.ndarray, np.ndarray]:
    nodes = spec.nodes()
    if nodes.shape[0] > MAX_NODES:
        raise GridTooLarge(f"{nodes.shape[0]} grid nodes exceed the limit of {MAX_NODES}")
    C = spec.H(nodes, nodes)
    return nodes, 0.5 * (C + C.T)


def factorize(C: np.ndarray) -> tuple[np.ndarray | None, float]:
    """Cholesky factor of ``C + j * mean(diag C) * I``.

    ``j`` starts at 1e-10 and grows tenfold up to 1e-6. A zero matrix has no
    factor (``None``): the process is then deterministic.
    """
    scale = float(np.mean(np.diag(C)))
    if not np.any(C):
        return None, 0.0
    if scale <= 0:
        scale = float(np.max(np.abs(C)))
    eye = np.eye(C.shape[0])
    j = 1e-10
    while j <= 1e-6 * (1 + 1e-9):
        try:
            return np.linalg.cholesky(C + j * scale * eye), j * scale
        except np.linalg.LinAlgError:
            j *= 10.0
    raise FactorizationFailure("covariance not positive definite even with jitter 1e-6")


@dataclass(frozen=True)
class ArgmaxSample:
    """Argmax grid nodes of ``M`` simulated paths."""

    points: np.ndarray
    boundary_mass: float
    jitter: float
    K: float
    m: int
    seed: int = 0
    nodes_index: np.ndarray = field(default=None, repr=False)

    def quantiles(self, probs=(0.05, 0.25, 0.5, 0.75, 0.95)) -> np.ndarray:
        return np.quantile(self.points, probs, axis=0)


def simulate_argmax_law(spec: LimitLawSpec, M: int, seed: int, batch: int = 500) -> ArgmaxSample:
    """Draw ``M`` paths of ``Z`` on the grid and record each path's argmax node.

    Ties go to the first node in C order, i.e. the lexicographically
    smallest. Batches use seeds derived from ``(seed, batch index)``.
    """
    if M < 1:
        raise InvalidSpec("need at least one draw")
    nodes, C = covariance_on_grid(spec)
    L, jitter = factorize(C)
    drift = 0.5 * np.einsum("ij,jk,ik->i", nodes, spec.V, nodes)
    idx = np.empty(M, dtype=np.int64)
    for b, start in enumerate(range(0, M, batch)):
        size = min(batch, M - start)
        if L is None:
            Z = np.repeat(drift[:, None], size, axis=1)
        else:
            xi = make_rng(derive_seed(seed, b)).standard_normal((nodes.shape[0], size))
            Z = drift[:, None] + L @ xi
        idx[start : start + size] = np.argmax(Z, axis=0)
    pts = nodes[idx]
    on_edge = np.any(np.abs(pts) >= spec.K * (1 - 1e-12), axis=1)
    return ArgmaxSample(pts, float(np.mean(on_edge)), jitter, spec.K, spec.m, seed, idx)


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic over the pooled jump points."""
    a = np.sort(np.asarray(a, dtype=float).reshape(-1))
    b = np.sort(np.asarray(b, dtype=float).reshape(-1))
    if a.size == 0 or b.size == 0:
        raise InvalidSpec("both samples must be nonempty")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))
