"""Shared types: samples, kernels, bandwidth rules, directions and grid sets."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import erf

from .errors import DataError, EmptySet, InvalidSpec

__all__ = [
    "TimeSeriesSample",
    "Kernel",
    "KERNEL_IDS",
    "kernel_eval",
    "BandwidthRule",
    "bandwidth_at",
    "Direction",
    "canonical_sign",
    "GridSet",
    "hausdorff",
    "rho",
]


# --------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class TimeSeriesSample:
    """Ordered observations with named real fields.

    Stored column-wise; row ``t`` is time index ``t``. Columns are read-only
    float arrays of equal length.
    """

    columns: Mapping[str, np.ndarray]
    schema: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        schema = tuple(self.schema) if self.schema else tuple(self.columns)
        if not schema:
            raise DataError("sample has no fields")
        cols: dict[str, np.ndarray] = {}
        n = None
        for name in schema:
            if name not in self.columns:
                raise DataError(f"field {name!r} missing from columns")
            arr = np.array(self.columns[name], dtype=float).reshape(-1)
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise DataError("columns have unequal lengths")
            if not np.all(np.isfinite(arr)):
                raise DataError(f"field {name!r} has non-finite values")
            arr.setflags(write=False)
            cols[name] = arr
        if n is None or n < 1:
            raise DataError("sample must have at least one row")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "schema", schema)

    @property
    def n(self) -> int:
        return int(self.columns[self.schema[0]].size)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def has(self, *names: str) -> bool:
        return all(nm in self.columns for nm in names)

    def require(self, *names: str) -> None:
        missing = [nm for nm in names if nm not in self.columns]
        if missing:
            raise DataError(f"sample lacks fields {missing}; has {list(self.schema)}")

    def block(self, start: int, length: int) -> TimeSeriesSample:
        """Rows ``start, ..., start + length - 1`` as a new sample."""
        if start < 0 or length < 1 or start + length > self.n:
            raise DataError("block out of range")
        return TimeSeriesSample(
            {k: v[start : start + length] for k, v in self.columns.items()}, self.schema
        )

    def rows(self) -> list[dict[str, float]]:
        return [
            {k: float(self.columns[k][t]) for k in self.schema} for t in range(self.n)
        ]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.schema)
            mat = np.column_stack([self.columns[k] for k in self.schema])
            for row in mat:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path) -> TimeSeriesSample:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            if len(set(header)) != len(header) or any(not h for h in header):
                raise DataError(f"{path}: malformed header")
            data: list[list[float]] = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(f"{path}:{lineno}: expected {len(header)} values")
                try:
                    data.append([float(v) for v in row])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: non-numeric value") from None
        if not data:
            raise DataError(f"{path}: no rows")
        mat = np.asarray(data, dtype=float)
        return cls({h: mat[:, j] for j, h in enumerate(header)}, tuple(header))


# --------------------------------------------------------------------------
# kernels

_TG_CUT = 4.0
_TG_MASS = float(erf(_TG_CUT / math.sqrt(2.0)))
_TG_PEAK = 1.0 / math.sqrt(2.0 * math.pi) / _TG_MASS

# base shapes on [-1, 1] (truncated gaussian on [-4, 4]) and their peak values
_BASE = {
    "epanechnikov": (1.0, 0.75),
    "triangular": (1.0, 1.0),
    "boxcar": (1.0, 0.5),
    "truncated_gaussian": (_TG_CUT, _TG_PEAK),
}
KERNEL_IDS = tuple(_BASE)


def _base_shape(kid: str, u: np.ndarray) -> np.ndarray:
    a = np.abs(u)
    if kid == "epanechnikov":
        return np.where(a <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    if kid == "triangular":
        return np.where(a <= 1.0, 1.0 - a, 0.0)
    if kid == "boxcar":
        return np.where(a <= 1.0, 0.5, 0.0)
    return np.where(a <= _TG_CUT, _TG_PEAK * np.exp(-0.5 * u * u), 0.0)


@dataclass(frozen=True)
class Kernel:
    """Symmetric bounded density with compact support.

    ``support_radius`` rescales the base shape: ``K(u) = K0(u r0 / r) r0 / r``
    where ``r0`` is the natural radius of the base shape (1, or 4 for the
    truncated gaussian). With the default radius the base shape is used as is.
    """

    id: str = "epanechnikov"
    support_radius: float | None = None

    def __post_init__(self) -> None:
        if self.id not in _BASE:
            raise InvalidSpec(f"unknown kernel {self.id!r}; choose from {KERNEL_IDS}")
        r = _BASE[self.id][0] if self.support_radius is None else self.support_radius
        if not (math.isfinite(r) and r > 0):
            raise InvalidSpec("kernel support radius must be positive and finite")
        object.__setattr__(self, "support_radius", float(r))

    @property
    def _scale(self) -> float:
        return _BASE[self.id][0] / self.support_radius

    @property
    def bound(self) -> float:
        return _BASE[self.id][1] * self._scale

    def __call__(self, u):
        s = self._scale
        out = _base_shape(self.id, np.asarray(u, dtype=float) * s) * s
        return float(out) if np.ndim(out) == 0 else out


def kernel_eval(k: Kernel, u):
    return k(u)


# --------------------------------------------------------------------------
# bandwidths


@dataclass(frozen=True)
class BandwidthRule:
    """``h_n = c n^{-a}`` with ``a`` in [0, 1); ``a = 0, c = 1`` is ``h_n = 1``."""

    c: float = 1.0
    a: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c) and self.c > 0):
            raise InvalidSpec("bandwidth constant c must be positive")
        if not (0.0 <= self.a < 1.0):
            raise InvalidSpec("bandwidth exponent a must lie in [0, 1)")

    def at(self, n: float) -> float:
        if n < 1:
            raise InvalidSpec("bandwidth needs n >= 1")
        return self.c * float(n) ** (-self.a)

    def effective_size(self, n: float, power: int = 1) -> float:
        """``n h_n^power``."""
        return float(n) * self.at(n) ** power


def bandwidth_at(r: BandwidthRule, n: int) -> float:
    return r.at(n)


# --------------------------------------------------------------------------
# directions


def canonical_sign(v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Flip ``v`` so its first coordinate with ``|v_i| > tol`` is positive."""
    v = np.asarray(v, dtype=float)
    for x in v:
        if abs(x) > tol:
            return v.copy() if x > 0 else -v
    return v.copy()


@dataclass(frozen=True)
class Direction:
    """Unit vector in R^d, d >= 2."""

    v: tuple[float, ...]

    def __post_init__(self) -> None:
        arr = np.asarray(self.v, dtype=float).reshape(-1)
        if arr.size < 2:
            raise InvalidSpec("direction needs d >= 2")
        if abs(float(np.linalg.norm(arr)) - 1.0) > 1e-12:
            raise InvalidSpec("direction must have unit norm")
        object.__setattr__(self, "v", tuple(float(x) for x in arr))

    @classmethod
    def from_vector(cls, x) -> Direction:
        x = np.asarray(x, dtype=float)
        nrm = float(np.linalg.norm(x))
        if nrm == 0.0:
            raise InvalidSpec("zero vector has no direction")
        return cls(tuple(x / nrm))

    @classmethod
    def from_angle(cls, phi: float) -> Direction:
        return cls((math.cos(phi), math.sin(phi)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.v)

    @property
    def angle(self) -> float:
        """Polar angle in [0, 2 pi) (d = 2 only)."""
        return float(np.mod(math.atan2(self.v[1], self.v[0]), 2 * math.pi))

    def canonical(self) -> Direction:
        return Direction(tuple(canonical_sign(self.array)))


# --------------------------------------------------------------------------
# grid sets


@dataclass(frozen=True)
class GridSet:
    """Boolean mask over the product of strictly increasing axis grids."""

    axes: tuple[np.ndarray, ...]
    mask: np.ndarray

    def __post_init__(self) -> None:
        axes = tuple(np.asarray(a, dtype=float).reshape(-1) for a in self.axes)
        if not axes:
            raise InvalidSpec("grid needs at least one axis")
        for a in axes:
            if a.size == 0 or np.any(np.diff(a) <= 0):
                raise InvalidSpec("grid axes must be nonempty and strictly increasing")
        mask = np.asarray(self.mask, dtype=bool)
        shape = tuple(a.size for a in axes)
        if mask.shape != shape:
            if mask.size == int(np.prod(shape)):
                mask = mask.reshape(shape)
            else:
                raise InvalidSpec(f"mask shape {mask.shape} does not match grid {shape}")
        for a in axes:
            a.setflags(write=False)
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def full(cls, axes: Sequence[Iterable[float]], value: bool = True) -> GridSet:
        ax = tuple(np.asarray(a, dtype=float) for a in axes)
        return cls(ax, np.full(tuple(a.size for a in ax), value, dtype=bool))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def d(self) -> int:
        return len(self.axes)

    def nodes(self) -> np.ndarray:
        """All grid nodes, C order, shape (prod(shape), d)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([m.reshape(-1) for m in mesh])

    def points(self) -> np.ndarray:
        """Masked nodes, shape (k, d)."""
        return self.nodes()[self.mask.reshape(-1)]

    def with_mask(self, mask: np.ndarray) -> GridSet:
        return GridSet(self.axes, mask)

    def same_grid(self, other: GridSet) -> bool:
        return self.d == other.d and all(
            a.size == b.size and np.array_equal(a, b) for a, b in zip(self.axes, other.axes)
        )

    def is_subset(self, other: GridSet) -> bool:
        return bool(np.all(~self.mask | other.mask))


def _masked(a: GridSet) -> np.ndarray:
    if not a.mask.any():
        raise EmptySet("grid set has no masked node")
    return a.points()


def rho(a: GridSet, b: GridSet) -> float:
    """Directed distance ``sup_{x in a} inf_{y in b} |x - y|`` over masked nodes."""
    pa, pb = _masked(a), _masked(b)
    if not a.same_grid(b):
        raise InvalidSpec("sets live on different grids")
    dist, _ = cKDTree(pb).query(pa, k=1)
    return float(np.max(dist))


def hausdorff(a: GridSet, b: GridSet) -> float:
    return max(rho(a, b), rho(b, a))
