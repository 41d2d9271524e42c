"""Space-time grids, discrete scalar fields and finite-difference operators.

Every field lives on a uniform tensor grid ``(t, x)``. In one dimension the
spatial axis is the symmetric interval ``[-R, R]``; for ``d > 1`` it is the
radial coordinate ``r in [0, R]`` of a radially symmetric function on the
``d``-ball, and the Laplacian is the radial one.

Stencils are second order everywhere: central differences in the interior,
one-sided second-order formulas at the first and last node of each axis, and
the symmetric limit ``d * f_rr(0)`` at the centre of the ball.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class SpaceTimeGrid:
    t_start: float
    t_end: float
    nt: int
    R: float
    nx: int
    d: int = 1

    def __post_init__(self) -> None:
        if int(self.nt) != self.nt or self.nt < 3:
            raise ValueError(f"nt must be an integer >= 3, got {self.nt}")
        if int(self.nx) != self.nx or self.nx < 5:
            raise ValueError(f"nx must be an integer >= 5, got {self.nx}")
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end must exceed t_start, got [{self.t_start}, {self.t_end}]")
        if self.t_start < 0:
            raise ValueError(f"t_start must be >= 0, got {self.t_start}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")

    @property
    def radial(self) -> bool:
        return self.d > 1

    @property
    def x_min(self) -> float:
        return 0.0 if self.radial else -self.R

    @property
    def extent(self) -> float:
        return self.R - self.x_min

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / (self.nt - 1)

    @property
    def h(self) -> float:
        return self.extent / (self.nx - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nt, self.nx)

    @property
    def size(self) -> int:
        return self.nt * self.nx

    @property
    def t(self) -> FloatArray:
        return np.linspace(self.t_start, self.t_end, self.nt)

    @property
    def x(self) -> FloatArray:
        return np.linspace(self.x_min, self.R, self.nx)

    def mesh(self) -> tuple[FloatArray, FloatArray]:
        """Return ``(T, X)`` arrays of shape ``(nt, nx)``."""
        return np.meshgrid(self.t, self.x, indexing="ij")

    def sample(self, func) -> "ScalarField":
        """Evaluate a vectorised ``func(T, X)`` on every node."""
        T, X = self.mesh()
        return ScalarField(self, np.broadcast_to(func(T, X), self.shape))

    def refine(self, factor: int = 2) -> "SpaceTimeGrid":
        return SpaceTimeGrid(
            self.t_start,
            self.t_end,
            factor * (self.nt - 1) + 1,
            self.R,
            factor * (self.nx - 1) + 1,
            self.d,
        )


def make_grid(t_start: float, t_end: float, nt: int, R: float, nx: int, d: int = 1) -> SpaceTimeGrid:
    return SpaceTimeGrid(float(t_start), float(t_end), int(nt), float(R), int(nx), int(d))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Immutable array of node values on a :class:`SpaceTimeGrid`."""

    grid: SpaceTimeGrid
    values: FloatArray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains NaN or Inf")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def with_values(self, values: FloatArray) -> "ScalarField":
        return ScalarField(self.grid, values)

    def map(self, func) -> "ScalarField":
        return ScalarField(self.grid, func(self.values))

    def __add__(self, other: "ScalarField | float") -> "ScalarField":
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other: "ScalarField | float") -> "ScalarField":
        return self.with_values(self.values - _vals(other))

    def __mul__(self, other: "ScalarField | float") -> "ScalarField":
        return self.with_values(self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return self.with_values(-self.values)

    def abs_max(self, region: "RegionMask | None" = None) -> float:
        vals = self.values if region is None else self.values[region.mask]
        return float(np.abs(vals).max()) if vals.size else 0.0

    def to_csv(self, path: str | Path) -> None:
        write_field_csv(self, path)


def _vals(other: "ScalarField | float"):
    return other.values if isinstance(other, ScalarField) else other


@dataclass(frozen=True, eq=False)
class RegionMask:
    grid: SpaceTimeGrid
    mask: NDArray[np.bool_] = field(repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.mask, dtype=bool)
        if m.shape != self.grid.shape:
            raise ValueError(f"mask shape {m.shape} does not match grid {self.grid.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)

    @classmethod
    def full(cls, grid: SpaceTimeGrid) -> "RegionMask":
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def __and__(self, other: "RegionMask") -> "RegionMask":
        return RegionMask(self.grid, self.mask & other.mask)

    def __or__(self, other: "RegionMask") -> "RegionMask":
        return RegionMask(self.grid, self.mask | other.mask)

    def __invert__(self) -> "RegionMask":
        return RegionMask(self.grid, ~self.mask)

    def issubset(self, other: "RegionMask") -> bool:
        return bool(np.all(~self.mask | other.mask))


# --- stencils -----------------------------------------------------------------


def _d1(f: FloatArray, step: float, axis: int) -> FloatArray:
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * step)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * step)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * step)
    return np.moveaxis(out, 0, axis)


def _d2(f: FloatArray, step: float, axis: int) -> FloatArray:
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / step**2
    # one-sided, exact on cubics; needs 4 nodes (nx >= 5 guaranteed)
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / step**2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / step**2
    return np.moveaxis(out, 0, axis)


def time_derivative_array(values: FloatArray, dt: float) -> FloatArray:
    return _d1(np.asarray(values, dtype=np.float64), dt, axis=0)


def gradient_array(values: FloatArray, grid: SpaceTimeGrid) -> FloatArray:
    g = _d1(np.asarray(values, dtype=np.float64), grid.h, axis=-1)
    if grid.radial:
        g[..., 0] = 0.0
    return g


def laplacian_array(values: FloatArray, grid: SpaceTimeGrid) -> FloatArray:
    """Discrete Laplacian of ``values`` (last axis is space)."""
    f = np.asarray(values, dtype=np.float64)
    h = grid.h
    lap = _d2(f, h, axis=-1)
    if not grid.radial:
        return lap
    d = grid.d
    r = grid.x
    grad = _d1(f, h, axis=-1)
    lap[..., 1:] += (d - 1) / r[1:] * grad[..., 1:]
    # centre of the ball: reflect f(-h) = f(h), Δf(0) = d f_rr(0)
    lap[..., 0] = d * 2.0 * (f[..., 1] - f[..., 0]) / h**2
    return lap


def discrete_time_derivative(f: ScalarField) -> ScalarField:
    return f.with_values(time_derivative_array(f.values, f.grid.dt))


def discrete_gradient(f: ScalarField) -> ScalarField:
    return f.with_values(gradient_array(f.values, f.grid))


def discrete_laplacian(f: ScalarField) -> ScalarField:
    return f.with_values(laplacian_array(f.values, f.grid))


def superlevel_mask(f: ScalarField, k: float, sign: Literal["ge", "le"] = "ge") -> RegionMask:
    """Nodes with ``f >= k`` (``sign="ge"``) or ``f <= -k`` (``sign="le"``)."""
    if not k > 0:
        raise ValueError(f"threshold k must be positive, got {k}")
    if sign == "ge":
        return RegionMask(f.grid, f.values >= k)
    if sign == "le":
        return RegionMask(f.grid, f.values <= -k)
    raise ValueError(f"sign must be 'ge' or 'le', got {sign!r}")


# --- CSV -----------------------------------------------------------------------


def write_field_csv(f: ScalarField, path: str | Path) -> None:
    """Write ``t,x,value`` rows, time-major, with 17 significant digits."""
    T, X = f.grid.mesh()
    table = np.column_stack([T.ravel(), X.ravel(), f.values.ravel()])
    with open(path, "w", newline="") as fh:
        fh.write("t,x,value\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")


def read_field_csv(path: str | Path, d: int = 1) -> ScalarField:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    if [h.strip() for h in header] != ["t", "x", "value"]:
        raise ValueError(f"unexpected header {header!r} in {path}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = np.unique(data[:, 0])
    x = np.unique(data[:, 1])
    grid = make_grid(t[0], t[-1], t.size, x[-1], x.size, d)
    if data.shape[0] != grid.size:
        raise ValueError(f"{path}: {data.shape[0]} rows do not form a {grid.shape} grid")
    return ScalarField(grid, data[:, 2].reshape(grid.shape))
