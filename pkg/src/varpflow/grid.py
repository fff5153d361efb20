"""Uniform space-time meshes on axis-aligned boxes and the shared discrete operators.

Arrays follow one layout everywhere: spatial node arrays have shape ``grid.shape``
(axis ``k`` is coordinate ``x_k``, ``indexing='ij'``), space-time arrays carry a
leading time axis ``(nt, *grid.shape)``, and vector fields put their ``N``
components on the last axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError

SPATIAL = "spatial"
SPACE_TIME = "space-time"


@dataclass(frozen=True)
class Grid:
    """Node grid on ``[0, L_1] x ... x [0, L_N]`` with ``nt`` time levels spaced ``dt``."""

    shape: tuple[int, ...]
    lengths: tuple[float, ...]
    dt: float = 1.0
    nt: int = 1

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        if len(self.shape) != len(self.lengths):
            raise DimensionError("shape and lengths must have the same length")
        if not 1 <= len(self.shape) <= 3:
            raise DimensionError(f"only N in {{1, 2, 3}} is supported, got N={len(self.shape)}")
        if min(self.shape) < 3:
            raise DimensionError("every axis needs at least 3 nodes")
        if self.nt < 1 or self.dt <= 0:
            raise DimensionError("need nt >= 1 and dt > 0")

    @classmethod
    def box(cls, nodes: Sequence[int] | int, lengths: Sequence[float] | float = 1.0,
            T: float = 0.0, dt: float = 1.0) -> "Grid":
        """Build a grid from node counts, side lengths and a horizon ``T``."""
        nodes = (nodes,) if np.isscalar(nodes) else tuple(nodes)
        if np.isscalar(lengths):
            lengths = (float(lengths),) * len(nodes)
        nt = int(round(T / dt)) + 1 if T > 0 else 1
        if T > 0 and abs((nt - 1) * dt - T) > 1e-9 * max(T, 1.0):
            raise DimensionError(f"T={T} is not a multiple of dt={dt}")
        return cls(tuple(nodes), tuple(lengths), dt, nt)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (n - 1) for L, n in zip(self.lengths, self.shape))

    @property
    def T(self) -> float:
        return self.dt * (self.nt - 1)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.nt)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def space_time_shape(self) -> tuple[int, ...]:
        return (self.nt,) + self.shape

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(0.0, L, n) for L, n in zip(self.lengths, self.shape)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for k in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[k] = 0
            mask[tuple(idx)] = True
            idx[k] = -1
            mask[tuple(idx)] = True
        return mask

    def with_time(self, T: float, dt: float) -> "Grid":
        return Grid.box(self.shape, self.lengths, T=T, dt=dt)

    def spatial(self) -> "Grid":
        return Grid(self.shape, self.lengths, self.dt, 1)

    def same_mesh(self, other: "Grid") -> bool:
        return (self.shape == other.shape
                and np.allclose(self.lengths, other.lengths, rtol=1e-14, atol=0.0)
                and self.nt == other.nt
                and abs(self.dt - other.dt) <= 1e-14 * self.dt)


@dataclass
class GridFunction:
    """Scalar node values on a :class:`Grid`, either one spatial slice or all time levels."""

    values: np.ndarray
    grid: Grid
    kind: str = SPATIAL
    solution: bool = field(default=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in (SPATIAL, SPACE_TIME):
            raise ValueError(f"unknown kind {self.kind!r}")
        expected = self.grid.shape if self.kind == SPATIAL else self.grid.space_time_shape
        if self.values.shape != expected:
            raise DimensionError(f"values have shape {self.values.shape}, grid expects {expected}")
        if self.solution:
            bnd = self.values[..., self.grid.boundary_mask()]
            if np.any(bnd != 0.0):
                raise ValueError("solution fields must vanish on boundary nodes")

    def slice(self, k: int) -> "GridFunction":
        if self.kind != SPACE_TIME:
            raise ValueError("only space-time functions have time slices")
        return GridFunction(self.values[k], self.grid.spatial(), SPATIAL)


# ---------------------------------------------------------------------------
# discrete operators (second order; central inside, one-sided on the boundary)


def _check_spatial(values: np.ndarray, spacing: Sequence[float]) -> int:
    n = len(spacing)
    if values.ndim < n:
        raise DimensionError("array has fewer axes than the spatial dimension")
    return values.ndim - n


def gradient(values: np.ndarray, spacing: Sequence[float]) -> np.ndarray:
    """Nodal gradient over the trailing ``len(spacing)`` axes, components stacked last."""
    lead = _check_spatial(values, spacing)
    comps = [np.gradient(values, h, axis=lead + k, edge_order=2) for k, h in enumerate(spacing)]
    return np.stack(comps, axis=-1)


def _second_along(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    out = np.empty_like(values)
    v = np.moveaxis(values, axis, 0)
    o = np.moveaxis(out, axis, 0)
    o[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    if v.shape[0] >= 4:
        o[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
        o[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2
    else:
        o[0] = o[1]
        o[-1] = o[-2]
    return out


def hessian(values: np.ndarray, spacing: Sequence[float]) -> np.ndarray:
    """Nodal Hessian, shape ``values.shape + (N, N)``."""
    lead = _check_spatial(values, spacing)
    n = len(spacing)
    out = np.empty(values.shape + (n, n))
    for k in range(n):
        out[..., k, k] = _second_along(values, spacing[k], lead + k)
        dk = np.gradient(values, spacing[k], axis=lead + k, edge_order=2)
        for l in range(k + 1, n):
            mixed = np.gradient(dk, spacing[l], axis=lead + l, edge_order=2)
            out[..., k, l] = mixed
            out[..., l, k] = mixed
    return out


def divergence(vec: np.ndarray, spacing: Sequence[float]) -> np.ndarray:
    """Nodal divergence of a vector field with components on the last axis."""
    n = len(spacing)
    lead = vec.ndim - 1 - n
    if vec.shape[-1] != n or lead < 0:
        raise DimensionError("vector field does not match the spatial dimension")
    return sum(np.gradient(vec[..., k], spacing[k], axis=lead + k, edge_order=2) for k in range(n))


def to_cells(values: np.ndarray, ndim: int) -> np.ndarray:
    """Average node values to cell midpoints over the trailing ``ndim`` axes.

    Trailing vector axes are not allowed; average components separately.
    """
    out = np.asarray(values, dtype=float)
    lead = out.ndim - ndim
    for k in range(ndim):
        ax = lead + k
        out = 0.5 * (np.take(out, range(0, out.shape[ax] - 1), axis=ax)
                     + np.take(out, range(1, out.shape[ax]), axis=ax))
    return out


def cell_values(values: np.ndarray, grid: Grid, kind: str) -> tuple[np.ndarray, float]:
    """Midpoint samples and the common quadrature weight for ``kind``.

    Space-time integrals use the implicit-Euler levels ``1..nt-1`` with weight ``dt``.
    """
    values = np.asarray(values, dtype=float)
    if kind == SPATIAL:
        return to_cells(values, grid.dim), grid.cell_volume
    if grid.nt < 2:
        raise DimensionError("space-time quadrature needs at least two time levels")
    return to_cells(values[1:], grid.dim), grid.cell_volume * grid.dt


def integrate(values: np.ndarray, grid: Grid, kind: str = SPATIAL) -> float:
    """Midpoint-rule integral of a nodal integrand."""
    cells, w = cell_values(values, grid, kind)
    return float(w * cells.sum())


def node_weights(grid: Grid, kind: str = SPATIAL) -> np.ndarray:
    """Per-node weights with ``sum(w * v) == integrate(v, grid, kind)`` for any nodal ``v``."""
    w = np.ones(())
    for n, h in zip(grid.shape, grid.spacing):
        w1 = np.full(n, h)
        w1[[0, -1]] *= 0.5
        w = np.multiply.outer(w, w1)
    if kind == SPATIAL:
        return w
    if grid.nt < 2:
        raise DimensionError("space-time quadrature needs at least two time levels")
    wt = np.full(grid.nt, grid.dt)
    wt[0] = 0.0
    return np.multiply.outer(wt, w)
