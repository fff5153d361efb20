"""Variable exponents p, q, s and source coefficients a, c sampled on the space-time grid."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.ndimage import convolve1d

from .errors import ConfigError, DimensionError, ParameterError
from .expressions import evaluate_on_grid
from .grid import Grid


def p_lower_bound(dim: int) -> float:
    """Strict lower bound ``2(N+1)/(N+2)`` for the exponent p."""
    return 2.0 * (dim + 1) / (dim + 2)


@dataclass(frozen=True)
class StructuralParams:
    p_min: float
    p_max: float
    q_min: float
    q_max: float
    s_min: float
    s_max: float
    mu: float
    a_sup: float
    c_sup: tuple[float, ...]
    lipschitz_p: float
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "c_sup", tuple(float(c) for c in self.c_sup))

    @property
    def q_ceiling(self) -> float:
        """Strict upper bound for ``q_max``."""
        n = self.dim
        return min(self.p_min, 1.0 + self.p_min * (n + 2) / (2.0 * n)) - 2.0 * self.mu

    @property
    def s_ceiling(self) -> float:
        return self.p_min - 2.0 * self.mu


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    location: tuple[int, ...] | None = None

    def __str__(self):
        loc = "" if self.location is None else f" at node {self.location}"
        return f"[{self.code}] {self.message}{loc}"


@dataclass
class ExponentField:
    """Node samples of the exponents and coefficients; arrays have shape ``(nt, *grid.shape)``.

    ``c`` carries the N components on its last axis.
    """

    grid: Grid
    p: np.ndarray
    q: np.ndarray
    s: np.ndarray
    a: np.ndarray
    c: np.ndarray = field(default=None)

    def __post_init__(self):
        st = self.grid.space_time_shape
        for name in ("p", "q", "s", "a"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), st).copy()
            setattr(self, name, arr)
        c = np.zeros(st + (self.grid.dim,)) if self.c is None else self.c
        c = np.asarray(c, dtype=float)
        if c.shape == (self.grid.dim,):
            c = np.broadcast_to(c, st + (self.grid.dim,))
        if c.shape != st + (self.grid.dim,):
            raise DimensionError(f"c has shape {c.shape}, expected {st + (self.grid.dim,)}")
        self.c = np.array(c)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @classmethod
    def constant(cls, grid: Grid, p: float, q: float = 2.0, s: float = 2.0, a: float = 0.0,
                 c: Sequence[float] | None = None) -> "ExponentField":
        cvec = np.zeros(grid.dim) if c is None else np.asarray(c, dtype=float)
        return cls(grid, p, q, s, a, cvec)

    @classmethod
    def from_expressions(cls, grid: Grid, p: str, q: str = "2", s: str = "2", a: str = "0",
                         c: Sequence[str] | None = None) -> "ExponentField":
        c = list(c) if c is not None else ["0"] * grid.dim
        if len(c) != grid.dim:
            raise DimensionError(f"need {grid.dim} c-components, got {len(c)}")
        cvals = np.stack([evaluate_on_grid(e, grid) for e in c], axis=-1)
        return cls(grid, *(evaluate_on_grid(e, grid) for e in (p, q, s, a)), cvals)

    @classmethod
    def from_csv(cls, path: str | Path, grid: Grid) -> "ExponentField":
        """Read node-indexed columns ``ix, iy, it, p, q, s, a, c1..cN``."""
        st = grid.space_time_shape
        arrays = {k: np.full(st, np.nan) for k in ("p", "q", "s", "a")}
        c = np.full(st + (grid.dim,), np.nan)
        index_cols = ["ix", "iy", "iz"][: grid.dim]
        with open(path, newline="", encoding="utf-8") as fh:
            rows = csv.DictReader(line for line in fh if not line.startswith("#"))
            for row in rows:
                try:
                    idx = (int(row.get("it", 0)),) + tuple(int(row[col]) for col in index_cols)
                    for k in arrays:
                        arrays[k][idx] = float(row[k])
                    for j in range(grid.dim):
                        c[idx + (j,)] = float(row.get(f"c{j + 1}", 0.0))
                except (KeyError, ValueError, IndexError) as exc:
                    raise ConfigError(f"bad exponent row {row}: {exc}") from None
        if any(np.isnan(v).any() for v in arrays.values()) or np.isnan(c).any():
            raise ConfigError(f"{path} does not cover every grid node")
        return cls(grid, arrays["p"], arrays["q"], arrays["s"], arrays["a"], c)

    def to_csv(self, path: str | Path) -> None:
        cols = ["ix", "iy", "iz"][: self.dim]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols + ["it", "p", "q", "s", "a"] + [f"c{j + 1}" for j in range(self.dim)])
            for idx in np.ndindex(*self.grid.space_time_shape):
                vals = [self.p[idx], self.q[idx], self.s[idx], self.a[idx], *self.c[idx]]
                w.writerow(list(idx[1:]) + [idx[0]] + [repr(float(v)) for v in vals])


def discrete_lipschitz(values: np.ndarray, grid: Grid) -> float:
    """Largest forward difference quotient along the time and space axes."""
    steps = ([grid.dt] if grid.nt > 1 else []) + list(grid.spacing)
    axes = ([0] if grid.nt > 1 else []) + [1 + k for k in range(grid.dim)]
    out = 0.0
    for ax, h in zip(axes, steps):
        d = np.abs(np.diff(values, axis=ax)) / h
        if d.size:
            out = max(out, float(d.max()))
    return out


def validate_structure(fld: ExponentField, params: StructuralParams) -> list[Violation]:
    """Every violated structural condition; an empty list means the data are admissible."""
    if fld.dim != params.dim:
        raise DimensionError(f"field has N={fld.dim}, params declare N={params.dim}")
    n = params.dim
    out: list[Violation] = []
    bound = p_lower_bound(n)
    if not params.p_min > bound:
        out.append(Violation("p_min", f"p_min = {params.p_min:g} <= 2(N+1)/(N+2) = {bound:g}"))
    if params.p_min > params.p_max:
        out.append(Violation("p_order", f"p_min = {params.p_min:g} > p_max = {params.p_max:g}"))
    if not 0.0 < 2.0 * params.mu < params.p_min - 1.0:
        out.append(Violation("mu", f"need 0 < 2mu < p_min - 1, got 2mu = {2 * params.mu:g}"))
    if not 1.0 < params.q_min <= params.q_max:
        out.append(Violation("q_order", f"need 1 < q_min <= q_max, got [{params.q_min:g}, {params.q_max:g}]"))
    if not params.q_max < params.q_ceiling:
        out.append(Violation(
            "q_max", f"q_max = {params.q_max:g} >= min{{p_min, 1 + p_min(N+2)/(2N)}} - 2mu = {params.q_ceiling:g}"))
    if not 1.0 < params.s_min <= params.s_max:
        out.append(Violation("s_order", f"need 1 < s_min <= s_max, got [{params.s_min:g}, {params.s_max:g}]"))
    if not params.s_max <= params.s_ceiling:
        out.append(Violation("s_max", f"s_max = {params.s_max:g} > p_min - 2mu = {params.s_ceiling:g}"))
    if len(params.c_sup) != n:
        raise DimensionError(f"c_sup has {len(params.c_sup)} entries, N={n}")

    tol = 1e-12
    for name, lo, hi in (("p", params.p_min, params.p_max),
                         ("q", params.q_min, params.q_max),
                         ("s", params.s_min, params.s_max)):
        arr = getattr(fld, name)
        bad = (arr < lo - tol) | (arr > hi + tol)
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            out.append(Violation(f"{name}_range",
                                 f"{name} leaves [{lo:g}, {hi:g}] at {int(bad.sum())} nodes, e.g. {arr[idx]:g}",
                                 idx))
    bad = np.abs(fld.a) > params.a_sup + tol
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        out.append(Violation("a_range", f"|a| exceeds a_sup = {params.a_sup:g}", idx))
    for j in range(n):
        bad = np.abs(fld.c[..., j]) > params.c_sup[j] + tol
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            out.append(Violation("c_range", f"|c{j + 1}| exceeds c_sup = {params.c_sup[j]:g}", idx))
    lip = discrete_lipschitz(fld.p, fld.grid)
    if lip > params.lipschitz_p * (1 + 1e-12) + tol:
        out.append(Violation("lipschitz", f"discrete Lipschitz constant of p is {lip:g} > L = {params.lipschitz_p:g}"))
    return out


def _radius_cells(extent: float, h: float, level: int) -> int:
    return max(1, int(np.floor(2.0 ** (-level) * extent / h + 1e-9)))


def _hat(radius: int) -> np.ndarray:
    w = radius + 1.0 - np.abs(np.arange(-radius, radius + 1))
    return w / w.sum()


def smooth(values: np.ndarray, grid: Grid, level: int) -> np.ndarray:
    """Tensor-product hat-kernel average with nearest-node extension at the boundary."""
    out = np.asarray(values, dtype=float)
    axes = []
    if grid.nt > 1:
        axes.append((0, grid.T, grid.dt))
    axes += [(1 + k, L, h) for k, (L, h) in enumerate(zip(grid.lengths, grid.spacing))]
    for ax, extent, h in axes:
        out = convolve1d(out, _hat(_radius_cells(extent, h, level)), axis=ax, mode="nearest")
    return out


def mollify(fld: ExponentField, level: int) -> ExponentField:
    """Smoothed data at level ``m``; the p-output never exceeds p and grows with m."""
    if level < 1:
        raise ParameterError("mollification level must be >= 1")
    g = fld.grid
    p_m = np.full(g.space_time_shape, -np.inf)
    for k in range(1, level + 1):
        p_m = np.maximum(p_m, smooth(fld.p - 2.0 ** (-k), g, k))
    p_m = np.minimum(p_m, fld.p)
    c_m = np.stack([smooth(fld.c[..., j], g, level) for j in range(g.dim)], axis=-1)
    return ExponentField(g, p_m, smooth(fld.q, g, level), smooth(fld.s, g, level),
                         smooth(fld.a, g, level), c_m)


def relaxed_params(params: StructuralParams, level: int) -> StructuralParams:
    """Structural constants the level-m data are checked against (p_min shifted, mu halved)."""
    return replace(params, p_min=params.p_min - 2.0 ** (-level), mu=params.mu / 2.0)


def r_admissible_range(params: StructuralParams) -> tuple[float, float]:
    """Open interval of higher-integrability exponents r."""
    return 0.0, 4.0 / (params.dim + 2)
