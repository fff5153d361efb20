"""Run configuration files: UTF-8 ``key = value`` lines under ``[section]`` headers.

Sections and keys (defaults in brackets)::

    [grid]       nodes = 33, 33   lengths [1.0]   T [0]   dt [1.0]
    [structure]  p_min p_max q_min q_max s_min s_max mu a_sup c_sup lipschitz_p
                 (each defaults to the range of the sampled field; mu [0.1])
    [exponents]  p  q [2]  s [2]  a [0]  c1 .. cN [0]   or   csv = path
    [data]       u0 [0]  f [0]
    [solver]     mode  picard_tol  picard_max_iters  damping  linear_solver_tol  linear_solver
    [run]        eps [0.1]  m_level [0]  tau [1]  r [half the admissible range]
    [sweep]      eps = list  m_levels [0]  threshold [2.0]
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .exponents import ExponentField, StructuralParams, discrete_lipschitz
from .expressions import evaluate_on_grid
from .grid import SPACE_TIME, SPATIAL, Grid, GridFunction
from .solver import ProblemData, SolverConfig

SECTIONS = ("grid", "structure", "exponents", "data", "solver", "run", "sweep")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from None


@dataclass
class RunConfig:
    text: str
    source: str
    grid: Grid
    exponents: ExponentField
    params: StructuralParams
    u0: np.ndarray
    f: np.ndarray
    solver: SolverConfig
    eps: float = 0.1
    m_level: int = 0
    tau: float = 1.0
    r: float | None = None
    sweep_eps: list[float] = field(default_factory=list)
    m_levels: list[int] = field(default_factory=lambda: [0])
    threshold: float = 2.0

    @property
    def r_value(self) -> float:
        return self.r if self.r is not None else 0.5 * 4.0 / (self.grid.dim + 2)

    def problem(self, eps: float | None = None, tau: float | None = None) -> ProblemData:
        g = self.grid
        return ProblemData(GridFunction(self.u0, g.spatial(), SPATIAL), GridFunction(self.f, g, SPACE_TIME),
                           self.exponents, self.params, float(self.eps if eps is None else eps),
                           float(self.tau if tau is None else tau))


def _get(cp, section, key, default=None, cast=str):
    if cp.has_option(section, key):
        raw = cp.get(section, key)
        try:
            return cast(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"[{section}] {key} = {raw!r} is not valid") from None
    if default is None:
        raise ConfigError(f"missing [{section}] {key}")
    return default


def parse_config(text: str, source: str = "<string>", base_dir: Path | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    unknown = [s for s in cp.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"{source}: unknown sections {unknown}")
    if not cp.has_section("grid"):
        raise ConfigError(f"{source}: missing [grid] section")

    nodes = [int(v) for v in _floats(_get(cp, "grid", "nodes"))]
    lengths = _floats(_get(cp, "grid", "lengths", "1.0"))
    if len(lengths) == 1:
        lengths = lengths * len(nodes)
    T = _get(cp, "grid", "T", 0.0, float)
    dt = _get(cp, "grid", "dt", 1.0, float)
    try:
        grid = Grid.box(nodes, lengths, T=T, dt=dt)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    n = grid.dim

    ex = "exponents"
    if cp.has_option(ex, "csv"):
        path = Path(cp.get(ex, "csv"))
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.is_file():
            raise ConfigError(f"exponent file {path} not found")
        fld = ExponentField.from_csv(path, grid)
    else:
        cs = [_get(cp, ex, f"c{j + 1}", "0") for j in range(n)]
        fld = ExponentField.from_expressions(grid, _get(cp, ex, "p"), _get(cp, ex, "q", "2"),
                                             _get(cp, ex, "s", "2"), _get(cp, ex, "a", "0"), cs)

    st = "structure"
    c_sup = _get(cp, st, "c_sup", None, _floats) if cp.has_option(st, "c_sup") else \
        [float(np.abs(fld.c[..., j]).max()) for j in range(n)]
    params = StructuralParams(
        p_min=_get(cp, st, "p_min", float(fld.p.min()), float),
        p_max=_get(cp, st, "p_max", float(fld.p.max()), float),
        q_min=_get(cp, st, "q_min", float(fld.q.min()), float),
        q_max=_get(cp, st, "q_max", float(fld.q.max()), float),
        s_min=_get(cp, st, "s_min", float(fld.s.min()), float),
        s_max=_get(cp, st, "s_max", float(fld.s.max()), float),
        mu=_get(cp, st, "mu", 0.1, float),
        a_sup=_get(cp, st, "a_sup", float(np.abs(fld.a).max()), float),
        c_sup=tuple(c_sup),
        lipschitz_p=_get(cp, st, "lipschitz_p", discrete_lipschitz(fld.p, grid), float),
        dim=n,
    )

    u0 = evaluate_on_grid(_get(cp, "data", "u0", "0"), grid, space_time=False)
    u0[grid.boundary_mask()] = 0.0
    f = evaluate_on_grid(_get(cp, "data", "f", "0"), grid, space_time=True)

    so = "solver"
    try:
        solver = SolverConfig(
            mode=_get(cp, so, "mode", "picard-divergence"),
            picard_tol=_get(cp, so, "picard_tol", 1e-8, float),
            picard_max_iters=_get(cp, so, "picard_max_iters", 200, int),
            damping=_get(cp, so, "damping", 1.0, float),
            linear_solver_tol=_get(cp, so, "linear_solver_tol", 1e-9, float),
            linear_solver=_get(cp, so, "linear_solver", "direct"),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    sweep_eps = _get(cp, "sweep", "eps", [], _floats) if cp.has_option("sweep", "eps") else []
    m_levels = [int(v) for v in _floats(_get(cp, "sweep", "m_levels", "0"))]
    r = _get(cp, "run", "r", None, float) if cp.has_option("run", "r") else None
    return RunConfig(
        text=text, source=source, grid=grid, exponents=fld, params=params, u0=u0, f=f, solver=solver,
        eps=_get(cp, "run", "eps", 0.1, float), m_level=_get(cp, "run", "m_level", 0, int),
        tau=_get(cp, "run", "tau", 1.0, float), r=r, sweep_eps=sweep_eps, m_levels=m_levels,
        threshold=_get(cp, "sweep", "threshold", 2.0, float),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, str(path), path.parent)
