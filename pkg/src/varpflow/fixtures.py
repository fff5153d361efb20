"""Reference problems with known answers or recorded behaviour."""
from __future__ import annotations

import numpy as np

from .exponents import ExponentField, StructuralParams, discrete_lipschitz
from .flux_algebra import flux, source
from .grid import SPACE_TIME, SPATIAL, Grid, GridFunction
from .solver import ProblemData


def _params(fld: ExponentField, mu=0.1, **over) -> StructuralParams:
    n = fld.dim
    kw = dict(p_min=float(fld.p.min()), p_max=float(fld.p.max()), q_min=float(fld.q.min()),
              q_max=float(fld.q.max()), s_min=float(fld.s.min()), s_max=float(fld.s.max()), mu=mu,
              a_sup=float(np.abs(fld.a).max()),
              c_sup=tuple(float(np.abs(fld.c[..., j]).max()) for j in range(n)),
              lipschitz_p=max(discrete_lipschitz(fld.p, fld.grid), 1e-12), dim=n)
    kw.update(over)
    return StructuralParams(**kw)


def heat_problem(nodes: int = 65, dt: float = 1e-4, T: float = 0.1, eps: float = 0.1, tau: float = 1.0) -> ProblemData:
    """``p = 2``, no source, ``u0 = sin(pi x)`` on [0, 1]."""
    g = Grid.box(nodes, 1.0, T=T, dt=dt)
    fld = ExponentField.constant(g, 2.0, 1.5, 1.5, 0.0, [0.0])
    u0 = np.sin(np.pi * g.axes()[0])
    u0[[0, -1]] = 0.0
    return ProblemData(GridFunction(u0, g.spatial(), SPATIAL), GridFunction(np.zeros(g.space_time_shape), g, SPACE_TIME),
                       fld, _params(fld), eps, tau)


def heat_exact(grid: Grid) -> np.ndarray:
    x = grid.axes()[0]
    return np.exp(-np.pi ** 2 * grid.times)[:, None] * np.sin(np.pi * x)[None, :]


def heat_time_discrete_exact(grid: Grid) -> np.ndarray:
    """Continuous-in-space, implicit-Euler-in-time solution: isolates the spatial error."""
    x = grid.axes()[0]
    decay = (1.0 + np.pi ** 2 * grid.dt) ** (-np.arange(grid.nt, dtype=float))
    return decay[:, None] * np.sin(np.pi * x)[None, :]


def heat_space_discrete_exact(grid: Grid) -> np.ndarray:
    """Exact-in-time solution of the semi-discrete system: isolates the temporal error."""
    x = grid.axes()[0]
    h = grid.spacing[0]
    lam = 4.0 / h ** 2 * np.sin(np.pi * h / 2.0) ** 2
    out = np.exp(-lam * grid.times)[:, None] * np.sin(np.pi * x)[None, :]
    out[:, [0, -1]] = 0.0
    return out


# manufactured solution u* = (1 + t) sin(pi x) sin(pi y), p = 2.5 + 0.3 x
MMS_P = "2.5 + 0.3*x"
MMS_Q = MMS_S = 1.5
MMS_A = 1.0
MMS_C = (1.0, 0.5)


def mms_exact(grid: Grid) -> np.ndarray:
    X, Y = grid.mesh()
    t = grid.times.reshape(-1, 1, 1)
    out = (1.0 + t) * (np.sin(np.pi * X) * np.sin(np.pi * Y))[None]
    out[:, grid.boundary_mask()] = 0.0
    return out


def _mms_grad(t, X, Y):
    return np.stack([(1 + t) * np.pi * np.cos(np.pi * X) * np.sin(np.pi * Y),
                     (1 + t) * np.pi * np.sin(np.pi * X) * np.cos(np.pi * Y)], axis=-1)


def mms_forcing(grid: Grid, eps: float, h: float = 1e-5) -> np.ndarray:
    """``u*_t - div F_eps(grad u*) - F_eps(u*, grad u*)`` with the divergence by central differences."""
    X, Y = grid.mesh()
    t = grid.times.reshape(-1, 1, 1)

    def p_of(x):
        return 2.5 + 0.3 * x

    div = 0.0
    for k in range(2):
        dx = h if k == 0 else 0.0
        dy = h if k == 1 else 0.0
        plus = flux(p_of(X + dx), eps, _mms_grad(t, X + dx, Y + dy))[..., k]
        minus = flux(p_of(X - dx), eps, _mms_grad(t, X - dx, Y - dy))[..., k]
        div = div + (plus - minus) / (2 * h)
    u = (1 + t) * np.sin(np.pi * X) * np.sin(np.pi * Y)
    ut = np.broadcast_to(np.sin(np.pi * X) * np.sin(np.pi * Y), u.shape)
    return ut - div - source(eps, u, _mms_grad(t, X, Y), MMS_Q, MMS_S, MMS_A, np.array(MMS_C))


def manufactured_problem(nodes: int = 33, dt: float = 0.05, T: float = 0.25, eps: float = 0.05) -> ProblemData:
    g = Grid.box((nodes, nodes), 1.0, T=T, dt=dt)
    fld = ExponentField.from_expressions(g, MMS_P, str(MMS_Q), str(MMS_S), str(MMS_A), [str(c) for c in MMS_C])
    u0 = mms_exact(g)[0]
    return ProblemData(GridFunction(u0, g.spatial(), SPATIAL), GridFunction(mms_forcing(g, eps), g, SPACE_TIME),
                       fld, _params(fld), eps)


# eps-sweep fixture
SWEEP_EPS = (0.1, 0.05, 0.025, 0.0125)
SWEEP_M = 8


def sweep_problem(nodes: int = 33, dt: float = 0.01, T: float = 0.1, eps: float = SWEEP_EPS[0]) -> ProblemData:
    """``p = 2.5 + 0.3x``, ``q = s = 1.5``, ``a = 0.5``, ``c = (0.5, 0.25)``, ``u0 = sin sin``, ``f = 1``."""
    g = Grid.box((nodes, nodes), 1.0, T=T, dt=dt)
    fld = ExponentField.from_expressions(g, "2.5 + 0.3*x", "1.5", "1.5", "0.5", ["0.5", "0.25"])
    X, Y = g.mesh()
    u0 = np.sin(np.pi * X) * np.sin(np.pi * Y)
    u0[g.boundary_mask()] = 0.0
    return ProblemData(GridFunction(u0, g.spatial(), SPATIAL), GridFunction(np.ones(g.space_time_shape), g, SPACE_TIME),
                       fld, _params(fld), eps)
