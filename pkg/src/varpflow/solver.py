"""Implicit-Euler finite differences for the regularized problem on boxes.

Each time step solves the nonlinear discrete equation by a damped fixed-point
iteration over linear problems whose coefficients are frozen at the previous
iterate. Two linearizations are offered:

``picard-divergence``
    ``div(G(v) grad u)`` with face coefficients and the whole source
    ``F_eps(v, grad v)`` on the right-hand side; the matrix is SPD.
``frozen-nondivergence``
    ``G(v) sum a_ij(v) D_ij u + h(v) u + g(v) . grad u``, whose fixed points
    solve the same equation written in non-divergence form.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, spsolve

from .errors import DimensionError, ParameterError, SolverError
from .exponents import ExponentField, StructuralParams, mollify, relaxed_params, smooth, validate_structure
from .flux_algebra import _safe_pow, linearization, source
from .grid import SPACE_TIME, SPATIAL, Grid, GridFunction, gradient

log = logging.getLogger(__name__)

PICARD_DIVERGENCE = "picard-divergence"
FROZEN_NONDIVERGENCE = "frozen-nondivergence"
MODES = (PICARD_DIVERGENCE, FROZEN_NONDIVERGENCE)
MAX_HALVINGS = 4


@dataclass
class ProblemData:
    u0: GridFunction
    f: GridFunction
    exponents: ExponentField
    params: StructuralParams
    eps: float
    tau: float = 1.0

    def __post_init__(self):
        g = self.exponents.grid
        if self.u0.kind != SPATIAL or self.u0.values.shape != g.shape:
            raise DimensionError("u0 must be a spatial function on the exponent grid")
        if self.f.kind != SPACE_TIME or not self.f.grid.same_mesh(g):
            raise DimensionError("f must be a space-time function on the exponent grid")
        if np.any(self.u0.values[g.boundary_mask()] != 0.0):
            raise ParameterError("u0 must vanish on the boundary")
        if not 0.0 < self.eps <= 1.0:
            raise ParameterError(f"eps = {self.eps} outside (0, 1]")
        if not 0.0 <= self.tau <= 1.0:
            raise ParameterError(f"tau = {self.tau} outside [0, 1]")
        if g.dim > 2:
            raise DimensionError("the solver handles N = 1 and N = 2 only")

    @property
    def grid(self) -> Grid:
        return self.exponents.grid

    def validate(self) -> list:
        return validate_structure(self.exponents, self.params)


@dataclass
class SolverConfig:
    mode: str = PICARD_DIVERGENCE
    picard_tol: float = 1e-8
    picard_max_iters: int = 200
    damping: float = 1.0
    linear_solver_tol: float = 1e-9
    linear_solver: str = "direct"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.picard_tol <= 0 or self.linear_solver_tol <= 0:
            raise ParameterError("tolerances must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ParameterError("damping must lie in (0, 1]")
        if self.picard_max_iters < 1:
            raise ParameterError("picard_max_iters must be >= 1")
        if self.linear_solver not in ("direct", "cg"):
            raise ParameterError("linear_solver must be 'direct' or 'cg'")


@dataclass
class SolveResult:
    u: GridFunction
    per_step_iters: list[int] = field(default_factory=list)
    residual_history: list[float] = field(default_factory=list)
    converged: bool = True


# ---------------------------------------------------------------------------
# stencil assembly on interior nodes


class _Layout:
    """Interior-node numbering and shifted views for a Dirichlet box."""

    def __init__(self, shape):
        self.shape = tuple(shape)
        self.dim = len(shape)
        self.inner = tuple(slice(1, n - 1) for n in shape)
        self.inner_shape = tuple(n - 2 for n in shape)
        self.size = int(np.prod(self.inner_shape))
        self.index = -np.ones(self.shape, dtype=np.int64)
        self.index[self.inner] = np.arange(self.size).reshape(self.inner_shape)

    def shifted(self, arr, offset):
        return arr[tuple(slice(1 + o, n - 1 + o) for o, n in zip(offset, self.shape))]

    def matrix(self, terms) -> sp.csr_matrix:
        """Sparse matrix from ``[(offset, coefficient over interior nodes), ...]``."""
        rows, cols, vals = [], [], []
        own = self.index[self.inner].ravel()
        for offset, coef in terms:
            col = self.shifted(self.index, offset).ravel()
            c = np.broadcast_to(coef, self.inner_shape).ravel()
            keep = col >= 0
            rows.append(own[keep])
            cols.append(col[keep])
            vals.append(c[keep])
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.size, self.size))


def _unit(dim, k, sign=1):
    off = [0] * dim
    off[k] = sign
    return tuple(off)


def _face_coefficients(w, p, eps, spacing):
    """Per-axis face values of ``G(p, grad w)``; axis k has ``shape[k] - 1`` faces."""
    dim = w.ndim
    central = [np.gradient(w, h, axis=k) for k, h in enumerate(spacing)]
    out = []
    for k, h in enumerate(spacing):
        lo = [slice(None)] * dim
        hi = [slice(None)] * dim
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        g2 = ((w[hi] - w[lo]) / h) ** 2
        for l in range(dim):
            if l != k:
                g2 = g2 + (0.5 * (central[l][lo] + central[l][hi])) ** 2
        pf = 0.5 * (p[lo] + p[hi])
        out.append(_safe_pow(eps ** 2 + g2, (pf - 2.0) / 2.0))
    return out


def _divergence_terms(lay: _Layout, kappa, spacing):
    """Stencil of ``-div(kappa grad u)`` on interior nodes."""
    terms = []
    diag = 0.0
    for k, h in enumerate(spacing):
        sl_plus = [slice(1, n - 1) for n in lay.shape]
        sl_minus = [slice(1, n - 1) for n in lay.shape]
        sl_plus[k] = slice(1, lay.shape[k] - 1)     # face i+1/2 has index i
        sl_minus[k] = slice(0, lay.shape[k] - 2)    # face i-1/2 has index i-1
        kp = kappa[k][tuple(sl_plus)] / h**2
        km = kappa[k][tuple(sl_minus)] / h**2
        terms.append((_unit(lay.dim, k, 1), -kp))
        terms.append((_unit(lay.dim, k, -1), -km))
        diag = diag + kp + km
    terms.append(((0,) * lay.dim, diag))
    return terms


def _nondivergence_terms(lay: _Layout, coeffs, spacing):
    """Stencil of ``-(G a_ij D_ij u + h u + g . grad u)`` on interior nodes."""
    inner = lay.inner
    G = coeffs.prefactor[inner]
    A = coeffs.a_matrix[inner]
    gv = coeffs.g_vector[inner]
    terms = [((0,) * lay.dim, -coeffs.h[inner])]
    for k, hk in enumerate(spacing):
        akk = G * A[..., k, k] / hk**2
        adv = gv[..., k] / (2.0 * hk)
        terms.append((_unit(lay.dim, k, 1), -(akk + adv)))
        terms.append((_unit(lay.dim, k, -1), -(akk - adv)))
        terms.append(((0,) * lay.dim, 2.0 * akk))
        for l in range(k + 1, lay.dim):
            hl = spacing[l]
            akl = 2.0 * G * A[..., k, l] / (4.0 * hk * hl)
            for sk in (1, -1):
                for sl in (1, -1):
                    off = [0] * lay.dim
                    off[k], off[l] = sk, sl
                    terms.append((tuple(off), -sk * sl * akl))
    return terms


def _linear_solve(A, b, config: SolverConfig) -> np.ndarray:
    bn = np.linalg.norm(b)
    if bn == 0.0:
        return np.zeros_like(b)
    if config.linear_solver == "cg" and config.mode == PICARD_DIVERGENCE:
        x, _ = cg(A, b, rtol=0.1 * config.linear_solver_tol, atol=0.0, maxiter=10 * A.shape[0])
    else:
        x = spsolve(A.tocsc(), b)
    res = float(np.linalg.norm(A @ x - b) / bn)
    if not np.isfinite(res) or res > config.linear_solver_tol:
        raise SolverError(f"linear solve residual {res:.3e} above {config.linear_solver_tol:.1e}", residual=res)
    return x


def _level(data: ProblemData, k: int):
    ex = data.exponents
    return ex.p[k], ex.q[k], ex.s[k], ex.a[k], ex.c[k]


def step_linear(u_prev: GridFunction, v: GridFunction, data: ProblemData, t_index: int,
                config: SolverConfig) -> GridFunction:
    """One implicit-Euler step of the linear problem with coefficients frozen at ``v``."""
    grid = data.grid
    if t_index < 1 or t_index >= grid.nt:
        raise ParameterError(f"t_index must lie in [1, {grid.nt - 1}]")
    h = grid.spacing
    lay = _Layout(grid.shape)
    p, q, s, a, c = _level(data, t_index)
    eps = data.eps
    w = v.values
    rhs = u_prev.values[lay.inner] / grid.dt + data.tau * data.f.values[t_index][lay.inner]
    inv_dt = np.full(lay.inner_shape, 1.0 / grid.dt)

    if config.mode == PICARD_DIVERGENCE:
        kappa = _face_coefficients(w, p, eps, h)
        terms = _divergence_terms(lay, kappa, h)
        rhs = rhs + source(eps, w, gradient(w, h), q, s, a, c)[lay.inner]
    else:
        coeffs = linearization(p, eps, gradient(w, h), w, q, s, a, c, gradient(p, h))
        terms = _nondivergence_terms(lay, coeffs, h)
    terms.append(((0,) * lay.dim, inv_dt))
    A = lay.matrix(terms)
    x = _linear_solve(A, rhs.ravel(), config)
    out = np.zeros(grid.shape)
    out[lay.inner] = x.reshape(lay.inner_shape)
    return GridFunction(out, grid.spatial(), SPATIAL)


def _rel_change(new, old) -> float:
    num = float(np.linalg.norm(new - old))
    den = float(np.linalg.norm(new))
    if num == 0.0:
        return 0.0
    return num / den if den > 0.0 else np.inf


def solve(data: ProblemData, config: SolverConfig | None = None, initial_guess=None) -> SolveResult:
    """March all time levels; ``initial_guess`` (space-time array) warm-starts each step."""
    config = config or SolverConfig()
    grid = data.grid
    sgrid = grid.spatial()
    U = np.zeros(grid.space_time_shape)
    U[0] = data.tau * data.u0.values
    iters, history = [], []
    converged = True
    for k in range(1, grid.nt):
        u_prev = GridFunction(U[k - 1], sgrid)
        w = U[k - 1].copy() if initial_guess is None else np.array(initial_guess[k], dtype=float)
        w[sgrid.boundary_mask()] = 0.0
        damping = config.damping
        halvings = 0
        last = np.inf
        done = False
        for it in range(1, config.picard_max_iters + 1):
            new = step_linear(u_prev, GridFunction(w, sgrid), data, k, config).values
            change = _rel_change(new, w)
            history.append(change)
            if change <= config.picard_tol:
                w = new
                done = True
                break
            if change > last and halvings < MAX_HALVINGS:
                damping *= 0.5
                halvings += 1
            last = change
            w = (1.0 - damping) * w + damping * new
        iters.append(it)
        if not done:
            converged = False
            log.warning("time level %d: fixed-point iteration stopped at change %.3e", k, change)
        U[k] = w
    U[:, grid.boundary_mask()] = 0.0
    return SolveResult(GridFunction(U, grid, SPACE_TIME), iters, history, converged)


def homotopy_solve(data: ProblemData, config: SolverConfig | None = None, tau_steps: int = 4) -> SolveResult:
    """Ramp tau over ``1/k, ..., 1``, warm-starting each solve from the previous one."""
    if tau_steps < 1:
        raise ParameterError("tau_steps must be >= 1")
    guess = None
    result = None
    for j in range(1, tau_steps + 1):
        result = solve(replace(data, tau=j / tau_steps), config, initial_guess=guess)
        guess = result.u.values
    return result


# ---------------------------------------------------------------------------
# epsilon / mollification sweeps


def smooth_data(data: ProblemData, level: int) -> ProblemData:
    """Data at mollification level ``m``; level 0 returns the data unchanged."""
    if level == 0:
        return data
    g = data.grid
    ex = mollify(data.exponents, level)
    f = smooth(data.f.values, g, level)
    u0 = smooth(data.u0.values[None], g.spatial(), level)[0]
    u0[g.boundary_mask()] = 0.0
    return replace(data, u0=GridFunction(u0, g.spatial()), f=GridFunction(f, g, SPACE_TIME),
                   exponents=ex, params=relaxed_params(data.params, level))


@dataclass
class SweepCell:
    eps: float
    m_level: int
    result: SolveResult | None
    data: ProblemData
    error: str | None = None

    @property
    def converged(self) -> bool:
        return self.result is not None and self.result.converged


def _sweep_level(data, config, eps_list, m):
    base = smooth_data(data, m)
    cells = []
    guess = None
    for eps in eps_list:
        d = replace(base, eps=float(eps))
        try:
            res = solve(d, config, initial_guess=guess)
            if not res.converged:
                res = homotopy_solve(d, config, tau_steps=4)
            guess = res.u.values if res.converged else guess
            cells.append(SweepCell(float(eps), m, res, d))
        except SolverError as exc:
            cells.append(SweepCell(float(eps), m, None, d, str(exc)))
    return cells


def continuation_sweep(data: ProblemData, config: SolverConfig | None, eps_list: Sequence[float],
                       m_levels: Sequence[int], jobs: int = 1) -> dict[tuple[float, int], SweepCell]:
    """Solve every (eps, m) pair; eps runs in the given decreasing order with warm starts."""
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ParameterError("eps_list must be positive and strictly decreasing")
    config = config or SolverConfig()
    levels = list(m_levels)
    if jobs > 1 and len(levels) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_level = list(pool.map(lambda m: _sweep_level(data, config, eps_list, m), levels))
    else:
        per_level = [_sweep_level(data, config, eps_list, m) for m in levels]
    return {(c.eps, c.m_level): c for cells in per_level for c in cells}
