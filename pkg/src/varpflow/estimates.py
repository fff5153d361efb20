"""Checks of the a-priori estimates on solver output, and sweep verdicts across eps."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .errors import DimensionError, InsufficientDataError
from .flux_algebra import flux
from .grid import SPACE_TIME, SPATIAL, GridFunction, divergence, gradient, hessian, node_weights
from .hessian import interpolation_check
from .solver import ProblemData, SolveResult
from .spaces import holder_check, luxemburg_from_arrays, modular, solution_norms

INTERP_DELTA = 0.5
TRACKED = ("ut_l2", "sup_u_l2", "hi_modular", "flux_w12", "weighted_hessian_l2")


@dataclass
class SolveReport:
    run_id: str
    eps: float
    m_level: int
    converged: bool
    sup_u_l2: float = math.nan
    sup_grad_lux: float = math.nan
    ut_l2: float = math.nan
    hi_modular: float = math.nan
    flux_w12: float = math.nan
    energy_constant: float = math.nan
    div_flux_l2: float = math.nan
    weighted_hessian_l2: float = math.nan
    combined_c1: float = math.nan
    combined_c2_implied: float = math.nan
    combined_margin: float = math.nan
    interp_c_implied: float = math.nan
    interp_margin: float = math.nan
    holder_lhs: float = math.nan
    holder_rhs: float = math.nan
    holder_ok: bool = False

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return [getattr(self, c) for c in self.columns()]

    def as_dict(self) -> dict:
        return asdict(self)


def slice_terms(u_slice, p_slice, eps, spacing):
    """``(int (div F)^2, int S^(p-2) |D^2 u|^2)`` on one spatial slice, as nodal integrands."""
    g = gradient(u_slice, spacing)
    S = eps ** 2 + np.sum(g * g, axis=-1)
    div = divergence(flux(p_slice, eps, g), spacing)
    H = hessian(u_slice, spacing)
    return div ** 2, S ** (p_slice - 2.0) * np.sum(H * H, axis=(-1, -2))


def combined_terms(u: GridFunction, p_field, eps):
    """Per-slice ``(div_sq, weighted_hessian)`` arrays over the implicit time levels."""
    g = u.grid
    ws = node_weights(g, SPATIAL)
    p = np.broadcast_to(np.asarray(p_field, dtype=float), u.values.shape)
    levels = range(1, g.nt) if u.kind == SPACE_TIME else [None]
    div_sq, wh = [], []
    for k in levels:
        uk = u.values if k is None else u.values[k]
        pk = p if k is None else p[k]
        d, w = slice_terms(uk, pk, eps, g.spacing)
        div_sq.append(float(np.sum(ws * d)))
        wh.append(float(np.sum(ws * w)))
    return np.array(div_sq), np.array(wh)


def interpolation_terms(u: GridFunction, p_field, eps, r, delta=INTERP_DELTA):
    """Largest implied constant and its slice data over the implicit time levels."""
    g = u.grid
    p = np.broadcast_to(np.asarray(p_field, dtype=float), u.values.shape)
    if u.kind == SPATIAL:
        return interpolation_check(u, p, eps, r, delta)[2]
    return max(interpolation_check(u.slice(k), p[k], eps, r, delta)[2] for k in range(1, g.nt))


def energy_constant(result: SolveResult, data: ProblemData) -> float:
    """Ratio of the discrete energy to ``1 + |f|^2_{2,Q_T} + |u(0)|^2_2``."""
    u = result.u
    g = u.grid
    ws = node_weights(g, SPATIAL)
    sup_l2 = float(np.max(np.sum(ws * u.values ** 2, axis=tuple(range(1, g.dim + 1)))))
    grads = gradient(u.values, g.spacing)
    gn = np.sqrt(np.sum(grads * grads, axis=-1))
    diss = sum(g.dt * modular(GridFunction(gn[k], g.spatial()), data.exponents.p[k]) for k in range(1, g.nt))
    f2 = float(np.sum(node_weights(g, SPACE_TIME) * (data.tau * data.f.values) ** 2))
    u02 = float(np.sum(ws * (data.tau * data.u0.values) ** 2))
    return (sup_l2 + diss) / (1.0 + f2 + u02)


def analyze(result: SolveResult, data: ProblemData, r: float, constants: dict | None = None,
            run_id: str | None = None, m_level: int = 0) -> SolveReport:
    """Every tracked norm and inequality residual of one solve."""
    run_id = run_id or f"eps{data.eps:g}_m{m_level}"
    rep = SolveReport(run_id, float(data.eps), int(m_level), bool(result.converged))
    if not result.converged:
        return rep
    u = result.u
    g = u.grid
    p = data.exponents.p
    norms = solution_norms(u, p, data.eps, r)
    for k, v in norms.as_dict().items():
        setattr(rep, k, v)
    rep.energy_constant = energy_constant(result, data)

    div_sq, wh = combined_terms(u, p, data.eps)
    rep.div_flux_l2 = float(np.sqrt(g.dt * div_sq.sum()))
    rep.weighted_hessian_l2 = float(g.dt * wh.sum())
    if constants is not None:
        c1 = constants["combined_c1"]
        rep.combined_c1 = c1
        rep.combined_c2_implied = float(max(0.0, np.max(c1 * wh - div_sq)))
        rep.combined_margin = float(np.min(div_sq + constants["combined_c2"] - c1 * wh))
        rep.interp_c_implied = float(interpolation_terms(u, p, data.eps, r))
        rep.interp_margin = float(constants["interp_c"] - rep.interp_c_implied)

    ut = np.zeros_like(u.values)
    ut[1:] = np.diff(u.values, axis=0) / g.dt
    hl, hr, ok = holder_check(GridFunction(ut, g, SPACE_TIME), u, p)
    rep.holder_lhs, rep.holder_rhs, rep.holder_ok = hl, hr, ok
    return rep


@dataclass
class SweepReport:
    cells: list[SolveReport]
    threshold: float
    boundedness_ratios: dict[str, float] = field(default_factory=dict)
    verdicts: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def summary(self) -> str:
        lines = [f"cells: {len(self.cells)} ({sum(c.converged for c in self.cells)} converged), "
                 f"threshold {self.threshold:g}"]
        for name in TRACKED:
            lines.append(f"  {name:<22} max/min = {self.boundedness_ratios[name]:.6g}  "
                         f"{'pass' if self.verdicts[name] else 'FAIL'}")
        lines.append(f"verdict: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _ratio(values) -> float:
    values = np.asarray(values, dtype=float)
    hi, lo = float(values.max()), float(values.min())
    if hi == lo:
        return 1.0
    return hi / lo if lo > 0 else math.inf


def sweep_verdict(reports: Sequence[SolveReport], threshold: float = 2.0) -> SweepReport:
    """Max/min ratio of each tracked norm over the converged cells."""
    good = [r for r in reports if r.converged]
    if len(good) < 3 or len({r.eps for r in good}) < 3:
        raise InsufficientDataError(
            f"need >= 3 converged cells with distinct eps, have {len(good)} "
            f"({len({r.eps for r in good})} distinct eps)")
    out = SweepReport(list(reports), threshold)
    for name in TRACKED:
        vals = [getattr(r, name) for r in good]
        ratio = _ratio(vals) if all(np.isfinite(vals)) else math.inf
        out.boundedness_ratios[name] = ratio
        out.verdicts[name] = bool(ratio <= threshold)
    return out


def grad_cauchy_check(results: Sequence[SolveResult], p_field) -> list[float]:
    """Space-time Luxemburg distance between gradients of consecutive results."""
    if len(results) < 2:
        raise InsufficientDataError("need at least two results")
    g = results[0].u.grid
    for res in results[1:]:
        if not res.u.grid.same_mesh(g):
            raise DimensionError("results live on different grids")
    w = node_weights(g, SPACE_TIME)
    p = np.broadcast_to(np.asarray(p_field, dtype=float), g.space_time_shape)
    grads = [gradient(r.u.values, g.spacing) for r in results]
    out = []
    for a, b in zip(grads, grads[1:]):
        d = np.sqrt(np.sum((a - b) ** 2, axis=-1))
        out.append(luxemburg_from_arrays(d, p, w))
    return out
