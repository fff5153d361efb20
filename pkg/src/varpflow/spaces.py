"""Discrete variable-exponent modulars and norms on grid functions."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import DimensionError, ParameterError
from .flux_algebra import flux
from .grid import SPACE_TIME, SPATIAL, GridFunction, gradient, node_weights

LAMBDA_RANGE = (1e-300, 1e300)


def _exponent(p_field, f: GridFunction) -> np.ndarray:
    p = np.asarray(p_field, dtype=float)
    try:
        return np.broadcast_to(p, f.values.shape)
    except ValueError:
        raise DimensionError(f"exponent shape {p.shape} does not match values {f.values.shape}") from None


def modular(f: GridFunction, p_field) -> float:
    """``int |f|^p`` by the cell-average midpoint rule."""
    p = _exponent(p_field, f)
    w = node_weights(f.grid, f.kind)
    with np.errstate(divide="ignore"):
        vals = np.where(f.values != 0.0, np.abs(f.values) ** p, 0.0)
    return float(np.sum(w * vals))


def _log_modular_fn(values, p, w):
    """``t -> log A(f / e^t)`` for the nonzero weighted nodes; None if A(f) = 0."""
    keep = (values != 0.0) & (w > 0.0)
    if not keep.any():
        return None, None
    lf = np.log(np.abs(values[keep]))
    pk = p[keep]
    lw = np.log(w[keep])
    return (lambda t: float(logsumexp(pk * (lf - t) + lw))), (float(pk.min()), float(pk.max()))


def luxemburg_from_arrays(values, p, weights) -> float:
    """``inf{lam > 0 : sum w |f/lam|^p <= 1}`` by root-finding in ``log lam``."""
    values = np.asarray(values, dtype=float)
    p = np.broadcast_to(np.asarray(p, dtype=float), values.shape)
    fn, p_range = _log_modular_fn(values, p, np.broadcast_to(weights, values.shape))
    if fn is None:
        return 0.0
    p_lo, p_hi = p_range
    if p_lo <= 0:
        raise ParameterError("exponent must be positive")
    la0 = fn(0.0)
    # A(f/lam) lies between lam^-p_hi A(f) and lam^-p_lo A(f): the root brackets in log lam
    ends = (la0 / p_lo, la0 / p_hi)
    lo, hi = min(ends) - 1.0, max(ends) + 1.0
    lo = max(lo, np.log(LAMBDA_RANGE[0]))
    hi = min(hi, np.log(LAMBDA_RANGE[1]))
    t = brentq(fn, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(np.exp(t))


def luxemburg_norm(f: GridFunction, p_field) -> float:
    return luxemburg_from_arrays(f.values, _exponent(p_field, f), node_weights(f.grid, f.kind))


def conjugate_exponent(p):
    p = np.asarray(p, dtype=float)
    if np.any(p <= 1.0):
        raise ParameterError("conjugate exponent needs p > 1")
    return p / (p - 1.0)


def holder_check(f: GridFunction, g: GridFunction, p_field, tol: float = 1e-10):
    """``(int |fg|, 2 |f|_p |g|_p', lhs <= rhs + tol)``."""
    if f.values.shape != g.values.shape or not f.grid.same_mesh(g.grid) or f.kind != g.kind:
        raise DimensionError("holder_check needs functions on the same grid")
    p = _exponent(p_field, f)
    w = node_weights(f.grid, f.kind)
    lhs = float(np.sum(w * np.abs(f.values * g.values)))
    rhs = 2.0 * luxemburg_norm(f, p) * luxemburg_norm(g, conjugate_exponent(p))
    return lhs, rhs, bool(lhs <= rhs + tol)


@dataclass
class SolutionNorms:
    sup_u_l2: float
    sup_grad_lux: float
    ut_l2: float
    hi_modular: float
    flux_w12: float

    def as_dict(self) -> dict:
        return asdict(self)


def flux_field(u_values, p_values, eps, spacing) -> np.ndarray:
    """Regularized flux of the nodal gradient of ``u``; works for spatial and space-time arrays."""
    return flux(p_values, eps, gradient(u_values, spacing))


def solution_norms(u: GridFunction, p_field, eps: float, r: float) -> SolutionNorms:
    """Tracked norms of a space-time solution; time integrals run over the implicit levels."""
    if u.kind != SPACE_TIME:
        raise ValueError("solution_norms needs a space-time function")
    g = u.grid
    n = g.dim
    if not 0.0 < r < 4.0 / (n + 2):
        raise ParameterError(f"r = {r} outside (0, {4.0 / (n + 2):g})")
    p = _exponent(p_field, u)
    h = g.spacing
    ws = node_weights(g, SPATIAL)
    wst = node_weights(g, SPACE_TIME)

    u_l2 = np.sqrt(np.sum(ws * u.values ** 2, axis=tuple(range(1, n + 1))))
    grad = gradient(u.values, h)
    gnorm = np.sqrt(np.sum(grad * grad, axis=-1))
    sup_grad = max(luxemburg_from_arrays(gnorm[k], p[k], ws) for k in range(g.nt))

    ut = np.zeros_like(u.values)
    ut[1:] = np.diff(u.values, axis=0) / g.dt
    ut_l2 = float(np.sqrt(np.sum(wst * ut ** 2)))

    with np.errstate(divide="ignore"):
        hi = np.where(gnorm > 0, gnorm ** (2.0 * (p - 1.0) + r), 0.0)
    hi_mod = float(np.sum(wst * hi))

    F = flux(p, eps, grad)
    dF = np.stack([gradient(F[..., j], h) for j in range(n)], axis=-2)  # (..., j, i) = D_i F^j
    Ft = np.zeros_like(F)
    Ft[1:] = np.diff(F, axis=0) / g.dt
    dens = np.sum(F * F, axis=-1) + np.sum(dF * dF, axis=(-1, -2)) + np.sum(Ft * Ft, axis=-1)
    flux_w12 = float(np.sqrt(np.sum(wst * dens)))
    return SolutionNorms(float(np.max(u_l2)), float(sup_grad), ut_l2, hi_mod, flux_w12)
