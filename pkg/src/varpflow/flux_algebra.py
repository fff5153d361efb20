"""Pointwise algebra of the regularized flux (eps^2 + |xi|^2)^((p-2)/2) xi.

All functions are vectorized: scalars broadcast against leading axes and
vectors keep their N components on the last axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_FLOOR = 1e-300


def _sq(v: np.ndarray) -> np.ndarray:
    return np.sum(np.square(v), axis=-1)


def _safe_pow(base, expo):
    """``base**expo`` with ``0**negative`` mapped to 0 (callers multiply by a vanishing factor)."""
    base = np.asarray(base, dtype=float)
    expo = np.asarray(expo, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.power(base, expo)
    return np.where(base > 0.0, out, np.where(expo == 0.0, 1.0, 0.0))


def weight(p, eps, xi) -> np.ndarray:
    """The scalar factor G(p, xi) = (eps^2 + |xi|^2)^((p-2)/2)."""
    xi = np.asarray(xi, dtype=float)
    return _safe_pow(np.square(eps) + _sq(xi), (np.asarray(p, dtype=float) - 2.0) / 2.0)


def flux(p, eps, xi) -> np.ndarray:
    """Regularized flux; with ``eps = 0`` and ``xi = 0`` the value is the limit 0."""
    xi = np.asarray(xi, dtype=float)
    return weight(p, eps, xi)[..., None] * xi


@dataclass(frozen=True)
class FluxSample:
    eps: float
    p: float
    xi: np.ndarray

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))

    def evaluate(self) -> np.ndarray:
        return flux(self.p, self.eps, self.xi)


def check_monotonicity(p, eps, xi, eta, c_high: float, c_low: float):
    """``(lhs, rhs)`` of the strong monotonicity inequality; the inequality holds iff lhs >= rhs.

    ``c_high`` is the constant for p >= 2 (rhs ``C|xi-eta|^p``), ``c_low`` for p < 2
    (rhs ``C(1+|xi|^2+|eta|^2)^((p-2)/2)|xi-eta|^2``).
    """
    p = np.asarray(p, dtype=float)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    d = xi - eta
    lhs = np.sum((flux(p, eps, xi) - flux(p, eps, eta)) * d, axis=-1)
    dn2 = _sq(d)
    high = c_high * _safe_pow(dn2, p / 2.0)
    low = c_low * np.power(1.0 + _sq(xi) + _sq(eta), (p - 2.0) / 2.0) * dn2
    return lhs, np.where(p >= 2.0, high, low)


def coercivity_constant(p):
    """Constant of the p < 2 coercivity bound, ``1 / (2 * 4**(2/p - 1))``."""
    return 0.5 * np.power(4.0, 1.0 - 2.0 / np.asarray(p, dtype=float))


def check_coercivity(p, eps, xi):
    p = np.asarray(p, dtype=float)
    xi = np.asarray(xi, dtype=float)
    lhs = np.sum(flux(p, eps, xi) * xi, axis=-1)
    mod = _safe_pow(_sq(xi), p / 2.0)
    rhs = np.where(p >= 2.0, mod, coercivity_constant(p) * mod - 2.0 * np.power(eps, p))
    return lhs, rhs


def growth_constant(p_max: float) -> float:
    return 2.0 ** ((p_max - 1.0) / 2.0)


def check_growth(p, eps, xi, p_max: float):
    """``(lhs, rhs)`` of ``|F| <= C|xi|^(p-1) + C``; holds iff lhs <= rhs."""
    p = np.asarray(p, dtype=float)
    xi = np.asarray(xi, dtype=float)
    lhs = np.sqrt(_sq(flux(p, eps, xi)))
    c = growth_constant(p_max)
    rhs = c * _safe_pow(_sq(xi), (p - 1.0) / 2.0) + c
    return lhs, rhs


def check_flux_space_continuity(p1, p2, eps, xi, dist, constant: float, lipschitz: float = 1.0):
    """``(lhs, rhs)`` of the exponent-continuity bound; holds iff lhs <= rhs.

    ``dist`` stands for ``|x-y|^beta + |t-tau|^(beta/2)`` with ``|p1-p2| <= lipschitz*dist``.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    xi = np.asarray(xi, dtype=float)
    lhs = np.sqrt(_sq(flux(p1, eps, xi) - flux(p2, eps, xi)))
    x2 = _sq(xi)
    rhs = (constant * lipschitz * np.asarray(dist) * (1.0 + np.log1p(x2))
           * (1.0 + _safe_pow(x2, np.maximum(p1, p2) / 2.0)))
    return lhs, rhs


@dataclass
class LinearizationCoeffs:
    a_matrix: np.ndarray
    h: np.ndarray
    g_vector: np.ndarray
    prefactor: np.ndarray


def linearization(p, eps, grad_v, v, q, s, a, c, grad_p) -> LinearizationCoeffs:
    """Coefficients of the frozen-coefficient linear operator at the iterate v.

    The non-divergence operator ``prefactor * sum a_ij D_ij u + h u + g . grad u``
    reproduces ``div F_eps(grad u) + F_eps(u, grad u)`` when ``v = u``; this needs the
    factor 1/2 in front of the log term of g.
    """
    grad_v = np.asarray(grad_v, dtype=float)
    p = np.asarray(p, dtype=float)
    n = grad_v.shape[-1]
    S = np.square(eps) + _sq(grad_v)
    outer = grad_v[..., :, None] * grad_v[..., None, :]
    a_matrix = np.eye(n) + ((p - 2.0) / np.maximum(S, LOG_FLOOR))[..., None, None] * outer
    prefactor = _safe_pow(S, (p - 2.0) / 2.0)
    h = np.asarray(a, dtype=float) * _safe_pow(np.square(eps) + np.square(v), (np.asarray(q) - 2.0) / 2.0)
    logS = np.log(np.maximum(S, LOG_FLOOR))
    g = (0.5 * prefactor * logS)[..., None] * np.asarray(grad_p, dtype=float) \
        + _safe_pow(S, (np.asarray(s) - 2.0) / 2.0)[..., None] * np.asarray(c, dtype=float)
    return LinearizationCoeffs(a_matrix, h, g, prefactor)


def source(eps, u, grad_u, q, s, a, c) -> np.ndarray:
    """Regularized source a(eps^2+u^2)^((q-2)/2) u + (eps^2+|grad u|^2)^((s-2)/2) c.grad u."""
    u = np.asarray(u, dtype=float)
    grad_u = np.asarray(grad_u, dtype=float)
    zero = np.asarray(a, dtype=float) * _safe_pow(np.square(eps) + np.square(u), (np.asarray(q) - 2.0) / 2.0) * u
    first = _safe_pow(np.square(eps) + _sq(grad_u), (np.asarray(s) - 2.0) / 2.0) \
        * np.sum(np.asarray(c, dtype=float) * grad_u, axis=-1)
    return zero + first
