"""Second-order structure of the regularized flux.

Pointwise: the expansion of ``sum_ij D_i F^j D_j F^i`` into the principal
quadratic form in the Hessian plus three residual terms driven by grad p, and
the lower bound of that principal form. On grids: the interpolation inequality
and the elementary log bound used to absorb the residuals.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionError, ParameterError
from .flux_algebra import LOG_FLOOR, flux
from .grid import GridFunction, gradient, hessian, integrate


def principal_form(H, eta, p) -> np.ndarray:
    """``trace H^2 + 2(p-2)|H eta|^2 + (p-2)^2 (eta . H eta)^2``; vectorized over leading axes."""
    H = np.asarray(H, dtype=float)
    eta = np.asarray(eta, dtype=float)
    p = np.asarray(p, dtype=float)
    He = np.einsum("...ij,...j->...i", H, eta)
    tr = np.einsum("...ij,...ji->...", H, H)
    return tr + 2.0 * (p - 2.0) * np.sum(He * He, axis=-1) + (p - 2.0) ** 2 * np.sum(He * eta, axis=-1) ** 2


def _unit_vectors(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def hessian_bound_samples(p_range, dim, lambda_max, trials, rng, full_symmetric=True):
    """Ratios ``M / trace H^2`` on random and structured samples.

    Returns ``(ratios, p, lam)`` for the random diagonal sweep, the structured
    diagonal grid and (optionally) random full symmetric matrices.
    """
    lo, hi = p_range
    out_r, out_p, out_l = [], [], []

    def record(H, eta, p):
        tr = np.einsum("...ij,...ji->...", H, H)
        keep = tr > 0.0
        ratio = principal_form(H[keep], eta[keep], p[keep]) / tr[keep]
        out_r.append(ratio)
        out_p.append(p[keep])
        out_l.append(np.linalg.norm(eta[keep], axis=-1))

    if trials > 0:
        # rotation invariance: diagonal H suffices for the infimum
        d = rng.standard_normal((trials, dim))
        H = np.zeros((trials, dim, dim))
        H[:, np.arange(dim), np.arange(dim)] = d
        lam = lambda_max * np.where(rng.random(trials) < 0.5, 1.0, rng.random(trials) ** (1.0 / dim))
        eta = _unit_vectors(rng, trials, dim) * lam[:, None]
        p = np.where(rng.random(trials) < 0.1, lo, rng.uniform(lo, hi, trials))
        record(H, eta, p)

        if full_symmetric:
            A = rng.standard_normal((trials, dim, dim))
            Hs = 0.5 * (A + np.swapaxes(A, -1, -2))
            eta = _unit_vectors(rng, trials, dim) * lam[:, None]
            record(Hs, eta, p)

    # structured grid: one dominant eigenvalue aligned with eta, p at the ends
    angles = np.linspace(0.0, np.pi, 25)
    ps = np.unique(np.array([lo, hi, 0.5 * (lo + hi), min(max(2.0, lo), hi)]))
    rows = []
    for pv in ps:
        for th in angles:
            for ph in angles:
                d = np.zeros(dim)
                d[0] = 1.0
                if dim > 1:
                    d[1] = np.cos(th)
                if dim > 2:
                    d[2] = np.cos(ph)
                z = np.zeros(dim)
                z[0] = np.cos(ph)
                if dim > 1:
                    z[1] = np.sin(ph)
                rows.append((pv, d, z))
    p = np.array([r[0] for r in rows])
    H = np.zeros((len(rows), dim, dim))
    H[:, np.arange(dim), np.arange(dim)] = np.array([r[1] for r in rows])
    z = np.array([r[2] for r in rows])
    z /= np.linalg.norm(z, axis=-1, keepdims=True)
    record(H, z * lambda_max, p)
    return np.concatenate(out_r), np.concatenate(out_p), np.concatenate(out_l)


def hessian_lower_bound_constant(p_range, dim: int, lambda_max: float = 0.99, trials: int = 10_000,
                                 seed: int = 0) -> float:
    """Observed infimum of ``M(eta) / trace H^2`` over the sampled (H, eta, p)."""
    if not 0 < lambda_max < 1:
        raise ParameterError("lambda_max must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    ratios, _, _ = hessian_bound_samples(p_range, dim, lambda_max, trials, rng)
    return float(ratios.min())


@dataclass(frozen=True)
class HessianSample:
    """Pointwise second-order data; ``eta`` is derived from ``grad_u`` and ``eps``."""

    H: np.ndarray
    grad_u: np.ndarray
    grad_p: np.ndarray
    p: float
    eps: float

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        if not np.allclose(H, H.T, atol=1e-12, rtol=0.0):
            raise ParameterError("H must be symmetric")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "grad_u", np.asarray(self.grad_u, dtype=float))
        object.__setattr__(self, "grad_p", np.asarray(self.grad_p, dtype=float))
        if not self.eps > 0:
            raise ParameterError("eps must be positive")

    @property
    def eta(self) -> np.ndarray:
        return self.grad_u / np.sqrt(self.eps ** 2 + self.grad_u @ self.grad_u)

    def terms(self):
        return decomposition_terms(self.grad_u, self.H, self.grad_p, self.p, self.eps)


@dataclass
class DecompositionReport:
    lhs: float
    principal: float
    residuals: tuple[float, float, float]
    prefactor: float

    @property
    def rhs(self) -> float:
        return self.prefactor * (self.principal + sum(self.residuals))


def decomposition_terms(grad_u, H, grad_p, p, eps):
    """Analytic pieces ``(principal, J4, J5, J6, prefactor)`` at given derivatives."""
    grad_u = np.asarray(grad_u, dtype=float)
    H = np.asarray(H, dtype=float)
    grad_p = np.asarray(grad_p, dtype=float)
    S = eps ** 2 + grad_u @ grad_u
    root = np.sqrt(S)
    eta = grad_u / root
    logS = np.log(max(S, LOG_FLOOR))
    He = H @ eta
    # D_i F^j = G * (B_ij + R_ij) with B the Hessian part and R the grad-p part
    B = H + (p - 2.0) * np.outer(He, eta)
    R = 0.5 * logS * np.outer(grad_p, grad_u)
    j4 = float(np.sum(H * (R + R.T)))
    j5 = float(np.sum((B - H) * R.T + R * (B - H).T))
    j6 = float(np.sum(R * R.T))
    principal = float(principal_form(H, eta, p))
    return principal, j4, j5, j6, float(S ** (p - 2.0))


def decompose_at_point(u_values, p_field, eps: float, dx: float) -> DecompositionReport:
    """Both sides of the pointwise identity at the centre of a ``5 x ... x 5`` stencil.

    The left side differentiates the flux field numerically; the right side
    assembles the analytic terms from finite-difference derivatives of u and p.
    """
    u = np.asarray(u_values, dtype=float)
    pf = np.broadcast_to(np.asarray(p_field, dtype=float), u.shape)
    dim = u.ndim
    if any(n < 5 for n in u.shape):
        raise DimensionError("decompose_at_point needs at least 5 nodes per axis")
    c = tuple(n // 2 for n in u.shape)
    e = np.eye(dim, dtype=int)

    def at(arr, off):
        return arr[tuple(ci + oi for ci, oi in zip(c, off))]

    def grad_at(arr, off):
        return np.array([(at(arr, off + e[k]) - at(arr, off - e[k])) / (2 * dx) for k in range(dim)])

    def edge_grad(off, i, sign):
        # node 2 cells out along axis i: one-sided second order inward along i
        g = np.empty(dim)
        for k in range(dim):
            if k == i:
                g[k] = sign * (3 * at(u, off) - 4 * at(u, off - sign * e[i])
                               + at(u, off - 2 * sign * e[i])) / (2 * dx)
            else:
                g[k] = (at(u, off + e[k]) - at(u, off - e[k])) / (2 * dx)
        return g

    zero = np.zeros(dim, dtype=int)
    DF = np.empty((dim, dim))  # DF[i, j] = D_i F^j
    for i in range(dim):
        near = (flux(at(pf, e[i]), eps, grad_at(u, e[i]))
                - flux(at(pf, -e[i]), eps, grad_at(u, -e[i]))) / (2 * dx)
        far = (flux(at(pf, 2 * e[i]), eps, edge_grad(2 * e[i], i, 1))
               - flux(at(pf, -2 * e[i]), eps, edge_grad(-2 * e[i], i, -1))) / (4 * dx)
        # Richardson step removes the O(dx^2) term of differencing the flux
        DF[i] = (4 * near - far) / 3
    lhs = float(np.sum(DF * DF.T))

    H = np.empty((dim, dim))
    for k in range(dim):
        H[k, k] = (at(u, e[k]) - 2 * at(u, zero) + at(u, -e[k])) / dx**2
        for l in range(k + 1, dim):
            H[k, l] = H[l, k] = (at(u, e[k] + e[l]) - at(u, e[k] - e[l])
                                 - at(u, -e[k] + e[l]) + at(u, -e[k] - e[l])) / (4 * dx**2)
    principal, j4, j5, j6, pref = decomposition_terms(grad_at(u, zero), H, grad_at(pf, zero),
                                                      float(at(pf, zero)), eps)
    return DecompositionReport(lhs, principal, (j4, j5, j6), pref)


def interpolation_check(u: GridFunction, p_field, eps: float, r: float, delta: float):
    """``(lhs, delta * rhs, implied C)`` for the gradient interpolation inequality.

    lhs = int (eps^2+|grad u|^2)^(p-2+r/2) |grad u|^2,
    rhs = int (eps^2+|grad u|^2)^(p-2) |D^2 u|^2.
    """
    dim = u.grid.dim
    if not 0.0 < r < 4.0 / (dim + 2):
        raise ParameterError(f"r = {r} outside (0, {4.0 / (dim + 2):g})")
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1)")
    h = u.grid.spacing
    g = gradient(u.values, h)
    g2 = np.sum(g * g, axis=-1)
    S = eps ** 2 + g2
    p = np.broadcast_to(np.asarray(p_field, dtype=float), u.values.shape)
    lhs = integrate(S ** (p - 2.0 + r / 2.0) * g2, u.grid, u.kind)
    Hn = hessian(u.values, h)
    rhs = integrate(S ** (p - 2.0) * np.sum(Hn * Hn, axis=(-1, -2)), u.grid, u.kind)
    return lhs, delta * rhs, max(0.0, lhs - delta * rhs)


@lru_cache(maxsize=64)
def log_inequality_constant(gamma: float, sigma: float, points: int = 200_001) -> float:
    """Brute-force constant for ``s^gamma |ln s| <= C (1 + s^(gamma+sigma))`` on s in [1e-300, 1e300]."""
    x = np.linspace(-300.0, 300.0, points) * np.log(10.0)
    ratio = np.abs(x) * np.exp(gamma * x - np.logaddexp(0.0, (gamma + sigma) * x))
    return float(1.01 * ratio.max())


def log_inequality_logs(s_val, gamma: float, sigma: float):
    """Natural logs of both sides; finite over the whole float range of s."""
    if gamma <= 0 or sigma <= 0:
        raise ParameterError("gamma and sigma must be positive")
    s_val = np.asarray(s_val, dtype=float)
    if np.any(s_val <= 0):
        raise ParameterError("s must be positive")
    lns = np.log(s_val)
    with np.errstate(divide="ignore"):
        log_lhs = gamma * lns + np.log(np.abs(lns))
    log_rhs = np.log(log_inequality_constant(float(gamma), float(sigma))) + np.logaddexp(0.0, (gamma + sigma) * lns)
    return log_lhs, log_rhs


def log_inequality_check(s_val, gamma: float, sigma: float):
    """``(s^gamma |ln s|, C (1 + s^(gamma+sigma)))``; either side may overflow to inf for huge s."""
    log_lhs, log_rhs = log_inequality_logs(s_val, gamma, sigma)
    with np.errstate(over="ignore"):
        return np.exp(log_lhs), np.exp(log_rhs)
