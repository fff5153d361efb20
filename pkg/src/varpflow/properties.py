"""Randomized property sweeps over the pointwise inequalities.

Each sweep draws its samples from a ``numpy.random.Generator`` so that a seed
replays a run exactly, and returns a :class:`SweepOutcome` counting the
samples where the inequality fails.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import flux_algebra as fx
from .exponents import p_lower_bound
from .hessian import hessian_bound_samples, log_inequality_logs

P_TOP = 5.0
EPS_RANGE = (1e-4, 1.0)
RADIUS = 10.0


@dataclass
class SweepOutcome:
    name: str
    dim: int
    trials: int
    violations: int
    worst_margin: float

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def line(self) -> str:
        status = "ok" if self.ok else "FAIL"
        return (f"{self.name:<22} N={self.dim} trials={self.trials:<7d} violations={self.violations:<5d} "
                f"worst_margin={self.worst_margin:.3e} {status}")


def p_range_for(dim: int, top: float = P_TOP) -> tuple[float, float]:
    return p_lower_bound(dim) + 0.01, top


def _vectors(rng, n, dim, radius=RADIUS):
    """Random directions with log-uniform magnitudes in [1e-6, radius]; a few exact zeros."""
    d = rng.standard_normal((n, dim))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    mag = np.exp(rng.uniform(np.log(1e-6), np.log(radius), n))
    mag = np.where(rng.random(n) < 0.3, rng.uniform(0.0, radius, n), mag)
    mag[rng.random(n) < 0.01] = 0.0
    return d * mag[:, None]


def draw_flux_samples(rng, n, dim, p_range=None, eps_range=EPS_RANGE):
    """``(p, eps, xi, eta)`` with a share of near-collinear and antipodal pairs."""
    lo, hi = p_range or p_range_for(dim)
    p = rng.uniform(lo, hi, n)
    ends = rng.random(n)
    p = np.where(ends < 0.05, lo, np.where(ends < 0.1, hi, np.where(ends < 0.13, 2.0, p)))
    eps = np.exp(rng.uniform(np.log(eps_range[0]), np.log(eps_range[1]), n))
    xi = _vectors(rng, n, dim)
    eta = _vectors(rng, n, dim)
    kind = rng.random(n)
    near = kind < 0.15
    eta[near] = xi[near] * (1.0 + rng.uniform(-1e-2, 1e-2, (int(near.sum()), 1)))
    anti = (kind >= 0.15) & (kind < 0.25)
    eta[anti] = -xi[anti]
    return p, eps, xi, eta


def monotonicity_sweep(consts, dim, trials, rng, p_range=None) -> SweepOutcome:
    p, eps, xi, eta = draw_flux_samples(rng, trials, dim, p_range)
    lhs, rhs = fx.check_monotonicity(p, eps, xi, eta, consts["mono_c_high"], consts["mono_c_low"])
    margin = lhs - rhs
    # rounding floor: lhs is a difference of O(|F|) numbers
    tol = 1e-12 * (1.0 + np.abs(np.sum((fx.flux(p, eps, xi) + fx.flux(p, eps, eta)) * (xi - eta), axis=-1)))
    bad = (margin < -tol) | (lhs < -tol)
    return SweepOutcome("monotonicity", dim, trials, int(bad.sum()), _worst(margin, rhs))


def coercivity_sweep(consts, dim, trials, rng, p_range=None) -> SweepOutcome:
    p, eps, xi, _ = draw_flux_samples(rng, trials, dim, p_range)
    lhs, rhs = fx.check_coercivity(p, eps, xi)
    margin = lhs - rhs
    bad = margin < -1e-12 * (1.0 + np.abs(lhs))
    return SweepOutcome("coercivity", dim, trials, int(bad.sum()), _worst(margin, np.abs(rhs)))


def growth_sweep(consts, dim, trials, rng, p_range=None) -> SweepOutcome:
    lo, hi = p_range or p_range_for(dim)
    p, eps, xi, _ = draw_flux_samples(rng, trials, dim, (lo, hi))
    lhs, rhs = fx.check_growth(p, eps, xi, hi)
    margin = rhs - lhs
    bad = margin < -1e-12 * (1.0 + lhs)
    return SweepOutcome("growth", dim, trials, int(bad.sum()), _worst(margin, rhs))


def draw_continuity_samples(rng, n, dim, p_range=None, lipschitz=1.0):
    lo, hi = p_range or p_range_for(dim)
    p1, eps, xi, _ = draw_flux_samples(rng, n, dim, (lo, hi))
    step = np.exp(rng.uniform(np.log(1e-6), np.log(hi - lo), n))
    p2 = np.clip(p1 + rng.choice([-1.0, 1.0], n) * step, lo, hi)
    # dist at its smallest admissible value in most samples
    dist = np.abs(p1 - p2) / lipschitz * np.where(rng.random(n) < 0.7, 1.0, 1.0 + rng.exponential(1.0, n))
    dist = np.maximum(dist, 1e-300)
    return p1, p2, eps, xi, dist


def continuity_sweep(consts, dim, trials, rng, p_range=None, lipschitz=1.0) -> SweepOutcome:
    p1, p2, eps, xi, dist = draw_continuity_samples(rng, trials, dim, p_range, lipschitz)
    lhs, rhs = fx.check_flux_space_continuity(p1, p2, eps, xi, dist, consts["continuity_c"], lipschitz)
    margin = rhs - lhs
    bad = margin < -1e-12 * (1.0 + lhs)
    return SweepOutcome("space-continuity", dim, trials, int(bad.sum()), _worst(margin, rhs))


def ellipticity_sweep(dim, trials, rng, p_range=None, tol=1e-10) -> SweepOutcome:
    lo, hi = p_range or p_range_for(dim)
    p, eps, xi, _ = draw_flux_samples(rng, trials, dim, (lo, hi))
    zeros = np.zeros(dim)
    co = fx.linearization(p, eps, xi, 0.0, 2.0, 2.0, 0.0, zeros, zeros)
    ev = np.linalg.eigvalsh(co.a_matrix)
    lo_b = np.minimum(p - 1.0, 1.0)[:, None] - tol
    hi_b = np.maximum(p - 1.0, 1.0)[:, None] + tol
    margin = np.minimum(ev - lo_b, hi_b - ev).min(axis=-1)
    sym = np.abs(co.a_matrix - np.swapaxes(co.a_matrix, -1, -2)).max(axis=(-1, -2)) <= 1e-12
    bad = (margin < 0) | ~sym
    return SweepOutcome("ellipticity", dim, trials, int(bad.sum()), float(margin.min()))


def hessian_sweep(consts, dim, trials, rng, p_range=None, lambda_max=0.99) -> SweepOutcome:
    lo, hi = p_range or p_range_for(dim)
    ratios, p, _ = hessian_bound_samples((lo, hi), dim, lambda_max, trials, rng)
    c = consts.get(f"hessian_c_n{dim}", consts.get("hessian_c"))
    margin = ratios - c
    bad = margin < -1e-12
    return SweepOutcome("hessian-lower-bound", dim, trials, int(bad.sum()), float(margin.min()))


def log_sweep(trials, rng, gamma_range=(0.05, 2.0), sigma_range=(0.05, 1.0)) -> SweepOutcome:
    """Log inequality on a few random (gamma, sigma) pairs; margins are log(rhs / lhs)."""
    pairs = max(1, min(16, trials // 1000))
    per = max(1, trials // pairs)
    violations = 0
    worst = np.inf
    for _ in range(pairs):
        g = float(np.round(rng.uniform(*gamma_range), 3))
        s = float(np.round(rng.uniform(*sigma_range), 3))
        x = 10.0 ** rng.uniform(-300, 300, per)
        log_lhs, log_rhs = log_inequality_logs(x, g, s)
        m = log_rhs - log_lhs
        violations += int((m < 0).sum())
        worst = min(worst, float(m.min()))
    return SweepOutcome("log-inequality", 0, pairs * per, violations, worst)


def _worst(margin, scale) -> float:
    scale = np.maximum(np.abs(scale), 1e-300)
    return float(np.min(margin / scale)) if margin.size else 0.0


def run_all(consts, trials, seed, dims=(1, 2, 3)) -> list[SweepOutcome]:
    """Every sweep for every dimension, each from its own child stream of ``seed``."""
    out = []
    streams = iter(np.random.SeedSequence(seed).spawn(7 * len(dims) + 1))
    for n in dims:
        out.append(monotonicity_sweep(consts, n, trials, np.random.default_rng(next(streams))))
        out.append(coercivity_sweep(consts, n, trials, np.random.default_rng(next(streams))))
        out.append(growth_sweep(consts, n, trials, np.random.default_rng(next(streams))))
        out.append(continuity_sweep(consts, n, trials, np.random.default_rng(next(streams))))
        out.append(ellipticity_sweep(n, trials, np.random.default_rng(next(streams))))
        if n >= 2:
            out.append(hessian_sweep(consts, n, min(trials, 10_000), np.random.default_rng(next(streams))))
        else:
            next(streams)
        next(streams)
    out.append(log_sweep(min(trials, 16_000), np.random.default_rng(next(streams))))
    return out
