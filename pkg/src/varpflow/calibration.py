"""Brute-force calibration of the non-explicit constants, and the constants file.

Lower-bound constants (monotonicity, Hessian form) are 0.9 times the observed
infimum; upper-bound constants (continuity, combined bound, interpolation
budget) are a safety factor times the observed supremum.
"""
from __future__ import annotations

import itertools
from pathlib import Path
from typing import Sequence

import numpy as np

from . import flux_algebra as fx
from .errors import ConfigError
from .estimates import combined_terms, interpolation_terms
from .grid import Grid, GridFunction
from .hessian import hessian_bound_samples
from .properties import draw_continuity_samples, draw_flux_samples, p_range_for

DEFAULT_PATH = Path(__file__).with_name("data") / "constants.txt"
LOWER_FACTOR = 0.9
UPPER_FACTOR = 1.1
CORPUS_FACTOR = 2.0
# one p-range for every N: the N = 1 range contains the others
CAL_P_RANGE = (p_range_for(1)[0], 5.0)
REQUIRED = ("mono_c_high", "mono_c_low", "continuity_c", "hessian_c_n2", "hessian_c_n3",
            "combined_c1", "combined_c2", "interp_c")


def load_constants(path: str | Path | None = None) -> dict[str, float]:
    """Parse ``name = value`` lines; ``#`` starts a comment."""
    path = Path(path) if path is not None else DEFAULT_PATH
    if not path.is_file():
        raise ConfigError(f"no calibrated constants at {path}; run `varpflow calibrate`")
    out = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'name = value'")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: {value.strip()!r} is not a number") from None
    missing = [k for k in REQUIRED if k not in out]
    if missing:
        raise ConfigError(f"{path} lacks {', '.join(missing)}; run `varpflow calibrate`")
    return out


def write_constants(consts: dict[str, float], path: str | Path, header: Sequence[str] = ()) -> None:
    lines = [f"# {h}" for h in header]
    lines += [f"{k} = {consts[k]!r}" for k in sorted(consts)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _monotonicity(rng, trials):
    hi_r, lo_r = [], []
    for dim in (1, 2, 3):
        p, eps, xi, eta = draw_flux_samples(rng, trials, dim, CAL_P_RANGE)
        lhs, _ = fx.check_monotonicity(p, eps, xi, eta, 1.0, 1.0)
        d2 = np.sum((xi - eta) ** 2, axis=-1)
        # tiny differences are pure rounding noise
        ok = d2 > 1e-16 * (1.0 + np.sum(xi * xi, axis=-1))
        hi = (p >= 2) & ok
        lo = (p < 2) & ok
        hi_r.append(lhs[hi] / d2[hi] ** (p[hi] / 2))
        base = 1.0 + np.sum(xi * xi, axis=-1) + np.sum(eta * eta, axis=-1)
        lo_r.append(lhs[lo] / (base[lo] ** ((p[lo] - 2) / 2) * d2[lo]))
    # structured: antipodal pairs at p = 5 realise the p >= 2 infimum
    t = np.geomspace(1e-3, 10.0, 200)
    p5 = np.full_like(t, CAL_P_RANGE[1])
    lhs, _ = fx.check_monotonicity(p5, 1e-4, t[:, None], -t[:, None], 1.0, 1.0)
    hi_r.append(lhs / (2 * t) ** p5)
    return float(np.concatenate(hi_r).min()), float(np.concatenate(lo_r).min())


def _continuity(rng, trials):
    sup = 0.0
    for dim in (1, 2, 3):
        p1, p2, eps, xi, dist = draw_continuity_samples(rng, trials, dim, CAL_P_RANGE)
        lhs, rhs = fx.check_flux_space_continuity(p1, p2, eps, xi, dist, 1.0)
        sup = max(sup, float(np.max(lhs / rhs)))
    # structured: small eps, |xi| ~ eps, smallest p
    eps = np.geomspace(1e-4, 1.0, 60)
    r = np.geomspace(1e-3, 10.0, 60)
    E, R = np.meshgrid(eps, r, indexing="ij")
    for p in (CAL_P_RANGE[0], 1.6, 2.5, CAL_P_RANGE[1]):
        d = 1e-3
        lhs, rhs = fx.check_flux_space_continuity(p, p + d, E, (E * R)[..., None], d, 1.0)
        sup = max(sup, float(np.max(lhs / rhs)))
    return sup


def _hessian(rng, trials, dim):
    ratios, _, _ = hessian_bound_samples(p_range_for(dim), dim, 0.99, trials, rng)
    return float(ratios.min())


def corpus(nodes=(33, 65)):
    """Manufactured slices ``(u, p, eps)`` for the combined and interpolation bounds."""
    for n in nodes:
        g = Grid.box((n, n), 1.0)
        X, Y = g.mesh()
        for A, (k, l), p0, L, eps in itertools.product(
                (0.25, 1.0, 2.0, 4.0), ((1, 1), (1, 2), (2, 1)), (1.6, 2.0, 2.5, 3.0),
                (0.0, 0.3, 1.0), (0.1, 0.025, 0.0125)):
            u = A * np.sin(k * np.pi * X) * np.sin(l * np.pi * Y)
            u[g.boundary_mask()] = 0.0
            yield GridFunction(u, g), p0 + L * (X - 0.5), eps


def _corpus_constants(c1, r_values):
    c2 = 0.0
    interp = 0.0
    for u, p, eps in corpus():
        div_sq, wh = combined_terms(u, p, eps)
        c2 = max(c2, float(np.max(c1 * wh - div_sq)))
        for r in r_values:
            interp = max(interp, float(interpolation_terms(u, p, eps, r)))
    return c2, interp


def calibrate(seed: int = 0, trials: int = 200_000) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    hi, lo = _monotonicity(rng, trials)
    cont = _continuity(rng, trials)
    h2 = _hessian(rng, min(trials, 50_000), 2)
    h3 = _hessian(rng, min(trials, 50_000), 3)
    c1 = 0.5 * LOWER_FACTOR * h2
    c2, interp = _corpus_constants(c1, (0.25, 0.5, 0.9))
    return {
        "mono_c_high": LOWER_FACTOR * hi,
        "mono_c_low": LOWER_FACTOR * lo,
        "continuity_c": UPPER_FACTOR * cont,
        "hessian_c_n2": LOWER_FACTOR * h2,
        "hessian_c_n3": LOWER_FACTOR * h3,
        "combined_c1": c1,
        "combined_c2": CORPUS_FACTOR * max(c2, 0.0),
        "interp_c": CORPUS_FACTOR * interp,
    }
