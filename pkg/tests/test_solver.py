import numpy as np
import pytest
from dataclasses import replace

from varpflow.errors import DimensionError, ParameterError, SolverError
from varpflow.exponents import ExponentField
from varpflow.fixtures import (heat_exact, heat_problem, heat_space_discrete_exact, heat_time_discrete_exact,
                               manufactured_problem, mms_exact, sweep_problem)
from varpflow.grid import SPACE_TIME, SPATIAL, Grid, GridFunction
from varpflow.solver import (ProblemData, SolverConfig, continuation_sweep, homotopy_solve, smooth_data, solve,
                             step_linear)

MODES = ("picard-divergence", "frozen-nondivergence")


def orders(errs):
    e = np.asarray(errs)
    return np.log2(e[:-1] / e[1:])


def test_config_validation():
    with pytest.raises(ParameterError):
        SolverConfig(mode="explicit")
    with pytest.raises(ParameterError):
        SolverConfig(damping=0.0)
    with pytest.raises(ParameterError):
        SolverConfig(picard_tol=-1.0)


def test_problem_validation():
    d = heat_problem(nodes=9, dt=0.05, T=0.1)
    with pytest.raises(ParameterError):
        replace(d, eps=0.0)
    with pytest.raises(ParameterError):
        replace(d, tau=1.5)
    bad = d.u0.values.copy()
    bad[0] = 1.0
    with pytest.raises(ParameterError):
        replace(d, u0=GridFunction(bad, d.u0.grid))
    with pytest.raises(DimensionError):
        replace(d, u0=GridFunction(np.zeros(5), Grid.box(5)))


def test_three_dimensional_problems_rejected():
    g = Grid.box((5, 5, 5), T=0.1, dt=0.1)
    fld = ExponentField.constant(g, 2.0, 1.5, 1.5, 0.0, [0.0, 0.0, 0.0])
    d = heat_problem(nodes=9, dt=0.05, T=0.1)
    with pytest.raises(DimensionError):
        ProblemData(GridFunction(np.zeros(g.shape), g.spatial(), SPATIAL),
                    GridFunction(np.zeros(g.space_time_shape), g, SPACE_TIME), fld, d.params, 0.1)


@pytest.mark.parametrize("mode", MODES)
def test_tau_zero_gives_zero(mode):
    d = replace(manufactured_problem(nodes=9, dt=0.1, T=0.2), tau=0.0)
    r = solve(d, SolverConfig(mode=mode))
    assert r.converged
    assert np.all(r.u.values == 0.0)


def dense_heat_step(u_prev, n, dt):
    # independent dense assembly of (I/dt - Laplacian) on the interior of a 2-D box
    h = 1.0 / (n - 1)
    m = n - 2
    T = (np.diag(np.full(m, 2.0)) - np.diag(np.ones(m - 1), 1) - np.diag(np.ones(m - 1), -1)) / h ** 2
    L = np.kron(T, np.eye(m)) + np.kron(np.eye(m), T)
    A = np.eye(m * m) / dt + L
    x = np.linalg.solve(A, u_prev[1:-1, 1:-1].ravel() / dt)
    out = np.zeros((n, n))
    out[1:-1, 1:-1] = x.reshape(m, m)
    return out


@pytest.mark.parametrize("mode", MODES)
def test_step_matches_dense_oracle(mode):
    n, dt = 11, 0.01
    g = Grid.box((n, n), T=dt, dt=dt)
    X, Y = g.mesh()
    u0 = np.sin(np.pi * X) * np.sin(2 * np.pi * Y) + 0.3 * X * (1 - X) * Y * (1 - Y)
    u0[g.boundary_mask()] = 0.0
    fld = ExponentField.constant(g, 2.0, 1.5, 1.5, 0.0, [0.0, 0.0])
    d0 = manufactured_problem(nodes=n, dt=dt, T=dt)
    d = ProblemData(GridFunction(u0, g.spatial(), SPATIAL), GridFunction(np.zeros(g.space_time_shape), g, SPACE_TIME),
                    fld, d0.params, 0.1)
    prev = GridFunction(u0, g.spatial())
    got = step_linear(prev, prev, d, 1, SolverConfig(mode=mode)).values
    assert np.allclose(got, dense_heat_step(u0, n, dt), rtol=1e-10, atol=1e-12)


def test_step_index_checked():
    d = heat_problem(nodes=9, dt=0.05, T=0.1)
    with pytest.raises(ParameterError):
        step_linear(d.u0, d.u0, d, 0, SolverConfig())


def test_heat_oracle():
    d = heat_problem()
    r = solve(d)
    assert r.converged
    assert np.abs(r.u.values - heat_exact(d.grid)).max() <= 5e-3


def test_heat_spatial_order():
    errs = []
    for n in (17, 33, 65):
        d = heat_problem(nodes=n, dt=0.01, T=0.1)
        errs.append(np.abs(solve(d).u.values - heat_time_discrete_exact(d.grid)).max())
    assert np.all(orders(errs) >= 1.8)


def test_heat_temporal_order():
    errs = []
    for dt in (0.02, 0.01, 0.005):
        d = heat_problem(nodes=33, dt=dt, T=0.1)
        errs.append(np.abs(solve(d).u.values - heat_space_discrete_exact(d.grid)).max())
    assert np.all(orders(errs) >= 0.9)


def test_heat_linear_picard_one_step():
    # p = 2 and no source: the linearization is exact, a second iteration only confirms it
    r = solve(heat_problem(nodes=17, dt=0.01, T=0.05))
    assert max(r.per_step_iters) <= 2


def test_manufactured_recovery():
    errs = []
    for n in (33, 65):
        d = manufactured_problem(nodes=n)
        r = solve(d)
        assert r.converged
        errs.append(np.abs(r.u.values - mms_exact(d.grid)).max())
    assert errs[0] <= 1e-2
    assert errs[1] < errs[0]


def test_modes_agree_to_discretization_error():
    gaps = []
    for n in (33, 65):
        d = manufactured_problem(nodes=n)
        a = solve(d, SolverConfig(mode=MODES[0])).u.values
        b = solve(d, SolverConfig(mode=MODES[1])).u.values
        gaps.append(np.abs(a - b).max())
    assert gaps[1] <= 1e-3
    assert gaps[1] < gaps[0] / 3


@pytest.mark.parametrize("mode", MODES)
def test_dirichlet_and_initial_data_preserved(mode):
    d = manufactured_problem(nodes=17, dt=0.05, T=0.1)
    r = solve(d, SolverConfig(mode=mode))
    assert np.all(r.u.values[:, d.grid.boundary_mask()] == 0.0)
    assert np.array_equal(r.u.values[0], d.u0.values)


def test_homotopy_matches_direct_solve():
    d = sweep_problem(nodes=17, dt=0.02, T=0.06)
    a = solve(d)
    b = homotopy_solve(d, tau_steps=3)
    assert a.converged and b.converged
    assert np.abs(a.u.values - b.u.values).max() < 1e-6


def test_tau_scales_linear_problem():
    d = heat_problem(nodes=17, dt=0.01, T=0.05)
    full = solve(d).u.values
    half = solve(replace(d, tau=0.5)).u.values
    assert np.allclose(half, 0.5 * full, rtol=1e-10, atol=1e-14)


def test_homotopy_rejects_steps():
    with pytest.raises(ParameterError):
        homotopy_solve(heat_problem(nodes=9, dt=0.05, T=0.1), tau_steps=0)


def test_nonconvergence_reported():
    d = sweep_problem(nodes=17, dt=0.02, T=0.04, eps=0.0125)
    r = solve(d, SolverConfig(picard_max_iters=1, picard_tol=1e-14))
    assert not r.converged
    assert r.per_step_iters == [1, 1]


def test_linear_residual_check_raises():
    d = heat_problem(nodes=33, dt=0.01, T=0.02)
    with pytest.raises(SolverError) as info:
        solve(d, SolverConfig(linear_solver="cg", linear_solver_tol=1e-30))
    assert info.value.residual > 0


def test_cg_matches_direct():
    d = sweep_problem(nodes=17, dt=0.02, T=0.04)
    a = solve(d).u.values
    b = solve(d, SolverConfig(linear_solver="cg")).u.values
    assert np.abs(a - b).max() < 1e-7


def test_smooth_data_level_zero_identity():
    d = sweep_problem(nodes=9, dt=0.05, T=0.1)
    assert smooth_data(d, 0) is d
    s = smooth_data(d, 2)
    assert np.all(s.u0.values[d.grid.boundary_mask()] == 0.0)
    assert s.exponents.p.min() >= d.exponents.p.min() - 2.0 ** -2 - 1e-12
    assert np.all(s.exponents.p <= d.exponents.p)


def test_sweep_heat_is_eps_independent():
    # p = 2 makes the flux independent of eps
    d = heat_problem(nodes=17, dt=0.01, T=0.05)
    cells = continuation_sweep(d, None, [0.1, 0.05, 0.025], [0])
    ref = cells[(0.1, 0)].result.u.values
    for c in cells.values():
        assert c.converged
        assert np.abs(c.result.u.values - ref).max() < 1e-12


def test_sweep_jobs_deterministic():
    d = sweep_problem(nodes=9, dt=0.05, T=0.1)
    a = continuation_sweep(d, None, [0.1, 0.05], [0, 1], jobs=1)
    b = continuation_sweep(d, None, [0.1, 0.05], [0, 1], jobs=2)
    assert a.keys() == b.keys()
    for k in a:
        assert np.array_equal(a[k].result.u.values, b[k].result.u.values)


def test_sweep_eps_order_checked():
    with pytest.raises(ParameterError):
        continuation_sweep(heat_problem(nodes=9, dt=0.05, T=0.1), None, [0.05, 0.1], [0])


def test_stiff_case_homotopy():
    from varpflow.fixtures import _params

    d = sweep_problem(nodes=33, dt=0.01, T=0.05)
    fld = ExponentField.from_expressions(d.grid, "3 + x", "1.5", "1.5", "0.5", ["0.5", "0.25"])
    d = replace(d, exponents=fld, params=_params(fld), eps=0.01)
    cfg = SolverConfig(picard_max_iters=30)
    direct = solve(d, cfg)
    ramp = homotopy_solve(d, cfg)
    assert ramp.converged
    if direct.converged:
        assert np.abs(direct.u.values - ramp.u.values).max() < 1e-6
