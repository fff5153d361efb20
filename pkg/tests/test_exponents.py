import numpy as np
import pytest
from hypothesis import given, strategies as st

from varpflow.errors import DimensionError, ParameterError
from varpflow.exponents import (ExponentField, StructuralParams, discrete_lipschitz, mollify, p_lower_bound,
                                r_admissible_range, relaxed_params, validate_structure)
from varpflow.grid import Grid


def params(**kw):
    base = dict(p_min=2.0, p_max=2.0, q_min=1.5, q_max=1.5, s_min=1.5, s_max=1.5, mu=0.1, a_sup=1.0,
                c_sup=(1.0, 1.0), lipschitz_p=1.0, dim=2)
    base.update(kw)
    return StructuralParams(**base)


def test_lower_bound_values():
    assert p_lower_bound(1) == pytest.approx(4 / 3)
    assert p_lower_bound(2) == pytest.approx(1.5)
    assert p_lower_bound(3) == pytest.approx(1.6)


def test_low_p_is_reported_with_bound():
    g = Grid.box((5, 5))
    fld = ExponentField.constant(g, 1.4, 1.2, 1.2)
    rep = validate_structure(fld, params(p_min=1.4, p_max=1.4, q_min=1.2, q_max=1.2, s_min=1.2, s_max=1.2))
    msgs = [v.message for v in rep if v.code == "p_min"]
    assert msgs == ["p_min = 1.4 <= 2(N+1)/(N+2) = 1.5"]


def test_valid_example():
    # q+ = 1.5 < min{2, 3} - 0.2 and s+ = 1.5 <= 1.8
    g = Grid.box((5, 5))
    fld = ExponentField.constant(g, 2.0, 1.5, 1.5)
    assert validate_structure(fld, params()) == []


def test_dimension_mismatch():
    fld = ExponentField.constant(Grid.box(5), 2.0)
    with pytest.raises(DimensionError):
        validate_structure(fld, params())


def test_every_violation_listed_with_location():
    g = Grid.box((5, 5), T=0.1, dt=0.1)
    fld = ExponentField.from_expressions(g, "2 + 3*x", "1.5", "1.5", "2", ["0", "0"])
    rep = validate_structure(fld, params(p_max=4.0, lipschitz_p=1.0, mu=0.8))
    codes = {v.code for v in rep}
    assert {"mu", "a_range", "lipschitz", "q_max", "s_max", "p_range"} <= codes
    loc = next(v for v in rep if v.code == "p_range").location
    assert fld.p[loc] > 4.0


def test_validate_is_pure():
    g = Grid.box((5, 5))
    fld = ExponentField.from_expressions(g, "1.4 + x", "1.2", "1.2")
    p = params(p_min=1.4, p_max=2.0)
    before = fld.p.copy()
    assert validate_structure(fld, p) == validate_structure(fld, p)
    assert np.array_equal(before, fld.p)


def test_constant_lipschitz_zero():
    g = Grid.box((5, 5), T=0.2, dt=0.1)
    assert discrete_lipschitz(np.full(g.space_time_shape, 2.3), g) == 0.0


def test_lipschitz_of_linear_field():
    g = Grid.box((9, 5), T=0.2, dt=0.1)
    fld = ExponentField.from_expressions(g, "2 + 0.3*x + 0.5*t")
    assert discrete_lipschitz(fld.p, g) == pytest.approx(0.5)


@pytest.mark.parametrize("m", [1, 3, 8])
def test_mollify_constant(m):
    g = Grid.box((9, 9), T=0.2, dt=0.1)
    fld = ExponentField.constant(g, 2.0, 1.5, 1.7, 0.3, [0.1, -0.2])
    out = mollify(fld, m)
    assert np.allclose(out.p, 2.0 - 2.0 ** -m, rtol=0, atol=1e-14)
    assert np.allclose(out.q, 1.5) and np.allclose(out.s, 1.7) and np.allclose(out.a, 0.3)
    assert np.allclose(out.c[..., 1], -0.2)


def test_mollify_level_zero_rejected():
    with pytest.raises(ParameterError):
        mollify(ExponentField.constant(Grid.box(5), 2.0), 0)


def test_r_range():
    assert r_admissible_range(params(dim=2)) == (0.0, 1.0)
    assert r_admissible_range(params(dim=1, c_sup=(1,))) == (0.0, pytest.approx(4 / 3))
    assert r_admissible_range(params(dim=3, c_sup=(1, 1, 1))) == (0.0, pytest.approx(0.8))


def test_csv_round_trip(tmp_path):
    g = Grid.box((4, 3), T=0.1, dt=0.1)
    fld = ExponentField.from_expressions(g, "2 + x*y", "1.5 + 0.1*t", "1.6", "x", ["y", "0.5"])
    path = tmp_path / "ex.csv"
    fld.to_csv(path)
    back = ExponentField.from_csv(path, g)
    for name in ("p", "q", "s", "a", "c"):
        assert np.array_equal(getattr(back, name), getattr(fld, name))


random_fields = st.integers(min_value=0, max_value=2 ** 32 - 1).map(np.random.default_rng)


def _random_field(rng, nt=3):
    g = Grid.box((9, 7), T=0.1 * (nt - 1) if nt > 1 else 0.0, dt=0.1)
    # Lipschitz random field: cumulative sums of bounded increments
    inc = rng.uniform(-0.05, 0.05, g.space_time_shape)
    p = 2.2 + np.cumsum(np.cumsum(inc, axis=1), axis=2) * 0.3
    p = np.clip(p, 1.8, 3.0)
    q = np.clip(1.4 + 0.1 * rng.random(g.space_time_shape), 1.2, 1.5)
    return ExponentField(g, p, q, q, 0.5 * rng.random(g.space_time_shape), rng.uniform(-1, 1, g.space_time_shape + (2,)))


@given(random_fields)
def test_mollify_monotone_in_level_and_below_p(rng):
    fld = _random_field(rng)
    prev = None
    for m in range(1, 7):
        pm = mollify(fld, m).p
        assert np.all(pm <= fld.p + 1e-15)
        if prev is not None:
            assert np.all(prev <= pm + 1e-15)
        prev = pm


@given(random_fields)
def test_mollify_keeps_lipschitz_bound(rng):
    fld = _random_field(rng)
    lip = discrete_lipschitz(fld.p, fld.grid)
    for m in (1, 2, 5):
        assert discrete_lipschitz(mollify(fld, m).p, fld.grid) <= lip * (1 + 1e-12) + 1e-12


@given(random_fields)
def test_mollified_data_admissible_from_some_level(rng):
    fld = _random_field(rng)
    g = fld.grid
    prm = StructuralParams(p_min=float(fld.p.min()), p_max=float(fld.p.max()), q_min=float(fld.q.min()),
                           q_max=float(fld.q.max()), s_min=float(fld.s.min()), s_max=float(fld.s.max()),
                           mu=0.15, a_sup=float(np.abs(fld.a).max()),
                           c_sup=tuple(float(np.abs(fld.c[..., j]).max()) for j in range(2)),
                           lipschitz_p=discrete_lipschitz(fld.p, g), dim=2)
    assert validate_structure(fld, prm) == []
    assert any(validate_structure(mollify(fld, m), relaxed_params(prm, m)) == [] for m in range(1, 13))
