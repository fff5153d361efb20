import numpy as np
import pytest

from varpflow.calibration import REQUIRED, calibrate, load_constants, write_constants
from varpflow.errors import ConfigError
from varpflow.properties import (ellipticity_sweep, hessian_sweep, log_sweep, monotonicity_sweep, p_range_for,
                                 run_all)


def test_packaged_constants_complete(constants):
    assert set(REQUIRED) <= set(constants)
    assert all(np.isfinite(constants[k]) and constants[k] > 0 for k in REQUIRED)
    assert constants["hessian_c_n2"] < 1 and constants["hessian_c_n3"] < 1


def test_constants_round_trip(tmp_path, constants):
    path = tmp_path / "c.txt"
    write_constants(constants, path, ["a comment"])
    assert load_constants(path) == constants
    assert path.read_text().startswith("# a comment\n")


def test_missing_constants_file(tmp_path):
    with pytest.raises(ConfigError):
        load_constants(tmp_path / "absent.txt")


def test_incomplete_constants_file(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("mono_c_high = 0.1\n")
    with pytest.raises(ConfigError, match="lacks"):
        load_constants(path)
    path.write_text("mono_c_high 0.1\n")
    with pytest.raises(ConfigError):
        load_constants(path)
    path.write_text("mono_c_high = abc\n")
    with pytest.raises(ConfigError):
        load_constants(path)


def test_calibration_deterministic_and_close_to_file(constants):
    a = calibrate(seed=3, trials=20_000)
    b = calibrate(seed=3, trials=20_000)
    assert a == b
    # fewer trials see a smaller sample: lower bounds can only be higher, upper bounds lower
    assert a["mono_c_high"] >= constants["mono_c_high"] * (1 - 1e-9)
    assert a["combined_c2"] == pytest.approx(constants["combined_c2"], rel=0.25)
    assert a["interp_c"] == pytest.approx(constants["interp_c"], rel=0.25)


def test_run_all_clean(constants):
    out = run_all(constants, 5_000, seed=11)
    assert [o.name for o in out].count("hessian-lower-bound") == 2
    bad = [o.line() for o in out if not o.ok]
    assert not bad


def test_run_all_seeded(constants):
    a = run_all(constants, 1_000, seed=5)
    b = run_all(constants, 1_000, seed=5)
    assert [o.worst_margin for o in a] == [o.worst_margin for o in b]


def test_corrupted_constant_detected(constants):
    bad = dict(constants, mono_c_high=100 * constants["mono_c_high"])
    out = monotonicity_sweep(bad, 2, 5_000, np.random.default_rng(0))
    assert out.violations > 0 and "FAIL" in out.line()
    bad = dict(constants, hessian_c_n2=1.5)
    assert hessian_sweep(bad, 2, 2_000, np.random.default_rng(0)).violations > 0


def test_ellipticity_bracket():
    for dim in (1, 2, 3):
        assert ellipticity_sweep(dim, 10_000, np.random.default_rng(dim)).ok


def test_log_sweep_clean():
    out = log_sweep(8_000, np.random.default_rng(0))
    assert out.ok and out.worst_margin >= 0


def test_p_range_for():
    lo, hi = p_range_for(2)
    assert lo == pytest.approx(1.5 + 0.01) and hi == 5.0
