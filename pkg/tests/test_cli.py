from pathlib import Path

import numpy as np
import pytest

from varpflow.artifacts import read_binary, read_csv
from varpflow.calibration import DEFAULT_PATH, load_constants, write_constants
from varpflow.cli import main

DATA = DEFAULT_PATH.parent
GOLDEN = Path(__file__).parent / "golden" / "heat"

SMALL_SWEEP = """
[grid]
nodes = 9, 9
T = 0.1
dt = 0.05
[exponents]
p = 2.5 + 0.3*x
q = 1.5
s = 1.5
a = 0.5
c1 = 0.5
c2 = 0.25
[data]
u0 = sin(pi*x)*sin(pi*y)
f = 1
[sweep]
eps = {eps}
m_levels = 0, 2
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_validate_exit_codes(capsys):
    assert main(["validate", str(DATA / "sweep.ini")]) == 0
    assert "valid" in capsys.readouterr().out
    assert main(["validate", str(DATA / "bad_p.ini")]) == 1
    assert "2(N+1)/(N+2) = 1.5" in capsys.readouterr().out


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    assert main(["solve", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2
    assert main(["solve", write(tmp_path, "[grid]\nnodes = 9\n"), "--out", str(tmp_path)]) == 2


def test_solve_heat_golden_bytes(tmp_path):
    assert main(["solve", str(DATA / "heat.ini"), "--out", str(tmp_path), "--binary"]) == 0
    for name in ("solution.csv", "iterations.csv", "report.csv", "solution.bin"):
        assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_solve_heat_artifacts_content(tmp_path):
    main(["solve", str(DATA / "heat.ini"), "--out", str(tmp_path), "--binary", "--seed", "9"])
    header, rows = read_csv(tmp_path / "solution.csv")
    assert "seed = 9" in header
    assert len(rows) == 17 * 11
    u = read_binary(tmp_path / "solution.bin")
    assert u.shape == (17, 1, 11)
    x = np.linspace(0, 1, 17)
    exact = np.sin(np.pi * x)[:, None] * np.exp(-np.pi ** 2 * np.linspace(0, 0.1, 11))[None]
    assert np.abs(u[:, 0] - exact).max() < 0.05


def test_solve_nonconvergence_exit(tmp_path):
    text = SMALL_SWEEP.format(eps="0.1") + "[solver]\npicard_max_iters = 1\npicard_tol = 1e-15\n"
    assert main(["solve", write(tmp_path, text), "--out", str(tmp_path)]) == 4


def test_sweep_byte_identical(tmp_path):
    cfg = write(tmp_path, SMALL_SWEEP.format(eps="0.1, 0.05, 0.025"))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", cfg, "--out", str(a), "--seed", "3"]) == 0
    assert main(["sweep", cfg, "--out", str(b), "--seed", "3", "--jobs", "2"]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["grad_cauchy.csv", "sweep_reports.csv", "sweep_summary.txt", "sweep_verdict.csv"]
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_verify_and_report(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_SWEEP.format(eps="0.1, 0.05, 0.025"))
    assert main(["verify", cfg, "--out", str(tmp_path / "v")]) == 0
    assert "verdict: pass" in capsys.readouterr().out
    assert main(["report", str(tmp_path / "v" / "sweep_reports.csv")]) == 0
    assert main(["report", str(tmp_path / "v" / "sweep_reports.csv"), "--threshold", "0.5"]) == 1
    assert main(["report", str(tmp_path / "nothing.csv")]) == 2


def test_verify_insufficient_data(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_SWEEP.format(eps="0.1"))
    assert main(["verify", cfg, "--out", str(tmp_path / "v")]) == 5
    assert "insufficient data" in capsys.readouterr().err


@pytest.mark.slow
def test_proptest_default_trials():
    assert main(["proptest"]) == 0


def test_proptest_codes(tmp_path, capsys):
    assert main(["proptest", "--trials", "2000"]) == 0
    consts = load_constants()
    bad = tmp_path / "bad.txt"
    write_constants(dict(consts, mono_c_high=100 * consts["mono_c_high"]), bad)
    assert main(["proptest", "--trials", "2000", "--constants", str(bad)]) == 1
    assert "FAIL" in capsys.readouterr().out
    assert main(["proptest", "--trials", "2000", "--constants", str(tmp_path / "none.txt")]) == 3
    assert main(["proptest", "--trials", "0"]) == 0


def test_proptest_writes_csv(tmp_path):
    assert main(["proptest", "--trials", "1000", "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "proptest.csv")
    assert all(r["violations"] == "0" for r in rows)


def test_calibrate_writes_file(tmp_path):
    out = tmp_path / "c.txt"
    assert main(["calibrate", "--trials", "5000", "--output", str(out)]) == 0
    assert set(load_constants(out)) >= {"mono_c_high", "interp_c"}
