"""Command-line entry point: ``varpflow <subcommand> ...``.

Exit codes: 0 success, 1 failed check, 2 usage or config error, 3 missing
calibration, 4 solver non-convergence, 5 insufficient data for a verdict.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import (config_digest, header_lines, read_csv, solution_columns, solution_rows, write_binary,
                        write_csv)
from .calibration import DEFAULT_PATH, calibrate, load_constants, write_constants
from .config import load_config
from .errors import ConfigError, DimensionError, InsufficientDataError, ParameterError, SolverError
from .estimates import SolveReport, analyze, grad_cauchy_check, sweep_verdict
from .properties import run_all
from .solver import continuation_sweep, smooth_data, solve

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NOCAL, EXIT_NOCONV, EXIT_NODATA = 0, 1, 2, 3, 4, 5
log = logging.getLogger("varpflow")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    cfg = load_config(args.config)
    return cfg, header_lines(args.seed, config_digest(cfg.text))


def _load_constants(path):
    try:
        return load_constants(path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    violations = cfg.problem().validate()
    for v in violations:
        print(v)
    if violations:
        print(f"{len(violations)} violation(s)")
        return EXIT_FAIL
    print("valid")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    consts = calibrate(args.seed, args.trials)
    path = Path(args.output) if args.output else DEFAULT_PATH
    write_constants(consts, path, [f"calibrated constants: varpflow {__version__}", f"seed = {args.seed}",
                                   f"trials = {args.trials}"])
    for k in sorted(consts):
        print(f"{k} = {consts[k]!r}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_proptest(args) -> int:
    if args.trials == 0:
        print("warning: trials = 0, nothing checked", file=sys.stderr)
        return EXIT_OK
    if args.calibrate:
        consts = calibrate(args.seed)
    else:
        consts = _load_constants(args.constants)
        if consts is None:
            print("hint: run `varpflow calibrate` or pass --calibrate", file=sys.stderr)
            return EXIT_NOCAL
    outcomes = run_all(consts, args.trials, args.seed)
    for o in outcomes:
        print(o.line())
    if args.out:
        out = _outdir(args)
        write_csv(out / "proptest.csv", header_lines(args.seed, "none"),
                  ["property", "N", "trials", "violations", "worst_margin"],
                  [(o.name, o.dim, o.trials, o.violations, o.worst_margin) for o in outcomes])
    return EXIT_OK if all(o.ok for o in outcomes) else EXIT_FAIL


def _report_rows(reports):
    return [r.row() for r in reports]


def cmd_solve(args) -> int:
    cfg, header = _load(args)
    data = smooth_data(cfg.problem(), cfg.m_level)
    result = solve(data, cfg.solver)
    out = _outdir(args)
    g = data.grid
    write_csv(out / "solution.csv", header, solution_columns(g.dim), solution_rows(result.u.values))
    if args.binary:
        write_binary(out / "solution.bin", result.u.values)
    write_csv(out / "iterations.csv", header, ["it", "picard_iters"],
              [(k + 1, n) for k, n in enumerate(result.per_step_iters)])
    consts = _load_constants(args.constants) if g.dim == 2 else None
    rep = analyze(result, data, cfg.r_value, consts, m_level=cfg.m_level)
    write_csv(out / "report.csv", header, SolveReport.columns(), [rep.row()])
    print(f"converged: {result.converged}; steps: {len(result.per_step_iters)}; "
          f"max picard iterations: {max(result.per_step_iters, default=0)}")
    return EXIT_OK if result.converged else EXIT_NOCONV


def _run_sweep(cfg, args):
    if not cfg.sweep_eps:
        raise ConfigError("[sweep] eps is empty")
    cells = continuation_sweep(cfg.problem(eps=cfg.sweep_eps[0]), cfg.solver, cfg.sweep_eps, cfg.m_levels,
                               jobs=args.jobs)
    order = sorted(cells.values(), key=lambda c: (c.m_level, -c.eps))
    consts = _load_constants(args.constants) if cfg.grid.dim == 2 else None

    def one(cell):
        if cell.result is None:
            return SolveReport(f"eps{cell.eps:g}_m{cell.m_level}", cell.eps, cell.m_level, False)
        return analyze(cell.result, cell.data, cfg.r_value, consts, m_level=cell.m_level)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        reports = list(pool.map(one, order))
    return order, reports


def _write_sweep(out, header, order, reports, threshold):
    write_csv(out / "sweep_reports.csv", header, SolveReport.columns(), _report_rows(reports))
    rows = []
    for m in sorted({c.m_level for c in order}):
        level = [c for c in order if c.m_level == m and c.converged]
        if len(level) >= 2:
            d = grad_cauchy_check([c.result for c in level], level[0].data.exponents.p)
            rows += [(m, a.eps, b.eps, v) for a, b, v in zip(level, level[1:], d)]
    write_csv(out / "grad_cauchy.csv", header, ["m_level", "eps_a", "eps_b", "luxemburg_distance"], rows)
    try:
        verdict = sweep_verdict(reports, threshold)
    except InsufficientDataError as exc:
        return None, str(exc)
    write_csv(out / "sweep_verdict.csv", header, ["norm", "ratio", "threshold", "pass"],
              [(k, verdict.boundedness_ratios[k], threshold, verdict.verdicts[k]) for k in verdict.verdicts])
    (out / "sweep_summary.txt").write_text("\n".join(f"# {h}" for h in header) + "\n" + verdict.summary() + "\n",
                                           encoding="utf-8")
    return verdict, None


def cmd_sweep(args) -> int:
    cfg, header = _load(args)
    order, reports = _run_sweep(cfg, args)
    verdict, note = _write_sweep(_outdir(args), header, order, reports, cfg.threshold)
    for r in reports:
        print(f"{r.run_id}: converged={r.converged}")
    if verdict is not None:
        print(verdict.summary())
    else:
        print(f"no verdict: {note}")
    return EXIT_OK if all(r.converged for r in reports) else EXIT_NOCONV


def _inequality_failures(reports) -> list[str]:
    bad = []
    for r in reports:
        if not r.converged:
            continue
        if not np.isfinite(r.energy_constant):
            bad.append(f"{r.run_id}: energy constant not finite")
        if not r.holder_ok:
            bad.append(f"{r.run_id}: generalized Hoelder check failed")
        for name in ("combined_margin", "interp_margin"):
            v = getattr(r, name)
            if np.isfinite(v) and v < 0:
                bad.append(f"{r.run_id}: {name} = {v:.3e} < 0")
    return bad


def cmd_verify(args) -> int:
    cfg, header = _load(args)
    order, reports = _run_sweep(cfg, args)
    verdict, note = _write_sweep(_outdir(args), header, order, reports, cfg.threshold)
    if verdict is None:
        print(f"error: insufficient data: {note}", file=sys.stderr)
        return EXIT_NODATA
    print(verdict.summary())
    bad = _inequality_failures(reports)
    for line in bad:
        print(line)
    if not all(r.converged for r in reports):
        print("warning: some cells did not converge", file=sys.stderr)
    return EXIT_OK if verdict.passed and not bad else EXIT_FAIL


def _parse_report(row) -> SolveReport:
    kw = {}
    for name in SolveReport.columns():
        raw = row[name]
        if name == "run_id":
            kw[name] = raw
        elif name in ("converged", "holder_ok"):
            kw[name] = raw == "true"
        elif name == "m_level":
            kw[name] = int(raw)
        else:
            kw[name] = float(raw)
    return SolveReport(**kw)


def cmd_report(args) -> int:
    try:
        _, rows = read_csv(args.reports)
        reports = [_parse_report(r) for r in rows]
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read reports {args.reports}: {exc}") from None
    for r in reports:
        print(f"{r.run_id}: converged={r.converged} energy_constant={r.energy_constant:.6g} "
              f"hi_modular={r.hi_modular:.6g} flux_w12={r.flux_w12:.6g}")
    try:
        verdict = sweep_verdict(reports, args.threshold)
    except InsufficientDataError as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_NODATA
    print(verdict.summary())
    return EXIT_OK if verdict.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="varpflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"varpflow {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True, out=True):
        if config:
            p.add_argument("config", help="run configuration file")
        p.add_argument("--seed", type=int, default=0, help="64-bit seed recorded in every artifact")
        if out:
            p.add_argument("--out", default="varpflow-out", help="output directory")
        p.add_argument("--constants", default=None, help="calibrated constants file")
        p.add_argument("--jobs", type=int, default=1, help="worker threads")

    p = sub.add_parser("validate", help="check the structural conditions of a config")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("calibrate", help="recompute the calibrated constants")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=200_000)
    p.add_argument("--output", default=None, help="constants file to write (default: packaged file)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("proptest", help="randomized property sweeps of the pointwise inequalities")
    p.add_argument("config", nargs="?", help="accepted for symmetry; sweeps do not read it")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--constants", default=None)
    p.add_argument("--calibrate", action="store_true", help="calibrate in memory first")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_proptest)

    for name, func, text in (("solve", cmd_solve, "solve one problem and write its artifacts"),
                             ("sweep", cmd_sweep, "eps / mollification sweep with reports"),
                             ("verify", cmd_verify, "sweep and check every verdict")):
        p = sub.add_parser(name, help=text)
        common(p)
        if name == "solve":
            p.add_argument("--binary", action="store_true", help="also write solution.bin")
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="summarize a sweep_reports.csv")
    p.add_argument("reports")
    p.add_argument("--threshold", type=float, default=2.0)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParameterError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except InsufficientDataError as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_NODATA


if __name__ == "__main__":
    sys.exit(main())
