"""Command line entry point: ``kszk {check,run,sweep,verify} --config FILE``.

Exit codes: 0 success / admissible, 1 usage or configuration error,
2 inadmissible configuration (``check``), 3 blow-up (``run``), and for
``verify`` non-zero when any suite fails.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from .config import RunConfig, SweepSpec, load_config, with_point
from .diagnostics import fit_decay
from .errors import BlowUpError, ConfigurationError, FitError, SolverError
from .geometry import GEOMETRIC_THRESHOLD, AdmissibilityReport, analyze_domain, estimate_embedding_constant
from .io import SeriesWriter, write_snapshot
from .solver import initial_from_potential, run
from .verification import run_suites

log = logging.getLogger("kszk")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INADMISSIBLE = 2
EXIT_BLOWUP = 3

SWEEP_COLUMNS = (
    "scale",
    "amplitude",
    "a",
    "theta",
    "geometric_ok",
    "smallness_margin",
    "fitted_rate",
    "classified",
    "note",
)


def default_c_s(config: RunConfig, samples: int = 64) -> float:
    """Embedding-constant estimate at the run's resolution, capped to ~2M grid nodes."""
    domain = config.domain()
    modes = max(config.modes)
    while modes > 1 and (4 * modes + 1) ** domain.n > 2**21:
        modes -= 1
    return estimate_embedding_constant(domain, modes, samples, config.seed)


def admissibility(config: RunConfig) -> AdmissibilityReport:
    state = initial_from_potential(config.grid(), config.initial_data())
    c_s = config.c_s if config.c_s is not None else default_c_s(config)
    return analyze_domain(config.domain(), state.h2_sq_per_j(), c_s)


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else format(value, ".10g")


def cmd_check(config: RunConfig) -> int:
    report = admissibility(config)
    print(f"n                  = {report.n}")
    print(f"a                  = {_fmt(report.a)}")
    print(f"theta              = {_fmt(report.theta)}")
    print(f"geometric_margin   = {_fmt(report.geometric_margin)}  (2a - (3+sqrt5))")
    print(f"geometric_ok       = {str(report.geometric_ok).lower()}")
    print(f"decay_rate         = {_fmt(report.decay_rate)}  (a^2 theta / 2)")
    print(f"c_s                = {_fmt(report.c_s_used)}")
    print(f"initial_h2_total   = {_fmt(report.initial_h2_total)}")
    print(f"smallness_margin   = {_fmt(report.smallness_margin)}  (n^3 constant)")
    print(f"smallness_margin_7 = {_fmt(report.smallness_margin_worst_case)}  (7^3 constant)")
    print(f"a_gt_1             = {str(report.a_exceeds_one).lower()}")
    if not report.geometric_ok:
        print(
            f"NOT ADMISSIBLE: 2a = {2 * report.a:.10g} <= 3+sqrt(5) = {GEOMETRIC_THRESHOLD:.10g}",
        )
        return EXIT_INADMISSIBLE
    if report.smallness_ok is False:
        print(f"NOT ADMISSIBLE: smallness margin {report.smallness_margin:.6g} <= 0")
        return EXIT_INADMISSIBLE
    print("ADMISSIBLE")
    return EXIT_OK


def cmd_run(config: RunConfig, snapshot: Optional[str] = None) -> int:
    grid = config.grid()
    try:
        fh = open(config.output_path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        print(f"error: cannot open {config.output_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    with fh:
        writer = SeriesWriter(fh, grid.n)
        try:
            final, series = run(grid, config.initial_data(), config.solver_config(), on_record=writer)
        except BlowUpError as exc:
            print(f"{exc}; partial series written to {config.output_path}", file=sys.stderr)
            return EXIT_BLOWUP
    if snapshot:
        try:
            write_snapshot(snapshot, final.components)
        except OSError as exc:
            print(f"error: cannot write snapshot {snapshot}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    print(
        f"t = {series[-1].t:.6g}: h2 {series[0].h2_sq_total:.6g} -> {series[-1].h2_sq_total:.6g}"
        f" ({len(series)} records in {config.output_path})"
    )
    return EXIT_OK


def sweep_point(base: RunConfig, scale: float, amplitude: float) -> dict:
    """Run one sweep point; failures are reported in the row, never raised."""
    config = with_point(base, scale, amplitude)
    row = dict(scale=scale, amplitude=amplitude, a=math.nan, theta=math.nan, geometric_ok=False,
               smallness_margin=math.nan, fitted_rate=math.nan, classified="error", note="")
    try:
        report = admissibility(config)
        row.update(a=report.a, theta=report.theta, geometric_ok=report.geometric_ok)
        if report.smallness_margin is not None:
            row["smallness_margin"] = report.smallness_margin
        try:
            _, series = run(config.grid(), config.initial_data(), config.solver_config())
        except BlowUpError as exc:
            row.update(classified="blowup", note=str(exc))
            return row
        grew = series[-1].h2_sq_total > series[0].h2_sq_total
        row["classified"] = "grew" if grew else "decayed"
        try:
            row["fitted_rate"] = fit_decay(series).rate
        except FitError as exc:
            row["note"] = f"fit: {exc}"
    except (ConfigurationError, SolverError, ValueError) as exc:
        row["note"] = f"{type(exc).__name__}: {exc}"
    return row


def _format_row(row: dict) -> list[str]:
    out = []
    for col in SWEEP_COLUMNS:
        value = row[col]
        if isinstance(value, bool):
            out.append("true" if value else "false")
        elif isinstance(value, float):
            out.append(format(value, ".17g"))
        else:
            out.append(str(value))
    return out


def _read_done(path: str) -> dict:
    done = {}
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            for rec in csv.DictReader(fh):
                done[(float(rec["scale"]), float(rec["amplitude"]))] = [rec[c] for c in SWEEP_COLUMNS]
    except (OSError, KeyError, ValueError):
        return {}
    return done


def sweep_workers() -> int:
    cap = os.environ.get("KSZK_THREADS")
    workers = os.cpu_count() or 1
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer KSZK_THREADS=%r", cap)
    return workers


def cmd_sweep(config: RunConfig, resume: bool = False) -> int:
    spec = SweepSpec.from_config(config)
    points = spec.points()
    done = _read_done(config.output_path) if resume else {}
    todo = [p for p in points if p not in done]
    workers = min(sweep_workers(), max(1, len(todo)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(sweep_point, [config] * len(todo), *zip(*todo)))
    else:
        results = [sweep_point(config, s, a) for s, a in todo]
    rows = dict(done)
    for (s, a), row in zip(todo, results):
        rows[(s, a)] = _format_row(row)
    try:
        with open(config.output_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_COLUMNS)
            for key in sorted(rows):
                writer.writerow(rows[key])
    except OSError as exc:
        print(f"error: cannot write {config.output_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    counts = {}
    for row in rows.values():
        counts[row[7]] = counts.get(row[7], 0) + 1
    print(f"{len(rows)} points -> {config.output_path}: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return EXIT_OK


def cmd_verify(config: RunConfig, seed: Optional[int] = None, broken: bool = False) -> int:
    results = run_suites(config, seed=seed, broken=broken)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} suites passed")
    return EXIT_OK if failed == 0 else EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kszk", description="KS-ZK spectral Galerkin simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="key = value configuration file")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration key (repeatable)")

    common(sub.add_parser("check", help="print the admissibility report"))
    p_run = sub.add_parser("run", help="integrate and write the norm series as CSV")
    common(p_run)
    p_run.add_argument("--snapshot", help="write the final coefficients to this binary file")
    p_sweep = sub.add_parser("sweep", help="scan box scale and amplitude")
    common(p_sweep)
    p_sweep.add_argument("--resume", action="store_true", help="skip points already in the output CSV")
    p_verify = sub.add_parser("verify", help="run the property suites")
    common(p_verify)
    p_verify.add_argument("--seed", type=int, default=None)
    p_verify.add_argument("--inject-broken-tolerance", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        config = load_config(args.config, args.override)
        if args.command == "check":
            return cmd_check(config)
        if args.command == "run":
            return cmd_run(config, args.snapshot)
        if args.command == "sweep":
            return cmd_sweep(config, args.resume)
        return cmd_verify(config, args.seed, args.inject_broken_tolerance)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
