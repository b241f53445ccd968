"""Command-line scenario runner.

    blockcorr run CONFIG [-o DIR]      write <scenario>.csv and <scenario>.meta.json
    blockcorr verify CONFIG            analytic-vs-simulation and bound checks
    blockcorr presets [--show NAME]    built-in scenarios

Thread count for the simulator comes from ``BLOCKCORR_WORKERS``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .config import PRESETS, RunConfig, Scenario, load_config, preset_yaml
from .errors import BlockcorrError, ConfigError
from .oned import assoc_prob_1d, assoc_prob_1d_iba, coverage_1d, coverage_1d_iba
from .simulator import Assoc, BigG, Coverage, RateCoverage, SimConfig, default_workers, estimate_curve
from .twod import RateAllocation, assoc_prob_2d, big_g_2d, coverage_2d, rate_coverage_2d, sin2_bound_constant

log = logging.getLogger("blockcorr")

CSV_COLUMNS = ("x", "curve_kind", "y", "stderr")


@dataclass(frozen=True)
class CurveRecord:
    scenario: str
    curve_kind: str
    x: float
    y: float
    stderr: Optional[float] = None


# --------------------------------------------------------------------------
# evaluation

def _db(v):
    return 10.0 ** (np.asarray(v, dtype=float) / 10.0)


def _pointwise(fn: Callable[[float], float], xs: Sequence[float], failures: list, kind: str) -> list[float]:
    out = []
    for x in xs:
        try:
            out.append(float(fn(x)))
        except BlockcorrError as exc:
            log.warning("%s at x=%g failed: %s", kind, x, exc)
            failures.append({"curve_kind": kind, "x": x, "error": f"{type(exc).__name__}: {exc}"})
            out.append(math.nan)
    return out


def _vector_or_pointwise(vec: Callable, one: Callable, xs, failures, kind) -> list[float]:
    try:
        return [float(v) for v in np.atleast_1d(vec(np.asarray(xs, dtype=float)))]
    except BlockcorrError:
        return _pointwise(one, xs, failures, kind)


_MODE = {"analytic": "correlated", "iba": "independent", "lower_bound": "maximal", "upper_bound": "independent"}


def _analytic(sc: Scenario, kind: str, xs: list[float], failures: list) -> list[float]:
    mode = _MODE[kind]
    if sc.dimension == 1:
        cov = coverage_1d if kind == "analytic" else coverage_1d_iba
        assoc = assoc_prob_1d if kind == "analytic" else assoc_prob_1d_iba
        if sc.metric == "coverage" and sc.sweep.axis == "threshold_db":
            p = sc.network()
            return _pointwise(lambda x: cov(p, float(_db(x))), xs, failures, kind)
        if sc.metric == "coverage":
            tau = float(_db(sc.threshold_db))
            return _pointwise(lambda x: cov(sc.network(x), tau), xs, failures, kind)
        return _pointwise(lambda x: assoc(sc.network(x), "L"), xs, failures, kind)

    if sc.metric == "coverage":
        p = sc.network()
        return _vector_or_pointwise(
            lambda v: coverage_2d(p, _db(v), mode), lambda x: coverage_2d(p, float(_db(x)), mode), xs, failures, kind
        )
    if sc.metric == "assoc_los":
        return _pointwise(lambda x: assoc_prob_2d(sc.network(x), "L", mode), xs, failures, kind)
    if sc.metric == "serving_tail_los":
        p = sc.network()
        return _vector_or_pointwise(
            lambda v: big_g_2d(p, "L", v, mode), lambda x: big_g_2d(p, "L", x, mode), xs, failures, kind
        )
    p = sc.network()
    alloc = RateAllocation(sc.rate_mode)
    return _vector_or_pointwise(
        lambda v: rate_coverage_2d(p, alloc, v * 1e6, mode),
        lambda x: rate_coverage_2d(p, alloc, x * 1e6, mode),
        xs,
        failures,
        kind,
    )


def _simulated(sc: Scenario, seed: int, xs: list[float], workers: Optional[int]) -> list:
    def cfg(p):
        return SimConfig(p, n_scenes=sc.n_scenes, rng_seed=seed)

    if sc.metric == "coverage" and sc.sweep.axis == "threshold_db":
        return estimate_curve(cfg(sc.network()), Coverage(tuple(float(v) for v in _db(xs))), workers)
    if sc.metric == "coverage":
        tau = float(_db(sc.threshold_db))
        return [estimate_curve(cfg(sc.network(x)), Coverage((tau,)), workers)[0] for x in xs]
    if sc.metric == "assoc_los":
        return [estimate_curve(cfg(sc.network(x)), Assoc("L"), workers)[0] for x in xs]
    if sc.metric == "serving_tail_los":
        return estimate_curve(cfg(sc.network()), BigG("L", tuple(xs)), workers)
    alloc = RateAllocation(sc.rate_mode)
    return estimate_curve(cfg(sc.network()), RateCoverage(tuple(x * 1e6 for x in xs), alloc), workers)


def compute_scenario(config: RunConfig, sc: Scenario, workers: Optional[int] = None):
    """Curve records and metadata for one scenario."""
    xs = list(sc.sweep.values)
    seed = config.seed_for(sc)
    failures: list = []
    records: list[CurveRecord] = []
    for kind in sc.outputs:
        log.info("%s: %s", sc.name, kind)
        if kind == "simulated":
            for x, est in zip(xs, _simulated(sc, seed, xs, workers)):
                records.append(CurveRecord(sc.name, kind, x, est.mean, est.std_error))
        else:
            for x, y in zip(xs, _analytic(sc, kind, xs, failures)):
                records.append(CurveRecord(sc.name, kind, x, y))
    meta = {
        "scenario": sc.name,
        "description": sc.description,
        "dimension": sc.dimension,
        "metric": sc.metric,
        "sweep_axis": sc.sweep.axis,
        "outputs": list(sc.outputs),
        "params": sc.params.model_dump(),
        "threshold_db": sc.threshold_db,
        "rate_mode": sc.rate_mode,
        "seed": seed,
        "n_scenes": sc.n_scenes if "simulated" in sc.outputs else None,
        "sin2_slope_m": sin2_bound_constant(),
        "failed_points": failures,
        "blockcorr_version": __version__,
    }
    return records, meta


# --------------------------------------------------------------------------
# CSV

def _fmt(v: Optional[float]) -> str:
    if v is None:
        return ""
    return repr(float(v))


def write_csv(records: Sequence[CurveRecord], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(r.x), r.curve_kind, _fmt(r.y), _fmt(r.stderr)])


def read_csv(path: str, scenario: Optional[str] = None) -> list[CurveRecord]:
    name = scenario or os.path.splitext(os.path.basename(path))[0]
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"{path}: missing or wrong header")
    return [
        CurveRecord(name, kind, float(x), float(y), float(se) if se else None) for x, kind, y, se in rows[1:]
    ]


def run(config: RunConfig, out_dir: str, workers: Optional[int] = None) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for sc in config.scenarios:
        records, meta = compute_scenario(config, sc, workers)
        path = os.path.join(out_dir, f"{sc.name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_csv(records, fh)
        with open(os.path.join(out_dir, f"{sc.name}.meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written


# --------------------------------------------------------------------------
# verify

@dataclass(frozen=True)
class Check:
    scenario: str
    name: str
    x: float
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.scenario:<26} {self.name:<10} x={self.x:<11.6g} {self.detail}"


_SLACK = 1e-9


def checks_for(sc: Scenario, records: Sequence[CurveRecord]) -> list[Check]:
    by = {}
    for r in records:
        by.setdefault(r.curve_kind, {})[r.x] = r
    out = []
    for x in sc.sweep.values:
        a = by.get("analytic", {}).get(x)
        for kind, curve in sorted(by.items()):
            y = curve[x].y
            ok = math.isfinite(y) and -_SLACK <= y <= 1 + _SLACK
            out.append(Check(sc.name, "range", x, ok, f"{kind} y={y:.6f}"))
        if a is None or not math.isfinite(a.y):
            continue
        s = by.get("simulated", {}).get(x)
        if s is not None:
            allow = sc.tolerance
            if sc.sigma is not None and s.stderr is not None:
                allow = max(allow, sc.sigma * s.stderr)
            diff = abs(a.y - s.y)
            out.append(
                Check(sc.name, "mc", x, diff <= allow,
                      f"analytic={a.y:.6f} simulated={s.y:.6f} se={s.stderr:.6f} |diff|={diff:.6f} allow={allow:.6f}")
            )
        lo, hi = by.get("lower_bound", {}).get(x), by.get("upper_bound", {}).get(x)
        if lo is not None or hi is not None:
            lv = lo.y if lo is not None else -math.inf
            hv = hi.y if hi is not None else math.inf
            ok = lv - _SLACK <= a.y <= hv + _SLACK
            out.append(Check(sc.name, "sandwich", x, ok, f"lower={lv:.6f} analytic={a.y:.6f} upper={hv:.6f}"))
        iba = by.get("iba", {}).get(x)
        if iba is not None and sc.iba_above_max_x is not None and x <= sc.iba_above_max_x:
            out.append(Check(sc.name, "iba_order", x, iba.y >= a.y - _SLACK, f"iba={iba.y:.6f} analytic={a.y:.6f}"))
    return out


def verify(config: RunConfig, source: str, workers: Optional[int] = None) -> tuple[str, bool]:
    buf = io.StringIO()
    buf.write(f"blockcorr {__version__} verify report\n")
    buf.write(f"config: {os.path.basename(source)}\n")
    buf.write(f"seed: {config.seed}\n")
    buf.write(f"sin2 slope m: {sin2_bound_constant()!r}\n\n")
    all_ok = True
    total = failed = 0
    for sc in config.scenarios:
        records, meta = compute_scenario(config, sc, workers)
        checks = checks_for(sc, records)
        for f in meta["failed_points"]:
            checks.append(Check(sc.name, "numerics", f["x"], False, f"{f['curve_kind']}: {f['error']}"))
        buf.write(f"== {sc.name} ({sc.metric}, {sc.dimension}D, seed {config.seed_for(sc)}) ==\n")
        for c in checks:
            buf.write(c.line() + "\n")
            total += 1
            failed += not c.passed
        buf.write("\n")
    all_ok = failed == 0
    buf.write(f"{total} checks, {failed} failed: {'PASS' if all_ok else 'FAIL'}\n")
    return buf.getvalue(), all_ok


# --------------------------------------------------------------------------
# entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blockcorr", description="mmWave coverage under correlated blockage")
    ap.add_argument("--version", action="version", version=f"blockcorr {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="evaluate scenarios and write CSV")
    r.add_argument("config")
    r.add_argument("-o", "--out", default="blockcorr-out", help="output directory (default: %(default)s)")
    v = sub.add_parser("verify", help="check analytic results against simulation and bounds")
    v.add_argument("config")
    v.add_argument("--report", help="also write the report to this file")
    p = sub.add_parser("presets", help="list built-in scenarios")
    p.add_argument("--show", metavar="NAME", help="print a runnable config for NAME")
    p.add_argument("--n-scenes", type=int, help="scene count to put in the printed config")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        workers = default_workers()
        if args.command == "presets":
            if args.show:
                sys.stdout.write(preset_yaml(args.show, args.n_scenes))
            else:
                width = max(len(k) for k in PRESETS)
                for name, entry in PRESETS.items():
                    sys.stdout.write(f"{name:<{width}}  {entry['description']}\n")
            return 0
        config = load_config(args.config)
        if args.command == "run":
            for path in run(config, args.out, workers):
                sys.stdout.write(path + "\n")
            return 0
        report, ok = verify(config, args.config, workers)
        sys.stdout.write(report)
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                fh.write(report)
        return 0 if ok else 1
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
