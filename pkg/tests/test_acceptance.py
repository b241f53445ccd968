"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line that is
repeated in the terminal summary under "acceptance criteria"."""

import math
import time

import numpy as np
import pytest

from blockcorr.blockage import BlockageModel, curly_n, joint_prob, joint_prob_bounds
from blockcorr.cli import verify
from blockcorr.config import parse_config
from blockcorr.oned import NetworkParams1D, assoc_prob_1d, big_g_1d, coverage_1d, coverage_1d_iba
from blockcorr.pathloss import PathLossSpec
from blockcorr.simulator import Assoc, BigG, Coverage, JointLos, SimConfig, estimate_curve
from blockcorr.twod import (
    NetworkParams2D,
    assoc_prob_2d,
    big_g_2d,
    coverage_2d,
    coverage_2d_bounds,
    g_2d,
    g_2d_bounds,
    g_lap_simple_bounds,
    sin2_bound_constant,
)
from conftest import BETA_2D, LAM_1D, LAM_2D, MU_1D, db

N_SCENES = 100_000


def _report(line, tag, ok, detail):
    line(f"{tag} {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


def test_ac1_lap_association_1d(acceptance_line):
    t0 = time.perf_counter()
    worst_closed = worst_mc = 0.0
    for ratio in (0.5, 1.0, 2.0, 5.0):
        p = NetworkParams1D(0.01 * ratio, 0.01, PathLossSpec.lap())
        closed = ratio * (2 + ratio) / (1 + ratio) ** 2
        worst_closed = max(worst_closed, abs(assoc_prob_1d(p, "L") - closed), abs(big_g_1d(p, "L", 0.0) - closed))
        (e,) = estimate_curve(SimConfig(p, n_scenes=N_SCENES, rng_seed=101), Assoc("L"))
        worst_mc = max(worst_mc, abs(e.mean - closed))
    elapsed = time.perf_counter() - t0
    ok = worst_closed <= 1e-8 and worst_mc <= 0.01 and elapsed < 60
    assert _report(acceptance_line, "AC1", ok,
                   f"max closed-form err {worst_closed:.2e}, max |MC-closed| {worst_mc:.4f}, {elapsed:.1f}s")


def test_ac2_coverage_1d_vs_mc(acceptance_line, p1d):
    taus_db = np.array([-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0])
    t0 = time.perf_counter()
    mc = estimate_curve(SimConfig(p1d, n_scenes=N_SCENES, rng_seed=102), Coverage(tuple(db(taus_db))))
    ana = [coverage_1d(p1d, db(t)) for t in taus_db]
    elapsed = time.perf_counter() - t0
    diffs = [abs(a - e.mean) for a, e in zip(ana, mc)]
    ok = max(diffs) <= 0.02 and elapsed < 600
    assert _report(acceptance_line, "AC2", ok, f"max |analytic-MC| {max(diffs):.4f} over 7 thresholds, {elapsed:.1f}s")


def test_ac3_iba_overestimates_1d(acceptance_line, p1d):
    taus_db = np.arange(-10.0, 10.1, 5.0)
    corr = np.array([coverage_1d(p1d, db(t)) for t in taus_db])
    iba = np.array([coverage_1d_iba(p1d, db(t)) for t in taus_db])
    gap = iba - corr
    ok = bool(np.all(gap >= 0) and gap.max() >= 0.01)
    assert _report(acceptance_line, "AC3", ok, f"min gap {gap.min():.4f}, max gap {gap.max():.4f} for tau <= 10 dB")


def test_ac4_coverage_vs_blockage_density(acceptance_line):
    mus = np.geomspace(5e-4, 5e-2, 20)
    tau = db(10.0)
    corr = np.array([coverage_1d(NetworkParams1D(LAM_1D, m), tau) for m in mus])
    iba = np.array([coverage_1d_iba(NetworkParams1D(LAM_1D, m), tau) for m in mus])
    kc, ki = int(np.argmax(corr)), int(np.argmax(iba))
    interior = 0 < kc < len(mus) - 1
    ok = interior and mus[kc] != mus[ki]
    assert _report(acceptance_line, "AC4", ok,
                   f"correlated max at mu={mus[kc]:.5f} (index {kc}), IBA max at mu={mus[ki]:.5f} (index {ki})")


def test_ac5_joint_probability(acceptance_line, blockage2d, p2d):
    rs = (20.0, 50.0, 100.0)
    ths = (math.pi / 6, math.pi / 2, 5 * math.pi / 6)
    pts = tuple((a, b, t) for a in rs for b in rs for t in ths)
    mc = estimate_curve(SimConfig(p2d, n_scenes=N_SCENES, rng_seed=105), JointLos(pts))
    z = []
    route_err = 0.0
    sandwich = True
    for (a, b, t), e in zip(pts, mc):
        p = joint_prob(blockage2d, "L", "L", a, b, t)
        z.append(abs(p - e.mean) / e.std_error)
        n1 = curly_n(blockage2d, a, b, t)
        n2 = curly_n(blockage2d, a, b, t, route="direct")
        route_err = max(route_err, abs(n1 - n2) / n2)
        lo, hi = joint_prob_bounds(blockage2d, a, b, t)
        sandwich &= lo <= p <= hi
    ok = max(z) <= 3 and route_err <= 1e-6 and sandwich
    assert _report(acceptance_line, "AC5", ok,
                   f"max |z| {max(z):.2f} on 27 points, route rel diff {route_err:.1e}, sandwich {sandwich}")


def test_ac6_serving_distance_tail(acceptance_line, p2d):
    rs = np.arange(10.0, 100.1, 10.0)
    mc = estimate_curve(SimConfig(p2d, n_scenes=N_SCENES, rng_seed=106), BigG("L", tuple(rs)))
    ana = big_g_2d(p2d, "L", rs)
    lower = big_g_2d(p2d, "L", rs, "maximal")
    upper = big_g_2d(p2d, "L", rs, "independent")
    worst = max(abs(a - e.mean) - max(3 * e.std_error, 0.03) for a, e in zip(ana, mc))
    sandwich = bool(np.all(lower <= ana + 1e-12) and np.all(ana <= upper + 1e-12))
    for x in rs:
        b = g_2d_bounds(p2d, "L", x)
        sandwich &= b.contains(g_2d(p2d, "L", x), tol=1e-12)
    ok = worst <= 0 and sandwich
    diffs = max(abs(a - e.mean) for a, e in zip(ana, mc))
    assert _report(acceptance_line, "AC6", ok, f"max |G_L analytic-MC| {diffs:.4f}, sandwich {sandwich}")


def test_ac7_association_vs_max_length(acceptance_line):
    lmax = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000]
    t0 = time.perf_counter()
    a = np.array([assoc_prob_2d(NetworkParams2D(LAM_2D, BlockageModel.from_beta(BETA_2D, L)), "L") for L in lmax])
    ref = NetworkParams2D(LAM_2D, BlockageModel.from_beta(BETA_2D, 200.0))
    iba = assoc_prob_2d(ref, "L", "independent")
    lower = assoc_prob_2d(ref, "L", "maximal")
    elapsed = time.perf_counter() - t0
    mono = bool(np.all(np.diff(a) <= 1e-12))
    near_iba = abs(a[0] - iba)
    near_lower = abs(a[-1] - lower)
    ok = mono and near_iba <= 0.01 and near_lower <= 0.02 and elapsed < 900
    assert _report(acceptance_line, "AC7", ok,
                   f"monotone {mono}, |A(1)-IBA| {near_iba:.4f}, |A(2000)-lower| {near_lower:.4f}, {elapsed:.1f}s")


def test_ac8_coverage_2d(acceptance_line, p2d, p2d_lap):
    taus_db = np.array([-10.0, 0.0, 10.0, 20.0])
    taus = db(taus_db)
    mc = estimate_curve(SimConfig(p2d, n_scenes=N_SCENES, rng_seed=108), Coverage(tuple(taus)))
    ana = coverage_2d(p2d, taus)
    diff = max(abs(a - e.mean) for a, e in zip(ana, mc))
    lap = coverage_2d(p2d_lap, taus)
    bracket = all(b.contains(v, tol=1e-12) for b, v in zip(coverage_2d_bounds(p2d_lap, taus), lap))
    ok = diff <= 0.03 and bracket
    assert _report(acceptance_line, "AC8", ok, f"max |analytic-MC| {diff:.4f}, LAP bracketing {bracket}")


def test_ac9_sin2_and_simple_bounds(acceptance_line, p2d_lap):
    m = sin2_bound_constant()
    x = np.linspace(0, math.pi / 2, 1000)
    s2 = np.sin(x) ** 2
    viol = float(max(np.max(1 + m * (x - math.pi / 2) - s2), np.max(s2 - m * x), 0.0))
    ordered = True
    for r in np.arange(5.0, 200.1, 5.0):
        b = g_lap_simple_bounds(p2d_lap, r)
        ordered &= b.contains(g_2d_bounds(p2d_lap, "L", r).lower, tol=1e-15)
    ok = viol <= 1e-4 and ordered
    assert _report(acceptance_line, "AC9", ok, f"m={m:.5f}, max violation {viol:.1e}, g1<=g_low<=g2 {ordered}")


def test_ac10_verify_deterministic(acceptance_line, monkeypatch):
    text = """\
seed: 77
scenarios:
  - preset: fig-1d-coverage
    n_scenes: 3000
    sweep: {axis: threshold_db, values: [-10, 0, 10, 20]}
  - preset: fig-2d-coverage-lap
    n_scenes: 800
    sweep: {axis: threshold_db, values: [0, 10]}
"""
    cfg = parse_config(text, "ac10.yaml")
    monkeypatch.setenv("BLOCKCORR_WORKERS", "1")
    first, _ = verify(cfg, "ac10.yaml", workers=1)
    second, _ = verify(parse_config(text, "ac10.yaml"), "ac10.yaml", workers=4)
    ok = first.encode() == second.encode()
    assert _report(acceptance_line, "AC10", ok, f"two verify reports ({len(first)} bytes) identical: {ok}")
