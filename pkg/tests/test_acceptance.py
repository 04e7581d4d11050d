"""Acceptance gate: one test per criterion, each reporting PASS/FAIL with the measured value.

Run with ``pytest tests/test_acceptance.py`` (the summary block lists every
criterion) or ``python3 tests/test_acceptance.py``.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from fluidarray.beam import beam_map, psl_db
from fluidarray.cli import main as cli_main
from fluidarray.crb import ObservationSpec, SourceDirection, fim_closed_form, fim_numeric_oracle
from fluidarray.experiments import ExperimentConfig, layout_metrics, random_layouts
from fluidarray.geometry import Aperture, PortLayout, inertia_matrix
from fluidarray.placement import greedy_trace, uniform_grid_baseline
from fluidarray.spacing import (
    SpacingLaw,
    ks_distance,
    linear_exact_ccdf,
    linear_mean_min_gap,
    mean_min_distance,
    sample_min_distances,
    var_min_distance,
)

CFG = ExperimentConfig()
SLOPE_MS = np.array([8, 16, 32, 64, 128])


def record(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def slope(ms, values):
    return float(np.polyfit(np.log(ms), np.log(values), 1)[0])


@pytest.fixture(scope="module")
def greedy_runs():
    """Criterion 7's greedy runs, shared with criterion 10."""
    return {b: greedy_trace(CFG.placement_config(b)) for b in (0.0, 0.8)}


@pytest.fixture(scope="module")
def tradeoff_records():
    records = []
    for b in CFG.beta0_sweep():
        layout = greedy_trace(CFG.placement_config(float(b))).layout
        records.append({"beta0": float(b), **layout_metrics(layout, CFG)})
    return records


def test_c01_rayleigh_law():
    law = SpacingLaw(CFG.m, CFG.aperture.area())
    start = time.perf_counter()
    sample = sample_min_distances(CFG.m, CFG.aperture, 100_000, CFG.seed, threads=1)
    ks = ks_distance(sample, law)
    elapsed = time.perf_counter() - start
    mean_err = abs(sample.mean() / 0.0577350 - 1)
    var_err = abs(sample.var() / var_min_distance(law) - 1)
    ok = mean_err <= 0.03 and var_err <= 0.10 and ks <= 0.02 and elapsed <= 60
    record("C1 Rayleigh law", ok,
           f"mean err {mean_err:.4f} (<=0.03), var err {var_err:.4f} (<=0.10), "
           f"KS {ks:.5f} (<=0.02), {elapsed:.1f}s (<=60s)")


def test_c02a_planar_analytic_slope():
    means = [mean_min_distance(SpacingLaw(int(m), 4.0)) for m in SLOPE_MS]
    s = slope(SLOPE_MS, means)
    record("C2a planar analytic slope", abs(s + 1.0) <= 1e-3, f"slope {s:.6f} (target -1.000 +- 0.001)")


def test_c02b_planar_mc_slope():
    ap = Aperture(2.0, 2.0)
    means = [sample_min_distances(int(m), ap, 10_000, seed=1000 + int(m)).mean() for m in SLOPE_MS]
    s = slope(SLOPE_MS, means)
    record("C2b planar MC slope", -1.10 <= s <= -0.90, f"slope {s:.4f} (in [-1.10, -0.90])")


def test_c02c_linear_slope():
    s = slope(SLOPE_MS, [linear_mean_min_gap(int(m), 2.0) for m in SLOPE_MS])
    record("C2c linear slope", -2.10 <= s <= -1.90, f"slope {s:.4f} (in [-2.10, -1.90])")


def test_c03_linear_exact_law():
    sample = sample_min_distances(25, Aperture(2.0, 2.0), 100_000, CFG.seed, dimension="linear")
    deltas = np.array([0.005, 0.01, 0.02])
    err = np.abs(sample.empirical_ccdf(deltas) - linear_exact_ccdf(25, 2.0, deltas))
    record("C3 linear exact CCDF", bool(err.max() <= 0.01),
           "abs errors " + ", ".join(f"{e:.4f}" for e in err) + " (<=0.01)")


def test_c04_crb_oracle_equivalence():
    rng = np.random.default_rng(np.random.SeedSequence(CFG.seed, spawn_key=(4,)))
    obs = CFG.observation()
    worst_analytic = worst_fd = worst_det = 0.0
    start = time.perf_counter()
    for _ in range(200):
        m = int(rng.integers(5, 51))
        pts = rng.uniform(0.0, 2.0, size=(m, 2))
        d = SourceDirection(math.radians(rng.uniform(5, 85)), math.radians(rng.uniform(0, 360)))
        res = fim_closed_form(pts, d, obs)
        closed = res.fim
        analytic = fim_numeric_oracle(pts, d, obs)
        fd = fim_numeric_oracle(pts, d, obs, mode="finite_difference")
        worst_analytic = max(worst_analytic, float(np.max(np.abs(analytic - closed) / np.abs(closed))))
        worst_fd = max(worst_fd, float(np.max(np.abs(fd - closed) / np.abs(closed))))
        factored = obs.gain**2 * math.cos(d.theta) ** 2 * math.sin(d.theta) ** 2 * res.det_inertia
        worst_det = max(worst_det, abs(np.linalg.det(analytic) / factored - 1))
    elapsed = time.perf_counter() - start
    ok = worst_analytic <= 1e-10 and worst_fd <= 1e-4 and worst_det <= 1e-10 and elapsed <= 10
    record("C4 CRB oracle equivalence", ok,
           f"analytic {worst_analytic:.2e} (<=1e-10), finite-diff {worst_fd:.2e} (<=1e-4), "
           f"det identity {worst_det:.2e} (<=1e-10), {elapsed:.2f}s (<=10s)")


def test_c05_azimuth_invariance():
    rng = np.random.default_rng(np.random.SeedSequence(CFG.seed, spawn_key=(5,)))
    phis = np.radians(np.arange(360.0))
    worst_det = worst_trace = 0.0
    for _ in range(100):
        pts = rng.uniform(0.0, 2.0, size=(int(rng.integers(5, 51)), 2))
        mats = [inertia_matrix(pts, phi) for phi in phis]
        dets = np.array([m.det for m in mats])
        traces = np.array([m.trace for m in mats])
        worst_det = max(worst_det, float(np.ptp(dets) / max(abs(dets.mean()), 1e-30)))
        worst_trace = max(worst_trace, float(np.ptp(traces) / max(abs(traces.mean()), 1e-30)))
    ok = worst_det <= 1e-12 and worst_trace <= 1e-12
    record("C5 azimuth invariance", ok,
           f"det spread {worst_det:.2e}, trace spread {worst_trace:.2e} (<=1e-12)")


def test_c06_spot_crb():
    layout = PortLayout.cornered(Aperture(2.0, 2.0))
    res = fim_closed_form(layout, SourceDirection.from_degrees(45, 30), ObservationSpec.from_db(100, 10))
    target = 1.0 / (16000 * math.pi**2)
    err = max(abs(res.crb_theta / target - 1), abs(res.crb_phi / target - 1))
    record("C6 spot CRB", err <= 1e-10,
           f"CRB(theta) {res.crb_theta:.6e}, CRB(phi) {res.crb_phi:.6e}, rel err {err:.1e} (<=1e-10)")


def test_c07_greedy_dominance(greedy_runs):
    start = time.perf_counter()
    ap = CFG.aperture
    det_uniform = inertia_matrix(uniform_grid_baseline(CFG.m, ap)).det
    det_random = max(inertia_matrix(r).det for r in random_layouts(CFG, CFG.m, ap, 500))
    elapsed = time.perf_counter() - start
    dets = {b: inertia_matrix(run.layout).det for b, run in greedy_runs.items()}
    ok = all(d >= det_uniform and d >= det_random for d in dets.values()) and elapsed <= 120
    record("C7 greedy dominance", ok,
           f"greedy det {dets[0.0]:.2f} (beta0=0), {dets[0.8]:.2f} (beta0=0.8) vs uniform "
           f"{det_uniform:.2f}, random max {det_random:.2f}; {elapsed:.1f}s (<=120s)")


def test_c08a_tradeoff_extremes(tradeoff_records):
    dets = [r["det"] for r in tradeoff_records]
    crbs = [r["crb_theta"] for r in tradeoff_records]
    ok = int(np.argmax(dets)) == 0 and int(np.argmin(crbs)) == 0
    record("C8a det max / CRB min at beta0=0", ok,
           f"argmax det at index {int(np.argmax(dets))}, argmin CRB at index {int(np.argmin(crbs))}")


def test_c08b_no_interior_ports_at_zero(tradeoff_records):
    n0 = tradeoff_records[0]["n_interior"]
    record("C8b interior count 0 at beta0=0", n0 == 0, f"n_interior(0) = {n0} (target 0)")


def test_c08c_interior_count_endpoints(tradeoff_records):
    first, last = tradeoff_records[0]["n_interior"], tradeoff_records[-1]["n_interior"]
    record("C8c interior count nondecreasing", last >= first,
           f"n_interior(0) = {first}, n_interior(5) = {last}")


def test_c08d_spearman(tradeoff_records):
    rho = stats.spearmanr([r["beta0"] for r in tradeoff_records],
                          [r["det"] for r in tradeoff_records]).statistic
    record("C8d Spearman(beta0, det)", rho <= -0.8, f"rho {rho:.4f} (<=-0.8)")


def test_c09_precision_ambiguity():
    dets, psls = [], []
    for b in (0.0, 5.0, 10.0, 100.0):
        layout = greedy_trace(CFG.placement_config(b)).layout
        dets.append(inertia_matrix(layout).det)
        psls.append(psl_db(beam_map(layout, CFG.direction, n_uv=301)))
    decreasing = all(a > b for a, b in zip(dets, dets[1:]))
    gap = psls[0] - psls[-1]
    record("C9 precision-ambiguity ordering", decreasing and gap >= 1.0,
           "det " + " > ".join(f"{d:.2f}" for d in dets)
           + f"; PSL(0) {psls[0]:.2f} dB, PSL(100) {psls[-1]:.2f} dB, gap {gap:.2f} dB (>=1)")


def test_c10_incremental_determinant(greedy_runs):
    worst, stages = 0.0, 0
    for run in greedy_runs.values():
        pts = run.layout.positions
        for st in run.stages:
            scratch = inertia_matrix(pts[: 4 + st.stage]).det
            worst = max(worst, abs(st.det_incremental / scratch - 1))
            stages += 1
    record("C10 incremental determinant", worst <= 1e-12,
           f"max rel err {worst:.2e} over {stages} stages (<=1e-12)")


def _tree(directory: Path) -> dict:
    return {p.relative_to(directory).as_posix(): p.read_bytes()
            for p in sorted(directory.rglob("*")) if p.is_file()}


def test_c11_determinism(tmp_path):
    zero_beta = tmp_path / "beta0_zero.json"
    zero_beta.write_text(json.dumps({"beta0": 0.0}))
    jobs = [("mc-spacing", None), ("place", None), ("place", zero_beta), ("tradeoff", None)]
    mismatched = []
    for command, config in jobs:
        trees = []
        for i, threads in enumerate((1, 4, 0, 1)):
            out = tmp_path / f"{command}-{config is not None}-{i}"
            argv = [command, "--out", str(out), "--seed", str(CFG.seed), "--threads", str(threads)]
            if config is not None:
                argv += ["--config", str(config)]
            assert cli_main(argv) == 0
            trees.append(_tree(out))
        if any(t != trees[0] for t in trees[1:]) or not trees[0]:
            mismatched.append(command)
    record("C11 determinism", not mismatched,
           f"{len(jobs)} runs x threads 1/4/auto/repeat; mismatched: {mismatched or 'none'}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
