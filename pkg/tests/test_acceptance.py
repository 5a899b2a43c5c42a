"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines
inline; they are also echoed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from riscatter import experiments, region, validate
from riscatter.channel import generate_channels
from riscatter.config import ExperimentConfig, dbm_to_watts

REPORT = []


def report(number, title, passed, detail):
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    REPORT.append(line)
    print(line)
    return passed


def draw(cfg, seed, realization=0):
    return generate_channels(cfg.geometry, cfg.fading, cfg.n_antennas, cfg.n_nodes, seed,
                             realization)


def test_c01_gamma_kernel():
    start = time.perf_counter()
    c = validate.check_gamma_kernel(n_pairs=100, orders=(1, 5, 20), tol=1e-10)
    elapsed = time.perf_counter() - start
    ok = c.passed and elapsed < 5
    assert report(1, "gamma kernel vs quadrature", ok,
                  f"max abs err {c.value:.2e} (tol 1e-10), {elapsed:.2f} s (limit 5 s)")


def test_c02_gradient():
    start = time.perf_counter()
    c = validate.check_gradient(n_instances=10, tol=1e-5)
    elapsed = time.perf_counter() - start
    ok = c.passed and elapsed < 30
    assert report(2, "gradient vs central differences", ok,
                  f"max rel err {c.value:.2e} (tol 1e-5), {elapsed:.2f} s (limit 30 s)")


def test_c03_input_optimality():
    z = validate.check_z_channel(tol_rate=1e-4, tol_p=1e-3, tol_residual=1e-6)
    ex = validate.check_kkt_vs_exhaustive(resolution=1e-2, slack=1e-4)
    checks = z + [ex]
    detail = "; ".join(f"{c.name} {c.value:.2e}/{c.tolerance:.0e}" for c in checks)
    assert report(3, "input distribution optimality", all(c.passed for c in checks), detail)


def test_c04_quantizers():
    checks = validate.check_quantizers(n_instances=200, tol=1e-12)
    detail = "; ".join(f"{c.name} {c.value:.2e} {c.detail}" for c in checks)
    assert report(4, "quantizer optimality", all(c.passed for c in checks), detail)


def test_c05_ml_crossing():
    checks = validate.check_ml_crossing(n_pairs=100, tol=1e-9)
    # the second check is the N = 1, (1, e) case against e/(e-1) at 1e-12
    ok = all(c.passed for c in checks)
    detail = "; ".join(f"{c.name} {c.value:.2e} (tol {c.tolerance:.0e})" for c in checks)
    assert report(5, "ML threshold crossing", ok, detail)


def _monotone(values, slack=1e-12):
    return bool(np.all(np.diff(np.asarray(values, dtype=float)) >= -slack))


@pytest.mark.slow
def test_c06_monotone_convergence():
    start = time.perf_counter()
    small = ExperimentConfig(n_antennas=2, n_nodes=2, order=2, spreading=10)
    rhos = (0.0, 0.3, 0.7)
    bad = []
    kkt_runs = pga_runs = 0
    for seed in range(50):
        cfg = small.replace(seed=seed)
        s = region.bcd_solve(draw(cfg, seed), cfg, rhos[seed % 3])
        runs = [("kkt", [t[2] for t in tr]) for tr in s.input_traces]
        runs += [("pga", [t[0] for t in tr]) for tr in s.beam_traces]
        runs.append(("bcd", s.trace))
        kkt_runs += len(s.input_traces)
        pga_runs += len(s.beam_traces)
        bad += [(seed, kind) for kind, tr in runs if not _monotone(tr)]
    ref = ExperimentConfig(n_antennas=4, n_nodes=8, order=2, spreading=20,
                           noise_var=dbm_to_watts(-40.0))
    assert ref.geometry.node_radius == 2.0
    s = region.bcd_solve(draw(ref, 0), ref, 0.0)
    elapsed = time.perf_counter() - start
    ok = not bad and s.converged and s.iterations <= 20 and _monotone(s.trace) \
        and elapsed < 300
    assert report(6, "monotone convergence", ok,
                  f"50 instances ({kkt_runs} KKT, {pga_runs} PGA traces), non-monotone {bad}; "
                  f"reference BCD {s.iterations} iterations (limit 20), {elapsed:.0f} s "
                  f"(limit 300 s)")


def test_c07_endpoint_identities():
    cfg = ExperimentConfig(n_antennas=2, n_nodes=2, order=2, spreading=10)
    worst = 0.0
    ib_max = 0.0
    for seed in range(10):
        ch = draw(cfg, seed)
        s = region.bcd_solve(ch, cfg, 1.0)
        ris = region.benchmark_ris(ch, cfg)
        worst = max(worst, abs(s.primary - ris) / ris)
        ib_max = max(ib_max, s.backscatter)
    legacy_gap = 0.0
    k0 = ExperimentConfig(n_antennas=3, n_nodes=0, rhos=(0.0, 0.5, 1.0))
    for seed in range(5):
        ch = draw(k0, seed)
        legacy = region.benchmark_legacy(ch, k0.power, k0.noise_var)
        res = region.rate_region(ch, k0)
        rates = [p.primary for p in res.points]
        rates += [res.benchmarks[n][0] for n in ("ambc", "sr", "ris")]
        legacy_gap = max(legacy_gap, max(abs(r - legacy) / legacy for r in rates))
    ok = ib_max == 0.0 and worst <= 1e-12 and legacy_gap <= 1e-9
    assert report(7, "endpoint identities", ok,
                  f"rho=1 backscatter max {ib_max}, primary vs RIS rel {worst:.1e}; "
                  f"K=0 max rel gap to legacy {legacy_gap:.1e}")


def test_c08_benchmark_limits():
    cfg = ExperimentConfig(n_antennas=1, n_nodes=1, order=4, spreading=1000)
    bbc_bits = region.benchmark_bbc(cfg)[1] / math.log(2)
    amb = ExperimentConfig(n_antennas=3, n_nodes=2, order=4)
    gap = 0.0
    for seed in range(5):
        ch = draw(amb, seed)
        tiny = ch.with_cascade(ch.h_c * 1e-9)
        legacy = region.benchmark_legacy(ch, amb.power, amb.noise_var)
        gap = max(gap, abs(region.benchmark_ambc(tiny, amb)[0] - legacy))
    ok = abs(bbc_bits - 2.0) <= 5e-4 and gap <= 1e-9
    assert report(8, "benchmark limits", ok,
                  f"BBC {bbc_bits:.3f} bits/BB; AmBC vs legacy at vanishing cascade {gap:.1e}")


@pytest.mark.slow
def test_c09_dominance_on_average():
    start = time.perf_counter()
    cfg = ExperimentConfig(n_antennas=1, n_nodes=1, order=4, spreading=100, rhos=(0.0, 1.0),
                           realizations=100, seed=2024)
    mean, bench, n = experiments.region_rows(cfg)
    elapsed = time.perf_counter() - start
    ib0, ip1 = mean[0, 1], mean[1, 0]
    ok = n >= 100 and ib0 >= bench["ambc"][1] and ip1 >= bench["legacy"][0] and elapsed < 600
    assert report(9, "dominance on averages", ok,
                  f"{n} realizations: rho=0 backscatter {ib0 / math.log(2):.4f} vs AmBC "
                  f"{bench['ambc'][1] / math.log(2):.4f} bits/BB; rho=1 primary "
                  f"{ip1 / math.log(2):.4f} vs legacy {bench['legacy'][0] / math.log(2):.4f} "
                  f"bits/s/Hz; {elapsed:.0f} s (limit 600 s)")


def test_c10_determinism(tmp_path):
    cfg = ExperimentConfig(n_antennas=2, n_nodes=2, order=2, spreading=10,
                           rhos=(0.0, 0.5, 1.0), realizations=3, seed=77)
    experiments.run_region(cfg, tmp_path / "a")
    experiments.run_region(cfg, tmp_path / "b")
    experiments.run_region(cfg.replace(threads=3), tmp_path / "c")
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / d / f).read_bytes()
               for d in ("b", "c") for f in ("region.csv", "benchmarks.csv"))
    assert report(10, "determinism", same, "two serial runs and a 3-worker run byte-identical"
                  if same else "CSV bytes differ")

