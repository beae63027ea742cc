"""Acceptance criteria, one test per criterion; each prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from nlkpp import drivers, kernels, solver, speed, stability, verification, waves


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_01_critical_speed_gaussian(gaussian):
    t0 = time.perf_counter()
    cs = speed.critical_mu(gaussian, drivers.Constant(1.0))
    dt = time.perf_counter() - t0
    ok = abs(cs.mu_star - 1.0) <= 1e-3 and abs(cs.c_star - math.exp(0.5)) <= 1e-3 and dt < 1.0
    record(1, ok, f"mu*={cs.mu_star:.7f} c*={cs.c_star:.7f} (oracle 1, {math.exp(0.5):.7f}) in {dt:.3f}s")


def test_02_critical_speed_laplace(laplace):
    t0 = time.perf_counter()
    cs = speed.critical_mu(laplace, drivers.Constant(1.0))
    dt = time.perf_counter() - t0
    mu_o, c_o = 2 / math.sqrt(3), 3 * math.sqrt(3) / 4
    ok = abs(cs.mu_star - mu_o) <= 1e-3 and abs(cs.c_star - c_o) <= 1e-3 and dt < 1.0
    record(2, ok, f"mu*={cs.mu_star:.7f} c*={cs.c_star:.7f} (oracle {mu_o:.7f}, {c_o:.7f}) in {dt:.3f}s")


def test_03_front_speed(gaussian):
    t0 = time.perf_counter()
    grid = solver.Grid(80.0, 4096)
    path = drivers.sample_path(drivers.Constant(1.0), 0.0, 40.0, 40.0)
    dt = solver.stability_dt(gaussian, path)
    f0 = solver.Field.front(grid, waves.phi_plus(1.0, grid.x), 1.0)
    tr = solver.evolve(f0, gaussian, path, "fixed", 0.0, 40.0, dt, snapshot_every=0.5, keep_values=False)
    est = waves.measure_c_star(tr)
    el = time.perf_counter() - t0
    rel = abs(est.slope / math.exp(0.5) - 1.0)
    record(3, rel <= 0.03 and el < 60.0,
           f"level-0.5 speed {est.slope:.5f} vs 1.6487 ({100 * rel:.2f}% off), dt={dt:.4g}, {el:.1f}s")


def test_04_random_driver_speed(gaussian):
    devs = []
    for seed in range(8):
        path = drivers.sample_path(drivers.Telegraph(0.5, 1.5, 1.0, 1.0, seed), 0.0, 2000.0, 0.05)
        sf = speed.SpeedFunction(gaussian, path, 0.8)
        t = np.linspace(0.0, 2000.0, 4001)
        C = np.asarray(speed.position_C(sf, t))
        slope = waves.measure_c_star(C, t).slope
        average = C[-1] / 2000.0
        devs.append(abs(slope / average - 1.0))
    worst = max(devs)
    record(4, worst <= 0.02, f"max |slope/average - 1| over seeds 0-7 = {100 * worst:.2f}% "
                             f"(mean {100 * np.mean(devs):.2f}%)")


def test_05_sandwich(gaussian_wave, laplace_wave):
    parts, ok = [], True
    for name, w in (("gaussian", gaussian_wave), ("laplace", laplace_wave)):
        checks = w.meta["sandwich_checks"]
        ok &= w.sandwich_violations == 0 and checks > 0
        parts.append(f"{name}: {w.sandwich_violations} violations in {checks} checks, "
                     f"smallest gap {w.sandwich_margin - 10 * w.grid.h * w.mu:.3g} (tol {10 * w.grid.h * w.mu:.3g})")
    record(5, ok, "; ".join(parts))


def test_06_monotone_limit(gaussian_wave):
    d = gaussian_wave.distances
    ok = all(b < a for a, b in zip(d, d[1:])) and d[-1] < 1e-4
    record(6, ok, f"distances along n={gaussian_wave.meta['n_schedule']}: " + ", ".join(f"{v:.3g}" for v in d))


def test_07_tail_normalization(gaussian_wave):
    tail, left = gaussian_wave.tail_deviation(), gaussian_wave.left_min()
    record(7, tail <= 0.05 and left >= 0.99, f"tail deviation {tail:.4g} on [10, 16], left min {left:.6f}")


def test_08_stability(gaussian):
    t0 = time.perf_counter()
    w = waves.build_wave(gaussian, drivers.Constant(1.0), 0.5, reach=60.0)
    res = stability.run_stability(w, stability.PerturbationSpec.bump(0.3, 5.0, 0.0), horizon=60.0)
    el = time.perf_counter() - t0
    rise = float(np.max(np.diff(res.alpha)))
    ok = (res.distance[-1] < 0.01 and res.alpha_monotone and 1.0 <= res.alpha[-1] <= 1.02
          and el < 120.0 and np.all(res.tail <= 0.1) and np.all(res.sandwich_gap >= 0))
    record(8, ok, f"final distance {res.distance[-1]:.3g}, final alpha {res.alpha[-1]:.6g}, "
                  f"largest alpha rise {rise:.2g}, delta {res.delta:.3g}, {el:.1f}s")


def test_09_comparison():
    worst, fails = math.inf, 0
    for seed in range(50):
        lo, up, K, a, mode, mu = verification.random_case(seed)
        r = verification.comparison_check(lo, up, K, a, mode, horizon=5.0, mu=mu)
        worst = min(worst, r.detail["min_gap"])
        fails += not r.passed
    lo, up, K, a, mode, mu = verification.random_case(0)
    eq = verification.comparison_check(up, up, K, a, mode, horizon=5.0, mu=mu).detail["min_gap"]
    record(9, fails == 0 and abs(eq) <= 1e-12,
           f"{50 - fails}/50 ordered pairs kept order (min gap {worst:.3g}); equal pair gap {eq:.3g}")


def _residual_verdicts(K, spec, mu, mu_star, N, which):
    grid = solver.Grid(40.0, N)
    T = drivers.default_block_length(spec)
    step = 2 * T if drivers.is_autonomous(spec) else 0.01
    path = drivers.sample_path(spec, -T, T, step)
    p0 = waves.sub_super_params(K, path, mu, mu_star, T=T)
    d = 1.01 * which(mu, p0.mu_tilde, p0.eps, p0.A, p0.a_max)
    p = waves.SubSuperParams(mu, p0.mu_tilde, d, p0.eps, p0.A, T, p0.a_max, mu_star)
    out = [verification.residual_phi_plus(K, path, mu, grid)]
    out += [verification.residual_phi_minus(K, path, p, grid, t=t) for t in (-0.5 * T, 0.0, 0.5 * T)]
    return out


def test_10_residual_signs(gaussian):
    cases = [("constant", drivers.Constant(1.0), 1.0), ("periodic", drivers.Periodic(1.0, 0.5, 2.0), None)]
    ok, parts = True, []
    for name, spec, mu_star in cases:
        if mu_star is None:
            mu_star = speed.critical_mu(gaussian, spec, horizon=200.0).mu_star
        for label, which in (("d_min", waves.d_min), ("d_required", waves.d_required)):
            coarse = _residual_verdicts(gaussian, spec, 0.5, mu_star, 1601, which)
            fine = _residual_verdicts(gaussian, spec, 0.5, mu_star, 3201, which)
            same = all(a.passed == b.passed for a, b in zip(coarse, fine))
            ok &= same and all(c.passed for c in coarse + fine)
            top = max(c.detail["max"] for c in coarse[1:] + fine[1:])
            parts.append(f"{name}/{label}: min G[phi+]={min(coarse[0].detail['min'], fine[0].detail['min']):.2g}, "
                         f"max G[phi-]={top:.2g}")
    record(10, ok, "; ".join(parts) + f" (tol >= {fine[0].detail['tol']:.2g}, N=1601 and 3201 agree)")


def test_11_means_and_blocks():
    p = drivers.sample_path(drivers.Periodic(1.0, 0.5, 2 * math.pi), 0.0, 2000.0, 0.05)
    est = drivers.mean_estimate(p)
    ok = abs(est.least - 1.0) <= 1e-3 and abs(est.upper - 1.0) <= 1e-3
    specs = [drivers.Constant(1.0), drivers.Periodic(1.0, 0.5, 2 * math.pi), drivers.Periodic(2.0, 1.5, 3.0),
             drivers.Quasiperiodic(1.0, 0.3, 1.0, 0.2)]
    specs += [drivers.Telegraph(0.5, 1.5, 1.0, 1.0, s) for s in range(8)]
    worst = 0.0
    for spec in specs:
        T = drivers.default_block_length(spec)
        H = 50 * T
        path = drivers.sample_path(spec, 0.0, H, H if drivers.is_autonomous(spec) else 0.01)
        blk = drivers.block_decomposition(path, T)
        bound = 2 * T * drivers.upper_mean(path)
        worst = max(worst, blk.sup_norm() / bound)
    ok &= worst <= 1.0
    record(11, ok, f"periodic means {est.least:.5f}, {est.upper:.5f}; "
                   f"max |A|/(2T upper mean) over {len(specs)} paths = {worst:.3f}")


def test_12_cocycle(gaussian):
    spec = drivers.Telegraph(0.5, 1.5, 1.0, 1.0, seed=9)
    path = drivers.sample_path(spec, 0.0, 200.0, 0.05)
    sf = speed.SpeedFunction(gaussian, path, 0.5)
    rng = np.random.default_rng(12)
    worst = 0.0
    for t, s in rng.uniform(0.0, 100.0, size=(100, 2)):
        err = speed.position_C(sf, t + s) - speed.position_C(sf, t) - speed.position_C(speed.shifted(sf, t), s)
        worst = max(worst, abs(err))
    record(12, worst <= 1e-10, f"max cocycle defect over 100 pairs = {worst:.3g}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
