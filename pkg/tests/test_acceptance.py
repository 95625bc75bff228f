"""Acceptance criteria, one test each.  Every test logs a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from nutrifront import cli
from nutrifront.core import (Field, Grid1D, ModelParams, branch_roots, branch_roots_bisect,
                             qtilde_min)
from nutrifront.estimates import (check_w_bounds, compactness_bounds, mass_bound,
                                  negative_branch_l1, phi_bounds, uniformity_ratio)
from nutrifront.limits import crossing_measure_kappa, sobolev_quotient_norm
from nutrifront.ode import integrate_point
from nutrifront.pde import SchemeConfig, invariant_drift, simulate
from nutrifront.scenarios import constant_data, grid_for, step_data
from nutrifront.waves import (WaveSetup, dispersion_roots, empirical_front_speed,
                              minimal_speed, solve_profile_bvp)

# root of v - ln v = 2 - ln 2 below 1 (mpmath, 40 digits)
V_MINUS = 0.40637573995995991


def _record(log, k, ok, detail):
    line = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    log.append(line)
    assert ok, line


def test_1_first_integral(acceptance_log):
    start = time.perf_counter()
    worst = 0.0
    for eps in (0.1, 0.01):
        p = ModelParams(eps=eps, mu=1.0, t_end=10.0)
        for u0 in (0.1, 1.0):
            for v0 in (0.5, 2.0):
                worst = max(worst, integrate_point(p, u0, v0, rel_tol=1e-8).max_relative_drift())
    elapsed = time.perf_counter() - start
    _record(acceptance_log, 1, worst <= 1e-8 and elapsed < 1.0,
            f"max |eps u + Q(v) - K|/(1+|K|) = {worst:.2e} (tol 1e-8), {elapsed:.2f}s (< 1s)")


def test_2_pointwise_limit(acceptance_log):
    start = time.perf_counter()
    p = ModelParams(eps=1e-3, mu=1.0)
    weight = math.log(2.0 / V_MINUS)
    tau_err, mass_err = 0.0, 0.0
    for x in (0.5, 1.0, 2.0):
        tr = integrate_point(p, None, 2.0, t_end=2 * x + 1, rel_tol=1e-6, phi0=-x)
        tau_err = max(tau_err, abs(tr.crossing_time() - x) / x)
        mass_err = max(mass_err, abs(tr.accumulated_mass() - weight) / weight)
    elapsed = time.perf_counter() - start
    ok = tau_err <= 0.05 and mass_err <= 0.02 and elapsed < 5.0
    _record(acceptance_log, 2, ok,
            f"crossing rel err {tau_err:.2e} (5%), mass rel err {mass_err:.2e} (2%), {elapsed:.2f}s")


def test_3_invariant_drift_refinement(acceptance_log):
    # step preset, eps = 0.1, dx and dt halved together
    drifts = []
    for lev in range(3):
        p = ModelParams(eps=0.1, mu=1.0, x_min=-5, x_max=5, n_cells=200 * 2**lev + 1, t_end=2.0)
        init = step_data(p)
        scheme = SchemeConfig.uniform_snapshots(2.0, 20 * 2**lev, dt_initial=0.01 / 2**lev)
        drifts.append(float(invariant_drift(simulate(p, init, scheme), init).max()))
    r1, r2 = drifts[0] / drifts[1], drifts[1] / drifts[2]
    _record(acceptance_log, 3, r1 >= 1.7 and r2 >= 1.7,
            f"drift {drifts[0]:.3g} -> {drifts[1]:.3g} -> {drifts[2]:.3g}, "
            f"ratios {r1:.2f}, {r2:.2f} (need >= 1.7)")


def test_4_estimate_uniformity(acceptance_log, default_sweep):
    sc, runs = default_sweep
    consts: dict[str, list[float]] = {}
    for init, rec in runs.values():
        reps = [check_w_bounds(rec, init), negative_branch_l1(rec, init, sc.R), mass_bound(rec)]
        reps += list(phi_bounds(rec).values())
        reps.append(compactness_bounds(rec, init, R=sc.R)["b"])
        for r in reps:
            consts.setdefault(r.name, []).append(r.fitted_constant)
    ratios = {k: uniformity_ratio(v) for k, v in consts.items()}
    bad = {k: round(v, 3) for k, v in ratios.items() if not v <= 3.0}
    worst = max(ratios, key=ratios.get)
    _record(acceptance_log, 4, not bad,
            f"worst ratio {worst}={ratios[worst]:.3g} (need <= 3); failing: {bad or 'none'}")


def test_5_hopf_cole_ceiling(acceptance_log, default_sweep):
    _, runs = default_sweep
    C = max(phi_bounds(rec)["c"].fitted_constant for _, rec in runs.values())
    maxima = [float(rec.phi.max()) for _, rec in runs.values()]
    under = all(rec.phi.max(axis=1).max() <= 2 * eps * math.log(1 / eps) + C * eps + 1e-14
                for eps, (_, rec) in runs.items())
    decreasing = all(a > b for a, b in zip(maxima, maxima[1:]))
    _record(acceptance_log, 5, under and decreasing,
            f"C = {C:.3f}, max phi = {[round(m, 4) for m in maxima]} (decreasing: {decreasing})")


def _front_speed(eps):
    p = ModelParams(eps=eps, mu=1.0, x_min=-20, x_max=20, n_cells=grid_for(eps, -20, 20), t_end=8.0)
    rec = simulate(p, step_data(p), SchemeConfig.uniform_snapshots(8.0, 80))
    return empirical_front_speed(rec, 1.0, (2.0, 8.0)).speed


def test_6_front_speed(acceptance_log):
    start = time.perf_counter()
    sigma = minimal_speed(math.log(2.0), 1.0)
    speeds = {eps: _front_speed(eps) for eps in (0.1, 0.05, 0.025)}
    errs = [abs(s - 2.0) for s in speeds.values()]
    elapsed = time.perf_counter() - start
    ok = (sigma == 2.0 and errs[1] <= 0.2 and errs[0] > errs[2] and elapsed < 180)
    _record(acceptance_log, 6, ok,
            f"sigma* = {sigma!r}, speeds {[round(s, 4) for s in speeds.values()]}, {elapsed:.1f}s")


def test_7_bvp_cross_check(acceptance_log):
    setup = WaveSetup.from_v_plus(2.0, 1.0, 0.05)
    prof = solve_profile_bvp(setup)
    target = dispersion_roots(setup.sigma, setup.w_plus, 1.0).roots[0].real
    rate = prof.tail_decay_rate()
    rel = abs(rate - target) / abs(target)
    ok = prof.converged and prof.monotone and prof.residual_norm <= 1e-9 and rel <= 0.05
    _record(acceptance_log, 7, ok,
            f"residual {prof.residual_norm:.1e}, monotone {prof.monotone}, "
            f"decay {rate:.4f} vs {target:.4f} (rel {rel:.3f}, tol 0.05)")


def test_8_sobolev_and_kappa(acceptance_log, default_sweep):
    sc, runs = default_sweep
    norms = [sobolev_quotient_norm(rec, 0.25, R=5.0) for _, rec in runs.values()]
    ratio = max(norms) / min(norms)
    g = Grid1D.uniform(-0.9, 0.9, 180001)
    deltas = np.geomspace(1e-3, 1e-1, 7)
    k1 = crossing_measure_kappa(Field(g, 1.0 + g.nodes), 1.0, deltas).kappa
    k3 = crossing_measure_kappa(Field(g, 1.0 + g.nodes**3), 1.0, deltas).kappa
    ok = ratio <= 3.0 and abs(k1 - 1) <= 0.1 and abs(k3 - 1 / 3) <= 0.05
    _record(acceptance_log, 8, ok,
            f"norms {[round(n, 3) for n in norms]} ratio {ratio:.3f} (<= 3), "
            f"kappa {k1:.4f} (1 +- 0.1), {k3:.4f} (1/3 +- 0.05)")


@pytest.mark.filterwarnings("ignore:dx = .* exceeds eps")
def test_9_oracle_equivalence(acceptance_log):
    rng = np.random.default_rng(20240501)
    worst = 0.0
    for mu, gap in zip(rng.uniform(0.1, 10.0, 1000), 10.0 ** rng.uniform(-6, 1.5, 1000)):
        q = qtilde_min(mu) + gap
        a, b = branch_roots(q, mu), branch_roots_bisect(q, mu)
        worst = max(worst, abs(a.w_minus - b.w_minus), abs(a.w_plus - b.w_plus))
    p = ModelParams(eps=0.1, mu=1.0, x_min=-1, x_max=1, n_cells=5, t_end=5.0)
    rec = simulate(p, constant_data(p, u0=1.0, v0=2.0), SchemeConfig(snapshot_times=(5.0,)))
    ref = integrate_point(p, 1.0, 2.0, t_end=5.0, rel_tol=1e-10).v_values[-1]
    pde_gap = float(np.max(np.abs(rec.v[-1] - ref)))
    _record(acceptance_log, 9, worst <= 1e-12 and pde_gap <= 1e-6,
            f"newton vs bisection {worst:.1e} (1e-12), pde vs ode in v {pde_gap:.1e} (1e-6)")


def test_10_determinism(acceptance_log, tmp_path, monkeypatch):
    argv = ["sweep", "--eps-list", "0.1,0.05", "--t-end", "1.0", "--n-snapshots", "20",
            "--t-probe", "0.7", "--x-min", "-5", "--x-max", "5"]
    blobs = []
    for k in range(2):
        root = tmp_path / f"run{k}"
        monkeypatch.setenv(cli.ENV_OUT, str(root))
        assert cli.main(argv) == 0
        (run,) = root.iterdir()
        blobs.append({f.name: f.read_bytes() for f in sorted(run.glob("*.csv"))})
    same = bool(blobs[0]) and blobs[0] == blobs[1]
    _record(acceptance_log, 10, same, f"{len(blobs[0])} csv files byte-identical: {same}")
