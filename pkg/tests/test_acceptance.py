"""End-to-end acceptance checks.  Each test prints one PASS/FAIL line, and the
lines are repeated in the terminal summary.  The reference runs take a few
minutes in total."""

import math
import time
import warnings

import numpy as np
import pytest

from fracbouss import admissibility as adm
from fracbouss import config as cfgmod
from fracbouss import diagnostics as dg
from fracbouss import littlewood_paley as lp
from fracbouss import runner
from fracbouss import spectral as sp
from fracbouss.reference import run_reference
from fracbouss.solver import FlowState, InitSpec, PhysParams, get_stepper, make_initial_data

pytestmark = [pytest.mark.slow, pytest.mark.filterwarnings("ignore:soft constraint")]


def report(log, n, ok, text):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}"
    log.append(line)
    print(line)
    assert ok, line


def reference_config(dt=1e-3):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = cfgmod.validate(cfgmod.RunConfig())
    # N=128, L=32 pi, alpha=0.8, eps=0.05, T=10, records every 0.01
    cfg.time.dt_max = dt
    cfg.time.sample_every = int(round(0.01 / dt))
    return cfg


@pytest.fixture(scope="module")
def reference_run():
    t0 = time.perf_counter()
    res = runner.run_simulation(reference_config(1e-3))
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def reference_run_half():
    return runner.run_simulation(reference_config(5e-4))


@pytest.fixture(scope="module")
def decay_run():
    # admissible set with a box large enough for the whole-space rate to show
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = cfgmod.loads("""
[grid]
N = 256
L = 64 pi
[phys]
alpha = 1.0
epsilon = 0.05
[init]
seed = 1
amp_theta = 0.0015
amp_u = 0.0001
xi_c = 1.25
[time]
mode = cfl
dt_max = 0.02
T_end = 7.5
sample_every = 5
[diagnostics]
q = 1.02
s0 = 1.9
beta_list = 2
[fit]
window = 3, 7.5
beta = 1
gate = 4
""")
    return cfg, runner.run_simulation(cfg)


@pytest.fixture(scope="module")
def heat_oracle():
    g = sp.Grid(1024, 128 * np.pi)
    spec = InitSpec(seed=1, amp_theta=1.0, amp_u=0.0, a=1.0, xi_c=2.0, nonnegative_shift=False)
    th0 = make_initial_data(spec, g).theta
    return g, spec, th0


def test_criterion_1_temperature_identity(reference_run, reference_run_half, acceptance_log):
    res, elapsed = reference_run
    r1 = dg.temperature_balance_residual(res.series, "cumulative")
    r2 = dg.temperature_balance_residual(reference_run_half.series, "cumulative")
    ok = r1 <= 1e-4 and r1 / r2 >= 3.0 and elapsed <= 300.0
    report(acceptance_log, 1, ok,
           f"temperature residual {r1:.3e} at dt=1e-3, {r2:.3e} at dt=5e-4 "
           f"(ratio {r1 / r2:.2f} >= 3), run time {elapsed:.0f} s <= 300 s")


def test_criterion_2_velocity_balance(reference_run, acceptance_log):
    res, _ = reference_run
    r = dg.velocity_balance_residual(res.series, "rate")
    report(acceptance_log, 2, r <= 1e-3, f"velocity balance residual {r:.3e} per unit time <= 1e-3")


def test_criterion_3_maximum_principle(reference_run, acceptance_log):
    res, _ = reference_run
    try:
        rep = dg.max_principle_check(res.series, (2.0, 4.0, np.inf), rtol=1e-5)
        ok = True
    except Exception as exc:  # ViolationDetected
        rep, ok = {"error": str(exc)}, False
    text = ", ".join(f"p={dg._fmt(p)}: {v:.2e}" for p, v in rep.items()) if ok else rep["error"]
    report(acceptance_log, 3, ok, f"worst L^p growth over {len(res.series['t'])} samples: {text}")


def test_criterion_4_decay_rates(heat_oracle, decay_run, acceptance_log):
    g, spec, th0 = heat_oracle
    alpha = 0.8
    series = dg.heat_series(th0, alpha, np.linspace(0, 8, 161))
    fit = dg.fit_decay(series, (3.0, 8.0), alpha, 1.0, g.L)
    expect = -adm.heat_decay_exponent(spec.a, alpha)
    heat_ok = abs(fit.fitted_slope / expect - 1) <= 0.05
    cfg, res = decay_run
    nl = dg.fit_decay(res.series, cfg.fit.window, cfg.phys.alpha, cfg.diagnostics.s0, cfg.grid.L,
                      cfg.fit.beta, cfg.fit.gate)
    nl_ok = nl.fitted_slope <= nl.theoretical_slope + 0.1
    report(acceptance_log, 4, heat_ok and nl_ok,
           f"pure heat slope {fit.fitted_slope:.4f} vs {expect:.4f} (5%); nonlinear slope "
           f"{nl.fitted_slope:.4f} <= {nl.theoretical_slope + 0.1:.4f}")


def test_criterion_5_schonbek(heat_oracle, decay_run, acceptance_log):
    g, _, th0 = heat_oracle
    alpha, s0, beta = 0.8, 1.5, 2.0
    times = np.linspace(0, 8, 161)
    series = dg.heat_series(th0, alpha, times, beta_list=(beta,))
    meas = series[f"low_freq_energy[beta={dg._fmt(beta)}]"]
    bound = np.array([dg.schonbek_heat_bound(th0, t, beta, alpha, s0) for t in times])
    heat_ok = bool(np.all(meas <= bound))
    cfg, res = decay_run
    sch = res.summary["schonbek"][dg._fmt(2.0)]
    nl_ok = "max_over_min" in sch and sch["max_over_min"] <= 2.0
    report(acceptance_log, 5, heat_ok and nl_ok,
           f"pure heat bound holds at {int(np.sum(meas <= bound))}/{len(times)} samples; "
           f"nonlinear ratio max/min {sch.get('max_over_min', float('nan')):.3f} <= 2 "
           f"on t in [{sch['window'][0]:.2f}, {sch['window'][1]:.2f}]")


def test_criterion_6_littlewood_paley(acceptance_log):
    t0 = time.perf_counter()
    rep = lp.verify_suite(100, 128)
    elapsed = time.perf_counter() - t0
    s = rep["suites"]
    ok = rep["passed"] and elapsed <= 120.0
    report(acceptance_log, 6, ok,
           f"reconstruction {s['reconstruction']['max_residual']:.1e}, orthogonality "
           f"{s['almost_orthogonality']['max_residual']:.1e}, Bony {s['bony']['max_residual']:.1e}, "
           f"Bernstein spread {max(v['upper_spread'] for v in s['bernstein']['annulus'].values()):.2f}/"
           f"{max(v['lower_spread'] for v in s['bernstein']['annulus'].values()):.2f}, "
           f"constant-u commutator {s['commutator']['constant_u_residual']:.1e}, {elapsed:.0f} s")


def test_criterion_7_admissibility(acceptance_log):
    alphas = adm.alpha_scan(2 / 3, 1.0, 0.05)
    rep = adm.scan_report(alphas)
    nonempty = all(not s["empty"] for s in rep["summaries"])
    _, low = adm.enumerate_region([0.5, 0.6, 2 / 3])
    empty = all(s["empty"] and s["binding"] for s in low)
    verbatim = rep["discrepancies"] == list(adm.DISCREPANCIES)
    ok = nonempty and empty and rep["all_exact_confirmed"] and verbatim and len(alphas) == 7
    report(acceptance_log, 7, ok,
           f"alpha {alphas[0]}..{alphas[-1]}: {sum(s['n_passing'] for s in rep['summaries'])} "
           f"passing tuples, all nonempty; alpha <= 2/3 empty; exact path confirmed; "
           f"{len(rep['discrepancies'])} discrepancies reported")


def test_criterion_8_stability(acceptance_log):
    cfg = reference_config()
    T, dt = 10.0, 0.01
    grid, params, s0 = runner.build(cfg)
    twin = FlowState.from_arrays(grid, *(a.copy() for a in s0.arrays()), s0.t, s0.theta_shift)
    gamma = adm.gamma_exponent(params.alpha, cfg.diagnostics.p)
    same = dg.stability_experiment(s0, twin, params, T, dt, gamma)
    a = runner.run_stability(cfg, 1e-6, T=T, dt=dt)
    b = runner.run_stability(cfg, 5e-7, T=T, dt=dt)
    ratio = a.sqrtY() / b.sqrtY()
    scaling = bool(np.all(np.abs(ratio / 2 - 1) <= 0.05))
    growth_ok = math.isfinite(a.K_envelope) and a.growth_factor <= math.exp(a.K_envelope * T) * (1 + 1e-12)
    ok = bool(np.all(same.Y == 0)) and scaling and growth_ok
    report(acceptance_log, 8, ok,
           f"identical data max Y = {same.Y.max():.1e}; sqrt(Y) ratio under halving in "
           f"[{ratio.min():.6f}, {ratio.max():.6f}]; Y(T)/Y(0) = {a.growth_factor:.3f} <= "
           f"exp({a.K_envelope:.4f} T), gamma = {gamma:.4f}")


def test_criterion_9_cross_validation(acceptance_log):
    g = sp.Grid(128)
    params = PhysParams(alpha=0.8, epsilon=0.0)
    s = make_initial_data(InitSpec(seed=3, amp_theta=0.0, amp_u=0.004, xi_c=0.5), g)
    dt, T = 1e-3, 1.0
    stepper = get_stepper(g, params, dt)
    arrs = s.arrays()
    for _ in range(int(round(T / dt))):
        arrs = stepper.advance(*arrs)
    final = FlowState.from_arrays(g, *arrs, T)
    r1, r2 = run_reference(s.u[0].physical(), s.u[1].physical(), g.L, T, dt)
    p1, p2 = final.u[0].physical(), final.u[1].physical()
    rel = math.sqrt(np.sum((p1 - r1) ** 2 + (p2 - r2) ** 2) / np.sum(r1 ** 2 + r2 ** 2))
    report(acceptance_log, 9, rel <= 1e-5, f"relative L2 difference at t=1: {rel:.2e} <= 1e-5")
