"""Run orchestration: build initial data from a RunConfig, integrate with
diagnostics, summarise, and write artifacts."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import admissibility as adm
from . import config as cfgmod
from . import diagnostics as dg
from . import spectral as sp
from .checkpoint import write_checkpoint
from .errors import CFLViolation, NonFiniteState, TooFewSamples, WindowUnresolvable
from .solver import FlowState, InitSpec, PhysParams, Stepper, cfl_dt, get_stepper, make_initial_data


class IOFailure(OSError):
    pass


def build(cfg):
    grid = sp.Grid(cfg.grid.N, cfg.grid.L)
    params = PhysParams(alpha=cfg.phys.alpha, epsilon=cfg.phys.epsilon, kappa=cfg.phys.kappa,
                        mu_profile=cfg.phys.mu_profile)
    it = cfg.init
    spec = InitSpec(seed=it.seed, amp_theta=it.amp_theta, amp_u=it.amp_u, a=it.a,
                    xi_c=it.xi_c, nonnegative_shift=it.shift)
    return grid, params, make_initial_data(spec, grid)


def diag_spec(cfg):
    d = cfg.diagnostics
    return dg.DiagSpec(p_list=tuple(d.p_list), beta_list=tuple(d.beta_list), s0=d.s0, q=d.q,
                       besov_p=d.p, sample_every=cfg.time.sample_every)


def integrate(state, params, recorder, T_end, dt_max, mode="fixed", cfl_factor=0.4,
              sample_every=10, progress=None):
    """Advance to T_end, feeding every time level to ``recorder``.

    ``fixed`` uses dt = dt_max and refuses steps beyond the CFL bound;
    ``cfl`` recomputes dt = min(cfl_dt, dt_max) each step.  Records are
    taken every ``sample_every`` steps and at the final time.
    """
    g = state.grid
    probe = get_stepper(g, params, 1.0)
    th, u1, u2 = state.arrays()
    t0 = t = state.t
    nsteps = int(round(T_end / dt_max)) if mode == "fixed" else None
    n = 0
    shift = state.theta_shift
    while True:
        done = (n >= nsteps) if nsteps is not None else (t >= t0 + T_end - 1e-12)
        first = probe.nonlinear(th, u1, u2)
        phys = first[3]
        recorder.update(t, th, u1, u2, phys)
        cur = FlowState.from_arrays(g, th, u1, u2, t, shift)
        if n % sample_every == 0 or done:
            recorder.record(cur, phys)
        if done:
            return cur
        limit = cfl_dt(cur, params, cfl_factor, u_phys=(phys["u1"], phys["u2"]))
        if mode == "fixed":
            if dt_max > limit * (1 + 1e-12):
                raise CFLViolation(f"dt={dt_max:.3e} exceeds CFL limit {limit:.3e} at t={t:.4f}")
            stepper, dt = get_stepper(g, params, float(dt_max)), dt_max
        else:
            dt = min(limit, dt_max, t0 + T_end - t)
            stepper = Stepper(g, params, dt)
        try:
            th, u1, u2 = stepper.advance(th, u1, u2, first)
        except NonFiniteState as exc:
            raise NonFiniteState(str(exc), t=t) from None
        n += 1
        t = t0 + n * dt if mode == "fixed" else t + dt
        if progress is not None:
            progress(t)


@dataclass
class RunResult:
    config: object
    initial: FlowState
    final: FlowState
    series: dict
    summary: dict = field(default_factory=dict)


def _finite(x):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def schonbek_ratios(series, alpha, s0, E0, beta, L, gate=4.0):
    """Ratio low-frequency energy / (E0^2 <t>^(-2 s0/alpha)) over the resolvable window
    t >= 1, g(t) >= gate * 2 pi / L.  Returns (t, ratio)."""
    t = series["t"]
    col = f"low_freq_energy[beta={beta:g}]"
    meas = dg._col(series, col)
    g = dg.shell_radius(t, beta, alpha)
    sel = (t >= 1.0) & (g >= gate * 2 * np.pi / L)
    shape = E0 ** 2 * dg.japanese(t[sel]) ** (-2.0 * s0 / alpha)
    return t[sel], meas[sel] / shape


def summarize(cfg, series, initial):
    ph, d, ft = cfg.phys, cfg.diagnostics, cfg.fit
    out = {"schema": cfgmod.SCHEMA}
    theta0 = initial.theta.mean_free()
    cal, E0 = dg.e0_functional(theta0, initial.u, d.q, d.s0)
    out["E0"] = {"cal_E0": cal, "E0": E0}
    out["theta_shift"] = initial.theta_shift
    res = {}
    for name, fn in (("temperature", dg.temperature_balance_residual),
                     ("velocity", dg.velocity_balance_residual)):
        for mode in ("rate", "cumulative"):
            try:
                res[f"{name}_{mode}"] = fn(series, mode)
            except TooFewSamples as exc:
                res[f"{name}_{mode}"] = f"unavailable: {exc}"
    out["balance_residuals"] = res
    out["max_principle"] = {dg._fmt(p): v for p, v in
                            dg.max_principle_check(series, d.p_list, strict=False).items()}
    try:
        fit = dg.fit_decay(series, ft.window, ph.alpha, d.s0, cfg.grid.L, ft.beta, ft.gate)
        out["decay_fit"] = fit.to_dict()
        out["decay_fit"]["upper_bound_ok"] = fit.fitted_slope <= fit.theoretical_slope + 0.1
    except (WindowUnresolvable, TooFewSamples) as exc:
        out["decay_fit"] = {"error": type(exc).__name__, "message": str(exc)}
    sch = {}
    for b in d.beta_list:
        if b <= d.s0 / ph.alpha:
            sch[dg._fmt(b)] = {"skipped": "beta <= s0/alpha"}
            continue
        tt, r = schonbek_ratios(series, ph.alpha, d.s0, E0, b, cfg.grid.L, ft.gate)
        if len(r) and np.all(r > 0):
            sch[dg._fmt(b)] = {"window": [tt[0], tt[-1]], "ratio_min": r.min(),
                               "ratio_max": r.max(), "max_over_min": r.max() / r.min()}
        else:
            sch[dg._fmt(b)] = {"skipped": "no resolvable samples"}
    out["schonbek"] = sch
    last = {k: v[-1] for k, v in series.items()} if len(series["t"]) else {}
    out["final"] = last
    out["admissibility"] = adm.check_wellposedness(ph.alpha, d.p, d.q, d.s0, ph.epsilon,
                                                   d.C_mu).to_dict()
    return _finite(out)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_finite(obj), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IOFailure(f"cannot create {path}: {exc}") from None


def write_artifacts(cfg, outdir, series, summary=None, final=None):
    _ensure_dir(outdir)
    try:
        with open(os.path.join(outdir, "config.ini"), "w", encoding="utf-8") as fh:
            fh.write(cfgmod.dumps(cfg))
        if "csv" in cfg.output.formats:
            dg.write_csv(os.path.join(outdir, "series.csv"), series)
        if summary is not None and "json" in cfg.output.formats:
            write_json(os.path.join(outdir, "summary.json"), summary)
        if final is not None and "checkpoint" in cfg.output.formats:
            params = PhysParams(alpha=cfg.phys.alpha, epsilon=cfg.phys.epsilon,
                                kappa=cfg.phys.kappa, mu_profile=cfg.phys.mu_profile)
            write_checkpoint(os.path.join(outdir, "final.chk"), final, params,
                             cfg.init.seed, cfg.output.checkpoint_itemsize)
    except OSError as exc:
        raise IOFailure(f"cannot write artifacts in {outdir}: {exc}") from None


def run_simulation(cfg, outdir=None, progress=None):
    """Integrate ``cfg`` to T_end; with ``outdir`` write CSV, JSON and checkpoint.

    On NonFiniteState the diagnostics gathered so far are flushed to
    ``outdir`` before the exception propagates.
    """
    grid, params, state0 = build(cfg)
    rec = dg.Recorder(grid, params, diag_spec(cfg))
    tm = cfg.time
    try:
        final = integrate(state0, params, rec, tm.T_end, tm.dt_max, tm.mode, tm.cfl_factor,
                          tm.sample_every, progress)
    except NonFiniteState as exc:
        if outdir is not None:
            partial = {"schema": cfgmod.SCHEMA, "status": "non-finite state",
                       "last_good_t": exc.t, "message": str(exc)}
            write_artifacts(cfg, outdir, rec.series(), partial)
        raise
    series = rec.series()
    summary = summarize(cfg, series, state0)
    if outdir is not None:
        write_artifacts(cfg, outdir, series, summary, final)
    return RunResult(cfg, state0, final, series, summary)


def stability_dt(state, params, dt_max, cfl_factor):
    return min(dt_max, cfl_dt(state, params, cfl_factor))


def run_stability(cfg, delta, T=None, dt=None, seed=12345, gamma=None):
    """Stability experiment on the configured initial data perturbed by ``delta``."""
    grid, params, state0 = build(cfg)
    d = cfg.diagnostics
    if gamma is None:
        gamma = adm.gamma_exponent(params.alpha, d.p, (d.gamma_min, d.gamma_max))
    other = dg.perturb(state0, delta, seed) if delta > 0 else state0
    T = cfg.time.T_end if T is None else T
    dt = stability_dt(state0, params, cfg.time.dt_max, cfg.time.cfl_factor) if dt is None else dt
    return dg.stability_experiment(state0, other, params, T, dt, gamma)
