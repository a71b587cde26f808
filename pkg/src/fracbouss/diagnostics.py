"""Norms, energy-balance residuals, low-frequency energy, decay fits and the
two-solution stability experiment.

Time series are plain column mappings ``{name: 1-D array}`` (see
``Recorder.columns`` for the column order written to CSV).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import linregress

from . import littlewood_paley as lp
from . import spectral as sp
from .errors import (MissingColumn, NegativeIndexOnNonzeroMean, TooFewSamples,
                     UnresolvableShell, ViolationDetected, WindowUnresolvable)
from .solver import FlowState, get_stepper, viscosity


def japanese(t):
    """<t> = (1 + t^2)^(1/2)."""
    return np.sqrt(1.0 + np.asarray(t, dtype=float) ** 2)


def shell_radius(t, beta, alpha):
    """g(t) = (beta <t>)^(-1/alpha), a physical wavenumber."""
    return (beta * japanese(t)) ** (-1.0 / alpha)


def _fmt(x):
    return "inf" if np.isinf(x) else f"{x:g}"


# ---------------------------------------------------------------- norms

def sobolev_norm(f, s):
    """Homogeneous H^s norm (sum_{k != 0} |k|^{2s} |c_k|^2 L^2)^(1/2)."""
    g = f.grid
    if s < 0:
        scale = np.sqrt(g.spectral_sum(np.abs(f.coeffs) ** 2))
        if abs(f.coeffs[0, 0]) > 1e-14 * scale:
            raise NegativeIndexOnNonzeroMean(
                f"H^{s} norm needs a mean-zero field (mean={f.coeffs[0, 0].real:.3e})")
    if s == 0:
        return sp.l2_norm(f)
    dens = np.zeros(g.shape)
    nz = g.kmag > 0
    dens[nz] = g.kmag[nz] ** (2 * s) * np.abs(f.coeffs[nz]) ** 2
    return g.L * math.sqrt(g.spectral_sum(dens))


def e0_functional(theta0, u0, q, s0):
    """Return (cal_E0, E0) with E0 = cal_E0 (1 + cal_E0) and

    cal_E0 = |theta0|_{H^-s0} + |theta0|_{L^2} + (|u0|_{L^2} + |theta0|_{L^q})(1 + |theta0|_{L^q}).
    """
    lq = sp.lp_norm(theta0, q)
    u2 = math.hypot(sp.l2_norm(u0[0]), sp.l2_norm(u0[1]))
    cal = sobolev_norm(theta0, -s0) + sp.l2_norm(theta0) + (u2 + lq) * (1.0 + lq)
    return cal, cal * (1.0 + cal)


def low_frequency_energy(theta, g_radius):
    """Energy of the nonzero modes with |k| <= g_radius."""
    gr = theta.grid
    sel = (gr.kmag <= g_radius) & (gr.kmag > 0)
    return gr.L ** 2 * gr.spectral_sum(np.where(sel, np.abs(theta.coeffs) ** 2, 0.0))


@dataclass
class SchonbekSample:
    t: float
    g: float
    measured: float
    bound_shape: float
    ratio: float
    resolvable: bool


def schonbek_low_energy(theta, t, beta, alpha, s0, E0=1.0):
    """Low-frequency energy inside |k| <= g(t) and the shape E0^2 <t>^(-2 s0/alpha)."""
    if not beta > s0 / alpha:
        raise ValueError(f"beta={beta} must exceed s0/alpha={s0 / alpha:.6g}")
    g = float(shell_radius(t, beta, alpha))
    resolvable = g >= theta.grid.h
    if not resolvable:
        warnings.warn(f"g({t:g})={g:.3e} below the lattice spacing {theta.grid.h:.3e}",
                      UnresolvableShell, stacklevel=2)
    measured = low_frequency_energy(theta, g)
    shape = E0 ** 2 * float(japanese(t)) ** (-2.0 * s0 / alpha)
    return SchonbekSample(float(t), g, measured, shape,
                          measured / shape if shape > 0 else math.inf, resolvable)


def schonbek_heat_bound(theta0, t, beta, alpha, s0):
    """g(t)^{2 s0} |theta0|^2_{H^-s0}, the bound for the free semigroup."""
    g = float(shell_radius(t, beta, alpha))
    return g ** (2 * s0) * sobolev_norm(theta0.mean_free(), -s0) ** 2


def heat_semigroup(theta0, t, alpha, kappa=1.0):
    """exp(-t kappa |D|^alpha) theta0."""
    g = theta0.grid
    return sp.SpectralField(g, np.exp(-t * kappa * g.kmag ** alpha) * theta0.coeffs)


def heat_series(theta0, alpha, times, beta_list=(), kappa=1.0):
    """Exact free-semigroup series: l2_theta (mean-free) and low-frequency energies."""
    g = theta0.grid
    th0 = theta0.mean_free()
    dens0 = np.abs(th0.coeffs) ** 2
    rate = 2.0 * kappa * g.kmag ** alpha
    out = {"t": np.asarray(times, dtype=float)}
    l2 = []
    low = {b: [] for b in beta_list}
    for t in out["t"]:
        dens = dens0 * np.exp(-t * rate)
        l2.append(g.L * math.sqrt(g.spectral_sum(dens)))
        for b in beta_list:
            sel = g.kmag <= shell_radius(t, b, alpha)
            low[b].append(g.L ** 2 * g.spectral_sum(np.where(sel, dens, 0.0)))
    out["l2_theta"] = np.array(l2)
    for b in beta_list:
        out[f"low_freq_energy[beta={_fmt(b)}]"] = np.array(low[b])
    return out


# ---------------------------------------------------------------- recording

@dataclass
class DiagSpec:
    p_list: tuple = (2.0, 4.0, np.inf)
    beta_list: tuple = (2.0,)
    s0: float = 1.0
    q: float = 1.2
    besov_p: float = 24.0
    sample_every: int = 10


@dataclass
class DiagnosticsRecord:
    t: float
    l2_theta: float
    theta_mean: float
    l2_u: float
    hdot_alpha2_theta: float
    hdot1_u: float
    hdot_neg_s0_theta: float
    lp_theta: dict
    besov_theta: float
    low_freq_energy: dict
    energy_theta: float
    energy_u: float
    diss_theta: float
    diss_u: float
    buoyancy_work: float
    int_diss_theta: float
    int_diss_u: float
    int_buoyancy: float
    div_u: float
    theta_min: float
    cl_theta_besov: float
    cl_u_b32: float
    sup_grad_u: float
    dtu_l2l2: float


class Recorder:
    """Accumulates per-step balance integrals and emits records on demand.

    Rates are evaluated every step from the physical fields the stepper
    already formed; cumulative integrals use the trapezoid rule in t.
    """

    def __init__(self, grid, params, spec):
        self.grid, self.params, self.spec = grid, params, spec
        self.part = lp.build_partition(grid)
        self._js_u = np.array(self.part.indices(lp.HOMOGENEOUS))
        self._phi2 = np.array([self.part.symbol(j, lp.HOMOGENEOUS) ** 2 for j in self._js_u])
        self.ka = np.where(grid.kmag > 0, grid.kmag, 0.0) ** params.alpha
        self.records = []
        self._prev = None
        self._int = np.zeros(3)
        self._cl_theta = 0.0
        self._u_blocks_prev = None
        self._u_blocks_int = np.zeros(len(self._js_u))
        self._sup_grad = 0.0
        self._dtu = 0.0
        self._t_rec = None

    def _rates(self, th, u1, u2, phys):
        g, prm = self.grid, self.params
        L2 = g.L ** 2
        e_th = 0.5 * L2 * g.spectral_sum(np.abs(th) ** 2)
        e_u = 0.5 * L2 * g.spectral_sum(np.abs(u1) ** 2 + np.abs(u2) ** 2)
        d_th = prm.kappa * L2 * g.spectral_sum(self.ka * np.abs(th) ** 2)
        mu = viscosity(phys["theta"], prm)
        s12 = phys["u1y"] + phys["u2x"]
        # 2 mu d:d with d11 = -d22 = u1x, d12 = s12/2
        d_u = float(np.sum(mu * (4.0 * phys["u1x"] ** 2 + s12 ** 2))) * g.dx ** 2
        b = L2 * g.spectral_sum((np.conj(th) * u2).real)
        return np.array([e_th, e_u, d_th, d_u, b])

    def update(self, t, th, u1, u2, phys):
        """Call once per time level (including t=0 and the final one)."""
        r = self._rates(th, u1, u2, phys)
        if self._prev is not None:
            t0, r0, u10, u20 = self._prev
            dt = t - t0
            self._int += 0.5 * dt * (r0[2:] + r[2:])
            g = self.grid
            if dt > 0:
                du = g.spectral_sum(np.abs(u1 - u10) ** 2 + np.abs(u2 - u20) ** 2)
                self._dtu += g.L ** 2 * du / dt
        self._prev = (t, r, u1, u2)
        return r

    def record(self, state, phys=None):
        g, prm, spec = self.grid, self.params, self.spec
        th, u1, u2 = state.arrays()
        if self._prev is None or self._prev[0] != state.t:
            if phys is None:
                phys = get_stepper(g, prm, 1.0).nonlinear(th, u1, u2)[3]
            self.update(state.t, th, u1, u2, phys)
        elif phys is None:
            phys = get_stepper(g, prm, 1.0).nonlinear(th, u1, u2)[3]
        r = self._prev[1]
        theta = state.theta
        tf = theta.mean_free()
        thp = phys["theta"]
        lp_vals = {p: sp.lp_norm_values(thp, p, g.dx) for p in spec.p_list}
        besov = lp.besov_norm(theta, prm.alpha / 2, spec.besov_p, np.inf,
                              lp.INHOMOGENEOUS, self.part)
        self._cl_theta = max(self._cl_theta, besov)
        low = {b: low_frequency_energy(theta, float(shell_radius(state.t, b, prm.alpha)))
               for b in spec.beta_list}
        grad_u = math.hypot(sobolev_norm(state.u[0], 1.0), sobolev_norm(state.u[1], 1.0))
        self._sup_grad = max(self._sup_grad, grad_u)
        ub = g.L ** 2 * np.array([g.spectral_sum(p2 * (np.abs(u1) ** 2 + np.abs(u2) ** 2))
                                  for p2 in self._phi2])
        if self._u_blocks_prev is not None:
            self._u_blocks_int += 0.5 * (state.t - self._t_rec) * (self._u_blocks_prev + ub)
        self._u_blocks_prev, self._t_rec = ub, state.t
        cl_u = float(np.max(2.0 ** (1.5 * self._js_u) * np.sqrt(self._u_blocks_int)))
        rec = DiagnosticsRecord(
            t=state.t,
            l2_theta=sp.l2_norm(tf),
            theta_mean=theta.mean,
            l2_u=math.hypot(sp.l2_norm(state.u[0]), sp.l2_norm(state.u[1])),
            hdot_alpha2_theta=sobolev_norm(tf, prm.alpha / 2),
            hdot1_u=grad_u,
            hdot_neg_s0_theta=sobolev_norm(tf, -spec.s0),
            lp_theta=lp_vals,
            besov_theta=besov,
            low_freq_energy=low,
            energy_theta=r[0], energy_u=r[1],
            diss_theta=r[2], diss_u=r[3], buoyancy_work=r[4],
            int_diss_theta=self._int[0], int_diss_u=self._int[1], int_buoyancy=self._int[2],
            div_u=sp.l2_norm(sp.divergence(state.u)),
            theta_min=float(thp.min()),
            cl_theta_besov=self._cl_theta,
            cl_u_b32=cl_u,
            sup_grad_u=self._sup_grad,
            dtu_l2l2=math.sqrt(self._dtu),
        )
        self.records.append(rec)
        return rec

    def columns(self):
        spec, a = self.spec, self.params.alpha
        cols = ["t", "l2_theta", "theta_mean", "l2_u",
                f"hdot_theta[s={_fmt(a / 2)}]", "hdot_u[s=1]",
                f"hdot_theta[s={_fmt(-spec.s0)}]"]
        cols += [f"lp_theta[p={_fmt(p)}]" for p in spec.p_list]
        cols.append(f"besov_theta[s={_fmt(a / 2)};p={_fmt(spec.besov_p)};r=inf]")
        cols += [f"low_freq_energy[beta={_fmt(b)}]" for b in spec.beta_list]
        cols += ["energy_theta", "energy_u", "diss_theta", "diss_u", "buoyancy_work",
                 "int_diss_theta", "int_diss_u", "int_buoyancy", "div_u", "theta_min",
                 f"cl_theta[sigma=inf;s={_fmt(a / 2)};p={_fmt(spec.besov_p)};r=inf]",
                 "cl_u[sigma=2;s=1.5;p=2;r=inf]", "sup_t_hdot_u[s=1]", "dtu[sigma=2;p=2]"]
        return cols

    def rows(self):
        out = []
        for r in self.records:
            row = [r.t, r.l2_theta, r.theta_mean, r.l2_u, r.hdot_alpha2_theta, r.hdot1_u,
                   r.hdot_neg_s0_theta]
            row += [r.lp_theta[p] for p in self.spec.p_list]
            row.append(r.besov_theta)
            row += [r.low_freq_energy[b] for b in self.spec.beta_list]
            row += [r.energy_theta, r.energy_u, r.diss_theta, r.diss_u, r.buoyancy_work,
                    r.int_diss_theta, r.int_diss_u, r.int_buoyancy, r.div_u, r.theta_min,
                    r.cl_theta_besov, r.cl_u_b32, r.sup_grad_u, r.dtu_l2l2]
            out.append([float(v) for v in row])
        return out

    def series(self):
        cols = self.columns()
        data = np.array(self.rows(), dtype=float).reshape(-1, len(cols))
        return {c: data[:, i] for i, c in enumerate(cols)}


def write_csv(path, series):
    cols = list(series)
    n = len(series[cols[0]]) if cols else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(n):
            w.writerow(["%.17g" % series[c][i] for c in cols])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return {}
    cols = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    data = data.reshape(-1, len(cols))
    return {c: data[:, i] for i, c in enumerate(cols)}


def _col(series, name):
    if name not in series:
        raise MissingColumn(name)
    return np.asarray(series[name], dtype=float)


def find_column(series, prefix):
    """First column whose name starts with ``prefix``."""
    for c in series:
        if c.startswith(prefix):
            return c
    raise MissingColumn(prefix)


# ---------------------------------------------------------------- residuals

def _rate_residual(t, e, rate):
    if len(t) < 3:
        raise TooFewSamples(f"need >= 3 samples, got {len(t)}")
    de = (e[2:] - e[:-2]) / (t[2:] - t[:-2])
    return np.abs(de + rate[1:-1])


def temperature_balance_residual(series, mode="rate"):
    """Relative defect of d/dt (1/2)|theta|^2 + |theta|^2_{H^{alpha/2}} = 0.

    ``rate`` uses centred differences between samples; ``cumulative`` uses
    the running trapezoid integral of the dissipation.  Both are divided by
    the initial fluctuation energy |theta_0 - mean|^2.
    """
    t = _col(series, "t")
    e = _col(series, "energy_theta")
    if len(t) < 3:
        raise TooFewSamples(f"need >= 3 samples, got {len(t)}")
    norm = _col(series, "l2_theta")[0] ** 2
    if mode == "rate":
        res = _rate_residual(t, e, _col(series, "diss_theta"))
    elif mode == "cumulative":
        res = np.abs(e - e[0] + _col(series, "int_diss_theta"))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if norm == 0:
        return 0.0 if not res.max() else math.inf
    return float(res.max() / norm)


def velocity_balance_residual(series, mode="rate"):
    """Relative defect of d/dt (1/2)|u|^2 + 2 int mu d:d - int theta u_2 = 0.

    Normalised by max_t |u|^2, so the rate form is relative per unit time.
    """
    t = _col(series, "t")
    e = _col(series, "energy_u")
    if len(t) < 3:
        raise TooFewSamples(f"need >= 3 samples, got {len(t)}")
    norm = 2.0 * e.max()
    if mode == "rate":
        res = _rate_residual(t, e, _col(series, "diss_u") - _col(series, "buoyancy_work"))
    elif mode == "cumulative":
        res = np.abs(e - e[0] + _col(series, "int_diss_u") - _col(series, "int_buoyancy"))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if norm == 0:
        return 0.0 if not res.max() else math.inf
    return float(res.max() / norm)


# ---------------------------------------------------------------- decay fits

@dataclass
class DecayFit:
    window: tuple
    fitted_slope: float
    slope_stderr: float
    theoretical_slope: float
    resolvable: bool
    intercept: float = 0.0
    n_samples: int = 0
    g_end: float = 0.0
    g_threshold: float = 0.0

    def to_dict(self):
        return asdict(self)


def fit_decay(series, window, alpha, s0, L, beta=1.0, gate_factor=4.0, column="l2_theta"):
    """Least-squares slope of log |theta(t)| against log <t> on ``window``.

    The window must start at t >= 1 and end where the shell radius
    g(t_b) = (beta <t_b>)^(-1/alpha) is still >= gate_factor * 2 pi / L.
    """
    ta, tb = float(window[0]), float(window[1])
    if ta < 1.0 or tb <= ta:
        raise WindowUnresolvable(f"window [{ta}, {tb}] must satisfy 1 <= t_a < t_b")
    g_end = float(shell_radius(tb, beta, alpha))
    thresh = gate_factor * 2.0 * np.pi / L
    if g_end < thresh:
        raise WindowUnresolvable(
            f"g({tb:g})={g_end:.4g} < {gate_factor:g}*2pi/L={thresh:.4g}")
    t = _col(series, "t")
    y = _col(series, column)
    sel = (t >= ta - 1e-12) & (t <= tb + 1e-12) & (y > 0)
    if sel.sum() < 10:
        raise TooFewSamples(f"{int(sel.sum())} samples in window, need >= 10")
    res = linregress(np.log(japanese(t[sel])), np.log(y[sel]))
    return DecayFit((ta, tb), float(res.slope), float(res.stderr), -s0 / alpha, True,
                    float(res.intercept), int(sel.sum()), g_end, thresh)


# ---------------------------------------------------------------- maximum principle

def max_principle_check(series, p_list=(2.0, 4.0, np.inf), rtol=1e-5, strict=True):
    """Check |theta(t)|_{L^p} <= |theta_0|_{L^p} (1 + rtol) at every sample.

    Returns {p: worst relative excess}.  With ``strict`` a violation raises
    ViolationDetected carrying the first offending (t, p); otherwise the
    excesses are only reported (useful for transport without dissipation).
    """
    t = _col(series, "t")
    report = {}
    for p in p_list:
        v = _col(series, f"lp_theta[p={_fmt(p)}]")
        ref = v[0]
        excess = v / ref - 1.0 if ref > 0 else np.where(v > 0, np.inf, 0.0)
        report[p] = float(excess.max()) if excess.size else 0.0
        bad = np.nonzero(excess > rtol)[0]
        if strict and bad.size:
            i = int(bad[0])
            raise ViolationDetected(
                f"L^{_fmt(p)} norm grew by {excess[i]:.3e} at t={t[i]:g}", float(t[i]), p)
    return report


# ---------------------------------------------------------------- stability

def perturb(state, delta, seed=0):
    """Add relative perturbations of size ``delta`` to theta and u (mean-free, solenoidal)."""
    g = state.grid
    rng = np.random.default_rng(seed)
    th_scale = sp.l2_norm(state.theta.mean_free()) or 1.0
    u_scale = math.hypot(sp.l2_norm(state.u[0]), sp.l2_norm(state.u[1])) or 1.0
    dth = lp.random_field(g, rng, slope=-1.0)
    du = lp.random_solenoidal(g, rng)
    du_norm = math.hypot(sp.l2_norm(du[0]), sp.l2_norm(du[1]))
    th = state.theta + dth * (delta * th_scale)
    u = tuple(state.u[i] + du[i] * (delta * u_scale / du_norm) for i in range(2))
    return FlowState(th, u, state.t, state.theta_shift)


@dataclass
class StabilityResult:
    t: np.ndarray
    Y: np.ndarray
    du2: np.ndarray
    dth2: np.ndarray
    dth_besov2: np.ndarray
    gamma: float
    growth_factor: float
    K_envelope: float
    K_fit: float
    extra: dict = field(default_factory=dict)

    def sqrtY(self):
        return np.sqrt(self.Y)


def stability_experiment(state1, state2, params, T, dt, gamma):
    """Co-evolve two solutions and track

    Y(t) = sup_s |du|^2 + sup_s |dtheta|^2 + sup_s |dtheta|^2_{B^0_{gamma,inf}}

    (homogeneous Besov norm, sup over s in [0, t]).  Returns the series with
    the growth factor Y(T)/Y(0) and two empirical exponents: the envelope
    K = max_t log(Y(t)/Y(0))/t and a least-squares rate of log Y.
    """
    g = state1.grid
    if state2.grid != g:
        raise ValueError("states live on different grids")
    part = lp.build_partition(g)
    stepper = get_stepper(g, params, float(dt))
    a = list(state1.arrays())
    b = list(state2.arrays())
    nsteps = int(round(T / dt))

    def parts(a, b):
        dth = sp.SpectralField(g, a[0] - b[0])
        du2 = g.L ** 2 * g.spectral_sum(np.abs(a[1] - b[1]) ** 2 + np.abs(a[2] - b[2]) ** 2)
        dt2 = sp.l2_norm(dth) ** 2
        bes = lp.besov_norm(dth, 0.0, gamma, np.inf, lp.HOMOGENEOUS, part) ** 2
        return du2, dt2, bes

    ts = np.empty(nsteps + 1)
    comps = np.empty((nsteps + 1, 3))
    ts[0] = state1.t
    comps[0] = parts(a, b)
    for n in range(1, nsteps + 1):
        a = list(stepper.advance(*a))
        b = list(stepper.advance(*b))
        ts[n] = state1.t + n * dt
        comps[n] = parts(a, b)
    running = np.maximum.accumulate(comps, axis=0)
    Y = running.sum(axis=1)
    rel_t = ts - ts[0]
    if Y[0] > 0:
        growth = float(Y[-1] / Y[0])
        with np.errstate(divide="ignore"):
            logs = np.log(Y[1:] / Y[0]) / rel_t[1:]
        K_env = float(max(logs.max(), 0.0)) if logs.size else 0.0
        K_fit = float(linregress(rel_t, np.log(Y)).slope) if len(Y) > 2 else 0.0
    else:
        growth, K_env, K_fit = (1.0 if not Y.any() else math.inf), 0.0, 0.0
    return StabilityResult(ts, Y, running[:, 0], running[:, 1], running[:, 2], gamma,
                           growth, K_env, K_fit,
                           {"final_states": (FlowState.from_arrays(g, *a, ts[-1]),
                                             FlowState.from_arrays(g, *b, ts[-1]))})
