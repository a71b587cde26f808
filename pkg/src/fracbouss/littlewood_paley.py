"""Dyadic frequency decomposition, Besov and Chemin-Lerner norms, paraproducts.

Frequencies are measured in lattice units (multiples of 2*pi/L), so shell
indices do not depend on the resolution N.  The low-pass profile ``chi`` is
1 on |xi| <= 3/4 and 0 on |xi| >= 4/3; ``phi(xi) = chi(xi/2) - chi(xi)``
lives on 3/4 <= |xi| <= 8/3 and the blocks telescope exactly.

Block L^p norms use uniform-grid quadrature; L^inf is the grid maximum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid

from . import spectral as sp
from .errors import EmptySeries, GridTooCoarse, IndexOutOfRange, NotDivergenceFree

INHOMOGENEOUS = "inhomogeneous"
HOMOGENEOUS = "homogeneous"

BALL_RADIUS = 4.0 / 3.0
ANNULUS = (3.0 / 4.0, 8.0 / 3.0)


def _glue(x):
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = _glue(x)
    b = _glue(1.0 - x)
    return a / (a + b)


def chi(r):
    lo, hi = ANNULUS[0], BALL_RADIUS
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - lo) / (hi - lo))


def phi(r):
    r = np.asarray(r, dtype=float)
    return chi(r / 2.0) - chi(r)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    grid: sp.Grid
    j_min: int
    j_max: int
    fault: float = 0.0

    @cached_property
    def _symbols(self):
        n = self.grid.nmag
        out = {}
        for j in range(self.j_min, self.j_max + 1):
            out[(HOMOGENEOUS, j)] = phi(n / 2.0 ** j)
        out[(INHOMOGENEOUS, -1)] = chi(n)
        for j in range(0, self.j_max + 1):
            out[(INHOMOGENEOUS, j)] = out[(HOMOGENEOUS, j)]
        if self.fault:
            # test hook: break the partition of unity on one shell
            j = min(1, self.j_max)
            for fl in (HOMOGENEOUS, INHOMOGENEOUS):
                out[(fl, j)] = out[(fl, j)] * (1.0 + self.fault)
        return out

    def indices(self, flavor=INHOMOGENEOUS):
        lo = -1 if flavor == INHOMOGENEOUS else self.j_min
        return list(range(lo, self.j_max + 1))

    def symbol(self, j, flavor=INHOMOGENEOUS):
        _check_flavor(flavor)
        key = (flavor, j)
        if key not in self._symbols:
            raise IndexOutOfRange(f"block {j} outside {self.indices(flavor)} ({flavor})")
        return self._symbols[key]

    def low_symbol(self, j, flavor=INHOMOGENEOUS):
        """Symbol of S_j = sum_{j' <= j-1} Delta_j'."""
        _check_flavor(flavor)
        idx = [i for i in self.indices(flavor) if i <= j - 1]
        total = np.zeros(self.grid.shape)
        for i in idx:
            total = total + self._symbols[(flavor, i)]
        return total

    def shells_below_cutoff(self):
        """Dyadic indices j >= 0 whose annulus lies inside the dealias cutoff."""
        cut = self.grid.cutoff
        return [j for j in range(0, self.j_max + 1)
                if 2.0 ** j * ANNULUS[1] <= cut * (1 + 1e-12)]


def _check_flavor(flavor):
    if flavor not in (INHOMOGENEOUS, HOMOGENEOUS):
        raise ValueError(f"unknown flavor {flavor!r}")


def build_partition(grid, _fault=0.0):
    """Dyadic partition resolving every lattice wavenumber of ``grid``.

    ``j_max`` is the smallest index with chi(2^-(j_max+1) xi) = 1 on the
    whole lattice, so the telescoping sum reconstructs exactly.  On a torus
    the smallest nonzero |xi| is 1, so the homogeneous range starts at -1.
    """
    nmax = float(grid.nmag.max())
    j_max = int(np.ceil(np.log2(nmax / ANNULUS[0]))) - 1
    while 2.0 ** -(j_max + 1) * nmax > ANNULUS[0]:
        j_max += 1
    j_min = -1
    part = DyadicPartition(grid, j_min, j_max, fault=_fault)
    if len(part.shells_below_cutoff()) + 1 < 4:
        raise GridTooCoarse(
            f"N={grid.N}: fewer than 4 dyadic shells below the dealias cutoff")
    return part


@dataclass
class BlockDecomposition:
    flavor: str
    blocks: list = field(default_factory=list)  # list of (j, SpectralField)
    dropped_mean: float = 0.0

    def reconstruct(self):
        out = None
        for _, b in self.blocks:
            out = b if out is None else out + b
        return out


def block(f, j, flavor=INHOMOGENEOUS, partition=None):
    part = partition or build_partition(f.grid)
    return sp.SpectralField(f.grid, part.symbol(j, flavor) * f.coeffs)


def low_cutoff(f, j, flavor=INHOMOGENEOUS, partition=None):
    part = partition or build_partition(f.grid)
    return sp.SpectralField(f.grid, part.low_symbol(j, flavor) * f.coeffs)


def decompose(f, flavor=INHOMOGENEOUS, partition=None):
    part = partition or build_partition(f.grid)
    dec = BlockDecomposition(flavor)
    for j in part.indices(flavor):
        dec.blocks.append((j, block(f, j, flavor, part)))
    if flavor == HOMOGENEOUS:
        dec.dropped_mean = f.mean
    return dec


def block_lp_norms(f, p_list, flavor=INHOMOGENEOUS, partition=None):
    """Return (js, {p: array of ||Delta_j f||_{L^p}})."""
    part = partition or build_partition(f.grid)
    js = part.indices(flavor)
    out = {p: np.empty(len(js)) for p in p_list}
    for i, j in enumerate(js):
        vals = sp.inverse(part.symbol(j, flavor) * f.coeffs, f.grid.N)
        for p in p_list:
            out[p][i] = sp.lp_norm_values(vals, p, f.grid.dx)
    return np.array(js), out


def lr_norm(terms, r):
    terms = np.asarray(terms, dtype=float)
    if np.isinf(r):
        return float(terms.max()) if terms.size else 0.0
    return float(np.sum(terms ** r) ** (1.0 / r))


def besov_norm(f, s, p, r, flavor=INHOMOGENEOUS, partition=None):
    """||(2^{js} ||Delta_j f||_{L^p})_j||_{l^r}.

    The homogeneous flavor ignores the zero mode (see ``decompose`` for the
    dropped mean) and the shells below ``j_min``.
    """
    js, norms = block_lp_norms(f, [p], flavor, partition)
    return lr_norm(2.0 ** (js * s) * norms[p], r)


def _time_norm(values, times, sigma):
    if np.isinf(sigma):
        return values.max(axis=0)
    if len(times) == 1:
        return np.zeros(values.shape[1:])
    return trapezoid(values ** sigma, times, axis=0) ** (1.0 / sigma)


def chemin_lerner_from_blocks(times, js, block_norms, s, r, sigma):
    """Time norm inside the dyadic sum; ``block_norms`` has shape (nt, nj)."""
    inner_norm = _time_norm(np.asarray(block_norms, float), np.asarray(times, float), sigma)
    return lr_norm(2.0 ** (np.asarray(js) * s) * inner_norm, r)


def time_outside_from_blocks(times, js, block_norms, s, r, sigma):
    """||t -> ||f(t)||_{B^s_{p,r}}||_{L^sigma_T}, the Minkowski comparison."""
    weights = 2.0 ** (np.asarray(js) * s)
    per_t = np.array([lr_norm(weights * row, r) for row in np.asarray(block_norms, float)])
    return float(_time_norm(per_t[:, None], np.asarray(times, float), sigma)[0])


def _series_blocks(series, p, flavor):
    if not series:
        raise EmptySeries("Chemin-Lerner norm of an empty series")
    times = np.array([t for t, _ in series], dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("series must be time-ordered")
    part = build_partition(series[0][1].grid)
    rows = []
    js = None
    for _, f in series:
        js, norms = block_lp_norms(f, [p], flavor, part)
        rows.append(norms[p])
    return times, js, np.array(rows)


def chemin_lerner_norm(series, s, p, r, sigma, flavor=INHOMOGENEOUS):
    """Norm in L~^sigma_T(B^s_{p,r}) of a list of (t, SpectralField), trapezoid in t."""
    times, js, rows = _series_blocks(series, p, flavor)
    return chemin_lerner_from_blocks(times, js, rows, s, r, sigma)


def time_outside_norm(series, s, p, r, sigma, flavor=INHOMOGENEOUS):
    times, js, rows = _series_blocks(series, p, flavor)
    return time_outside_from_blocks(times, js, rows, s, r, sigma)


def _physical_blocks(f, flavor, part):
    return {j: sp.inverse(part.symbol(j, flavor) * f.coeffs, f.grid.N)
            for j in part.indices(flavor)}


def bony_decompose(u, v, flavor=INHOMOGENEOUS, partition=None):
    """Split u*v into (T_u v, T_v u, R(u, v)), each dealiased.

    T_u v = sum_j S_{j-1}u Delta_j v collects pairs whose u-index sits at
    least two below the v-index; R collects |j - j'| <= 1.
    """
    part = partition or build_partition(u.grid)
    ub = _physical_blocks(u, flavor, part)
    vb = _physical_blocks(v, flavor, part)
    js = part.indices(flavor)
    zero = np.zeros((u.grid.N, u.grid.N))
    t_uv, t_vu, rem = zero.copy(), zero.copy(), zero.copy()
    s_u, s_v = zero.copy(), zero.copy()  # running S_{j-1}
    for i, j in enumerate(js):
        if i >= 2:
            s_u = s_u + ub[js[i - 2]]
            s_v = s_v + vb[js[i - 2]]
        t_uv += s_u * vb[j]
        t_vu += s_v * ub[j]
        near = vb[j]
        if j - 1 in vb:
            near = near + vb[j - 1]
        if j + 1 in vb:
            near = near + vb[j + 1]
        rem += ub[j] * near
    g = u.grid
    return tuple(sp.dealias(sp.SpectralField.from_physical(g, a)) for a in (t_uv, t_vu, rem))


def _check_div_free(u, tol):
    div = sp.l2_norm(sp.divergence(u))
    scale = sp.l2_norm(sp.gradient(u[0])[0]) + sp.l2_norm(sp.gradient(u[0])[1]) \
        + sp.l2_norm(sp.gradient(u[1])[0]) + sp.l2_norm(sp.gradient(u[1])[1])
    if div > tol * max(scale, 1e-300) and div > 1e-300:
        raise NotDivergenceFree(f"||div u|| = {div:.3e} (relative tolerance {tol})")


def _advect_values(u_vals, f):
    fx, fy = sp.gradient(f)
    return u_vals[0] * fx.physical() + u_vals[1] * fy.physical()


def commutators(u, f, flavor=INHOMOGENEOUS, partition=None, js=None, tol=1e-10):
    """Return {j: Delta_j(u.grad f) - u.grad(Delta_j f)} for each block index."""
    _check_div_free(u, tol)
    part = partition or build_partition(f.grid)
    g = f.grid
    u_vals = (u[0].physical(), u[1].physical())
    adv = sp.dealias(sp.SpectralField.from_physical(g, _advect_values(u_vals, f)))
    out = {}
    for j in (js if js is not None else part.indices(flavor)):
        sym = part.symbol(j, flavor)
        fj = sp.SpectralField(g, sym * f.coeffs)
        second = sp.dealias(sp.SpectralField.from_physical(g, _advect_values(u_vals, fj)))
        out[j] = sp.SpectralField(g, sym * adv.coeffs - second.coeffs)
    return out


def commutator(u, f, j, flavor=INHOMOGENEOUS, partition=None, tol=1e-10):
    """[Delta_j, u.grad] f for a divergence-free u."""
    part = partition or build_partition(f.grid)
    part.symbol(j, flavor)
    return commutators(u, f, flavor, part, js=[j], tol=tol)[j]


# ---------------------------------------------------------------- harnesses

def random_field(grid, rng, slope=0.0, mean_zero=True):
    """Dealiased random field with |c_k| ~ |k|^slope, unit L^2 norm."""
    c = sp.forward(rng.standard_normal((grid.N, grid.N)))
    amp = np.ones(grid.shape)
    nz = grid.nmag > 0
    amp[nz] = grid.nmag[nz] ** slope
    c = c * amp * grid.dealias_mask
    if mean_zero:
        c[0, 0] = 0.0
    f = sp.SpectralField(grid, c)
    return f * (1.0 / sp.l2_norm(f))


def random_solenoidal(grid, rng, slope=-1.0):
    psi = random_field(grid, rng, slope=slope)
    u = sp.perp_gradient(psi)
    scale = 1.0 / max(sp.l2_norm(u[0]), sp.l2_norm(u[1]))
    return (u[0] * scale, u[1] * scale)


def _grad_mag_values(f):
    fx, fy = sp.gradient(f)
    return np.hypot(fx.physical(), fy.physical())


def bernstein_harness(samples, grid, seed=0, p_list=(2, np.inf), partition=None):
    """Empirical Bernstein constants for ball- and annulus-supported fields.

    Ball case (a=2, b=inf, d=2): ||u||_inf <= C lam ||u||_2 and
    ||grad u||_inf <= C lam^2 ||u||_2 for supp u^ in lam*B.
    Annulus case: c lam ||u||_a <= ||grad u||_a <= C lam ||u||_a, with
    lam = 2^j (2*pi/L); the spread of c and C across j is reported.
    """
    part = partition or build_partition(grid)
    rng = np.random.default_rng(seed)
    h = grid.h
    shells = part.shells_below_cutoff()
    ball_js = [j for j in shells if j >= 1]
    up = {p: {j: [] for j in shells} for p in p_list}
    lo = {p: {j: [] for j in shells} for p in p_list}
    ball0, ball1 = [], []
    for _ in range(samples):
        w = random_field(grid, rng)
        for j in shells:
            u = sp.SpectralField(grid, part.symbol(j, HOMOGENEOUS) * w.coeffs)
            lam = 2.0 ** j * h
            vals = u.physical()
            gm = _grad_mag_values(u)
            for p in p_list:
                ratio = sp.lp_norm_values(gm, p, grid.dx) / (lam * sp.lp_norm_values(vals, p, grid.dx))
                up[p][j].append(ratio)
                lo[p][j].append(ratio)
        for j in ball_js:
            u = sp.SpectralField(grid, part.low_symbol(j, INHOMOGENEOUS) * w.coeffs)
            lam = 2.0 ** j * h
            l2 = sp.l2_norm(u)
            ball0.append(np.abs(u.physical()).max() / (lam * l2))
            ball1.append(_grad_mag_values(u).max() / (lam ** 2 * l2))
    report = {"samples": samples, "shells": shells, "annulus": {}, "ball": {}}
    spread_ok = True
    for p in p_list:
        if samples == 0:
            break
        c_up = np.array([max(up[p][j]) for j in shells])
        c_lo = np.array([min(lo[p][j]) for j in shells])
        s_up = float(c_up.max() / c_up.min())
        s_lo = float(c_lo.max() / c_lo.min())
        key = "inf" if np.isinf(p) else str(p)
        report["annulus"][key] = {
            "upper_by_j": c_up.tolist(), "lower_by_j": c_lo.tolist(),
            "upper_spread": s_up, "lower_spread": s_lo,
        }
        spread_ok &= s_up <= 4.0 and s_lo <= 4.0
    if ball0:
        report["ball"] = {"C_k0": float(max(ball0)), "C_k1": float(max(ball1))}
    report["passed"] = bool(spread_ok)
    return report


def commutator_harness(samples, grid, alpha=0.8, p=2, seed=0, partition=None):
    """Monte-Carlo ratio sup_j 2^{j alpha/2}||R_j||_p / (||grad u||_inf ||f||_{B^{alpha/2}_{p,inf}}).

    Also checks that the commutator vanishes for spatially constant u.
    """
    part = partition or build_partition(grid)
    rng = np.random.default_rng(seed)
    ratios, const_resid = [], []
    js = part.indices(HOMOGENEOUS)
    weights = 2.0 ** (np.array(js) * alpha / 2)
    for _ in range(samples):
        u = random_solenoidal(grid, rng)
        f = random_field(grid, rng, slope=-1.0)
        com = commutators(u, f, HOMOGENEOUS, part)
        rj = np.array([sp.lp_norm(com[j], p) for j in js])
        grad_inf = max(np.abs(d.physical()).max() for c in u for d in sp.gradient(c))
        bes = besov_norm(f, alpha / 2, p, np.inf, HOMOGENEOUS, part)
        ratios.append(float((weights * rj).max() / (grad_inf * bes)))

        c = rng.standard_normal(2)
        uc = tuple(sp.SpectralField.from_physical(grid, np.full((grid.N, grid.N), ci)) for ci in c)
        com0 = commutators(uc, f, HOMOGENEOUS, part)
        ref = sp.l2_norm(sp.dealias(sp.SpectralField.from_physical(
            grid, _advect_values((uc[0].physical(), uc[1].physical()), f))))
        const_resid.append(max(sp.l2_norm(r) for r in com0.values()) / ref)
    return {
        "samples": samples,
        "alpha": alpha,
        "p": p,
        "max_ratio": float(max(ratios)) if ratios else 0.0,
        "constant_u_residual": float(max(const_resid)) if const_resid else 0.0,
        "passed": bool((not ratios) or (max(ratios) <= 50.0 and max(const_resid) <= 1e-12)),
    }


def verify_suite(samples, n=128, seed=0, L=sp.DEFAULT_L, alpha=0.8, _fault=0.0):
    """Run every Littlewood-Paley property check; returns a JSON-able report."""
    grid = sp.Grid(n, L)
    part = build_partition(grid, _fault=_fault)
    rng = np.random.default_rng(seed)
    recon, ortho, bony = [], [], []
    js = part.indices(HOMOGENEOUS)
    for _ in range(samples):
        f = random_field(grid, rng)
        f_mean = sp.SpectralField(grid, f.coeffs.copy())
        f_mean.coeffs[0, 0] = 0.3
        norm = np.abs(f_mean.coeffs).max()
        inh = sum(part.symbol(j) for j in part.indices()) * f_mean.coeffs
        hom = sum(part.symbol(j, HOMOGENEOUS) for j in js) * f.coeffs
        recon.append(max(np.abs(inh - f_mean.coeffs).max(), np.abs(hom - f.coeffs).max()) / norm)
        worst = 0.0
        for a in js:
            for b in js:
                if abs(a - b) >= 2:
                    c = part.symbol(a, HOMOGENEOUS) * part.symbol(b, HOMOGENEOUS) * f.coeffs
                    worst = max(worst, np.abs(c).max() / norm)
        ortho.append(worst)
        g = random_field(grid, rng)
        parts = bony_decompose(f, g, INHOMOGENEOUS, part)
        direct = sp.product(f, g)
        resid = sp.l2_norm(parts[0] + parts[1] + parts[2] - direct)
        bony.append(resid / max(sp.l2_norm(direct), 1e-300))
    bern = bernstein_harness(samples, grid, seed=seed + 1, partition=part)
    comm = commutator_harness(samples, grid, alpha=alpha, seed=seed + 2, partition=part)
    suites = {
        "reconstruction": {"max_residual": max(recon, default=0.0), "tolerance": 1e-10},
        "almost_orthogonality": {"max_residual": max(ortho, default=0.0), "tolerance": 1e-12},
        "bony": {"max_residual": max(bony, default=0.0), "tolerance": 1e-8},
    }
    for v in suites.values():
        v["passed"] = bool(v["max_residual"] <= v["tolerance"])
    suites["bernstein"] = bern
    suites["commutator"] = comm
    return {
        "samples": samples, "N": n, "L": L, "seed": seed,
        "j_range": [part.j_min, part.j_max],
        "suites": suites,
        "passed": all(s["passed"] for s in suites.values()),
    }
