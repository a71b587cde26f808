import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracbouss import littlewood_paley as lp
from fracbouss import spectral as sp
from fracbouss.errors import EmptySeries, GridTooCoarse, IndexOutOfRange, NotDivergenceFree

HOM, INH = lp.HOMOGENEOUS, lp.INHOMOGENEOUS


@pytest.fixture(scope="module")
def grid():
    return sp.Grid(128)


@pytest.fixture(scope="module")
def part(grid):
    return lp.build_partition(grid)


def lattice_mode(grid, nx, ny):
    """cos(h (nx x + ny y)) built directly in the half spectrum, ny >= 0."""
    f = sp.SpectralField.zeros(grid)
    f.coeffs[nx % grid.N, ny] = 0.5
    if ny == 0:
        f.coeffs[-nx % grid.N, 0] = 0.5
    return f


def test_profile_supports():
    r = np.linspace(0, 4, 4001)
    chi, phi = lp.chi(r), lp.phi(r)
    assert np.all(chi[r <= 0.75] == 1.0) and np.all(chi[r >= 4 / 3] == 0.0)
    assert np.all(phi[(r < 0.75) | (r > 8 / 3)] == 0.0)
    assert lp.chi(np.array([0.0]))[0] == 1.0 and lp.phi(np.array([0.0]))[0] == 0.0


def test_partition_of_unity(part, grid):
    inh = sum(part.symbol(j, INH) for j in part.indices(INH))
    assert np.abs(inh - 1).max() < 1e-12
    hom = sum(part.symbol(j, HOM) for j in part.indices(HOM))
    nz = grid.nmag > 0
    assert np.abs(hom[nz] - 1).max() < 1e-12


def test_build_partition_shell_count():
    part = lp.build_partition(sp.Grid(256))
    assert len(part.indices(HOM)) >= 6
    assert len(part.shells_below_cutoff()) >= 5
    with pytest.raises(GridTooCoarse):
        lp.build_partition(sp.Grid(16))


def test_block_support(part, grid):
    for j in part.indices(HOM):
        sym = part.symbol(j, HOM)
        n = grid.nmag[sym > 0]
        assert n.min() >= 0.75 * 2.0 ** j - 1e-12 and n.max() <= 8 / 3 * 2.0 ** j + 1e-12
    n = grid.nmag[part.symbol(-1, INH) > 0]
    assert n.max() <= 4 / 3


def test_block_single_mode(part, grid):
    j = 3
    f = lattice_mode(grid, 8, 0)  # |n| = 2^3
    assert np.allclose(lp.block(f, j, HOM, part).coeffs, part.symbol(j, HOM)[8, 0] * f.coeffs)
    for far in (j - 2, j + 2):
        assert np.abs(lp.block(f, far, HOM, part).coeffs).max() == 0.0


def test_block_constant(part, grid):
    c = sp.SpectralField.from_physical(grid, np.full((grid.N, grid.N), 2.5))
    assert np.allclose(lp.block(c, -1, INH, part).coeffs, c.coeffs)
    for j in part.indices(INH)[1:]:
        assert np.abs(lp.block(c, j, INH, part).coeffs).max() == 0.0


def test_block_index_out_of_range(part, grid):
    f = lattice_mode(grid, 1, 1)
    with pytest.raises(IndexOutOfRange):
        lp.block(f, part.j_max + 1, HOM, part)
    with pytest.raises(IndexOutOfRange):
        lp.block(f, -5, INH, part)


def test_reconstruction_and_low_cutoff(part, grid):
    rng = np.random.default_rng(0)
    for _ in range(5):
        f = lp.random_field(grid, rng, mean_zero=False)
        dec = lp.decompose(f, INH, part)
        assert sp.l2_norm(dec.reconstruct() - f) <= 1e-10 * sp.l2_norm(f)
        g = lp.random_field(grid, rng)
        assert sp.l2_norm(lp.decompose(g, HOM, part).reconstruct() - g) <= 1e-10
        top = lp.low_cutoff(f, part.j_max + 1, INH, part)
        assert sp.l2_norm(top - f) <= 1e-10 * sp.l2_norm(f)
        # partial sums telescope
        j = 3
        partial = sum((lp.block(f, i, INH, part) for i in range(-1, j)), sp.SpectralField.zeros(grid))
        assert sp.l2_norm(lp.low_cutoff(f, j, INH, part) - partial) <= 1e-12
    c = sp.SpectralField.from_physical(grid, np.ones((grid.N, grid.N)))
    assert np.allclose(lp.low_cutoff(c, 0, INH, part).coeffs, c.coeffs)
    assert np.abs(lp.low_cutoff(lattice_mode(grid, 40, 0), 2, INH, part).coeffs).max() == 0.0


def test_homogeneous_decomposition_reports_dropped_mean(part, grid):
    f = sp.SpectralField.from_physical(grid, 3.0 + np.zeros((grid.N, grid.N)))
    assert lp.decompose(f, HOM, part).dropped_mean == pytest.approx(3.0)


def test_almost_orthogonality(part, grid):
    f = lp.random_field(grid, np.random.default_rng(1))
    for a in part.indices(HOM):
        for b in part.indices(HOM):
            if abs(a - b) >= 2:
                prod = part.symbol(a, HOM) * part.symbol(b, HOM) * f.coeffs
                assert np.abs(prod).max() <= 1e-12


def test_besov_single_shell(part, grid):
    # |n| = 12 lies where phi(2^-3 n) = 1, so only shell 3 is active
    g = lattice_mode(grid, 12, 0)
    assert part.symbol(3, HOM)[12, 0] == 1.0
    assert all(part.symbol(j, HOM)[12, 0] == 0.0 for j in part.indices(HOM) if j != 3)
    for p in (2.0, 4.0, np.inf):
        expect = 2.0 ** (3 * 0.7) * sp.lp_norm(g, p)
        assert lp.besov_norm(g, 0.7, p, np.inf, HOM, part) == pytest.approx(expect, rel=1e-12)


def test_besov_b022_bounds_and_monotonicity(part, grid):
    rng = np.random.default_rng(2)
    for _ in range(100):
        f = lp.random_field(grid, rng, slope=rng.uniform(-2, 0))
        b = lp.besov_norm(f, 0.0, 2.0, 2.0, HOM, part)
        assert 2 ** -0.5 - 1e-12 <= b / sp.l2_norm(f) <= 1.0 + 1e-12
        r_vals = [lp.besov_norm(f, 0.4, 3.0, r, HOM, part) for r in (1.0, 2.0, 4.0, np.inf)]
        assert all(x >= y - 1e-12 for x, y in zip(r_vals, r_vals[1:]))


@settings(max_examples=20, deadline=None)
@given(st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3), st.integers(0, 1000))
def test_besov_homogeneity(c, seed):
    g = sp.Grid(64)
    part = lp.build_partition(g)
    f = lp.random_field(g, np.random.default_rng(seed))
    a = lp.besov_norm(f * c, 0.5, 2.0, np.inf, INH, part)
    b = lp.besov_norm(f, 0.5, 2.0, np.inf, INH, part)
    assert a == pytest.approx(abs(c) * b, rel=1e-12)


def test_chemin_lerner_examples(part, grid):
    rng = np.random.default_rng(3)
    f = lp.random_field(grid, rng)
    times = np.linspace(0, 2.0, 9)
    series = [(t, f) for t in times]
    for sigma in (1.0, 2.0):
        cl = lp.chemin_lerner_norm(series, 0.4, 2.0, np.inf, sigma)
        assert cl == pytest.approx(2.0 ** (1 / sigma) * lp.besov_norm(f, 0.4, 2.0, np.inf), rel=1e-12)
    # single-shell field: time norm of one weighted block norm
    g = lattice_mode(grid, 12, 0)
    series = [(t, g * np.exp(-t)) for t in times]
    cl = lp.chemin_lerner_norm(series, 0.5, 2.0, np.inf, 2.0, HOM)
    from scipy.integrate import trapezoid
    vals = [2 ** 1.5 * sp.l2_norm(g) * np.exp(-t) for t in times]
    assert cl == pytest.approx(np.sqrt(trapezoid(np.square(vals), times)), rel=1e-12)
    with pytest.raises(EmptySeries):
        lp.chemin_lerner_norm([], 0, 2, 2, 2)


def test_minkowski_ordering(grid):
    rng = np.random.default_rng(4)
    times = np.linspace(0, 1, 6)
    series = [(t, lp.random_field(grid, rng)) for t in times]
    # sigma <= r: time norm inside is the smaller one; sigma >= r: reversed
    inside = lp.chemin_lerner_norm(series, 0.3, 2.0, np.inf, 2.0)
    outside = lp.time_outside_norm(series, 0.3, 2.0, np.inf, 2.0)
    assert inside <= outside * (1 + 1e-12)
    inside = lp.chemin_lerner_norm(series, 0.3, 2.0, 1.0, np.inf)
    outside = lp.time_outside_norm(series, 0.3, 2.0, 1.0, np.inf)
    assert inside >= outside * (1 - 1e-12)


def test_bony_examples(part, grid):
    rng = np.random.default_rng(5)
    w = lp.random_field(grid, rng)
    u = lp.block(w, 1, INH, part)
    v = lp.block(lp.random_field(grid, rng), 5, INH, part)
    tuv, tvu, rem = lp.bony_decompose(u, v, INH, part)
    prod = sp.product(u, v)
    scale = sp.l2_norm(prod)
    assert sp.l2_norm(tuv - prod) <= 1e-8 * scale
    assert sp.l2_norm(tvu) <= 1e-8 * scale and sp.l2_norm(rem) <= 1e-8 * scale
    s = lattice_mode(grid, 12, 0)  # a single shell: only the remainder survives
    tuv, tvu, rem = lp.bony_decompose(s, s, INH, part)
    assert sp.l2_norm(tuv) + sp.l2_norm(tvu) <= 1e-12 * sp.l2_norm(rem)
    assert sp.l2_norm(rem - sp.product(s, s)) <= 1e-12
    f, g = lp.random_field(grid, rng), lp.random_field(grid, rng)
    parts = lp.bony_decompose(f, g, INH, part)
    direct = sp.product(f, g)
    assert sp.l2_norm(parts[0] + parts[1] + parts[2] - direct) <= 1e-8 * sp.l2_norm(direct)


def test_commutator_constant_velocity(part, grid):
    f = lp.random_field(grid, np.random.default_rng(6))
    u = tuple(sp.SpectralField.from_physical(grid, np.full((grid.N, grid.N), c)) for c in (0.3, -1.2))
    scale = sp.l2_norm(sp.gradient(f)[0])
    for j in part.indices(HOM):
        assert sp.l2_norm(lp.commutator(u, f, j, HOM, part)) <= 1e-12 * scale


def test_commutator_leakage_small(part, grid):
    rng = np.random.default_rng(7)
    u = lp.random_solenoidal(grid, rng)
    u = tuple(lp.block(c, 0, INH, part) for c in u)  # very low frequency velocity
    f = lp.block(lp.random_field(grid, rng), 5, HOM, part)
    full = sp.l2_norm(sp.product(u[0], sp.gradient(f)[0]))
    # shell 1 is far from shell 5 and u only shifts frequencies by O(1)
    assert sp.l2_norm(lp.commutator(u, f, 1, HOM, part)) <= 1e-12 * full


def test_commutator_requires_divergence_free(grid):
    f = lp.random_field(grid, np.random.default_rng(8))
    psi = lp.random_field(grid, np.random.default_rng(9))
    with pytest.raises(NotDivergenceFree):
        lp.commutator(sp.gradient(psi), f, 2)


def test_bernstein_single_mode(grid):
    lam_n = 5.0
    f = lattice_mode(grid, 3, 4)
    gx, gy = sp.gradient(f)
    ratio = np.hypot(sp.l2_norm(gx), sp.l2_norm(gy)) / sp.l2_norm(f)
    assert ratio == pytest.approx(lam_n * grid.h, rel=1e-12)


def test_bernstein_harness(grid, part):
    rep = lp.bernstein_harness(20, grid, seed=1, partition=part)
    assert rep["passed"]
    assert min(rep["annulus"]["2"]["lower_by_j"]) >= 0.75
    assert rep["ball"]["C_k0"] > 0 and np.isfinite(rep["ball"]["C_k1"])


def test_commutator_harness(grid, part):
    rep = lp.commutator_harness(10, grid, seed=2, partition=part)
    assert rep["passed"] and rep["max_ratio"] <= 50
    assert rep["constant_u_residual"] <= 1e-12


def test_verify_suite_fault_injection():
    assert lp.verify_suite(0)["passed"]
    rep = lp.verify_suite(1, 128, _fault=0.01)
    assert not rep["suites"]["reconstruction"]["passed"]
