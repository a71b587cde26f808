"""Fourier machinery on the periodic square [0, L)^2.

Fields are stored as real-to-complex half spectra of shape ``(N, N//2 + 1)``.
Axis 0 carries ``x`` and axis 1 carries ``y``.  The forward transform
includes the ``1/N^2`` factor, so a coefficient ``c_k`` is the Fourier
coefficient of ``f(x) = sum_k c_k exp(i k.x)``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import NegativePowerOnNonzeroMean

DEFAULT_L = 32.0 * np.pi


def _workers():
    try:
        return max(1, int(os.environ.get("FBSQ_THREADS", "1")))
    except ValueError:
        return 1


def forward(values):
    """Physical grid values -> half-spectrum coefficients (carries 1/N^2)."""
    return sfft.rfft2(values, norm="forward", workers=_workers())


def inverse(coeffs, n):
    """Half-spectrum coefficients -> physical grid values."""
    return sfft.irfft2(coeffs, s=(n, n), norm="forward", workers=_workers())


@dataclass(frozen=True)
class Grid:
    N: int
    L: float = DEFAULT_L

    def __post_init__(self):
        n = int(self.N)
        if n != self.N or n < 16 or n & (n - 1):
            raise ValueError(f"N must be a power of two >= 16, got {self.N!r}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L!r}")

    @property
    def shape(self):
        return (self.N, self.N // 2 + 1)

    @cached_property
    def h(self):
        """Lattice spacing in wavenumber, 2*pi/L."""
        return 2.0 * np.pi / self.L

    @cached_property
    def dx(self):
        return self.L / self.N

    @cached_property
    def x(self):
        return np.arange(self.N) * self.dx

    @cached_property
    def mesh(self):
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def nx(self):
        """Integer lattice index along axis 0, shape (N, 1)."""
        return np.fft.fftfreq(self.N, 1.0 / self.N)[:, None]

    @cached_property
    def ny(self):
        return np.fft.rfftfreq(self.N, 1.0 / self.N)[None, :]

    @cached_property
    def kx(self):
        return self.h * self.nx

    @cached_property
    def ky(self):
        return self.h * self.ny

    @cached_property
    def dkx(self):
        """Derivative symbol k_x with the Nyquist row removed."""
        k = self.kx.copy()
        k[self.N // 2, 0] = 0.0
        return k

    @cached_property
    def dky(self):
        k = self.ky.copy()
        k[0, -1] = 0.0
        return k

    @cached_property
    def k2(self):
        return self.kx ** 2 + self.ky ** 2

    @cached_property
    def kmag(self):
        return np.sqrt(self.k2)

    @cached_property
    def nmag(self):
        """|k| in lattice units (multiples of 2*pi/L)."""
        return np.sqrt(self.nx ** 2 + self.ny ** 2)

    @cached_property
    def k2_safe(self):
        k2 = self.k2.copy()
        k2[0, 0] = 1.0
        return k2

    @cached_property
    def cutoff(self):
        """Largest retained lattice index per axis under the 2/3 rule."""
        return (2.0 / 3.0) * (self.N / 2)

    @cached_property
    def dealias_mask(self):
        keep = (np.abs(self.nx) <= self.cutoff) & (np.abs(self.ny) <= self.cutoff)
        return keep.astype(float)

    @cached_property
    def k_nyquist(self):
        return self.h * self.N / 2

    @cached_property
    def weights(self):
        """Multiplicity of each half-spectrum column in the full spectrum."""
        w = np.full((1, self.N // 2 + 1), 2.0)
        w[0, 0] = 1.0
        w[0, -1] = 1.0
        return w

    def spectral_sum(self, density):
        """Sum a real per-mode density over the full spectrum."""
        return float(np.sum(self.weights * density))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray

    @classmethod
    def from_physical(cls, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.N, grid.N):
            raise ValueError(f"expected shape {(grid.N, grid.N)}, got {values.shape}")
        return cls(grid, forward(values))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def physical(self):
        return inverse(self.coeffs, self.grid.N)

    @property
    def mean(self):
        return float(self.coeffs[0, 0].real)

    def mean_free(self):
        c = self.coeffs.copy()
        c[0, 0] = 0.0
        return SpectralField(self.grid, c)

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


def l2_norm(f):
    """L^2(torus) norm by Parseval: ||f||^2 = L^2 * sum |c_k|^2."""
    g = f.grid
    return g.L * np.sqrt(g.spectral_sum(np.abs(f.coeffs) ** 2))


def inner(f, g):
    """Real L^2 inner product of two real fields."""
    grid = f.grid
    return grid.L ** 2 * grid.spectral_sum((np.conj(f.coeffs) * g.coeffs).real)


def lp_norm_values(values, p, dx):
    """Uniform-grid quadrature L^p norm of physical values; p may be inf."""
    a = np.abs(values)
    if np.isinf(p):
        return float(a.max())
    return float((np.sum(a ** p) * dx * dx) ** (1.0 / p))


def lp_norm(f, p):
    return lp_norm_values(f.physical(), p, f.grid.dx)


def apply_multiplier(f, s):
    """|D|^s f; the zero mode maps to zero whenever s != 0."""
    g = f.grid
    if s == 0:
        return SpectralField(g, f.coeffs.copy())
    if s < 0:
        scale = np.sqrt(g.spectral_sum(np.abs(f.coeffs) ** 2))
        if abs(f.coeffs[0, 0]) > 1e-14 * scale:
            raise NegativePowerOnNonzeroMean(
                f"|D|^{s} needs a mean-zero field (mean={f.coeffs[0, 0]:.3e})")
    sym = np.zeros(g.shape)
    nz = g.kmag > 0
    sym[nz] = g.kmag[nz] ** s
    return SpectralField(g, sym * f.coeffs)


def laplacian(f):
    return SpectralField(f.grid, -f.grid.k2 * f.coeffs)


def gradient(f):
    g = f.grid
    return (SpectralField(g, 1j * g.dkx * f.coeffs),
            SpectralField(g, 1j * g.dky * f.coeffs))


def perp_gradient(psi):
    """(-d_y psi, d_x psi), divergence-free by construction."""
    px, py = gradient(psi)
    return (-py, px)


def divergence(v):
    g = v[0].grid
    return SpectralField(g, 1j * g.dkx * v[0].coeffs + 1j * g.dky * v[1].coeffs)


def curl(v):
    g = v[0].grid
    return SpectralField(g, 1j * g.dkx * v[1].coeffs - 1j * g.dky * v[0].coeffs)


def deformation(v):
    """Symmetric gradient d(v) = (grad v + grad v^T)/2 as a nested 2x2 tuple."""
    g = v[0].grid
    (a11, a12), (a21, a22) = gradient(v[0]), gradient(v[1])
    # a1j = d_j v_1, a2j = d_j v_2
    d12 = SpectralField(g, 0.5 * (a12.coeffs + a21.coeffs))
    return ((a11, d12), (d12, a22))


def leray_project_arrays(grid, c1, c2):
    kdotv = (grid.dkx * c1 + grid.dky * c2) / grid.k2_safe
    return c1 - grid.dkx * kdotv, c2 - grid.dky * kdotv


def leray_project(v):
    """(I - k k^T/|k|^2) v_k for k != 0; the mean passes through."""
    g = v[0].grid
    c1, c2 = leray_project_arrays(g, v[0].coeffs, v[1].coeffs)
    return (SpectralField(g, c1), SpectralField(g, c2))


def dealias(f):
    return SpectralField(f.grid, f.grid.dealias_mask * f.coeffs)


def product(f, g):
    """Pseudo-spectral product f*g, dealiased."""
    values = f.physical() * g.physical()
    return dealias(SpectralField.from_physical(f.grid, values))


def full_spectrum(f):
    """Expand a half spectrum to the full (N, N) coefficient array."""
    return sfft.fft2(f.physical(), norm="forward")


def hermitian_defect(f):
    """max |c(-k) - conj(c(k))| / max |c| over the half spectrum."""
    c = f.coeffs
    n = f.grid.N
    scale = max(np.abs(c).max(), 1e-300)
    worst = 0.0
    for col in (0, n // 2):
        a = c[:, col]
        mirrored = a[(-np.arange(n)) % n]
        worst = max(worst, float(np.abs(mirrored - np.conj(a)).max()))
    return worst / scale
