"""Independent vorticity-form Navier-Stokes integrator (unit viscosity).

    d_t w + u.grad w = Delta w,   Delta psi = w,   u = (-d_y psi, d_x psi)

Mean-zero velocity is assumed (the vorticity does not see the mean).  Uses an
integrating-factor RK4 scheme on full complex FFTs (numpy.fft), so it shares
no transform, projection or time-stepping code with the primary solver.
"""

from __future__ import annotations

import numpy as np


class VorticityNS:
    def __init__(self, n, L):
        self.n, self.L = n, L
        k = 2 * np.pi / L * np.fft.fftfreq(n, 1.0 / n)
        self.kx, self.ky = np.meshgrid(k, k, indexing="ij")
        self.k2 = self.kx ** 2 + self.ky ** 2
        self.inv_k2 = np.where(self.k2 > 0, 1.0 / np.where(self.k2 > 0, self.k2, 1.0), 0.0)
        m = np.abs(np.fft.fftfreq(n, 1.0 / n))
        keep = m <= (2.0 / 3.0) * (n / 2)
        self.mask = np.outer(keep, keep).astype(float)
        # drop the unpaired Nyquist derivative, as for real-valued fields
        self.dkx = self.kx.copy()
        self.dkx[n // 2, :] = 0.0
        self.dky = self.ky.copy()
        self.dky[:, n // 2] = 0.0

    def velocity_hat(self, w_hat):
        psi = -w_hat * self.inv_k2
        return -1j * self.dky * psi, 1j * self.dkx * psi

    def vorticity_hat(self, u_hat, v_hat):
        return 1j * self.dkx * v_hat - 1j * self.dky * u_hat

    def _nonlinear(self, w_hat):
        u_hat, v_hat = self.velocity_hat(w_hat)
        u = np.fft.ifft2(u_hat).real
        v = np.fft.ifft2(v_hat).real
        wx = np.fft.ifft2(1j * self.dkx * w_hat).real
        wy = np.fft.ifft2(1j * self.dky * w_hat).real
        return -self.mask * np.fft.fft2(u * wx + v * wy)

    def integrate(self, w_hat, T, dt):
        """Advance with integrating-factor RK4: v = e^{k^2 t} w."""
        steps = int(round(T / dt))
        e_half = np.exp(-self.k2 * dt / 2)
        e_full = e_half ** 2
        w = w_hat.copy()
        for _ in range(steps):
            k1 = self._nonlinear(w)
            k2 = self._nonlinear(e_half * (w + 0.5 * dt * k1))
            k3 = self._nonlinear(e_half * w + 0.5 * dt * k2)
            k4 = self._nonlinear(e_full * w + dt * e_half * k3)
            w = e_full * w + dt / 6 * (e_full * k1 + 2 * e_half * (k2 + k3) + k4)
        return w


def velocity_from_state(state):
    """Physical velocity of a FlowState as two (N, N) arrays."""
    return state.u[0].physical(), state.u[1].physical()


def run_reference(u1_phys, u2_phys, L, T, dt):
    """Integrate from physical velocity samples; returns physical (u1, u2) at T."""
    n = u1_phys.shape[0]
    ref = VorticityNS(n, L)
    w = ref.vorticity_hat(np.fft.fft2(u1_phys), np.fft.fft2(u2_phys))
    w = ref.integrate(ref.mask * w, T, dt)
    u_hat, v_hat = ref.velocity_hat(w)
    return np.fft.ifft2(u_hat).real, np.fft.ifft2(v_hat).real
