"""Galerkin truncation of the modulated traveling-wave system.

Profiles u(xi, tau), 2pi-periodic in tau, solve a spatial evolution system

    u_xi = v,   v_xi = P_n G'(u) + theta,   theta_xi = w,
    w_xi = s v - omega u_tau,        G(u) = -u^2/2 + u^4/4,

where P_n keeps tau-Fourier modes |l| <= n. The truncated flow carries an
exact energy E (decreasing at rate -(1/s) avg(w^2)) and a conserved first
integral I = avg(w - s u); both are monitored along trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import Frame

BLOWUP_CAP = 50.0  # L2(tau) norm of u certifying escape from the attractor


@dataclass
class TWSystem:
    """Fixed truncation order and comoving frame; owns the packing layout.

    State = four real fields (u, v, theta, w), each a tau-trigonometric
    polynomial of degree n stored as half-spectra (real mean + n complex
    harmonics), flattened to 4*(2n+1) reals.
    """

    n: int
    frame: Frame

    def __post_init__(self):
        self.M = 3 * (2 * self.n + 1)  # cubic products exact for degree n
        self.ell = np.arange(self.n + 1)
        self.nreal = 2 * self.n + 1

    # --- half-spectrum <-> flat packing -------------------------------
    def _enc(self, c):
        return np.concatenate([c.real, c[1:].imag])

    def _dec(self, seg):
        c = np.empty(self.n + 1, dtype=complex)
        c.real = seg[:self.n + 1]
        c.imag = np.concatenate([[0.0], seg[self.n + 1:]])
        return c

    def pack(self, u, v, th, w):
        return np.concatenate([self._enc(u), self._enc(v), self._enc(th), self._enc(w)])

    def unpack(self, y):
        k = self.nreal
        return tuple(self._dec(y[i * k:(i + 1) * k]) for i in range(4))

    # --- pseudospectral helpers ---------------------------------------
    def grid_values(self, c):
        spec = np.zeros(self.M // 2 + 1, dtype=complex)
        spec[:self.n + 1] = c * self.M
        return np.fft.irfft(spec, self.M)

    def to_coeffs(self, vals):
        return np.fft.rfft(vals)[:self.n + 1] / self.M

    def cubic(self, u):
        """Coefficients of P_n(u^3), dealiased on the tau grid."""
        return self.to_coeffs(self.grid_values(u) ** 3)

    # --- dynamics ------------------------------------------------------
    def rhs(self, xi, y):
        u, v, th, w = self.unpack(y)
        s, omega = self.frame.s, self.frame.omega
        du = v
        dv = -u + self.cubic(u) + th
        dth = w
        dw = s * v - omega * (1j * self.ell) * u
        return self.pack(du, dv, dth, dw)

    def linearized_rhs(self, y0):
        """Matrix of the flow linearized at y0 (dense, 4(2n+1) square)."""
        u0 = self.unpack(y0)[0]
        g = 3.0 * self.grid_values(u0) ** 2
        s, omega = self.frame.s, self.frame.omega
        dim = 4 * self.nreal
        J = np.empty((dim, dim))
        for col in range(dim):
            e = np.zeros(dim)
            e[col] = 1.0
            du, dv, dth, dw = self.unpack(e)
            ru = dv
            rv = -du + self.to_coeffs(g * self.grid_values(du)) + dth
            rth = dw
            rw = s * dv - omega * (1j * self.ell) * du
            J[:, col] = self.pack(ru, rv, rth, rw)
        return J

    # --- invariants ----------------------------------------------------
    @staticmethod
    def _mean_sq(c):
        return c[0].real ** 2 + 2.0 * np.sum(np.abs(c[1:]) ** 2)

    @staticmethod
    def _mean_prod(a, b):
        return a[0].real * b[0].real + 2.0 * np.sum((a[1:] * b[1:].conj()).real)

    def energy(self, y):
        u, v, th, w = self.unpack(y)
        k = self.frame.k
        ug = self.grid_values(u)
        mean_G = np.mean(-0.5 * ug ** 2 + 0.25 * ug ** 4)
        utau = (1j * self.ell) * u
        return (0.5 * self._mean_sq(v) - mean_G - k * self._mean_prod(v, utau)
                - self._mean_prod(th, w) / self.frame.s)

    def first_integral(self, y):
        u, _, _, w = self.unpack(y)
        return w[0].real - self.frame.s * u[0].real

    def dissipation(self, y):
        w = self.unpack(y)[3]
        return self._mean_sq(w) / self.frame.s

    def equilibrium_residual(self, y):
        """L2 norm of s u_xi - omega u_tau; zero exactly on relative equilibria."""
        u, v, _, _ = self.unpack(y)
        r = self.frame.s * v - self.frame.omega * (1j * self.ell) * u
        return math.sqrt(self._mean_sq(r))

    def u_norm(self, y):
        return math.sqrt(self._mean_sq(self.unpack(y)[0]))

    # --- distinguished states ------------------------------------------
    def trivial_state(self, m):
        z = np.zeros(self.n + 1, dtype=complex)
        u = z.copy()
        u[0] = m
        th = z.copy()
        th[0] = m - m ** 3
        return self.pack(u, z.copy(), th, z.copy())

    def relative_equilibrium(self, coeffs):
        """Embed a band-limited steady profile sum c_l exp(i l (k xi + tau))."""
        k = self.frame.k
        u = np.asarray(coeffs, dtype=complex)
        v = 1j * self.ell * k * u
        th = -(self.ell * k) ** 2 * u + u - self.cubic(u)
        w = np.zeros_like(u)
        return self.pack(u, v, th, w)

    def unstable_seed(self, m, amplitude=1e-4, rng=None):
        """Trivial state plus a perturbation in its linear unstable eigenspace."""
        y0 = self.trivial_state(m)
        J = self.linearized_rhs(y0)
        lam, V = np.linalg.eig(J)
        idx = np.where(lam.real > 1e-9)[0]
        if not idx.size:
            raise ValueError("trivial state has no spatial unstable directions")
        rng = np.random.default_rng(rng)
        coefs = rng.standard_normal(idx.size)
        pert = (V[:, idx] @ coefs).real
        nrm = self.u_norm(pert)
        if nrm == 0:
            raise ValueError("degenerate perturbation")
        return y0 + amplitude / nrm * pert


def galerkin_pattern(m: float, k: float, n: int, seed=None, tol=1e-13):
    """Band-limited steady profile: coefficients c_0..c_n with c_0 = m.

    Solves the P_n-projected profile equation (1 - l^2 k^2) c_l = (u^3)_l
    for l = 1..n by Newton; returns (coeffs, mu). Harmonics are real for the
    even, max-at-zero phase choice.
    """
    sys_ = TWSystem(n=n, frame=Frame(s=1.0, omega=k))
    if seed is None:
        alpha = 1.0 - 3.0 * m * m
        if alpha <= 0 or k * k >= alpha * 1.21:
            raise ValueError("provide a seed away from onset")
        q2 = 3.0 * (5.0 * m * m - 1.0) / (4.0 * alpha * alpha)
        eps2 = (k * k / alpha - 1.0) / q2
        seed = np.zeros(n + 1)
        seed[1] = 0.5 * math.sqrt(max(eps2, 1e-4))
    c = np.zeros(n + 1)
    c[0] = m
    c[1:] = np.asarray(seed)[1:n + 1]

    def resid(c):
        cc = c.astype(complex)
        u3 = sys_.cubic(cc).real
        return (1.0 - (np.arange(1, n + 1) * k) ** 2) * c[1:] - u3[1:]

    F = resid(c)
    for _ in range(80):
        if np.max(np.abs(F)) < tol:
            break
        J = np.empty((n, n))
        for col in range(n):
            dc = c.copy()
            h = 1e-7 * (1 + abs(c[col + 1]))
            dc[col + 1] += h
            J[:, col] = (resid(dc) - F) / h
        c[1:] += np.linalg.solve(J, -F)
        F = resid(c)
    else:
        raise RuntimeError("pattern Newton stalled")
    mu = m - sys_.cubic(c.astype(complex)).real[0]
    return c.astype(complex), mu


@dataclass
class Trajectory:
    xi: np.ndarray
    E: np.ndarray
    I: np.ndarray
    dissipation: np.ndarray
    eq_distance: np.ndarray
    Q: np.ndarray            # integral of avg(w^2) from xi[0]
    states: np.ndarray       # flat states at the output points
    status: str              # "completed" | "blowup"
    system: TWSystem


def integrate_tw(system: TWSystem, y0, xi_span, n_out: int = 200,
                 cap: float = BLOWUP_CAP, rtol: float = 1e-12,
                 atol: float = 1e-14) -> Trajectory:
    """Integrate the spatial flow, recording invariants at dense output points.

    The running quadrature Q of avg(w^2) rides along as an extra component,
    so the energy balance can be checked to integrator accuracy. Halts on
    blowup (u norm beyond cap), which is the generic fate of trajectories.
    """
    aug0 = np.concatenate([y0, [0.0]])

    def rhs(xi, ya):
        dy = system.rhs(xi, ya[:-1])
        return np.concatenate([dy, [system._mean_sq(system.unpack(ya[:-1])[3])]])

    def escape(xi, ya):
        return system.u_norm(ya[:-1]) - cap

    escape.terminal = True
    escape.direction = 1

    sol = solve_ivp(rhs, xi_span, aug0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=escape)
    xi_end = sol.t[-1]
    xi = np.linspace(xi_span[0], xi_end, n_out)
    Y = sol.sol(xi)
    states = Y[:-1, :].T
    Q = Y[-1, :]
    E = np.array([system.energy(s) for s in states])
    I = np.array([system.first_integral(s) for s in states])
    diss = np.array([system.dissipation(s) for s in states])
    dist = np.array([system.equilibrium_residual(s) for s in states])
    status = "blowup" if sol.t_events[0].size else "completed"
    return Trajectory(xi=xi, E=E, I=I, dissipation=diss, eq_distance=dist,
                      Q=Q, states=states, status=status, system=system)


def verify_energy_identity(traj: Trajectory) -> float:
    """Max relative defect of E(xi2) - E(xi1) + (1/s) int avg(w^2) over intervals."""
    s = traj.system.frame.s
    defect = np.abs(np.diff(traj.E) + np.diff(traj.Q) / s)
    scale = max(np.max(np.abs(traj.E)), 1e-30)
    return float(np.max(defect) / scale)


def first_integral_drift(traj: Trajectory) -> float:
    scale = max(abs(traj.I[0]), 1e-30)
    return float(np.max(np.abs(traj.I - traj.I[0])) / scale)


def write_trajectory_csv(traj: Trajectory, path):
    """Monitors as CSV: xi, E, I, dissipation, distance-to-equilibria."""
    with open(path, "w", newline="") as fh:
        fh.write("xi,E,I,dissipation,eq_distance\r\n")
        for i in range(len(traj.xi)):
            fh.write(f"{traj.xi[i]:.12g},{traj.E[i]:.15g},{traj.I[i]:.15g},"
                     f"{traj.dissipation[i]:.12g},{traj.eq_distance[i]:.12g}\r\n")
