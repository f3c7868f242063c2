"""Dispersion relation of the homogeneous state and pinched double roots.

The linearization at u = m in a frame moving with speed s admits modes
exp(lambda t + nu xi) whenever d_s(lambda, nu) = 0, with

    d_s(lambda, nu) = d0(lambda - s nu, nu),
    d0(lambda, nu)  = -nu^2 (nu^2 + alpha) - lambda,   alpha = 1 - 3 m^2.

Front invasion speed, frequency and wavenumber are read off the critical
pinched double root (d_s = d_nu d_s = 0, Re lambda = 0).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

SQRT7 = math.sqrt(7.0)

# Exact coefficients of the critical double root at alpha = 1; everything
# scales as s ~ alpha^{3/2}, omega ~ alpha^2, nu ~ alpha^{1/2}.
S_COEF = 2.0 / (3.0 * math.sqrt(6.0)) * (2.0 + SQRT7) * math.sqrt(SQRT7 - 1.0)
OMEGA_COEF = (3.0 + SQRT7) * math.sqrt((2.0 + SQRT7) / 96.0)
RE_NU_COEF = -math.sqrt((SQRT7 - 1.0) / 24.0)
IM_NU_COEF = math.sqrt((SQRT7 + 3.0) / 8.0)
K_LIN_COEF = OMEGA_COEF / S_COEF
K_TEMP_COEF = 1.0 / math.sqrt(2.0)

NEUTRAL_TOL = 1e-9


class NoConvergence(RuntimeError):
    """Newton iteration failed to reach the residual tolerance."""


class NotPinched(RuntimeError):
    """The colliding spatial roots escape to the same half plane."""


class NeutralRoot(RuntimeError):
    """A spatial root sits on the imaginary axis; Morse index undefined."""


def d0(lam: complex, nu: complex, alpha: float) -> complex:
    """Dispersion relation of the steady frame."""
    return -nu * nu * (nu * nu + alpha) - lam


def ds(lam: complex, nu: complex, alpha: float, s: float) -> complex:
    """Comoving dispersion relation d_s(lambda, nu) = d0(lambda - s nu, nu)."""
    return d0(lam - s * nu, nu, alpha)


def ds_dnu(lam: complex, nu: complex, alpha: float, s: float) -> complex:
    """nu-derivative of the comoving dispersion relation."""
    return -4.0 * nu ** 3 - 2.0 * alpha * nu + s


def temporal_growth(q: float, alpha: float) -> float:
    """Growth rate lambda(q) = q^2 (alpha - q^2) of the mode exp(i q x)."""
    return q * q * (alpha - q * q)


def spatial_roots(lam: complex, alpha: float, s: float) -> np.ndarray:
    """All four roots nu of d_s(lam, nu) = 0, via the companion matrix."""
    return np.roots([1.0, 0.0, alpha, -s, lam])


@dataclass
class DoubleRoot:
    """A pinched double root of the comoving dispersion relation."""

    lam: complex
    nu: complex
    s: float
    omega: float
    alpha: float
    pinched: bool
    residual: float

    @property
    def k_lin(self) -> float:
        return self.omega / self.s


@dataclass
class WavenumberTable:
    """The four selected wavenumbers; each entry scales as sqrt(alpha)."""

    k_temp: float
    k_max: float
    k_lin: float
    im_nu_lin: float


def closed_forms(alpha: float) -> DoubleRoot:
    """Critical double root from the exact radical expressions (alpha > 0)."""
    if alpha <= 0:
        raise ValueError("no spinodal instability for alpha <= 0")
    nu = (RE_NU_COEF + 1j * IM_NU_COEF) * math.sqrt(alpha)
    s = S_COEF * alpha ** 1.5
    omega = OMEGA_COEF * alpha ** 2
    res = max(abs(ds(1j * omega, nu, alpha, s)), abs(ds_dnu(1j * omega, nu, alpha, s)))
    return DoubleRoot(lam=1j * omega, nu=nu, s=s, omega=omega, alpha=alpha,
                      pinched=True, residual=res)


def _newton_double_root(alpha, nu0, omega0, s0, tol=1e-13, max_iter=60):
    """Damped Newton on {Re ds, Im ds, Re d_nu ds, Im d_nu ds} = 0.

    Unknowns (Re nu, Im nu, omega, s); lambda = i omega is pinned to the
    imaginary axis. Analytic Jacobian.
    """
    x = np.array([nu0.real, nu0.imag, omega0, s0], dtype=float)

    def residual(x):
        nu = x[0] + 1j * x[1]
        lam = 1j * x[2]
        s = x[3]
        f1 = ds(lam, nu, alpha, s)
        f2 = ds_dnu(lam, nu, alpha, s)
        return np.array([f1.real, f1.imag, f2.real, f2.imag])

    for _ in range(max_iter):
        F = residual(x)
        nrm = np.max(np.abs(F))
        if nrm < tol:
            return x, nrm
        nu = x[0] + 1j * x[1]
        s = x[3]
        dnu = ds_dnu(0, nu, alpha, s)          # d(ds)/d nu
        dnunu = -12.0 * nu ** 2 - 2.0 * alpha  # d2(ds)/d nu2
        J = np.zeros((4, 4))
        # rows of ds: partials wrt (a, b, omega, s)
        J[0, :] = [dnu.real, (1j * dnu).real, 0.0, nu.real]
        J[1, :] = [dnu.imag, (1j * dnu).imag, -1.0, nu.imag]
        # rows of d_nu ds
        J[2, :] = [dnunu.real, (1j * dnunu).real, 0.0, 1.0]
        J[3, :] = [dnunu.imag, (1j * dnunu).imag, 0.0, 0.0]
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        for _ in range(30):
            xn = x + t * step
            if np.max(np.abs(residual(xn))) < nrm:
                x = xn
                break
            t *= 0.5
        else:
            break
    F = residual(x)
    return x, np.max(np.abs(F))


def verify_pinching(alpha: float, s: float, omega: float, nu_star: complex,
                    r_max: float | None = None, n_steps: int = 80) -> bool:
    """Follow the two roots colliding at nu_star as Re lambda increases.

    Roots of the quartic d_s(i omega + r, nu) = 0 are tracked for r on a
    geometric grid up to r_max = 10 s; pinched means the tracked branches
    end up with opposite signs of Re nu.
    """
    if r_max is None:
        r_max = 10.0 * s
    scale = max(abs(nu_star), 1.0)
    r_grid = np.geomspace(1e-5 * s, r_max, n_steps)
    prev = spatial_roots(1j * omega + r_grid[0], alpha, s)
    idx = np.argsort(np.abs(prev - nu_star))[:2]
    track = prev[idx]
    for r in r_grid[1:]:
        roots = spatial_roots(1j * omega + r, alpha, s)
        new = []
        taken = set()
        for t in track:
            order = np.argsort(np.abs(roots - t))
            j = next(j for j in order if j not in taken)
            taken.add(j)
            new.append(roots[j])
        track = np.array(new)
    signs = np.sign(track.real)
    return signs[0] * signs[1] < 0 and np.min(np.abs(track.real)) > 0.1 * scale


def spreading_speed(alpha: float, verify: bool = True) -> DoubleRoot:
    """Critical pinched double root: Re lambda = 0, Im lambda > 0, Re nu < 0.

    Newton-refined from the closed-form seed plus 8 perturbed copies; among
    converged candidates the one with the largest s wins (the spreading
    speed is a supremum over speeds).
    """
    if alpha <= 0:
        raise ValueError("no spinodal instability for alpha <= 0")
    seed = closed_forms(alpha)
    rng = np.random.default_rng(7)
    seeds = [(seed.nu, seed.omega, seed.s)]
    for _ in range(8):
        p = 1.0 + 1e-3 * rng.standard_normal(4)
        seeds.append((seed.nu.real * p[0] + 1j * seed.nu.imag * p[1],
                      seed.omega * p[2], seed.s * p[3]))
    best = None
    for nu0, om0, s0 in seeds:
        x, res = _newton_double_root(alpha, nu0, om0, s0)
        if res > 1e-11 * max(1.0, alpha ** 2):
            continue
        nu = x[0] + 1j * x[1]
        if nu.imag < 0:  # conjugation symmetry: report the Im lambda > 0 root
            nu = nu.conjugate()
            x[2] = -x[2]
        if x[2] <= 0 or x[3] <= 0 or nu.real >= 0:
            continue
        if best is None or x[3] > best[0][3]:
            best = (x, nu, res)
    if best is None:
        raise NoConvergence("double-root Newton failed from all seeds")
    x, nu, res = best
    omega, s = x[2], x[3]
    pinched = verify_pinching(alpha, s, omega, nu) if verify else True
    if verify and not pinched:
        raise NotPinched("colliding root branches escape to the same side")
    return DoubleRoot(lam=1j * omega, nu=nu, s=s, omega=omega, alpha=alpha,
                      pinched=pinched, residual=res)


def wavenumber_table(alpha: float) -> WavenumberTable:
    """Selected wavenumbers (fastest-growing, marginal, invasion, leading edge)."""
    root = spreading_speed(alpha, verify=False)
    return WavenumberTable(k_temp=K_TEMP_COEF * math.sqrt(alpha),
                           k_max=math.sqrt(alpha),
                           k_lin=root.k_lin,
                           im_nu_lin=root.nu.imag)


def count_unstable_spatial_roots(frame, alpha: float, n: int) -> int:
    """Total count of spatial roots with Re nu > 0 over modes |l| <= n.

    For each l the quartic d_s(i omega l, nu) = 0 is solved; at l = 0 the
    structural root nu = 0 (mass direction) is factored out exactly and the
    remaining cubic is used. Any other root within NEUTRAL_TOL of the
    imaginary axis raises NeutralRoot.
    """
    s, omega = frame.s, frame.omega
    if s == 0 or omega == 0:
        raise ValueError("frame requires s, omega != 0")
    if n < 0:
        raise ValueError("n >= 0 required")
    total = 0
    for ell in range(-n, n + 1):
        if ell == 0:
            roots = np.roots([1.0, 0.0, alpha, -s])
        else:
            roots = spatial_roots(1j * omega * ell, alpha, s)
        re = roots.real
        if np.any(np.abs(re) < NEUTRAL_TOL):
            raise NeutralRoot(f"root on the imaginary axis at l={ell}")
        total += int(np.sum(re > 0))
    return total


@dataclass
class DecayReport:
    """Outcome of the critical-decay scan over temporal modes."""

    passed: bool
    re_nu_lin: float
    violations: list = field(default_factory=list)  # (l, nu) in the strip
    equalities: list = field(default_factory=list)  # (l, nu) at Re nu_lin


def critical_decay_check(alpha: float, omega: float, s: float,
                         l_max: int, tol: float = 1e-6) -> DecayReport:
    """Scan roots of d_s(i omega l, nu) = 0 for decay-rate violations.

    Passes iff every root with Re nu < 0 satisfies Re nu <= Re nu_lin + tol,
    with equality occurring only at l = +-1 (the critical double root).
    """
    crit = closed_forms(alpha)
    re_lin = crit.nu.real
    report = DecayReport(passed=True, re_nu_lin=re_lin)
    for ell in range(-l_max, l_max + 1):
        roots = spatial_roots(1j * omega * ell, alpha, s)
        for nu in roots:
            if nu.real >= -tol:
                continue
            if abs(nu.real - re_lin) <= tol:
                report.equalities.append((ell, nu))
                if abs(ell) != 1:
                    report.passed = False
            elif nu.real > re_lin:
                report.violations.append((ell, nu))
                report.passed = False
    return report
