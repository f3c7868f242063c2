"""Periodic steady states under a mass constraint.

Steady profiles solve u'' + u - u^3 = mu, a planar Hamiltonian system with
conserved H = (u')^2/2 + u^2/2 - u^4/4 - mu u. Closed orbits around the
phase-plane center give the L-periodic patterns; branches in L are traced
by pseudo-arclength continuation of the shooting map, and temporal Morse
indices come from a Fourier discretization of the linearized evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import Regime, params_from_mass

MU_SADDLE_NODE = 2.0 / (3.0 * math.sqrt(3.0))  # cubic u - u^3 = mu loses roots


class NotClosed(RuntimeError):
    """Initial point lies outside the bounded orbit region."""


class Degenerate(RuntimeError):
    """Initial point is the phase-plane center (zero-amplitude orbit)."""


class NoSolution(RuntimeError):
    """No periodic pattern with the requested (L, m, j)."""


class NonConvergence(RuntimeError):
    """Newton or the shooting integration failed to converge."""


class StepFailure(RuntimeError):
    """Continuation step failed after repeated halving."""


class Unresolved(RuntimeError):
    """Morse counts changed when the truncation was doubled."""


def potential(u, mu):
    """Potential V with H = (u')^2/2 + V(u)."""
    return 0.5 * u * u - 0.25 * u ** 4 - mu * u


def stationary_points(mu: float):
    """Real critical points of the potential, sorted (saddle, center, saddle).

    Returns None when the cubic u - u^3 = mu has fewer than three real roots
    (no center, hence no closed orbits).
    """
    r = np.roots([1.0, 0.0, -1.0, mu])
    real = np.sort(r[np.abs(r.imag) < 1e-10].real)
    if len(real) < 3:
        return None
    return real  # u1 < u2 < u3, |u2| < 1/sqrt(3) is the center


@dataclass
class Orbit:
    """A closed phase-plane orbit, integrated over half a period."""

    mu: float
    u0: float          # starting turning point (u0, 0)
    period: float
    mass: float        # orbit average of u
    u_turn: float      # opposite turning point
    _half: object      # dense output over [0, period/2]

    def sample(self, n: int):
        """(x, u, u') on n uniform points over one period, starting at u0."""
        T = self.period
        x = np.linspace(0.0, T, n, endpoint=False)
        u = np.empty(n)
        up = np.empty(n)
        half = x <= T / 2
        yh = self._half(x[half])
        u[half], up[half] = yh[0], yh[1]
        ym = self._half(T - x[~half])
        u[~half], up[~half] = ym[0], -ym[1]
        return x, u, up


def shoot_orbit(mu: float, u0: float, rtol: float = 1e-12) -> Orbit:
    """Integrate from the section point (u0, 0) back to the section.

    The orbit is time-reversible about turning points, so the full period is
    twice the first return to u' = 0; the mean value is accumulated as a
    quadrature variable along the way.
    """
    pts = stationary_points(mu)
    if pts is None:
        raise NotClosed("no phase-plane center for this mu")
    u1, uc, u3 = pts
    if abs(u0 - uc) < 1e-13:
        raise Degenerate("starting point is the center equilibrium")
    if not (u1 < u0 < u3):
        raise NotClosed("starting point outside the bounded orbit region")
    h = potential(u0, mu)
    if h >= min(potential(u1, mu), potential(u3, mu)):
        raise NotClosed("energy level reaches the separatrix")

    def rhs(t, y):
        u = y[0]
        return (y[1], mu - u + u ** 3, u)

    direction = -np.sign(mu - u0 + u0 ** 3)

    def section(t, y):
        return y[1]

    section.terminal = True
    section.direction = direction

    sol = solve_ivp(rhs, (0.0, 5e3), (u0, 0.0, 0.0), method="DOP853",
                    rtol=rtol, atol=1e-13, dense_output=True, events=section)
    if not sol.t_events[0].size:
        raise NonConvergence("no section return within the time cap")
    t_half = sol.t_events[0][0]
    u_turn, _, z = sol.y_events[0][0]
    return Orbit(mu=mu, u0=u0, period=2.0 * t_half, mass=z / t_half,
                 u_turn=u_turn, _half=sol.sol)


@dataclass
class MorseData:
    n_unstable: int
    n_zero: int


@dataclass
class PeriodicPattern:
    """A sampled L-periodic steady state with j maxima per period."""

    k_p: float
    L: float
    m: float
    mu: float
    j: int
    x: np.ndarray
    u: np.ndarray
    up: np.ndarray
    amplitude: float
    u0: float                      # shooting coordinates, kept for reuse
    morse: MorseData | None = None

    def residual(self) -> float:
        """max |u'' + u - u^3 - mu| with u'' by spectral differentiation."""
        n = len(self.u)
        q = 2.0 * np.pi * np.fft.rfftfreq(n, d=self.L / n)
        upp = np.fft.irfft(-(q ** 2) * np.fft.rfft(self.u), n)
        return float(np.max(np.abs(upp + self.u - self.u ** 3 - self.mu)))


def _pattern_from_orbit(orbit: Orbit, m: float, j: int, n_samples: int = 256):
    # start at the maximum so the profile is even about x = 0
    if orbit.u0 < orbit.u_turn:
        orbit = shoot_orbit(orbit.mu, orbit.u_turn)
    xs, us, ups = orbit.sample(n_samples)
    L = j * orbit.period
    x = np.concatenate([xs + c * orbit.period for c in range(j)])
    u = np.tile(us, j)
    up = np.tile(ups, j)
    return PeriodicPattern(k_p=2.0 * np.pi / orbit.period, L=L, m=m, mu=orbit.mu,
                           j=j, x=x, u=u, up=up,
                           amplitude=0.5 * (np.max(us) - np.min(us)),
                           u0=orbit.u0)


def _period_mass(mu, u0):
    orb = shoot_orbit(mu, u0)
    return orb.period, orb.mass


def _normal_form_seed(m: float, k: float, scale: float = 1.0):
    """Small-amplitude seed (mu, u0) near the bifurcation at k = k_max.

    Leading order of the pattern family: u = m + eps cos(k x) + O(eps^2),
    with k^2 = alpha (1 + q2 eps^2), mu = m - m^3 - (3m/2) eps^2.
    """
    alpha = 1.0 - 3.0 * m * m
    if alpha <= 0:
        return None
    q2 = 3.0 * (5.0 * m * m - 1.0) / (4.0 * alpha * alpha)
    if q2 == 0.0:
        return None
    eps2 = (k * k / alpha - 1.0) / q2
    if eps2 <= 0:
        return None
    eps = scale * math.sqrt(eps2)
    mu = m - m ** 3 - 1.5 * m * eps ** 2
    a2 = 3.0 * m / (2.0 * (alpha - 4.0 * k * k))
    u0 = m + eps + eps ** 2 * a2
    return mu, u0


def _newton_pattern(T_target, m, mu, u0, tol=1e-10, max_iter=40):
    """2D Newton on (period - T_target, mass - m) in (mu, u0)."""
    x = np.array([mu, u0], dtype=float)

    def F(x):
        T, mm = _period_mass(x[0], x[1])
        return np.array([T - T_target, mm - m])

    Fx = F(x)
    for _ in range(max_iter):
        if np.max(np.abs(Fx / np.array([T_target, 1.0]))) < tol:
            return x
        J = np.empty((2, 2))
        for col in range(2):
            dx = np.zeros(2)
            dx[col] = 1e-7 * (1.0 + abs(x[col]))
            J[:, col] = (F(x + dx) - Fx) / dx[col]
        try:
            step = np.linalg.solve(J, -Fx)
        except np.linalg.LinAlgError:
            raise NonConvergence("singular shooting Jacobian")
        t = 1.0
        for _ in range(25):
            try:
                Fn = F(x + t * step)
            except (NotClosed, Degenerate):
                t *= 0.5
                continue
            if np.max(np.abs(Fn)) < np.max(np.abs(Fx)) or t < 1e-4:
                x = x + t * step
                Fx = Fn
                break
            t *= 0.5
        else:
            raise NonConvergence("line search failed")
    if np.max(np.abs(Fx / np.array([T_target, 1.0]))) < 1e2 * tol:
        return x
    raise NonConvergence("Newton did not reach tolerance")


def find_equilibrium(L: float, m: float, j: int = 1, branch: str | None = None,
                     n_samples: int = 256, morse_modes: int | None = None) -> PeriodicPattern:
    """Periodic pattern with j maxima on [0, L) and mass m.

    branch selects the solution in the subcritical coexistence window:
    "low" / "high" for the small/large-amplitude one; None returns the
    large-amplitude (stable) solution when two exist.
    """
    par = params_from_mass(m)
    if par.regime is Regime.STABLE:
        raise NoSolution("no nontrivial patterns above the spinodal mass")
    T_target = L / j
    k = 2.0 * np.pi / T_target

    sols = []
    for scale in (1.0, 0.7, 1.3, 0.4):
        seed = _normal_form_seed(m, k, scale)
        if seed is None:
            continue
        try:
            x = _newton_pattern(T_target, m, seed[0], seed[1])
        except (NonConvergence, NotClosed, Degenerate):
            continue
        if not any(abs(x[1] - s[1]) < 1e-8 for s in sols):
            sols.append(x)
    coexist = (par.regime is Regime.TRANSITIONAL and T_target < par.L_min
               and branch in ("high", None))
    if not sols or coexist:
        # away from onset the normal form is useless; walk the branch
        want = "high" if coexist else branch
        x = _branch_walk_to(T_target, m, j, want)
        if x is not None and not any(abs(x[1] - s[1]) < 1e-8 for s in sols):
            sols.append(x)
    if not sols:
        raise NoSolution(f"no pattern found at L={L}, m={m}, j={j}")

    sols.sort(key=lambda s: s[1])  # by u0 (monotone in amplitude)
    if branch == "low":
        x = sols[0]
    elif branch == "high" or branch is None:
        x = sols[-1]
    else:
        raise ValueError("branch must be 'low', 'high' or None")

    orbit = shoot_orbit(x[0], x[1])
    pat = _pattern_from_orbit(orbit, m, j, n_samples)
    if morse_modes is not None:
        pat.morse = temporal_morse_index(pat, morse_modes)
    return pat


@dataclass
class BranchPoint:
    L: float
    amplitude: float
    mu: float
    morse: MorseData | None = None
    u0: float = math.nan  # shooting coordinate, kept as a continuation seed


@dataclass
class Branch:
    m: float
    j: int
    points: list
    folds: list  # indices into points where dL/ds changes sign


def _mass_solve_mu(m, mu0, u0):
    """Secant solve of mass(mu, u0) = m at fixed u0."""
    mu = mu0
    f = _period_mass(mu, u0)[1] - m
    dmu = 1e-6 * (1 + abs(mu))
    for _ in range(50):
        if abs(f) < 1e-12:
            return mu
        f2 = _period_mass(mu + dmu, u0)[1] - m
        slope = (f2 - f) / dmu
        step = -f / slope
        mu = mu + np.clip(step, -0.05, 0.05)
        f = _period_mass(mu, u0)[1] - m
    raise NonConvergence("mass solve stalled")


def continue_branch(m: float, j: int, L_range, step: float = 0.02,
                    max_points: int = 600, morse_modes: int | None = None,
                    n_samples: int = 256) -> Branch:
    """Pseudo-arclength continuation of the branch bifurcating at L = j L_min.

    The branch is the curve mass(mu, u0) = m in the shooting plane; L = j T
    and the amplitude are recorded along it, folds are flagged where the
    tangent's L-component changes sign.
    """
    par = params_from_mass(m)
    if par.regime is Regime.STABLE:
        raise NoSolution("no branch above the spinodal mass")
    L_lo, L_hi = L_range

    # two nearby starting points close to onset
    sub = par.regime is Regime.TRANSITIONAL
    k_on = par.k_max * (1.0003 if sub else 0.9997)
    seed = _normal_form_seed(m, k_on)
    if seed is None:
        raise NoSolution("no normal-form take-off for these parameters")
    mu0 = _mass_solve_mu(m, seed[0], seed[1])
    x0 = np.array([mu0, seed[1]])
    u0b = m + 1.25 * (seed[1] - m)
    x1 = np.array([_mass_solve_mu(m, mu0, u0b), u0b])

    def record(x):
        orb = shoot_orbit(x[0], x[1])
        amp = 0.5 * abs(orb.u0 - orb.u_turn)
        pt = BranchPoint(L=j * orb.period, amplitude=amp, mu=x[0], u0=x[1])
        if morse_modes is not None:
            pat = _pattern_from_orbit(orb, m, j, n_samples)
            pt.morse = temporal_morse_index(pat, morse_modes, check_doubling=False)
        return pt

    points = [record(x0), record(x1)]
    xs = [x0, x1]
    folds = []
    h = step
    while len(points) < max_points:
        tan = xs[-1] - xs[-2]
        tan /= np.linalg.norm(tan)
        pred = xs[-1] + h * tan

        def corr(x):
            T, mm = _period_mass(x[0], x[1])
            return np.array([mm - m, np.dot(x - pred, tan)]), T

        ok = False
        x = pred.copy()
        for attempt in range(3):
            try:
                for _ in range(12):
                    Fx, T = corr(x)
                    if np.max(np.abs(Fx)) < 1e-11:
                        ok = True
                        break
                    J = np.empty((2, 2))
                    for col in range(2):
                        dx = np.zeros(2)
                        dx[col] = 1e-7 * (1 + abs(x[col]))
                        J[:, col] = (corr(x + dx)[0] - Fx) / dx[col]
                    x = x + np.linalg.solve(J, -Fx)
            except (NotClosed, Degenerate, NonConvergence, np.linalg.LinAlgError):
                ok = False
            if ok:
                break
            h *= 0.4
            pred = xs[-1] + h * tan
            x = pred.copy()
        if not ok:
            if h < 1e-8:
                raise StepFailure("continuation step collapsed")
            break

        pt = record(x)
        if (pt.L - points[-1].L) * (points[-1].L - points[-2].L) < 0:
            folds.append(len(points) - 1)
        points.append(pt)
        xs.append(x)
        h = min(h * 1.4, step)
        past_range = pt.L > L_hi and points[-2].L > L_hi
        if past_range and (not sub or folds):
            break
        if pt.amplitude < 1e-5 and len(points) > 10:
            break
    return Branch(m=m, j=j, points=points, folds=folds)


def _branch_walk_to(T_target, m, j, branch):
    """Continuation fallback: walk the branch until it crosses L/j = T_target."""
    L_target = j * T_target
    try:
        br = continue_branch(m, j, (0.0, L_target * 1.5))
    except (NoSolution, StepFailure):
        return None
    Ls = np.array([p.L for p in br.points])
    segs = [i for i in range(1, len(Ls))
            if (Ls[i - 1] - L_target) * (Ls[i] - L_target) <= 0]
    if not segs:
        return None
    pick = segs[0] if branch == "low" else segs[-1]
    a, b = br.points[pick - 1], br.points[pick]
    w = (L_target - a.L) / (b.L - a.L) if b.L != a.L else 0.5
    mu = (1 - w) * a.mu + w * b.mu
    u0 = (1 - w) * a.u0 + w * b.u0
    try:
        return _newton_pattern(T_target, m, mu, u0)
    except (NonConvergence, NotClosed, Degenerate):
        return None


def trivial_morse_index(m: float, L: float, n_modes: int) -> MorseData:
    """Index of u = m from the explicit eigenvalues q^2 (alpha - q^2)."""
    alpha = 1.0 - 3.0 * m * m
    ell = np.arange(-n_modes, n_modes + 1)
    q = 2.0 * np.pi * ell / L
    lam = q * q * (alpha - q * q)
    return MorseData(n_unstable=int(np.sum(lam > 1e-12)),
                     n_zero=int(np.sum(np.abs(lam) <= 1e-12)))


def _morse_matrix(u: np.ndarray, L: float, n_modes: int) -> np.ndarray:
    M = len(u)
    u2h = np.fft.fft(u ** 2) / M
    ell = np.arange(-n_modes, n_modes + 1)
    q = 2.0 * np.pi * ell / L
    diff = (ell[:, None] - ell[None, :]) % M
    C = u2h[diff]
    A = (q ** 2)[:, None] * ((1.0 - q ** 2)[:, None] * np.eye(2 * n_modes + 1) - 3.0 * C)
    return A.real if np.max(np.abs(A.imag)) < 1e-12 else A


def temporal_morse_index(pattern: PeriodicPattern, n_modes: int = 24,
                         tol: float = 1e-6, check_doubling: bool = True) -> MorseData:
    """Unstable/zero eigenvalue counts of the linearized evolution at a pattern.

    The operator w -> -(w_xx + w - 3 u^2 w)_xx is assembled in the full
    L-periodic Fourier space. For every nonconstant pattern that space
    contains an exact extra kernel direction (the response to a shift of
    the chemical potential, solving w_xx + w - 3u^2 w = const); it is not a
    stability degeneracy of the mass-preserving dynamics, so it is excluded
    from n_zero. The counts must be stable under doubling n_modes.
    """
    def count(nm):
        ev = np.linalg.eigvals(_morse_matrix(pattern.u, pattern.L, nm))
        n_un = int(np.sum(ev.real > tol))
        n_z = int(np.sum(np.abs(ev) <= tol))
        return n_un, n_z

    n_un, n_z = count(n_modes)
    if check_doubling:
        n_un2, n_z2 = count(2 * n_modes)
        if (n_un, n_z) != (n_un2, n_z2):
            raise Unresolved(
                f"Morse counts changed under doubling: {(n_un, n_z)} vs {(n_un2, n_z2)}")
    nonconstant = np.max(pattern.u) - np.min(pattern.u) > 1e-8
    return MorseData(n_unstable=n_un, n_zero=n_z - (1 if nonconstant else 0))


def write_branch_csv(branch: Branch, path):
    """Branch data as CSV: L, amplitude, mu, n_unstable, n_zero."""
    with open(path, "w", newline="") as fh:
        fh.write("L,amplitude,mu,n_unstable,n_zero\r\n")
        for p in branch.points:
            nu = p.morse.n_unstable if p.morse else ""
            nz = p.morse.n_zero if p.morse else ""
            fh.write(f"{p.L:.12g},{p.amplitude:.12g},{p.mu:.12g},{nu},{nz}\r\n")
