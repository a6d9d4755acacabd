"""Best Gagliardo-Nirenberg and Sobolev constants and the existence thresholds.

``C(N, p)`` comes from the Weinstein ground state, found by shooting on the
radial ODE and polished by Newton on the discrete equation; ``S`` comes from
Rayleigh quotients of truncated Aubin-Talenti bubbles, extrapolated in the
truncation radius.  Nothing is tabulated.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import spsolve

from .discretization import Field, RadialGrid, build_grid, kinetic, quad, sample_bubble
from .model import ProblemParams, critical_exponent

__all__ = [
    "ShootingError",
    "GNResult",
    "Thresholds",
    "ThresholdError",
    "weinstein_ground_state",
    "weinstein_grid",
    "gn_constant",
    "gn_details",
    "gn_quotient",
    "sobolev_constant",
    "sobolev_details",
    "bubble_quotient",
    "thresholds",
    "mass_bound_subcritical",
    "exclusion_exponent",
]


class ShootingError(RuntimeError):
    pass


class ThresholdError(ValueError):
    pass


# --- Weinstein ground state -------------------------------------------------


def _shoot(N, p, a, r_max):
    """Integrate Q'' + (N-1)/r Q' - Q + Q^{p-1} = 0 from Q(0) = a.

    Returns +1 if the orbit crosses zero (overshoot), -1 if it turns back up
    before crossing (undershoot), 0 if neither happens before ``r_max``, along
    with the solution object.
    """
    r0 = 1e-6
    q2 = (a - a ** (p - 1)) / (2 * N)
    y0 = [a + q2 * r0 * r0, 2 * q2 * r0]

    def rhs(r, y):
        q, dq = y
        return [dq, -(N - 1) / r * dq + q - abs(q) ** (p - 2) * q]

    def cross(r, y):
        return y[0]

    def turn(r, y):
        return y[1]

    cross.terminal = True
    cross.direction = -1
    turn.terminal = True
    turn.direction = 1
    sol = solve_ivp(rhs, (r0, r_max), y0, method="DOP853", rtol=1e-12, atol=1e-14,
                    events=(cross, turn), dense_output=True)
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def _shoot_profile(N, p, r_max=40.0, max_bisect=200):
    lo, hi = 1.0 + 1e-9, 2.0
    while _shoot(N, p, hi, r_max)[0] <= 0:
        hi *= 2.0
        if hi > 1e8:
            raise ShootingError("no overshooting initial value found")
    if _shoot(N, p, lo, r_max)[0] >= 0:
        raise ShootingError("no undershooting initial value found")
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        kind, _ = _shoot(N, p, mid, r_max)
        if kind > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 4e-16 * hi:
            break
    else:
        raise ShootingError("bisection on Q(0) did not converge")
    _, sol = _shoot(N, p, lo, r_max)
    return lo, sol


def weinstein_grid(N: int, p: float, M: int = 4096) -> RadialGrid:
    """Grid on which the normalised optimizer is resolved (decay rate sqrt(omega))."""
    gam = N * (p - 2) / (2 * p)
    om = (1 - gam) / gam
    return build_grid(N, 40.0 / math.sqrt(om), M)


def weinstein_ground_state(N: int, p: float, g: RadialGrid | None = None, tol: float = 1e-10) -> Field:
    """Positive radial optimizer ``Q`` with ``||grad Q||_2 = ||Q||_2``.

    The profile ``Q0`` of ``Q'' + (N-1)/r Q' - Q + Q^{p-1} = 0`` is found by
    shooting with bisection on ``Q0(0)``; then ``Q(r) = Q0(sqrt(omega) r)``
    with ``omega = (1 - gamma_p)/gamma_p`` balances kinetic and mass.  The
    GN quotient is invariant under this dilation.  The sampled
    profile is polished by Newton iterations on the discrete equation
    ``-Delta_h Q + omega Q - omega Q^{p-1} = 0``.
    """
    if not (p > 2 and p < critical_exponent(N)):
        raise ValueError(f"need 2 < p < 2N/(N-2), got p={p}, N={N}")
    if g is None:
        g = weinstein_grid(N, p)
    gam = N * (p - 2) / (2 * p)
    om = (1 - gam) / gam
    a, sol = _shoot_profile(N, p)
    x = math.sqrt(om) * g.r
    # the shot orbit is trustworthy until it departs from the decaying branch
    r_end = sol.t[-1]
    q0 = np.empty_like(x)
    inside = x <= r_end
    q0[inside] = sol.sol(np.maximum(x[inside], sol.t[0]))[0]
    if (~inside).any():
        q_end = max(sol.y[0, -1], 0.0)
        q0[~inside] = q_end * np.exp(-(x[~inside] - r_end))
    q = np.maximum(q0, 0.0)
    q = _newton_polish(g, q, p, om, tol)
    if not (q > 0).all() or (np.diff(q) > 0).any():
        raise ShootingError("polished profile is not positive and decreasing")
    return Field(q, g)


def _newton_polish(g, q, p, om, tol, max_iter=50):
    S = g.stiffness
    W = sp.diags(g.w)
    for _ in range(max_iter):
        res = S @ q + g.w * (om * q - om * q ** (p - 1))
        nrm = math.sqrt(quad(g, (res / g.w) ** 2))
        if nrm < tol:
            return q
        J = (S + sp.diags(g.w * (om - om * (p - 1) * q ** (p - 2)))).tocsc()
        q = q - spsolve(J, res)
    raise ShootingError(f"Newton polish stalled at residual {nrm:.2e}")


def gn_quotient(u, g: RadialGrid, p: float) -> float:
    """``||u||_p / (||grad u||_2^gamma ||u||_2^(1-gamma))``."""
    v = u.check(g) if isinstance(u, Field) else np.asarray(u, dtype=float)
    gam = g.N * (p - 2) / (2 * p)
    lp = quad(g, np.abs(v) ** p) ** (1 / p)
    k = kinetic(g, v)
    m = quad(g, v * v)
    return lp / (k ** (gam / 2) * m ** ((1 - gam) / 2))


@dataclass(frozen=True)
class GNResult:
    N: int
    p: float
    C: float
    grid: tuple
    kinetic: float
    mass2: float
    ode_residual: float
    state: Field = field(repr=False, compare=False)


_gn_cache: dict = {}
_gn_lock = threading.Lock()


def gn_details(N: int, p: float, M: int = 4096) -> GNResult:
    key = (int(N), float(p), int(M))
    hit = _gn_cache.get(key)
    if hit is not None:
        return hit
    g = weinstein_grid(N, p, M)
    Q = weinstein_ground_state(N, p, g)
    q = Q.values
    gam = N * (p - 2) / (2 * p)
    om = (1 - gam) / gam
    res = (g.stiffness @ q) / g.w + om * q - om * q ** (p - 1)
    out = GNResult(N, p, gn_quotient(q, g, p), g.tag, kinetic(g, q), quad(g, q * q),
                   math.sqrt(quad(g, res * res)), Q)
    with _gn_lock:
        _gn_cache.setdefault(key, out)
    return _gn_cache[key]


def gn_constant(N: int, p: float) -> float:
    """Best constant ``C(N, p)``; for ``p = 2*`` this is ``S^{-1/2}``."""
    if N >= 3 and abs(p - critical_exponent(N)) <= 1e-12 * p:
        return sobolev_constant(N) ** -0.5
    return gn_details(N, p).C


# --- Sobolev constant ------------------------------------------------------


def bubble_quotient(N: int, R: float, M: int, eps: float = 1.0) -> float:
    """Rayleigh quotient ``||grad U||^2 / ||U||_{2*}^2`` of the truncated bubble."""
    g = build_grid(N, R, M)
    u = sample_bubble(g, eps=eps, cutoff=R / 2).values
    ps = critical_exponent(N)
    return kinetic(g, u) / quad(g, np.abs(u) ** ps) ** (2 / ps)


@dataclass(frozen=True)
class SobolevResult:
    N: int
    S: float
    radii: tuple
    quotients: tuple


_sob_cache: dict = {}


def sobolev_details(N: int, radii=(20.0, 40.0, 80.0), h: float = 20.0 / 2048) -> SobolevResult:
    if N < 3:
        raise ValueError("the Sobolev constant needs N >= 3")
    key = (int(N), tuple(radii), h)
    if key in _sob_cache:
        return _sob_cache[key]
    qs = [bubble_quotient(N, R, int(round(R / h))) for R in radii]
    # q(R) = S + A R^{-(N-2)} + B R^{-N}
    A = np.array([[1.0, R ** -(N - 2), R ** -N] for R in radii])
    S = float(np.linalg.solve(A, np.array(qs))[0])
    out = SobolevResult(N, S, tuple(radii), tuple(qs))
    _sob_cache[key] = out
    return out


def sobolev_constant(N: int) -> float:
    return sobolev_details(N).S


# --- thresholds -------------------------------------------------------------


def exclusion_exponent(N: int) -> float:
    """Exponent excluded from the Pohozaev-maximizer existence range."""
    return 2.0 + 8.0 / (N * (N + 2))


def mass_bound_subcritical(N: int, mu: float) -> float:
    """``((N+2)/(mu N))^{N/4} C(N, 2+4/N)^{-(N+2)/2}`` (mass-critical power)."""
    if not mu > 0:
        raise ThresholdError("the mass bound needs mu > 0")
    pbar = 2.0 + 4.0 / N
    return ((N + 2) / (mu * N)) ** (N / 4) * gn_constant(N, pbar) ** (-(N + 2) / 2)


@dataclass(frozen=True)
class Thresholds:
    """Existence gates for one parameter set; ``None`` marks an inapplicable gate."""

    gamma_p: float
    p_gamma: float
    C_gn: float | None = None
    S_sob: float | None = None
    k0: float | None = None
    c0: float | None = None
    D: float | None = None
    mass_bound: float | None = None
    notes: tuple = ()

    def as_dict(self) -> dict:
        keys = ("gamma_p", "p_gamma", "C_gn", "S_sob", "k0", "c0", "D", "mass_bound")
        return {k: getattr(self, k) for k in keys}


def c0_subcritical(N, p, mu, C):
    pg = p * N * (p - 2) / (2 * p)
    base = (p * 2 ** (pg / 2) / (mu * pg ** ((pg + 2) / 2))
            * ((pg - 2) / N) ** ((pg - 2) / 2) * C ** (-p))
    return base ** (1 / (p - 2))


def c0_critical(N, mu, S):
    ps = critical_exponent(N)
    return ((N * N - 2 * N) / (4 * mu) * (4 * S / (N * N)) ** (ps / 2)) ** (1 / (ps - 2))


def D_threshold(N, p, mu, C):
    pg = p * N * (p - 2) / (2 * p)
    gam = pg / p
    return ((N * pg / (2 * (2 - pg))) ** ((2 - pg) / (2 * (p - 2)))
            * (mu * p * gam * gam / 2 * C**p) ** (-1 / (p - 2)))


def thresholds(prm: ProblemParams, require: tuple = ()) -> Thresholds:
    """Every gate that applies to ``prm``.

    ``require`` may name gates (``"c0"``, ``"D"``, ``"k0"``, ``"mass_bound"``)
    that must be defined; an inapplicable required gate raises
    ``ThresholdError`` rather than being reported as absent.
    """
    N, p, mu, c = prm.N, prm.p, prm.mu, prm.c
    pg = prm.p_gamma
    crit = prm.is_critical
    notes = []
    C = S = k0 = c0 = D = mb = None
    if N >= 3:
        S = sobolev_constant(N) if crit else None
    C = gn_constant(N, p)
    if crit:
        S = sobolev_constant(N)
        k0 = N * N * c * c / 4
        if mu > 0:
            c0 = c0_critical(N, mu, S)
        else:
            notes.append("c0 needs mu > 0")
    elif pg > 2:
        k0 = pg * N * c * c / (2 * (pg - 2))
        if mu > 0:
            c0 = c0_subcritical(N, p, mu, C)
        else:
            notes.append("c0 needs mu > 0")
    else:
        notes.append("k0 and c0 need p gamma_p > 2 or p = 2*")
    if pg < 2:
        if mu > 0:
            D = D_threshold(N, p, mu, C)
        else:
            notes.append("D needs mu > 0")
    else:
        notes.append("D needs p gamma_p < 2")
    if mu > 0:
        mb = mass_bound_subcritical(N, mu)
    out = Thresholds(prm.gamma_p, pg, C, S, k0, c0, D, mb, tuple(notes))
    for name in require:
        if getattr(out, name) is None:
            raise ThresholdError(f"{name} is not defined for {prm}: " + "; ".join(notes))
    return out
