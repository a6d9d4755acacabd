"""Constrained critical points of the energy on the mass sphere ``S(c)``.

The minimization levels share one engine: a projected, preconditioned
gradient iteration on ``S(c)``

    d = -(z - <z, u>/<y, u> y),   z = P^{-1} W g,   y = P^{-1} W u
    u <- normalize(u + tau d)

where ``g`` is the weighted-L2 gradient of the objective, ``P`` a banded SPD
bound for its Hessian (stiffness plus a clipped diagonal potential) and
``tau <= 1`` comes from Armijo backtracking.  ``<W g, d>`` is the exact
directional derivative, so accepted steps are monotone.

* ``m``: minimize ``I``.
* ``m_plus``: minimize ``I`` inside ``{||grad u||^2 < k0}``.
* ``m_minus``: minimize ``J(u) = Psi_u(t_u)`` (value at the fibre maximum),
  whose gradient is the fixed-``t`` partial derivative because ``t_u`` is
  stationary.  A quadratic penalty on ``t_u`` pins the dilation gauge.  The
  discrete energy is not exactly dilation invariant, so the last digits are
  obtained by a saddle refinement on ``I`` itself that ascends along the
  single unstable tangent mode and descends along the rest.
* ``M_max``: maximize ``I`` over ``{P = 0}`` (``alpha = -1``) by ascent in
  the tangent space of both constraints.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solveh_banded
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, lobpcg

from .constants import exclusion_exponent, thresholds
from .discretization import Field, RadialGrid, normalize_mass, sample_bubble, sample_gaussian, scale_field
from .fiber import FiberCoefficients, fiber_coefficients, fiber_eval, fiber_roots
from .model import EnergyBreakdown, ProblemParams, _ulogu2, eval_energy, eval_functionals, gradient_values

log = logging.getLogger(__name__)

__all__ = [
    "SolveOptions",
    "SolveReport",
    "RegimeError",
    "solve_global_min",
    "solve_local_min",
    "solve_mountain_pass",
    "solve_pc_max",
    "lagrange_residual",
    "regime_global_min",
    "membership_of",
]


class RegimeError(ValueError):
    """Parameters lie outside the regime where the requested level exists."""


@dataclass(frozen=True)
class SolveOptions:
    tol_grad: float = 1e-8
    tol_P: float = 1e-6
    max_iter: int = 200000
    step0: float = 1e-2
    backtrack: float = 0.5
    seed: int = 0
    margin: float = 0.05
    guard_cap: int = 100
    pcmax_margin: float = 0.02
    trace_every: int = 10

    def __post_init__(self):
        for name in ("tol_grad", "tol_P", "step0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not 0 <= self.margin < 1 or not 0 <= self.pcmax_margin:
            raise ValueError("margins must be nonnegative (and margin < 1)")


TRACE_COLUMNS = ("phase", "iter", "objective", "P", "residual")


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``trace`` rows are ``(phase, iter, objective, P, residual)``; the
    objective is ``I`` except in the first mountain-pass phase, where it is
    the penalized fibre maximum.
    """

    state: Field
    breakdown: EnergyBreakdown
    level_name: str
    iterations: int
    residual_grad: float
    residual_P: float
    converged: bool
    trace: list = field(default_factory=list)
    message: str = ""
    membership: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def I(self) -> float:
        return self.breakdown.I

    @property
    def lam(self) -> float:
        return self.breakdown.lam


def lagrange_residual(u, g: RadialGrid, prm: ProblemParams) -> tuple[float, float]:
    """``(||grad I + lambda u|| / ||u||, lambda)`` with the tested multiplier."""
    v = u.check(g) if isinstance(u, Field) else np.asarray(u, dtype=float)
    gr = gradient_values(v, g, prm)
    m = math.fsum(g.w * v * v)
    lam = -math.fsum(g.w * gr * v) / m
    r = gr + lam * v
    return math.sqrt(math.fsum(g.w * r * r) / m), lam


def membership_of(bd: EnergyBreakdown, prm: ProblemParams, tol_P: float, tol_dd: float = 1e-8) -> str:
    """Pohozaev membership using the solver's relative tolerance on ``P``."""
    f = bd.components
    if abs(bd.P) >= tol_P * (1.0 + f.kinetic):
        return "off"
    fc = fiber_coefficients(f, prm)
    dd = fiber_eval(fc, 0.0)[2]
    if abs(dd) < tol_dd * fc.scale:
        return "Pzero"
    return "Pplus" if dd > 0 else "Pminus"


# --- objectives -------------------------------------------------------------


def _parts(u, g, p, mu):
    Du = g.D @ u
    K = float(np.sum(g.af * Du * Du))
    M = float(np.sum(g.w * u * u))
    ulog = _ulogu2(u)
    E = float(np.sum(g.w * u * ulog))
    L = float(np.sum(g.w * np.abs(u) ** p)) if mu != 0 else 0.0
    return K, M, E, L, ulog


def _pohozaev_fast(u, g, prm):
    K = float(np.sum(g.af * (g.D @ u) ** 2))
    L = float(np.sum(g.w * np.abs(u) ** prm.p)) if prm.mu != 0 else 0.0
    return K - prm.mu * prm.gamma_p * L - 0.5 * prm.N * prm.alpha * prm.c**2, K


def _hess_potential(u, prm, lam, nl_scale=1.0):
    """Diagonal part of the Hessian of ``I`` plus the multiplier."""
    V = -prm.alpha * (np.log(np.maximum(u * u, 1e-300)) + 2) + lam
    if prm.mu != 0:
        V = V - prm.mu * (prm.p - 1) * nl_scale * np.abs(u) ** (prm.p - 2)
    return V


class _Energy:
    def __init__(self, g, prm):
        self.g, self.prm = g, prm

    def value(self, u):
        K, M, E, L, _ = _parts(u, self.g, self.prm.p, self.prm.mu)
        prm = self.prm
        return 0.5 * K + 0.5 * prm.alpha * (M - E) - prm.mu / prm.p * L, {}

    def gradient(self, u, info):
        return gradient_values(u, self.g, self.prm)

    def precond(self, u, lam, info):
        return 1.0, _hess_potential(u, self.prm, lam)


class _FiberMax:
    """``J(u) = Psi_u(t_u) + kappa_t t_u^2 / 2`` with ``t_u`` the fibre maximum."""

    def __init__(self, g, prm, kappa_t):
        self.g, self.prm = g, prm
        self.kappa_t = kappa_t
        self.t_prev = 0.0

    def _fc(self, u):
        prm = self.prm
        K, M, E, L, ulog = _parts(u, self.g, prm.p, prm.mu)
        fc = FiberCoefficients(
            a=K, b=prm.mu * prm.gamma_p * L, d=0.5 * prm.N * prm.alpha * prm.c**2,
            e0=0.5 * prm.alpha * (M - E), pg=prm.p_gamma,
        )
        return fc, ulog

    def root(self, fc):
        # Newton from the previous root; full scan when that fails
        t = self.t_prev
        for _ in range(30):
            _, dp, dd = fiber_eval(fc, t)
            if dd >= 0:
                break
            step = dp / dd
            t -= step
            if abs(step) < 1e-14 * (1 + abs(t)):
                _, dp, dd = fiber_eval(fc, t)
                if dd < 0 and abs(dp) <= 1e-12 * fc.scale:
                    return t
                break
        return fiber_roots(fc, alpha=self.prm.alpha).t_u

    def value(self, u):
        fc, ulog = self._fc(u)
        t = self.root(fc)
        if t is None:
            return math.nan, {"lost": True}
        psi, _, dd = fiber_eval(fc, t)
        return psi + 0.5 * self.kappa_t * t * t, {"t": t, "fc": fc, "ulog": ulog, "dd": dd}

    def accept(self, info):
        self.t_prev = info["t"]

    def _pieces(self, u, t):
        prm, g = self.prm, self.g
        e2, ep = math.exp(2 * t), math.exp(prm.p_gamma * t)
        Lu = (g.D.T @ (g.af * (g.D @ u))) / g.w
        nl = np.abs(u) ** (prm.p - 2) * u if prm.mu != 0 else np.zeros_like(u)
        dPdu = 2 * e2 * Lu - prm.mu * prm.gamma_p * prm.p * ep * nl
        return e2, ep, Lu, nl, dPdu

    def gradient(self, u, info):
        prm = self.prm
        t, dd = info["t"], info["dd"]
        e2, ep, Lu, nl, dPdu = self._pieces(u, t)
        gr = e2 * Lu - prm.alpha * info["ulog"] - prm.mu * ep * nl
        # d t_u / du = -dP/du / Psi''
        return gr + self.kappa_t * t * (-dPdu / dd)

    def rank_one(self, u, info):
        """Curvature ``beta a a^T`` from the root variation and the penalty."""
        t, dd = info["t"], info["dd"]
        a = self._pieces(u, t)[4]
        return a, 1.0 / abs(dd) + self.kappa_t / (dd * dd)

    def precond(self, u, lam, info):
        t = info["t"]
        return math.exp(2 * t), _hess_potential(u, self.prm, lam, math.exp(self.prm.p_gamma * t))


# --- engines ----------------------------------------------------------------


@dataclass
class _Run:
    u: np.ndarray
    iterations: int
    trace: list
    converged: bool
    message: str
    info: dict = field(default_factory=dict)
    guard_hits: int = 0


def _dot(w, a, b):
    return float(np.sum(w * a * b))


def _banded_precond(g, lap_scale, V, kappa=1.0):
    ab = g.stiffness_banded * lap_scale
    ab[-1] = ab[-1] + g.w * (np.maximum(V, 0.0) + kappa)
    return ab


def _descend(obj, u0, g, prm, opts, guard=None, tol=None, phase="descent", max_iter=None, check_P=True):
    """Armijo-safeguarded preconditioned descent of ``obj`` on ``S(c)``."""
    w = g.w
    c2 = prm.c**2
    tol = opts.tol_grad if tol is None else tol
    max_iter = opts.max_iter if max_iter is None else max_iter
    u = u0 * (prm.c / math.sqrt(_dot(w, u0, u0)))
    val, info = obj.value(u)
    if not math.isfinite(val):
        return _Run(u, 0, [], False, "objective undefined at the initial state", info)
    if hasattr(obj, "accept"):
        obj.accept(info)
    tau = min(opts.step0, 1.0)
    trace = []
    guard_hits = 0
    for it in range(max_iter):
        gr = obj.gradient(u, info)
        lam_t = -_dot(w, gr, u) / c2
        pg = gr + lam_t * u
        res = math.sqrt(_dot(w, pg, pg) / c2)
        P, K = _pohozaev_fast(u, g, prm)
        if it % opts.trace_every == 0:
            trace.append((phase, it, val, P, res))
        if res < tol and (not check_P or abs(P) < opts.tol_P * (1 + K)):
            trace.append((phase, it, val, P, res))
            return _Run(u, it, trace, True, "converged", info, guard_hits)
        lap_scale, V = obj.precond(u, lam_t, info)
        ab = _banded_precond(g, lap_scale, V)
        z = solveh_banded(ab, w * gr, check_finite=False)
        y = solveh_banded(ab, w * u, check_finite=False)
        if hasattr(obj, "rank_one"):
            a, beta = obj.rank_one(u, info)
            # Sherman-Morrison for P + beta (W a)(W a)^T
            wa = w * a
            x = solveh_banded(ab, wa, check_finite=False)
            den = 1.0 + beta * float(np.sum(wa * x))
            z = z - (beta * float(np.sum(wa * z)) / den) * x
            y = y - (beta * float(np.sum(wa * y)) / den) * x
        d = -(z - (_dot(w, z, u) / _dot(w, y, u)) * y)
        slope = _dot(w, gr, d)
        if slope >= 0:
            d, slope = -pg, -_dot(w, pg, pg)
        accepted = False
        slack = 1e-14 * (abs(val) + 1.0)
        while tau > 1e-16:
            un = u + tau * d
            un *= prm.c / math.sqrt(_dot(w, un, un))
            if guard is not None:
                un, hit = guard(un)
                guard_hits += hit
            vn, infon = obj.value(un)
            if math.isfinite(vn) and vn <= val + 1e-4 * tau * slope + slack:
                accepted = True
                break
            tau *= opts.backtrack
        if not accepted:
            trace.append((phase, it, val, P, res))
            return _Run(u, it, trace, False, f"line search stalled at residual {res:.3e}", info, guard_hits)
        u, val, info = un, vn, infon
        if hasattr(obj, "accept"):
            obj.accept(info)
        tau = min(2 * tau, 1.0)
        if guard is not None and guard_hits > opts.guard_cap:
            return _Run(u, it + 1, trace, False, "kinetic guard triggered too often", info, guard_hits)
    return _Run(u, max_iter, trace, False, "iteration cap reached", info, guard_hits)


def _unstable_mode(g, prm, u, lam, ab, guess):
    """Lowest eigenpair of the tangent Hessian ``W (H + lambda)`` restricted to ``u^perp``."""
    A = (g.stiffness + sp.diags(g.w * _hess_potential(u, prm, lam))).tocsr()
    B = sp.diags(g.w).tocsr()
    Mop = LinearOperator(A.shape, matvec=lambda x: solveh_banded(ab, np.ravel(x), check_finite=False), dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vals, vecs = lobpcg(A, guess.reshape(-1, 1), B=B, M=Mop, Y=(g.w * u).reshape(-1, 1),
                            largest=False, tol=1e-8, maxiter=60)
    return float(vals[0]), vecs[:, 0], A


def _saddle_refine(u, g, prm, opts, it0=0, max_iter=2000, refresh=20):
    """Index-one saddle search on ``I`` restricted to ``S(c)``.

    Preconditioned descent in the complement of the unstable tangent mode and
    a one-dimensional Newton step along it; the mode is recomputed every
    ``refresh`` iterations.  There is no monotone merit function, so the
    residual is monitored and the run aborts when it grows a hundredfold.
    """
    w, c2 = g.w, prm.c**2
    trace = []
    e = None
    best = math.inf
    for k in range(max_iter):
        gr = gradient_values(u, g, prm)
        lam = -_dot(w, gr, u) / c2
        res_v = gr + lam * u
        res = math.sqrt(_dot(w, res_v, res_v) / c2)
        P, K = _pohozaev_fast(u, g, prm)
        if k % opts.trace_every == 0:
            I = eval_energy(u, g, prm).I
            trace.append(("saddle", it0 + k, I, P, res))
        if res < opts.tol_grad and abs(P) < opts.tol_P * (1 + K):
            trace.append(("saddle", it0 + k, eval_energy(u, g, prm).I, P, res))
            return _Run(u, it0 + k, trace, True, "converged", {"theta": theta})
        best = min(best, res)
        if res > 100 * best or not math.isfinite(res):
            return _Run(u, it0 + k, trace, False, f"saddle refinement diverged at residual {res:.3e}")
        V = _hess_potential(u, prm, lam)
        ab = _banded_precond(g, 1.0, V)
        if k % refresh == 0:
            if e is None:
                # dilation generator (N/2) u + r u' as the first guess
                e = 0.5 * prm.N * u + g.r * np.gradient(u, g.r)
            theta, e, A = _unstable_mode(g, prm, u, lam, ab, e)
            if theta >= 0:
                return _Run(u, it0 + k, trace, False, "no unstable tangent mode: not a saddle")
        else:
            A = (g.stiffness + sp.diags(w * V)).tocsr()
        # e and its A-image are W-orthogonal to the stable subspace, so the
        # residual splits cleanly: Newton along e, preconditioned steps off it
        e = e / math.sqrt(_dot(w, e, e))
        re = _dot(w, e, res_v)
        z = solveh_banded(ab, w * (res_v - re * e), check_finite=False)
        y = solveh_banded(ab, w * u, check_finite=False)
        d = -(z - (_dot(w, z, u) / _dot(w, y, u)) * y)
        d = d - _dot(w, e, d) * e
        d = d - (re / float(e @ (A @ e))) * e
        u = u + d
        u *= prm.c / math.sqrt(_dot(w, u, u))
    return _Run(u, it0 + max_iter, trace, False, "saddle refinement iteration cap")


def _report(run, g, prm, opts, level, extras=None, sign_state=1.0):
    state = Field(-np.abs(run.u) if sign_state < 0 else run.u, g)
    bd = eval_energy(state, g, prm)
    res_g, _ = lagrange_residual(state, g, prm)
    res_P = abs(bd.P) / (1.0 + bd.components.kinetic)
    converged = run.converged and res_g < opts.tol_grad * 10 and res_P < opts.tol_P
    msg = run.message
    if run.converged and not converged:
        msg = f"final residuals ({res_g:.2e}, {res_P:.2e}) above tolerance"
    fc = fiber_coefficients(bd.components, prm)
    ex = dict(extras or {})
    ex.setdefault("guard_hits", run.guard_hits)
    ex["ddpsi0"] = fiber_eval(fc, 0.0)[2]
    return SolveReport(state, bd, level, run.iterations, res_g, res_P, converged,
                       run.trace, msg, membership_of(bd, prm, opts.tol_P), ex)


# --- levels -----------------------------------------------------------------


def regime_global_min(prm: ProblemParams) -> str:
    """Which global-minimization regime applies; raises ``RegimeError`` if none."""
    if prm.alpha != 1:
        raise RegimeError("global minimization needs alpha = 1")
    if prm.mu <= 0:
        return "i"
    pbar = prm.mass_critical_exponent
    if prm.p < pbar - 1e-12:
        return "ii"
    if abs(prm.p - pbar) <= 1e-12:
        bound = thresholds(prm).mass_bound
        if prm.c < bound:
            return "iii"
        raise RegimeError(f"p = 2 + 4/N needs c < {bound:.6g}; got c = {prm.c}")
    raise RegimeError(f"p = {prm.p} > 2 + 4/N with mu > 0: I is unbounded below on S(c)")


def _check_grid(g, prm):
    if g.N != prm.N:
        raise ValueError(f"grid dimension {g.N} does not match N = {prm.N}")


def _start_values(u0, g):
    if isinstance(u0, Field):
        return u0.check(g).copy()
    return np.array(u0, dtype=float)


def solve_global_min(prm: ProblemParams, g: RadialGrid, opts: SolveOptions = SolveOptions(), u0=None) -> SolveReport:
    """Ground state ``m(c) = inf_{S(c)} I`` by normalized gradient flow from ``w0``."""
    _check_grid(g, prm)
    regime = regime_global_min(prm)
    start = sample_gaussian(g, prm.c).values if u0 is None else _start_values(u0, g)
    run = _descend(_Energy(g, prm), start, g, prm, opts)
    return _report(run, g, prm, opts, "m", extras={"regime": regime})


def _gate_two_solution(prm):
    if prm.alpha != 1 or prm.mu <= 0:
        raise RegimeError("local and mountain-pass levels need alpha = 1 and mu > 0")
    if not (prm.p_gamma > 2 or prm.is_critical):
        raise RegimeError("local and mountain-pass levels need p > 2 + 4/N")
    return thresholds(prm, require=("k0", "c0"))


def low_kinetic_gaussian(g: RadialGrid, prm: ProblemParams, k_target: float) -> np.ndarray:
    # a Gaussian of width sigma has kinetic (N/2) c^2 / sigma^2
    sigma = math.sqrt(0.5 * prm.N * prm.c**2 / k_target)
    return sample_gaussian(g, prm.c, width=sigma).values


def solve_local_min(prm: ProblemParams, g: RadialGrid, opts: SolveOptions = SolveOptions(), u0=None) -> SolveReport:
    """Local minimizer ``m+(c)`` of ``I`` on ``{||grad u||^2 < k0}``."""
    _check_grid(g, prm)
    th = _gate_two_solution(prm)
    if prm.c > th.c0:
        raise RegimeError(f"c = {prm.c} exceeds c0 = {th.c0:.6g}")
    k0 = th.k0
    cap = (1 - opts.margin) * k0
    start = low_kinetic_gaussian(g, prm, 0.2 * k0) if u0 is None else _start_values(u0, g)

    def guard(u):
        K = float(np.sum(g.af * (g.D @ u) ** 2))
        if K <= cap:
            return u, 0
        # negative dilation back inside the gate
        s = 0.5 * math.log(0.5 * k0 / K)
        v = scale_field(g, Field(u, g), s).field.values
        return v * (prm.c / math.sqrt(_dot(g.w, v, v))), 1

    run = _descend(_Energy(g, prm), start, g, prm, opts, guard=guard)
    rep = _report(run, g, prm, opts, "m_plus", extras={"k0": k0, "c0": th.c0})
    rep.extras["in_gate"] = rep.breakdown.components.kinetic < k0
    return rep


def _to_fiber_max(u, g, prm):
    u = normalize_mass(Field(u, g), g, prm.c).values
    fr = fiber_roots(fiber_coefficients(eval_functionals(u, g, prm), prm), alpha=prm.alpha)
    if fr.t_u is None:
        return None
    v = scale_field(g, Field(u, g), fr.t_u).field
    return normalize_mass(v, g, prm.c).values


def mountain_pass_start(g: RadialGrid, prm: ProblemParams) -> np.ndarray:
    """Gaussian (plus a centred bubble when ``p = 2*``) dilated to its fibre maximum."""
    u = sample_gaussian(g, prm.c).values
    if prm.is_critical:
        b = sample_bubble(g, eps=1.0, cutoff=min(4.0, g.R / 4)).values
        u = u + 0.1 * prm.c * b / math.sqrt(_dot(g.w, b, b))
    v = _to_fiber_max(u, g, prm)
    if v is None:
        raise RuntimeError("initial state has no fibre maximum")
    return v


def solve_mountain_pass(prm: ProblemParams, g: RadialGrid, opts: SolveOptions = SolveOptions(), u0=None,
                        kappa_t: float | None = None, phase1_tol: float = 1e-3) -> SolveReport:
    """Mountain-pass level ``m-(c) = inf_{P-} I``.

    Phase one descends ``Psi_u(t_u) + kappa_t t_u^2/2`` over ``S(c)`` to
    ``phase1_tol``; phase two refines the resulting state to a discrete
    critical point of ``I`` with one unstable tangent direction.
    """
    _check_grid(g, prm)
    th = _gate_two_solution(prm)
    if prm.c >= th.c0:
        raise RegimeError(f"c = {prm.c} must be below c0 = {th.c0:.6g}")
    start = mountain_pass_start(g, prm) if u0 is None else _start_values(u0, g)
    if kappa_t is None:
        fc = fiber_coefficients(eval_functionals(start, g, prm), prm)
        kappa_t = 0.1 * abs(fiber_eval(fc, 0.0)[2])
    obj = _FiberMax(g, prm, kappa_t)
    run1 = _descend(obj, start, g, prm, opts, tol=max(phase1_tol, opts.tol_grad), phase="fiber",
                    max_iter=min(opts.max_iter, 5000), check_P=False)
    if run1.info.get("lost"):
        run1.message = "fibre maximum lost during descent"
    extras = {"k0": th.k0, "c0": th.c0, "kappa_t": kappa_t, "phase1": run1.message,
              "t_root": run1.info.get("t", math.nan)}
    if "t" not in run1.info:
        return _report(run1, g, prm, opts, "m_minus", extras=extras)
    run2 = _saddle_refine(run1.u, g, prm, opts, it0=run1.iterations,
                          max_iter=max(1, opts.max_iter - run1.iterations))
    run2.trace = run1.trace + run2.trace
    return _report(run2, g, prm, opts, "m_minus", extras=extras)


# --- Pohozaev maximizer -------------------------------------------------------


def _grad_P(u, g, prm):
    Lu = (g.D.T @ (g.af * (g.D @ u))) / g.w
    return 2 * Lu - prm.mu * prm.gamma_p * prm.p * np.abs(u) ** (prm.p - 2) * u


def _retract_P(v, q, g, prm):
    """Return ``normalize(v + b q)`` with ``P = 0``, ``b`` the root closest to 0."""
    w, c = g.w, prm.c

    def f(b):
        x = v + b * q
        x = x * (c / math.sqrt(_dot(w, x, x)))
        return _pohozaev_fast(x, g, prm)[0]

    f0 = f(0.0)
    if f0 == 0.0:
        return v * (c / math.sqrt(_dot(w, v, v)))
    prev, s = 0.0, 1e-8
    while s < 1e2:
        for b in (s, -s):
            if f(b) * f0 < 0:
                lo, hi = sorted((math.copysign(prev, b), b))
                r = brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=200)
                x = v + r * q
                return x * (c / math.sqrt(_dot(w, x, x)))
        prev, s = s, 2 * s
    return None


def _pc_ascent(u, g, prm, opts, max_iter):
    """Ascent of ``I`` on ``S(c) n {P = 0}`` with two-constraint projection."""
    w, c2 = g.w, prm.c**2
    energy = _Energy(g, prm)
    val = energy.value(u)[0]
    tau = min(opts.step0, 1.0)
    trace = []
    info = {}
    for it in range(max_iter):
        gr = gradient_values(u, g, prm)
        gp = _grad_P(u, g, prm)
        C = np.stack([u, gp], 1)
        WC = C * w[:, None]
        mult = np.linalg.solve(WC.T @ C, WC.T @ gr)
        r2 = gr - C @ mult
        kkt = math.sqrt(_dot(w, r2, r2) / c2)
        P, K = _pohozaev_fast(u, g, prm)
        info = {"kkt_residual": kkt, "lambda1": float(-mult[0]), "lambda2": float(mult[1])}
        if it % opts.trace_every == 0:
            trace.append(("ascent", it, val, P, kkt))
        if kkt < opts.tol_grad and abs(P) < opts.tol_P * (1 + K):
            trace.append(("ascent", it, val, P, kkt))
            return _Run(u, it, trace, True, "constrained maximum reached", info)
        V = np.abs(_hess_potential(u, prm, 0.0))
        ab = _banded_precond(g, 1.0, V)
        z = solveh_banded(ab, w * gr, check_finite=False)
        Y = np.stack([solveh_banded(ab, w * u, check_finite=False), solveh_banded(ab, w * gp, check_finite=False)], 1)
        d = z - Y @ np.linalg.solve(WC.T @ Y, WC.T @ z)
        slope = _dot(w, gr, d)
        q = Y[:, 1]
        accepted = False
        while tau > 1e-16:
            un = _retract_P(u + tau * d, q, g, prm)
            if un is not None:
                vn = energy.value(un)[0]
                if vn >= val + 1e-4 * tau * slope - 1e-14 * (abs(val) + 1):
                    accepted = True
                    break
            tau *= opts.backtrack
        if not accepted:
            trace.append(("ascent", it, val, P, kkt))
            return _Run(u, it, trace, False, f"ascent stalled at KKT residual {kkt:.3e}", info)
        u, val = un, vn
        tau = min(2 * tau, 1.0)
    return _Run(u, max_iter, trace, False, "iteration cap reached", info)


def pcmax_start(g: RadialGrid, prm: ProblemParams) -> np.ndarray:
    """Gaussian dilated onto ``P_c`` at the fibre root with the larger energy."""
    for width in (1.0, 0.5, 2.0, 0.25, 4.0):
        v = _to_fiber_max(sample_gaussian(g, prm.c, width=width).values, g, prm)
        if v is not None:
            return v
    raise RuntimeError("no Gaussian trial reaches the Pohozaev set; c is too close to D")


def solve_pc_max(prm: ProblemParams, g: RadialGrid, opts: SolveOptions = SolveOptions(), u0=None) -> SolveReport:
    """Maximize ``I`` over ``P_c`` for ``alpha = -1`` (mass-subcritical power).

    The iterate starts on ``P_c`` at the fibre root with the larger energy
    and climbs ``I`` along the part of the preconditioned gradient tangent to
    both ``S(c)`` and ``{P = 0}``; after each step ``P = 0`` is restored by
    a scalar root solve along the preconditioned ``grad P`` direction.

    ``extras`` carries the two-multiplier residual ``kkt_residual`` and the
    multipliers; ``converged`` keeps the usual meaning (critical point of
    ``I`` on ``S(c)``), so it is true only if the second multiplier vanishes.
    The state is stored as ``-|u|``.
    """
    _check_grid(g, prm)
    if prm.alpha != -1 or prm.mu <= 0:
        raise RegimeError("the Pohozaev maximizer needs alpha = -1 and mu > 0")
    if not prm.p < prm.mass_critical_exponent:
        raise RegimeError("the Pohozaev maximizer needs 2 < p < 2 + 4/N")
    if abs(prm.p - exclusion_exponent(prm.N)) <= 1e-12:
        raise RegimeError(f"p = 2 + 8/(N(N+2)) = {prm.p} is excluded")
    th = thresholds(prm, require=("D",))
    if prm.c < th.D * (1 + opts.pcmax_margin):
        raise RegimeError(f"c = {prm.c} below D (1 + margin) = {th.D * (1 + opts.pcmax_margin):.6g}")
    start = pcmax_start(g, prm) if u0 is None else np.abs(_start_values(u0, g))
    q = solveh_banded(_banded_precond(g, 1.0, np.abs(_hess_potential(start, prm, 0.0))),
                      g.w * _grad_P(start, g, prm), check_finite=False)
    start = _retract_P(start, q, g, prm)
    run = _pc_ascent(start, g, prm, opts, opts.max_iter)
    rep = _report(run, g, prm, opts, "M_max", extras=dict(run.info, D=th.D), sign_state=-1.0)
    fc = fiber_coefficients(rep.breakdown.components, prm)
    rep.extras["fiber_kind"] = fiber_roots(fc, alpha=prm.alpha).kind
    rep.extras["kkt_converged"] = run.converged
    if run.converged and not rep.converged:
        rep.message = (f"I is maximal on P_c (KKT residual {run.info['kkt_residual']:.1e}) but the "
                       f"Pohozaev multiplier is {run.info['lambda2']:.4g} != 0: not a critical point on S(c)")
    return rep
