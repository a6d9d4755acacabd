"""Experiment drivers built on the solvers and the fibre analysis.

Each driver returns a small dataclass with the raw sequences and an explicit
pass flag; none of them turns numerical evidence into a proof.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constants import (
    ThresholdError,
    exclusion_exponent,
    gn_details,
    sobolev_constant,
    thresholds,
)
from .discretization import Field, RadialGrid, kinetic, normalize_mass, quad, sample_gaussian, scale_field
from .fiber import fiber_coefficients, fiber_eval, fiber_roots
from .model import B_func, ProblemParams, critical_exponent, energy_from, eval_functionals, pohozaev_from
from .solvers import (
    RegimeError,
    SolveOptions,
    SolveReport,
    solve_global_min,
    solve_local_min,
    solve_mountain_pass,
)

__all__ = [
    "ContinuationReport",
    "ScanReport",
    "DemoReport",
    "GapReport",
    "GrowthReport",
    "continuation_mu_to_zero",
    "nonexistence_scan",
    "dichotomy_scan",
    "random_fields",
    "unboundedness_demo",
    "critical_gap_check",
    "regime_label",
    "regime_map",
    "growth_probe_B",
    "gaussian_oracle",
]


def gaussian_oracle(N: int, c: float) -> tuple[float, float]:
    """Closed-form ``(m0(c), lambda0)`` of the exact Gaussian state at ``mu = 0``."""
    ell = math.log(c ** -2 * math.pi ** (N / 2))
    return 0.5 * c * c * (N + 1 + ell), -N - ell


# --- continuation -------------------------------------------------------------


@dataclass
class ContinuationReport:
    mus: list
    errors_H1: list
    lambda_gap: list
    energy_gap: list
    energies: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.failures and all(self.converged)

    def monotone(self, name: str, tol: float = 0.05) -> bool:
        """Non-increasing up to isolated single-step rises below ``tol`` relative."""
        seq = getattr(self, name)
        rises = [b > a * (1 + tol) for a, b in zip(seq, seq[1:])]
        small = [b > a for a, b in zip(seq, seq[1:])]
        return not any(rises) and not any(x and y for x, y in zip(small, small[1:]))


def _h1_distance(u, v, g):
    d = u - v
    return math.sqrt(float(np.sum(g.af * (g.D @ d) ** 2)) + quad(g, d * d))


def _level_for(prm: ProblemParams):
    if prm.mu <= 0 or prm.p < prm.mass_critical_exponent:
        return "global", solve_global_min
    return "local", solve_local_min


def continuation_mu_to_zero(prm_base: ProblemParams, g: RadialGrid, mus, opts: SolveOptions = SolveOptions()) -> ContinuationReport:
    """Ground states along a ladder of ``mu`` values ordered by decreasing ``|mu|``.

    Each solve is warm-started from the previous state.  The global level
    is used where it exists and the local minimizer in ``V_k0`` otherwise.
    """
    if prm_base.alpha != 1:
        raise RegimeError("continuation needs alpha = 1")
    order = sorted(range(len(mus)), key=lambda i: -abs(mus[i]))
    w0 = sample_gaussian(g, prm_base.c).values
    m0, lam0 = gaussian_oracle(prm_base.N, prm_base.c)
    rep = ContinuationReport([], [], [], [])
    prev = None
    for i in order:
        prm = prm_base.replace(mu=float(mus[i]))
        name, solver = _level_for(prm)
        try:
            r = solver(prm, g, opts, u0=prev)
        except (RegimeError, ThresholdError) as exc:
            rep.failures.append((float(mus[i]), str(exc)))
            continue
        if not r.converged:
            rep.failures.append((float(mus[i]), r.message))
        prev = r.state.values
        rep.mus.append(float(mus[i]))
        rep.errors_H1.append(_h1_distance(r.state.values, w0, g))
        rep.lambda_gap.append(abs(r.lam - lam0))
        rep.energy_gap.append(abs(r.I - m0))
        rep.energies.append(r.I)
        rep.converged.append(r.converged)
        rep.levels.append(name)
    return rep


# --- fibre-derivative scans ---------------------------------------------------


def random_fields(g: RadialGrid, c: float, trials: int, seed: int):
    """Seeded smooth radial fields on ``S(c)``: sums of random Gaussian bumps and rings."""
    rng = np.random.default_rng(seed)
    r = g.r
    for _ in range(trials):
        k = int(rng.integers(1, 4))
        u = np.zeros_like(r)
        for _ in range(k):
            centre = rng.uniform(0.0, 0.4 * g.R) if rng.random() < 0.5 else 0.0
            width = rng.uniform(0.3, 0.15 * g.R)
            amp = rng.uniform(0.2, 1.0) * (1 if rng.random() < 0.8 else -1)
            u += amp * np.exp(-0.5 * ((r - centre) / width) ** 2)
        if not np.any(u):
            u = np.exp(-0.5 * r * r)
        yield normalize_mass(Field(u, g), g, c).values


@dataclass
class ScanReport:
    trials: int
    margin: float
    margins: list
    passed: bool
    hypothesis: str
    bound: float | None = None
    root_counts: dict = field(default_factory=dict)


def _min_dpsi(fc, s_range=(-20.0, 20.0), samples=4001):
    s = np.linspace(*s_range, samples)
    dp = fc.a * np.exp(2 * s) - fc.d - fc.b * np.exp(fc.pg * s)
    return float(dp.min())


def _weinstein_on(g, N, p, c):
    """Weinstein optimizer resampled on ``g`` and scaled to mass ``c^2``."""
    res = gn_details(N, p)
    src = res.state
    q = np.interp(g.r, src.grid.r, src.values, right=0.0)
    return normalize_mass(Field(q, g), g, c).values


def _scan(prm, g, trials, seed, include_optimizer):
    fields = list(random_fields(g, prm.c, trials, seed))
    if include_optimizer and trials > 0:
        fields[0] = _weinstein_on(g, prm.N, prm.p, prm.c)
    margins, counts = [], {}
    for u in fields:
        fc = fiber_coefficients(eval_functionals(u, g, prm), prm)
        margins.append(_min_dpsi(fc))
        kind = fiber_roots(fc, alpha=prm.alpha).kind
        counts[kind] = counts.get(kind, 0) + 1
    return margins, counts


def nonexistence_scan(prm: ProblemParams, g: RadialGrid, trials: int = 1000, seed: int = 0) -> ScanReport:
    """Minimum of ``Psi'_u`` over the fibre scan for seeded fields on ``S(c)``.

    Applies to ``alpha = -1`` with either ``mu <= 0`` or the mass-critical
    power ``p = 2 + 4/N``.  The first trial is the Weinstein optimizer (the
    tightest field for the Gagliardo-Nirenberg step), so a mass above the
    bound shows up as a negative margin.
    """
    if prm.alpha != -1:
        raise RegimeError("nonexistence scans need alpha = -1")
    pbar = prm.mass_critical_exponent
    bound = None
    if prm.mu <= 0:
        hyp = "ii"
        bound = 0.5 * prm.N * prm.c**2
    elif abs(prm.p - pbar) <= 1e-12:
        hyp = "i"
    else:
        raise RegimeError("nonexistence scans need mu <= 0 or p = 2 + 4/N")
    margins, counts = _scan(prm, g, trials, seed, include_optimizer=prm.mu > 0)
    margin = min(margins) if margins else math.nan
    return ScanReport(trials, margin, margins, bool(margins) and margin > 0, hyp, bound, counts)


def dichotomy_scan(prm: ProblemParams, g: RadialGrid, trials: int = 200, seed: int = 0) -> ScanReport:
    """Fibre-root census for ``alpha = -1``, ``mu > 0``, ``2 < p < 2 + 4/N``.

    Below ``D`` every field should have ``Psi' > 0`` throughout; above ``D``
    the Weinstein member (trial 0) must produce a sign change.  ``passed``
    encodes the expected outcome for the side of ``D`` that ``c`` lies on.
    """
    if prm.alpha != -1 or prm.mu <= 0 or not prm.p < prm.mass_critical_exponent:
        raise RegimeError("the D-dichotomy needs alpha = -1, mu > 0, p < 2 + 4/N")
    D = thresholds(prm, require=("D",)).D
    margins, counts = _scan(prm, g, trials, seed, include_optimizer=True)
    margin = min(margins)
    passed = margin > 0 if prm.c < D else margins[0] < 0
    return ScanReport(trials, margin, margins, passed, "below D" if prm.c < D else "above D", D, counts)


# --- unboundedness on the Pohozaev set ----------------------------------------


@dataclass
class DemoReport:
    log_n: list
    energies: list
    pohozaev: list
    mass2: list
    bump_kinetic: list
    floor: float
    passed: bool
    core_mass2: float
    bump_mass2: float
    grid_checked: int


def _inf_P_formula(N, p, mu, C, c_core, c_total):
    pg = N * (p - 2) / 2
    gam = pg / p
    return 0.5 * N * c_total**2 - (2 - pg) / pg * (mu * p * gam * gam / 2 * C**p) ** (2 / (2 - pg)) * c_core ** (
        2 * p * (1 - gam) / (2 - pg))


def unboundedness_demo(prm: ProblemParams, g: RadialGrid, floor: float = -1e3, n_ladder=None,
                       bump_radius: float | None = None, bump_width: float = 0.5) -> DemoReport:
    """Energies along a radial version of the escaping-mass sequence.

    ``u_n = u + n^{-N/2} v(r / n)``: ``u`` is the Weinstein optimizer with
    mass ``c^2 - m`` dilated to minimize ``P``, and ``v`` a ring of mass
    ``m`` placed just outside the numerical support of the core.  While the dilated ring fits on the grid
    it is sampled directly; beyond that the exact scaling laws
    ``K ~ n^-2``, ``L ~ n^{-N(p-2)/2}`` and
    ``int v_n^2 log v_n^2 = int v^2 log v^2 - N m log n`` are used, so
    ``log n`` can grow until the energy crosses ``floor``.
    """
    if prm.alpha != -1 or prm.mu <= 0 or not prm.p < prm.mass_critical_exponent:
        raise RegimeError("the unboundedness demo needs alpha = -1, mu > 0, 2 < p < 2 + 4/N")
    th = thresholds(prm, require=("D",))
    if prm.c < th.D:
        raise RegimeError(f"c = {prm.c} is below D = {th.D:.6g}")
    N, p, mu, c = prm.N, prm.p, prm.mu, prm.c
    C = th.C_gn
    # largest ring mass keeping inf P of the core negative, then half of it
    lo, hi = 0.0, 1.0
    for _ in range(100):
        f = 0.5 * (lo + hi)
        if _inf_P_formula(N, p, mu, C, c * math.sqrt(1 - f), c) < 0:
            lo = f
        else:
            hi = f
    frac = 0.5 * lo
    if frac <= 0:
        raise RegimeError("no room for an escaping ring at this mass")
    m = frac * c * c
    core_c = c * math.sqrt(1 - frac)
    core = _weinstein_on(g, N, p, core_c)
    f0 = eval_functionals(core, g, prm)
    s = (1 / (2 - prm.p_gamma)) * math.log(mu * prm.p_gamma * prm.gamma_p * f0.lp / (2 * f0.kinetic))
    core = scale_field(g, Field(core, g), s).field
    core = normalize_mass(core, g, core_c).values
    fc = eval_functionals(core, g, prm)
    # support of the core (relative tail level); the ring starts beyond it
    big = np.nonzero(np.abs(core) > 1e-12 * np.abs(core).max())[0]
    r_core = float(g.r[big[-1]]) if big.size else 0.0
    r0 = r_core + 5 * bump_width if bump_radius is None else bump_radius
    if r0 - 5 * bump_width < r_core or r0 + 6 * bump_width > g.R:
        raise RegimeError(f"ring at radius {r0:.3g} overlaps the core or the boundary on R = {g.R}; increase R")

    def ring(n):
        v = np.exp(-0.5 * ((g.r / n - r0) / bump_width) ** 2) * n ** (-N / 2)
        return v * math.sqrt(m / quad(g, v * v))

    fv = eval_functionals(ring(1.0), g, prm)
    if n_ladder is None:
        n_ladder = [0.0] + list(np.geomspace(0.01, 1e4, 90))
    log_n, energies, pohoz, masses, kin = [], [], [], [], []
    grid_checked = 0
    for ln in n_ladder:
        if ln < 0:
            raise ValueError("the ladder holds log n >= 0")
        if (r0 + 6 * bump_width) * math.exp(min(ln, 700.0)) < g.R:
            u = core + ring(math.exp(ln))
            f = eval_functionals(u, g, prm)
            E, P, M2 = energy_from(f, prm), pohozaev_from(f, prm), f.mass2
            kb = kinetic(g, u - core)
            grid_checked += 1
        else:
            # exact scaling laws for the ring, core unchanged
            kb = fv.kinetic * math.exp(-2 * ln)
            lb = fv.lp * math.exp(-N * (p - 2) / 2 * ln)
            K = fc.kinetic + kb
            L = fc.lp + lb
            ent = fc.entropy + fv.entropy - N * m * ln
            M2 = fc.mass2 + fv.mass2
            E = 0.5 * K - 0.5 * M2 + 0.5 * ent - mu / p * L
            P = K - mu * prm.gamma_p * L + 0.5 * N * c * c
        log_n.append(float(ln)), energies.append(float(E)), pohoz.append(float(P))
        masses.append(float(M2)), kin.append(float(kb))
    # P <= 0 is required from some n on, and the floor must be crossed there
    k = max((i + 1 for i, x in enumerate(pohoz) if x > 0), default=0)
    passed = k < len(energies) and min(energies[k:]) < floor
    return DemoReport(log_n, energies, pohoz, masses, kin, floor, passed, fc.mass2, m, grid_checked)


# --- critical gap ---------------------------------------------------------------


@dataclass
class GapReport:
    m_plus: float
    m_minus: float
    S: float
    rhs: float
    margin: float
    passed: bool
    local: SolveReport = field(repr=False)
    mountain: SolveReport = field(repr=False)


def critical_gap_check(prm: ProblemParams, g: RadialGrid, opts: SolveOptions = SolveOptions()) -> GapReport:
    """Compare ``m-`` with ``m+ + mu^{-(N-2)/2} S^{N/2} / N`` at ``p = 2*``."""
    if not prm.is_critical or prm.alpha != 1 or prm.mu <= 0:
        raise RegimeError("the gap check needs alpha = 1, mu > 0 and p = 2N/(N-2)")
    loc = solve_local_min(prm, g, opts)
    mp = solve_mountain_pass(prm, g, opts)
    S = sobolev_constant(prm.N)
    N = prm.N
    rhs = loc.I + prm.mu ** (-(N - 2) / 2) / N * S ** (N / 2)
    margin = rhs - mp.I
    passed = loc.converged and mp.converged and margin > 0 and mp.I > loc.I
    return GapReport(loc.I, mp.I, S, rhs, margin, passed, loc, mp)


# --- regime map -------------------------------------------------------------------


def regime_label(N: int, alpha: float, p: float, mu: float, c: float) -> tuple[str, tuple]:
    """Applicable statement and admissible solver levels, from the gates alone."""
    try:
        prm = ProblemParams(N, alpha, mu, p, c)
    except ValueError as exc:
        return f"invalid: {exc}", ()
    pbar = prm.mass_critical_exponent
    if alpha > 0:
        if mu <= 0:
            return "global minimizer (mu <= 0)", ("global",)
        if p < pbar - 1e-12:
            return "global minimizer (mass-subcritical power)", ("global",)
        th = thresholds(prm)
        if abs(p - pbar) <= 1e-12:
            if c < th.mass_bound:
                return "global minimizer (mass-critical power below the mass bound)", ("global",)
            return "mass-critical power above the mass bound: not covered", ()
        name = "Sobolev-critical power" if prm.is_critical else "mass-supercritical power"
        if c < th.c0:
            return f"two solutions (m+, m-), {name}", ("local", "mp")
        if c == th.c0:
            return f"gate c = c0 ({name}): local minimizer only", ("local",)
        return f"gate c < c0 violated ({name}): not covered", ()
    # alpha < 0
    note = "; exterior domains: no positive radial solution in W n H1_r"
    if mu <= 0:
        return "no critical points (mu <= 0)" + note, ()
    if abs(p - pbar) <= 1e-12:
        th = thresholds(prm)
        if c < th.mass_bound:
            return "no critical points (mass-critical power below the mass bound)" + note, ()
        return "mass-critical power above the mass bound: not covered" + note, ()
    if p < pbar:
        D = thresholds(prm).D
        if c < D:
            return "c < D: P_c empty, no critical points" + note, ()
        if abs(p - exclusion_exponent(N)) <= 1e-12:
            return "c >= D: inf over P_c is -inf; excluded exponent for the maximizer" + note, ()
        return "c >= D: sup over P_c finite, inf over P_c is -inf" + note, ("pcmax",)
    return "alpha = -1 with p > 2 + 4/N: not covered" + note, ()


def regime_map(Ns, alphas, ps, mus, cs, workers: int = 1) -> list:
    """Rows ``(N, alpha, p, mu, c, label, levels)`` over the Cartesian product.

    ``c`` entries may be given as strings ``"0.5c0"`` or ``"1.2D"``, resolved
    against the thresholds of each parameter set.
    """
    combos = list(itertools.product(Ns, alphas, ps, mus, cs))

    def one(combo):
        N, a, p, mu, c = combo
        try:
            cval = _resolve_mass(N, a, p, mu, c)
        except (ThresholdError, ValueError) as exc:
            return (N, a, p, mu, c, f"unresolved mass: {exc}", ())
        return (N, a, p, mu, cval, *regime_label(N, a, p, mu, cval))

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(one, combos))
    return [one(x) for x in combos]


def _resolve_mass(N, alpha, p, mu, c):
    if not isinstance(c, str):
        return float(c)
    for key in ("c0", "D", "mass_bound"):
        if c.endswith(key):
            factor = float(c[: -len(key)] or 1.0)
            th = thresholds(ProblemParams(N, alpha, mu, p, 1.0), require=(key,))
            return factor * getattr(th, key)
    return float(c)


# --- growth of B ------------------------------------------------------------------


@dataclass
class GrowthReport:
    q: float
    sup: float
    argmax: float
    interior: bool
    passed: bool
    nonnegative: bool


def growth_probe_B(q: float, N: int = 3, s_range=None, samples: int = 20001) -> GrowthReport:
    """``sup B(s)/s^q`` over a log-spaced grid for ``2 < q < 2 + 4/N``.

    ``B`` vanishes on ``[0, e^-3]`` and grows like ``s^2 log s^2`` at
    infinity, so the ratio must peak in the interior.  The default range
    ends well past ``log s = 1/(q - 2)``, beyond the peak.
    """
    if not 2 < q < 2 + 4 / N:
        raise ValueError(f"q must lie in (2, {2 + 4 / N:g}), got {q}")
    if s_range is None:
        s_range = (1e-12, math.exp(min(2 / (q - 2), 300.0)) * 1e3)
    s = np.geomspace(s_range[0], s_range[1], samples)
    b = B_func(s)
    ratio = b / s**q
    i = int(np.argmax(ratio))
    interior = 0 < i < samples - 1
    sup = float(ratio[i])
    return GrowthReport(q, sup, float(s[i]), interior, bool(np.isfinite(sup) and interior), bool((b >= 0).all()))
