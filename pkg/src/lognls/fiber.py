"""Fibre map along the mass-preserving dilation and the Pohozaev manifold.

For ``u`` on ``S(c)`` the energy along ``s * u`` is a closed form in four
numbers taken from the functionals of ``u``::

    Psi(s)   = a/2 e^{2s} + e0 - d s - b/(p gamma) e^{p gamma s}
    Psi'(s)  = a e^{2s} - d - b e^{p gamma s}          (= P(s * u))
    Psi''(s) = 2 a e^{2s} - p gamma b e^{p gamma s}

with ``a = ||grad u||^2``, ``b = mu gamma_p ||u||_p^p``, ``d = (N/2) alpha c^2``
and ``e0 = alpha/2 ||u||^2 - alpha/2 int u^2 log u^2``.  Root finding works on
these scalars only, so it never touches the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import Field, RadialGrid, normalize_mass, quad, scale_field
from .model import Functionals, ProblemParams, energy_from, eval_energy, eval_functionals

__all__ = [
    "FiberCoefficients",
    "FiberRoots",
    "FiberRangeError",
    "BranchMissingError",
    "fiber_coefficients",
    "fiber_eval",
    "fiber_roots",
    "classify_membership",
    "project_to_manifold",
    "Projection",
    "fiber_samples",
]

OVERFLOW_EXP = 700.0
TANGENCY_TOL = 1e-9


class FiberRangeError(OverflowError):
    pass


class BranchMissingError(RuntimeError):
    pass


@dataclass(frozen=True)
class FiberCoefficients:
    a: float
    b: float
    d: float
    e0: float
    pg: float

    @property
    def scale(self) -> float:
        return abs(self.a) + abs(self.b) + abs(self.d)


def fiber_coefficients(f: Functionals, prm: ProblemParams) -> FiberCoefficients:
    al = prm.alpha
    return FiberCoefficients(
        a=f.kinetic,
        b=prm.mu * prm.gamma_p * f.lp,
        d=0.5 * prm.N * al * prm.c**2,
        e0=0.5 * al * f.mass2 - 0.5 * al * f.entropy,
        pg=prm.p_gamma,
    )


def fiber_eval(fc: FiberCoefficients, s: float) -> tuple[float, float, float]:
    """Return ``(Psi(s), Psi'(s), Psi''(s))``."""
    if abs(s) * max(2.0, fc.pg) > OVERFLOW_EXP:
        raise FiberRangeError(f"s = {s:g} overflows the fibre exponentials")
    e2 = math.exp(2 * s)
    ep = math.exp(fc.pg * s)
    psi = 0.5 * fc.a * e2 + fc.e0 - fc.d * s - fc.b / fc.pg * ep
    dpsi = fc.a * e2 - fc.d - fc.b * ep
    ddpsi = 2 * fc.a * e2 - fc.pg * fc.b * ep
    return psi, dpsi, ddpsi


def _dpsi(fc, s):
    return fc.a * math.exp(2 * s) - fc.d - fc.b * math.exp(fc.pg * s)


def _ddpsi(fc, s):
    return 2 * fc.a * math.exp(2 * s) - fc.pg * fc.b * math.exp(fc.pg * s)


def _asymptotic_sign(fc: FiberCoefficients, side: int) -> float:
    """Sign of Psi' as s -> side * infinity."""
    if side < 0:
        if fc.d != 0:
            return -math.copysign(1.0, fc.d)
        # -d vanishes: the slower exponential wins
        lead = fc.a if fc.pg > 2 else -fc.b
        return math.copysign(1.0, lead) if lead != 0 else 0.0
    if fc.pg > 2:
        lead = -fc.b if fc.b != 0 else fc.a
    elif fc.pg < 2:
        lead = fc.a if fc.a != 0 else -fc.b
    else:
        lead = fc.a - fc.b
    if lead == 0:
        return -math.copysign(1.0, fc.d) if fc.d else 0.0
    return math.copysign(1.0, lead)


@dataclass(frozen=True)
class FiberRoots:
    """Critical points of the fibre map.

    ``s_u`` is the strict local minimum (Psi'' > 0) and ``t_u`` the strict
    local maximum (Psi'' < 0) when present.  With ``alpha = 1`` and a
    convex-concave fibre ``s_u < t_u``; for ``alpha = -1`` and
    ``p gamma_p < 2`` the order is reversed (maximum first).  ``kind`` is one of ``none``,
    ``single``, ``pair``, ``tangent`` or ``many``.
    """

    kind: str
    roots: tuple = ()
    second_derivatives: tuple = ()
    s_u: float | None = None
    t_u: float | None = None
    tangent_at: float | None = None
    min_dpsi: float = math.nan
    classified: bool = True

    @property
    def count(self) -> int:
        return len(self.roots)


def _classified_regime(alpha: float) -> bool:
    # every sign pattern of (alpha, mu, p gamma - 2) with alpha != 0 has at
    # most two fibre critical points; alpha = 0 is outside the model
    return alpha != 0


def _polish(fc: FiberCoefficients, lo: float, hi: float, tol: float) -> float:
    flo = _dpsi(fc, lo)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = _dpsi(fc, x)
        if abs(fx) <= tol:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi = x
        dd = _ddpsi(fc, x)
        xn = x - fx / dd if dd != 0 else math.nan
        x = xn if lo < xn < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-15 * max(1.0, abs(x)):
            return x
    return x


def fiber_roots(fc: FiberCoefficients, s_range=(-20.0, 20.0), samples: int = 4001, alpha: float | None = None) -> FiberRoots:
    """Locate and classify all critical points of the fibre map.

    Sign changes of ``Psi'`` are bracketed on a uniform scan of ``s`` and
    polished by safeguarded Newton to ``|Psi'| < 1e-12 (a + |b| + |d|)``.
    Beyond the scan the asymptotic signs decide whether the bracket must be
    widened.  A double root shows up as an interior minimum of ``|Psi'|``
    below ``1e-9`` times the scale without a sign change and is reported as
    ``tangent``.
    """
    if alpha is None:
        alpha = math.copysign(1.0, fc.d) if fc.d else 0.0
    lo, hi = map(float, s_range)
    scale = fc.scale if fc.scale > 0 else 1.0
    tol = 1e-12 * scale
    s = np.linspace(lo, hi, samples)
    with np.errstate(over="raise"):
        dp = fc.a * np.exp(2 * s) - fc.d - fc.b * np.exp(fc.pg * s)
    exact = [float(x) for x in s[dp == 0]]
    idx = np.nonzero(dp[:-1] * dp[1:] < 0)[0]
    brackets = [(float(s[i]), float(s[i + 1])) for i in idx]
    # roots beyond the scan, signalled by the analytic end behaviour
    limit = OVERFLOW_EXP / max(2.0, fc.pg)
    for side, edge, val in ((-1, lo, dp[0]), (1, hi, dp[-1])):
        asym = _asymptotic_sign(fc, side)
        if asym != 0 and val != 0 and asym != math.copysign(1.0, val):
            step, x_in = 1.0, edge
            while True:
                x_out = edge + side * step
                if abs(x_out) > limit:
                    raise FiberRangeError("root lies beyond the representable fibre range")
                if _dpsi(fc, x_out) * val < 0:
                    brackets.append((min(x_in, x_out), max(x_in, x_out)))
                    break
                x_in, step = x_out, 2 * step
    roots = sorted(exact + [_polish(fc, a, b, tol) for a, b in brackets])
    dd = tuple(_ddpsi(fc, r) for r in roots)
    classified = _classified_regime(alpha)

    absdp = np.abs(dp)
    min_dpsi = float(dp.min())
    tangent_at = None
    if not roots:
        # Psi'' changes sign at most once, so |Psi'| has at most one interior minimum
        i = int(np.argmin(absdp))
        if 0 < i < samples - 1:
            x = _golden_min(lambda x: abs(_dpsi(fc, x)), float(s[i - 1]), float(s[i + 1]))
            if abs(_dpsi(fc, x)) < TANGENCY_TOL * scale:
                tangent_at = x
    else:
        flat = [r for r, v in zip(roots, dd) if abs(v) < TANGENCY_TOL * scale]
        if flat:
            tangent_at = flat[0]
    if tangent_at is not None:
        return FiberRoots("tangent", (), (), None, None, tangent_at, min_dpsi, classified)
    if not roots:
        return FiberRoots("none", (), (), None, None, None, min_dpsi, classified)
    s_u = next((r for r, v in zip(roots, dd) if v > 0), None)
    t_u = next((r for r, v in zip(roots, dd) if v < 0), None)
    if len(roots) == 1:
        kind = "single"
    elif len(roots) == 2 and s_u is not None and t_u is not None:
        kind = "pair"
    else:
        kind = "many"
        classified = False
    return FiberRoots(kind, tuple(roots), dd, s_u, t_u, None, min_dpsi, classified)


def _golden_min(f, a, b, iters=80):
    gr = (math.sqrt(5) - 1) / 2
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc_, fd = f(c), f(d)
    for _ in range(iters):
        if fc_ < fd:
            b, d, fd = d, c, fc_
            c = b - gr * (b - a)
            fc_ = f(c)
        else:
            a, c, fc_ = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def field_fiber(u, g: RadialGrid, prm: ProblemParams) -> FiberCoefficients:
    return fiber_coefficients(eval_functionals(u, g, prm), prm)


def classify_membership(u, g: RadialGrid, prm: ProblemParams, tol_P: float = 1e-8, tol_dd: float = 1e-8) -> str:
    """``Pplus``, ``Pzero``, ``Pminus`` or ``off``.

    Tolerances are relative to ``a + |b| + |d|`` of the fibre coefficients.
    Fields off the mass constraint (relative 1e-8) are ``off``.
    """
    f = eval_functionals(u, g, prm)
    if abs(math.sqrt(f.mass2) - prm.c) > 1e-8 * prm.c:
        return "off"
    fc = fiber_coefficients(f, prm)
    _, dpsi, ddpsi = fiber_eval(fc, 0.0)
    scale = fc.scale
    if abs(dpsi) >= tol_P * scale:
        return "off"
    if abs(ddpsi) < tol_dd * scale:
        return "Pzero"
    return "Pplus" if ddpsi > 0 else "Pminus"


@dataclass(frozen=True)
class Projection:
    field: Field
    s: float
    predicted_I: float
    evaluated_I: float
    mass_drift: float

    @property
    def energy_drift(self) -> float:
        return abs(self.evaluated_I - self.predicted_I) / max(1.0, abs(self.predicted_I))


def project_to_manifold(u, g: RadialGrid, prm: ProblemParams, branch: str = "plus") -> Projection:
    """Dilate ``u`` onto the Pohozaev set along its own fibre.

    ``branch='plus'`` uses the local minimum ``s_u`` of the fibre,
    ``branch='minus'`` the local maximum ``t_u``.  The dilated profile is
    renormalised to mass ``c^2``; a relative disagreement above 1e-4 between
    the predicted and re-evaluated energy raises ``RuntimeError``.
    """
    if not isinstance(u, Field):
        u = Field(np.asarray(u, dtype=float), g)
    fc = field_fiber(u, g, prm)
    fr = fiber_roots(fc, alpha=prm.alpha)
    s = fr.s_u if branch == "plus" else fr.t_u
    if branch not in ("plus", "minus"):
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    if s is None:
        raise BranchMissingError(f"fibre has no {branch} critical point (kind={fr.kind})")
    sf = scale_field(g, u, s)
    v = normalize_mass(sf.field, g, prm.c)
    pred = fiber_eval(fc, s)[0]
    ev = eval_energy(v, g, prm).I
    proj = Projection(v, s, pred, ev, sf.mass_drift)
    if proj.energy_drift > 1e-4:
        raise RuntimeError(f"projection energy drift {proj.energy_drift:.2e} exceeds 1e-4; refine the grid")
    return proj


def fiber_samples(fc: FiberCoefficients, s_values) -> np.ndarray:
    """Rows ``(s, Psi, Psi', Psi'')`` for plotting."""
    return np.array([(s, *fiber_eval(fc, float(s))) for s in s_values])
