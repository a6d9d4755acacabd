"""Energy functional, Pohozaev functional and their gradients.

For ``u`` on ``S(c) = {||u||_2 = c}``

    I(u) = 1/2 ||grad u||^2 + alpha/2 ||u||^2 - alpha/2 int u^2 log u^2 - mu/p ||u||_p^p
    P(u) = ||grad u||^2 - mu gamma_p ||u||_p^p - (N/2) alpha c^2

with ``gamma_p = N (p - 2) / (2 p)``.  The entropy ``int u^2 log u^2`` is split
as ``B - A`` with

    A(s) = -s^2 log s^2                  for 0 <= s <= e^-3
         = 3 s^2 + 4 e^-3 s - e^-6       for s >= e^-3
    B(s) = s^2 log s^2 + A(s)

(both pieces nonnegative), and 0 log 0 = 0 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import Field, RadialGrid, _neg_laplacian, kinetic, quad

__all__ = [
    "ProblemParams",
    "Functionals",
    "EnergyBreakdown",
    "NonFiniteFieldError",
    "A_func",
    "B_func",
    "eval_functionals",
    "eval_energy",
    "eval_pohozaev",
    "eval_gradient",
    "estimate_lambda",
    "luxemburg_norm",
    "critical_exponent",
]

E3 = math.exp(-3.0)


class NonFiniteFieldError(ValueError):
    def __init__(self, index: int, value: float):
        super().__init__(f"non-finite sample {value!r} at node {index}")
        self.index = index


def critical_exponent(N: int) -> float:
    """Sobolev exponent 2N/(N-2); infinite for N <= 2."""
    return math.inf if N <= 2 else 2.0 * N / (N - 2)


@dataclass(frozen=True)
class ProblemParams:
    N: int
    alpha: float
    mu: float
    p: float
    c: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if not self.p > 2:
            raise ValueError(f"p must exceed 2, got {self.p}")
        if self.p > critical_exponent(self.N) * (1 + 1e-14):
            raise ValueError(f"p = {self.p} exceeds 2* = {critical_exponent(self.N)} for N = {self.N}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        for name in ("alpha", "mu", "p", "c"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "N", int(self.N))

    @property
    def gamma_p(self) -> float:
        return self.N * (self.p - 2) / (2 * self.p)

    @property
    def p_gamma(self) -> float:
        return self.p * self.gamma_p

    @property
    def is_critical(self) -> bool:
        """p equals the Sobolev exponent (N >= 3)."""
        return self.N >= 3 and abs(self.p - critical_exponent(self.N)) <= 1e-12 * self.p

    @property
    def mass_critical_exponent(self) -> float:
        return 2.0 + 4.0 / self.N

    def replace(self, **kw) -> "ProblemParams":
        d = dict(N=self.N, alpha=self.alpha, mu=self.mu, p=self.p, c=self.c)
        d.update(kw)
        return ProblemParams(**d)


@dataclass(frozen=True)
class Functionals:
    mass2: float
    kinetic: float
    lp: float
    entA: float
    entB: float
    entropy: float
    entropy_direct: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class EnergyBreakdown:
    I: float
    P: float
    lam: float
    components: Functionals


def A_func(s):
    s = np.abs(np.asarray(s, dtype=float))
    out = np.empty_like(s)
    lo = s <= E3
    sl = s[lo]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[lo] = np.where(sl > 0, -2 * sl * sl * np.log(sl), 0.0)
    sh = s[~lo]
    out[~lo] = 3 * sh * sh + 4 * E3 * sh - E3 * E3
    return out


def B_func(s):
    s = np.abs(np.asarray(s, dtype=float))
    out = np.zeros_like(s)
    hi = s > E3
    sh = s[hi]
    out[hi] = sh * sh * np.log(sh * sh) + 3 * sh * sh + 4 * E3 * sh - E3 * E3
    return out


def _xlogx2(v: np.ndarray) -> np.ndarray:
    """Pointwise u^2 log u^2 with 0 log 0 = 0."""
    out = np.zeros_like(v)
    v2 = v * v
    nz = v2 > 0
    out[nz] = v2[nz] * np.log(v2[nz])
    return out


def _ulogu2(v: np.ndarray) -> np.ndarray:
    """Pointwise u log u^2 with value 0 at u = 0."""
    out = np.zeros_like(v)
    nz = v != 0
    out[nz] = 2 * v[nz] * np.log(np.abs(v[nz]))
    return out


def _values(u, g: RadialGrid) -> np.ndarray:
    v = u.check(g) if isinstance(u, Field) else np.asarray(u, dtype=float)
    if v.shape != (g.M,):
        raise ValueError(f"expected {g.M} samples, got shape {v.shape}")
    bad = ~np.isfinite(v)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteFieldError(i, float(v[i]))
    return v


def _functionals(v: np.ndarray, g: RadialGrid, p: float) -> Functionals:
    w = g.w
    a = np.abs(v)
    entA = math.fsum(w * A_func(a))
    entB = math.fsum(w * B_func(a))
    return Functionals(
        mass2=math.fsum(w * v * v),
        kinetic=kinetic(g, v),
        lp=math.fsum(w * a**p),
        entA=entA,
        entB=entB,
        entropy=entB - entA,
        entropy_direct=math.fsum(w * _xlogx2(v)),
    )


def eval_functionals(u, g: RadialGrid, prm: ProblemParams) -> Functionals:
    """All integrals from which ``I``, ``P`` and the fibre map are assembled.

    Raises
    ------
    NonFiniteFieldError
        If a sample is NaN or infinite; ``.index`` is the offending node.
    """
    return _functionals(_values(u, g), g, prm.p)


def energy_from(f: Functionals, prm: ProblemParams) -> float:
    a, mu, p = prm.alpha, prm.mu, prm.p
    return 0.5 * f.kinetic + 0.5 * a * f.mass2 - 0.5 * a * f.entropy - mu / p * f.lp


def pohozaev_from(f: Functionals, prm: ProblemParams) -> float:
    return f.kinetic - prm.mu * prm.gamma_p * f.lp - 0.5 * prm.N * prm.alpha * prm.c**2


def lambda_from(f: Functionals, prm: ProblemParams) -> float:
    if not f.mass2 > 0:
        raise ZeroDivisionError("Lagrange multiplier undefined for the zero field")
    return (prm.alpha * f.entropy + prm.mu * f.lp - f.kinetic) / f.mass2


def eval_energy(u, g: RadialGrid, prm: ProblemParams) -> EnergyBreakdown:
    f = eval_functionals(u, g, prm)
    lam = lambda_from(f, prm) if f.mass2 > 0 else math.nan
    return EnergyBreakdown(energy_from(f, prm), pohozaev_from(f, prm), lam, f)


def eval_pohozaev(u, g: RadialGrid, prm: ProblemParams) -> float:
    return pohozaev_from(eval_functionals(u, g, prm), prm)


def gradient_values(v: np.ndarray, g: RadialGrid, prm: ProblemParams) -> np.ndarray:
    out = _neg_laplacian(g, v) - prm.alpha * _ulogu2(v)
    if prm.mu != 0:
        out -= prm.mu * np.abs(v) ** (prm.p - 2) * v
    return out


def eval_gradient(u, g: RadialGrid, prm: ProblemParams) -> Field:
    """Weighted-L2 gradient ``-Delta u - alpha u log u^2 - mu |u|^{p-2} u``.

    The ``alpha/2 ||u||^2`` term and the ``u^2`` part of the entropy
    derivative cancel, so ``<grad, psi>_W`` is exactly the directional
    derivative of the discrete energy.
    """
    return Field(gradient_values(_values(u, g), g, prm), g)


def estimate_lambda(u, g: RadialGrid, prm: ProblemParams) -> float:
    return lambda_from(eval_functionals(u, g, prm), prm)


def luxemburg_norm(u, g: RadialGrid, tol: float = 1e-12) -> float:
    """Orlicz norm ``inf{k > 0 : int A(|u|/k) <= 1}`` by bisection."""
    v = np.abs(_values(u, g))
    if not v.any():
        return 0.0

    def phi(k):
        return quad(g, A_func(v / k)) - 1.0

    lo, hi = 1.0, 1.0
    # phi is decreasing in k
    while phi(hi) > 0:
        hi *= 2.0
    while phi(lo) < 0:
        lo *= 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = phi(mid)
        if abs(val) <= 1e-12 or hi - lo <= tol * hi:
            return mid
        if val > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
