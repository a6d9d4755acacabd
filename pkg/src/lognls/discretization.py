"""Radial mesh, quadrature and the linear operators acting on radial profiles.

The mesh is cell centred, ``r_i = (i + 1/2) h``.  Gradients live on the cell
faces ``r_j = j h`` and are taken with the fourth-order staggered stencil

    (u_{j-2} - 27 u_{j-1} + 27 u_j - u_{j+1}) / (24 h),

using the even reflection of ``u`` through ``r = 0`` and the odd reflection
through ``r = R`` (homogeneous Dirichlet).  The Laplacian is assembled as
``-Delta = W^{-1} D^T A D`` so that ``<-Delta u, v>_W = <Du, Dv>_A`` holds to
round-off for every pair of grid functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.special import gamma as gamma_fn

__all__ = [
    "RadialGrid",
    "Field",
    "GridMismatchError",
    "build_grid",
    "sphere_area",
    "quad",
    "kinetic",
    "laplacian_apply",
    "scale_field",
    "ScaledField",
    "normalize_mass",
    "sample_gaussian",
    "sample_bubble",
    "smooth_cutoff",
    "save_field",
    "load_field",
]


class GridMismatchError(ValueError):
    pass


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2) / gamma_fn(N / 2)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Cell-centred radial grid for N-dimensional radial integrals.

    Attributes
    ----------
    N, R, M : spatial dimension, outer radius, number of cells.
    h : cell width ``R / M``.
    r : cell centres, shape (M,).
    w : quadrature weights, shape (M,).  ``sum(w * f(r))`` approximates
        ``int_{|x|<R} f(|x|) dx``.
    rf, af : face radii ``j h`` (j = 0..M) and face weights for the kinetic
        form (trapezoid rule on the faces times the sphere area).
    D : sparse (M+1, M) face-gradient matrix.
    """

    N: int
    R: float
    M: int
    h: float = field(init=False)
    r: np.ndarray = field(init=False, repr=False)
    w: np.ndarray = field(init=False, repr=False)
    rf: np.ndarray = field(init=False, repr=False)
    af: np.ndarray = field(init=False, repr=False)
    D: sp.csr_matrix = field(init=False, repr=False)
    stiffness: sp.csr_matrix = field(init=False, repr=False)
    stiffness_banded: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        N, R, M = self.N, float(self.R), self.M
        h = R / M
        sigma = sphere_area(N)
        r = (np.arange(M) + 0.5) * h
        w = sigma * r ** (N - 1) * h
        if N == 2:
            # Euler-Maclaurin endpoint term at r = 0; keeps the rule O(h^4)
            # for even integrands (the N=2 integrand r f(r) is odd).
            w[0] -= sigma * h * h / 24.0
        rf = np.arange(M + 1) * h
        af = sigma * rf ** (N - 1) * h
        af[-1] *= 0.5
        D = _face_gradient(M, h)
        S = (D.T @ sp.diags(af) @ D).tocsr()
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "rf", rf)
        object.__setattr__(self, "af", af)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "stiffness", S)
        object.__setattr__(self, "stiffness_banded", _upper_banded(S, 3))
        for arr in (r, w, rf, af):
            arr.setflags(write=False)

    @property
    def tag(self) -> tuple:
        return (self.N, self.R, self.M)

    @property
    def volume(self) -> float:
        return math.fsum(self.w)

    def field(self, values) -> "Field":
        return Field(np.asarray(values, dtype=float), self)


def _face_gradient(M: int, h: float) -> sp.csr_matrix:
    # Extended index e = i + 2 covers i = -2 .. M+1.
    E = sp.lil_matrix((M + 4, M))
    for i in range(M):
        E[i + 2, i] = 1.0
    E[1, 0] = 1.0  # u_{-1} = u_0
    E[0, 1] = 1.0  # u_{-2} = u_1
    E[M + 2, M - 1] = -1.0  # u_M = -u_{M-1}
    E[M + 3, M - 2] = -1.0  # u_{M+1} = -u_{M-2}
    rows, cols, vals = [], [], []
    stencil = (1.0, -27.0, 27.0, -1.0)
    for j in range(M + 1):
        for k, c in enumerate(stencil):
            rows.append(j)
            cols.append(j - 2 + k + 2)
            vals.append(c / (24.0 * h))
    D4 = sp.csr_matrix((vals, (rows, cols)), shape=(M + 1, M + 4))
    return (D4 @ E.tocsr()).tocsr()


def _upper_banded(S: sp.spmatrix, u: int) -> np.ndarray:
    """Symmetric sparse matrix -> upper banded storage for solveh_banded."""
    n = S.shape[0]
    ab = np.zeros((u + 1, n))
    for k in range(u + 1):
        d = S.diagonal(k)
        ab[u - k, k:] = d
    return ab


@dataclass(frozen=True, eq=False)
class Field:
    """Real radial profile sampled on the cell centres of a grid."""

    values: np.ndarray
    grid: RadialGrid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} samples, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    def check(self, g: RadialGrid) -> np.ndarray:
        if g is not self.grid and g.tag != self.grid.tag:
            raise GridMismatchError(f"field lives on grid {self.grid.tag}, not {g.tag}")
        return self.values

    def __len__(self):
        return self.grid.M


def build_grid(N: int, R: float, M: int) -> RadialGrid:
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N}")
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    if int(M) != M or M < 64:
        raise ValueError(f"M must be an integer >= 64, got {M}")
    return RadialGrid(int(N), float(R), int(M))


def quad(g: RadialGrid, f: np.ndarray) -> float:
    """Compensated quadrature ``int f dx`` of nodal values."""
    return math.fsum(g.w * f)


def kinetic(g: RadialGrid, u: np.ndarray) -> float:
    du = g.D @ u
    return math.fsum(g.af * du * du)


def laplacian_apply(g: RadialGrid, u: Field) -> Field:
    """Return ``-Delta u`` (note the sign: the operator is positive)."""
    v = u.check(g)
    return Field(_neg_laplacian(g, v), g)


def _neg_laplacian(g: RadialGrid, v: np.ndarray) -> np.ndarray:
    return (g.D.T @ (g.af * (g.D @ v))) / g.w


# ---------------------------------------------------------------- dilation


@dataclass(frozen=True)
class ScaledField:
    field: Field
    mass_drift: float
    resolution_warning: bool


def _hermite_slopes(y: np.ndarray, h: float) -> np.ndarray:
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    d[1] = (y[2] - y[0]) / (2 * h)
    d[-2] = (y[-1] - y[-3]) / (2 * h)
    d[0] = (y[1] - y[0]) / h
    d[-1] = (y[-1] - y[-2]) / h
    # Hyman filter: on monotone stretches clip into the Fritsch-Carlson box.
    sec = np.diff(y) / h
    left, right = sec[:-1], sec[1:]
    dm = d[1:-1]
    mono = left * right > 0
    sgn = np.sign(left)
    bound = 3.0 * np.minimum(np.abs(left), np.abs(right))
    clipped = sgn * np.clip(sgn * dm, 0.0, bound)
    d[1:-1] = np.where(mono, clipped, dm)
    return d


def _interp_even(g: RadialGrid, v: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Monotone cubic Hermite interpolation of a radial profile at radii q."""
    h = g.h
    y = np.concatenate(([v[1], v[0]], v, [-v[-1], -v[-2]]))
    d = _hermite_slopes(y, h)
    x0 = -1.5 * h
    t = (q - x0) / h
    k = np.clip(np.floor(t).astype(int), 0, len(y) - 2)
    t = t - k
    t2, t3 = t * t, t * t * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + t
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    out = h00 * y[k] + h10 * h * d[k] + h01 * y[k + 1] + h11 * h * d[k + 1]
    out[q >= g.R] = 0.0
    return out


def scale_field(g: RadialGrid, u: Field, s: float, s_max: float = 6.0) -> ScaledField:
    """Mass-preserving dilation ``(s * u)(r) = e^{N s / 2} u(e^s r)``.

    The result is *not* renormalised; the relative mass drift is reported and
    flags a resolution warning above 1e-4.
    """
    v = u.check(g)
    if abs(s) > s_max:
        raise ValueError(f"|s| = {abs(s):g} exceeds s_max = {s_max:g}")
    if s == 0:
        return ScaledField(Field(v.copy(), g), 0.0, False)
    out = math.exp(0.5 * g.N * s) * _interp_even(g, v, math.exp(s) * g.r)
    m0 = quad(g, v * v)
    drift = abs(quad(g, out * out) - m0) / m0 if m0 > 0 else 0.0
    warn = drift > 1e-4
    if warn:
        warnings.warn(f"dilation by s={s:g} drifts mass by {drift:.2e}; refine the grid", RuntimeWarning)
    return ScaledField(Field(out, g), drift, warn)


def normalize_mass(u: Field, g: RadialGrid, c: float) -> Field:
    v = u.check(g)
    m = quad(g, v * v)
    if not m > 0:
        raise ValueError("cannot normalise the zero field")
    return Field(v * (c / math.sqrt(m)), g)


# ---------------------------------------------------------- trial profiles


def sample_gaussian(g: RadialGrid, c: float, width: float = 1.0) -> Field:
    """``c pi^{-N/4} e^{-r^2/2}``, optionally dilated to ``width``.

    ``width != 1`` gives ``s * w0`` with ``e^s = 1/width`` (exact samples).
    """
    N = g.N
    a = 1.0 / width
    vals = c * math.pi ** (-N / 4) * a ** (N / 2) * np.exp(-0.5 * (a * g.r) ** 2)
    return Field(vals, g)


def smooth_cutoff(r: np.ndarray, cutoff: float) -> np.ndarray:
    """C-infinity step: 1 on [0, cutoff], 0 beyond 2*cutoff."""
    x = np.clip((np.asarray(r) - cutoff) / cutoff, 0.0, 1.0)

    def f(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    a, b = f(1.0 - x), f(x)
    return a / (a + b)


def sample_bubble(g: RadialGrid, eps: float = 1.0, cutoff: float | None = None) -> Field:
    """Cut-off Talenti bubble ``chi(r) [N(N-2) eps^2]^{(N-2)/4} / (eps^2 + r^2)^{(N-2)/2}``."""
    N = g.N
    if N < 3:
        raise ValueError("the Talenti bubble needs N >= 3")
    if cutoff is None:
        cutoff = 0.5 * g.R
    U = (N * (N - 2) * eps * eps) ** ((N - 2) / 4) / (eps * eps + g.r ** 2) ** ((N - 2) / 2)
    return Field(U * smooth_cutoff(g.r, cutoff), g)


# -------------------------------------------------------------------- I/O


def save_field(path, u: Field) -> None:
    g = u.grid
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# {g.N} {g.R!r} {g.M}\n")
        for r, x in zip(g.r, u.values):
            fh.write(f"{r:.17g} {x:.17g}\n")


def load_field(path) -> Field:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "#":
            raise ValueError(f"{path}: expected header '# N R M'")
        N, R, M = int(header[1]), float(header[2]), int(header[3])
        data = np.loadtxt(fh, ndmin=2)
    g = build_grid(N, R, M)
    if data.shape != (M, 2):
        raise ValueError(f"{path}: expected {M} rows of 'r u', got {data.shape}")
    if not np.allclose(data[:, 0], g.r, rtol=1e-12, atol=0):
        raise ValueError(f"{path}: radii do not match the grid in the header")
    return Field(data[:, 1], g)
