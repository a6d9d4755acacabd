"""Normalized solutions of the logarithmic Schrodinger equation with a power term.

Radial finite-volume discretization, closed-form fibre analysis along the
mass-preserving dilation, constrained gradient flows for the ground state,
local minimizer, mountain-pass state and Pohozaev maximizer, plus study drivers
and a command-line front end.
"""

from .model import (
    ProblemParams,
    Functionals,
    EnergyBreakdown,
    NonFiniteFieldError,
    eval_functionals,
    eval_energy,
    eval_pohozaev,
    eval_gradient,
    estimate_lambda,
    luxemburg_norm,
)
from .discretization import (
    RadialGrid,
    Field,
    GridMismatchError,
    build_grid,
    laplacian_apply,
    scale_field,
    normalize_mass,
    sample_gaussian,
    sample_bubble,
    save_field,
    load_field,
)
from .fiber import (
    FiberCoefficients,
    FiberRoots,
    fiber_coefficients,
    fiber_eval,
    fiber_roots,
    classify_membership,
    project_to_manifold,
)

__version__ = "0.1.0"
