import math

import numpy as np
import pytest

from lognls import ProblemParams, build_grid, eval_energy, sample_gaussian
from lognls.constants import exclusion_exponent, thresholds
from lognls.solvers import (
    RegimeError,
    SolveOptions,
    lagrange_residual,
    regime_global_min,
    solve_global_min,
    solve_local_min,
    solve_mountain_pass,
    solve_pc_max,
)


@pytest.fixture(scope="module")
def g():
    return build_grid(3, 16.0, 1024)


def test_options_validation():
    for kw in (dict(tol_grad=0), dict(tol_P=-1), dict(step0=0), dict(backtrack=1.0),
               dict(max_iter=0), dict(margin=1.0), dict(pcmax_margin=-0.1)):
        with pytest.raises(ValueError):
            SolveOptions(**kw)


def test_regime_labels():
    assert regime_global_min(ProblemParams(3, 1, 0, 4.0, 1.0)) == "i"
    assert regime_global_min(ProblemParams(3, 1, 1, 3.0, 1.0)) == "ii"
    assert regime_global_min(ProblemParams(3, 1, 1, 10 / 3, 1.0)) == "iii"


@pytest.mark.parametrize("prm", [
    ProblemParams(3, 1, 1, 4.0, 1.0),
    ProblemParams(3, -1, 0, 4.0, 1.0),
    ProblemParams(3, 1, 1, 10 / 3, 100.0),
])
def test_global_refusals(prm, g):
    with pytest.raises(RegimeError):
        solve_global_min(prm, g)


def test_grid_dimension_mismatch(g):
    with pytest.raises(ValueError):
        solve_global_min(ProblemParams(2, 1, 0, 4.0, 1.0), g)


def test_two_solution_refusals(g):
    prm = ProblemParams(3, 1, 1, 4.0, 1.0)
    c0 = thresholds(prm).c0
    with pytest.raises(RegimeError):
        solve_local_min(prm.replace(c=1.1 * c0), g)
    with pytest.raises(RegimeError):
        solve_mountain_pass(prm.replace(c=1.1 * c0), g)
    with pytest.raises(RegimeError):
        solve_local_min(prm.replace(p=3.0), g)
    with pytest.raises(RegimeError):
        solve_mountain_pass(prm.replace(mu=-1.0), g)


def test_pcmax_refusals(g):
    prm = ProblemParams(3, -1, 1, 3.0, 1.0)
    D = thresholds(prm).D
    with pytest.raises(RegimeError):
        solve_pc_max(prm.replace(c=0.9 * D), g)
    with pytest.raises(RegimeError):
        solve_pc_max(prm.replace(p=exclusion_exponent(3), c=2 * D), g)
    with pytest.raises(RegimeError):
        solve_pc_max(prm.replace(p=4.0, c=2 * D), g)
    with pytest.raises(RegimeError):
        solve_pc_max(prm.replace(alpha=1.0, c=2 * D), g)


def _check_trace(rep):
    obj = [row[2] for row in rep.trace if row[0] == rep.trace[-1][0]]
    assert len(obj) > 1
    assert all(b <= a + 1e-12 * (1 + abs(a)) for a, b in zip(obj, obj[1:]))


def test_global_negative_mu(g):
    prm = ProblemParams(3, 1, -1, 4.0, 1.0)
    rep = solve_global_min(prm, g)
    assert rep.converged
    assert rep.residual_grad < 1e-7
    assert abs(rep.breakdown.components.mass2 - 1.0) < 1e-12
    # a repulsive power raises the level above the pure logarithmic ground state
    assert rep.I > 2.8585
    assert (rep.state.values > 0).all()
    _check_trace(rep)


def test_global_mass_critical(g):
    prm = ProblemParams(3, 1, 1, 10 / 3, 1.0)
    prm = prm.replace(c=0.5 * thresholds(prm).mass_bound)
    rep = solve_global_min(prm, g)
    assert rep.converged
    assert rep.extras["regime"] == "iii"
    res, lam = lagrange_residual(rep.state, g, prm)
    assert res < 1e-7 and lam == pytest.approx(rep.lam, rel=1e-8)
    assert (rep.state.values > 0).all()
    _check_trace(rep)


def test_global_subcritical_is_below_pure_log(g):
    prm = ProblemParams(3, 1, 1, 3.0, 1.0)
    rep = solve_global_min(prm, g)
    pure = solve_global_min(prm.replace(mu=0.0), g)
    assert rep.converged and pure.converged
    assert rep.I < pure.I


def test_global_warm_start_field(g):
    prm = ProblemParams(3, 1, 0, 4.0, 1.0)
    u0 = sample_gaussian(g, 1.0, width=2.0)
    rep = solve_global_min(prm, g, u0=u0)
    assert rep.converged
    assert rep.I == pytest.approx(2.8585474, abs=1e-4)


def test_max_iter_reports_nonconvergence(g):
    prm = ProblemParams(3, 1, -1, 4.0, 1.0)
    rep = solve_global_min(prm, g, SolveOptions(max_iter=3))
    assert not rep.converged
    assert rep.iterations <= 3
    assert rep.message


def test_local_min_on_pplus(g):
    prm = ProblemParams(3, 1, 1, 4.0, 1.0)
    prm = prm.replace(c=0.5 * thresholds(prm).c0)
    rep = solve_local_min(prm, g)
    assert rep.converged
    assert rep.membership == "Pplus"
    assert rep.breakdown.components.kinetic < thresholds(prm).k0
    _check_trace(rep)


def test_pcmax_state_is_negative():
    prm = ProblemParams(3, -1, 1, 3.0, 1.0)
    prm = prm.replace(c=1.05 * thresholds(prm).D)
    g = build_grid(3, 12.0, 1024)
    rep = solve_pc_max(prm, g, SolveOptions(max_iter=300))
    v = rep.state.values
    assert (v <= 0).all()
    assert abs(rep.breakdown.P) < 1e-6 * (1 + rep.breakdown.components.kinetic)
    assert abs(rep.breakdown.components.mass2 - prm.c**2) < 1e-9 * prm.c**2
    assert {"lambda1", "lambda2", "kkt_residual", "fiber_kind", "ddpsi0"} <= set(rep.extras)
