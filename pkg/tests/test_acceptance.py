"""Acceptance criteria, run at their stated tolerances.

Each test records a one-line verdict that is printed in the terminal
summary (see ``conftest.py``).  Run alone with
``pytest tests/test_acceptance.py -v``.
"""

import math

import numpy as np
import pytest

from conftest import record
from lognls import ProblemParams, build_grid, eval_energy, eval_functionals, eval_gradient, sample_gaussian
from lognls.constants import gn_details, gn_quotient, sobolev_constant, thresholds
from lognls.discretization import Field, quad
from lognls.fiber import BranchMissingError, fiber_coefficients, fiber_eval, fiber_roots, project_to_manifold
from lognls.model import pohozaev_from
from lognls.solvers import (
    lagrange_residual,
    solve_global_min,
    solve_local_min,
    solve_mountain_pass,
    solve_pc_max,
)
from lognls.studies import (
    continuation_mu_to_zero,
    critical_gap_check,
    dichotomy_scan,
    gaussian_oracle,
    nonexistence_scan,
    random_fields,
    unboundedness_demo,
)

# closed forms m0(c) = c^2/2 (N + 1 + log(c^-2 pi^{N/2})), lambda0 = -N - log(c^-2 pi^{N/2})
GAUSS = {3: (2.8585474, -4.7170948), 2: (2.0723649, -3.1447299)}

_reports = {}
_c1 = []


def _keep(name, rep, prm):
    _reports[name] = (rep, prm)
    return rep


@pytest.fixture(scope="module")
def two_solutions(g3_fine, two_solution_params):
    loc = solve_local_min(two_solution_params, g3_fine)
    mp = solve_mountain_pass(two_solution_params, g3_fine)
    prm = two_solution_params
    return _keep("local", loc, prm), _keep("mp", mp, prm)


@pytest.fixture(scope="module")
def gap_report():
    prm = ProblemParams(3, 1.0, 1.0, 6.0, 1.0)
    prm = prm.replace(c=0.5 * thresholds(prm).c0)
    # critical runs use R >= 40 at the spacing of the mountain-pass grid
    rep = critical_gap_check(prm, build_grid(3, 40.0, 20480))
    _keep("critical local", rep.local, prm)
    _keep("critical mp", rep.mountain, prm)
    return rep


@pytest.mark.parametrize("N", [3, 2])
def test_criterion_01_gaussian_oracle(N):
    g = build_grid(N, 16.0, 4096)
    prm = ProblemParams(N, 1.0, 0.0, 4.0, 1.0)
    rep = _keep(f"gauss N={N}", solve_global_min(prm, g), prm)
    m0, lam0 = GAUSS[N]
    assert gaussian_oracle(N, 1.0) == pytest.approx((m0, lam0), abs=1e-7)
    w0 = sample_gaussian(g, 1.0).values
    err = math.sqrt(quad(g, (rep.state.values - w0) ** 2))
    ok = rep.converged and abs(rep.I - m0) < 1e-4 and abs(rep.lam - lam0) < 1e-3 and err < 1e-3
    _c1.append(ok)
    record(1, "Gaussian oracle", all(_c1),
           f"N={N}: |I-m0|={abs(rep.I - m0):.1e} |lam-lam0|={abs(rep.lam - lam0):.1e} ||u-w0||={err:.1e}")
    assert rep.converged
    assert abs(rep.I - m0) < 1e-4
    assert abs(rep.lam - lam0) < 1e-3
    assert err < 1e-3


def test_criterion_02_pohozaev_and_lagrange_residuals(two_solutions, gap_report, g3):
    prm = ProblemParams(3, 1.0, -1.0, 4.0, 1.0)
    _keep("global mu=-1", solve_global_min(prm, g3), prm)
    worst_P = worst_L = 0.0
    checked = 0
    for rep, prm in _reports.values():
        if not rep.converged:
            continue
        K = rep.breakdown.components.kinetic
        res, _ = lagrange_residual(rep.state, rep.state.grid, prm)
        worst_P = max(worst_P, abs(rep.breakdown.P) / (1 + K))
        worst_L = max(worst_L, res)
        checked += 1
    ok = checked >= 5 and worst_P < 1e-6 and worst_L < 1e-7
    record(2, "Pohozaev and Lagrange residuals", ok,
           f"{checked} converged reports, max |P|/(1+K)={worst_P:.1e}, max Lagrange={worst_L:.1e}")
    assert checked >= 5
    assert worst_P < 1e-6
    assert worst_L < 1e-7


def test_criterion_03_gradient_matches_finite_differences(g3_small):
    g = g3_small
    rng = np.random.default_rng(7)
    cases = [(a, mu, p) for a in (1.0, -1.0) for mu in (-1.0, 0.0, 0.5, 1.0, 2.0) for p in (3.0, 4.0)]
    assert len(cases) == 20
    worst = 0.0
    for a, mu, p in cases:
        prm = ProblemParams(3, a, mu, p, 1.0)
        u = 0.8 * np.exp(-0.5 * g.r**2) + 0.3 * np.exp(-0.5 * ((g.r - 2) / 0.8) ** 2)
        v = np.exp(-0.3 * g.r**2) * np.cos(g.r) * rng.uniform(0.5, 1.5)
        dI = float(np.sum(g.w * eval_gradient(Field(u, g), g, prm).values * v))
        h = 1e-5
        fd = (eval_energy(u + h * v, g, prm).I - eval_energy(u - h * v, g, prm).I) / (2 * h)
        worst = max(worst, abs(dI - fd) / abs(fd))
    record(3, "gradient vs central differences", worst < 1e-5, f"20 cases, max rel err={worst:.1e}")
    assert worst < 1e-5


def test_criterion_04_fiber_algebra(g3_small, two_solution_params):
    g = g3_small
    prm = two_solution_params
    worst = 0.0
    changed = 0
    rng = np.random.default_rng(11)
    fields = list(random_fields(g, prm.c, 1000, seed=11))
    for i, u in enumerate(fields):
        q = ProblemParams(3, rng.choice([-1.0, 1.0]), rng.uniform(-2, 2), rng.uniform(2.5, 6.0), prm.c)
        f = eval_functionals(u, g, q)
        fc = fiber_coefficients(f, q)
        dp0 = fiber_eval(fc, 0.0)[1]
        worst = max(worst, abs(dp0 - pohozaev_from(f, q)) / (abs(fc.a) + abs(fc.b) + abs(fc.d)))
        base = fiber_roots(fc, alpha=q.alpha)
        fine = fiber_roots(fc, samples=4 * 4000 + 1, alpha=q.alpha)
        changed += len(base.roots) != len(fine.roots) or base.kind != fine.kind
    gauss = fiber_roots(fiber_coefficients(eval_functionals(sample_gaussian(g, prm.c), g, prm), prm))
    signature = (gauss.kind == "pair" and gauss.s_u < gauss.t_u
                 and gauss.second_derivatives[0] > 0 > gauss.second_derivatives[1])
    ok = worst < 1e-12 and signature and changed == 0
    record(4, "fibre algebra", ok,
           f"max rel |Psi'(0)-P|={worst:.1e}, Gaussian kind={gauss.kind}, refinement changes={changed}")
    assert worst < 1e-12
    assert signature
    assert changed == 0


def test_criterion_05_gn_constant():
    res = gn_details(3, 4.0)
    g = build_grid(3, 20.0, 2048)
    C = res.C
    slack_min = math.inf
    for u in random_fields(g, 1.0, 200, seed=5):
        slack_min = min(slack_min, C - gn_quotient(u, g, 4.0))
    tight = abs(gn_quotient(res.state, res.state.grid, 4.0) / C - 1)
    balance = abs(res.kinetic / res.mass2 - 1)
    ok = slack_min >= 0 and tight < 1e-4 and balance < 1e-4
    record(5, "GN constant", ok, f"C(3,4)={C:.6f}, min slack={slack_min:.2e}, |K/M-1|={balance:.1e}")
    assert slack_min >= 0
    assert tight < 1e-4
    assert balance < 1e-4


def test_criterion_06_two_solutions(two_solutions):
    loc, mp = two_solutions
    ok = (loc.converged and mp.converged and loc.I < mp.I
          and loc.membership == "Pplus" and mp.membership == "Pminus")
    record(6, "two solutions m+ < m-", ok,
           f"m+={loc.I:.6f} ({loc.membership}), m-={mp.I:.6f} ({mp.membership})")
    assert loc.converged and mp.converged
    assert loc.I < mp.I
    assert loc.membership == "Pplus"
    assert mp.membership == "Pminus"


def test_criterion_07_critical_gap(gap_report):
    S = sobolev_constant(3)
    rhs = gap_report.m_plus + S**1.5 / 3
    ok = gap_report.passed and gap_report.margin > 0 and abs(S - 5.478) < 1e-3
    record(7, "critical gap", ok,
           f"m-={gap_report.m_minus:.5f} < {rhs:.5f}, margin={gap_report.margin:.4f}, S={S:.5f}")
    assert abs(gap_report.rhs - rhs) < 1e-12
    assert abs(S - 5.478) < 1e-3
    assert gap_report.passed and gap_report.margin > 0


def test_criterion_08_continuation(g3):
    rep = continuation_mu_to_zero(ProblemParams(3, 1.0, 0.1, 4.0, 1.0), g3, [0.1, 0.01, 0.001])

    def decreasing(x):
        return all(b < a for a, b in zip(x, x[1:]))

    ok = (rep.complete and decreasing(rep.errors_H1) and decreasing(rep.lambda_gap)
          and decreasing(rep.energy_gap) and rep.errors_H1[-1] < 1e-2)
    record(8, "mu -> 0 continuation", ok, f"H1 errors={[f'{e:.1e}' for e in rep.errors_H1]}")
    assert rep.complete
    assert decreasing(rep.errors_H1) and decreasing(rep.lambda_gap) and decreasing(rep.energy_gap)
    assert rep.errors_H1[-1] < 1e-2


def test_criterion_09_nonexistence_scans():
    g = build_grid(3, 16.0, 2048)
    c = 1.0
    rep_ii = nonexistence_scan(ProblemParams(3, -1.0, -1.0, 4.0, c), g, 1000, seed=0)
    prm = ProblemParams(3, -1.0, 1.0, 2 + 4 / 3, 1.0)
    bound = thresholds(prm).mass_bound
    rep_i = nonexistence_scan(prm.replace(c=0.5 * bound), g, 1000, seed=0)
    exact = rep_ii.margin >= 1.5 * c * c
    ok = rep_i.passed and rep_ii.passed and rep_i.margin > 0 and exact
    record(9, "alpha=-1 nonexistence", ok,
           f"(i) margin={rep_i.margin:.4g}, (ii) margin={rep_ii.margin:.6g} vs (N/2)c^2={1.5 * c * c}")
    assert rep_i.passed and rep_i.margin > 0
    assert rep_ii.passed and exact


def test_criterion_10_dichotomy_and_unboundedness():
    prm = ProblemParams(3, -1.0, 1.0, 3.0, 1.0)
    D = thresholds(prm).D
    below = dichotomy_scan(prm.replace(c=0.9 * D), build_grid(3, 16.0, 2048), 200, seed=0)
    no_roots = set(below.root_counts) == {"none"}
    c = 1.2 * D
    demo = unboundedness_demo(prm.replace(c=c), build_grid(3, 60.0, 4096))
    mass_ok = max(abs(m - c * c) for m in demo.mass2) < 1e-8 * c * c
    tail = demo.pohozaev[-10:]
    ok = no_roots and below.passed and demo.passed and min(demo.energies) < -1e3 and mass_ok
    record(10, "D-dichotomy and unboundedness", ok,
           f"0.9D roots={below.root_counts}, 1.2D min I={min(demo.energies):.3g}, max P tail={max(tail):.3g}")
    assert no_roots and below.passed
    assert demo.passed and min(demo.energies) < -1e3
    assert all(P <= 0 for P in tail)
    assert mass_ok


def test_criterion_11_pohozaev_maximizer():
    prm = ProblemParams(3, -1.0, 1.0, 3.0, 1.0)
    prm = prm.replace(c=1.05 * thresholds(prm).D)
    g = build_grid(3, 12.0, 4096)
    rep = solve_pc_max(prm, g)
    K = rep.breakdown.components.kinetic
    dd = rep.extras["ddpsi0"]
    # competitors: random fields dilated onto P_c at either fibre root
    values = []
    for u in random_fields(g, prm.c, 4000, seed=3):
        for branch in ("plus", "minus"):
            try:
                values.append(project_to_manifold(u, g, prm, branch).evaluated_I)
            except (BranchMissingError, RuntimeError):
                pass
        if len(values) >= 50:
            break
    dominates = len(values) >= 50 and all(rep.I >= v for v in values[:50])
    strict_max = dd < -1e-6 * (1 + K)
    ok = rep.converged and strict_max and dominates
    record(11, "Pohozaev maximizer", ok,
           f"converged={rep.converged} (Lagrange residual {rep.residual_grad:.2e}, "
           f"Pohozaev multiplier {rep.extras['lambda2']:.4f}), Psi''(0)/(1+K)={dd / (1 + K):.1e}, "
           f"dominates {len(values[:50])} projections={dominates}")
    assert dominates
    assert rep.converged, rep.message
    assert strict_max
