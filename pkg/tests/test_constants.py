import math

import numpy as np
import pytest
from scipy.special import gamma as Gamma

from lognls import ProblemParams, build_grid
from lognls.constants import (
    ThresholdError,
    bubble_quotient,
    gn_constant,
    gn_details,
    gn_quotient,
    sobolev_constant,
    sobolev_details,
    thresholds,
    weinstein_ground_state,
)
from lognls.discretization import Field, scale_field
from lognls.studies import random_fields

# frozen from independent runs of the shooting oracle (N, p) -> C(N, p)
GN_FROZEN = {(3, 4.0): 0.449257, (3, 3.0): 0.559082, (3, 3.5): 0.488733, (2, 4.0): 0.642988}


def sobolev_exact(N):
    return N * (N - 2) * math.pi * (Gamma(N / 2) / Gamma(N)) ** (2 / N)


@pytest.mark.parametrize("key", sorted(GN_FROZEN))
def test_gn_constant_frozen(key):
    assert gn_constant(*key) == pytest.approx(GN_FROZEN[key], abs=2e-6)


def test_weinstein_profile():
    res = gn_details(3, 4.0)
    q = res.state.values
    assert (q > 0).all() and (np.diff(q) <= 0).all()
    assert res.kinetic / res.mass2 == pytest.approx(1.0, rel=1e-4)
    assert res.ode_residual < 1e-8


def test_weinstein_quotient_is_stationary_under_dilation():
    res = gn_details(3, 4.0)
    g = res.state.grid
    q = {}
    for theta in (0.95, 1.0, 1.05):
        u = scale_field(g, res.state, math.log(theta)).field if theta != 1.0 else res.state
        q[theta] = gn_quotient(u, g, 4.0)
    # the quotient is dilation invariant, so the three values agree
    assert q[0.95] == pytest.approx(q[1.0], rel=1e-6)
    assert q[1.05] == pytest.approx(q[1.0], rel=1e-6)
    # and amplitude perturbations Q + eps phi lower it
    phi = np.exp(-g.r**2)
    for eps in (-1e-2, 1e-2):
        assert gn_quotient(res.state.values + eps * phi, g, 4.0) < q[1.0]


def test_gn_inequality_on_random_fields():
    g = build_grid(3, 20.0, 2048)
    C = gn_constant(3, 4.0)
    for u in random_fields(g, 1.0, 200, seed=9):
        assert gn_quotient(u, g, 4.0) <= C


def test_gn_monotone_in_p():
    vals = [gn_constant(3, p) for p in (3.0, 3.5, 4.0)]
    assert vals[0] > vals[1] > vals[2]


def test_weinstein_rejects_critical_power():
    with pytest.raises(ValueError):
        weinstein_ground_state(3, 6.0)


def test_sobolev_three_dimensions():
    S = sobolev_constant(3)
    assert S == pytest.approx(5.478, abs=1e-3)
    assert S == pytest.approx(sobolev_exact(3), rel=1e-4)


def test_sobolev_four_dimensions_stable():
    res = sobolev_details(4)
    assert res.S == pytest.approx(sobolev_exact(4), rel=1e-3)
    assert round(res.quotients[-1], 1) == round(res.quotients[-2], 1)


def test_sobolev_rejects_low_dimension():
    with pytest.raises(ValueError):
        sobolev_constant(2)


def test_bubble_quotient_scale_trend():
    q1 = bubble_quotient(3, 20.0, 2048, eps=1.0)
    q05 = bubble_quotient(3, 20.0, 2048, eps=0.5)
    S = sobolev_constant(3)
    assert S < q05 < q1


def test_k0_values():
    assert thresholds(ProblemParams(3, 1, 1, 4.0, 1.0)).k0 == pytest.approx(4.5)
    assert thresholds(ProblemParams(3, 1, 1, 4.0, 2.0)).k0 == pytest.approx(18.0)
    assert thresholds(ProblemParams(3, 1, 1, 6.0, 1.0)).k0 == pytest.approx(2.25)


def test_c0_critical_formula():
    th = thresholds(ProblemParams(3, 1, 1, 6.0, 1.0))
    S = sobolev_constant(3)
    assert th.c0 == pytest.approx((0.75 * (4 * S / 9) ** 3) ** 0.25, rel=1e-12)


def test_frozen_thresholds():
    th = thresholds(ProblemParams(3, 1, 1, 4.0, 1.0))
    assert th.c0 == pytest.approx(3.20724, abs=1e-4)
    assert th.mass_bound == pytest.approx(7.98643, abs=1e-4)
    assert thresholds(ProblemParams(3, -1, 1, 3.0, 1.0)).D == pytest.approx(22.2252, abs=1e-3)


def test_thresholds_independent_of_c():
    a = thresholds(ProblemParams(3, 1, 1, 4.0, 1.0))
    b = thresholds(ProblemParams(3, 1, 1, 4.0, 3.0))
    assert a.c0 == b.c0
    assert b.k0 == pytest.approx(9 * a.k0)
    d1 = thresholds(ProblemParams(3, -1, 1, 3.0, 1.0)).D
    d2 = thresholds(ProblemParams(3, -1, 1, 3.0, 5.0)).D
    assert d1 == d2


def test_required_gates_raise():
    with pytest.raises(ThresholdError):
        thresholds(ProblemParams(3, 1, 1, 3.0, 1.0), require=("c0",))
    with pytest.raises(ThresholdError):
        thresholds(ProblemParams(3, -1, 1, 4.0, 1.0), require=("D",))
    th = thresholds(ProblemParams(3, 1, 1, 3.0, 1.0))
    assert th.c0 is None and th.k0 is None and th.D is not None


def test_all_gates_positive():
    for p in (2.5, 3.0, 10 / 3, 4.0, 5.0, 6.0):
        th = thresholds(ProblemParams(3, 1, 1, p, 1.0))
        for v in th.as_dict().values():
            assert v is None or v > 0


def test_kinetic_threshold_consistency():
    # P(u) <= 0 with kinetic k0 forces c >= c0: rescaled random fields below c0 keep P > 0
    prm = ProblemParams(3, 1, 1, 4.0, 1.0)
    th = thresholds(prm)
    g = build_grid(3, 16.0, 1024)
    from lognls.model import eval_functionals, pohozaev_from

    c = 0.9 * th.c0
    q = prm.replace(c=c)
    k0 = thresholds(q).k0
    for u in random_fields(g, c, 1000, seed=4):
        f = eval_functionals(u, g, q)
        s = 0.5 * math.log(k0 / f.kinetic)
        # closed-form fibre value of P at the dilation with kinetic k0
        P = k0 - q.mu * q.gamma_p * f.lp * math.exp(q.p_gamma * s) - 1.5 * c * c
        assert P > 0
