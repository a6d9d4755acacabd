"""Property checks over random parameters (skipped without hypothesis)."""

import math

import numpy as np
import pytest

hypothesis = pytest.importorskip("hypothesis")
from hypothesis import given, settings, strategies as st

from lognls import Field, ProblemParams, build_grid, eval_energy, scale_field
from lognls.fiber import fiber_coefficients, fiber_eval

G = build_grid(3, 16.0, 1024)

params = st.builds(
    lambda a, mu, p, c: ProblemParams(3, a, mu, p, c),
    st.sampled_from([1.0, -1.0]),
    st.floats(-2.0, 2.0),
    st.floats(2.1, 6.0),
    st.floats(0.2, 3.0),
)


def _bump(width, c):
    u = np.exp(-0.5 * (G.r / width) ** 2)
    return u * (c / math.sqrt(np.sum(G.w * u * u)))


@settings(max_examples=40, deadline=None)
@given(prm=params, width=st.floats(0.5, 2.0))
def test_fiber_derivative_at_zero_is_pohozaev(prm, width):
    u = _bump(width, prm.c)
    bd = eval_energy(u, G, prm)
    psi, dpsi, _ = fiber_eval(fiber_coefficients(bd.components, prm), 0.0)
    assert psi == pytest.approx(bd.I, rel=1e-10, abs=1e-10)
    assert dpsi == pytest.approx(bd.P, rel=1e-10, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(prm=params, s=st.floats(-0.3, 0.3))
def test_fiber_matches_dilated_energy(prm, s):
    u = _bump(1.0, prm.c)
    fc = fiber_coefficients(eval_energy(u, G, prm).components, prm)
    v = scale_field(G, Field(u, G), s).field
    assert eval_energy(v, G, prm).I == pytest.approx(fiber_eval(fc, s)[0], rel=2e-3, abs=1e-3)
