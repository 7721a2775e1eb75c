import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sepclt.contour import V_MIN, RectContour, auto_contour, converge
from sepclt.errors import BranchCutCrossing, NonConvergedQuadrature
from sepclt.functions import parse_function


contours = st.builds(
    lambda lo, w, m, v: auto_contour(lo, lo + w, m, v),
    st.floats(-3, 3),
    st.floats(0.1, 10),
    st.floats(0.1, 0.6),
    st.floats(0.3, 2.0),
)


@given(contours, st.floats(0.0, 1.0))
def test_calibration(ct, t):
    lo, hi = ct.avoid
    a = lo + t * (hi - lo)
    assert abs(ct.integrate(np.ones_like)) <= 1e-12
    assert abs(ct.integrate(lambda z: 1.0 / (z - a)) - 2j * math.pi) <= 1e-10


@given(contours)
def test_no_node_near_axis(ct):
    assert ct.min_abs_imag() >= V_MIN
    z, w = ct.nodes()
    assert z.size == ct.size
    np.testing.assert_array_equal(z[: z.size // 2], z[z.size // 2 :].conj())


def test_validation():
    with pytest.raises(ValueError):
        RectContour(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        RectContour(0.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        RectContour(0.0, 1.0, 1.0, nodes_per_edge=7)
    with pytest.raises(ValueError):
        RectContour(0.0, 1.0, 1.0, avoid=(0.5, 2.0))


def test_encloses():
    ct = RectContour(-1.0, 5.0, 1.0)
    assert ct.encloses(0.0, 4.0)
    assert not ct.encloses(-1.0, 4.0)


def test_unpaneled_contour_integrates_polynomials():
    ct = RectContour(-1.0, 2.0, 0.7, nodes_per_edge=64)
    # residue of z^2 / (z - 0.5)
    assert ct.integrate(lambda z: z**2 / (z - 0.5)) == pytest.approx(2j * math.pi * 0.25, abs=1e-10)


def test_auto_contour_respects_branch_point():
    f = parse_function("log(x+0.1)")
    ct = auto_contour(0.0, 4.0, 0.25, 1.0, [f])
    assert -0.1 < ct.x_l < 0.0
    with pytest.raises(BranchCutCrossing):
        auto_contour(0.0, 4.0, 0.25, 1.0, [parse_function("log")])
    g = parse_function("log(5-x)")
    assert 4.0 < auto_contour(0.0, 4.0, 0.25, 1.0, [g]).x_r < 5.0


def test_converge_reports_and_raises():
    ct = auto_contour(0.0, 1.0, 0.25, 1.0)
    val, info = converge(lambda c: c.integrate(lambda z: 1.0 / (z - 0.3)).imag, ct, 1e-12)
    assert val == pytest.approx(2 * math.pi, abs=1e-12)
    assert set(info) == {"order", "nodes", "delta"}
    with pytest.raises(NonConvergedQuadrature):
        converge(lambda c: float(c.nodes_per_edge), ct, 1e-9, max_order=64)
