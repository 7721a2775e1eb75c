import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sepclt.errors import BranchCutCrossing
from sepclt.functions import TestFunction, monomial, parse_function, polynomial


@pytest.mark.parametrize(
    "text,label,value_at_2",
    [
        ("1", "1", 1.0),
        ("x", "x", 2.0),
        ("x^3", "x^3", 8.0),
        ("x**2", "x^2", 4.0),
        ("poly[1,0,2]", "poly[1,0,2]", 9.0),
        ("exp", "exp", np.exp(2.0)),
        ("log(1+x)", "log(1+x)", np.log(3.0)),
        ("exp(0.5*x - 1)", "exp(0.5*x-1)", 1.0),
    ],
)
def test_parse(text, label, value_at_2):
    f = parse_function(text)
    assert f.label == label
    assert f(2.0) == pytest.approx(value_at_2, rel=1e-14)


@pytest.mark.parametrize("bad", ["sin", "x^", "log(x*x)", "poly[a]", "log(__import__('os'))"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse_function(bad)


def test_branch_point_and_region():
    f = parse_function("log(2*x+1)")
    assert f.branch_point() == -0.5
    assert f.analytic_on(-0.4, 10.0)
    with pytest.raises(BranchCutCrossing):
        f.check_region(-0.6, 10.0)
    g = parse_function("log(3-x)")
    assert g.analytic_on(-5.0, 2.9)
    assert not g.analytic_on(-5.0, 3.1)
    assert monomial(4).branch_point() is None


def test_dict_round_trip():
    for f in (monomial(3), parse_function("log(1+x)"), polynomial([1, -2, 0.5])):
        assert TestFunction.from_dict(f.to_dict()) == f


def test_constant_derivative_shape():
    z = np.array([1.0 + 1j, 2.0])
    assert monomial(0).derivative(z).shape == z.shape


funcs = st.one_of(
    st.lists(st.floats(-3, 3), min_size=1, max_size=5).map(polynomial),
    st.tuples(st.floats(0.2, 2.0), st.floats(1.0, 3.0)).map(lambda ab: TestFunction("log", (), ab[0], ab[1])),
    st.tuples(st.floats(-1.5, 1.5).filter(lambda a: abs(a) > 0.1), st.floats(-1, 1)).map(
        lambda ab: TestFunction("exp", (), ab[0], ab[1])
    ),
)


@given(funcs, st.floats(0.0, 2.0), st.floats(-0.5, 0.5))
def test_derivative_matches_finite_difference(f, x, y):
    z = complex(x, y)
    h = 1e-5
    fd = (f(z + h) - f(z - h)) / (2 * h)
    exact = f.derivative(z)
    assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))
