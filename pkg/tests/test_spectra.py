import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sepclt.errors import EmptyList, NonFiniteKernel
from sepclt.spectra import SpectralMeasure, expand_to_values, from_eigenvalues, integrate, moment

from conftest import measures


def test_integrate_examples():
    d1 = SpectralMeasure.point_mass(1.0)
    assert integrate(d1, lambda x: x) == 1
    assert integrate(from_eigenvalues([1, 2]), lambda x: x**2) == pytest.approx(2.5, abs=1e-15)
    assert integrate(d1, lambda x: 1 / (1 + 1j * x)) == pytest.approx(0.5 - 0.5j, abs=1e-15)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_integrate_pole_raises():
    with pytest.raises(NonFiniteKernel):
        integrate(from_eigenvalues([1.0, 2.0]), lambda x: 1.0 / (x - 2.0))


def test_moment_examples():
    two = SpectralMeasure.from_atoms([(-1, 0.5), (3, 0.5)])
    assert moment(SpectralMeasure.point_mass(1.0), 2) == 1
    assert moment(two, 1) == 1
    assert moment(two, 2) == 5
    assert moment(two, 0) == 1


def test_from_eigenvalues_merges_duplicates():
    assert from_eigenvalues([1, 1, 1]).atoms == [(1.0, 1.0)]
    assert from_eigenvalues([1, 2]).atoms == [(1.0, 0.5), (2.0, 0.5)]
    m = from_eigenvalues([2, 1, 2])
    assert m.values == (1.0, 2.0)
    assert m.weights == pytest.approx((1 / 3, 2 / 3), abs=1e-15)


def test_from_eigenvalues_empty():
    with pytest.raises(EmptyList):
        from_eigenvalues([])


@pytest.mark.parametrize(
    "values,weights",
    [((1.0, 1.0), (0.5, 0.5)), ((2.0, 1.0), (0.5, 0.5)), ((1.0,), (0.9,)), ((1.0, 2.0), (1.2, -0.2)), ((np.inf,), (1.0,))],
)
def test_invalid_measures(values, weights):
    with pytest.raises(ValueError):
        SpectralMeasure(values, weights)


def test_near_duplicate_atoms_merge():
    m = SpectralMeasure.from_atoms([(1.0, 1.0), (1.0 + 1e-13, 1.0)])
    assert m.atoms == [(1.0, 1.0)]


def test_expand_to_values_counts():
    m = SpectralMeasure.from_atoms([(-1.0, 0.25), (1.0, 0.75)])
    vals = expand_to_values(m, 10)
    assert vals.size == 10
    assert (vals == -1.0).sum() in (2, 3)
    back = from_eigenvalues(expand_to_values(m, 400))
    assert back.values == m.values
    assert back.weights == pytest.approx(m.weights, abs=1e-14)


@given(measures(-3, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_integrate_linear(h, a, b):
    phi = lambda x: np.exp(1j * x)
    psi = lambda x: x**3 - x
    lhs = integrate(h, lambda x: a * phi(x) + b * psi(x))
    rhs = a * integrate(h, phi) + b * integrate(h, psi)
    assert abs(lhs - rhs) <= 1e-14 * max(1.0, abs(a) + abs(b)) * 30


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=50))
def test_from_eigenvalues_mass_and_mean(vs):
    m = from_eigenvalues(vs)
    assert sum(m.weights) == pytest.approx(1.0, abs=1e-14)
    assert moment(m, 1) == pytest.approx(float(np.mean(vs)), abs=1e-12 * max(1.0, max(map(abs, vs))))


@given(measures(-3, 3))
def test_dict_round_trip(h):
    assert SpectralMeasure.from_dict(h.to_dict()) == h
