import numpy as np
import pytest
from hypothesis import given, strategies as st

from pertspec.errors import QuadratureError, ValidationError
from pertspec.quadrature import QuadratureSpec, gauss_legendre, integrate_pieces

COMPOSITE = QuadratureSpec(method="composite", abs_tol=1e-12, rel_tol=1e-12, max_subdivisions=1024)


@pytest.mark.parametrize("kwargs", [
    {"method": "simpson"}, {"abs_tol": 0.0}, {"rel_tol": -1.0}, {"max_subdivisions": 0}, {"singularity_delta": 0.0},
])
def test_spec_validation(kwargs):
    with pytest.raises(ValidationError):
        QuadratureSpec(**kwargs)


def test_tightened():
    q = QuadratureSpec().tightened(1e-2)
    assert q.abs_tol == pytest.approx(1e-12) and q.rel_tol == pytest.approx(1e-11)


@given(st.integers(1, 30))
def test_gauss_legendre_polynomials(m):
    x, w = gauss_legendre(m, 0.0, 2.0)
    deg = 2 * m - 1
    assert np.sum(w * x**deg) == pytest.approx(2.0 ** (deg + 1) / (deg + 1), rel=1e-12)


@pytest.mark.parametrize("q", [QuadratureSpec(), COMPOSITE])
def test_known_integrals(q):
    assert integrate_pieces(np.exp, 0.0, 1.0, q) == pytest.approx(np.e - 1, rel=1e-12)
    step = lambda t: np.where(np.asarray(t) < 0.3, 1.0, 2.0)
    assert integrate_pieces(step, 0.0, 1.0, q, breakpoints=[0.3]) == pytest.approx(1.7, rel=1e-12)


def test_complex_adaptive():
    z = 0.5 + 1j
    val = integrate_pieces(lambda t: 1 / (z - t), 0.0, 1.0, is_complex=True)
    assert val == pytest.approx(np.log(z) - np.log(z - 1), abs=1e-12)


def test_empty_interval():
    assert integrate_pieces(np.exp, 1.0, 1.0) == 0.0


def test_nonconvergence_raises():
    q = QuadratureSpec(max_subdivisions=3)
    with pytest.raises(QuadratureError):
        integrate_pieces(lambda t: np.sin(1 / t), 1e-6, 1.0, q)
    with pytest.raises(QuadratureError):
        integrate_pieces(lambda t: np.sin(1 / t), 1e-6, 1.0, QuadratureSpec(method="composite", max_subdivisions=4))
