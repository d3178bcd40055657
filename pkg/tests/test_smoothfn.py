import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from pertspec.errors import QuadratureError, ValidationError
from pertspec.smoothfn import (
    affine, almost_analytic_ext, bump, dbar_extension, hs_reconstruct, parse_preset, polynomial, psi,
    stieltjes, window_minus, window_plus,
)


def _fd(phi, k, t, h=1e-4):
    # five-point central difference of the (k-1)-th derivative, O(h^4)
    g = lambda s: phi.deriv(k - 1, s)
    return (-g(t + 2 * h) + 8 * g(t + h) - 8 * g(t - h) + g(t - 2 * h)) / (12 * h)


mp.mp.dps = 40


def _g_mp(t):
    return mp.e ** (-1 / t) if t > 0 else mp.mpf(0)


def _psi_mp(t):
    return _g_mp(1 - t) / (_g_mp(1 - t) + _g_mp(t))


def _bump_mp(a, b):
    def f(t):
        u = (2 * t - a - b) / (b - a)
        return mp.e ** (1 - 1 / (1 - u**2)) if abs(u) < 1 else mp.mpf(0)
    return f


def _window_mp(c, a, w, sign):
    if sign < 0:
        return lambda t: _psi_mp(1 + (t - c - a) / w) * _psi_mp(1 - (t - c + a) / w)
    return lambda t: _psi_mp((t - c - a) / w) * _psi_mp(-(t - c + a) / w)


def test_psi_examples():
    p = psi()
    assert p(np.array([-1.0]))[0] == 1.0
    assert p(np.array([2.0]))[0] == 0.0
    a, b = p(np.array([0.3, 0.7]))
    assert 1 > a > b > 0


def test_psi_monotone():
    # non-increasing everywhere; strictly decreasing wherever the values are not rounded to 0 or 1
    assert np.all(np.diff(psi()(np.linspace(-0.5, 1.5, 2001))) <= 0)
    assert np.all(np.diff(psi()(np.linspace(0.05, 0.95, 901))) < 0)


@pytest.mark.parametrize("phi", [psi(), bump(0.0, 1.0), bump(0.3, 0.7)])
def test_derivatives_against_finite_differences(phi):
    lo, hi = phi.support if phi.support else (-0.2, 1.2)
    t = np.linspace(lo - 0.05, hi + 0.05, 100)
    for k in (1, 2, 3):
        exact = phi.deriv(k, t)
        assert np.all(np.abs(exact - _fd(phi, k, t)) <= 1e-5 * (1 + np.abs(exact)))


MP_CASES = [
    (psi(), _psi_mp, (-0.2, 1.2)),
    (bump(0.7, 0.9), _bump_mp(mp.mpf("0.7"), mp.mpf("0.9")), (0.69, 0.91)),
    (bump(0.0, 1.0), _bump_mp(mp.mpf(0), mp.mpf(1)), (-0.05, 1.05)),
    (window_minus(0.5, 0.1, 0.02), _window_mp(mp.mpf("0.5"), mp.mpf("0.1"), mp.mpf("0.02"), -1), (0.35, 0.65)),
    (window_plus(0.5, 0.1, 0.02), _window_mp(mp.mpf("0.5"), mp.mpf("0.1"), mp.mpf("0.02"), 1), (0.35, 0.65)),
]


@pytest.mark.parametrize("phi,ref,span", MP_CASES, ids=[c[0].name for c in MP_CASES])
def test_derivatives_against_high_precision(phi, ref, span):
    # steep instances defeat any double-precision difference quotient at step 1e-4;
    # 40-digit numerical differentiation of the defining formula is the oracle there
    # at zeros of a derivative the yardstick is that derivative's size over the span
    t = np.linspace(*span, 41)
    got = phi.derivs(t, 7)
    want = np.array([[float(mp.diff(ref, mp.mpf(x), k)) for x in t] for k in range(8)])
    scale = np.max(np.abs(want), axis=1, keepdims=True)
    assert np.all(np.abs(got - want) <= 1e-9 * (1 + np.abs(want)) + 1e-12 * scale)


def test_bump_examples():
    b = bump(0.7, 0.9)
    assert b(np.array([0.8]))[0] == 1.0
    assert b(np.array([0.65]))[0] == 0.0
    assert b.deriv(1, np.array([0.75]))[0] == pytest.approx(_fd(b, 1, np.array([0.75]))[0], abs=1e-5)
    with pytest.raises(ValidationError):
        bump(0.9, 0.7)


@pytest.mark.parametrize("phi", [bump(0.7, 0.9), bump(0.2, 0.25), window_minus(0.3, 0.1, 0.05),
                                 window_plus(0.3, 0.1, 0.05)])
def test_vanishes_outside_support(phi):
    a, b = phi.support
    t = np.concatenate([np.linspace(a - 1, a, 10), np.linspace(b, b + 1, 10)])
    assert np.all(phi.derivs(t, 7) == 0)


@pytest.mark.parametrize("phi", [bump(0.7, 0.9), bump(0.0, 1.0), window_minus(0.5, 0.1, 0.02),
                                 window_plus(0.5, 0.1, 0.02), stieltjes(0.6 + 2j)])
def test_d7_sup_certified(phi):
    lo, hi = phi.support if phi.support else (-1.0, 2.0)
    t = np.linspace(lo, hi, 10_000)
    assert np.max(np.abs(phi.deriv(7, t))) <= phi.d7_sup


def test_window_examples():
    lo, hi = window_minus(0.5, 0.1, 0.02), window_plus(0.5, 0.1, 0.02)
    assert lo(np.array([0.5]))[0] == 1.0 and hi(np.array([0.5]))[0] == 1.0
    assert lo(np.array([0.7]))[0] == 0.0 and hi(np.array([0.7]))[0] == 0.0
    t = np.linspace(0.3, 0.7, 1000)
    ind = (np.abs(t - 0.5) <= 0.1).astype(float)
    assert np.all(lo(t) <= ind) and np.all(ind <= hi(t))
    assert np.all(lo(np.linspace(0.42, 0.58, 50)) == 1.0)
    assert np.all(hi(np.concatenate([np.linspace(0, 0.38, 20), np.linspace(0.62, 1, 20)])) == 0.0)
    with pytest.raises(ValidationError):
        window_minus(0.5, 0.02, 0.02)


@given(st.floats(-1, 1), st.floats(0.01, 0.5), st.floats(0.05, 0.9))
def test_window_sandwich_property(c, alpha, ratio):
    omega = alpha * ratio
    t = np.linspace(c - 2 * alpha, c + 2 * alpha, 1000)
    ind = (np.abs(t - c) <= alpha).astype(float)
    assert np.all(window_minus(c, alpha, omega)(t) <= ind)
    assert np.all(ind <= window_plus(c, alpha, omega)(t))


def test_d7_window_scaling():
    assert window_plus(0, 0.1, 0.01).d7_sup == pytest.approx(window_plus(0, 0.1, 0.02).d7_sup * 2**7)


def test_extension_examples():
    phi = polynomial([0, 0, 1])
    assert almost_analytic_ext(phi, 1 + 1j) == pytest.approx(2j)
    b = bump(0.2, 0.6)
    x = np.linspace(0.1, 0.7, 13)
    assert np.array_equal(almost_analytic_ext(b, x + 0j), b(x).astype(complex))


def _dbar_mp(f, x, y, h=mp.mpf("1e-12")):
    # extension built from mpmath derivatives, d-bar by 40-digit central differences
    def ext(x, y):
        return sum((1j * y) ** k * mp.diff(f, x, k) / mp.factorial(k) for k in range(7))
    dx = (ext(x + h, y) - ext(x - h, y)) / (2 * h)
    dy = (ext(x, y + h) - ext(x, y - h)) / (2 * h)
    return complex((dx + 1j * dy) / 2)


@pytest.mark.parametrize("ab", [(0.0, 1.0), (0.3, 0.7), (0.6, 0.9)])
def test_dbar_closed_form(ab):
    a, b = ab
    f = _bump_mp(mp.mpf(a), mp.mpf(b))
    xs = np.linspace(a + 0.05 * (b - a), b - 0.05 * (b - a), 6)
    ys = np.linspace(-0.3, 0.3, 5)
    exact = dbar_extension(bump(a, b), xs[:, None] + 1j * ys[None, :])
    ref = np.array([[_dbar_mp(f, mp.mpf(x), mp.mpf(y)) for y in ys] for x in xs])
    assert np.max(np.abs(exact - ref) / (1 + np.abs(ref))) <= 1e-6
    z = 0.5 + 0.3j
    assert dbar_extension(bump(0, 1), z) == pytest.approx(_dbar_mp(_bump_mp(0, 1), mp.mpf(0.5), mp.mpf(0.3)), abs=1e-6)


def test_dbar_trivial_cases():
    p = polynomial([1, -2, 3, 0, 0, 0, 5])
    z = np.array([0.1 + 0.4j, -2 + 1j, 3 - 2j])
    assert np.all(dbar_extension(p, z) == 0)
    assert np.all(dbar_extension(bump(0, 1), np.linspace(0, 1, 9) + 0j) == 0)


@pytest.mark.parametrize("phi", [bump(0.3, 0.7), bump(0.6, 0.9)])
def test_hs_reconstruction_sup_error(phi):
    x = np.linspace(phi.support[0] - 0.1, phi.support[1] + 0.1, 11)
    assert np.max(np.abs(hs_reconstruct(phi, x) - phi(x))) <= 1e-4


def test_hs_reconstruction():
    phi = bump(0.3, 0.7)
    assert hs_reconstruct(phi, 0.5) == pytest.approx(1.0, abs=1e-4)
    assert hs_reconstruct(phi, 0.9) == pytest.approx(0.0, abs=1e-4)


def test_hs_linearity():
    p1, p2 = bump(0.3, 0.7), bump(0.4, 0.6)
    x = 0.45
    assert hs_reconstruct(p1 + p2, x) == pytest.approx(hs_reconstruct(p1, x) + hs_reconstruct(p2, x), abs=2e-4)


def test_hs_refuses_roundoff_dominated_support():
    with pytest.raises(QuadratureError):
        hs_reconstruct(bump(0.5, 0.5000001), 0.50000005)


def test_hs_requires_support():
    with pytest.raises(ValidationError):
        hs_reconstruct(affine(1, 0), 0.5)


def test_parse_preset():
    assert parse_preset("bump:0.7,0.9").support == (0.7, 0.9)
    assert parse_preset("window-:0.5,0.1,0.02")(np.array([0.5]))[0] == 1.0
    assert parse_preset("window+:0.5,0.1,0.02")(np.array([0.7]))[0] == 0.0
    assert parse_preset("affine:3,2")(np.array([1.0]))[0] == 5.0
    for bad in ("gauss:1,2", "bump:1", "bump:a,b"):
        with pytest.raises(ValidationError):
            parse_preset(bad)


def test_stieltjes_derivatives():
    z = 0.6 + 2j
    phi = stieltjes(z)
    t = np.linspace(-1, 2, 7)
    assert np.allclose(phi(t), 1 / (z - t))
    assert np.allclose(phi.deriv(3, t), 6 / (z - t) ** 4)
