import numpy as np
import pytest
from hypothesis import given, strategies as st

from pertspec import smoothfn
from pertspec.ensemble import sample_system
from pertspec.errors import ValidationError
from pertspec.model import build_wigner_model, discretize
from pertspec.spectra import (
    SpectralMeasure, count_window, eigendecompose, function_of_matrix, integrate_measure, operator_norm,
    overlaps, resolvent_entry, vector_spectral_measure, weyl_check, window_slice, write_measure_csv,
)


@pytest.fixture(scope="module")
def system():
    return sample_system(discretize(build_wigner_model(), 200), 200 ** -0.7, 21)


@pytest.fixture(scope="module")
def dec(system):
    return eigendecompose(system.d_eps)


def test_diagonal_example():
    d = eigendecompose(np.diag([3.0, 1.0, 2.0]))
    assert np.array_equal(d.values, [1, 2, 3])
    assert np.array_equal(np.abs(d.vectors), np.eye(3)[:, [1, 2, 0]])


def test_swap_example():
    d = eigendecompose(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(d.values, [-1, 1])
    assert np.allclose(np.abs(d.vectors), np.full((2, 2), 1 / np.sqrt(2)))
    assert d.vectors[0, 0] * d.vectors[1, 0] < 0 < d.vectors[0, 1] * d.vectors[1, 1]


def test_random_reconstruction(rng):
    a = rng.normal(size=(50, 50))
    h = (a + a.T) / 2
    d = eigendecompose(h)
    assert np.all(np.diff(d.values) >= 0)
    assert np.max(np.abs(d.vectors.T @ d.vectors - np.eye(50))) <= 1e-8
    assert np.max(np.abs(d.reconstruct() - h)) <= 1e-6 * (1 + np.max(np.abs(h)))


def test_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_unperturbed_measure_single_atom():
    d = eigendecompose(np.diag([0.1, 0.2, 0.3]))
    m = vector_spectral_measure(d, 2)
    assert np.array_equal(m.weights, [0, 1, 0])
    assert m.locations[1] == 0.2


@given(st.floats(-3, 3).filter(lambda c: abs(c) > 1e-6))
def test_two_by_two_closed_form(c):
    d = eigendecompose(np.array([[0.0, c], [c, 1.0]]))
    theta = 0.5 * np.arctan(2 * c)  # weight of e_1 on the lower eigenvector is cos^2
    w = vector_spectral_measure(d, 1).weights[0]
    assert w == pytest.approx(np.cos(theta) ** 2, abs=1e-12)
    lower = 0.5 - np.hypot(0.5, c)
    assert d.values[0] == pytest.approx(lower, abs=1e-12)


def test_integrate_examples():
    m = SpectralMeasure(np.array([0.0, 1.0]), np.array([0.5, 0.5]), 1)
    assert integrate_measure(m, lambda t: t) == 0.5
    assert integrate_measure(m, lambda t: np.ones_like(t)) == 1.0


def test_measure_identities(system, dec):
    xnorm = operator_norm(system.x)
    assert weyl_check(np.sort(system.d_model.lam), dec.values, system.epsilon, xnorm)
    phi = smoothfn.bump(0.3, 0.6)
    fm = function_of_matrix(dec, phi)
    for i in (1, 17, 100, 200):
        m = vector_spectral_measure(dec, i)
        assert m.total_mass == pytest.approx(1.0, abs=1e-10)
        assert integrate_measure(m, lambda t: t) == pytest.approx(system.d_eps[i - 1, i - 1], abs=1e-8)
        assert integrate_measure(m, phi) == pytest.approx(fm[i - 1, i - 1], abs=1e-9)
        assert np.all(m.weights >= 0)


def test_resolvent_matches_measure(system, dec):
    z = 0.4 + 0.05j
    m = vector_spectral_measure(dec, 50)
    assert integrate_measure(m, lambda t: 1 / (z - t)) == pytest.approx(resolvent_entry(system.d_eps, 50, z), abs=1e-9)


def test_index_range(dec):
    with pytest.raises(ValidationError):
        overlaps(dec, 0)
    with pytest.raises(ValidationError):
        overlaps(dec, dec.n + 1)


def test_operator_norm_examples():
    assert operator_norm(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0)
    assert operator_norm(np.diag([-3.0, 2.0])) == 3.0


def test_operator_norm_wigner():
    s = sample_system(discretize(build_wigner_model(), 1000), 0.01, 4)
    assert 1.8 <= operator_norm(s.x) <= 2.2


def test_weyl_examples():
    assert weyl_check([0, 1], [0, 1], 0.0, 5.0)
    assert not weyl_check([0, 1], [0.2, 1], 0.1, 1.0)
    with pytest.raises(ValidationError):
        weyl_check([0, 1], [0, 1, 2], 0.1, 1.0)


def test_count_window_examples():
    grid = np.arange(1, 11) / 10
    assert count_window(grid, 0.5, 0.15) == 3
    assert count_window(grid, 0.5, 10.0) == 10
    s = window_slice(grid, 0.5, 0.15)
    assert np.allclose(grid[s], [0.4, 0.5, 0.6])
    with pytest.raises(ValidationError):
        count_window(grid, 0.5, 0.0)


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=60), st.floats(-2, 2), st.floats(1e-3, 3))
def test_count_window_matches_scan(vals, c, a):
    v = np.sort(vals)
    assert count_window(v, c, a) == int(np.sum(np.abs(v - c) < a))


def test_count_window_wigner():
    n = 2000
    s = sample_system(discretize(build_wigner_model(), n), n ** -0.7, 2)
    vals = np.linalg.eigvalsh(s.d_eps)
    count = count_window(vals, 0.5, n ** -0.5)
    assert abs(count - 2 * n * n ** -0.5) <= 0.15 * 2 * n * n ** -0.5


def test_measure_csv(tmp_path, dec):
    m = vector_spectral_measure(dec, 3)
    p = tmp_path / "m.csv"
    write_measure_csv(m, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "j,lambda_eps,weight"
    assert len(lines) == dec.n + 1
    back = np.loadtxt(p, delimiter=",", skiprows=1)
    assert np.allclose(back[:, 1], m.locations, rtol=1e-14, atol=1e-300)
    assert np.allclose(back[:, 2], m.weights, rtol=1e-14, atol=1e-300)
