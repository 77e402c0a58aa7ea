import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kmsproc.errors import (
    DimensionMismatch,
    FunctionSingularAtSpectrum,
    NonPositiveSpectrum,
    NonSymmetric,
)
from kmsproc.models import random_generator
from kmsproc.spectral import (
    MomentumVector,
    apply_function,
    conjugate,
    default_p_max,
    eigendecompose,
    format_matrix,
    inner,
    is_real,
    parse_matrix,
    quadrature_model,
    sphere_area,
    symplectic,
)


def test_identity_decomposition():
    m = eigendecompose(np.eye(2))
    np.testing.assert_allclose(m.eigenvalues, [1.0, 1.0])
    np.testing.assert_allclose(np.abs(m.eigenvectors), np.eye(2))


def test_diagonal_and_2x2():
    np.testing.assert_allclose(eigendecompose(np.diag([2.0, 5.0])).eigenvalues, [2.0, 5.0])
    # lambda^2 - 4 lambda + 3
    np.testing.assert_allclose(eigendecompose(np.array([[2.0, 1.0], [1.0, 2.0]])).eigenvalues, [1.0, 3.0])


def test_decomposition_invariants(rng):
    m = random_generator(rng, 6)
    Q = m.eigenvectors
    np.testing.assert_allclose(Q.T @ Q, np.eye(6), atol=1e-12)
    np.testing.assert_allclose((Q * m.eigenvalues) @ Q.T, m.h, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize(
    "h, err",
    [
        (np.array([[1.0, 2.0], [0.0, 1.0]]), NonSymmetric),
        (np.ones((2, 3)), NonSymmetric),
        (np.diag([1.0, 0.0]), NonPositiveSpectrum),
        (np.diag([1.0, -2.0]), NonPositiveSpectrum),
    ],
)
def test_rejects_bad_generators(h, err):
    with pytest.raises(err):
        eigendecompose(h)


def test_apply_function_values():
    m = eigendecompose(np.array([[1.0]]))
    np.testing.assert_allclose(apply_function(m, lambda x: np.exp(-x), np.array([1.0])), [0.36787944117144233])
    f = np.array([0.3, -1.2])
    m2 = eigendecompose(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(apply_function(m2, lambda x: x, f), m2.h @ f)
    np.testing.assert_allclose(apply_function(m2, lambda x: np.ones_like(x), f), f)


def test_apply_function_singular():
    m = eigendecompose(np.diag([1.0, 2.0]))
    with pytest.raises(FunctionSingularAtSpectrum):
        apply_function(m, lambda x: 1.0 / (x - 1.0), np.array([1.0, 0.0]))


def test_dimension_mismatch():
    m = eigendecompose(np.eye(3))
    with pytest.raises(DimensionMismatch):
        m.coords(np.ones(2))


def test_inner_and_symplectic():
    assert inner(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0
    f, g = np.array([1.0, 0.0]), np.array([1j, 0.0])
    assert inner(f, g) == 1j
    assert symplectic(f, g) == 1.0
    assert symplectic(f, f) == 0.0


def test_conjugate():
    np.testing.assert_array_equal(conjugate(np.array([1j])), np.array([-1j]))
    f = np.array([1.0, 2.0])
    np.testing.assert_array_equal(conjugate(f), f)
    assert is_real(f) and not is_real(np.array([1.0 + 1e-10j]))
    assert is_real(np.array([1.0 + 1e-15j]))


vec = st.lists(st.floats(-3, 3), min_size=8, max_size=8).map(lambda v: np.array(v[:4]) + 1j * np.array(v[4:]))


@given(vec, vec)
def test_symplectic_antisymmetric(f, g):
    assert symplectic(f, g) == pytest.approx(-symplectic(g, f), abs=1e-12)
    assert symplectic(f.real, g.real) == 0.0
    np.testing.assert_allclose(conjugate(conjugate(f)), f)


@given(vec, st.integers(0, 2**32 - 1))
def test_functional_calculus_homomorphism(f, seed):
    m = random_generator(np.random.default_rng(seed), 4)
    phi, psi = np.exp, lambda x: 1.0 / (1.0 + x)
    lhs = apply_function(m, lambda x: phi(x) * psi(x), f)
    rhs = apply_function(m, phi, apply_function(m, psi, f))
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)
    # real generator commutes with entrywise conjugation
    np.testing.assert_allclose(apply_function(m, phi, conjugate(f)), conjugate(apply_function(m, phi, f)), atol=1e-12)


def test_matrix_text_roundtrip(rng):
    h = random_generator(rng, 3).h
    np.testing.assert_array_equal(parse_matrix(format_matrix(h)), h)
    with pytest.raises(ValueError):
        parse_matrix("2\n1 0\n0")


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_quadrature_gaussian_norm():
    # ||A e^{-a x^2}||^2 = A^2 (pi / 2a)^{d/2}
    for d in (1, 2, 3):
        m = quadrature_model(d, lambda p: np.sqrt(p**2 + 1.0), n_nodes=200)
        f = m.gaussian(1.7, 0.8)
        assert inner(f, f).real == pytest.approx(1.7**2 * (math.pi / 1.6) ** (d / 2), rel=1e-12)


def test_quadrature_model_invariants():
    m = quadrature_model(3, lambda p: p**2 + 0.5, n_nodes=64)
    assert np.all(np.diff(m.nodes) > 0) and np.all(m.weights > 0) and np.all(m.energies > 0)
    assert default_p_max(3, 2.0) > 0
    with pytest.raises(NonPositiveSpectrum):
        quadrature_model(1, lambda p: p**2 - 1.0)


def test_momentum_vectors_from_other_models_rejected():
    a = quadrature_model(1, lambda p: p + 1.0, n_nodes=16)
    b = quadrature_model(1, lambda p: p + 1.0, n_nodes=16)
    with pytest.raises(DimensionMismatch):
        a.gaussian() + b.gaussian()
    assert isinstance(a.gaussian() * 2.0, MomentumVector)
