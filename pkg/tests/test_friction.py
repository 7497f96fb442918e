import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm, fractional_matrix_power

from rodlangevin.core import ParameterError
from rodlangevin.friction import (FrictionTensor, NonUnitAxis, SingularTensor, decompose, green_function,
                                  tensor_apply, tensor_power)


def dense(g_par, g_perp, u):
    uu = np.outer(u, u)
    return g_par * uu + g_perp * (np.eye(3) - uu)


unit = st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.1).map(
    lambda v: np.asarray(v) / np.linalg.norm(v))
positive = st.floats(0.05, 20.0)
vector = st.lists(st.floats(-10, 10), min_size=3, max_size=3).map(np.asarray)


@given(unit, vector)
def test_decompose_parts_are_orthogonal_and_sum_back(u, v):
    par, perp = decompose(v, u)
    np.testing.assert_allclose(par + perp, v, atol=1e-12)
    assert abs(perp @ u) <= 1e-12 * max(1.0, np.linalg.norm(v))
    np.testing.assert_allclose(np.cross(par, u), 0.0, atol=1e-12 * max(1.0, np.linalg.norm(v)))


@given(unit, positive, positive, vector)
def test_apply_matches_dense_matrix(u, g_par, g_perp, v):
    got = tensor_apply(FrictionTensor(g_par, g_perp, u), v)
    np.testing.assert_allclose(got, dense(g_par, g_perp, u) @ v, rtol=1e-12, atol=1e-12 * np.abs(v).max() * 20)


@given(unit, positive, positive, st.floats(-2, 2), vector)
@settings(max_examples=50)
def test_power_matches_dense_fractional_power(u, g_par, g_perp, s, v):
    got = tensor_apply(tensor_power(FrictionTensor(g_par, g_perp, u), s), v)
    want = np.real(fractional_matrix_power(dense(g_par, g_perp, u), s)) @ v
    np.testing.assert_allclose(got, want, rtol=1e-8, atol=1e-8 * np.abs(want).max())


@given(unit, positive, positive, st.floats(0.1, 3), st.floats(0, 2), vector)
@settings(max_examples=50)
def test_green_function_matches_expm(u, g_par, g_perp, mass, dt, v):
    got = tensor_apply(green_function(FrictionTensor(g_par, g_perp, u), mass, dt), v)
    want = expm(-dense(g_par, g_perp, u) * dt / mass) @ v
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(v).max()))


@given(unit, positive, positive, st.floats(0, 1), st.floats(0, 1))
def test_green_semigroup(u, g_par, g_perp, t1, t2):
    g = FrictionTensor(g_par, g_perp, u)
    v = np.array([0.3, -1.2, 2.0])
    lhs = tensor_apply(green_function(g, 1.3, t1), tensor_apply(green_function(g, 1.3, t2), v))
    np.testing.assert_allclose(lhs, tensor_apply(green_function(g, 1.3, t1 + t2), v), rtol=1e-12, atol=1e-14)


def test_green_at_zero_time_is_identity():
    g = FrictionTensor(2.0, 5.0, [0.0, 0.6, 0.8])
    v = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(tensor_apply(green_function(g, 1.0, 0.0), v), v)


def test_isotropic_tensor_is_scalar():
    g = FrictionTensor(3.0, 3.0, [0.0, 0.0, 1.0])
    v = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(tensor_apply(g, v), 3.0 * v, rtol=1e-15)
    np.testing.assert_allclose(tensor_apply(tensor_power(g, -1), v), v / 3.0, rtol=1e-15)


def test_power_zero_and_square_root_squared():
    g = FrictionTensor(2.0, 7.0, [1.0, 0.0, 0.0])
    v = np.array([1.0, 1.0, 1.0])
    np.testing.assert_array_equal(tensor_apply(tensor_power(g, 0.0), v), v)
    half = tensor_power(g, 0.5)
    np.testing.assert_allclose(tensor_apply(half, tensor_apply(half, v)), [2.0, 7.0, 7.0], rtol=1e-15)


def test_batched_axes_and_eigenvalues():
    rng = np.random.default_rng(3)
    u = rng.standard_normal((50, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = rng.standard_normal((50, 3))
    got = tensor_apply(FrictionTensor(1.5, 0.5, u), v)
    want = np.stack([dense(1.5, 0.5, ui) @ vi for ui, vi in zip(u, v)])
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)


def test_axis_validation():
    with pytest.raises(NonUnitAxis):
        FrictionTensor(1.0, 1.0, [0.0, 0.0, 1.1])
    with pytest.raises(NonUnitAxis):
        decompose([1.0, 0.0, 0.0], [1.0, 1.0])
    # within tolerance the axis is accepted and renormalized
    g = FrictionTensor(1.0, 1.0, [0.0, 0.0, 1.0 + 1e-10])
    assert np.linalg.norm(g.axis) == pytest.approx(1.0, abs=1e-15)


def test_singular_and_negative():
    g = FrictionTensor(0.0, 1.0, [0.0, 0.0, 1.0])
    with pytest.raises(SingularTensor):
        tensor_power(g, -0.5)
    tensor_power(g, 0.5)
    with pytest.raises(ParameterError):
        FrictionTensor(-1.0, 1.0, [0.0, 0.0, 1.0])
    with pytest.raises(ParameterError):
        green_function(FrictionTensor(1.0, 1.0, [0.0, 0.0, 1.0]), 0.0, 0.1)
