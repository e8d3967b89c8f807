import numpy as np
import pytest

from conftest import random_unit
from src.exceptions import PreconditionError, UndefinedDirectionError
from src.spin_algebra import (
    AXES,
    PAULI,
    axis_basis,
    cross_c,
    pauli_expectation,
    rotation_matrix,
    sigma_dot,
    spinor_pair,
    unit,
)


def _max_abs_difference(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _random_spinor(rng):
    s = rng.normal(size=2) + 1j * rng.normal(size=2)
    return s / np.linalg.norm(s)


def _random_angles(rng):
    return (rng.uniform(0.0, np.pi), rng.uniform(0.0, 2.0 * np.pi))


def test_pauli_expectation_basis_states():
    up = np.array([1.0, 0.0], dtype=complex)
    down = np.array([0.0, 1.0], dtype=complex)
    assert np.allclose(pauli_expectation(up, up), [0.0, 0.0, 1.0], atol=1e-15)
    # <up|sigma|down> and its Hermitian partner
    assert np.allclose(pauli_expectation(up, down), [1.0, -1j, 0.0], atol=1e-15)
    assert np.allclose(pauli_expectation(down, up), [1.0, 1j, 0.0], atol=1e-15)


def test_pauli_expectation_matches_matrix_contraction(rng):
    for _ in range(20):
        a, b = _random_spinor(rng), _random_spinor(rng)
        expected = np.array([a.conj() @ PAULI[k] @ b for k in range(3)])
        assert np.allclose(pauli_expectation(a, b), expected, atol=1e-12)
        assert np.allclose(pauli_expectation(a, b), np.conj(pauli_expectation(b, a)), atol=1e-12)


def test_pauli_expectation_diagonal_is_real_unit_vector(rng):
    for _ in range(20):
        a = _random_spinor(rng)
        value = pauli_expectation(a, a)
        assert np.max(np.abs(value.imag)) < 1e-12
        assert abs(np.linalg.norm(value.real) - 1.0) < 1e-12


def test_pauli_expectation_rejects_non_unit_spinor():
    with pytest.raises(PreconditionError):
        pauli_expectation(np.array([1.0, 1e-5]), np.array([1.0, 0.0]))


def test_cross_c_known_values_and_antisymmetry(rng):
    assert np.allclose(cross_c([1, 0, 0], [0, 1, 0]), [0, 0, 1])
    u = rng.normal(size=3) + 1j * rng.normal(size=3)
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    w = rng.normal(size=3) + 1j * rng.normal(size=3)
    assert np.allclose(cross_c(u, u), 0.0, atol=1e-14)
    assert np.allclose(cross_c(u, v), -cross_c(v, u), atol=1e-14)
    assert np.allclose(cross_c(u + 2j * w, v), cross_c(u, v) + 2j * cross_c(w, v), atol=1e-14)


def test_product_state_cross_has_unit_norm():
    c = np.array([1.0, -1j, 0.0]) / np.sqrt(2.0)
    cross = cross_c(c.conj(), c)
    assert abs(np.vdot(cross, cross).real - 1.0) < 1e-12


def test_rotation_identity_and_unitarity(rng):
    for _ in range(20):
        alpha, beta = _random_angles(rng), _random_angles(rng)
        assert _max_abs_difference(rotation_matrix(alpha, alpha), np.eye(2)) < 1e-12
        r = rotation_matrix(beta, alpha)
        assert _max_abs_difference(r @ r.conj().T, np.eye(2)) < 1e-12


def test_rotation_reproduces_target_spinors(rng):
    for _ in range(20):
        alpha, beta = _random_angles(rng), _random_angles(rng)
        r = rotation_matrix(beta, alpha)
        source = spinor_pair(*alpha)
        for nu, target in enumerate(spinor_pair(*beta)):
            assert np.allclose(r[nu, 0] * source[0] + r[nu, 1] * source[1], target, atol=1e-12)


def test_rotation_composition_exact(rng):
    for _ in range(20):
        alpha, beta, gamma = _random_angles(rng), _random_angles(rng), _random_angles(rng)
        composed = rotation_matrix(gamma, beta) @ rotation_matrix(beta, alpha)
        assert _max_abs_difference(composed, rotation_matrix(gamma, alpha)) < 1e-12


@pytest.mark.parametrize("alpha", AXES)
def test_axis_basis_is_orthonormal_eigenbasis(alpha):
    up, down = axis_basis(alpha)
    axis = np.eye(3)[AXES.index(alpha)]
    assert abs(np.vdot(up, down)) < 1e-15
    assert np.allclose(sigma_dot(axis) @ up, up, atol=1e-15)
    assert np.allclose(sigma_dot(axis) @ down, -down, atol=1e-15)


def test_unit_rejects_zero_vector(rng):
    assert abs(np.linalg.norm(unit(random_unit(rng) * 3.0)) - 1.0) < 1e-15
    with pytest.raises(UndefinedDirectionError):
        unit([0.0, 0.0, 0.0])
