import numpy as np
import pytest

from conftest import random_unit
from src.quadrature import cap_rule, gauss_legendre, orthonormal_frame, radial_rule


def test_gauss_legendre_integrates_polynomials():
    nodes, weights = gauss_legendre(4, 0.0, 2.0)
    assert weights @ nodes**3 == pytest.approx(4.0)
    assert weights @ nodes**7 == pytest.approx(2.0**8 / 8.0)


def test_orthonormal_frame_is_right_handed(rng):
    for _ in range(10):
        e1, e2, a = orthonormal_frame(3.0 * random_unit(rng))
        frame = np.stack([e1, e2, a])
        assert np.allclose(frame @ frame.T, np.eye(3), atol=1e-14)
        assert np.allclose(np.cross(e1, e2), a, atol=1e-14)


def test_cap_rule_solid_angle(rng):
    axis = random_unit(rng)
    cap = cap_rule(axis, 0.3, 6, 8)
    assert cap.weights.sum() == pytest.approx(2.0 * np.pi * (1.0 - np.cos(0.3)))
    assert np.allclose(np.linalg.norm(cap.directions, axis=1), 1.0)
    assert np.all(cap.directions @ axis >= np.cos(0.3) - 1e-12)


def test_full_sphere_rule_integrates_quadrupole():
    sphere = cap_rule([0.0, 0.0, 1.0], np.pi, 8, 8)
    assert sphere.weights.sum() == pytest.approx(4.0 * np.pi)
    # integral of z^2 over the sphere is 4 pi / 3
    assert sphere.weights @ sphere.directions[:, 2] ** 2 == pytest.approx(4.0 * np.pi / 3.0)
    assert abs(sphere.weights @ sphere.directions[:, 0]) < 1e-12


def test_radial_rule_clips_at_origin():
    rule = radial_rule(1.0, 3.0, 6)
    assert np.all(rule.nodes > 0.0)
    assert rule.weights.sum() == pytest.approx(4.0)
