"""
Gauss-Legendre rules for the packet integrals: a radial window around |k0|
and a spherical cap around the k0 direction
"""

from typing import NamedTuple, Tuple

import numpy as np
from scipy.special import roots_legendre

from .spin_algebra import Vec3, unit


class CapRule(NamedTuple):
    directions: np.ndarray  # (N, 3) unit vectors
    weights: np.ndarray  # (N,) solid-angle weights


class RadialRule(NamedTuple):
    nodes: np.ndarray
    weights: np.ndarray


def gauss_legendre(n: int, lower: float, upper: float) -> Tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes and weights on [lower, upper]."""
    x, w = roots_legendre(n)
    half = 0.5 * (upper - lower)
    return lower + half * (x + 1.0), half * w


def orthonormal_frame(axis) -> Tuple[Vec3, Vec3, Vec3]:
    """Right-handed (e1, e2, axis) with axis normalized."""
    a = unit(axis)
    trial = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(a, trial)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    return e1, e2, a


def cap_rule(axis, half_angle: float, n_polar: int, n_azimuth: int) -> CapRule:
    """
    Product rule on the cap of directions within half_angle of axis:
    Gauss-Legendre in cos(theta) times the periodic trapezoid rule in the
    azimuth, which is exact for azimuthal harmonics below n_azimuth.
    """
    half_angle = min(float(half_angle), np.pi)
    cos_nodes, cos_weights = gauss_legendre(n_polar, np.cos(half_angle), 1.0)
    phi_nodes = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    phi_weights = np.full(n_azimuth, 2.0 * np.pi / n_azimuth)
    e1, e2, a = orthonormal_frame(axis)

    cos_t = np.repeat(cos_nodes, n_azimuth)
    sin_t = np.sqrt(np.clip(1.0 - cos_t**2, 0.0, None))
    phi = np.tile(phi_nodes, n_polar)
    directions = (
        (sin_t * np.cos(phi))[:, None] * e1
        + (sin_t * np.sin(phi))[:, None] * e2
        + cos_t[:, None] * a
    )
    weights = np.outer(cos_weights, phi_weights).ravel()
    return CapRule(directions, weights)


def radial_rule(centre: float, half_width: float, n: int) -> RadialRule:
    """Gauss-Legendre on [max(0, centre - half_width), centre + half_width]."""
    lower = max(0.0, centre - half_width)
    nodes, weights = gauss_legendre(n, lower, centre + half_width)
    return RadialRule(nodes, weights)
