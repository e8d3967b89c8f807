"""
Complex 3-vector, 2-spinor and Pauli-matrix algebra

All spinors are stored in the standard z basis. Spinors for other quantization
axes are obtained by rotation (see `axis_basis`), never by re-deriving matrices.
"""

from typing import Dict, Tuple

import numpy as np
from numpy.typing import NDArray

from .config import UNIT_TOL
from .exceptions import PreconditionError, UndefinedDirectionError

Vec3 = NDArray[np.float64]
CVec3 = NDArray[np.complex128]
Spinor2 = NDArray[np.complex128]
Mat2c = NDArray[np.complex128]

IDENTITY2 = np.eye(2, dtype=complex)

# PAULI[k] is sigma^k, k = x, y, z
PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

AXES = ("x", "y", "z")

# (theta, phi) of each quantization axis on the Bloch sphere
AXIS_ANGLES: Dict[str, Tuple[float, float]] = {
    "x": (np.pi / 2, 0.0),
    "y": (np.pi / 2, np.pi / 2),
    "z": (0.0, 0.0),
}

# Phase applied to the "down" spinor so that (|0> + |1>)/sqrt(2) points along
# +z for alpha = x, y and along +x for alpha = z
AXIS_DOWN_PHASE: Dict[str, complex] = {"x": -1.0, "y": -1.0, "z": 1.0}


def as_vec3(v) -> Vec3:
    arr = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"Non-finite vector: {arr}")
    return arr


def as_cvec3(v) -> CVec3:
    arr = np.asarray(v, dtype=complex).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"Non-finite complex vector: {arr}")
    return arr


def unit(v) -> Vec3:
    """Return v / |v|; raises UndefinedDirectionError for the zero vector."""
    arr = as_vec3(v)
    norm = np.linalg.norm(arr)
    if norm == 0.0:
        raise UndefinedDirectionError("Cannot normalize a zero vector")
    return arr / norm


def check_unit_spinor(s: Spinor2, name: str = "spinor") -> Spinor2:
    arr = np.asarray(s, dtype=complex).reshape(2)
    deviation = abs(np.vdot(arr, arr).real - 1.0)
    if deviation > UNIT_TOL:
        raise PreconditionError(f"{name} is not normalized (norm deviation {deviation:.3e})")
    return arr


def pauli_expectation(a: Spinor2, b: Spinor2) -> CVec3:
    """
    Matrix element <a|sigma|b>, componentwise.

    Args:
        a: Bra spinor (unit norm)
        b: Ket spinor (unit norm)

    Returns:
        Complex 3-vector (<a|sigma_x|b>, <a|sigma_y|b>, <a|sigma_z|b>)
    """
    a = check_unit_spinor(a, "a")
    b = check_unit_spinor(b, "b")
    return np.einsum("i,kij,j->k", a.conj(), PAULI, b)


def cross_c(u: CVec3, v: CVec3) -> CVec3:
    """Componentwise complex cross product (no conjugation)."""
    return np.cross(as_cvec3(u), as_cvec3(v))


def sigma_dot(v) -> Mat2c:
    """The 2x2 matrix sigma . v for a real or complex 3-vector."""
    return np.einsum("k,kij->ij", np.asarray(v, dtype=complex).reshape(3), PAULI)


def spinor_pair(theta: float, phi: float) -> Tuple[Spinor2, Spinor2]:
    """Up/down spinors along the axis (theta, phi), half-angle convention."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    phase = np.exp(1j * phi)
    up = np.array([c, phase * s], dtype=complex)
    down = np.array([-s, phase * c], dtype=complex)
    return up, down


def rotation_matrix(beta: Tuple[float, float], alpha: Tuple[float, float]) -> Mat2c:
    """
    Rotation R^beta with chi^beta_nu = R_{nu0} chi^alpha_0 + R_{nu1} chi^alpha_1.

    Args:
        beta: (theta', phi') of the target axis
        alpha: (theta, phi) of the source axis

    Returns:
        Unitary 2x2 matrix, R[nu, mu] = <chi^alpha_mu|chi^beta_nu>
    """
    tb, pb = beta
    ta, pa = alpha
    cb, sb = np.cos(tb / 2), np.sin(tb / 2)
    ca, sa = np.cos(ta / 2), np.sin(ta / 2)
    e = np.exp(1j * (pb - pa))
    return np.array(
        [
            [cb * ca + e * sb * sa, -cb * sa + e * sb * ca],
            [-sb * ca + e * cb * sa, sb * sa + e * cb * ca],
        ],
        dtype=complex,
    )


def axis_basis(alpha: str) -> Tuple[Spinor2, Spinor2]:
    """Basis spinors (chi^alpha_0, chi^alpha_1) in the z basis."""
    if alpha not in AXIS_ANGLES:
        raise PreconditionError(f"Unknown quantization axis: {alpha}")
    rot = rotation_matrix(AXIS_ANGLES[alpha], AXIS_ANGLES["z"])
    # z-basis spinors are the unit columns, so chi^alpha_nu is row nu of R
    return rot[0].copy(), AXIS_DOWN_PHASE[alpha] * rot[1]

