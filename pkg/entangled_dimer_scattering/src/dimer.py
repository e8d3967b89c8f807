"""
Two-site Heisenberg dimer: eigensystem, triplet coefficient vectors, purity,
Boltzmann weights and the transition ensembles used by the scattering kernels

Product basis ordering is |s0 s1> with index 2*s0 + s1 and up = 0, so site 0
is the first tensor factor.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.linalg import eigh, expm

from .config import K_B, UNIT_TOL
from .exceptions import ConfigurationError, PreconditionError
from .spin_algebra import IDENTITY2, PAULI, CVec3, Vec3, as_cvec3, as_vec3

logger = logging.getLogger(__name__)

Vec4c = np.ndarray

# SITE_SPIN[j, a] = s^a_j as a 4x4 matrix
SITE_SPIN = np.array(
    [
        [np.kron(0.5 * PAULI[a], IDENTITY2) for a in range(3)],
        [np.kron(IDENTITY2, 0.5 * PAULI[a]) for a in range(3)],
    ]
)

_SQRT_HALF = 1.0 / np.sqrt(2.0)

SINGLET = _SQRT_HALF * np.array([0, 1, -1, 0], dtype=complex)

# lambda_x, lambda_y, lambda_z; each equals (-1)^j 2 s^a_j lambda_s
TRIPLET_BASIS = np.array(
    [
        -_SQRT_HALF * np.array([1, 0, 0, -1], dtype=complex),
        1j * _SQRT_HALF * np.array([1, 0, 0, 1], dtype=complex),
        _SQRT_HALF * np.array([0, 1, 1, 0], dtype=complex),
    ]
)


class Transition(str, Enum):
    """Dimer level transition driven by the scattering event"""
    S_T = "s->t"
    T_S = "t->s"
    T_T = "t->t"

    @property
    def zeta(self) -> int:
        return {"s->t": 1, "t->s": -1, "t->t": 0}[self.value]

    @property
    def is_diagonal(self) -> bool:
        """delta_{tau tau'}: initial and final manifolds coincide"""
        return self is Transition.T_T

    @property
    def label(self) -> str:
        """Column-safe tag, e.g. 't_s'"""
        return self.value.replace("->", "_")


class TargetKind(str, Enum):
    THERMAL = "thermal"
    SINGLET = "singlet"
    TRIPLET = "triplet"


class DimerLevel(NamedTuple):
    label: str
    vector: Vec4c
    energy: float


@dataclass(frozen=True)
class TargetState:
    """Dimer target: geometry, exchange and the initial state"""
    d: Tuple[float, float, float]
    J: float
    kind: TargetKind = TargetKind.THERMAL
    temperature: Optional[float] = None
    c: Optional[Tuple[complex, complex, complex]] = None
    _d_vec: Vec3 = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = as_vec3(self.d)
        if np.linalg.norm(d) <= 0.0:
            raise PreconditionError("Dimer vector d must be nonzero")
        kind = TargetKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "d", tuple(float(x) for x in d))
        object.__setattr__(self, "_d_vec", d)
        if kind is TargetKind.THERMAL:
            if self.temperature is None or self.temperature < 0.0:
                raise PreconditionError(f"Thermal target needs T >= 0, got {self.temperature}")
        if kind is TargetKind.TRIPLET:
            if self.c is None:
                raise ConfigurationError("Triplet target requires c", [("target.c", "missing")])
            c = check_unit_c(self.c)
            object.__setattr__(self, "c", tuple(complex(x) for x in c))

    @property
    def d_vec(self) -> Vec3:
        return self._d_vec.copy()

    @property
    def c_vec(self) -> Optional[CVec3]:
        return None if self.c is None else np.array(self.c, dtype=complex)

    def site_position(self, j: int) -> Vec3:
        """r_j = (-1)^j d / 2"""
        return (-1) ** j * 0.5 * self._d_vec

    def to_dict(self) -> dict:
        c = None
        if self.c is not None:
            c = [[z.real, z.imag] for z in canonicalize_c(self.c_vec)]
        return {
            "d": list(self.d),
            "J": self.J,
            "kind": self.kind.value,
            "temperature": self.temperature,
            "c": c,
        }


def check_unit_c(c) -> CVec3:
    arr = as_cvec3(c)
    deviation = abs(np.vdot(arr, arr).real - 1.0)
    if deviation > UNIT_TOL:
        raise PreconditionError(f"Triplet coefficient vector c is not normalized (deviation {deviation:.3e})")
    return arr


def dimer_hamiltonian(J: float) -> np.ndarray:
    """H_t = -4J s_0 . s_1 as a 4x4 matrix."""
    return -4.0 * J * sum(SITE_SPIN[0, a] @ SITE_SPIN[1, a] for a in range(3))


def dimer_eigensystem(J: float) -> List[DimerLevel]:
    """Singlet (E = 3J) followed by the triplet lambda_x, lambda_y, lambda_z (E = -J)."""
    levels = [DimerLevel("s", SINGLET.copy(), 3.0 * J)]
    for label, vec in zip(("x", "y", "z"), TRIPLET_BASIS):
        levels.append(DimerLevel(label, vec.copy(), -J))
    return levels


def triplet_state(c) -> Vec4c:
    """|lambda_t> = sum_a c_a |lambda_a>"""
    return check_unit_c(c) @ TRIPLET_BASIS


def purity(c) -> float:
    """|c* x c|^2: 0 for maximally entangled (real c), 1 for product states."""
    arr = check_unit_c(c)
    cross = np.cross(arr.conj(), arr)
    return float(np.vdot(cross, cross).real)


def canonicalize_c(c, tol: float = 1e-14) -> CVec3:
    """Remove the global phase: first nonzero component made real positive."""
    arr = as_cvec3(c)
    for z in arr:
        if abs(z) > tol:
            return arr * (abs(z) / z)
    return arr


def site_spin_expectations(c) -> np.ndarray:
    """<lambda_c|s^a_j|lambda_c> as a real (2, 3) array indexed [j, a]."""
    vec = triplet_state(c)
    values = np.einsum("i,jaik,k->ja", vec.conj(), SITE_SPIN, vec)
    return values.real


def site_matrix_elements(bra: Vec4c, ket: Vec4c) -> np.ndarray:
    """M[j, a] = <bra|s^a_j|ket> as a complex (2, 3) array."""
    return np.einsum("i,jaik,k->ja", np.asarray(bra).conj(), SITE_SPIN, np.asarray(ket))


def thermal_weights(J: float, T: float) -> Tuple[float, float]:
    """
    Boltzmann weights (p_s, p_t) with p_s + 3 p_t = 1.

    T = 0 is the limit: the triplet for J > 0, the singlet for J < 0 and equal
    weights for J = 0.
    """
    if T < 0.0:
        raise PreconditionError(f"Temperature must be non-negative, got {T}")
    if T == 0.0:
        if J > 0.0:
            return 0.0, 1.0 / 3.0
        if J < 0.0:
            return 1.0, 0.0
        return 0.25, 0.25
    beta = 1.0 / (K_B * T)
    # shift by the ground energy to keep exponents non-positive
    e_s, e_t = 3.0 * J, -J
    ground = min(e_s, e_t)
    w_s = np.exp(-beta * (e_s - ground))
    w_t = np.exp(-beta * (e_t - ground))
    z = w_s + 3.0 * w_t
    return float(w_s / z), float(w_t / z)


def gibbs_state(J: float, T: float) -> np.ndarray:
    """Dense 4x4 thermal density matrix exp(-H/k_B T)/Z (ground-manifold mixture at T = 0)."""
    hamiltonian = dimer_hamiltonian(J)
    if T == 0.0:
        energies, vectors = eigh(hamiltonian)
        ground = np.isclose(energies, energies[0], atol=1e-12 * max(1.0, abs(J)))
        proj = vectors[:, ground] @ vectors[:, ground].conj().T
        return proj / np.trace(proj).real
    ground = min(3.0 * J, -J)
    rho = expm(-(hamiltonian - ground * np.eye(4)) / (K_B * T))
    return rho / np.trace(rho).real


def initial_ensemble(target: TargetState, transition: Transition) -> List[Tuple[float, Vec4c]]:
    """
    Weighted initial dimer states feeding one transition channel.

    Thermal targets weight the singlet by p_s and each triplet basis state by
    p_t. Pure targets put weight 1 on their own state; a channel whose initial
    manifold the target does not occupy gets an empty ensemble.
    """
    if target.kind is TargetKind.THERMAL:
        p_s, p_t = thermal_weights(target.J, target.temperature)
        if transition is Transition.S_T:
            return [(p_s, SINGLET)] if p_s > 0.0 else []
        return [(p_t, vec) for vec in TRIPLET_BASIS] if p_t > 0.0 else []
    if target.kind is TargetKind.SINGLET:
        return [(1.0, SINGLET)] if transition is Transition.S_T else []
    if transition is Transition.S_T:
        return []
    return [(1.0, triplet_state(target.c_vec))]


def final_basis(transition: Transition) -> np.ndarray:
    """Final dimer states summed over in a channel, as rows."""
    if transition is Transition.T_S:
        return SINGLET[None, :]
    return TRIPLET_BASIS
