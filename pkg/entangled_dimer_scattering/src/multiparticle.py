"""
Two-fermion entangled probes in a periodic box

Basis functions a / b / c, detector out-states, their decomposition into the
xi = 0 basis, and the two-body potential matrix element, both assembled from
pair form factors and by brute-force contraction on a toy lattice.

Spin axes are (theta, phi) pairs; spinors follow `spinor_pair`, and every
rotation R^beta_{nu mu} = <chi^alpha_mu|chi^beta_nu> relates them exactly.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import NEUTRON_MASS
from .exceptions import ContractViolation, DegenerateBasisError, PreconditionError
from .spin_algebra import as_vec3, rotation_matrix, spinor_pair

logger = logging.getLogger(__name__)

Axis = Tuple[float, float]
PairPotential = Callable[[np.ndarray, np.ndarray], np.ndarray]
SinglePotential = Callable[[np.ndarray], np.ndarray]

Z_AXIS: Axis = (0.0, 0.0)
MAX_LATTICE_SIDE = 8
SYMMETRY_TOL = 1e-12
ON_SHELL_TOL = 1e-9


class BasisTag(str, Enum):
    A = "a"
    B = "b"
    C = "c"


class TwoFermionPoint(NamedTuple):
    r_A: np.ndarray
    r_B: np.ndarray
    sigma_A: int
    sigma_B: int


@dataclass(frozen=True)
class BasisKind:
    tag: BasisTag
    k_A: Tuple[float, float, float]
    k_B: Tuple[float, float, float]
    xi: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    nu: Optional[int] = None
    alpha: Axis = Z_AXIS

    def __post_init__(self):
        object.__setattr__(self, "tag", BasisTag(self.tag))
        if self.tag is BasisTag.C and self.nu not in (0, 1):
            raise PreconditionError("c basis functions need nu in {0, 1}")


@dataclass(frozen=True)
class DetectorState:
    """Outgoing pair counted by two spin-resolved detectors"""
    k_A: Tuple[float, float, float]
    k_B: Tuple[float, float, float]
    beta: Axis
    gamma: Axis
    nu: int
    nu_prime: int


@dataclass(frozen=True)
class PairInState:
    """Psi_in = 1/2 sum_{kA,kB} g~(kA) g~(kB) a^xi_{kA kB} over a small set of box modes"""
    modes: Tuple[Tuple[float, float, float], ...]
    amplitudes: Tuple[complex, ...]
    xi: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    alpha: Axis = Z_AXIS

    def __post_init__(self):
        if len(self.modes) != len(self.amplitudes) or not self.modes:
            raise PreconditionError("Each mode needs exactly one amplitude")


@dataclass(frozen=True)
class ToyLattice:
    """Periodic n^3 lattice of side L; modes 2 pi m / L are exactly orthogonal on it"""
    n: int
    length: float

    def __post_init__(self):
        if not 2 <= self.n <= MAX_LATTICE_SIDE:
            raise PreconditionError(f"Lattice side must be in [2, {MAX_LATTICE_SIDE}], got {self.n}")
        if not self.length > 0.0:
            raise PreconditionError("Box length must be positive")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    def positions(self) -> np.ndarray:
        idx = np.arange(self.n)
        grid = np.stack(np.meshgrid(idx, idx, idx, indexing="ij"), axis=-1).reshape(-1, 3)
        return self.spacing * grid

    def momentum(self, m) -> np.ndarray:
        return 2.0 * np.pi * np.asarray(m, dtype=float) / self.length


def mode_amplitude(g_value: complex, box_length: float) -> complex:
    """g~ = (2 pi / L)^{3/2} g for a box mode."""
    return (2.0 * np.pi / box_length) ** 1.5 * g_value


class _Term(NamedTuple):
    coefficient: complex
    k_A: np.ndarray
    k_B: np.ndarray
    spin: np.ndarray  # 2x2 over (sigma_A, sigma_B)


def _same(k1: np.ndarray, k2: np.ndarray) -> bool:
    return bool(np.allclose(k1, k2, rtol=0.0, atol=1e-14))


def d_spin(sign: int, k_A, k_B, xi, alpha: Axis = Z_AXIS) -> np.ndarray:
    """D^{+/-} as a 2x2 matrix over (sigma_A, sigma_B)."""
    up, down = spinor_pair(*alpha)
    half = 0.5 * (as_vec3(k_A) - as_vec3(k_B)) @ as_vec3(xi)
    return np.exp(-1j * half) * np.outer(up, down) + sign * np.exp(1j * half) * np.outer(down, up)


def _basis_terms(kind: BasisKind, box_L: float) -> List[_Term]:
    k_A, k_B, xi = as_vec3(kind.k_A), as_vec3(kind.k_B), as_vec3(kind.xi)
    degenerate = _same(k_A, k_B)
    if kind.tag is BasisTag.A:
        norm = 1.0 / (2.0 * box_L**3 * np.sqrt(2.0 if degenerate else 1.0))
        return [
            _Term(norm, k_A, k_B, d_spin(-1, k_A, k_B, xi, kind.alpha)),
            _Term(norm, k_B, k_A, d_spin(-1, k_B, k_A, xi, kind.alpha)),
        ]
    if degenerate:
        raise DegenerateBasisError(f"{kind.tag.value} basis function vanishes at k_A = k_B")
    if kind.tag is BasisTag.B:
        norm = 1.0 / (2.0 * box_L**3)
        return [
            _Term(norm, k_A, k_B, d_spin(1, k_A, k_B, xi, kind.alpha)),
            _Term(-norm, k_B, k_A, d_spin(1, k_B, k_A, xi, kind.alpha)),
        ]
    spinor = spinor_pair(*kind.alpha)[kind.nu]
    same_spin = np.outer(spinor, spinor)
    norm = 1.0 / (np.sqrt(2.0) * box_L**3)
    return [_Term(norm, k_A, k_B, same_spin), _Term(-norm, k_B, k_A, same_spin)]


def _detector_terms(out: DetectorState, box_L: float) -> List[_Term]:
    k_A, k_B = as_vec3(out.k_A), as_vec3(out.k_B)
    chi_beta = spinor_pair(*out.beta)[out.nu]
    chi_gamma = spinor_pair(*out.gamma)[out.nu_prime]
    norm = 1.0 / (np.sqrt(2.0) * box_L**3)
    return [
        _Term(norm, k_A, k_B, np.outer(chi_beta, chi_gamma)),
        _Term(-norm, k_B, k_A, np.outer(chi_gamma, chi_beta)),
    ]


def _eval_terms(terms: Sequence[_Term], p: TwoFermionPoint) -> complex:
    r_A, r_B = as_vec3(p.r_A), as_vec3(p.r_B)
    return complex(
        sum(
            t.coefficient * np.exp(1j * (t.k_A @ r_A + t.k_B @ r_B)) * t.spin[p.sigma_A, p.sigma_B]
            for t in terms
        )
    )


def _tensor_terms(terms: Sequence[_Term], positions: np.ndarray) -> np.ndarray:
    """Values on the lattice as an array indexed [r_A, sigma_A, r_B, sigma_B]."""
    out = np.zeros((len(positions), 2, len(positions), 2), dtype=complex)
    for t in terms:
        wave_A = np.exp(1j * positions @ t.k_A)
        wave_B = np.exp(1j * positions @ t.k_B)
        out += t.coefficient * np.einsum("a,b,st->asbt", wave_A, wave_B, t.spin)
    return out


def basis_eval(kind: BasisKind, p: TwoFermionPoint, box_L: float) -> complex:
    """Value of a^xi, b^xi or c^nu at one two-particle configuration."""
    if not box_L > 0.0:
        raise PreconditionError("Box length must be positive")
    return _eval_terms(_basis_terms(kind, box_L), p)


def basis_tensor(kind: BasisKind, lattice: ToyLattice) -> np.ndarray:
    return _tensor_terms(_basis_terms(kind, lattice.length), lattice.positions())


def out_state_eval(out: DetectorState, p: TwoFermionPoint, box_L: float) -> complex:
    return _eval_terms(_detector_terms(out, box_L), p)


def out_state_decompose(
    k_A_out, k_B_out, beta: Axis, gamma: Axis, nu: int, nu_prime: int, alpha: Axis = Z_AXIS
) -> Dict[str, complex]:
    """
    Coefficients of a detector state over the xi = 0 basis {a, b, c0, c1}
    built on (k_A_out, k_B_out) in the alpha spin basis.
    """
    if _same(as_vec3(k_A_out), as_vec3(k_B_out)):
        raise DegenerateBasisError("Detector momenta coincide; out-state decomposition undefined")
    r_beta = rotation_matrix(beta, alpha)
    r_gamma = rotation_matrix(gamma, alpha)
    cross_01 = r_beta[nu, 0] * r_gamma[nu_prime, 1]
    cross_10 = r_beta[nu, 1] * r_gamma[nu_prime, 0]
    return {
        "a": complex((cross_01 - cross_10) / np.sqrt(2.0)),
        "b": complex((cross_01 + cross_10) / np.sqrt(2.0)),
        "c0": complex(r_beta[nu, 0] * r_gamma[nu_prime, 0]),
        "c1": complex(r_beta[nu, 1] * r_gamma[nu_prime, 1]),
    }


def reconstruct_out_state(out: DetectorState, p: TwoFermionPoint, box_L: float, alpha: Axis = Z_AXIS) -> complex:
    """Detector state evaluated through its xi = 0 basis expansion."""
    coefficients = out_state_decompose(out.k_A, out.k_B, out.beta, out.gamma, out.nu, out.nu_prime, alpha)
    value = 0.0j
    for label, coefficient in coefficients.items():
        if label == "a":
            kind = BasisKind(BasisTag.A, out.k_A, out.k_B, alpha=alpha)
        elif label == "b":
            kind = BasisKind(BasisTag.B, out.k_A, out.k_B, alpha=alpha)
        else:
            kind = BasisKind(BasisTag.C, out.k_A, out.k_B, nu=int(label[1]), alpha=alpha)
        value += coefficient * basis_eval(kind, p, box_L)
    return complex(value)


def pair_potential_matrix(potential: PairPotential, lattice: ToyLattice) -> np.ndarray:
    """V(r_A, r_B) on all lattice pairs; raises ContractViolation if not exchange-symmetric."""
    positions = lattice.positions()
    values = np.asarray(potential(positions[:, None, :], positions[None, :, :]), dtype=complex)
    values = np.broadcast_to(values, (len(positions), len(positions)))
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.max(np.abs(values - values.T)) > SYMMETRY_TOL * scale:
        raise ContractViolation("Pair potential is not symmetric under r_A <-> r_B")
    return values


def pair_form_factor(potential: PairPotential, q_A, q_B, lattice: ToyLattice) -> complex:
    """V~(q_A, q_B) = sum_{r_A, r_B} h^6 V(r_A, r_B) e^{i (q_A.r_A + q_B.r_B)}"""
    positions = lattice.positions()
    values = pair_potential_matrix(potential, lattice)
    return _pair_form_factor(values, positions, lattice.spacing, q_A, q_B)


def _pair_form_factor(values: np.ndarray, positions: np.ndarray, spacing: float, q_A, q_B) -> complex:
    wave_A = np.exp(1j * positions @ as_vec3(q_A))
    wave_B = np.exp(1j * positions @ as_vec3(q_B))
    return complex(spacing**6 * (wave_A @ values @ wave_B))


def single_form_factor(potential: SinglePotential, q, lattice: ToyLattice) -> complex:
    """v~(q) = sum_r h^3 v(r) e^{i q.r}"""
    positions = lattice.positions()
    values = np.asarray(potential(positions), dtype=complex)
    return complex(lattice.spacing**3 * np.sum(values * np.exp(1j * positions @ as_vec3(q))))


def bracket_amplitude(
    k_A: np.ndarray,
    k_B: np.ndarray,
    in_state: PairInState,
    out: DetectorState,
    form_factor: Callable[[np.ndarray, np.ndarray], complex],
) -> complex:
    """
    V^{nu nu'}_{out, kA kB}: four phase/spinor terms plus the same with
    k_A <-> k_B, each spatial integral supplied by form_factor(q_A, q_B).
    """
    kp_A, kp_B = as_vec3(out.k_A), as_vec3(out.k_B)
    xi = as_vec3(in_state.xi)
    r_beta = rotation_matrix(out.beta, in_state.alpha)
    r_gamma = rotation_matrix(out.gamma, in_state.alpha)
    # <chi^beta_nu|chi^alpha_mu> = conj(R^beta_{nu mu})
    beta_ov = np.conj(r_beta[out.nu])
    gamma_ov = np.conj(r_gamma[out.nu_prime])

    def half(ka: np.ndarray, kb: np.ndarray) -> complex:
        phase = 0.5 * (ka - kb) @ xi
        minus, plus = np.exp(-1j * phase), np.exp(1j * phase)
        direct = form_factor(ka - kp_A, kb - kp_B)
        exchange = form_factor(ka - kp_B, kb - kp_A)
        return (
            direct * minus * beta_ov[0] * gamma_ov[1]
            + exchange * plus * gamma_ov[1] * beta_ov[0]
            - exchange * minus * gamma_ov[0] * beta_ov[1]
            - direct * plus * beta_ov[1] * gamma_ov[0]
        )

    return complex(half(k_A, k_B) + half(k_B, k_A))


def _pair_sum(
    in_state: PairInState,
    out: DetectorState,
    box_L: float,
    form_factor: Callable[[np.ndarray, np.ndarray], complex],
    pair_filter: Optional[Callable[[np.ndarray, np.ndarray], bool]] = None,
) -> complex:
    modes = [as_vec3(k) for k in in_state.modes]
    total = 0.0j
    for k_A, g_A in zip(modes, in_state.amplitudes):
        for k_B, g_B in zip(modes, in_state.amplitudes):
            if pair_filter is not None and not pair_filter(k_A, k_B):
                continue
            delta = 1.0 if _same(k_A, k_B) else 0.0
            weight = g_A * g_B / 2.0 ** (0.5 * (1.0 + delta))
            total += weight * bracket_amplitude(k_A, k_B, in_state, out, form_factor)
    return total / (4.0 * box_L**6)


def two_body_matrix_element(
    potential: PairPotential,
    in_state: PairInState,
    out: DetectorState,
    lattice: ToyLattice,
    pair_filter: Optional[Callable[[np.ndarray, np.ndarray], bool]] = None,
) -> complex:
    """<Psi_out|V|Psi_in> assembled from pair form factors of a symmetric local potential."""
    positions = lattice.positions()
    values = pair_potential_matrix(potential, lattice)

    def form_factor(q_A: np.ndarray, q_B: np.ndarray) -> complex:
        return _pair_form_factor(values, positions, lattice.spacing, q_A, q_B)

    return _pair_sum(in_state, out, lattice.length, form_factor, pair_filter)


def factorized_matrix_element(
    potential: SinglePotential, in_state: PairInState, out: DetectorState, lattice: ToyLattice
) -> complex:
    """Matrix element of V = v(r_A) v(r_B) built from products of single-particle brackets."""

    def form_factor(q_A: np.ndarray, q_B: np.ndarray) -> complex:
        return single_form_factor(potential, q_A, lattice) * single_form_factor(potential, q_B, lattice)

    return _pair_sum(in_state, out, lattice.length, form_factor)


def in_state_tensor(in_state: PairInState, lattice: ToyLattice) -> np.ndarray:
    modes = [as_vec3(k) for k in in_state.modes]
    positions = lattice.positions()
    psi = np.zeros((len(positions), 2, len(positions), 2), dtype=complex)
    for k_A, g_A in zip(modes, in_state.amplitudes):
        for k_B, g_B in zip(modes, in_state.amplitudes):
            kind = BasisKind(BasisTag.A, tuple(k_A), tuple(k_B), in_state.xi, alpha=in_state.alpha)
            psi += 0.5 * g_A * g_B * basis_tensor(kind, lattice)
    return psi


def brute_force_matrix_element(
    potential: PairPotential, in_state: PairInState, out: DetectorState, lattice: ToyLattice
) -> complex:
    """Direct 6-D lattice contraction sum h^6 conj(Psi_out) V Psi_in."""
    values = pair_potential_matrix(potential, lattice)
    psi_in = in_state_tensor(in_state, lattice)
    psi_out = _tensor_terms(_detector_terms(out, lattice.length), lattice.positions())
    return complex(lattice.spacing**6 * np.einsum("asbt,ab,asbt->", psi_out.conj(), values, psi_in))


@dataclass
class TwoFermionCrossSection:
    """
    Pair cross-section on a small mode set:
    C~ sum_{nu nu'} |<Psi_out^{nu nu'}|V|Psi_in>|^2 with
    C~ = m^2 k'_A k'_B / (16 (2 pi)^4 hbar^2 (I_A + I_B)), hbar = 1.
    Only in-state pairs with the outgoing kinetic energy contribute.
    """
    potential: PairPotential
    in_state: PairInState
    k_A_out: Tuple[float, float, float]
    k_B_out: Tuple[float, float, float]
    beta: Axis
    gamma: Axis
    flux_A: float
    flux_B: float
    lattice: ToyLattice

    def prefactor(self) -> float:
        k_a = float(np.linalg.norm(self.k_A_out))
        k_b = float(np.linalg.norm(self.k_B_out))
        return NEUTRON_MASS**2 * k_a * k_b / (16.0 * (2.0 * np.pi) ** 4 * (self.flux_A + self.flux_B))

    def _energy_conserving(self, k_A: np.ndarray, k_B: np.ndarray) -> bool:
        target = float(np.dot(self.k_A_out, self.k_A_out) + np.dot(self.k_B_out, self.k_B_out))
        return abs(k_A @ k_A + k_B @ k_B - target) <= ON_SHELL_TOL * max(target, 1.0)

    def matrix_elements(self) -> Dict[Tuple[int, int], complex]:
        elements = {}
        for nu in (0, 1):
            for nu_prime in (0, 1):
                out = DetectorState(self.k_A_out, self.k_B_out, self.beta, self.gamma, nu, nu_prime)
                elements[(nu, nu_prime)] = two_body_matrix_element(
                    self.potential, self.in_state, out, self.lattice, self._energy_conserving
                )
        return elements

    def evaluate(self) -> float:
        elements = self.matrix_elements()
        return self.prefactor() * float(sum(abs(m) ** 2 for m in elements.values()))
