"""
Dense-matrix reference for the closed forms

Operators act on neutron spin (x) dimer, an 8-dimensional space with the
neutron as the first tensor factor.
"""

import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .dimer import SINGLET, SITE_SPIN, TargetState, final_basis, initial_ensemble, triplet_state
from .exceptions import ContractViolation, UndefinedPolarizationError
from .probe import rho_pair, spin_echo_sigma
from .response import Channel
from .spin_algebra import IDENTITY2, PAULI, as_vec3, axis_basis, unit

logger = logging.getLogger(__name__)

DIMENSION = 8
DENOMINATOR_FLOOR = 1e-14


class OracleValue(NamedTuple):
    value: complex
    empty_channel: bool


def q_perp_operator(kappa, d, site: int, include_momentum_term: bool = False) -> np.ndarray:
    """
    sigma . Q_perp^j(kappa) = e^{i kappa.r_j} sum_ab sigma_a P_ab s^b_j as an 8x8 matrix,
    with P = 1 - k k^T and r_j = (-1)^j d/2.

    The electron momentum term is not represented; motionless spins only.
    """
    if include_momentum_term:
        raise ContractViolation("The electron momentum term is not supported for a motionless dimer")
    if site not in (0, 1):
        raise ContractViolation(f"Dimer site must be 0 or 1, got {site}")
    kappa = as_vec3(kappa)
    k = unit(kappa)
    proj = np.eye(3) - np.outer(k, k)
    r_j = (-1) ** site * 0.5 * as_vec3(d)
    op = np.zeros((DIMENSION, DIMENSION), dtype=complex)
    for a in range(3):
        for b in range(3):
            if proj[a, b] != 0.0:
                op += proj[a, b] * np.kron(PAULI[a], SITE_SPIN[site, b])
    return np.exp(1j * (kappa @ r_j)) * op


def total_q_perp(kappa, d) -> np.ndarray:
    return q_perp_operator(kappa, d, 0) + q_perp_operator(kappa, d, 1)


def _density_matrices(target: TargetState, channel: Channel) -> Tuple[np.ndarray, np.ndarray]:
    rho_init = np.zeros((4, 4), dtype=complex)
    for weight, vec in initial_ensemble(target, channel.transition):
        rho_init += weight * np.outer(vec, vec.conj())
    finals = final_basis(channel.transition)
    p_final = finals.T @ finals.conj()
    return rho_init, p_final


def _kernel_trace(kappa1, kappa2, theta1, theta2, target, channel, neutron_op, alpha) -> complex:
    rho_init, p_final = _density_matrices(target, channel)
    d = target.d_vec
    left = total_q_perp(kappa1, d).conj().T
    right = total_q_perp(kappa2, d)
    middle = np.kron(neutron_op, p_final)
    state = np.kron(rho_pair(theta1, theta2, alpha), rho_init)
    return complex(np.trace(state @ left @ middle @ right))


def oracle_response(
    kappa1, kappa2, theta1: float, theta2: float, target: TargetState, channel: Channel, alpha: str = "x"
) -> OracleValue:
    """Tr[(rho_pair (x) rho_init) O(k1)^dagger (1 (x) P_final) O(k2)] by dense algebra."""
    empty = not initial_ensemble(target, channel.transition)
    if empty:
        logger.debug("Empty channel %s for %s target", channel.transition.value, target.kind.value)
        return OracleValue(0.0j, True)
    value = _kernel_trace(kappa1, kappa2, theta1, theta2, target, channel, IDENTITY2, alpha)
    return OracleValue(value, False)


def oracle_polarization(
    kappa1,
    kappa2,
    theta1: float,
    theta2: float,
    target: TargetState,
    channel: Channel,
    alpha: str = "x",
    echo_phi: Optional[float] = None,
) -> Tuple[np.ndarray, complex]:
    """
    Polarization numerator (kernel with sigma, or sigma_se when echo_phi is
    given, between the operators) and the response denominator.
    """
    denominator = oracle_response(kappa1, kappa2, theta1, theta2, target, channel, alpha).value
    if abs(denominator) < DENOMINATOR_FLOOR:
        raise UndefinedPolarizationError("Oracle response vanishes; polarization undefined")
    sigmas = PAULI if echo_phi is None else spin_echo_sigma(echo_phi, alpha)
    numerator = np.array(
        [_kernel_trace(kappa1, kappa2, theta1, theta2, target, channel, s, alpha) for s in sigmas]
    )
    return numerator, denominator


def oracle_erasure_overlap(c, kappa0, d, alpha: str = "x") -> complex:
    """
    <chi^sc_1|chi^sc_0> composed directly for a t->s event when each path
    packet resolves one site: packet nu scatters off site nu only. Each
    scattered spinor is divided by the site amplitude (-1)^nu / 2.
    """
    initial = np.kron(IDENTITY2, triplet_state(c)[:, None])
    final = np.kron(IDENTITY2, SINGLET.conj()[None, :])
    scattered = []
    for site, spinor in enumerate(axis_basis(alpha)):
        op = final @ q_perp_operator(kappa0, d, site) @ initial
        scattered.append(2.0 * (-1) ** site * (op @ spinor))
    return complex(np.vdot(scattered[1], scattered[0]))
