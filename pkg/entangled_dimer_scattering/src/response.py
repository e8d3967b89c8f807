"""
Closed-form dimer response kernels, their plane-wave limit and the
which-path erasure overlap
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .dimer import TargetKind, TargetState, Transition, check_unit_c, thermal_weights
from .exceptions import ConfigurationError, ContractViolation, UndefinedPolarizationError
from .probe import chi_spinor, effective_axis, spin_matrix_element
from .spin_algebra import CVec3, Vec3, as_vec3, axis_basis, pauli_expectation, unit

logger = logging.getLogger(__name__)

ON_SHELL_TOL = 1e-9

# |lambda'|^2 floor below which a plane-wave polarization is undefined
POLARIZATION_FLOOR = 1e-14


class Regime(str, Enum):
    """Which coefficient row applies: a pure state with c, or the thermal mixture"""
    PURE_T0 = "pure-T0"
    THERMAL_T0 = "thermal-T0"
    THERMAL_TPOS = "thermal-Tpos"

    @property
    def is_thermal(self) -> bool:
        return self is not Regime.PURE_T0


@dataclass(frozen=True)
class Channel:
    transition: Transition
    regime: Regime

    @property
    def zeta(self) -> int:
        return self.transition.zeta

    @classmethod
    def for_target(cls, target: TargetState, transition: Transition) -> "Channel":
        if target.kind is TargetKind.THERMAL:
            regime = Regime.THERMAL_T0 if target.temperature == 0.0 else Regime.THERMAL_TPOS
        else:
            regime = Regime.PURE_T0
        return cls(Transition(transition), regime)


class ResponseParts(NamedTuple):
    A: complex
    B: CVec3
    F: float
    h: complex


def channel_weight(target: TargetState, transition: Transition) -> float:
    """Population feeding the channel: p_s or p_t for thermal targets, 0/1 for pure ones."""
    if target.kind is TargetKind.THERMAL:
        p_s, p_t = thermal_weights(target.J, target.temperature)
        return p_s if transition is Transition.S_T else p_t
    starts_in_singlet = transition is Transition.S_T
    return 1.0 if starts_in_singlet == (target.kind is TargetKind.SINGLET) else 0.0


def c_perp(c, ktilde) -> CVec3:
    """c - k (k . c): component of c transverse to the unit vector ktilde."""
    k = unit(ktilde)
    c = np.asarray(c, dtype=complex)
    return c - k * (k @ c)


def _st_row(kt1: Vec3, kt2: Vec3) -> Tuple[complex, CVec3]:
    dot = kt1 @ kt2
    return complex(1.0 + dot * dot), (dot * np.cross(kt1, kt2)).astype(complex)


def coefficient_row(channel: Channel, kt1, kt2, c=None) -> Tuple[complex, CVec3]:
    """
    Coefficients (A, B) of the factorized response for one channel.

    Pure rows (c given) follow the zero-temperature entries; thermal rows are
    the triplet-summed entries, to be weighted by p_s or p_t.
    """
    kt1 = unit(kt1)
    kt2 = unit(kt2)
    a_st, b_st = _st_row(kt1, kt2)
    transition = channel.transition

    if transition is Transition.S_T:
        return a_st, b_st
    if channel.regime.is_thermal:
        if transition is Transition.T_S:
            return a_st, b_st
        return 2.0 * a_st, 2.0 * b_st

    if c is None:
        raise ConfigurationError(
            f"Channel {transition.value} in regime {channel.regime.value} requires c",
            [("target.c", "missing")],
        )
    c = check_unit_c(c)
    c1 = c_perp(c, kt1)
    c2 = c_perp(c, kt2)
    a_ts = complex(c1.conj() @ c2)
    b_ts = np.cross(c1.conj(), c2)
    if transition is Transition.T_S:
        return a_ts, b_ts
    return a_st - np.conj(a_ts), b_st - b_ts.conj()


def structure_factor(kappa1, kappa2, d, transition: Transition) -> float:
    """F = 2cos((k1 - k2).d/2) - (-1)^delta 2cos((k1 + k2).d/2)"""
    kappa1, kappa2, d = as_vec3(kappa1), as_vec3(kappa2), as_vec3(d)
    sign = -1.0 if transition.is_diagonal else 1.0
    return float(
        2.0 * np.cos(0.5 * (kappa1 - kappa2) @ d) - sign * 2.0 * np.cos(0.5 * (kappa1 + kappa2) @ d)
    )


def probe_sigma_element(theta1: float, theta2: float, alpha: str = "x") -> CVec3:
    """<chi_{k1}|sigma|chi_{k2}> for any quantization axis."""
    if alpha == "x":
        return spin_matrix_element(theta1, theta2)
    return pauli_expectation(chi_spinor(theta1, alpha), chi_spinor(theta2, alpha))


def h_factor(A: complex, B, theta1: float, theta2: float, alpha: str = "x") -> complex:
    """h = A cos((Theta1 - Theta2)/2) + i B . <chi_1|sigma|chi_2>"""
    overlap = np.cos(0.5 * (theta1 - theta2))
    return complex(A * overlap + 1j * (np.asarray(B) @ probe_sigma_element(theta1, theta2, alpha)))


def response_parts(
    channel: Channel, kappa1, kappa2, theta1: float, theta2: float, target: TargetState, alpha: str = "x"
) -> ResponseParts:
    A, B = coefficient_row(channel, kappa1, kappa2, target.c_vec)
    F = structure_factor(kappa1, kappa2, target.d_vec, channel.transition)
    return ResponseParts(A, B, F, h_factor(A, B, theta1, theta2, alpha))


def response_term(
    channel: Channel,
    kappa1,
    kappa2,
    theta1: float,
    theta2: float,
    target: TargetState,
    alpha: str = "x",
    k_norms: Optional[Tuple[float, float]] = None,
) -> complex:
    """
    Population-weighted F h / 4 for one channel, energy delta stripped.

    The 1/4 is the spin-1/2 normalization of the dimer spins. k_norms, when
    given, are the incoming magnitudes |k1|, |k2| and must agree.
    """
    if k_norms is not None:
        k1, k2 = k_norms
        if abs(k1 - k2) > ON_SHELL_TOL * max(abs(k1), abs(k2)):
            raise ContractViolation(f"Off-shell pair: |k1|={k1!r}, |k2|={k2!r}")
    weight = channel_weight(target, channel.transition)
    if weight == 0.0:
        return 0.0j
    parts = response_parts(channel, kappa1, kappa2, theta1, theta2, target, alpha)
    return weight * 0.25 * parts.F * parts.h


def pw_tensor(transition: Transition, regime: Regime, c, ktilde) -> np.ndarray:
    """
    T_ab = sum over final states of (P M*)_a (P M)_b at kappa1 = kappa2,
    up to the common site factor; trace and antisymmetric part give (A~, B~).
    """
    k = unit(ktilde)
    proj = np.eye(3) - np.outer(k, k)
    if transition is Transition.S_T or (regime.is_thermal and transition is Transition.T_S):
        return proj.astype(complex)
    if regime.is_thermal:
        return 2.0 * proj.astype(complex)
    if c is None:
        raise ConfigurationError("Pure triplet channel requires c", [("target.c", "missing")])
    cp = c_perp(check_unit_c(c), k)
    if transition is Transition.T_S:
        return np.outer(cp.conj(), cp)
    return proj - np.outer(cp, cp.conj())


def pw_coefficients(transition: Transition, regime: Regime, c, ktilde) -> Tuple[float, CVec3]:
    """Plane-wave (A~, B~); A~ is real and B~ purely imaginary."""
    tensor = pw_tensor(transition, regime, c, ktilde)
    a = float(np.trace(tensor).real)
    b = np.array(
        [tensor[1, 2] - tensor[2, 1], tensor[2, 0] - tensor[0, 2], tensor[0, 1] - tensor[1, 0]]
    )
    return a, b


def pw_bracket(transition: Transition, regime: Regime, c, ktilde, theta: float, alpha: str = "x") -> float:
    """A~ + i B~ . chi_alpha(Theta)"""
    a, b = pw_coefficients(transition, regime, c, ktilde)
    return float((a + 1j * (b @ effective_axis(alpha, theta))).real)


def pw_response(
    kappa,
    transition: Transition,
    regime: Regime,
    c,
    theta: float,
    d,
    alpha: str = "x",
) -> float:
    """
    Plane-wave response sin^2((kappa.d + pi delta)/2) [A~ + i B~ . chi_alpha].

    Unweighted by populations; thermal rows sum over the triplet basis.
    """
    kappa = as_vec3(kappa)
    phase = 0.5 * (kappa @ as_vec3(d) + (np.pi if transition.is_diagonal else 0.0))
    return float(np.sin(phase) ** 2 * pw_bracket(transition, regime, c, kappa, theta, alpha))


def pw_polarization(transition: Transition, regime: Regime, c, ktilde, theta: float, alpha: str = "x") -> Vec3:
    """
    Scattered polarization h~ / (A~ + i B~ . chi) in the plane-wave limit.

    h~ = (T + T^T) chi - A~ chi - i B~, with T the pw_tensor; for s->t this is
    -2 k (k . chi), for a pure t->s channel 2Re[c_perp (chi . c_perp*)] - A~ chi - i B~.
    """
    tensor = pw_tensor(transition, regime, c, ktilde)
    a, b = pw_coefficients(transition, regime, c, ktilde)
    chi = effective_axis(alpha, theta)
    denominator = (a + 1j * (b @ chi)).real
    if abs(denominator) < POLARIZATION_FLOOR:
        raise UndefinedPolarizationError(f"Plane-wave cross-section vanishes for {transition.value}")
    numerator = (tensor + tensor.T) @ chi - a * chi - 1j * b
    return numerator.real / denominator


def erasure_overlap(c, kappa0, alpha: str = "x", d=None) -> complex:
    """
    Overlap of the two scattered path spinors of a t->s event,
    i e^{i kappa0.d} (c*_perp x c_perp) . <chi^alpha_1|sigma|chi^alpha_0>.
    """
    c = check_unit_c(c)
    kappa0 = as_vec3(kappa0)
    cp = c_perp(c, kappa0)
    up, down = axis_basis(alpha)
    phase = 1.0 if d is None else np.exp(1j * (kappa0 @ as_vec3(d)))
    return complex(1j * phase * (np.cross(cp.conj(), cp) @ pauli_expectation(down, up)))
