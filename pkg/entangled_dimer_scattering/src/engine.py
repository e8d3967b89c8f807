"""
Wave-packet differential cross-section and polarization engine

For each radial node k of the incoming packet, the Born amplitude spinor

    Phi_{lambda lambda'}(k) = sum_Omega w g(k) sum_j e^{i kappa.r_j} sigma.(P_kappa M_j) chi_{k.xi}

is integrated over a cap of incoming directions, with the outgoing magnitude
fixed by the channel's energy shell. The cross-section in r0^2 units is

    dsigma/dOmega = 1/(4 pi^2 I) sum_k W_k k^3 k' sum_lambda p_lambda sum_lambda' |Phi|^2
"""

import concurrent.futures
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import HBAR2_OVER_2M
from .dimer import TargetState, Transition, final_basis, initial_ensemble, site_matrix_elements
from .exceptions import (
    ConvergenceError,
    ForwardConeError,
    PreconditionError,
    UndefinedDirectionError,
    UndefinedPolarizationError,
)
from .probe import (
    ProbeConfig,
    chi_spinors,
    gaussian_amplitude,
    spin_echo_sigma,
    theta_phase,
    time_integrated_flux,
)
from .quadrature import cap_rule, radial_rule
from .response import Channel, channel_weight, pw_polarization, pw_response, response_term
from .spin_algebra import PAULI, Vec3, unit

logger = logging.getLogger(__name__)

# Forward-cone half-angle in units of sigma_k / k0
FORWARD_CONE_WIDTHS = 8.0

DCS_FLOOR = 1e-300


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and convergence contract for the packet integrals"""
    radial_nodes: int = 32
    angular_nodes: int = 40
    truncation: float = 6.0
    refinement_factor: int = 2
    tolerance: float = 1e-3
    abs_tolerance: float = 1e-14
    check_convergence: bool = True

    def __post_init__(self):
        if self.radial_nodes < 4 or self.angular_nodes < 4:
            raise PreconditionError("Quadrature node counts must be at least 4")
        if self.truncation < 3.0:
            raise PreconditionError("Truncation radius must be at least 3 packet widths")
        if self.refinement_factor < 2:
            raise PreconditionError("Refinement factor must be at least 2")

    def refined(self) -> "QuadratureSpec":
        f = self.refinement_factor
        return replace(
            self,
            radial_nodes=self.radial_nodes * f,
            angular_nodes=self.angular_nodes * f,
            check_convergence=False,
        )


@dataclass(frozen=True)
class GridSpec:
    """Outgoing directions, uniform in cos(theta) and phi"""
    n_theta: int
    n_phi: int
    theta_min: float = 0.0
    theta_max: float = np.pi
    phi_min: float = 0.0
    phi_max: float = 2.0 * np.pi

    def __post_init__(self):
        if self.n_theta < 1 or self.n_phi < 1:
            raise PreconditionError("Grid must contain at least one node")

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        """(theta, phi) per node, theta-major."""
        thetas = np.arccos(np.linspace(np.cos(self.theta_min), np.cos(self.theta_max), self.n_theta))
        phis = self.phi_min + (self.phi_max - self.phi_min) * np.arange(self.n_phi) / self.n_phi
        theta_grid, phi_grid = np.meshgrid(thetas, phis, indexing="ij")
        return theta_grid.ravel(), phi_grid.ravel()


def direction(theta: float, phi: float) -> Vec3:
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


@dataclass
class DcsGrid:
    theta: np.ndarray
    phi: np.ndarray
    dcs: Dict[str, np.ndarray]
    polarization: Dict[str, np.ndarray] = field(default_factory=dict)
    status: List[str] = field(default_factory=list)
    provenance: Dict = field(default_factory=dict)

    @property
    def total(self) -> np.ndarray:
        return np.sum(np.stack(list(self.dcs.values())), axis=0)

    def flagged(self) -> List[Tuple[int, str]]:
        return [(i, s) for i, s in enumerate(self.status) if s != "ok"]

    @property
    def has_warnings(self) -> bool:
        return any("unconverged" in s for s in self.status)


def energy_shell(k: float, J: float, transition: Transition, inverse: bool = False) -> Optional[float]:
    """
    Conjugate magnitude on the energy shell k'^2 = k^2 + 4 J zeta / (hbar^2/2m).

    With inverse=True the outgoing magnitude is given and the incoming one
    returned. A closed shell returns None.
    """
    if not k > 0.0:
        raise PreconditionError(f"Wavevector magnitude must be positive, got {k}")
    shift = 4.0 * J * Transition(transition).zeta / HBAR2_OVER_2M
    radicand = k * k - shift if inverse else k * k + shift
    if radicand < 0.0:
        return None
    return math.sqrt(radicand)


def channel_closed(probe: ProbeConfig, target: TargetState, transition: Transition) -> bool:
    return energy_shell(probe.k0_norm, target.J, transition) is None


def check_forward_cone(probe: ProbeConfig, khat_out: Vec3) -> None:
    limit = FORWARD_CONE_WIDTHS * probe.sigma_k / probe.k0_norm
    cos_angle = np.clip(khat_out @ (probe.k0_vec / probe.k0_norm), -1.0, 1.0)
    angle = float(np.arccos(cos_angle))
    if angle < limit:
        raise ForwardConeError(f"Outgoing direction {angle:.4f} rad inside forward cone {limit:.4f} rad")


def _transition_elements(target: TargetState, transition: Transition) -> List[Tuple[float, np.ndarray]]:
    """(population, M[j, b]) for every initial/final pair of the channel."""
    finals = final_basis(transition)
    return [
        (weight, site_matrix_elements(final, initial))
        for weight, initial in initial_ensemble(target, transition)
        for final in finals
    ]


class _RadialSlice(NamedTuple):
    weight: float  # W_k k^3 k'
    k_out: float
    ks: np.ndarray  # (N, 3) incoming wavevectors
    kappas: np.ndarray  # (N, 3) momentum transfers
    envelope: np.ndarray  # (N,) cap weight times g(k)


def _radial_slices(
    probe: ProbeConfig, target: TargetState, khat_out: Vec3, transition: Transition, quad: QuadratureSpec
) -> List[_RadialSlice]:
    k0 = probe.k0_norm
    reach = quad.truncation * probe.sigma_k
    cap = cap_rule(probe.k0_vec, min(np.pi, reach / k0), quad.angular_nodes, quad.angular_nodes)
    radial = radial_rule(k0, reach, quad.radial_nodes)
    slices = []
    for k_r, w_r in zip(radial.nodes, radial.weights):
        k_out = energy_shell(k_r, target.J, transition)
        if k_out is None:
            continue
        ks = k_r * cap.directions
        kappas = ks - k_out * khat_out
        envelope = cap.weights * gaussian_amplitude(ks, probe)
        slices.append(_RadialSlice(w_r * k_r**3 * k_out, k_out, ks, kappas, envelope))
    return slices


def _amplitude_moments(probe: ProbeConfig, target: TargetState, piece: _RadialSlice) -> np.ndarray:
    """Pi[j, b, :] = sum_n envelope e^{i kappa.r_j} sigma.(P_kappa e_b) chi_n"""
    kt = piece.kappas / np.linalg.norm(piece.kappas, axis=1)[:, None]
    proj = np.eye(3)[None, :, :] - kt[:, :, None] * kt[:, None, :]
    sigma_proj = np.einsum("nab,aij->nbij", proj, PAULI)
    chi = chi_spinors(theta_phase(piece.ks, probe), probe.alpha)
    spin = np.einsum("nbij,nj->nbi", sigma_proj, chi)
    sites = np.stack([target.site_position(0), target.site_position(1)])
    phases = np.exp(1j * piece.kappas @ sites.T)
    return np.einsum("n,nj,nbi->jbi", piece.envelope, phases, spin)


def _integrate(
    probe: ProbeConfig,
    target: TargetState,
    khat_out: Vec3,
    transition: Transition,
    quad: QuadratureSpec,
    sigma_ops: Optional[Sequence[np.ndarray]] = None,
) -> Tuple[float, np.ndarray]:
    """(dcs, polarization numerator) in r0^2 units; numerator is zero unless sigma_ops given."""
    elements = _transition_elements(target, transition)
    if not elements:
        return 0.0, np.zeros(3)
    dcs_terms: List[float] = []
    pol_terms: List[List[float]] = [[], [], []]
    for piece in _radial_slices(probe, target, khat_out, transition, quad):
        moments = _amplitude_moments(probe, target, piece)
        node_dcs = 0.0
        node_pol = np.zeros(3)
        for weight, m in elements:
            phi = np.einsum("jb,jbi->i", m, moments)
            node_dcs += weight * np.vdot(phi, phi).real
            if sigma_ops is not None:
                node_pol += weight * np.array([np.vdot(phi, s @ phi).real for s in sigma_ops])
        dcs_terms.append(piece.weight * node_dcs)
        for axis in range(3):
            pol_terms[axis].append(piece.weight * node_pol[axis])
    prefactor = 1.0 / (4.0 * np.pi**2 * time_integrated_flux(probe))
    numerator = np.array([math.fsum(terms) for terms in pol_terms])
    return prefactor * math.fsum(dcs_terms), prefactor * numerator


def _check_converged(coarse: float, refined: float, quad: QuadratureSpec) -> None:
    if abs(coarse - refined) > quad.tolerance * max(abs(coarse), abs(refined)) + quad.abs_tolerance:
        raise ConvergenceError(coarse, refined, quad.tolerance)


def _prepare_direction(probe: ProbeConfig, khat_out) -> Vec3:
    khat = unit(khat_out)
    check_forward_cone(probe, khat)
    return khat


def dcs_direction(
    probe: ProbeConfig,
    target: TargetState,
    khat_out,
    transition: Transition,
    quad: QuadratureSpec = QuadratureSpec(),
) -> float:
    """
    Population-weighted channel dsigma/dOmega (r0^2 units) toward khat_out.

    Returns 0 for a closed channel. When the quadrature asks for a convergence
    check the refined estimate is returned, or ConvergenceError raised.
    """
    transition = Transition(transition)
    khat = _prepare_direction(probe, khat_out)
    if channel_closed(probe, target, transition):
        logger.debug("Channel %s closed at |k0|=%.6g", transition.value, probe.k0_norm)
        return 0.0
    coarse, _ = _integrate(probe, target, khat, transition, quad)
    if not quad.check_convergence:
        return coarse
    refined, _ = _integrate(probe, target, khat, transition, quad.refined())
    _check_converged(coarse, refined, quad)
    return refined


def polarization_direction(
    probe: ProbeConfig,
    target: TargetState,
    khat_out,
    transition: Transition,
    quad: QuadratureSpec = QuadratureSpec(),
    echo_phi: Optional[float] = None,
) -> Vec3:
    """Scattered polarization P' for one channel, optionally through the spin-echo operator."""
    transition = Transition(transition)
    khat = _prepare_direction(probe, khat_out)
    if channel_closed(probe, target, transition):
        raise UndefinedPolarizationError(f"Channel {transition.value} is closed")
    sigma_ops = PAULI if echo_phi is None else spin_echo_sigma(echo_phi, probe.alpha)

    def estimate(spec: QuadratureSpec) -> Vec3:
        dcs, numerator = _integrate(probe, target, khat, transition, spec, sigma_ops)
        if dcs <= DCS_FLOOR:
            raise UndefinedPolarizationError(f"Cross-section vanishes for {transition.value}")
        return numerator / dcs

    coarse = estimate(quad)
    if not quad.check_convergence:
        return coarse
    refined = estimate(quad.refined())
    worst = int(np.argmax(np.abs(coarse - refined)))
    if abs(coarse[worst] - refined[worst]) > quad.tolerance:
        raise ConvergenceError(float(coarse[worst]), float(refined[worst]), quad.tolerance)
    return refined


def dcs_direction_pairwise(
    probe: ProbeConfig,
    target: TargetState,
    khat_out,
    transition: Transition,
    quad: QuadratureSpec,
) -> float:
    """
    Same quantity as dcs_direction, as the explicit double sum of the
    closed-form response over pairs of incoming directions. Quadratic in the
    node count; meant for small rules.
    """
    transition = Transition(transition)
    khat = _prepare_direction(probe, khat_out)
    if channel_closed(probe, target, transition):
        return 0.0
    channel = Channel.for_target(target, transition)
    terms = []
    for piece in _radial_slices(probe, target, khat, transition, quad):
        thetas = theta_phase(piece.ks, probe)
        total = 0.0j
        for n in range(len(thetas)):
            for m in range(len(thetas)):
                total += (
                    piece.envelope[n]
                    * piece.envelope[m]
                    * response_term(
                        channel, piece.kappas[n], piece.kappas[m], thetas[n], thetas[m], target, probe.alpha
                    )
                )
        terms.append(piece.weight * total.real)
    return math.fsum(terms) / (4.0 * np.pi**2 * time_integrated_flux(probe))


def pw_limit_dcs(probe: ProbeConfig, target: TargetState, khat_out, transition: Transition) -> float:
    """Plane-wave cross-section (k'/k0) p S^pw in r0^2 units at the packet centre."""
    transition = Transition(transition)
    khat = unit(khat_out)
    k0 = probe.k0_norm
    k_out = energy_shell(k0, target.J, transition)
    weight = channel_weight(target, transition)
    if k_out is None or weight == 0.0:
        return 0.0
    channel = Channel.for_target(target, transition)
    kappa = probe.k0_vec - k_out * khat
    theta = float(theta_phase(probe.k0_vec, probe))
    s_pw = pw_response(kappa, transition, channel.regime, target.c_vec, theta, target.d_vec, probe.alpha)
    return (k_out / k0) * weight * s_pw


def pw_grid(
    probe: ProbeConfig,
    target: TargetState,
    transitions: Sequence[Transition],
    grid: GridSpec,
    with_polarization: bool = False,
) -> DcsGrid:
    """Plane-wave cross-section (and polarization) on a direction grid; cheap, no packet integral."""
    transitions = [Transition(t) for t in transitions]
    thetas, phis = grid.nodes()
    theta_k0 = float(theta_phase(probe.k0_vec, probe))
    dcs = {t.label: np.zeros(len(thetas)) for t in transitions}
    pol = {t.label: np.full((len(thetas), 3), np.nan) for t in transitions} if with_polarization else {}
    status = []
    for i, (theta, phi) in enumerate(zip(thetas, phis)):
        khat = direction(theta, phi)
        flags = []
        for transition in transitions:
            label = transition.label
            if channel_closed(probe, target, transition):
                flags.append(f"closed:{label}")
                continue
            try:
                dcs[label][i] = pw_limit_dcs(probe, target, khat, transition)
            except UndefinedDirectionError:
                dcs[label][i] = np.nan
                flags.append(f"undefined-direction:{label}")
                continue
            if with_polarization and channel_weight(target, transition) == 0.0:
                flags.append(f"undefined-polarization:{label}")
            elif with_polarization:
                channel = Channel.for_target(target, transition)
                kappa = probe.k0_vec - energy_shell(probe.k0_norm, target.J, transition) * khat
                try:
                    pol[label][i] = pw_polarization(
                        transition, channel.regime, target.c_vec, kappa, theta_k0, probe.alpha
                    )
                except UndefinedPolarizationError:
                    flags.append(f"undefined-polarization:{label}")
        status.append(";".join(flags) if flags else "ok")
    provenance = {
        "probe": probe.to_dict(),
        "target": target.to_dict(),
        "grid": asdict(grid),
        "channels": [t.value for t in transitions],
        "limit": "plane-wave",
    }
    return DcsGrid(thetas, phis, dcs, pol, status, provenance)


class _NodeResult(NamedTuple):
    dcs: Dict[str, float]
    polarization: Dict[str, Vec3]
    status: str


def _evaluate_node(
    probe: ProbeConfig,
    target: TargetState,
    transitions: Sequence[Transition],
    quad: QuadratureSpec,
    theta: float,
    phi: float,
    with_polarization: bool,
    echo_phi: Optional[float],
) -> _NodeResult:
    khat = direction(theta, phi)
    dcs: Dict[str, float] = {}
    pol: Dict[str, Vec3] = {}
    flags: List[str] = []
    try:
        check_forward_cone(probe, khat)
    except ForwardConeError:
        nan = float("nan")
        return _NodeResult(
            {t.label: nan for t in transitions},
            {t.label: np.full(3, nan) for t in transitions} if with_polarization else {},
            "forward-cone",
        )
    for transition in transitions:
        label = transition.label
        if channel_closed(probe, target, transition):
            flags.append(f"closed:{label}")
        try:
            dcs[label] = dcs_direction(probe, target, khat, transition, quad)
        except ConvergenceError as e:
            logger.warning("Unconverged %s at theta=%.4f phi=%.4f: %s", label, theta, phi, e)
            flags.append(f"unconverged:{label}")
            dcs[label] = e.refined
        if with_polarization:
            try:
                pol[label] = polarization_direction(probe, target, khat, transition, quad, echo_phi)
            except UndefinedPolarizationError:
                flags.append(f"undefined-polarization:{label}")
                pol[label] = np.full(3, float("nan"))
            except ConvergenceError as e:
                logger.warning("Unconverged polarization %s at theta=%.4f phi=%.4f: %s", label, theta, phi, e)
                flags.append(f"unconverged:{label}")
                pol[label] = polarization_direction(
                    probe, target, khat, transition, quad.refined(), echo_phi
                )
    return _NodeResult(dcs, pol, ";".join(flags) if flags else "ok")


def dcs_grid(
    probe: ProbeConfig,
    target: TargetState,
    transitions: Sequence[Transition],
    grid: GridSpec,
    quad: QuadratureSpec = QuadratureSpec(),
    threads: int = 1,
    with_polarization: bool = False,
    echo_phi: Optional[float] = None,
) -> DcsGrid:
    """
    Evaluate every requested channel on a (theta, phi) grid.

    Nodes are evaluated concurrently but collected in grid order, so the
    result does not depend on the worker count. Per-node failures are
    recorded in the status column and never abort the grid.
    """
    transitions = [Transition(t) for t in transitions]
    if not transitions:
        raise PreconditionError("At least one channel is required")
    thetas, phis = grid.nodes()
    logger.info("Evaluating %d grid nodes x %d channels on %d thread(s)", len(thetas), len(transitions), threads)

    def work(node: Tuple[float, float]) -> _NodeResult:
        return _evaluate_node(probe, target, transitions, quad, node[0], node[1], with_polarization, echo_phi)

    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        results = list(executor.map(work, zip(thetas, phis)))

    labels = [t.label for t in transitions]
    dcs = {label: np.array([r.dcs[label] for r in results]) for label in labels}
    polarization = {}
    if with_polarization:
        polarization = {label: np.stack([r.polarization[label] for r in results]) for label in labels}
    provenance = {
        "probe": probe.to_dict(),
        "target": target.to_dict(),
        "quadrature": asdict(quad),
        "grid": asdict(grid),
        "channels": [t.value for t in transitions],
        "echo_phi": echo_phi,
    }
    return DcsGrid(thetas, phis, dcs, polarization, [r.status for r in results], provenance)
