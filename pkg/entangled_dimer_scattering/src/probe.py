"""
Spin-path entangled probe: path phases and spinors, the Gaussian packet
envelope with its flux normalization, and the spin-echo operator
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .config import HBAR2_OVER_2M
from .exceptions import PreconditionError
from .spin_algebra import (
    AXES,
    PAULI,
    CVec3,
    Mat2c,
    Spinor2,
    Vec3,
    as_vec3,
    axis_basis,
)

logger = logging.getLogger(__name__)


class FluxMode(str, Enum):
    """Time-integrated flux convention"""
    ANALYTIC = "analytic"
    CALIBRATED = "calibrated"
    BOX = "box"


# Ratio of the calibrated to the analytic flux: the large-packet limit of the
# angular/radial envelope integral against the plane-wave constant
FLUX_CALIBRATION_FACTOR = 2.0


@dataclass(frozen=True)
class ProbeConfig:
    """Entangled probe in internal units (angstrom, radians)"""
    k0: Tuple[float, float, float]
    delta: float
    xi: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    phi: float = 0.0
    alpha: str = "x"
    flux_mode: FluxMode = FluxMode.ANALYTIC
    box_length: Optional[float] = None
    _k0_vec: Vec3 = field(init=False, repr=False, compare=False)
    _xi_vec: Vec3 = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k0 = as_vec3(self.k0)
        xi = as_vec3(self.xi)
        if np.linalg.norm(k0) <= 0.0:
            raise PreconditionError("Probe mean momentum k0 must be nonzero")
        if not self.delta > 0.0:
            raise PreconditionError(f"Packet width must be positive, got {self.delta}")
        if self.alpha not in AXES:
            raise PreconditionError(f"Quantization axis must be one of {AXES}, got {self.alpha}")
        mode = FluxMode(self.flux_mode)
        if mode is FluxMode.BOX and not (self.box_length and self.box_length > 0.0):
            raise PreconditionError("Box flux mode requires a positive box_length")
        object.__setattr__(self, "flux_mode", mode)
        object.__setattr__(self, "k0", tuple(float(x) for x in k0))
        object.__setattr__(self, "xi", tuple(float(x) for x in xi))
        object.__setattr__(self, "_k0_vec", k0)
        object.__setattr__(self, "_xi_vec", xi)

    @property
    def k0_vec(self) -> Vec3:
        return self._k0_vec.copy()

    @property
    def xi_vec(self) -> Vec3:
        return self._xi_vec.copy()

    @property
    def k0_norm(self) -> float:
        return float(np.linalg.norm(self._k0_vec))

    @property
    def sigma_k(self) -> float:
        """Packet momentum width sqrt(2)/Delta."""
        return np.sqrt(2.0) / self.delta

    def with_phi(self, phi: float) -> "ProbeConfig":
        return replace(self, phi=float(phi))

    def to_dict(self) -> dict:
        return {
            "k0": list(self.k0),
            "delta": self.delta,
            "xi": list(self.xi),
            "phi": self.phi,
            "alpha": self.alpha,
            "flux_mode": self.flux_mode.value,
            "box_length": self.box_length,
        }


def theta_phase(k, cfg: ProbeConfig):
    """Theta_k = k . xi + 2 phi (accepts a single vector or an (N, 3) array)."""
    return np.asarray(k, dtype=float) @ cfg._xi_vec + 2.0 * cfg.phi


def chi_spinor(theta: float, alpha: str) -> Spinor2:
    """(e^{-i Theta/2} chi^alpha_0 + e^{i Theta/2} chi^alpha_1) / sqrt(2)"""
    up, down = axis_basis(alpha)
    return (np.exp(-0.5j * theta) * up + np.exp(0.5j * theta) * down) / np.sqrt(2.0)


def chi_spinors(thetas, alpha: str) -> np.ndarray:
    """Vectorized chi_spinor; returns an (N, 2) array."""
    up, down = axis_basis(alpha)
    thetas = np.asarray(thetas, dtype=float)[..., None]
    return (np.exp(-0.5j * thetas) * up + np.exp(0.5j * thetas) * down) / np.sqrt(2.0)


def effective_axis(alpha: str, theta: float) -> Vec3:
    """Polarization axis of chi_spinor(theta, alpha)."""
    s, c = np.sin(theta), np.cos(theta)
    if alpha == "x":
        return np.array([0.0, -s, c])
    if alpha == "y":
        return np.array([s, 0.0, c])
    if alpha == "z":
        return np.array([c, s, 0.0])
    raise PreconditionError(f"Unknown quantization axis: {alpha}")


def rho_pair(theta1: float, theta2: float, alpha: str) -> Mat2c:
    """rho_{k1,k2} = |chi_{k2}><chi_{k1}|"""
    return np.outer(chi_spinor(theta2, alpha), chi_spinor(theta1, alpha).conj())


def spin_matrix_element(theta1: float, theta2: float) -> CVec3:
    """<chi_{k1}|sigma|chi_{k2}> for the x quantization axis."""
    half_diff = 0.5 * (theta1 - theta2)
    half_sum = 0.5 * (theta1 + theta2)
    return np.array([1j * np.sin(half_diff), -np.sin(half_sum), np.cos(half_sum)], dtype=complex)


def gaussian_amplitude(k, cfg: ProbeConfig):
    """
    Momentum envelope g(k) = (Delta/sqrt(2 pi))^{3/2} exp(-Delta^2 |k - k0|^2 / 4).

    Args:
        k: A 3-vector or an (..., 3) array of wavevectors (1/angstrom)
        cfg: Probe configuration

    Returns:
        Envelope value(s), L2-normalized over k-space
    """
    diff = np.asarray(k, dtype=float) - cfg._k0_vec
    sq = np.sum(diff * diff, axis=-1)
    return (cfg.delta / np.sqrt(2.0 * np.pi)) ** 1.5 * np.exp(-0.25 * cfg.delta**2 * sq)


def gaussian_norm(cfg: ProbeConfig, nodes: int = 24) -> float:
    """Integral of |g|^2 over k-space by tensor Gauss-Hermite quadrature."""
    t, w = hermgauss(nodes)
    scale = np.sqrt(2.0) / cfg.delta
    tx, ty, tz = np.meshgrid(t, t, t, indexing="ij")
    offsets = scale * np.stack([tx, ty, tz], axis=-1)
    weights = w[:, None, None] * w[None, :, None] * w[None, None, :]
    values = gaussian_amplitude(cfg._k0_vec + offsets, cfg) ** 2
    # hermgauss integrates against exp(-t^2); undo it for a generic integrand
    correction = np.exp(tx**2 + ty**2 + tz**2)
    return float(np.sum(weights * values * correction) * scale**3)


def time_integrated_flux(cfg: ProbeConfig) -> float:
    """
    Time-integrated incident flux I (1/angstrom^2) in the probe's flux mode.

    analytic:   profile-averaged fluence of each spin-tagged packet, 1/(pi Delta^2)
    calibrated: analytic rescaled to the plane-wave limit, 2/(pi Delta^2)
    box:        uniform box fluence 1/L^2
    """
    if cfg.flux_mode is FluxMode.BOX:
        return 1.0 / cfg.box_length**2
    analytic = 1.0 / (np.pi * cfg.delta**2)
    if cfg.flux_mode is FluxMode.CALIBRATED:
        return FLUX_CALIBRATION_FACTOR * analytic
    return analytic


def packet_density(r, cfg: ProbeConfig, t: float = 0.0) -> np.ndarray:
    """
    Spin-resolved probability density of the two path packets.

    The packets are centred at +xi/2 (spin chi^alpha_0) and -xi/2 (chi^alpha_1)
    and move rigidly with velocity hbar k0 / m; spreading is neglected.

    Returns:
        Array of shape (..., 2): density of each spin-tagged packet
    """
    r = np.asarray(r, dtype=float)
    velocity = 2.0 * HBAR2_OVER_2M * cfg._k0_vec
    centre = velocity * t
    norm = (2.0 / (np.pi * cfg.delta**2)) ** 1.5
    out = []
    for sign in (1.0, -1.0):
        diff = r - centre - sign * 0.5 * cfg._xi_vec
        sq = np.sum(diff * diff, axis=-1)
        out.append(0.5 * norm * np.exp(-2.0 * sq / cfg.delta**2))
    return np.stack(out, axis=-1)


def time_integrated_flux_numeric(cfg: ProbeConfig, nodes: int = 16) -> float:
    """
    Direct Gauss-Hermite evaluation of the analytic-mode flux.

    For each spin-tagged packet, the current density (hbar k0/m) n(r, t) is
    integrated over time at transverse offset rho on the plane through the
    packet centre, then averaged over that packet's transverse profile.
    """
    k0 = cfg._k0_vec
    k_hat = k0 / np.linalg.norm(k0)
    speed = 2.0 * HBAR2_OVER_2M * np.linalg.norm(k0)
    trial = np.array([1.0, 0.0, 0.0]) if abs(k_hat[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(k_hat, trial)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(k_hat, e1)

    s, w = hermgauss(nodes)
    # hermgauss integrates against exp(-s^2); undo it for a generic integrand
    w_plain = w * np.exp(s**2)
    length_scale = cfg.delta / np.sqrt(2.0)
    time_scale = length_scale / speed
    times = time_scale * s

    total = 0.0
    for index, sign in enumerate((1.0, -1.0)):
        centre = sign * 0.5 * cfg._xi_vec
        fluence = np.empty((nodes, nodes))
        for a, ua in enumerate(s):
            for b, ub in enumerate(s):
                point = centre + length_scale * (ua * e1 + ub * e2)
                # a rigidly moving packet seen at a fixed point: shift the point back
                path = point[None, :] - speed * times[:, None] * k_hat[None, :]
                unit_density = 2.0 * packet_density(path, cfg)[:, index]
                fluence[a, b] = speed * time_scale * np.sum(w_plain * unit_density)
        # the transverse profile of a rigid packet equals its fluence map
        area = np.outer(w_plain, w_plain) * length_scale**2
        total += 0.5 * np.sum(area * fluence * fluence)
    return float(total)


def echo_unitary(phi: float, alpha: str) -> Mat2c:
    """U_phi = sum_nu e^{i (-1)^nu phi} |chi^alpha_nu><chi^alpha_nu|"""
    up, down = axis_basis(alpha)
    return np.exp(1j * phi) * np.outer(up, up.conj()) + np.exp(-1j * phi) * np.outer(down, down.conj())


def spin_echo_sigma(phi: float, alpha: str) -> Tuple[Mat2c, Mat2c, Mat2c]:
    """sigma_se = U_phi^dagger sigma U_phi, one matrix per Cartesian component."""
    u = echo_unitary(phi, alpha)
    return tuple(u.conj().T @ PAULI[k] @ u for k in range(3))
