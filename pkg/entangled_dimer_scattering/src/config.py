"""
Environment configuration, physical constants and unit conversion
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Runtime defaults
DEFAULT_THREADS = int(os.getenv("DIMER_SCATTERING_THREADS", "1"))
DEFAULT_OUTPUT_DIR = os.getenv("DIMER_SCATTERING_OUTPUT_DIR", "./output")
LOG_LEVEL = os.getenv("DIMER_SCATTERING_LOG_LEVEL", "INFO")

# Neutron kinetic constant hbar^2 / 2m in meV * angstrom^2
HBAR2_OVER_2M = 2.0721

# Neutron mass in units where hbar = 1, lengths in angstrom, energies in meV
NEUTRON_MASS = 1.0 / (2.0 * HBAR2_OVER_2M)

# Boltzmann constant in meV / K
K_B = 0.08617333262

# Magnetic scattering length r0 = gamma * r_e
GAMMA_N = 1.913
R_E_FM = 2.8179403262
R0_SQUARED_BARN = (GAMMA_N * R_E_FM) ** 2 / 100.0  # 1 fm^2 = 0.01 barn

# Absolute tolerance for unit-scale equality checks
UNIT_TOL = 1e-12

# Length units -> angstrom
LENGTH_UNITS = {
    "angstrom": 1.0,
    "nm": 10.0,
    "um": 1.0e4,
}

# Inverse length units -> inverse angstrom
INVERSE_LENGTH_UNITS = {
    "inv_angstrom": 1.0,
    "inv_nm": 0.1,
    "inv_um": 1.0e-4,
}

CROSS_SECTION_UNITS = ("r0^2", "barn")


def to_angstrom(value, unit: str):
    """Convert a length (scalar or array) to angstrom."""
    if unit not in LENGTH_UNITS:
        raise ValueError(f"Unknown length unit: {unit}")
    return value * LENGTH_UNITS[unit]


def to_inverse_angstrom(value, unit: str):
    """Convert an inverse length (scalar or array) to inverse angstrom."""
    if unit not in INVERSE_LENGTH_UNITS:
        raise ValueError(f"Unknown inverse length unit: {unit}")
    return value * INVERSE_LENGTH_UNITS[unit]


def kinetic_energy(k: float) -> float:
    """Neutron kinetic energy in meV for wavevector magnitude k (1/angstrom)."""
    return HBAR2_OVER_2M * k * k
