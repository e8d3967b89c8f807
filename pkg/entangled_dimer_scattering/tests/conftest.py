import sys
from pathlib import Path

import numpy as np
import pytest

# The package is imported as `src`, the way the launcher does it
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.dimer import TargetKind, TargetState  # noqa: E402
from src.engine import QuadratureSpec  # noqa: E402
from src.probe import FluxMode, ProbeConfig  # noqa: E402

SQRT_HALF = 1.0 / np.sqrt(2.0)
UP_UP_C = (SQRT_HALF, -1j * SQRT_HALF, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def up_up_target():
    """9 A dimer along y, J = 1/4 meV, product triplet"""
    return TargetState((0.0, 9.0, 0.0), 0.25, TargetKind.TRIPLET, c=UP_UP_C)


@pytest.fixture
def up_up_probe():
    """k = pi 1/A along z, plane-wave sized packet, no path separation"""
    return ProbeConfig((0.0, 0.0, np.pi), 1000.0, flux_mode=FluxMode.CALIBRATED)


@pytest.fixture
def small_quad():
    return QuadratureSpec(radial_nodes=6, angular_nodes=8, check_convergence=False)


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_c(rng):
    c = rng.normal(size=3) + 1j * rng.normal(size=3)
    return c / np.linalg.norm(c)


def random_real_c(rng):
    return random_unit(rng).astype(complex)
