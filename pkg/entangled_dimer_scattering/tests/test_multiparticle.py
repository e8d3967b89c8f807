import numpy as np
import pytest

from src.config import NEUTRON_MASS
from src.exceptions import ContractViolation, DegenerateBasisError, PreconditionError
from src.multiparticle import (
    BasisKind,
    BasisTag,
    DetectorState,
    PairInState,
    ToyLattice,
    TwoFermionCrossSection,
    TwoFermionPoint,
    basis_eval,
    brute_force_matrix_element,
    factorized_matrix_element,
    mode_amplitude,
    out_state_decompose,
    out_state_eval,
    pair_form_factor,
    reconstruct_out_state,
    single_form_factor,
    two_body_matrix_element,
)

BOX = 10.0
LATTICE = ToyLattice(4, BOX)


def _axis(rng):
    return (float(rng.uniform(0.0, np.pi)), float(rng.uniform(0.0, 2.0 * np.pi)))


def _point(rng):
    return TwoFermionPoint(
        rng.uniform(0.0, BOX, size=3), rng.uniform(0.0, BOX, size=3), int(rng.integers(2)), int(rng.integers(2))
    )


def _momenta(rng):
    k_A = tuple(rng.normal(size=3))
    k_B = tuple(rng.normal(size=3))
    return k_A, k_B


def _gaussian_pair(r_A, r_B):
    return np.exp(-0.25 * np.sum((r_A - r_B) ** 2, axis=-1))


def _bump(r):
    return np.exp(-0.125 * np.sum((r - 4.0) ** 2, axis=-1))


def _in_state(rng):
    modes = tuple(tuple(LATTICE.momentum(m)) for m in [(0, 0, 1), (1, 0, 0), (0, 1, 1)])
    amplitudes = tuple(complex(a, b) for a, b in rng.normal(size=(3, 2)))
    return PairInState(modes, amplitudes, tuple(rng.uniform(-BOX, BOX, size=3)), _axis(rng))


def test_basis_functions_are_antisymmetric(rng):
    for _ in range(50):
        k_A, k_B = _momenta(rng)
        xi = tuple(rng.uniform(-5.0, 5.0, size=3))
        p = _point(rng)
        swapped = TwoFermionPoint(p.r_B, p.r_A, p.sigma_B, p.sigma_A)
        for kind in (
            BasisKind(BasisTag.A, k_A, k_B, xi, alpha=_axis(rng)),
            BasisKind(BasisTag.B, k_A, k_B, xi, alpha=_axis(rng)),
            BasisKind(BasisTag.C, k_A, k_B, nu=int(rng.integers(2)), alpha=_axis(rng)),
        ):
            assert abs(basis_eval(kind, p, BOX) + basis_eval(kind, swapped, BOX)) < 1e-12


def test_degenerate_momenta(rng):
    k = (0.1, 0.2, 0.3)
    p = _point(rng)
    assert np.isfinite(basis_eval(BasisKind(BasisTag.A, k, k), p, BOX))
    for tag in (BasisTag.B, BasisTag.C):
        with pytest.raises(DegenerateBasisError):
            basis_eval(BasisKind(tag, k, k, nu=0), p, BOX)
    with pytest.raises(DegenerateBasisError):
        out_state_decompose(k, k, (0.0, 0.0), (0.0, 0.0), 0, 1)


def test_c_basis_needs_spin_index():
    with pytest.raises(PreconditionError):
        BasisKind(BasisTag.C, (1.0, 0.0, 0.0), (0.0, 1.0, 0.0))


def test_out_state_reconstruction(rng):
    for _ in range(50):
        k_A, k_B = _momenta(rng)
        out = DetectorState(k_A, k_B, _axis(rng), _axis(rng), int(rng.integers(2)), int(rng.integers(2)))
        alpha = _axis(rng)
        coefficients = out_state_decompose(k_A, k_B, out.beta, out.gamma, out.nu, out.nu_prime, alpha)
        assert sum(abs(c) ** 2 for c in coefficients.values()) == pytest.approx(1.0, abs=1e-12)
        p = _point(rng)
        assert abs(reconstruct_out_state(out, p, BOX, alpha) - out_state_eval(out, p, BOX)) < 1e-12


def test_same_axis_detectors_use_single_coefficients():
    coefficients = out_state_decompose((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0), (0.0, 0.0), 0, 1)
    assert coefficients["a"] == pytest.approx(1.0 / np.sqrt(2.0))
    assert coefficients["b"] == pytest.approx(1.0 / np.sqrt(2.0))
    assert coefficients["c0"] == 0.0 and coefficients["c1"] == 0.0


@pytest.mark.parametrize("nu, nu_prime", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_form_factor_assembly_matches_lattice_contraction(nu, nu_prime, rng):
    in_state = _in_state(rng)
    out = DetectorState(
        tuple(LATTICE.momentum((1, 1, 0))), tuple(LATTICE.momentum((0, 0, 1))), _axis(rng), _axis(rng), nu, nu_prime
    )
    assembled = two_body_matrix_element(_gaussian_pair, in_state, out, LATTICE)
    brute = brute_force_matrix_element(_gaussian_pair, in_state, out, LATTICE)
    assert abs(brute) > 0.0
    assert assembled == pytest.approx(brute, rel=1e-9, abs=1e-15)


def test_product_potential_factorizes(rng):
    in_state = _in_state(rng)
    out = DetectorState(
        tuple(LATTICE.momentum((1, 0, 1))), tuple(LATTICE.momentum((0, 1, 0))), _axis(rng), _axis(rng), 1, 0
    )
    factorized = factorized_matrix_element(_bump, in_state, out, LATTICE)
    paired = two_body_matrix_element(lambda r_A, r_B: _bump(r_A) * _bump(r_B), in_state, out, LATTICE)
    assert factorized == pytest.approx(paired, rel=1e-9, abs=1e-15)


def test_pair_form_factor_of_product_potential():
    q_A = LATTICE.momentum((1, 0, 0))
    q_B = LATTICE.momentum((0, 1, 1))
    pair = pair_form_factor(lambda r_A, r_B: _bump(r_A) * _bump(r_B), q_A, q_B, LATTICE)
    single = single_form_factor(_bump, q_A, LATTICE) * single_form_factor(_bump, q_B, LATTICE)
    assert abs(single) > 0.0
    assert pair == pytest.approx(single, rel=1e-12)
    with pytest.raises(ContractViolation):
        pair_form_factor(lambda r_A, r_B: r_A[..., 0] + 0.0 * r_B[..., 0], q_A, q_B, LATTICE)


def test_asymmetric_potential_is_refused(rng):
    out = DetectorState((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0), (0.0, 0.0), 0, 1)
    with pytest.raises(ContractViolation):
        two_body_matrix_element(lambda r_A, r_B: r_A[..., 0] + 0.0 * r_B[..., 0], _in_state(rng), out, LATTICE)


def test_toy_lattice_bounds():
    for n in (1, 9):
        with pytest.raises(PreconditionError):
            ToyLattice(n, BOX)
    with pytest.raises(PreconditionError):
        ToyLattice(4, 0.0)
    assert LATTICE.positions().shape == (64, 3)
    assert LATTICE.spacing == 2.5
    assert np.allclose(LATTICE.momentum((1, 0, 0)), [2.0 * np.pi / BOX, 0.0, 0.0])


def test_mode_amplitude_scaling():
    assert mode_amplitude(2.0, 2.0 * np.pi) == pytest.approx(2.0)


def _cross_section(in_state):
    return TwoFermionCrossSection(
        potential=_gaussian_pair,
        in_state=in_state,
        k_A_out=tuple(LATTICE.momentum((1, 0, 0))),
        k_B_out=tuple(LATTICE.momentum((0, 1, 0))),
        beta=(0.0, 0.0),
        gamma=(0.5 * np.pi, 0.0),
        flux_A=1e-3,
        flux_B=1e-3,
        lattice=LATTICE,
    )


def test_cross_section_prefactor_and_energy_filter(rng):
    off_shell = PairInState(
        tuple(tuple(LATTICE.momentum(m)) for m in [(2, 0, 0), (0, 0, 2)]), (1.0, 0.5j), alpha=_axis(rng)
    )
    cross_section = _cross_section(off_shell)
    k = 2.0 * np.pi / BOX
    assert cross_section.prefactor() == pytest.approx(NEUTRON_MASS**2 * k * k / (16.0 * (2.0 * np.pi) ** 4 * 2e-3))
    assert cross_section.evaluate() == 0.0

    on_shell = PairInState(
        tuple(tuple(LATTICE.momentum(m)) for m in [(0, 0, 1), (0, -1, 0)]), (1.0, 0.5j), alpha=_axis(rng)
    )
    elements = _cross_section(on_shell).matrix_elements()
    assert sorted(elements) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert _cross_section(on_shell).evaluate() >= 0.0
