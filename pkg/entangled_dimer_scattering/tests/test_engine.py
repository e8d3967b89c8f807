import numpy as np
import pytest

from conftest import UP_UP_C
from src.config import HBAR2_OVER_2M
from src.dimer import TargetKind, TargetState, Transition
from src.engine import (
    GridSpec,
    QuadratureSpec,
    channel_closed,
    check_forward_cone,
    dcs_direction,
    dcs_direction_pairwise,
    dcs_grid,
    direction,
    energy_shell,
    polarization_direction,
    pw_grid,
    pw_limit_dcs,
)
from src.exceptions import ConvergenceError, ForwardConeError, PreconditionError
from src.probe import FluxMode, ProbeConfig, effective_axis

PW_QUAD = QuadratureSpec(radial_nodes=16, angular_nodes=24, check_convergence=False)


def test_energy_shell_closed_and_inverse():
    k_out = energy_shell(1.0, 0.25, Transition.S_T)
    assert k_out == pytest.approx(np.sqrt(1.0 + 1.0 / HBAR2_OVER_2M))
    assert energy_shell(k_out, 0.25, Transition.S_T, inverse=True) == pytest.approx(1.0)
    assert energy_shell(1.0, 0.25, Transition.T_T) == 1.0
    assert energy_shell(0.1, 0.25, Transition.T_S) is None
    with pytest.raises(PreconditionError):
        energy_shell(0.0, 0.25, Transition.T_S)


def test_channel_closed_below_threshold():
    target = TargetState((0.0, 9.0, 0.0), 0.25, TargetKind.THERMAL, temperature=10.0)
    slow = ProbeConfig((0.0, 0.0, 0.3), 1000.0)
    assert channel_closed(slow, target, Transition.T_S)
    assert not channel_closed(slow, target, Transition.S_T)


def test_forward_cone_is_refused(up_up_probe, up_up_target):
    with pytest.raises(ForwardConeError):
        check_forward_cone(up_up_probe, np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ForwardConeError):
        dcs_direction(up_up_probe, up_up_target, [0.0, 0.0, 1.0], Transition.T_S)
    check_forward_cone(up_up_probe, direction(0.1, 0.0))


def test_grid_nodes_are_theta_major():
    grid = GridSpec(n_theta=3, n_phi=2, theta_min=0.2, theta_max=2.0)
    thetas, phis = grid.nodes()
    assert len(thetas) == 6
    assert np.allclose(thetas[:2], 0.2)
    assert np.allclose(phis[:2], [0.0, np.pi])
    assert np.allclose(np.diff(np.cos(thetas[::2])), 0.5 * (np.cos(2.0) - np.cos(0.2)))
    with pytest.raises(PreconditionError):
        GridSpec(n_theta=0, n_phi=1)


def test_quadrature_spec_refinement():
    spec = QuadratureSpec(radial_nodes=6, angular_nodes=8)
    refined = spec.refined()
    assert (refined.radial_nodes, refined.angular_nodes) == (12, 16)
    assert not refined.check_convergence
    with pytest.raises(PreconditionError):
        QuadratureSpec(radial_nodes=2)


@pytest.mark.parametrize(
    "target",
    [
        TargetState((0.0, 5.0, 0.0), 0.25, TargetKind.TRIPLET, c=UP_UP_C),
        TargetState((0.0, 5.0, 0.0), 0.25, TargetKind.THERMAL, temperature=5.0),
    ],
)
def test_amplitude_and_pairwise_sums_agree(target, small_quad):
    probe = ProbeConfig((0.0, 0.0, 1.5), 20.0, xi=(0.0, 3.0, 0.0), phi=0.2)
    khat = direction(1.0, 0.7)
    amplitude = dcs_direction(probe, target, khat, Transition.T_S, small_quad)
    pairwise = dcs_direction_pairwise(probe, target, khat, Transition.T_S, small_quad)
    assert amplitude > 0.0
    assert pairwise == pytest.approx(amplitude, rel=1e-9)


# maxima of sin^2(kappa.d / 2) along the y-z plane for the 9 A dimer
@pytest.mark.parametrize("theta", [0.60596, 0.92261, 2.53563])
def test_calibrated_flux_reproduces_plane_wave(theta, up_up_probe, up_up_target):
    khat = direction(theta, 0.5 * np.pi)
    packet = dcs_direction(up_up_probe, up_up_target, khat, Transition.T_S, PW_QUAD)
    plane_wave = pw_limit_dcs(up_up_probe, up_up_target, khat, Transition.T_S)
    assert packet == pytest.approx(plane_wave, rel=1e-2)


def test_flux_mode_rescales_cross_section(up_up_target, small_quad):
    khat = direction(0.60596, 0.5 * np.pi)
    calibrated = ProbeConfig((0.0, 0.0, np.pi), 1000.0, flux_mode=FluxMode.CALIBRATED)
    analytic = ProbeConfig((0.0, 0.0, np.pi), 1000.0)
    ratio = dcs_direction(analytic, up_up_target, khat, Transition.T_S, small_quad) / dcs_direction(
        calibrated, up_up_target, khat, Transition.T_S, small_quad
    )
    assert ratio == pytest.approx(2.0)


def test_bell_x_polarization_is_reversed_effective_axis():
    target = TargetState((0.0, 9.0, 0.0), 0.25, TargetKind.TRIPLET, c=(1.0, 0.0, 0.0))
    probe = ProbeConfig((0.0, 0.0, np.pi), 1000.0, flux_mode=FluxMode.CALIBRATED)
    p = polarization_direction(probe, target, direction(1.0, 0.5 * np.pi), Transition.T_S, PW_QUAD)
    assert np.allclose(p, -effective_axis("x", 0.0), atol=1e-3)


def test_echo_at_zero_phase_leaves_polarization_unchanged(up_up_probe, up_up_target, small_quad):
    khat = direction(1.0, 0.5 * np.pi)
    plain = polarization_direction(up_up_probe, up_up_target, khat, Transition.T_S, small_quad)
    echoed = polarization_direction(up_up_probe, up_up_target, khat, Transition.T_S, small_quad, echo_phi=0.0)
    assert np.allclose(plain, echoed, atol=1e-12)


def test_unconverged_quadrature_is_reported(up_up_probe, up_up_target):
    coarse = QuadratureSpec(radial_nodes=4, angular_nodes=4, tolerance=1e-12, abs_tolerance=0.0)
    with pytest.raises(ConvergenceError) as excinfo:
        dcs_direction(up_up_probe, up_up_target, direction(1.0, 0.5 * np.pi), Transition.T_S, coarse)
    assert excinfo.value.refined > 0.0

    spec = GridSpec(1, 1, 1.0, 1.0, 0.5 * np.pi, 2.5 * np.pi)
    grid = dcs_grid(up_up_probe, up_up_target, [Transition.T_S], spec, coarse)
    assert grid.status == ["unconverged:t_s"]
    assert grid.has_warnings
    assert grid.dcs["t_s"][0] == pytest.approx(excinfo.value.refined, rel=1e-9)


def test_grid_is_independent_of_thread_count(up_up_probe, up_up_target, small_quad):
    grid = GridSpec(n_theta=2, n_phi=2, theta_min=0.8, theta_max=2.0)
    serial = dcs_grid(up_up_probe, up_up_target, [Transition.T_S, Transition.T_T], grid, small_quad, threads=1)
    pooled = dcs_grid(up_up_probe, up_up_target, [Transition.T_S, Transition.T_T], grid, small_quad, threads=3)
    for label in ("t_s", "t_t"):
        assert np.array_equal(serial.dcs[label], pooled.dcs[label])
    assert serial.status == pooled.status == ["ok"] * 4
    assert np.array_equal(serial.total, serial.dcs["t_s"] + serial.dcs["t_t"])


def test_grid_flags_forward_cone_and_closed_channels(small_quad):
    target = TargetState((0.0, 9.0, 0.0), 0.25, TargetKind.THERMAL, temperature=10.0)
    probe = ProbeConfig((0.0, 0.0, 0.3), 1000.0)
    spec = GridSpec(2, 1, 0.0, 1.0, 0.5 * np.pi, 2.5 * np.pi)
    grid = dcs_grid(probe, target, [Transition.S_T, Transition.T_S], spec, small_quad)
    assert grid.status[0] == "forward-cone"
    assert np.isnan(grid.dcs["s_t"][0])
    assert grid.status[1] == "closed:t_s"
    assert grid.dcs["t_s"][1] == 0.0
    assert grid.dcs["s_t"][1] > 0.0
    assert [index for index, _ in grid.flagged()] == [0, 1]
    assert not grid.has_warnings


def test_empty_channel_list_is_rejected(up_up_probe, up_up_target):
    with pytest.raises(PreconditionError):
        dcs_grid(up_up_probe, up_up_target, [], GridSpec(1, 1))


def test_pw_grid_matches_pointwise_limit(up_up_probe, up_up_target):
    grid = GridSpec(n_theta=5, n_phi=2, theta_min=0.3, theta_max=2.5, phi_min=0.5 * np.pi, phi_max=2.5 * np.pi)
    result = pw_grid(up_up_probe, up_up_target, [Transition.T_S, Transition.S_T], grid, with_polarization=True)
    for i, (theta, phi) in enumerate(zip(result.theta, result.phi)):
        expected = pw_limit_dcs(up_up_probe, up_up_target, direction(theta, phi), Transition.T_S)
        assert result.dcs["t_s"][i] == pytest.approx(expected)
        assert result.dcs["s_t"][i] == 0.0
        assert "undefined-polarization:s_t" in result.status[i]
    assert result.provenance["limit"] == "plane-wave"
    norms = np.linalg.norm(result.polarization["t_s"], axis=1)
    assert np.allclose(norms[np.isfinite(norms)], 1.0, atol=1e-10)


def _narrow_probe(delta=12.5):
    return ProbeConfig((0.0, 0.0, 1.5), delta, xi=(0.0, 50.0, 0.0), flux_mode=FluxMode.BOX, box_length=1000.0)


def test_bell_x_cross_section_follows_transverse_weight():
    # real c: path cross terms drop out, leaving 1 - (kappa0_hat . c)^2 up to a constant
    target = TargetState((0.0, 50.0, 0.0), 0.25, TargetKind.TRIPLET, c=(1.0, 0.0, 0.0))
    probe = _narrow_probe()
    quad = QuadratureSpec(check_convergence=False)
    k_out = energy_shell(probe.k0_norm, target.J, Transition.T_S)
    ratios = []
    for theta in (1.6, 2.2, 2.8):
        for phi in (0.0, 0.25 * np.pi, 0.5 * np.pi):
            khat = direction(theta, phi)
            kappa0 = probe.k0_vec - k_out * khat
            weight = 1.0 - (kappa0[0] / np.linalg.norm(kappa0)) ** 2
            ratios.append(dcs_direction(probe, target, khat, Transition.T_S, quad) / weight)
    assert max(ratios) / min(ratios) - 1.0 < 5e-2


def test_mismatched_dimer_attenuates_narrow_packet():
    probe = _narrow_probe()
    khat = direction(1.2, 0.5 * np.pi)
    quad = QuadratureSpec(check_convergence=False)
    matched = TargetState((0.0, 50.0, 0.0), 0.25, TargetKind.THERMAL, temperature=10.0)
    # |d| = xi + 5 delta
    offset = TargetState((0.0, 112.5, 0.0), 0.25, TargetKind.THERMAL, temperature=10.0)
    near = dcs_direction(probe, matched, khat, Transition.T_S, quad)
    far = dcs_direction(probe, offset, khat, Transition.T_S, quad)
    assert near > 10.0 * far


def test_real_triplet_is_independent_of_path_separation_for_wide_packet():
    target = TargetState((0.0, 50.0, 0.0), 0.25, TargetKind.TRIPLET, c=(1.0, 0.0, 0.0))
    khat = direction(1.4483, 0.5 * np.pi)
    quad = QuadratureSpec(check_convergence=False)
    values = [
        dcs_direction(ProbeConfig((0.0, 0.0, 1.5), 1000.0, xi=(0.0, xi, 0.0)), target, khat, Transition.T_S, quad)
        for xi in (0.0, 5.0, 10.0, 20.0)
    ]
    assert min(values) > 0.0
    assert (max(values) - min(values)) / max(values) < 1e-3


# sin^2(kappa.d / 2) maxima in the y-z plane
@pytest.mark.parametrize("c", [(0.0, 1.0, 0.0), (0.0, 0.0, 1.0)])
@pytest.mark.parametrize("theta", [0.34893, 0.60596, 0.92261, 2.53563, 2.79266])
def test_polarization_matches_plane_wave_for_y_and_z_triplets(c, theta, up_up_probe):
    target = TargetState((0.0, 9.0, 0.0), 0.25, TargetKind.TRIPLET, c=c)
    packet = polarization_direction(up_up_probe, target, direction(theta, 0.5 * np.pi), Transition.T_S, PW_QUAD)
    spec = GridSpec(1, 1, theta, theta, 0.5 * np.pi, 2.5 * np.pi)
    plane_wave = pw_grid(up_up_probe, target, [Transition.T_S], spec, with_polarization=True)
    assert plane_wave.status == ["ok"]
    assert np.allclose(packet, plane_wave.polarization["t_s"][0], atol=1e-2)
