"""
Command-line front-end: configuration loading, subcommand dispatch and
CSV / JSON emission
"""

import argparse
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .config import DEFAULT_OUTPUT_DIR, DEFAULT_THREADS, kinetic_energy
from .dimer import TargetKind, TargetState, Transition
from .engine import (
    FORWARD_CONE_WIDTHS,
    DcsGrid,
    dcs_direction,
    dcs_grid,
    direction,
    energy_shell,
    pw_grid,
    pw_limit_dcs,
)
from .exceptions import ConfigurationError, ConvergenceError, ScatteringError
from .grid_writer import build_sidecar, grid_frame, ordered_labels, status_report, write_outputs
from .multiparticle import (
    BasisKind,
    BasisTag,
    DetectorState,
    PairInState,
    ToyLattice,
    TwoFermionCrossSection,
    TwoFermionPoint,
    basis_eval,
    brute_force_matrix_element,
    out_state_eval,
    reconstruct_out_state,
    two_body_matrix_element,
)
from .oracle import oracle_erasure_overlap, oracle_response
from .probe import FluxMode, ProbeConfig, time_integrated_flux
from .response import Channel, erasure_overlap, response_term
from .schemas import Command, RunConfig, canonical_json, parse_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_WARNINGS = 2

# Relative-deviation denominators never drop below this
DEVIATION_FLOOR = 1e-12

# Calibration deviations are measured against max(|pw|, this fraction of the largest pw value)
CALIBRATION_FLOOR = 0.01

ANTISYMMETRY_TOL = 1e-14
RECONSTRUCTION_TOL = 1e-12
MATRIX_ELEMENT_TOL = 1e-10

COMMAND_HELP = {
    Command.PW_RESPONSE: "Plane-wave cross-section map",
    Command.DCS_GRID: "Wave-packet cross-section on a direction grid",
    Command.POLARIZATION: "Wave-packet cross-section and scattered polarization",
    Command.ORACLE_CHECK: "Closed forms against the dense-matrix reference",
    Command.FLUX_CALIB: "Engine against the plane-wave limit at random directions",
    Command.TWO_FERMION_CHECK: "Two-fermion basis and matrix-element self-checks",
}


@dataclass
class RunOutcome:
    exit_code: int
    artifacts: List[Path] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)


def phase_points(phi0: float, n: int) -> np.ndarray:
    """Uniform entangler phases over one period [phi0, phi0 + pi)."""
    return phi0 + np.pi * np.arange(n) / n


def average_grids(runs: Sequence[DcsGrid]) -> DcsGrid:
    """
    Node-wise phase average. Cross-sections are averaged directly and
    polarizations weighted by their channel cross-section.
    """
    if len(runs) == 1:
        return runs[0]
    first = runs[0]
    dcs = {label: np.mean(np.stack([r.dcs[label] for r in runs]), axis=0) for label in first.dcs}
    polarization = {}
    for label in first.polarization:
        weights = np.stack([r.dcs[label] for r in runs])[:, :, None]
        values = np.stack([r.polarization[label] for r in runs])
        with np.errstate(invalid="ignore", divide="ignore"):
            polarization[label] = np.sum(weights * values, axis=0) / np.sum(weights, axis=0)
    status = []
    for node in range(len(first.status)):
        flags: List[str] = []
        for r in runs:
            for flag in r.status[node].split(";"):
                if flag != "ok" and flag not in flags:
                    flags.append(flag)
        status.append(";".join(flags) if flags else "ok")
    return DcsGrid(first.theta, first.phi, dcs, polarization, status, dict(first.provenance))


def _grid_summary(grid: DcsGrid, probe: ProbeConfig, target: TargetState, units: str) -> Dict[str, Any]:
    summary: Dict[str, Any] = {
        "units": units,
        "flux_mode": probe.flux_mode.value,
        "time_integrated_flux": time_integrated_flux(probe),
        "channels": {},
    }
    for label in ordered_labels(list(grid.dcs)):
        transition = Transition(label.replace("_", "->"))
        values = grid.dcs[label]
        finite = values[np.isfinite(values)]
        k_out = energy_shell(probe.k0_norm, target.J, transition)
        high = float(finite.max()) if finite.size else None
        low = float(finite.min()) if finite.size else None
        summary["channels"][label] = {
            "max": high,
            "min": low,
            # relative (theta, phi) variation over the grid
            "variation": (high - low) / high if high else None,
            "outgoing_energy_meV": None if k_out is None else kinetic_energy(k_out),
        }
    return summary


def run_grid(config: RunConfig, threads: int, out_dir: Path, stem: str) -> RunOutcome:
    """pw-response, dcs-grid and polarization share one path."""
    base_probe = config.probe.to_probe()
    target = config.target.to_target()
    grid_spec = config.grid.to_grid()
    quad = config.quadrature.to_quadrature()
    with_pol = config.polarization or config.command is Command.POLARIZATION
    n_phase = config.phase_average.points if config.phase_average.enabled else 1
    phases = phase_points(base_probe.phi, n_phase)

    runs = []
    for phi in phases:
        probe = base_probe.with_phi(phi) if n_phase > 1 else base_probe
        if config.command is Command.PW_RESPONSE:
            runs.append(pw_grid(probe, target, config.channels, grid_spec, with_pol))
        else:
            runs.append(
                dcs_grid(probe, target, config.channels, grid_spec, quad, threads, with_pol, config.echo_phi)
            )
    grid = average_grids(runs)
    grid.provenance["phase_points"] = [float(p) for p in phases]

    frame = grid_frame(grid, config.units)
    report = status_report(grid)
    summary = _grid_summary(grid, base_probe, target, config.units)
    sidecar = build_sidecar(
        config.command.value, json.loads(canonical_json(config)), report, summary, grid.provenance
    )
    artifacts = list(write_outputs(frame, sidecar, out_dir, stem))

    print(f"✅ {len(frame)} grid nodes x {len(config.channels)} channel(s)")
    for label, info in summary["channels"].items():
        print(f"   dcs_{label}: max={info['max']}, min={info['min']} ({config.units})")
    if report["flagged"]:
        print(f"⚠️ {len(report['flagged'])} flagged node(s), {report['unconverged']} unconverged")
    exit_code = EXIT_WARNINGS if grid.has_warnings else EXIT_OK
    return RunOutcome(exit_code, artifacts, summary)


def _random_unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _random_c(rng: np.random.Generator) -> np.ndarray:
    c = rng.normal(size=3) + 1j * rng.normal(size=3)
    return c / np.linalg.norm(c)


def _oracle_targets(rng: np.random.Generator) -> List[TargetState]:
    d = tuple(rng.uniform(2.0, 10.0) * _random_unit(rng))
    J = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 1.0))
    return [
        TargetState(d, J, TargetKind.TRIPLET, c=tuple(_random_c(rng))),
        TargetState(d, J, TargetKind.SINGLET),
        TargetState(d, J, TargetKind.THERMAL, temperature=float(rng.uniform(0.5, 30.0))),
        TargetState(d, J, TargetKind.THERMAL, temperature=0.0),
    ]


def _deviation(closed: complex, reference: complex) -> float:
    return abs(closed - reference) / max(abs(reference), DEVIATION_FLOOR)


def run_oracle_check(config: RunConfig, out_dir: Path, stem: str) -> RunOutcome:
    """Random draws of (kappa1, kappa2, Theta1, Theta2, c) per channel and regime, plus the erasure overlap."""
    rows = []
    for seed in range(config.checks.seeds):
        rng = np.random.default_rng(seed)
        kappa1 = rng.uniform(0.2, 3.0) * _random_unit(rng)
        kappa2 = rng.uniform(0.2, 3.0) * _random_unit(rng)
        theta1, theta2 = rng.uniform(0.0, 2.0 * np.pi, size=2)
        alpha = str(rng.choice(["x", "y", "z"]))
        for target in _oracle_targets(rng):
            for transition in Transition:
                channel = Channel.for_target(target, transition)
                reference = oracle_response(kappa1, kappa2, theta1, theta2, target, channel, alpha)
                if reference.empty_channel:
                    continue
                closed = response_term(channel, kappa1, kappa2, theta1, theta2, target, alpha)
                rows.append(
                    (seed, transition.label, f"{target.kind.value}:{channel.regime.value}", closed, reference.value)
                )
        c = _random_c(rng)
        d = rng.uniform(2.0, 10.0) * _random_unit(rng)
        closed = erasure_overlap(c, kappa1, alpha, d)
        reference = oracle_erasure_overlap(c, kappa1, d, alpha)
        rows.append((seed, "erasure", "triplet:pure-T0", closed, reference))

    frame = pd.DataFrame(
        [
            {
                "seed": seed,
                "check": check,
                "regime": regime,
                "closed_re": closed.real,
                "closed_im": closed.imag,
                "oracle_re": complex(reference).real,
                "oracle_im": complex(reference).imag,
                "rel_dev": _deviation(closed, reference),
            }
            for seed, check, regime, closed, reference in rows
        ]
    )
    worst = float(frame["rel_dev"].max())
    passed = worst < config.checks.threshold
    summary = {
        "cases": len(frame),
        "max_relative_deviation": worst,
        "threshold": config.checks.threshold,
        "passed": passed,
    }
    sidecar = build_sidecar(config.command.value, json.loads(canonical_json(config)), summary=summary)
    artifacts = list(write_outputs(frame, sidecar, out_dir, stem))

    icon = "✅" if passed else "❌"
    print(f"{icon} {len(frame)} oracle comparisons over {config.checks.seeds} seeds")
    print(f"   max relative deviation: {worst:.3e} (threshold {config.checks.threshold:.1e})")
    return RunOutcome(EXIT_OK if passed else EXIT_ERROR, artifacts, summary)


def _calibration_directions(probe: ProbeConfig, count: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Uniform random directions at least twice the forward-cone angle away from k0."""
    axis = probe.k0_vec / probe.k0_norm
    limit = 2.0 * FORWARD_CONE_WIDTHS * probe.sigma_k / probe.k0_norm
    directions = []
    while len(directions) < count:
        khat = _random_unit(rng)
        if np.arccos(np.clip(khat @ axis, -1.0, 1.0)) > limit:
            directions.append(khat)
    return directions


def run_flux_calibration(config: RunConfig, out_dir: Path, stem: str) -> RunOutcome:
    probe = config.probe.to_probe()
    target = config.target.to_target()
    quad = config.quadrature.to_quadrature()
    if probe.flux_mode is not FluxMode.CALIBRATED:
        print(f"⚠️ flux_mode is '{probe.flux_mode.value}'; the ratio only approaches 1 for 'calibrated'")
    rng = np.random.default_rng(0)
    rows = []
    warnings = False
    for khat in _calibration_directions(probe, config.checks.directions, rng):
        theta = float(np.arccos(np.clip(khat[2], -1.0, 1.0)))
        phi = float(np.arctan2(khat[1], khat[0]) % (2.0 * np.pi))
        for transition in config.channels:
            try:
                engine_value = dcs_direction(probe, target, khat, transition, quad)
            except ConvergenceError as e:
                logger.warning("Calibration node unconverged: %s", e)
                engine_value = e.refined
                warnings = True
            pw_value = pw_limit_dcs(probe, target, khat, transition)
            rows.append(
                {
                    "theta": theta,
                    "phi": phi,
                    "channel": Transition(transition).label,
                    "dcs_engine": engine_value,
                    "dcs_pw": pw_value,
                }
            )
    frame = pd.DataFrame(rows)
    scale = CALIBRATION_FLOOR * float(frame["dcs_pw"].abs().max())
    frame["deviation"] = (frame["dcs_engine"] - frame["dcs_pw"]).abs() / np.maximum(frame["dcs_pw"].abs(), scale)
    ratio = float(frame["dcs_engine"].sum() / frame["dcs_pw"].sum())
    worst = float(frame["deviation"].max())
    passed = worst <= config.checks.calibration_tolerance
    summary = {
        "ratio": ratio,
        "max_deviation": worst,
        "tolerance": config.checks.calibration_tolerance,
        "flux_mode": probe.flux_mode.value,
        "passed": passed,
    }
    sidecar = build_sidecar(config.command.value, json.loads(canonical_json(config)), summary=summary)
    artifacts = list(write_outputs(frame, sidecar, out_dir, stem))

    icon = "✅" if passed else "❌"
    print(f"{icon} calibration ratio engine/pw = {ratio:.4f} over {len(frame)} direction-channel pairs")
    print(f"   max deviation: {worst:.3e} (tolerance {config.checks.calibration_tolerance:.1e})")
    if not passed:
        return RunOutcome(EXIT_ERROR, artifacts, summary)
    return RunOutcome(EXIT_WARNINGS if warnings else EXIT_OK, artifacts, summary)


def _gaussian_pair_potential(width: float):
    def potential(r_A: np.ndarray, r_B: np.ndarray) -> np.ndarray:
        return np.exp(-np.sum((r_A - r_B) ** 2, axis=-1) / width**2)

    return potential


def _random_axis(rng: np.random.Generator):
    return (float(rng.uniform(0.0, np.pi)), float(rng.uniform(0.0, 2.0 * np.pi)))


def _random_point(rng: np.random.Generator, length: float) -> TwoFermionPoint:
    return TwoFermionPoint(
        rng.uniform(0.0, length, size=3), rng.uniform(0.0, length, size=3), int(rng.integers(2)), int(rng.integers(2))
    )


def _distinct_modes(rng: np.random.Generator, lattice: ToyLattice, count: int) -> List[tuple]:
    modes: List[tuple] = []
    while len(modes) < count:
        m = tuple(float(x) for x in lattice.momentum(rng.integers(-2, 3, size=3)))
        if m not in modes:
            modes.append(m)
    return modes


def run_two_fermion_check(config: RunConfig, out_dir: Path, stem: str) -> RunOutcome:
    lattice = ToyLattice(config.checks.lattice_side, config.checks.lattice_length)
    L = lattice.length
    rng = np.random.default_rng(0)

    antisymmetry = 0.0
    for _ in range(1000):
        k_A, k_B = _distinct_modes(rng, lattice, 2)
        xi = tuple(rng.uniform(-L, L, size=3))
        p = _random_point(rng, L)
        swapped = TwoFermionPoint(p.r_B, p.r_A, p.sigma_B, p.sigma_A)
        for kind in (
            BasisKind(BasisTag.A, k_A, k_B, xi, alpha=_random_axis(rng)),
            BasisKind(BasisTag.B, k_A, k_B, xi, alpha=_random_axis(rng)),
            BasisKind(BasisTag.C, k_A, k_B, nu=int(rng.integers(2)), alpha=_random_axis(rng)),
        ):
            antisymmetry = max(antisymmetry, abs(basis_eval(kind, p, L) + basis_eval(kind, swapped, L)))

    reconstruction = 0.0
    for _ in range(200):
        k_A, k_B = _distinct_modes(rng, lattice, 2)
        out = DetectorState(k_A, k_B, _random_axis(rng), _random_axis(rng), int(rng.integers(2)), int(rng.integers(2)))
        p = _random_point(rng, L)
        alpha = _random_axis(rng)
        reconstruction = max(reconstruction, abs(out_state_eval(out, p, L) - reconstruct_out_state(out, p, L, alpha)))

    potential = _gaussian_pair_potential(0.3 * L)
    modes = _distinct_modes(rng, lattice, 2)
    amplitudes = tuple(complex(rng.normal(), rng.normal()) for _ in modes)
    in_state = PairInState(tuple(modes), amplitudes, tuple(rng.uniform(-L, L, size=3)), _random_axis(rng))
    out_modes = _distinct_modes(rng, lattice, 2)
    matrix_element = 0.0
    for nu in (0, 1):
        for nu_prime in (0, 1):
            out = DetectorState(out_modes[0], out_modes[1], _random_axis(rng), _random_axis(rng), nu, nu_prime)
            assembled = two_body_matrix_element(potential, in_state, out, lattice)
            reference = brute_force_matrix_element(potential, in_state, out, lattice)
            matrix_element = max(matrix_element, _deviation(assembled, reference))

    cross_section = TwoFermionCrossSection(
        potential, in_state, modes[1], modes[0], _random_axis(rng), _random_axis(rng), 1.0 / L**2, 1.0 / L**2, lattice
    ).evaluate()

    checks = [
        ("antisymmetry", antisymmetry, ANTISYMMETRY_TOL),
        ("out_state_reconstruction", reconstruction, RECONSTRUCTION_TOL),
        ("matrix_element_vs_lattice", matrix_element, MATRIX_ELEMENT_TOL),
    ]
    frame = pd.DataFrame(
        [{"check": name, "value": value, "threshold": tol, "passed": value < tol} for name, value, tol in checks]
    )
    passed = bool(frame["passed"].all())
    summary = {
        "checks": {name: value for name, value, _ in checks},
        "pair_cross_section": cross_section,
        "lattice": {"n": lattice.n, "length": lattice.length},
        "passed": passed,
    }
    sidecar = build_sidecar(config.command.value, json.loads(canonical_json(config)), summary=summary)
    artifacts = list(write_outputs(frame, sidecar, out_dir, stem))

    for name, value, tol in checks:
        print(f"{'✅' if value < tol else '❌'} {name}: {value:.3e} (threshold {tol:.0e})")
    print(f"   pair cross-section on the toy mode set: {cross_section:.6e}")
    return RunOutcome(EXIT_OK if passed else EXIT_ERROR, artifacts, summary)


def run(config: RunConfig, threads: int = 1, out_dir: Optional[Path] = None) -> RunOutcome:
    """
    Execute one validated configuration and write its CSV and JSON sidecar.

    Returns:
        RunOutcome with exit code 0 (success), 2 (convergence warnings) or 1 (failed check)
    """
    out_dir = Path(out_dir or config.output_dir or DEFAULT_OUTPUT_DIR)
    stem = config.preset or config.command.value
    logger.info("Running %s -> %s/%s.*", config.command.value, out_dir, stem)
    if config.command is Command.ORACLE_CHECK:
        return run_oracle_check(config, out_dir, stem)
    if config.command is Command.FLUX_CALIB:
        return run_flux_calibration(config, out_dir, stem)
    if config.command is Command.TWO_FERMION_CHECK:
        return run_two_fermion_check(config, out_dir, stem)
    return run_grid(config, threads, out_dir, stem)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dimer-scattering", description="Entangled-probe neutron scattering from a spin dimer"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in Command:
        sub = subparsers.add_parser(command.value, help=COMMAND_HELP[command])
        sub.add_argument("--config", type=Path, help="JSON configuration document")
        sub.add_argument("--out", type=Path, help="Output directory")
        sub.add_argument("--threads", type=int, help="Worker threads for grid evaluation")
        sub.add_argument("--preset", help="Named parameter set merged under the document")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    text = args.config.read_text(encoding="utf-8") if args.config else ""
    return parse_config(text, preset=args.preset, overrides={"command": args.command})


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except ConfigurationError as e:
        print(f"❌ Configuration error: {e.args[0]}")
        for path, message in e.errors:
            print(f"   {path}: {message}")
        return EXIT_ERROR
    except OSError as e:
        print(f"❌ Cannot read configuration: {e}")
        return EXIT_ERROR

    threads = args.threads if args.threads is not None else DEFAULT_THREADS
    print(f"🚀 {config.command.value}" + (f" (preset {config.preset})" if config.preset else ""))
    try:
        outcome = run(config, threads=threads, out_dir=args.out)
    except OSError as e:
        print(f"❌ Cannot write output: {e}")
        return EXIT_ERROR
    except ScatteringError as e:
        logger.exception("Run failed")
        print(f"❌ {type(e).__name__}: {e}")
        return EXIT_ERROR

    for path in outcome.artifacts:
        print(f"💾 {path}")
    return outcome.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
