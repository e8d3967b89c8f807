"""
Pydantic schemas for run configuration documents
"""

import json
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .config import UNIT_TOL, to_angstrom, to_inverse_angstrom
from .dimer import TargetKind, TargetState, Transition
from .engine import GridSpec, QuadratureSpec
from .exceptions import ConfigurationError
from .presets import expand_preset
from .probe import FluxMode, ProbeConfig

LengthUnit = Literal["angstrom", "nm", "um"]
InverseLengthUnit = Literal["inv_angstrom", "inv_nm", "inv_um"]
ComplexEntry = Union[float, Tuple[float, float]]
Vector3 = Tuple[float, float, float]


class Command(str, Enum):
    PW_RESPONSE = "pw-response"
    DCS_GRID = "dcs-grid"
    POLARIZATION = "polarization"
    ORACLE_CHECK = "oracle-check"
    FLUX_CALIB = "flux-calib"
    TWO_FERMION_CHECK = "two-fermion-check"


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProbeBlock(StrictModel):
    """Entangled probe; lengths in length_unit, k0 in k0_unit"""
    k0: Vector3 = Field(..., description="Mean wavevector")
    k0_unit: InverseLengthUnit = "inv_angstrom"
    delta: float = Field(..., gt=0, description="Packet width")
    xi: Vector3 = Field((0.0, 0.0, 0.0), description="Entanglement vector")
    length_unit: LengthUnit = "angstrom"
    phi: float = Field(0.0, description="Entangler phase (rad)")
    alpha: Literal["x", "y", "z"] = "x"
    flux_mode: FluxMode = FluxMode.ANALYTIC
    box_length: Optional[float] = Field(None, gt=0, description="Box side for the box flux mode")

    @field_validator("k0")
    @classmethod
    def k0_nonzero(cls, v: Vector3) -> Vector3:
        if not any(v):
            raise ValueError("k0 must be nonzero")
        return v

    @model_validator(mode="after")
    def box_needs_length(self):
        if self.flux_mode is FluxMode.BOX and self.box_length is None:
            raise ValueError("flux_mode 'box' requires box_length")
        return self

    def to_probe(self, phi: Optional[float] = None) -> ProbeConfig:
        box = None if self.box_length is None else to_angstrom(self.box_length, self.length_unit)
        return ProbeConfig(
            k0=tuple(to_inverse_angstrom(np.array(self.k0), self.k0_unit)),
            delta=to_angstrom(self.delta, self.length_unit),
            xi=tuple(to_angstrom(np.array(self.xi), self.length_unit)),
            phi=self.phi if phi is None else phi,
            alpha=self.alpha,
            flux_mode=self.flux_mode,
            box_length=box,
        )


class TargetBlock(StrictModel):
    """Dimer target; c entries are numbers or [re, im] pairs"""
    d: Vector3 = Field(..., description="Dimer vector")
    length_unit: LengthUnit = "angstrom"
    J: float = Field(..., description="Exchange constant (meV)")
    kind: TargetKind = TargetKind.THERMAL
    temperature: Optional[float] = Field(None, ge=0, description="Temperature (K)")
    c: Optional[Tuple[ComplexEntry, ComplexEntry, ComplexEntry]] = None

    @field_validator("d")
    @classmethod
    def d_nonzero(cls, v: Vector3) -> Vector3:
        if not any(v):
            raise ValueError("d must be nonzero")
        return v

    @field_validator("c")
    @classmethod
    def c_normalized(cls, v):
        if v is None:
            return v
        vec = _complex_vector(v)
        deviation = abs(np.vdot(vec, vec).real - 1.0)
        if deviation > UNIT_TOL:
            raise ValueError(f"c is not normalized (norm deviation {deviation:.3e})")
        return v

    @model_validator(mode="after")
    def kind_requirements(self):
        if self.kind is TargetKind.THERMAL and self.temperature is None:
            raise ValueError("thermal target requires temperature")
        if self.kind is TargetKind.TRIPLET and self.c is None:
            raise ValueError("triplet target requires c")
        return self

    def to_target(self) -> TargetState:
        return TargetState(
            d=tuple(to_angstrom(np.array(self.d), self.length_unit)),
            J=self.J,
            kind=self.kind,
            temperature=self.temperature,
            c=None if self.c is None else tuple(_complex_vector(self.c)),
        )


class GridBlock(StrictModel):
    """Outgoing direction grid, uniform in cos(theta) and phi"""
    n_theta: int = Field(4, ge=1)
    n_phi: int = Field(4, ge=1)
    theta_min: float = Field(0.0, ge=0, le=np.pi)
    theta_max: float = Field(np.pi, ge=0, le=np.pi)
    phi_min: float = 0.0
    phi_max: float = 2.0 * np.pi

    def to_grid(self) -> GridSpec:
        return GridSpec(**self.model_dump())


class QuadratureBlock(StrictModel):
    """Packet quadrature and refinement contract"""
    radial_nodes: int = Field(32, ge=4)
    angular_nodes: int = Field(40, ge=4)
    truncation: float = Field(6.0, ge=3)
    refinement_factor: int = Field(2, ge=2)
    tolerance: float = Field(1e-3, gt=0)
    check_convergence: bool = True

    def to_quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(**self.model_dump())


class PhaseAverageBlock(StrictModel):
    """Average over the entangler phase on a uniform grid over one period"""
    enabled: bool = False
    points: int = Field(8, ge=1)


class ChecksBlock(StrictModel):
    """Parameters of the self-check commands"""
    seeds: int = Field(100, ge=1)
    threshold: float = Field(1e-10, gt=0)
    directions: int = Field(20, ge=1)
    calibration_tolerance: float = Field(0.01, gt=0)
    lattice_side: int = Field(4, ge=2, le=8)
    lattice_length: float = Field(10.0, gt=0)


class RunConfig(StrictModel):
    """Complete run document"""
    command: Command
    preset: Optional[str] = None
    probe: Optional[ProbeBlock] = None
    target: Optional[TargetBlock] = None
    channels: List[Transition] = Field(default_factory=lambda: [Transition.T_S], min_length=1)
    grid: GridBlock = Field(default_factory=GridBlock)
    quadrature: QuadratureBlock = Field(default_factory=QuadratureBlock)
    units: Literal["r0^2", "barn"] = "r0^2"
    polarization: bool = False
    echo_phi: Optional[float] = None
    phase_average: PhaseAverageBlock = Field(default_factory=PhaseAverageBlock)
    checks: ChecksBlock = Field(default_factory=ChecksBlock)
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def blocks_for_command(self):
        needs_physics = self.command not in (Command.ORACLE_CHECK, Command.TWO_FERMION_CHECK)
        if needs_physics and (self.probe is None or self.target is None):
            raise ValueError(f"command '{self.command.value}' requires probe and target blocks")
        return self


def parse_config(text: str, preset: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Validate a JSON configuration document.

    Args:
        text: JSON document
        preset: Preset name taking precedence over the document's "preset" key
        overrides: Top-level keys applied last (the CLI subcommand, for example)

    Raises:
        ConfigurationError: with one (dotted.path, message) pair per problem
    """
    try:
        document = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigurationError("Configuration is not valid JSON", [("<document>", str(e))])
    if not isinstance(document, dict):
        raise ConfigurationError("Configuration must be a JSON object", [("<document>", type(document).__name__)])
    document = expand_preset(document, preset)
    if overrides:
        document.update(overrides)
    try:
        return RunConfig.model_validate(document)
    except ValidationError as e:
        errors = [(".".join(str(part) for part in err["loc"]) or "<document>", err["msg"]) for err in e.errors()]
        raise ConfigurationError(f"Invalid configuration ({len(errors)} error(s))", errors)


def canonical_json(config: RunConfig) -> str:
    """Sorted-key JSON of the full config; parse_config(canonical_json(c)) == c."""
    return json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True)


def _complex_vector(entries) -> np.ndarray:
    values = []
    for entry in entries:
        if isinstance(entry, (tuple, list)):
            values.append(complex(entry[0], entry[1]))
        else:
            values.append(complex(entry))
    return np.array(values, dtype=complex)
