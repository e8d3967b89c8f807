"""
Named run presets for the plane-wave and wave-packet parameter sets

A preset is a partial configuration document. The user's document is merged
on top of it key by key, so any preset value can be overridden.
"""

import copy
import math
from enum import Enum
from typing import Any, Dict, Optional

from .exceptions import ConfigurationError

_SQRT_HALF = 1.0 / math.sqrt(2.0)
_SIN_15 = (math.sqrt(3.0) - 1.0) / (2.0 * math.sqrt(2.0))
_COS_15 = (math.sqrt(3.0) + 1.0) / (2.0 * math.sqrt(2.0))


class Preset(str, Enum):
    """Pre-defined parameter sets"""
    PW_UP_UP = "pw-up-up"
    PW_UP_UP_TUNED = "pw-up-up-tuned"
    THERMAL_TS = "thermal-ts"
    THERMAL_TS_NARROW = "thermal-ts-narrow"
    THERMAL_TS_MATCHED = "thermal-ts-matched"
    THERMAL_TS_WIDE = "thermal-ts-wide"
    BELL_X = "bell-x"
    PARTIAL_TRIPLET = "partial-triplet"
    PRODUCT_TRIPLET = "product-triplet"
    PW_CALIBRATION = "pw-calibration"


# k = pi 1/A along z, dimer of 9 A along y, J = 1/4 meV, t->s from the
# product triplet c = (1, -i, 0)/sqrt(2); outgoing directions in the y-z plane
_PLANE_WAVE_UP_UP = {
    "command": "pw-response",
    "probe": {"k0": [0.0, 0.0, math.pi], "delta": 1000.0, "xi": [0.0, 0.0, 0.0], "phi": 0.0},
    "target": {
        "d": [0.0, 9.0, 0.0],
        "J": 0.25,
        "kind": "triplet",
        "c": [[_SQRT_HALF, 0.0], [0.0, -_SQRT_HALF], [0.0, 0.0]],
    },
    "channels": ["t->s"],
    "grid": {
        "n_theta": 91,
        "n_phi": 2,
        "theta_min": 0.01,
        "theta_max": math.pi,
        "phi_min": 0.5 * math.pi,
        "phi_max": 2.5 * math.pi,
    },
}

# |d| = xi = 50 A along y, k0 = 1.5e4 1/um along z, fixed box fluence
_REGIME_PROBE = {
    "k0": [0.0, 0.0, 1.5e4],
    "k0_unit": "inv_um",
    "xi": [0.0, 50.0, 0.0],
    "phi": 0.0,
    "flux_mode": "box",
    "box_length": 1000.0,
}
_REGIME_GRID = {"n_theta": 6, "n_phi": 8, "theta_min": 0.65, "theta_max": math.pi - 0.1}

_THERMAL_TS = {
    "command": "dcs-grid",
    "probe": {**_REGIME_PROBE, "delta": 50.0},
    "target": {"d": [0.0, 50.0, 0.0], "J": 0.25, "kind": "thermal", "temperature": 10.0},
    "channels": ["t->s"],
    "grid": _REGIME_GRID,
}


def _pure_triplet(c) -> Dict[str, Any]:
    return {
        "command": "dcs-grid",
        "probe": {**_REGIME_PROBE, "delta": 12.5},
        "target": {"d": [0.0, 50.0, 0.0], "J": 0.25, "kind": "triplet", "c": c},
        "channels": ["t->s"],
        "grid": _REGIME_GRID,
    }


PRESETS: Dict[Preset, Dict[str, Any]] = {
    Preset.PW_UP_UP: _PLANE_WAVE_UP_UP,
    Preset.PW_UP_UP_TUNED: {**_PLANE_WAVE_UP_UP, "probe": {**_PLANE_WAVE_UP_UP["probe"], "phi": 0.75 * math.pi}},
    Preset.THERMAL_TS: _THERMAL_TS,
    Preset.THERMAL_TS_NARROW: {**_THERMAL_TS, "probe": {**_THERMAL_TS["probe"], "delta": 12.5}},
    Preset.THERMAL_TS_MATCHED: _THERMAL_TS,
    Preset.THERMAL_TS_WIDE: {**_THERMAL_TS, "probe": {**_THERMAL_TS["probe"], "delta": 200.0}},
    Preset.BELL_X: _pure_triplet([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]),
    Preset.PARTIAL_TRIPLET: _pure_triplet([[_SIN_15, 0.0], [0.0, -_COS_15], [0.0, 0.0]]),
    Preset.PRODUCT_TRIPLET: _pure_triplet([[_SQRT_HALF, 0.0], [0.0, -_SQRT_HALF], [0.0, 0.0]]),
    Preset.PW_CALIBRATION: {
        "command": "flux-calib",
        "probe": {"k0": [0.0, 0.0, math.pi], "delta": 1000.0, "xi": [0.0, 0.0, 0.0], "flux_mode": "calibrated"},
        "target": {"d": [0.0, 9.0, 0.0], "J": 0.25, "kind": "thermal", "temperature": 10.0},
        "channels": ["t->s", "t->t"],
        "quadrature": {"radial_nodes": 16, "angular_nodes": 24, "check_convergence": False},
    },
}


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge override onto a copy of base; non-dict values replace."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


# Older preset names still accepted on the command line
PRESET_ALIASES: Dict[str, Preset] = {
    "fig4-pw-up-up": Preset.PW_UP_UP,
    "fig4-pw-up-up-tuned": Preset.PW_UP_UP_TUNED,
    "fig5-thermal-ts": Preset.THERMAL_TS,
    "fig5-thermal-ts-narrow": Preset.THERMAL_TS_NARROW,
    "fig5-thermal-ts-matched": Preset.THERMAL_TS_MATCHED,
    "fig5-thermal-ts-wide": Preset.THERMAL_TS_WIDE,
    "fig6-bell-x": Preset.BELL_X,
    "fig6-partial": Preset.PARTIAL_TRIPLET,
    "fig6-product": Preset.PRODUCT_TRIPLET,
}


def resolve_preset(name: str) -> Preset:
    """Preset for a name or one of its aliases."""
    if name in PRESET_ALIASES:
        return PRESET_ALIASES[name]
    try:
        return Preset(name)
    except ValueError:
        known = ", ".join([p.value for p in Preset] + list(PRESET_ALIASES))
        raise ConfigurationError(f"Unknown preset '{name}'", [("preset", f"expected one of: {known}")])


def get_preset(name: str) -> Dict[str, Any]:
    return copy.deepcopy(PRESETS[resolve_preset(name)])


def expand_preset(document: Dict[str, Any], name: Optional[str] = None) -> Dict[str, Any]:
    """
    Merge a document onto its preset. `name` (e.g. from the command line)
    takes precedence over the document's own "preset" key.
    """
    name = name or document.get("preset")
    if not name:
        return copy.deepcopy(document)
    merged = deep_merge(get_preset(name), document)
    merged["preset"] = name
    return merged
