"""
CSV and JSON sidecar emission for grid and check results
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import __version__
from .config import R0_SQUARED_BARN
from .dimer import Transition
from .engine import DcsGrid

logger = logging.getLogger(__name__)

# Bump when the column layout changes
CSV_SCHEMA_VERSION = "1"

CHANNEL_ORDER = (Transition.S_T, Transition.T_S, Transition.T_T)
CSV_OPTIONS = dict(index=False, float_format="%.12e", lineterminator="\n", encoding="utf-8", na_rep="nan")


def unit_scale(units: str) -> float:
    """Multiplier from r0^2 to the requested cross-section unit."""
    if units == "r0^2":
        return 1.0
    if units == "barn":
        return R0_SQUARED_BARN
    raise ValueError(f"Unknown cross-section unit: {units}")


def ordered_labels(labels: Sequence[str]) -> List[str]:
    """Channel labels in the fixed s_t, t_s, t_t column order."""
    return [t.label for t in CHANNEL_ORDER if t.label in labels]


def grid_frame(grid: DcsGrid, units: str = "r0^2") -> pd.DataFrame:
    """
    One row per grid node:
    theta, phi, dcs_<channel>..., dcs_total, [pol_<channel>_x/y/z...], status
    """
    scale = unit_scale(units)
    labels = ordered_labels(list(grid.dcs))
    columns: Dict[str, Any] = {"theta": grid.theta, "phi": grid.phi}
    for label in labels:
        columns[f"dcs_{label}"] = scale * grid.dcs[label]
    columns["dcs_total"] = scale * np.sum(np.stack([grid.dcs[label] for label in labels]), axis=0)
    for label in ordered_labels(list(grid.polarization)):
        for i, axis in enumerate("xyz"):
            columns[f"pol_{label}_{axis}"] = grid.polarization[label][:, i]
    columns["status"] = list(grid.status)
    return pd.DataFrame(columns)


def status_report(grid: DcsGrid) -> Dict[str, Any]:
    flagged = grid.flagged()
    return {
        "nodes": len(grid.status),
        "flagged": [
            {"index": i, "theta": float(grid.theta[i]), "phi": float(grid.phi[i]), "status": s} for i, s in flagged
        ],
        "unconverged": sum(1 for _, s in flagged if "unconverged" in s),
        "forward_cone": sum(1 for _, s in flagged if s == "forward-cone"),
    }


def build_sidecar(
    command: str,
    config: Dict[str, Any],
    report: Optional[Dict[str, Any]] = None,
    summary: Optional[Dict[str, Any]] = None,
    provenance: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    return {
        "schema_version": CSV_SCHEMA_VERSION,
        "package_version": __version__,
        "command": command,
        "config": config,
        "convergence": report or {},
        "summary": summary or {},
        "provenance": provenance or {},
    }


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")


def write_outputs(frame: pd.DataFrame, sidecar: Dict[str, Any], out_dir, stem: str) -> Tuple[Path, Path]:
    """
    Write <stem>.csv and <stem>.json under out_dir.

    Args:
        frame: Table to write, columns already in schema order
        sidecar: Provenance document
        out_dir: Output directory, created if missing
        stem: File name without extension

    Returns:
        (csv_path, json_path)
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    frame.to_csv(csv_path, **CSV_OPTIONS)
    text = json.dumps(sidecar, indent=2, sort_keys=True, default=_json_default)
    json_path.write_text(text + "\n", encoding="utf-8", newline="\n")
    logger.info("Wrote %s (%d rows) and %s", csv_path, len(frame), json_path)
    return csv_path, json_path
