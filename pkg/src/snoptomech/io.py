"""Deterministic CSV/JSON emission.

Every CSV is paired with a JSON sidecar holding the fully resolved run
configuration (physical parameters, grid, ensemble spec, seed, code
version, parameter hash).  Files contain no timestamps and floats are
written in shortest round-trip form, so identical configurations emit
byte-identical files and a sidecar replays its run exactly.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .params import PhysicalParams, physical_params_to_dict


def fmt(value) -> str:
    """Shortest round-trip representation for CSV cells."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if v != v:
        return "nan"
    return repr(v)


def canonical_json(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def params_hash(physical: dict) -> str:
    return hashlib.sha256(canonical_json(physical).encode()).hexdigest()[:16]


def write_curve_csv(path: Path, columns: dict[str, np.ndarray], comment: str) -> Path:
    """One curve per file; a leading `#` line documents the columns."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[n]).ravel() for n in names]
    n = len(arrays[0])
    if any(a.size != n for a in arrays):
        raise ValueError("column length mismatch")
    lines = [f"# {comment}", ",".join(names)]
    for i in range(n):
        lines.append(",".join(fmt(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_sidecar(csv_path: Path, run_config: dict) -> Path:
    side = Path(csv_path).with_suffix(".json")
    payload = dict(run_config)
    payload["code_version"] = __version__
    if "physical" in payload:
        payload["params_hash"] = params_hash(payload["physical"])
    side.write_text(canonical_json(payload))
    return side


def sidecar_for(physical: PhysicalParams, *, subcommand: str, extra: dict | None = None) -> dict:
    cfg = {"subcommand": subcommand, "physical": physical_params_to_dict(physical)}
    if extra:
        cfg.update(extra)
    return cfg


def split_complex(name: str, values: np.ndarray) -> dict[str, np.ndarray]:
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return {f"{name}_re": values.real, f"{name}_im": values.imag}
    return {name: values}
