"""Output writers shared by the command line.

Every file carries the run configuration, the library version and the seed.
JSON files also carry a UTC timestamp; that field is the only one that
differs between two runs with the same configuration.
"""

from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__


def _plain(obj):
    """Convert numpy scalars/arrays, Fractions and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def metadata(command: str, config: dict, seed: int) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": _plain(config),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def write_json(path, command: str, config: dict, seed: int, payload: dict) -> Path:
    path = Path(path)
    doc = {"meta": metadata(command, config, seed), **_plain(payload)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path, command: str, config: dict, seed: int, rows, columns=None) -> Path:
    """Rows of dicts (or sequences with ``columns``) with '#'-prefixed provenance lines."""
    path = Path(path)
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with path.open("w", newline="") as fh:
        fh.write(f"# bchlab {__version__} command={command} seed={seed}\n")
        fh.write(f"# config={json.dumps(_plain(config), sort_keys=True)}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            vals = [r[c] for c in columns] if isinstance(r, dict) else list(r)
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in vals])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV written by ``write_csv`` (provenance lines skipped)."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    header = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2) if len(lines) > 1 else np.empty((0, len(header)))
    return header, data
