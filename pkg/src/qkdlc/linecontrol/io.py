"""Reflectogram files: ``position_km,power_db`` CSV plus a JSON sidecar.

The sidecar sits next to the CSV with a ``.json`` suffix and holds
``{"spacing_km", "noise_sigma_db", "length_km"}``.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..errors import DomainError
from .reflectometry import Reflectogram

CSV_HEADER = ("position_km", "power_db")


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def save_reflectogram(trace: Reflectogram, csv_path) -> Path:
    """Write ``trace`` to ``csv_path`` and its sidecar; returns the sidecar path."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for x, p in zip(trace.positions, trace.samples):
            w.writerow((f"{x:.17g}", f"{p:.17g}"))
    meta = {
        "spacing_km": trace.sample_spacing_km,
        "noise_sigma_db": trace.noise_sigma_db,
        "length_km": trace.length_km,
    }
    side = sidecar_path(csv_path)
    side.write_text(json.dumps(meta, indent=2) + "\n")
    return side


def load_reflectogram(csv_path) -> Reflectogram:
    csv_path = Path(csv_path)
    meta = json.loads(sidecar_path(csv_path).read_text())
    with csv_path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(h.strip() for h in rows[0]) != CSV_HEADER:
        raise DomainError(f"{csv_path}: expected header {','.join(CSV_HEADER)}")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
    if data.size == 0:
        raise DomainError(f"{csv_path}: no samples")
    spacing = float(meta["spacing_km"])
    trace = Reflectogram(spacing, data[:, 1], float(meta.get("noise_sigma_db", 0.0)))
    if not math.isclose(trace.length_km, float(meta["length_km"]), rel_tol=1e-9, abs_tol=1e-9):
        raise DomainError(
            f"{csv_path}: {len(trace)} samples at {spacing} km do not span length_km={meta['length_km']}"
        )
    if not np.allclose(data[:, 0], trace.positions, rtol=1e-9, atol=1e-9):
        raise DomainError(f"{csv_path}: positions are not evenly spaced at {spacing} km")
    return trace
