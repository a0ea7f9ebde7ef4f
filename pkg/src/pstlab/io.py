"""File formats: design JSON, profile CSV/PGM, matrix JSON, measurement CSV."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .dynamics import PropagationProfile
from .errors import InvalidRecordError
from .lattice import ArrayDesign
from .photonics import TWO_QUBIT_BASIS
from .tomography import PAULI_LABELS, MeasurementRecord


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_design(design: ArrayDesign, path: str | os.PathLike) -> None:
    atomic_write(path, dumps(design.to_dict()))


def load_design(path: str | os.PathLike) -> ArrayDesign:
    return ArrayDesign.from_dict(json.loads(Path(path).read_text()))


def _encode(m: np.ndarray) -> list[list[list[float]]]:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _decode(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def density_to_json(rho: np.ndarray) -> dict[str, Any]:
    basis = list(TWO_QUBIT_BASIS) if np.shape(rho)[0] == 4 else ["H", "V"]
    return {"rho": _encode(rho), "basis": basis}


def density_from_json(doc: dict[str, Any]) -> np.ndarray:
    return _decode(doc["rho"])


def chi_to_json(chi: np.ndarray) -> dict[str, Any]:
    return {"chi": _encode(chi), "basis": list(PAULI_LABELS)}


def chi_from_json(doc: dict[str, Any]) -> np.ndarray:
    return _decode(doc["chi"])


def profile_to_csv(profile: PropagationProfile) -> str:
    n = profile.intensities.shape[1]
    buf = io.StringIO()
    buf.write(",".join(["z_mm"] + [f"site_{i}" for i in range(1, n + 1)]) + "\n")
    for z, row in zip(profile.z_grid, profile.intensities):
        buf.write(",".join(f"{v:.17g}" for v in (z, *row)) + "\n")
    return buf.getvalue()


def profile_from_csv(text: str) -> PropagationProfile:
    rows = list(csv.reader(io.StringIO(text)))
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return PropagationProfile(z_grid=data[:, 0], intensities=data[:, 1:])


def profile_to_pgm(profile: PropagationProfile) -> str:
    """Plain-text grayscale heatmap, one pixel row per z step, one column per site."""
    img = profile.intensities
    peak = img.max()
    scaled = np.rint(255 * img / peak).astype(int) if peak > 0 else np.zeros(img.shape, dtype=int)
    lines = ["P2", f"{img.shape[1]} {img.shape[0]}", "255"]
    lines += [" ".join(str(v) for v in row) for row in scaled]
    return "\n".join(lines) + "\n"


def records_to_csv(records: Sequence[MeasurementRecord]) -> str:
    buf = io.StringIO()
    buf.write("setting,counts\n")
    for r in records:
        value = r.counts if r.counts is not None else repr(float(r.probability))
        buf.write(f"{r.setting},{value}\n")
    return buf.getvalue()


def records_from_csv(text: str) -> list[MeasurementRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["setting", "counts"]:
        raise InvalidRecordError(f"expected header setting,counts, got {reader.fieldnames}")
    out = []
    for row in reader:
        raw = row["counts"]
        if raw.strip().isdigit():
            out.append(MeasurementRecord(row["setting"], counts=int(raw)))
        else:
            out.append(MeasurementRecord(row["setting"], probability=float(raw)))
    return out
