"""Canonical file formats: image containers, endmember CSVs, parameter blobs.

The image container is a one-line UTF-8 JSON header followed by raw
little-endian float32 samples in row-major pixel order, channel fastest.
The same container carries cubes (kind "cube"), abundance sets (kind
"abundance"), and small score maps (kind "attention").
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import AbundanceSet, ConfigError, DimensionError, EndmemberMatrix, HsiCube

MAGIC = "HSIC1"
_KINDS = ("cube", "abundance", "attention")


def save_container(path: str | Path, values: np.ndarray, kind: str) -> None:
    """Write (rows, cols, channels) values as float32 under a JSON header."""
    if kind not in _KINDS:
        raise ConfigError(f"unknown container kind {kind!r}")
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 3:
        raise DimensionError(f"container values must be 3-d, got shape {v.shape}")
    header = {
        "magic": MAGIC,
        "rows": int(v.shape[0]),
        "cols": int(v.shape[1]),
        "channels": int(v.shape[2]),
        "dtype": "f32le",
        "order": "row-major-pixel-then-channel",
        "kind": kind,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        f.write(b"\n")
        f.write(v.astype("<f4").tobytes(order="C"))


def load_container(path: str | Path, expect_kind: str | None = None) -> np.ndarray:
    """Read a container back as float64 (rows, cols, channels)."""
    with open(path, "rb") as f:
        header_line = f.readline()
        blob = f.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"{path}: bad container header: {e}") from e
    if header.get("magic") != MAGIC:
        raise ConfigError(f"{path}: not a {MAGIC} container")
    if header.get("dtype") != "f32le":
        raise ConfigError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    kind = header.get("kind")
    if expect_kind is not None and kind != expect_kind:
        raise ConfigError(f"{path}: expected kind {expect_kind!r}, found {kind!r}")
    rows, cols, channels = (int(header[k]) for k in ("rows", "cols", "channels"))
    expected = rows * cols * channels * 4
    if len(blob) != expected:
        raise DimensionError(f"{path}: payload is {len(blob)} bytes, header implies {expected}")
    flat = np.frombuffer(blob, dtype="<f4")
    return flat.reshape(rows, cols, channels).astype(np.float64)


def save_cube(path: str | Path, cube: HsiCube) -> None:
    save_container(path, cube.values, "cube")


def load_cube(path: str | Path) -> HsiCube:
    return HsiCube(load_container(path, expect_kind="cube"))


def save_abundance(path: str | Path, abundances: AbundanceSet) -> None:
    save_container(path, abundances.values, "abundance")


def load_abundance(path: str | Path) -> AbundanceSet:
    return AbundanceSet(load_container(path, expect_kind="abundance"))


def save_endmember_csv(path: str | Path, m: EndmemberMatrix, names: list[str] | None = None) -> None:
    """Write spectra as CSV: one name row, then one row per band."""
    if names is None:
        names = [f"endmember_{j}" for j in range(m.endmembers)]
    if len(names) != m.endmembers:
        raise DimensionError(f"{len(names)} names for {m.endmembers} endmembers")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names)
        for band in m.spectra:
            w.writerow([f"{x:.9g}" for x in band])


def load_endmember_csv(path: str | Path) -> tuple[EndmemberMatrix, list[str]]:
    """Read an endmember library CSV written by :func:`save_endmember_csv`."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        rows = [row for row in reader if row]
    if len(rows) < 2:
        raise ConfigError(f"{path}: endmember CSV needs a name row and at least one band row")
    names = [c.strip() for c in rows[0]]
    try:
        data = np.array([[float(c) for c in row] for row in rows[1:]], dtype=np.float64)
    except ValueError as e:
        raise ConfigError(f"{path}: non-numeric value in band rows: {e}") from e
    if data.shape[1] != len(names):
        raise DimensionError(f"{path}: {len(names)} names but rows of width {data.shape[1]}")
    return EndmemberMatrix(data), names


def save_params(path: str | Path, params: dict[str, np.ndarray], extra: dict | None = None) -> None:
    """Write named float64 parameter tensors: JSON manifest line, then the blob.

    The manifest records name, shape, and byte offset of every tensor in a
    fixed (name-sorted) order; ``extra`` rides along for model/run configs.
    """
    entries = []
    chunks = []
    offset = 0
    for name in sorted(params):
        arr = np.asarray(params[name], dtype=np.float64)
        raw = arr.astype("<f8").tobytes(order="C")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(raw)
        offset += len(raw)
    manifest = {"dtype": "f64le", "params": entries, "extra": extra or {}}
    with open(path, "wb") as f:
        f.write(json.dumps(manifest, sort_keys=True).encode("utf-8"))
        f.write(b"\n")
        for raw in chunks:
            f.write(raw)


def load_params(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a parameter file back as (name -> float64 array, extra dict)."""
    with open(path, "rb") as f:
        manifest_line = f.readline()
        blob = f.read()
    try:
        manifest = json.loads(manifest_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"{path}: bad parameter manifest: {e}") from e
    if manifest.get("dtype") != "f64le":
        raise ConfigError(f"{path}: unsupported dtype {manifest.get('dtype')!r}")
    params: dict[str, np.ndarray] = {}
    for entry in manifest["params"]:
        shape = tuple(int(d) for d in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = int(entry["offset"])
        end = start + count * 8
        if end > len(blob):
            raise DimensionError(f"{path}: tensor {entry['name']!r} overruns the payload")
        params[entry["name"]] = np.frombuffer(blob[start:end], dtype="<f8").reshape(shape).copy()
    return params, manifest.get("extra", {})


def save_loss_history(path: str | Path, history: list[tuple[int, float, float, float]]) -> None:
    """Write per-step training losses as CSV (step, d_loss, g_loss, l1_term)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "d_loss", "g_loss", "l1_term"])
        for step, d, g, l1 in history:
            w.writerow([step, f"{d:.17g}", f"{g:.17g}", f"{l1:.17g}"])


def load_loss_history(path: str | Path) -> list[tuple[int, float, float, float]]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        next(reader)
        return [(int(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in reader]
