"""Grayscale rendering of map stacks to PGM (bit-exact baseline) and PNG."""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np
from PIL import Image


def to_gray(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] to 0..255 with round-half-up; out-of-range values clip.

    A constant 0.5 map therefore renders as 128 everywhere.
    """
    v = np.asarray(values, dtype=np.float64)
    n_clipped = int(((v < 0.0) | (v > 1.0)).sum())
    if n_clipped:
        warnings.warn(f"{n_clipped} values outside [0, 1] clipped for rendering", stacklevel=2)
        v = np.clip(v, 0.0, 1.0)
    return np.clip(np.floor(v * 255.0 + 0.5), 0, 255).astype(np.uint8)


def save_pgm(path: str | Path, img: np.ndarray) -> None:
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError(f"expected a 2-d uint8 image, got {img.dtype} {img.shape}")
    rows, cols = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        f.write(img.tobytes(order="C"))


def load_pgm(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"P5":
            raise ValueError(f"{path}: not a binary PGM")
        dims = f.readline().split()
        cols, rows = int(dims[0]), int(dims[1])
        maxval = int(f.readline())
        if maxval != 255:
            raise ValueError(f"{path}: unsupported max value {maxval}")
        data = f.read(rows * cols)
    return np.frombuffer(data, dtype=np.uint8).reshape(rows, cols)


def render_maps(
    values: np.ndarray,
    out_dir: str | Path,
    stem: str,
    png: bool = True,
) -> list[Path]:
    """Write one image per channel of a (rows, cols, k) stack."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for j in range(values.shape[2]):
        img = to_gray(values[:, :, j])
        pgm_path = out_dir / f"{stem}_{j:02d}.pgm"
        save_pgm(pgm_path, img)
        written.append(pgm_path)
        if png:
            png_path = out_dir / f"{stem}_{j:02d}.png"
            Image.fromarray(img, mode="L").save(png_path)
            written.append(png_path)
    return written
