"""Core data model: cubes, endmembers, abundances, patches, splits.

Conventions used across the package: images are stored as (rows, cols,
channels) float64 arrays in row-major pixel order; endmember matrices are
(bands, endmembers). All containers are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np


class UnmixError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(UnmixError, ValueError):
    """Shape, size, or bounds mismatch."""


class ConfigError(UnmixError, ValueError):
    """Invalid configuration value or violated call contract."""


class ConstraintError(UnmixError, ValueError):
    """Domain constraint (ANC, ASC, coefficient range) violated."""


class NumericsError(UnmixError, ArithmeticError):
    """Degenerate or numerically unusable input (all-zero signal, NaN loss)."""


ASC_TOL = 1e-6


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class HsiCube:
    """An L-band image of rows x cols pixels, stored (rows, cols, bands)."""

    values: np.ndarray

    def __post_init__(self):
        v = _freeze(self.values)
        if v.ndim != 3:
            raise DimensionError(f"cube must be 3-d (rows, cols, bands), got shape {v.shape}")
        if min(v.shape) < 1:
            raise DimensionError(f"cube dimensions must all be >= 1, got {v.shape}")
        if not np.isfinite(v).all():
            raise ConstraintError("cube contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def bands(self) -> int:
        return self.values.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.rows * self.cols

    def pixels(self) -> np.ndarray:
        """Pixels as an (N, bands) matrix in row-major order."""
        return self.values.reshape(-1, self.bands)


@dataclass(frozen=True)
class EndmemberMatrix:
    """Nonnegative spectra, one column per endmember: shape (bands, p)."""

    spectra: np.ndarray

    def __post_init__(self):
        s = _freeze(self.spectra)
        if s.ndim != 2:
            raise DimensionError(f"spectra must be 2-d (bands, endmembers), got shape {s.shape}")
        if not np.isfinite(s).all():
            raise ConstraintError("spectra contain non-finite values")
        if (s < 0).any():
            raise ConstraintError("spectra must be nonnegative")
        if (s.max(axis=0) == 0).any():
            raise ConstraintError("an endmember column is identically zero")
        object.__setattr__(self, "spectra", s)

    @property
    def bands(self) -> int:
        return self.spectra.shape[0]

    @property
    def endmembers(self) -> int:
        return self.spectra.shape[1]


@dataclass(frozen=True)
class AbundanceSet:
    """Per-pixel endmember fractions, shape (rows, cols, p).

    Construction validates the two physical constraints: nonnegativity and
    per-pixel sum-to-one (within ``ASC_TOL``).
    """

    values: np.ndarray

    def __post_init__(self):
        v = _freeze(self.values)
        if v.ndim != 3:
            raise DimensionError(f"abundances must be 3-d (rows, cols, p), got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ConstraintError("abundances contain non-finite values")
        if (v < 0).any():
            raise ConstraintError(f"nonnegativity violated: min value {v.min()}")
        sums = v.sum(axis=2)
        worst = float(np.abs(sums - 1.0).max())
        if worst > ASC_TOL:
            raise ConstraintError(f"sum-to-one violated: worst pixel deviation {worst:.3e}")
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def endmembers(self) -> int:
        return self.values.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.rows * self.cols

    def pixels(self) -> np.ndarray:
        """Abundance vectors as an (N, p) matrix in row-major order."""
        return self.values.reshape(-1, self.endmembers)


@dataclass(frozen=True)
class Patch:
    """An s x s x L window centered on one source pixel."""

    values: np.ndarray
    center: tuple[int, int]

    def __post_init__(self):
        v = _freeze(self.values)
        if v.ndim != 3 or v.shape[0] != v.shape[1]:
            raise DimensionError(f"patch must be (s, s, bands), got shape {v.shape}")
        if v.shape[0] % 2 == 0:
            raise ConfigError(f"patch side must be odd, got {v.shape[0]}")
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def bands(self) -> int:
        return self.values.shape[2]

    @property
    def center_offset(self) -> tuple[int, int]:
        k = (self.size - 1) // 2
        return (k, k)

    def tokens(self) -> np.ndarray:
        """Pixels of the patch as (s*s, bands) rows, row-major."""
        return self.values.reshape(-1, self.bands)


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint labeled/unlabeled pixel index sets covering the whole grid."""

    labeled: np.ndarray
    unlabeled: np.ndarray
    seed: int

    def __post_init__(self):
        lab = np.array(sorted(int(i) for i in np.asarray(self.labeled).ravel()), dtype=np.int64)
        unl = np.array(sorted(int(i) for i in np.asarray(self.unlabeled).ravel()), dtype=np.int64)
        if np.intersect1d(lab, unl).size:
            raise ConstraintError("labeled and unlabeled sets overlap")
        n = lab.size + unl.size
        if not np.array_equal(np.union1d(lab, unl), np.arange(n)):
            raise ConstraintError("labeled and unlabeled sets do not cover 0..n-1")
        lab.setflags(write=False)
        unl.setflags(write=False)
        object.__setattr__(self, "labeled", lab)
        object.__setattr__(self, "unlabeled", unl)

    @property
    def n_pixels(self) -> int:
        return self.labeled.size + self.unlabeled.size


def mirror_pad(cube: HsiCube, margin: int) -> HsiCube:
    """Pad spatially by reflection across the border, excluding the edge pixel.

    Offset k outside the border maps back to interior offset k, so a 1x3 row
    [a, b, c] padded by 1 becomes [b, a, b, c, b].
    """
    if margin < 0:
        raise ConfigError(f"margin must be >= 0, got {margin}")
    if margin > min(cube.rows, cube.cols) - 1:
        raise DimensionError(
            f"margin {margin} too large for a {cube.rows}x{cube.cols} cube "
            f"(max {min(cube.rows, cube.cols) - 1})"
        )
    if margin == 0:
        return cube
    padded = np.pad(cube.values, ((margin, margin), (margin, margin), (0, 0)), mode="reflect")
    return HsiCube(padded)


def extract_patch(
    padded: HsiCube,
    center_row: int,
    center_col: int,
    s: int,
    margin: int | None = None,
) -> Patch:
    """Cut the s x s window centered at an unpadded pixel out of a padded cube.

    ``margin`` is the padding that produced ``padded``; it defaults to the
    minimum (s-1)/2. Center coordinates are in the unpadded frame and are
    recorded on the returned patch.
    """
    if s % 2 == 0 or s < 1:
        raise ConfigError(f"patch side must be odd and >= 1, got {s}")
    half = (s - 1) // 2
    if margin is None:
        margin = half
    if margin < half:
        raise DimensionError(f"padding margin {margin} insufficient for patch side {s}")
    rows = padded.rows - 2 * margin
    cols = padded.cols - 2 * margin
    if rows < 1 or cols < 1:
        raise DimensionError(f"margin {margin} leaves no interior in padded cube {padded.values.shape}")
    if not (0 <= center_row < rows and 0 <= center_col < cols):
        raise DimensionError(
            f"center ({center_row}, {center_col}) outside the {rows}x{cols} interior"
        )
    r0 = center_row + margin - half
    c0 = center_col + margin - half
    window = padded.values[r0 : r0 + s, c0 : c0 + s, :]
    return Patch(window, center=(center_row, center_col))


def iterate_patches(cube: HsiCube, s: int) -> Iterator[Patch]:
    """Yield one patch per pixel, centers in row-major order."""
    if s % 2 == 0 or s < 1:
        raise ConfigError(f"patch side must be odd and >= 1, got {s}")
    half = (s - 1) // 2
    padded = mirror_pad(cube, half)
    for r in range(cube.rows):
        for c in range(cube.cols):
            yield extract_patch(padded, r, c, s, margin=half)


def split_dataset(n_pixels: int, labeled_fraction: float, seed: int) -> DatasetSplit:
    """Randomly split pixel indices into labeled and unlabeled sets.

    The labeled count is round-half-up of ``labeled_fraction * n_pixels``;
    the draw is deterministic for a fixed seed.
    """
    if not (0.0 < labeled_fraction < 1.0):
        raise ConfigError(f"labeled_fraction must be in (0, 1), got {labeled_fraction}")
    if n_pixels < 1:
        raise ConfigError(f"n_pixels must be >= 1, got {n_pixels}")
    k = int(math.floor(labeled_fraction * n_pixels + 0.5))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_pixels)
    return DatasetSplit(labeled=perm[:k], unlabeled=perm[k:], seed=seed)
