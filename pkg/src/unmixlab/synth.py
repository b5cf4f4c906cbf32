"""Structured synthetic-data pipeline.

Seed abundance maps get segmented into superpixels by a local clustering
over (abundance value, row, col), each superpixel block is randomly split
into a paired map, the doubled abundance set is mixed through a bilinear
model, and calibrated Gaussian noise is added last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    AbundanceSet,
    ConfigError,
    ConstraintError,
    DimensionError,
    EndmemberMatrix,
    HsiCube,
    NumericsError,
)

PURE_PIXEL_TOL = 1e-6


@dataclass(frozen=True)
class SlicParams:
    """Superpixel clustering knobs.

    ``k`` is the target cluster count, ``q`` the maximum abundance-value
    distance used to normalize the value term of the joint distance.
    """

    k: int
    q: float = 0.5
    iterations: int = 10

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.q <= 0:
            raise ConfigError(f"q must be > 0, got {self.q}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")


@dataclass(frozen=True)
class SlicIterate:
    """Snapshot of one assignment step: centers used, labels produced."""

    centers: np.ndarray  # (n_centers, 3) rows of (value, row, col)
    labels: np.ndarray  # (rows, cols) center index per pixel


@dataclass(frozen=True)
class SuperpixelLabeling:
    """Final compact labeling plus the per-iteration assignment history."""

    labels: np.ndarray
    centers: np.ndarray
    spacing: float
    history: tuple[SlicIterate, ...] = field(default=(), repr=False)

    @property
    def rows(self) -> int:
        return self.labels.shape[0]

    @property
    def cols(self) -> int:
        return self.labels.shape[1]

    @property
    def n_superpixels(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class GbmParams:
    """Bilinear interaction coefficients, one per unordered endmember pair.

    ``gamma`` is condensed (i < j, row-major) with every entry in [0, 1];
    0 reduces the mixture to the plain linear model, 1 to the full
    bilinear one.
    """

    endmembers: int
    gamma: np.ndarray

    def __post_init__(self):
        p = self.endmembers
        if p < 1:
            raise ConfigError(f"endmembers must be >= 1, got {p}")
        g = np.array(self.gamma, dtype=np.float64, copy=True).ravel()
        n_pairs = p * (p - 1) // 2
        if g.size != n_pairs:
            raise DimensionError(f"expected {n_pairs} pair coefficients for p={p}, got {g.size}")
        if g.size and ((g < 0).any() or (g > 1).any()):
            raise ConstraintError(f"pair coefficients must lie in [0, 1], got range [{g.min()}, {g.max()}]")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @staticmethod
    def uniform(endmembers: int, value: float) -> "GbmParams":
        n_pairs = endmembers * (endmembers - 1) // 2
        return GbmParams(endmembers, np.full(n_pairs, float(value)))

    def pair_matrix(self) -> np.ndarray:
        """Coefficients as a (p, p) upper-triangular matrix."""
        out = np.zeros((self.endmembers, self.endmembers))
        idx = 0
        for i in range(self.endmembers - 1):
            for j in range(i + 1, self.endmembers):
                out[i, j] = self.gamma[idx]
                idx += 1
        return out


def seed_abundance(
    rows: int,
    cols: int,
    p: int,
    blob_count: int,
    seed: int,
    centers: list[list[tuple[int, int]]] | None = None,
) -> AbundanceSet:
    """Smooth spatially structured abundance maps with one pure pixel each.

    Per endmember the map is a sum of isotropic Gaussian bumps over a small
    uniform floor, normalized per pixel; the first bump center of every
    endmember is forced to a pure (one-hot) abundance.
    """
    if p < 2:
        raise ConfigError(f"need at least 2 endmembers, got {p}")
    if rows < 1 or cols < 1:
        raise DimensionError(f"grid must be at least 1x1, got {rows}x{cols}")
    if blob_count < 1:
        raise ConfigError(f"blob_count must be >= 1, got {blob_count}")
    rng = np.random.default_rng(seed)
    rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")

    if centers is None:
        centers = []
        taken: set[tuple[int, int]] = set()
        for _ in range(p):
            blobs = []
            for b in range(blob_count):
                while True:
                    pos = (int(rng.integers(rows)), int(rng.integers(cols)))
                    if b > 0 or pos not in taken:
                        break
                blobs.append(pos)
            taken.add(blobs[0])
            centers.append(blobs)
    if len(centers) != p:
        raise DimensionError(f"{len(centers)} center lists for {p} endmembers")

    extent = min(rows, cols)
    maps = np.full((rows, cols, p), 0.01)
    for j, blobs in enumerate(centers):
        for r0, c0 in blobs:
            sigma = extent * rng.uniform(0.12, 0.3)
            maps[:, :, j] += np.exp(-((rr - r0) ** 2 + (cc - c0) ** 2) / (2.0 * sigma**2))
    maps /= maps.sum(axis=2, keepdims=True)
    for j, blobs in enumerate(centers):
        r0, c0 = blobs[0]
        maps[r0, c0, :] = 0.0
        maps[r0, c0, j] = 1.0
    return AbundanceSet(maps)


def _grid_seeds(rows: int, cols: int, k: int) -> np.ndarray:
    """At most k seed positions on a regular grid, row-major (r, c) ints."""
    spacing = math.sqrt(rows * cols / k)
    gr = max(1, int(round(rows / spacing)))
    gc = max(1, int(round(cols / spacing)))
    step_r = rows / gr
    step_c = cols / gc
    seeds = []
    for i in range(gr):
        for j in range(gc):
            r = int(math.floor(i * step_r + (step_r - 1.0) / 2.0))
            c = int(math.floor(j * step_c + (step_c - 1.0) / 2.0))
            seeds.append((min(max(r, 0), rows - 1), min(max(c, 0), cols - 1)))
    return np.array(seeds[:k], dtype=np.int64)


def _value_gradient(a: np.ndarray) -> np.ndarray:
    """Squared central-difference magnitude, indices clamped at the edges."""
    up = np.roll(a, 1, axis=0)
    up[0, :] = a[0, :]
    down = np.roll(a, -1, axis=0)
    down[-1, :] = a[-1, :]
    left = np.roll(a, 1, axis=1)
    left[:, 0] = a[:, 0]
    right = np.roll(a, -1, axis=1)
    right[:, -1] = a[:, -1]
    return (down - up) ** 2 + (right - left) ** 2


def _assign(
    a: np.ndarray,
    centers: np.ndarray,
    spacing: float,
    q: float,
    rr: np.ndarray,
    cc: np.ndarray,
) -> np.ndarray:
    """One assignment sweep: nearest covering center by the joint distance.

    Each center competes only inside its 2S x 2S search window; pixels no
    window covers fall back to the globally nearest center. Ties keep the
    lowest center index.
    """
    rows, cols = a.shape
    best = np.full((rows, cols), np.inf)
    labels = np.full((rows, cols), -1, dtype=np.int64)
    for idx in range(centers.shape[0]):
        av, rv, cv = centers[idx]
        covered = (np.abs(rr - rv) <= spacing) & (np.abs(cc - cv) <= spacing)
        if not covered.any():
            continue
        d_c = np.abs(a - av)
        d_s = np.sqrt((rr - rv) ** 2 + (cc - cv) ** 2)
        dist = np.sqrt((d_c / q) ** 2 + (d_s / spacing) ** 2)
        better = covered & (dist < best)
        best[better] = dist[better]
        labels[better] = idx
    unassigned = labels < 0
    if unassigned.any():
        for idx in range(centers.shape[0]):
            av, rv, cv = centers[idx]
            d_c = np.abs(a - av)
            d_s = np.sqrt((rr - rv) ** 2 + (cc - cv) ** 2)
            dist = np.sqrt((d_c / q) ** 2 + (d_s / spacing) ** 2)
            better = unassigned & (dist < best)
            best[better] = dist[better]
            labels[better] = idx
    return labels


def slic_segment(abundance_map: np.ndarray, params: SlicParams) -> SuperpixelLabeling:
    """Cluster one abundance map into superpixels.

    Seeds sit on a regular grid spaced ``S = sqrt(N/K)`` apart and are
    nudged to the smallest value-gradient pixel in their 3x3 neighborhood;
    assignment and center-mean updates then alternate for a fixed number
    of iterations.
    """
    a = np.asarray(abundance_map, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise DimensionError(f"abundance map must be 2-d and nonempty, got shape {a.shape}")
    rows, cols = a.shape
    if params.k > rows * cols:
        raise ConfigError(f"k={params.k} exceeds the {rows * cols} available pixels")
    spacing = math.sqrt(rows * cols / params.k)
    rr, cc = np.meshgrid(np.arange(rows, dtype=np.float64), np.arange(cols, dtype=np.float64), indexing="ij")

    grad = _value_gradient(a)
    seeds = _grid_seeds(rows, cols, params.k)
    centers = np.zeros((seeds.shape[0], 3))
    for idx, (r0, c0) in enumerate(seeds):
        best_r, best_c = int(r0), int(c0)
        best_g = grad[best_r, best_c]
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                r1, c1 = int(r0) + dr, int(c0) + dc
                if 0 <= r1 < rows and 0 <= c1 < cols and grad[r1, c1] < best_g:
                    best_g = grad[r1, c1]
                    best_r, best_c = r1, c1
        centers[idx] = (a[best_r, best_c], float(best_r), float(best_c))

    history = []
    labels = np.zeros((rows, cols), dtype=np.int64)
    for _ in range(params.iterations):
        labels = _assign(a, centers, spacing, params.q, rr, cc)
        history.append(SlicIterate(centers=centers.copy(), labels=labels.copy()))
        for idx in range(centers.shape[0]):
            members = labels == idx
            if members.any():
                centers[idx] = (a[members].mean(), rr[members].mean(), cc[members].mean())

    used = np.unique(labels)
    compact = np.searchsorted(used, labels)
    return SuperpixelLabeling(
        labels=compact,
        centers=centers[used],
        spacing=spacing,
        history=tuple(history),
    )


def _block_stream(seed: int, map_index: int, block_id: int) -> np.random.Generator:
    """Counter-based stream so per-block draws are order-independent."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64((map_index << 32) | block_id)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def split_superpixels(
    maps: AbundanceSet,
    labelings: list[SuperpixelLabeling],
    seed: int,
) -> AbundanceSet:
    """Randomly split each superpixel block, doubling the map count.

    Per (map, block): with the first uniform draw at or above 0.5 and no
    pure pixel inside the block, a fraction drawn by the second uniform
    moves into the paired map; otherwise the block stays put. Per-pixel
    totals across all maps are preserved, so the doubled set still sums
    to one.
    """
    p = maps.endmembers
    if len(labelings) != p:
        raise DimensionError(f"{len(labelings)} labelings for {p} maps")
    rows, cols = maps.rows, maps.cols
    out = np.zeros((rows, cols, 2 * p))
    for j in range(p):
        labeling = labelings[j]
        if labeling.rows != rows or labeling.cols != cols:
            raise DimensionError(
                f"labeling {j} is {labeling.rows}x{labeling.cols}, maps are {rows}x{cols}"
            )
        source = maps.values[:, :, j]
        for block_id in range(labeling.n_superpixels):
            members = labeling.labels == block_id
            alpha1, alpha2 = _block_stream(seed, j, block_id).random(2)
            block = source[members]
            has_pure = (block >= 1.0 - PURE_PIXEL_TOL).any()
            if alpha1 >= 0.5 and not has_pure:
                out[:, :, j][members] = (1.0 - alpha2) * block
                out[:, :, p + j][members] = alpha2 * block
            else:
                out[:, :, j][members] = block
    return AbundanceSet(out)


def gbm_mix(m: EndmemberMatrix, abundances: AbundanceSet, params: GbmParams) -> HsiCube:
    """Mix abundances and endmembers with pairwise bilinear interactions.

    Per pixel: ``x = M a + sum_{i<j} gamma_ij * a_i a_j * (m_i h m_j)``
    where ``h`` is the elementwise (Hadamard) product. Noise-free.
    """
    p = m.endmembers
    if abundances.endmembers != p:
        raise DimensionError(f"{abundances.endmembers} abundance maps for {p} endmembers")
    if params.endmembers != p:
        raise DimensionError(f"pair coefficients sized for p={params.endmembers}, data has p={p}")
    a = abundances.pixels()  # (N, p)
    x = a @ m.spectra.T  # (N, L)
    idx = 0
    for i in range(p - 1):
        for j in range(i + 1, p):
            gamma = params.gamma[idx]
            idx += 1
            if gamma == 0.0:
                continue
            coeff = gamma * a[:, i] * a[:, j]
            x += np.outer(coeff, m.spectra[:, i] * m.spectra[:, j])
    return HsiCube(x.reshape(abundances.rows, abundances.cols, m.bands))


def add_gaussian_noise(cube: HsiCube, snr_db: float | None, seed: int) -> HsiCube:
    """Add white Gaussian noise calibrated to a target SNR in dB.

    Noise variance is ``P_signal / 10^(snr_db/10)`` with the signal power
    taken as the mean squared value over the whole cube. ``snr_db=None``
    means no noise.
    """
    if snr_db is None:
        return cube
    p_signal = float((cube.values**2).mean())
    if p_signal == 0.0:
        raise NumericsError("cube has zero signal power, SNR is undefined")
    sigma = math.sqrt(p_signal / (10.0 ** (snr_db / 10.0)))
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=cube.values.shape)
    return HsiCube(cube.values + noise)


def synthetic_spectra(count: int, bands: int, seed: int) -> tuple[EndmemberMatrix, list[str]]:
    """Generate a library of smooth positive reflectance-like spectra.

    Each spectrum is a broad baseline ramp with a few Gaussian absorption
    dips, clipped away from zero. Deterministic per seed.
    """
    if count < 1 or bands < 1:
        raise ConfigError(f"count and bands must be >= 1, got {count}, {bands}")
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, bands)
    spectra = np.zeros((bands, count))
    for j in range(count):
        base = rng.uniform(0.35, 0.85)
        tilt = rng.uniform(-0.25, 0.25)
        curve = base + tilt * (t - 0.5) + rng.uniform(-0.1, 0.1) * np.sin(2 * np.pi * rng.uniform(0.5, 1.5) * t)
        for _ in range(rng.integers(2, 5)):
            center = rng.uniform(0.05, 0.95)
            width = rng.uniform(0.01, 0.08)
            depth = rng.uniform(0.1, 0.4)
            curve -= depth * np.exp(-((t - center) ** 2) / (2.0 * width**2))
        spectra[:, j] = np.clip(curve, 0.02, 1.0)
    names = [f"mineral_{j:02d}" for j in range(count)]
    return EndmemberMatrix(spectra), names


def select_endmembers(
    library: EndmemberMatrix,
    names: list[str],
    count: int,
    seed: int,
    max_cosine: float = 0.995,
) -> tuple[EndmemberMatrix, list[str]]:
    """Seeded draw without replacement, rejecting near-duplicate spectra."""
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(library.endmembers)
    chosen: list[int] = []
    for j in order:
        cand = library.spectra[:, j]
        cn = cand / np.linalg.norm(cand)
        if all(float(cn @ (library.spectra[:, i] / np.linalg.norm(library.spectra[:, i]))) <= max_cosine for i in chosen):
            chosen.append(int(j))
        if len(chosen) == count:
            break
    if len(chosen) < count:
        raise ConfigError(
            f"library provides only {len(chosen)} sufficiently distinct spectra, needed {count}"
        )
    return EndmemberMatrix(library.spectra[:, chosen]), [names[i] for i in chosen]


def synthesize_dataset(
    rows: int,
    cols: int,
    p_initial: int,
    library: EndmemberMatrix,
    library_names: list[str],
    slic: SlicParams,
    gbm: GbmParams,
    snr_db: float | None,
    seed: int,
    blob_count: int = 3,
) -> tuple[HsiCube, AbundanceSet, EndmemberMatrix, list[str]]:
    """Full pipeline: seed maps, segment, split, select endmembers, mix, add noise.

    The split doubles ``p_initial`` maps, so ``gbm`` must be sized for
    ``2 * p_initial`` endmembers and the library must offer at least that
    many distinct spectra.
    """
    if gbm.endmembers != 2 * p_initial:
        raise DimensionError(f"gbm sized for p={gbm.endmembers}, pipeline needs {2 * p_initial}")
    seeded = seed_abundance(rows, cols, p_initial, blob_count=blob_count, seed=seed)
    labelings = [slic_segment(seeded.values[:, :, j], slic) for j in range(p_initial)]
    doubled = split_superpixels(seeded, labelings, seed)
    m, names = select_endmembers(library, library_names, 2 * p_initial, seed)
    clean = gbm_mix(m, doubled, gbm)
    noisy = add_gaussian_noise(clean, snr_db, seed)
    return noisy, doubled, m, names
