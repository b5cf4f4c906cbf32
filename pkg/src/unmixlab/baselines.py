"""Classical per-pixel unmixers: fully constrained least squares and
sparse regression by ADMM.

Both solvers are pointwise (no spatial coupling). FCLS handles the
sum-to-one constraint by the usual heavily weighted augmented row, then
polishes the active set against the exact KKT system of the simplex
problem. The ADMM solver splits the nonnegative lasso and optionally
carries the same augmented sum-to-one row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AbundanceSet,
    ConfigError,
    DimensionError,
    EndmemberMatrix,
    HsiCube,
    NumericsError,
)

SUM_TO_ONE_WEIGHT = 1e3
KKT_TOL = 1e-8


def nnls(a: np.ndarray, b: np.ndarray, max_iters: int | None = None) -> np.ndarray:
    """Nonnegative least squares by the Lawson-Hanson active-set method.

    Solves ``argmin_x ||a x - b||_2`` subject to ``x >= 0``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = a.shape
    if b.size != m:
        raise DimensionError(f"rhs of length {b.size} for a {m}x{n} system")
    if max_iters is None:
        max_iters = 3 * n + 30
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = a.T @ b
    for _ in range(max_iters):
        if passive.all():
            break
        candidates = np.where(~passive)[0]
        j = candidates[np.argmax(w[candidates])]
        if w[j] <= 1e-12:
            break
        passive[j] = True
        while True:
            s = np.zeros(n)
            cols = np.where(passive)[0]
            s[cols] = np.linalg.lstsq(a[:, cols], b, rcond=None)[0]
            if s[cols].min() > 0:
                x = s
                break
            mask = passive & (s <= 0)
            alpha = np.min(x[mask] / (x[mask] - s[mask]))
            x = x + alpha * (s - x)
            passive = passive & (x > 1e-14)
            x[~passive] = 0.0
        w = a.T @ (b - a @ x)
    return x


def _simplex_kkt_solve(m: np.ndarray, x: np.ndarray, passive: np.ndarray) -> tuple[np.ndarray, float]:
    """Equality-constrained LS on the passive columns: min ||x - M_P a||, sum(a) = 1."""
    cols = np.where(passive)[0]
    k = cols.size
    gram = m[:, cols].T @ m[:, cols]
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = gram
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([m[:, cols].T @ x, [1.0]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    a = np.zeros(m.shape[1])
    a[cols] = sol[:k]
    return a, float(sol[k])


def fcls_single(x: np.ndarray, m: np.ndarray, tol: float = KKT_TOL) -> np.ndarray:
    """One pixel of fully constrained least squares.

    The weighted augmented row gets an active set close to optimal; the
    KKT polish then enforces sum-to-one exactly and iterates until dual
    feasibility holds to ``tol``.
    """
    n_bands, p = m.shape
    aug = np.vstack([m, SUM_TO_ONE_WEIGHT * np.ones((1, p))])
    rhs = np.concatenate([x, [SUM_TO_ONE_WEIGHT]])
    warm = nnls(aug, rhs)
    passive = warm > 1e-10
    if not passive.any():
        passive[int(np.argmax(m.T @ x))] = True

    for _ in range(4 * p + 20):
        a, nu = _simplex_kkt_solve(m, x, passive)
        negative = passive & (a < -1e-12)
        if negative.any():
            passive[np.argmin(np.where(negative, a, np.inf))] = False
            if not passive.any():
                passive[int(np.argmax(m.T @ x))] = True
            continue
        g = m.T @ (x - m @ a)
        violation = np.where(~passive, g - nu, -np.inf)
        j = int(np.argmax(violation))
        if violation[j] > tol:
            passive[j] = True
            continue
        break
    a = np.maximum(a, 0.0)
    return a / a.sum()


def _check_endmembers(cube: HsiCube, m: EndmemberMatrix) -> None:
    if m.bands != cube.bands:
        raise DimensionError(f"endmember matrix has {m.bands} bands, cube has {cube.bands}")
    if np.linalg.matrix_rank(m.spectra) < m.endmembers:
        raise NumericsError("endmember matrix is rank-deficient")


def fcls_unmix(cube: HsiCube, m: EndmemberMatrix) -> AbundanceSet:
    """Fully constrained least squares, pixel by pixel."""
    _check_endmembers(cube, m)
    pixels = cube.pixels()
    out = np.empty((cube.n_pixels, m.endmembers))
    for i in range(cube.n_pixels):
        out[i] = fcls_single(pixels[i], m.spectra)
    return AbundanceSet(out.reshape(cube.rows, cube.cols, m.endmembers))


def bootstrap_labels(cube: HsiCube, m: EndmemberMatrix) -> AbundanceSet:
    """FCLS output repackaged as training labels for the adversarial stage."""
    return fcls_unmix(cube, m)


@dataclass(frozen=True)
class AdmmParams:
    lambda_sparse: float = 1e-3
    rho: float = 1.0
    max_iters: int = 1000
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    sum_to_one: bool = True

    def __post_init__(self):
        if self.rho <= 0:
            raise ConfigError(f"rho must be > 0, got {self.rho}")
        if self.lambda_sparse < 0:
            raise ConfigError(f"lambda_sparse must be >= 0, got {self.lambda_sparse}")
        if self.tol_primal <= 0 or self.tol_dual <= 0:
            raise ConfigError("tolerances must be > 0")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass
class SunsalResult:
    """Sparse-unmixing output with convergence diagnostics.

    ``values`` are the feasible (nonnegative) iterates; sparseness can pull
    pixel sums away from one, so they are not validated as an AbundanceSet.
    ``residuals`` holds per-iteration (primal, dual, combined) RMS norms,
    where combined is the norm of the combined primal+dual residual vector
    (the fixed-point displacement), which is non-increasing on convex
    problems; the separate norms individually are not.
    """

    values: np.ndarray
    converged: bool
    iterations: int
    residuals: list[tuple[float, float, float]]
    pixel_residuals: np.ndarray  # (N, 2) final primal/dual per pixel

    def as_abundance_set(self) -> AbundanceSet:
        return AbundanceSet(self.values)


def sunsal_unmix(cube: HsiCube, library: EndmemberMatrix, params: AdmmParams) -> SunsalResult:
    """Sparse unmixing by ADMM over all pixels at once.

    Minimizes ``0.5 ||x - M a||^2 + lambda ||a||_1`` subject to ``a >= 0``
    per pixel, with the sum-to-one constraint folded in as a weighted row
    when enabled. Stops when both RMS residuals drop below their
    tolerances; hitting ``max_iters`` flags the result instead of failing.
    """
    if library.bands != cube.bands:
        raise DimensionError(f"library has {library.bands} bands, cube has {cube.bands}")
    p = library.endmembers
    x = cube.pixels().T  # (L, N)
    m = library.spectra
    if params.sum_to_one:
        m = np.vstack([m, SUM_TO_ONE_WEIGHT * np.ones((1, p))])
        x = np.vstack([x, SUM_TO_ONE_WEIGHT * np.ones((1, x.shape[1]))])
    n = x.shape[1]
    f = np.linalg.inv(m.T @ m + params.rho * np.eye(p))
    mtx = m.T @ x

    a = np.zeros((p, n))
    z = np.zeros((p, n))
    u = np.zeros((p, n))
    scale = np.sqrt(p * n)
    residuals: list[tuple[float, float, float]] = []
    converged = False
    iterations = 0
    kappa = params.lambda_sparse / params.rho
    for k in range(params.max_iters):
        a = f @ (mtx + params.rho * (z - u))
        combined = float(np.linalg.norm(a - z) / scale)
        z_old = z
        z = np.maximum(a + u - kappa, 0.0)
        u = u + a - z
        r = float(np.linalg.norm(a - z) / scale)
        s = float(params.rho * np.linalg.norm(z - z_old) / scale)
        residuals.append((r, s, combined))
        iterations = k + 1
        if r < params.tol_primal and s < params.tol_dual:
            converged = True
            break
    pixel_primal = np.linalg.norm(a - z, axis=0)
    pixel_dual = params.rho * np.linalg.norm(z - z_old, axis=0)
    values = z.T.reshape(cube.rows, cube.cols, p)
    return SunsalResult(
        values=values,
        converged=converged,
        iterations=iterations,
        residuals=residuals,
        pixel_residuals=np.stack([pixel_primal, pixel_dual], axis=1),
    )
