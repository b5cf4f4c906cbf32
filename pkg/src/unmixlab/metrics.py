"""Evaluation indicators: per-endmember RMSE, overall aRMSE, the
root-mean-square abundance angle, and the average spectral angle between
original and reconstructed pixels.

All functions take row-per-pixel matrices: abundances as (N, p),
spectra as (N, L). Angle metrics skip zero-norm pixels and report how
many were skipped instead of failing the whole evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import AbundanceSet, DimensionError, EndmemberMatrix, HsiCube, NumericsError
from .synth import GbmParams, gbm_mix


def _paired(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise DimensionError(f"paired pixel matrices must match, got {a.shape} and {b.shape}")
    return a, b


def rmse_per_endmember(a_true: np.ndarray, a_est: np.ndarray) -> np.ndarray:
    """Root mean squared error over pixels, one value per endmember column."""
    t, e = _paired(a_true, a_est)
    return np.sqrt(((t - e) ** 2).mean(axis=0))


def armse(a_true: np.ndarray, a_est: np.ndarray) -> float:
    """Mean over pixels of the per-pixel RMS abundance error.

    The inner mean runs over endmembers, the square root applies per
    pixel, and the outer mean runs over pixels, in that order.
    """
    t, e = _paired(a_true, a_est)
    per_pixel = np.sqrt(((t - e) ** 2).mean(axis=1))
    return float(per_pixel.mean())


def _angles(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, int, float]:
    """Per-pixel angles, the count of skipped zero-norm pixels, and the
    largest amount the cosine had to be clamped by."""
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    valid = (na > 0) & (nb > 0)
    skipped = int((~valid).sum())
    if not valid.any():
        raise NumericsError("every pixel pair has a zero-norm vector, angles undefined")
    cos = (a[valid] * b[valid]).sum(axis=1) / (na[valid] * nb[valid])
    excess = float(np.maximum(np.abs(cos) - 1.0, 0.0).max())
    return np.arccos(np.clip(cos, -1.0, 1.0)), skipped, excess


def rms_aad(a_true: np.ndarray, a_est: np.ndarray) -> float:
    """Root mean square of the angle between true and estimated abundance
    vectors, zero-norm pixels skipped."""
    t, e = _paired(a_true, a_est)
    angles, _, _ = _angles(t, e)
    return float(np.sqrt((angles**2).mean()))


def asam(x_orig: np.ndarray, x_recon: np.ndarray) -> float:
    """Mean spectral angle between original and reconstructed pixels."""
    o, r = _paired(x_orig, x_recon)
    angles, _, _ = _angles(o, r)
    return float(angles.mean())


def reconstruct(
    a_est: AbundanceSet,
    m: EndmemberMatrix,
    mixing: GbmParams | str = "linear",
) -> HsiCube:
    """Re-mix estimated abundances for reconstruction-based evaluation."""
    if isinstance(mixing, str):
        if mixing != "linear":
            raise DimensionError(f"mixing must be GbmParams or 'linear', got {mixing!r}")
        mixing = GbmParams.uniform(m.endmembers, 0.0)
    return gbm_mix(m, a_est, mixing)


@dataclass
class EvalReport:
    """Everything one evaluation run produced, with bookkeeping counts."""

    rmse: list[float] | None = None
    armse: float | None = None
    rms_aad: float | None = None
    asam: float | None = None
    endmember_names: list[str] | None = None
    pixels: int = 0
    skipped_aad: int = 0
    skipped_asam: int = 0
    clamp_excess: float = 0.0
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rmse_per_endmember": self.rmse,
            "armse": self.armse,
            "rms_aad": self.rms_aad,
            "asam": self.asam,
            "endmember_names": self.endmember_names,
            "pixels": self.pixels,
            "skipped_aad": self.skipped_aad,
            "skipped_asam": self.skipped_asam,
            "clamp_excess": self.clamp_excess,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def format_table(self) -> str:
        """Aligned text table: one metric per row, per-endmember RMSE first."""
        rows: list[tuple[str, str]] = []
        if self.rmse is not None:
            names = self.endmember_names or [f"endmember_{j}" for j in range(len(self.rmse))]
            for name, value in zip(names, self.rmse):
                rows.append((f"RMSE[{name}]", f"{value:.4e}"))
        if self.armse is not None:
            rows.append(("aRMSE", f"{self.armse:.4e}"))
        if self.rms_aad is not None:
            rows.append(("rmsAAD", f"{self.rms_aad:.4e}"))
        if self.asam is not None:
            rows.append(("aSAM", f"{self.asam:.4e}"))
        rows.append(("pixels", str(self.pixels)))
        if self.skipped_aad or self.skipped_asam:
            rows.append(("skipped (angle/sam)", f"{self.skipped_aad}/{self.skipped_asam}"))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def evaluate(
    a_est: AbundanceSet,
    a_true: AbundanceSet | None = None,
    cube: HsiCube | None = None,
    m: EndmemberMatrix | None = None,
    mixing: GbmParams | str = "linear",
    endmember_names: list[str] | None = None,
) -> EvalReport:
    """Compute every indicator whose inputs are available.

    Abundance metrics need ``a_true``; the spectral angle needs ``cube``
    and ``m`` (estimates get re-mixed through ``mixing``).
    """
    report = EvalReport(endmember_names=endmember_names, pixels=a_est.n_pixels)
    est_rows = a_est.pixels()
    if a_true is not None:
        true_rows = a_true.pixels()
        report.rmse = [float(v) for v in rmse_per_endmember(true_rows, est_rows)]
        report.armse = armse(true_rows, est_rows)
        angles, skipped, excess = _angles(true_rows, est_rows)
        report.rms_aad = float(np.sqrt((angles**2).mean()))
        report.skipped_aad = skipped
        report.clamp_excess = max(report.clamp_excess, excess)
    if cube is not None and m is not None:
        recon = reconstruct(a_est, m, mixing)
        angles, skipped, excess = _angles(cube.pixels(), recon.pixels())
        report.asam = float(angles.mean())
        report.skipped_asam = skipped
        report.clamp_excess = max(report.clamp_excess, excess)
    if report.armse is None and report.asam is None:
        raise NumericsError("nothing to evaluate: need ground truth or (cube, endmembers)")
    return report
