"""Photometric, structural-dissimilarity, smoothness, and mask losses.

Every loss is normalized (per pixel, and for the photometric terms per
source image) so magnitudes stay comparable across resolutions and the
default weights remain meaningful. All functions are pure and reduce in a
fixed order, so results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .planes import GrayImage, Pyramid, ValidityMask

# Stabilizers for the local-statistics similarity index on the [0, 1] range.
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2

# Mask weights below this are clamped before the log so the loss stays finite.
MASK_LOG_CLAMP = 1e-7


@dataclass(frozen=True)
class LossWeights:
    """Weights of the combined objective; defaults are the training values."""

    lambda_ph: float = 0.15
    lambda_d: float = 0.85
    lambda_s: float = 0.1
    lambda_e: float = 0.1

    def __post_init__(self) -> None:
        for name in ("lambda_ph", "lambda_d", "lambda_s", "lambda_e"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {value}")

    def without_mask_term(self) -> "LossWeights":
        return LossWeights(self.lambda_ph, self.lambda_d, self.lambda_s, 0.0)


@dataclass(frozen=True)
class LossReport:
    """Component values plus their weighted total.

    ``total`` always equals the weighted sum of the components under
    ``weights``; the constructor enforces it to 1e-12.
    """

    photometric: float
    dssim: float
    smoothness: float
    mask_reg: float
    total: float
    weights: LossWeights = field(default_factory=LossWeights)
    per_scale: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        w = self.weights
        expected = (
            w.lambda_ph * self.photometric
            + w.lambda_d * self.dssim
            + w.lambda_s * self.smoothness
            + w.lambda_e * self.mask_reg
        )
        if not np.isfinite(self.total) or abs(self.total - expected) > 1e-12:
            raise ValueError("total does not match the weighted component sum")

    def csv_row(self, step: int) -> str:
        fields = [
            str(step),
            repr(self.photometric),
            repr(self.dssim),
            repr(self.smoothness),
            repr(self.mask_reg),
            repr(self.total),
        ]
        return ",".join(fields)

    @staticmethod
    def csv_header() -> str:
        return "step,photometric,dssim,smoothness,mask_reg,total"


def _check_same_shape(target: GrayImage, imgs: Sequence[GrayImage]) -> None:
    if not imgs:
        raise ValueError("need at least one warped image")
    for img in imgs:
        if img.shape != target.shape:
            raise ValueError(
                f"warped shape {img.shape} does not match target {target.shape}"
            )


def photometric_l1(target: GrayImage, warped: Sequence[GrayImage]) -> float:
    """Mean absolute intensity difference over all pixels and source images."""
    _check_same_shape(target, warped)
    acc = 0.0
    for img in warped:
        acc += float(np.abs(target.pixels - img.pixels).sum())
    return acc / (target.pixels.size * len(warped))


def masked_photometric(
    target: GrayImage, warped: Sequence[GrayImage], mask: ValidityMask
) -> float:
    """Photometric L1 with per-pixel weights.

    The denominator stays the full pixel count times the source count, so
    shrinking the mask shrinks the loss instead of renormalizing it.
    """
    _check_same_shape(target, warped)
    if mask.shape != target.shape:
        raise ValueError(f"mask shape {mask.shape} does not match target")
    acc = 0.0
    for img in warped:
        acc += float((mask.weights * np.abs(target.pixels - img.pixels)).sum())
    return acc / (target.pixels.size * len(warped))


def _local_ssim_mean(a: np.ndarray, b: np.ndarray) -> float:
    """Mean similarity index with 3x3 mean-pooled local statistics.

    Statistics are taken over fully interior 3x3 windows; planes smaller than
    3x3 fall back to a single window spanning the whole plane.
    """
    if min(a.shape) >= 3:
        mu_a = _box3(a)
        mu_b = _box3(b)
        var_a = _box3(a * a) - mu_a * mu_a
        var_b = _box3(b * b) - mu_b * mu_b
        cov = _box3(a * b) - mu_a * mu_b
    else:
        mu_a = np.array([[a.mean()]])
        mu_b = np.array([[b.mean()]])
        var_a = np.array([[(a * a).mean()]]) - mu_a * mu_a
        var_b = np.array([[(b * b).mean()]]) - mu_b * mu_b
        cov = np.array([[(a * b).mean()]]) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float((num / den).mean())


def _box3(plane: np.ndarray) -> np.ndarray:
    """3x3 box average over fully interior windows: (H-2) x (W-2)."""
    h, w = plane.shape
    total = np.zeros((h - 2, w - 2))
    for di in range(3):
        for dj in range(3):
            total += plane[di : h - 2 + di, dj : w - 2 + dj]
    return total / 9.0


def dssim_by_scale(
    target_pyr: Pyramid, warped_pyrs: Sequence[Pyramid]
) -> list[float]:
    """Per-scale structural dissimilarity, summed over source images."""
    if not warped_pyrs:
        raise ValueError("need at least one warped pyramid")
    for pyr in warped_pyrs:
        if len(pyr) != len(target_pyr):
            raise ValueError("pyramids must have equal level counts")
        for lt, lw in zip(target_pyr.levels, pyr.levels):
            if lt.shape != lw.shape:
                raise ValueError("pyramid level shapes must agree")
    out = []
    for level in range(len(target_pyr)):
        t = target_pyr[level].pixels
        acc = 0.0
        for pyr in warped_pyrs:
            acc += (1.0 - _local_ssim_mean(pyr[level].pixels, t)) / 2.0
        out.append(acc)
    return out


def dssim_multiscale(target_pyr: Pyramid, warped_pyrs: Sequence[Pyramid]) -> float:
    """Structural dissimilarity summed over every scale and source image."""
    return float(sum(dssim_by_scale(target_pyr, warped_pyrs)))


def smoothness(disparity, guide: GrayImage) -> float:
    """Edge-aware first-order smoothness of a disparity-like plane.

    Mean absolute forward difference of the plane, weighted by
    exp(-|forward difference of the guide|), per axis; the two axis means are
    summed. A constant plane scores 0; a ramp of slope g over a flat guide
    scores exactly g.
    """
    plane = disparity.pixels if isinstance(disparity, GrayImage) else np.asarray(
        disparity, dtype=np.float64
    )
    if plane.shape != guide.shape:
        raise ValueError(
            f"disparity shape {plane.shape} does not match guide {guide.shape}"
        )
    g = guide.pixels
    dx = np.abs(np.diff(plane, axis=1)) * np.exp(-np.abs(np.diff(g, axis=1)))
    dy = np.abs(np.diff(plane, axis=0)) * np.exp(-np.abs(np.diff(g, axis=0)))
    total = 0.0
    if dx.size:
        total += float(dx.mean())
    if dy.size:
        total += float(dy.mean())
    return total


def mask_regularization(mask: ValidityMask) -> float:
    """Cross-entropy of the mask against the all-ones label.

    Pushes mask weights toward 1 so a trivially all-zero mask is penalized;
    weights are clamped at MASK_LOG_CLAMP before the log.
    """
    clamped = np.maximum(mask.weights, MASK_LOG_CLAMP)
    return float(-np.log(clamped).mean())


def total_loss(
    photometric: float,
    dssim: float,
    smoothness_value: float,
    mask_reg: float,
    weights: LossWeights | None = None,
    per_scale: Sequence[float] = (),
) -> LossReport:
    """Combine already-computed components into the weighted objective."""
    w = weights if weights is not None else LossWeights()
    total = (
        w.lambda_ph * photometric
        + w.lambda_d * dssim
        + w.lambda_s * smoothness_value
        + w.lambda_e * mask_reg
    )
    return LossReport(
        photometric=photometric,
        dssim=dssim,
        smoothness=smoothness_value,
        mask_reg=mask_reg,
        total=total,
        weights=w,
        per_scale=tuple(float(v) for v in per_scale),
    )


def write_loss_csv(path, reports: Sequence[LossReport]) -> None:
    """Line-oriented CSV of loss reports, one row per step index."""
    lines = [LossReport.csv_header()]
    lines += [report.csv_row(i) for i, report in enumerate(reports)]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
