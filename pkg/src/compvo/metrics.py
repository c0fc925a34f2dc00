"""Trajectory and depth evaluation.

Snippet ATE: every sliding window of consecutive frames is anchored at its
first pose, the prediction is scale-fitted to ground truth by least squares
on the translations, and the RMSE of the translation residuals is taken;
mean and standard deviation are reported over all windows. Full-trajectory
ATE: one 7-DoF (similarity) alignment of the whole translation sequence,
then a single RMSE. Depth metrics follow the usual monocular protocol with
median scaling and an 80 m style cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .planes import DepthMap
from .se3 import SE3

# Below this summed squared norm a predicted snippet carries no scale
# information; the fit falls back to scale 1.
_SCALE_DENOM_FLOOR = 1e-24


@dataclass(frozen=True)
class Trajectory:
    """Ordered camera-to-world poses for a video.

    ``frame_indices`` defaults to 0..n-1 and must be strictly increasing.
    ``failed`` lists frame indices whose relative motion could not be
    estimated and was recorded as identity.
    """

    poses: tuple[SE3, ...]
    frame_indices: tuple[int, ...] | None = None
    failed: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        poses = tuple(self.poses)
        if self.frame_indices is None:
            indices = tuple(range(len(poses)))
        else:
            indices = tuple(int(i) for i in self.frame_indices)
        if len(indices) != len(poses):
            raise ValueError("one frame index per pose required")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("frame indices must be strictly increasing")
        object.__setattr__(self, "poses", poses)
        object.__setattr__(self, "frame_indices", indices)
        object.__setattr__(self, "failed", tuple(sorted(self.failed)))

    def __len__(self) -> int:
        return len(self.poses)

    def __getitem__(self, i: int) -> SE3:
        return self.poses[i]

    def translations(self) -> np.ndarray:
        if not self.poses:
            return np.zeros((0, 3))
        return np.stack([p.translation for p in self.poses])


@dataclass(frozen=True)
class AteResult:
    """Mean and standard deviation of per-snippet trajectory errors."""

    mean: float
    std: float
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.size == 0:
            raise ValueError("no snippet values")
        if abs(float(arr.mean()) - self.mean) > 1e-12:
            raise ValueError("mean inconsistent with value list")
        if abs(float(arr.std()) - self.std) > 1e-12:
            raise ValueError("std inconsistent with value list")

    def format(self, digits: int = 6) -> str:
        return f"{self.mean:.{digits}g} ± {self.std:.{digits}g}"

    def csv_row(self) -> str:
        return f"{self.mean!r},{self.std!r},{len(self.values)}"

    @staticmethod
    def csv_header() -> str:
        return "ate_mean,ate_std,snippets"


@dataclass(frozen=True)
class DepthMetrics:
    """Standard monocular depth error columns."""

    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    delta1: float
    delta2: float
    delta3: float

    def __post_init__(self) -> None:
        if not (self.delta1 <= self.delta2 <= self.delta3 <= 1.0 + 1e-12):
            raise ValueError("delta fractions must be nondecreasing and <= 1")
        for name in ("abs_rel", "sq_rel", "rmse", "rmse_log"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")

    @staticmethod
    def csv_header() -> str:
        return "abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3"

    def csv_row(self) -> str:
        return ",".join(
            repr(v)
            for v in (
                self.abs_rel,
                self.sq_rel,
                self.rmse,
                self.rmse_log,
                self.delta1,
                self.delta2,
                self.delta3,
            )
        )

    def format_table(self) -> str:
        header = "Abs Rel  Sq Rel   RMSE     RMSE log d<1.25   d<1.25^2 d<1.25^3"
        row = (
            f"{self.abs_rel:<8.4f} {self.sq_rel:<8.4f} {self.rmse:<8.4f} "
            f"{self.rmse_log:<8.4f} {self.delta1:<8.4f} {self.delta2:<8.4f} "
            f"{self.delta3:<8.4f}"
        )
        return header + "\n" + row


def _check_same_range(pred: Trajectory, gt: Trajectory) -> None:
    if pred.frame_indices != gt.frame_indices:
        raise ValueError("trajectories must cover the same frame range")


def _anchored_translations(poses: tuple[SE3, ...], start: int, length: int) -> np.ndarray:
    """Window translations expressed in the window's first camera frame."""
    base = poses[start]
    rot_t = base.rotation.T
    out = np.empty((length, 3))
    for k in range(length):
        out[k] = rot_t @ (poses[start + k].translation - base.translation)
    return out


def ate_snippet(pred: Trajectory, gt: Trajectory, length: int = 3) -> AteResult:
    """Scale-aligned RMSE over every sliding window of ``length`` frames."""
    _check_same_range(pred, gt)
    if length < 3 or length % 2 == 0:
        raise ValueError("snippet length must be odd and >= 3")
    n = len(pred)
    if n < length:
        raise ValueError(f"trajectory of {n} frames too short for snippets of {length}")
    values = []
    for start in range(n - length + 1):
        x = _anchored_translations(pred.poses, start, length)
        y = _anchored_translations(gt.poses, start, length)
        denom = float((x * x).sum())
        scale = float((x * y).sum()) / denom if denom > _SCALE_DENOM_FLOOR else 1.0
        residual = scale * x - y
        values.append(float(np.sqrt((residual ** 2).sum(axis=1).mean())))
    arr = np.asarray(values)
    return AteResult(float(arr.mean()), float(arr.std()), tuple(values))


def umeyama_alignment(
    source: np.ndarray, target: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Similarity transform (s, R, t) minimizing ||s R x + t - y||^2.

    Degenerate source clouds (zero variance) fall back to scale 1 with an
    identity rotation.
    """
    x = np.asarray(source, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2 or x.shape[1] != 3:
        raise ValueError("point sets must both be (N, 3)")
    n = x.shape[0]
    mu_x = x.mean(axis=0)
    mu_y = y.mean(axis=0)
    xc = x - mu_x
    yc = y - mu_y
    var_x = float((xc ** 2).sum()) / n
    if var_x < 1e-24:
        return 1.0, np.eye(3), mu_y - mu_x
    cov = (yc.T @ xc) / n
    u, d, vt = np.linalg.svd(cov)
    s = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0.0:
        s[2, 2] = -1.0
    rot = u @ s @ vt
    scale = float(np.trace(np.diag(d) @ s)) / var_x
    t = mu_y - scale * (rot @ mu_x)
    return scale, rot, t


def ate_full(pred: Trajectory, gt: Trajectory) -> float:
    """Translational RMSE after one similarity alignment of the whole path."""
    _check_same_range(pred, gt)
    if len(pred) < 3:
        raise ValueError("full-trajectory alignment needs at least 3 frames")
    x = pred.translations()
    y = gt.translations()
    if np.array_equal(x, y):
        # Identical inputs align exactly; skip the SVD and its float noise.
        return 0.0
    scale, rot, t = umeyama_alignment(x, y)
    aligned = scale * (x @ rot.T) + t
    residual = aligned - y
    return float(np.sqrt((residual ** 2).sum(axis=1).mean()))


def _covalid(pred: DepthMap, gt: DepthMap) -> np.ndarray:
    if pred.shape != gt.shape:
        raise ValueError(f"depth shapes differ: {pred.shape} vs {gt.shape}")
    return pred.valid & gt.valid


def median_scale(pred: DepthMap, gt: DepthMap) -> float:
    """median(gt) / median(pred) over co-valid pixels."""
    both = _covalid(pred, gt)
    if not both.any():
        raise ValueError("no co-valid pixels between predicted and true depth")
    return float(np.median(gt.depth[both]) / np.median(pred.depth[both]))


def depth_metrics(pred: DepthMap, gt: DepthMap, cap: float = 80.0) -> DepthMetrics:
    """Median-scaled depth errors over co-valid pixels, capped at ``cap``."""
    both = _covalid(pred, gt)
    if not both.any():
        raise ValueError("no co-valid pixels between predicted and true depth")
    scale = median_scale(pred, gt)
    p = np.minimum(pred.depth[both] * scale, cap)
    g = np.minimum(gt.depth[both], cap)
    abs_rel = float(np.mean(np.abs(p - g) / g))
    sq_rel = float(np.mean((p - g) ** 2 / g))
    rmse = float(np.sqrt(np.mean((p - g) ** 2)))
    rmse_log = float(np.sqrt(np.mean((np.log(p) - np.log(g)) ** 2)))
    ratio = np.maximum(p / g, g / p)
    delta1 = float(np.mean(ratio < 1.25))
    delta2 = float(np.mean(ratio < 1.25 ** 2))
    delta3 = float(np.mean(ratio < 1.25 ** 3))
    return DepthMetrics(abs_rel, sq_rel, rmse, rmse_log, delta1, delta2, delta3)
