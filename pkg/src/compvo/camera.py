"""Pinhole camera model: backprojection, projection, and dense warp fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .planes import DepthMap
from .se3 import SE3

# Points with camera-frame Z at or below this are treated as degenerate.
BEHIND_CAMERA_EPS = 1e-6


class InvalidDepthError(ValueError):
    """Raised when a depth value is non-positive or non-finite."""


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels. Pixel (u, v) samples at coordinate (u, v)."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if not (self.fx > 0.0 and self.fy > 0.0):
            raise ValueError("focal lengths must be positive")
        if not (0.0 <= self.cx < self.width and 0.0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be positive")

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.fx, 0.0, self.cx],
                [0.0, self.fy, self.cy],
                [0.0, 0.0, 1.0],
            ]
        )

    def rescaled(self, new_width: int, new_height: int) -> "Intrinsics":
        """Intrinsics after resampling the image to a new size."""
        sx = new_width / self.width
        sy = new_height / self.height
        return Intrinsics(
            self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy,
            new_width, new_height,
        )

    def for_level(self, level: int) -> "Intrinsics":
        """Intrinsics of pyramid level ``level``: fx, fy, cx, cy halve per level."""
        if level < 0:
            raise ValueError("pyramid level must be >= 0")
        scale = 0.5 ** level
        width, height = self.width, self.height
        for _ in range(level):
            width //= 2
            height //= 2
        return Intrinsics(
            self.fx * scale, self.fy * scale, self.cx * scale, self.cy * scale,
            width, height,
        )


@dataclass(frozen=True)
class CoordField:
    """Dense source-pixel coordinates for every target pixel.

    ``finite`` marks pixels whose coordinates are defined; coordinates are
    NaN wherever the flag is clear.
    """

    u: np.ndarray
    v: np.ndarray
    finite: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        finite = np.asarray(self.finite, dtype=bool)
        if not (u.ndim == 2 and u.shape == v.shape == finite.shape):
            raise ValueError("coordinate planes must share one 2-D shape")
        if not (np.all(np.isfinite(u[finite])) and np.all(np.isfinite(v[finite]))):
            raise ValueError("coordinates must be finite where flagged finite")
        for arr in (u, v, finite):
            arr.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "finite", finite)

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape


def backproject(intrinsics: Intrinsics, pixel, depth: float) -> np.ndarray:
    """Lift a pixel to the 3-D point at the given depth.

    Returns depth * K^-1 * (u, v, 1); the z component equals the depth.
    """
    if not (np.isfinite(depth) and depth > 0.0):
        raise InvalidDepthError(f"depth must be positive and finite, got {depth}")
    u, v = float(pixel[0]), float(pixel[1])
    return np.array(
        [
            (u - intrinsics.cx) / intrinsics.fx * depth,
            (v - intrinsics.cy) / intrinsics.fy * depth,
            depth,
        ]
    )


def project(intrinsics: Intrinsics, point) -> np.ndarray:
    """Perspective-project a camera-frame 3-D point to pixel coordinates.

    Points at or behind the camera plane (Z <= BEHIND_CAMERA_EPS) are not an
    error; they come back as (nan, nan) so callers can mask them.
    """
    p = np.asarray(point, dtype=np.float64)
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    if not z > BEHIND_CAMERA_EPS:
        return np.array([np.nan, np.nan])
    return np.array(
        [
            intrinsics.fx * x / z + intrinsics.cx,
            intrinsics.fy * y / z + intrinsics.cy,
        ]
    )


def warp_coordinates(
    intrinsics: Intrinsics, transform: SE3, depth: DepthMap
) -> CoordField:
    """Source coordinates of every target pixel under a rigid transform.

    Each target pixel is backprojected by its depth, moved by ``transform``,
    and reprojected. Pixels with invalid depth, or that land at or behind the
    camera, are flagged non-finite.
    """
    if depth.shape != (intrinsics.height, intrinsics.width):
        raise ValueError(
            f"depth shape {depth.shape} does not match intrinsics grid "
            f"({intrinsics.height}, {intrinsics.width})"
        )
    h, w = depth.shape
    u_grid, v_grid = np.meshgrid(
        np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64)
    )
    d = depth.depth
    x = (u_grid - intrinsics.cx) / intrinsics.fx * d
    y = (v_grid - intrinsics.cy) / intrinsics.fy * d

    rot = transform.rotation
    t = transform.translation
    xs = rot[0, 0] * x + rot[0, 1] * y + rot[0, 2] * d + t[0]
    ys = rot[1, 0] * x + rot[1, 1] * y + rot[1, 2] * d + t[1]
    zs = rot[2, 0] * x + rot[2, 1] * y + rot[2, 2] * d + t[2]

    with np.errstate(invalid="ignore", divide="ignore"):
        ok = depth.valid & (zs > BEHIND_CAMERA_EPS)
        us = np.where(ok, intrinsics.fx * xs / np.where(ok, zs, 1.0) + intrinsics.cx, np.nan)
        vs = np.where(ok, intrinsics.fy * ys / np.where(ok, zs, 1.0) + intrinsics.cy, np.nan)
    ok = ok & np.isfinite(us) & np.isfinite(vs)
    us = np.where(ok, us, np.nan)
    vs = np.where(ok, vs, np.nan)
    return CoordField(us, vs, ok)
