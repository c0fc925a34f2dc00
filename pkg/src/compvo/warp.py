"""Inverse warping: bilinear resampling, validity masking, image pyramids.

Boundary convention: a coordinate contributes only when it is finite and lies
inside the closed box [0, W-1] x [0, H-1]; everything else is masked to zero
so out-of-view pixels never leak into a loss. The sampling cell is clamped at
the far edges, which keeps integer coordinates bit-exact.
"""

from __future__ import annotations

import numpy as np

from .camera import CoordField, Intrinsics, warp_coordinates
from .planes import DepthMap, GrayImage, Pyramid, ValidityMask
from .se3 import SE3

__all__ = [
    "GrayImage",
    "DepthMap",
    "ValidityMask",
    "Pyramid",
    "bilinear_sample",
    "inverse_warp",
    "build_pyramid",
    "downsample_depth",
]

# Coordinates this close to the image box still count as inside; the
# projection round trip can land a border pixel a few ulp outside.
BOUNDS_EPS = 1e-9


def _cell_indices(coord: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Left cell index and fractional offset, clamped so index+1 stays valid."""
    idx = np.floor(coord).astype(np.int64)
    idx = np.clip(idx, 0, max(size - 2, 0))
    frac = coord - idx
    return idx, frac


def bilinear_sample(
    img: GrayImage, coords: CoordField
) -> tuple[GrayImage, ValidityMask]:
    """Resample an image at real-valued coordinates.

    Each output pixel is the bilinear blend of the four neighbours around its
    coordinate. The mask is 1 exactly where the coordinate is finite and
    within the closed image box; masked-out pixels read 0.
    """
    src = img.pixels
    h, w = src.shape
    inside = coords.finite.copy()
    u = np.where(inside, coords.u, 0.0)
    v = np.where(inside, coords.v, 0.0)
    inside &= (
        (u >= -BOUNDS_EPS) & (u <= w - 1.0 + BOUNDS_EPS)
        & (v >= -BOUNDS_EPS) & (v <= h - 1.0 + BOUNDS_EPS)
    )
    u = np.clip(u, 0.0, w - 1.0)
    v = np.clip(v, 0.0, h - 1.0)

    iu, fu = _cell_indices(u, w)
    iv, fv = _cell_indices(v, h)
    iu1 = np.minimum(iu + 1, w - 1)
    iv1 = np.minimum(iv + 1, h - 1)

    top_left = src[iv, iu]
    top_right = src[iv, iu1]
    bottom_left = src[iv1, iu]
    bottom_right = src[iv1, iu1]

    top = (1.0 - fu) * top_left + fu * top_right
    bottom = (1.0 - fu) * bottom_left + fu * bottom_right
    values = (1.0 - fv) * top + fv * bottom
    values = np.where(inside, values, 0.0)
    values = np.clip(values, 0.0, 1.0)
    return GrayImage(values), ValidityMask.from_bool(inside)


def sample_with_gradient(
    plane: np.ndarray, u: np.ndarray, v: np.ndarray, inside: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bilinear value plus its exact derivatives w.r.t. u and v.

    The derivatives are those of the interpolant itself (piecewise bilinear),
    which is what a least-squares solver differentiating through the sampler
    needs. Outside pixels return zeros.
    """
    h, w = plane.shape
    uu = np.where(inside, u, 0.0)
    vv = np.where(inside, v, 0.0)
    iu, fu = _cell_indices(uu, w)
    iv, fv = _cell_indices(vv, h)
    iu1 = np.minimum(iu + 1, w - 1)
    iv1 = np.minimum(iv + 1, h - 1)

    tl = plane[iv, iu]
    tr = plane[iv, iu1]
    bl = plane[iv1, iu]
    br = plane[iv1, iu1]

    top = (1.0 - fu) * tl + fu * tr
    bottom = (1.0 - fu) * bl + fu * br
    value = (1.0 - fv) * top + fv * bottom
    grad_u = (1.0 - fv) * (tr - tl) + fv * (br - bl)
    grad_v = (1.0 - fu) * (bl - tl) + fu * (br - tr)

    zero = np.zeros_like(value)
    return (
        np.where(inside, value, zero),
        np.where(inside, grad_u, zero),
        np.where(inside, grad_v, zero),
    )


def inverse_warp(
    src: GrayImage, depth: DepthMap, transform: SE3, intrinsics: Intrinsics
) -> tuple[GrayImage, ValidityMask]:
    """Warp a source image onto the target grid through depth and a pose.

    The mask zeros pixels with invalid depth as well as pixels whose warped
    coordinate falls outside the source image.
    """
    if src.shape != depth.shape:
        raise ValueError(f"image shape {src.shape} != depth shape {depth.shape}")
    coords = warp_coordinates(intrinsics, transform, depth)
    return bilinear_sample(src, coords)


def build_pyramid(img: GrayImage, n: int) -> Pyramid:
    """n-level pyramid; each level is a 2x2 box-filter downsampling."""
    if n < 1:
        raise ValueError("pyramid needs at least one level")
    min_dim = min(img.height, img.width)
    if min_dim < 2 ** (n - 1):
        raise ValueError(
            f"image of min dimension {min_dim} too small for {n} pyramid levels"
        )
    levels = [img]
    for _ in range(n - 1):
        levels.append(_box_downsample(levels[-1]))
    return Pyramid(tuple(levels))


def _box_downsample(img: GrayImage) -> GrayImage:
    arr = img.pixels
    h2 = img.height // 2
    w2 = img.width // 2
    trimmed = arr[: 2 * h2, : 2 * w2]
    blocks = trimmed.reshape(h2, 2, w2, 2)
    return GrayImage(blocks.mean(axis=(1, 3)))


def max_pyramid_levels(height: int, width: int, requested: int, floor: int = 2) -> int:
    """Deepest usable pyramid depth, keeping every level at least ``floor`` px."""
    levels = 1
    h, w = height, width
    while levels < requested and min(h // 2, w // 2) >= floor:
        h //= 2
        w //= 2
        levels += 1
    return levels


def downsample_depth(depth: DepthMap) -> DepthMap:
    """Halve a depth map with a 2x2 box filter over valid entries only.

    A coarse pixel is valid only when all four children are, so depth never
    bleeds across validity boundaries.
    """
    h2 = depth.height // 2
    w2 = depth.width // 2
    d = depth.depth[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2)
    v = depth.valid[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2)
    all_valid = v.all(axis=(1, 3))
    mean = np.where(all_valid, d.mean(axis=(1, 3)), 0.0)
    return DepthMap(np.where(all_valid, mean, 1.0), all_valid)
