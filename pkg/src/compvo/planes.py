"""Per-pixel plane types shared by the warping, loss, and I/O layers.

All planes are immutable float64 (or bool) numpy arrays over an H x W grid.
Constructors validate the value-range invariants once, so downstream code can
operate on the raw arrays without re-checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Convex combinations of in-range values can overshoot [0, 1] by a few ulp;
# anything beyond this slack is a real range violation.
_RANGE_SLACK = 1e-9


def _as_plane(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D plane, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty")
    return arr


def _unit_range(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    lo = float(arr.min())
    hi = float(arr.max())
    if lo < -_RANGE_SLACK or hi > 1.0 + _RANGE_SLACK:
        raise ValueError(f"{name} values must lie in [0, 1], got [{lo}, {hi}]")
    out = np.clip(arr, 0.0, 1.0)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GrayImage:
    """Single-channel intensity plane with values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = _unit_range(_as_plane(self.pixels, "image"), "image")
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @classmethod
    def constant(cls, height: int, width: int, value: float = 0.0) -> "GrayImage":
        return cls(np.full((height, width), value, dtype=np.float64))


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel depth plane (scene units) with a validity flag.

    Valid entries must be strictly positive and finite. When ``valid`` is not
    given, it defaults to exactly that predicate, so zero or negative depths
    (the on-disk "missing" convention) load as invalid pixels.
    """

    depth: np.ndarray
    valid: np.ndarray | None = None

    def __post_init__(self) -> None:
        depth = _as_plane(self.depth, "depth")
        if self.valid is None:
            valid = np.isfinite(depth) & (depth > 0.0)
        else:
            valid = np.asarray(self.valid, dtype=bool)
            if valid.shape != depth.shape:
                raise ValueError("depth and validity shapes differ")
            marked = depth[valid]
            if marked.size and not (
                np.all(np.isfinite(marked)) and np.all(marked > 0.0)
            ):
                raise ValueError("valid depths must be strictly positive and finite")
        depth = np.array(depth)
        depth.setflags(write=False)
        valid = np.array(valid)
        valid.setflags(write=False)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "valid", valid)

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @classmethod
    def constant(cls, height: int, width: int, value: float) -> "DepthMap":
        return cls(np.full((height, width), float(value)))


@dataclass(frozen=True)
class ValidityMask:
    """Per-pixel weight in [0, 1].

    Warping produces binary {0, 1} masks; plugged-in mask predictors may
    produce continuous weights.
    """

    weights: np.ndarray

    def __post_init__(self) -> None:
        arr = _unit_range(_as_plane(self.weights, "mask"), "mask")
        object.__setattr__(self, "weights", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    @classmethod
    def ones(cls, height: int, width: int) -> "ValidityMask":
        return cls(np.ones((height, width), dtype=np.float64))

    @classmethod
    def from_bool(cls, flags: np.ndarray) -> "ValidityMask":
        return cls(np.asarray(flags, dtype=bool).astype(np.float64))

    def coverage(self) -> float:
        """Mean weight, i.e. the fraction of the grid that contributes."""
        return float(self.weights.mean())


@dataclass(frozen=True)
class Pyramid:
    """Image pyramid: level 0 is full resolution, each level halves (floor)."""

    levels: tuple[GrayImage, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        levels = tuple(self.levels)
        if not levels:
            raise ValueError("pyramid needs at least one level")
        for prev, cur in zip(levels, levels[1:]):
            expect = (prev.height // 2, prev.width // 2)
            if cur.shape != expect:
                raise ValueError(
                    f"pyramid level shape {cur.shape} does not halve {prev.shape}"
                )
        object.__setattr__(self, "levels", levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, level: int) -> GrayImage:
        return self.levels[level]
