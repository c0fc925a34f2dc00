"""Synthetic planar scenes with exact ground truth.

Renders a textured plane analytically: every pixel ray is intersected with
the plane in closed form and the texture (a fixed-seed sum of smooth
sinusoids) is evaluated at the hit point. Rendering shares no code with the
warping pipeline, so these scenes serve as an independent oracle for the
pose estimator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .camera import Intrinsics
from .planes import DepthMap, GrayImage
from .se3 import SE3, Twist, compose
from .metrics import Trajectory

DEFAULT_WIDTH = 192
DEFAULT_HEIGHT = 64
DEFAULT_DEPTH = 5.0

# Texture wavelengths in pixels at the nominal plane depth. The lower bound
# keeps the bilinear-resampling error of a rendered view below ~1e-3 and the
# gradient gentle enough for coarse-to-fine alignment.
_MIN_WAVELENGTH_PX = 28.0
_MAX_WAVELENGTH_PX = 80.0
_TOTAL_AMPLITUDE = 0.35
_N_WAVES = 6


@dataclass(frozen=True)
class SyntheticScene:
    """A textured world plane z = d0 + slope_x * x + slope_y * y."""

    intrinsics: Intrinsics
    d0: float = DEFAULT_DEPTH
    slope_x: float = 0.0
    slope_y: float = 0.0
    seed: int = 0
    # Per-wave parameters, derived from the seed: (freq, angle, phase, amp).
    waves: tuple[tuple[float, float, float, float], ...] = field(init=False)

    def __post_init__(self) -> None:
        if not (np.isfinite(self.d0) and self.d0 > 0.0):
            raise ValueError(f"plane depth must be positive, got {self.d0}")
        rng = np.random.default_rng(self.seed)
        # World-units-per-pixel at the nominal depth sets the frequency band.
        unit_per_px = self.d0 / max(self.intrinsics.fx, self.intrinsics.fy)
        waves = []
        amp = _TOTAL_AMPLITUDE / _N_WAVES
        for _ in range(_N_WAVES):
            wavelength_px = rng.uniform(_MIN_WAVELENGTH_PX, _MAX_WAVELENGTH_PX)
            freq = 2.0 * np.pi / (wavelength_px * unit_per_px)
            angle = rng.uniform(0.0, np.pi)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            waves.append((float(freq), float(angle), float(phase), amp))
        object.__setattr__(self, "waves", tuple(waves))

    def texture(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Closed-form texture at world plane coordinates (C1-smooth)."""
        value = np.full_like(np.asarray(x, dtype=np.float64), 0.5)
        for freq, angle, phase, amp in self.waves:
            along = x * np.cos(angle) + y * np.sin(angle)
            value = value + amp * np.sin(freq * along + phase)
        return value

    def to_config(self) -> dict:
        return {
            "width": self.intrinsics.width,
            "height": self.intrinsics.height,
            "fx": self.intrinsics.fx,
            "fy": self.intrinsics.fy,
            "cx": self.intrinsics.cx,
            "cy": self.intrinsics.cy,
            "plane_depth": self.d0,
            "slope_x": self.slope_x,
            "slope_y": self.slope_y,
            "seed": self.seed,
        }


def default_intrinsics(
    width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT
) -> Intrinsics:
    """Desk-scale camera: focal length roughly 1.25x the image width."""
    f = 1.25 * width
    return Intrinsics(f, f, width / 2.0, height / 2.0, width, height)


def make_scene(
    seed: int = 0,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
    d0: float = DEFAULT_DEPTH,
    slope_x: float = 0.0,
    slope_y: float = 0.0,
    intrinsics: Intrinsics | None = None,
) -> SyntheticScene:
    k = intrinsics if intrinsics is not None else default_intrinsics(width, height)
    return SyntheticScene(k, d0=d0, slope_x=slope_x, slope_y=slope_y, seed=seed)


def scene_from_config(config: dict) -> SyntheticScene:
    width = int(config.get("width", DEFAULT_WIDTH))
    height = int(config.get("height", DEFAULT_HEIGHT))
    if "fx" in config:
        k = Intrinsics(
            float(config["fx"]),
            float(config.get("fy", config["fx"])),
            float(config.get("cx", width / 2.0)),
            float(config.get("cy", height / 2.0)),
            width,
            height,
        )
    else:
        k = default_intrinsics(width, height)
    return SyntheticScene(
        k,
        d0=float(config.get("plane_depth", DEFAULT_DEPTH)),
        slope_x=float(config.get("slope_x", 0.0)),
        slope_y=float(config.get("slope_y", 0.0)),
        seed=int(config.get("seed", 0)),
    )


def render(scene: SyntheticScene, pose: SE3) -> tuple[GrayImage, DepthMap]:
    """Render the plane from a camera-to-world pose.

    Raises if any pixel ray fails to hit the plane in front of the camera;
    the generator is meant for configurations where the whole plane is
    visible.
    """
    k = scene.intrinsics
    h, w = k.height, k.width
    u, v = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    # Ray directions in world coordinates (unnormalized, z-component 1 in cam).
    dx = (u - k.cx) / k.fx
    dy = (v - k.cy) / k.fy
    dirs_cam = np.stack([dx, dy, np.ones_like(dx)], axis=-1)
    rot = pose.rotation
    origin = pose.translation
    dirs_world = dirs_cam @ rot.T

    # Plane n . X = d0 with n = (-slope_x, -slope_y, 1).
    normal = np.array([-scene.slope_x, -scene.slope_y, 1.0])
    denom = dirs_world @ normal
    numer = scene.d0 - float(origin @ normal)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hit = numer / denom
    if not np.all(np.isfinite(t_hit)) or np.any(t_hit <= 0.0):
        raise ValueError("plane is not fully in front of the camera for this pose")

    hits = origin + dirs_world * t_hit[..., None]
    # Camera-frame depth equals the ray parameter because dirs_cam has z = 1.
    depth = t_hit
    tex = scene.texture(hits[..., 0], hits[..., 1])
    return GrayImage(np.clip(tex, 0.0, 1.0)), DepthMap(depth)


def make_sequence(
    scene: SyntheticScene, motion: Twist | list[Twist], n_frames: int
) -> tuple[list[GrayImage], list[DepthMap], Trajectory]:
    """Render frames along accumulated per-frame motion with ground truth.

    ``motion`` gives the camera-to-camera step per frame, either one twist
    reused for every step or one per step. The returned trajectory holds
    camera-to-world poses anchored at identity.
    """
    if n_frames < 1:
        raise ValueError("need at least one frame")
    if isinstance(motion, Twist):
        steps = [motion] * (n_frames - 1)
    else:
        steps = list(motion)
        if len(steps) < n_frames - 1:
            raise ValueError("need a motion step per frame transition")
    poses = [SE3.identity()]
    for tw in steps[: n_frames - 1]:
        # Camera-to-world accumulates on the right: new pose = prev . step.
        poses.append(compose(poses[-1], SE3.from_twist(tw)))
    frames: list[GrayImage] = []
    depths: list[DepthMap] = []
    for pose in poses:
        img, depth = render(scene, pose)
        frames.append(img)
        depths.append(depth)
    return frames, depths, Trajectory(tuple(poses))


def load_scene_config(path) -> SyntheticScene:
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_config(json.load(fh))
