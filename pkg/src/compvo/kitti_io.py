"""KITTI odometry style ingestion and export.

Directory layout: ``sequences/NN/image_0/*.png`` (optionally ``depth_0``),
``sequences/NN/calib.txt``, ``poses/NN.txt``. Pose files hold one row-major
3x4 [R|t] matrix (12 reals) per line. Depth images are 16-bit PNGs divided
by a scale (256 by convention, zero means invalid) or raw ``.npy`` planes.
Images load as grayscale in [0, 1]; color inputs collapse through the
ITU-R 601 luma weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .camera import Intrinsics
from .metrics import Trajectory
from .planes import DepthMap, GrayImage
from .se3 import SE3

# Rotation blocks drifting beyond this are rejected as corrupt data; smaller
# drift is silently re-orthonormalized.
POSE_ROTATION_TOL = 1e-4

DEFAULT_DEPTH_SCALE = 256.0

_LUMA = np.array([0.299, 0.587, 0.114])

_PALETTE = ("#ff7f0e", "#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


class PoseFileError(ValueError):
    """Malformed or inconsistent pose file; message names the line."""


class CalibFileError(ValueError):
    """Calibration file lacks a usable projection-matrix line."""


def load_poses(path) -> Trajectory:
    """Read a pose file into a camera-to-world trajectory."""
    poses: list[SE3] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            tokens = line.split()
            if len(tokens) != 12:
                raise PoseFileError(
                    f"{path}: line {lineno}: expected 12 values, got {len(tokens)}"
                )
            try:
                values = np.array([float(tok) for tok in tokens])
            except ValueError as err:
                raise PoseFileError(
                    f"{path}: line {lineno}: non-numeric value ({err})"
                ) from None
            mat = values.reshape(3, 4)
            rot = mat[:, :3]
            drift = float(np.max(np.abs(rot.T @ rot - np.eye(3))))
            if drift > POSE_ROTATION_TOL or np.linalg.det(rot) <= 0.0:
                raise PoseFileError(
                    f"{path}: line {lineno}: rotation block is not orthonormal "
                    f"(drift {drift:.3g})"
                )
            poses.append(SE3(rot, mat[:, 3]))
    return Trajectory(tuple(poses))


def save_trajectory(traj: Trajectory, path) -> None:
    """Write a trajectory in the 12-numbers-per-line pose format."""
    lines = []
    for pose in traj.poses:
        row = pose.matrix()[:3].reshape(-1)
        lines.append(" ".join(f"{v:.12g}" for v in row))
    with open(path, "w", encoding="ascii") as fh:
        if lines:
            fh.write("\n".join(lines) + "\n")


def load_intrinsics(path, width: int, height: int, key: str = "P0") -> Intrinsics:
    """Pinhole intrinsics from a calib.txt projection-matrix line.

    fx, fy, cx, cy come from the projection matrix; the image size is not in
    the file and must be supplied. Rescale afterwards with
    ``Intrinsics.rescaled`` if the frames were resized.
    """
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            if not line.startswith(key + ":"):
                continue
            tokens = line.split(":", 1)[1].split()
            if len(tokens) != 12:
                raise CalibFileError(
                    f"{path}: {key} line must carry 12 values, got {len(tokens)}"
                )
            values = [float(tok) for tok in tokens]
            return Intrinsics(
                fx=values[0], fy=values[5], cx=values[2], cy=values[6],
                width=width, height=height,
            )
    raise CalibFileError(f"{path}: no '{key}:' projection line found")


def save_intrinsics(intrinsics: Intrinsics, path, key: str = "P0") -> None:
    values = [
        intrinsics.fx, 0.0, intrinsics.cx, 0.0,
        0.0, intrinsics.fy, intrinsics.cy, 0.0,
        0.0, 0.0, 1.0, 0.0,
    ]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(key + ": " + " ".join(f"{v:.12g}" for v in values) + "\n")


def load_image(path) -> GrayImage:
    """Load a PNG/PNM image as grayscale in [0, 1]; 255 maps exactly to 1."""
    with Image.open(path) as img:
        if img.mode in ("RGB", "RGBA", "P"):
            arr = np.asarray(img.convert("RGB"), dtype=np.float64)
            plane = (arr @ _LUMA) / 255.0
        elif img.mode in ("I", "I;16", "I;16B"):
            plane = np.asarray(img, dtype=np.float64) / 65535.0
        elif img.mode == "L":
            plane = np.asarray(img, dtype=np.float64) / 255.0
        elif img.mode == "F":
            plane = np.asarray(img, dtype=np.float64)
        else:
            plane = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    return GrayImage(np.clip(plane, 0.0, 1.0))


def save_image(img: GrayImage, path) -> None:
    """Store as 8-bit grayscale PNG/PNM (by extension)."""
    data = np.round(img.pixels * 255.0).astype(np.uint8)
    Image.fromarray(data).save(path)


def load_depth(path, scale: float = DEFAULT_DEPTH_SCALE) -> DepthMap:
    """Load a depth plane; 16-bit PNG values divide by ``scale``, 0 = invalid.

    ``.npy`` files load as raw float planes where non-positive entries are
    invalid.
    """
    path = Path(path)
    if path.suffix == ".npy":
        plane = np.load(path).astype(np.float64)
    else:
        with Image.open(path) as img:
            raw = np.asarray(img, dtype=np.float64)
        if raw.ndim != 2:
            raise ValueError(f"{path}: depth image must be single-channel")
        plane = raw / scale
    return DepthMap(plane)


def save_depth(depth: DepthMap, path, scale: float = DEFAULT_DEPTH_SCALE) -> None:
    """Store as 16-bit PNG times ``scale`` (invalid pixels write 0) or .npy."""
    path = Path(path)
    if path.suffix == ".npy":
        np.save(path, np.where(depth.valid, depth.depth, 0.0))
        return
    quantized = np.round(np.where(depth.valid, depth.depth, 0.0) * scale)
    data = np.clip(quantized, 0, 65535).astype(np.uint16)
    Image.fromarray(data).save(path)


@dataclass(frozen=True)
class SequenceManifest:
    """Binding of one sequence to files on disk."""

    sequence_id: str
    frame_count: int
    image_dir: Path
    calib_path: Path | None = None
    pose_path: Path | None = None
    depth_dir: Path | None = None
    depth_scale: float = DEFAULT_DEPTH_SCALE

    def image_path(self, frame: int) -> Path:
        return self.image_dir / f"{frame:06d}.png"

    def depth_path(self, frame: int) -> Path:
        if self.depth_dir is None:
            raise ValueError("manifest has no depth directory")
        png = self.depth_dir / f"{frame:06d}.png"
        if png.exists():
            return png
        return self.depth_dir / f"{frame:06d}.npy"


def discover_sequence(root, sequence_id: str = "00") -> SequenceManifest:
    """Scan a KITTI-layout root; a ``manifest.json`` beside it wins if present.

    Image files must be named 000000.png, 000001.png, ... with contiguous
    indices from zero.
    """
    root = Path(root)
    override = root / "manifest.json"
    if override.exists():
        return manifest_from_json(override, root)

    seq_dir = root / "sequences" / sequence_id
    image_dir = seq_dir / "image_0"
    if not image_dir.is_dir():
        raise FileNotFoundError(f"no image directory at {image_dir}")
    frames = sorted(image_dir.glob("*.png"))
    if not frames:
        raise FileNotFoundError(f"no frames found in {image_dir}")
    for i, frame in enumerate(frames):
        if frame.stem != f"{i:06d}":
            raise ValueError(
                f"{image_dir}: frame files must be contiguous from 000000, "
                f"found {frame.name} at position {i}"
            )
    calib = seq_dir / "calib.txt"
    poses = root / "poses" / f"{sequence_id}.txt"
    depth_dir = seq_dir / "depth_0"
    return SequenceManifest(
        sequence_id=sequence_id,
        frame_count=len(frames),
        image_dir=image_dir,
        calib_path=calib if calib.exists() else None,
        pose_path=poses if poses.exists() else None,
        depth_dir=depth_dir if depth_dir.is_dir() else None,
    )


def manifest_from_json(path, root=None) -> SequenceManifest:
    path = Path(path)
    base = Path(root) if root is not None else path.parent
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    image_dir = base / data["image_dir"]
    frames = sorted(image_dir.glob("*.png"))
    count = int(data.get("frame_count", len(frames)))
    if count != len(frames):
        raise ValueError(
            f"{path}: manifest frame_count {count} != {len(frames)} files found"
        )
    return SequenceManifest(
        sequence_id=str(data.get("sequence", "00")),
        frame_count=count,
        image_dir=image_dir,
        calib_path=base / data["calib"] if "calib" in data else None,
        pose_path=base / data["poses"] if "poses" in data else None,
        depth_dir=base / data["depth_dir"] if "depth_dir" in data else None,
        depth_scale=float(data.get("depth_scale", DEFAULT_DEPTH_SCALE)),
    )


def load_frames(manifest: SequenceManifest) -> list[GrayImage]:
    return [load_image(manifest.image_path(i)) for i in range(manifest.frame_count)]


def load_depths(manifest: SequenceManifest) -> list[DepthMap]:
    return [
        load_depth(manifest.depth_path(i), manifest.depth_scale)
        for i in range(manifest.frame_count)
    ]


def emit_plot(trajectories: Sequence[tuple[str, Trajectory]], path) -> None:
    """Write a top-down (x-z) SVG plot and a CSV of the plotted coordinates.

    Output bytes are deterministic for identical input. The CSV lands next
    to the SVG with the extension swapped.
    """
    if not trajectories:
        raise ValueError("need at least one trajectory to plot")
    path = Path(path)
    points = []
    for label, traj in trajectories:
        t = traj.translations()
        points.append((label, t[:, 0], t[:, 2]))

    all_x = np.concatenate([p[1] for p in points])
    all_z = np.concatenate([p[2] for p in points])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    z_lo, z_hi = float(all_z.min()), float(all_z.max())
    span = max(x_hi - x_lo, z_hi - z_lo, 1e-9)
    pad = 0.05 * span
    x_lo, z_lo = x_lo - pad, z_lo - pad
    span += 2 * pad

    size = 720.0
    margin = 40.0
    scale = (size - 2 * margin) / span

    def to_svg(x: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        sx = margin + (x - x_lo) * scale
        sy = size - margin - (z - z_lo) * scale
        return sx, sy

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" '
        f'height="{size:.0f}" viewBox="0 0 {size:.0f} {size:.0f}">',
        f'<rect width="{size:.0f}" height="{size:.0f}" fill="white"/>',
    ]
    csv_lines = ["label,frame,x,z"]
    for idx, (label, x, z) in enumerate(points):
        color = _PALETTE[idx % len(_PALETTE)]
        sx, sy = to_svg(x, z)
        if len(x) == 1:
            parts.append(
                f'<circle cx="{sx[0]:.3f}" cy="{sy[0]:.3f}" r="3" fill="{color}"/>'
            )
        else:
            coords = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(sx, sy))
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                'stroke-width="1.5"/>'
            )
        y_leg = 20.0 + 16.0 * idx
        parts.append(
            f'<line x1="10" y1="{y_leg:.1f}" x2="30" y2="{y_leg:.1f}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="36" y="{y_leg + 4:.1f}" font-family="monospace" '
            f'font-size="12">{label}</text>'
        )
        for frame, (xv, zv) in enumerate(zip(x, z)):
            csv_lines.append(f"{label},{frame},{float(xv)!r},{float(zv)!r}")
    parts.append("</svg>")

    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(parts) + "\n")
    with open(path.with_suffix(".csv"), "w", encoding="ascii") as fh:
        fh.write("\n".join(csv_lines) + "\n")
