"""SE(3) rigid-transformation algebra.

A pose is a rotation (3x3, determinant +1) plus a translation (3-vector).
Small motions are parameterized as a 6-DoF twist of three Euler angles and a
3-D translation; the rotation convention is R = Rz(rz) @ Ry(ry) @ Rx(rx)
applied to column vectors. All values are immutable after construction and
all operations are pure functions, so they are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Orthonormality drift above this triggers an SVD re-projection onto SO(3).
ORTHONORMALITY_TOL = 1e-9


def _nearest_rotation(matrix: np.ndarray) -> np.ndarray:
    """Project a near-rotation matrix onto SO(3) via SVD."""
    u, _, vt = np.linalg.svd(matrix)
    if np.linalg.det(u) * np.linalg.det(vt) < 0.0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
    return u @ vt


def _frozen_array(values, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("array contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Twist:
    """6-DoF motion: Euler angles (radians) and translation (scene units).

    Angles are kept below pi in magnitude; increments produced by the
    estimators are small by design.
    """

    rx: float = 0.0
    ry: float = 0.0
    rz: float = 0.0
    tx: float = 0.0
    ty: float = 0.0
    tz: float = 0.0

    def __post_init__(self) -> None:
        values = (self.rx, self.ry, self.rz, self.tx, self.ty, self.tz)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("twist components must be finite")
        if max(abs(self.rx), abs(self.ry), abs(self.rz)) >= math.pi:
            raise ValueError("twist rotation angles must satisfy |angle| < pi")

    @classmethod
    def from_array(cls, xi) -> "Twist":
        arr = np.asarray(xi, dtype=np.float64).reshape(-1)
        if arr.size != 6:
            raise ValueError("twist array must have 6 components")
        return cls(*[float(v) for v in arr])

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.rx, self.ry, self.rz, self.tx, self.ty, self.tz],
            dtype=np.float64,
        )

    def norm(self) -> float:
        """Euclidean norm over all six components."""
        return float(np.linalg.norm(self.as_array()))


def euler_rotation(rx: float, ry: float, rz: float) -> np.ndarray:
    """Rotation matrix Rz(rz) @ Ry(ry) @ Rx(rx)."""
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    r_x = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    r_y = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    r_z = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    return r_z @ r_y @ r_x


def euler_rotation_derivatives(
    rx: float, ry: float, rz: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Rotation matrix and its partial derivatives w.r.t. each Euler angle.

    Returns (R, dR/drx, dR/dry, dR/drz) under the Rz @ Ry @ Rx convention.
    """
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    r_x = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    r_y = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    r_z = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    d_x = np.array([[0.0, 0.0, 0.0], [0.0, -sx, -cx], [0.0, cx, -sx]])
    d_y = np.array([[-sy, 0.0, cy], [0.0, 0.0, 0.0], [-cy, 0.0, -sy]])
    d_z = np.array([[-sz, -cz, 0.0], [cz, -sz, 0.0], [0.0, 0.0, 0.0]])
    rot = r_z @ r_y @ r_x
    return rot, r_z @ r_y @ d_x, r_z @ d_y @ r_x, d_z @ r_y @ r_x


@dataclass(frozen=True)
class SE3:
    """Rigid transformation acting on points as p -> R @ p + t.

    The rotation block is re-orthonormalized on construction whenever its
    drift from SO(3) exceeds ORTHONORMALITY_TOL; reflections are rejected.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        rot = _frozen_array(self.rotation, (3, 3))
        trans = _frozen_array(self.translation, (3,))
        if np.linalg.det(rot) <= 0.0:
            raise ValueError("rotation block has non-positive determinant")
        drift = float(np.max(np.abs(rot.T @ rot - np.eye(3))))
        if drift > ORTHONORMALITY_TOL:
            rot = _nearest_rotation(np.array(rot))
            rot.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls) -> "SE3":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_twist(cls, tw: Twist) -> "SE3":
        return cls(
            euler_rotation(tw.rx, tw.ry, tw.rz),
            np.array([tw.tx, tw.ty, tw.tz], dtype=np.float64),
        )

    @classmethod
    def from_matrix(cls, matrix) -> "SE3":
        arr = np.asarray(matrix, dtype=np.float64)
        if arr.shape != (4, 4):
            raise ValueError("expected a 4x4 homogeneous matrix")
        if np.max(np.abs(arr[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > 1e-9:
            raise ValueError("bottom row of homogeneous matrix must be (0,0,0,1)")
        return cls(arr[:3, :3], arr[:3, 3])

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix with exact (0,0,0,1) bottom row."""
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.translation
        return out

    def apply(self, point) -> np.ndarray:
        """Act on a 3-point (or an (N, 3) stack of points)."""
        p = np.asarray(point, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def inverse(self) -> "SE3":
        rot_t = self.rotation.T
        return SE3(rot_t, -(rot_t @ self.translation))

    def is_close(self, other: "SE3", tol: float = 1e-12) -> bool:
        return (
            float(np.max(np.abs(self.rotation - other.rotation))) <= tol
            and float(np.max(np.abs(self.translation - other.translation))) <= tol
        )


def identity() -> SE3:
    return SE3.identity()


def from_twist(tw: Twist) -> SE3:
    return SE3.from_twist(tw)


def compose(delta: SE3, prev: SE3) -> SE3:
    """Compose as matrix(delta) @ matrix(prev): the new increment acts last."""
    rot = delta.rotation @ prev.rotation
    trans = delta.rotation @ prev.translation + delta.translation
    return SE3(rot, trans)


def inverse(transform: SE3) -> SE3:
    return transform.inverse()


def apply(transform: SE3, point) -> np.ndarray:
    return transform.apply(point)


def to_twist(transform: SE3) -> Twist:
    """Recover the 6-DoF parameters of a pose with |ry| < pi/2.

    Inverse of SE3.from_twist away from the ry = +-pi/2 singularity; used for
    reporting, not for composition.
    """
    rot = transform.rotation
    ry = math.asin(max(-1.0, min(1.0, -rot[2, 0])))
    if abs(math.cos(ry)) < 1e-9:
        # Gimbal singularity: rx and rz are coupled, pin rx = 0.
        rx = 0.0
        rz = math.atan2(-rot[0, 1], rot[1, 1])
    else:
        rx = math.atan2(rot[2, 1], rot[2, 2])
        rz = math.atan2(rot[1, 0], rot[0, 0])
    t = transform.translation
    return Twist(rx, ry, rz, float(t[0]), float(t[1]), float(t[2]))
