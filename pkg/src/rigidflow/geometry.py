"""Rigid-motion algebra and rectified pinhole stereo geometry.

Conventions: camera looks down +z, x right, y down. A motion maps points
from the earlier frame into the later frame, p1 = R @ p0 + t. Twists are
(v, w) with translation first; rotations are axis-angle vectors in radians.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCameraError, InvalidDisparityError

# Depth/disparity guard rails: real maps contain zeros that would otherwise
# blow up the pinhole equations.
Z_MIN = 1e-6
D_MIN = 1e-3

# Below this rotation angle Rodrigues' formula degrades to 0/0; switch to a
# second-order series.
SMALL_ANGLE = 1e-8

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class CameraRig:
    """Pinhole intrinsics plus the stereo baseline of a rectified pair."""

    fx: float
    fy: float
    cx: float
    cy: float
    baseline: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx} fy={self.fy}")
        if not self.baseline > 0:
            raise ValueError(f"baseline must be positive, got {self.baseline}")
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")


@dataclass(frozen=True)
class Twist:
    """Minimal 6-parameter motion: v translational (m), w rotational (rad)."""

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).reshape(3)
        w = np.asarray(self.w, dtype=float).reshape(3)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise ValueError("twist entries must be finite")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @staticmethod
    def zero() -> "Twist":
        return Twist(np.zeros(3), np.zeros(3))

    @staticmethod
    def from_vector(vec) -> "Twist":
        vec = np.asarray(vec, dtype=float).reshape(6)
        return Twist(vec[:3], vec[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.v, self.w])


@dataclass(frozen=True)
class RigidMotion:
    """SE(3) element: orthonormal rotation matrix plus translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray
    _checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        if not self._checked:
            if not np.all(np.isfinite(r)) or not np.all(np.isfinite(t)):
                raise ValueError("motion entries must be finite")
            if np.max(np.abs(r.T @ r - np.eye(3))) > _ORTHO_TOL:
                raise ValueError("rotation is not orthonormal")
            if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
                raise ValueError("rotation determinant is not +1")

    @staticmethod
    def identity() -> "RigidMotion":
        return RigidMotion(np.eye(3), np.zeros(3), _checked=True)


def _skew(w: np.ndarray) -> np.ndarray:
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def exp_map(t: Twist) -> RigidMotion:
    """SE(3) exponential of a twist (Rodrigues with small-angle series)."""
    w = t.w
    theta = float(np.linalg.norm(w))
    k = _skew(w)
    k2 = k @ k
    if theta < SMALL_ANGLE:
        rot = np.eye(3) + k + 0.5 * k2
        vmat = np.eye(3) + 0.5 * k + k2 / 6.0
    else:
        s, c = np.sin(theta), np.cos(theta)
        rot = np.eye(3) + (s / theta) * k + ((1.0 - c) / theta**2) * k2
        vmat = np.eye(3) + ((1.0 - c) / theta**2) * k + ((theta - s) / theta**3) * k2
    # Renormalize so long composition chains keep the type invariant.
    u, _, vt = np.linalg.svd(rot)
    rot = u @ vt
    if np.linalg.det(rot) < 0:
        rot = u @ np.diag([1.0, 1.0, -1.0]) @ vt
    return RigidMotion(rot, vmat @ t.v, _checked=True)


def log_map(m: RigidMotion) -> Twist:
    """Inverse of exp_map for rotation angles below pi."""
    r = m.rotation
    cos_theta = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    theta = float(np.arccos(cos_theta))
    if theta < SMALL_ANGLE:
        w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) / 2.0
        k = _skew(w)
        vinv = np.eye(3) - 0.5 * k + (k @ k) / 12.0
        return Twist(vinv @ m.translation, w)
    if theta > np.pi - 1e-6:
        # Axis from the symmetric part; sign fixed from the skew part.
        a = np.sqrt(np.maximum(0.0, (np.diag(r) + 1.0) / 2.0))
        i = int(np.argmax(a))
        axis = np.zeros(3)
        axis[i] = a[i]
        others = [j for j in range(3) if j != i]
        for j in others:
            axis[j] = (r[i, j] + r[j, i]) / (4.0 * a[i])
        skew_part = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
        if np.dot(axis, skew_part) < 0:
            axis = -axis
        w = axis / np.linalg.norm(axis) * theta
    else:
        w = theta / (2.0 * np.sin(theta)) * np.array(
            [r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]
        )
    k = _skew(w)
    k2 = k @ k
    half = theta / 2.0
    vinv = np.eye(3) - 0.5 * k + ((1.0 - half / np.tan(half)) / theta**2) * k2
    return Twist(vinv @ m.translation, w)


def compose(a: RigidMotion, b: RigidMotion) -> RigidMotion:
    """Motion applying b first, then a."""
    return RigidMotion(a.rotation @ b.rotation,
                       a.rotation @ b.translation + a.translation,
                       _checked=True)


def inverse(m: RigidMotion) -> RigidMotion:
    return RigidMotion(m.rotation.T, -(m.rotation.T @ m.translation), _checked=True)


def transform_point(m: RigidMotion, x) -> np.ndarray:
    """Apply the motion to one point (3,) or a batch (N, 3)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return m.rotation @ x + m.translation
    return x @ m.rotation.T + m.translation


def project(rig: CameraRig, x) -> np.ndarray:
    """Perspective projection to continuous (sub-pixel) image coordinates."""
    x = np.asarray(x, dtype=float)
    z = x[..., 2]
    if np.any(z <= Z_MIN):
        raise BehindCameraError(f"cannot project point(s) with depth <= {Z_MIN}")
    u = rig.fx * x[..., 0] / z + rig.cx
    v = rig.fy * x[..., 1] / z + rig.cy
    return np.stack([u, v], axis=-1)


def back_project(rig: CameraRig, p, d) -> np.ndarray:
    """Lift pixel(s) with disparity to 3D, using depth Z = fx * baseline / d."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(d <= D_MIN):
        raise InvalidDisparityError(f"disparity must exceed {D_MIN} px")
    z = rig.fx * rig.baseline / d
    x = (p[..., 0] - rig.cx) * z / rig.fx
    y = (p[..., 1] - rig.cy) * z / rig.fy
    return np.stack([x, y, z], axis=-1)


def disparity_of(rig: CameraRig, x) -> np.ndarray:
    """Disparity of 3D point(s); inverse of the depth relation in back_project."""
    x = np.asarray(x, dtype=float)
    z = x[..., 2]
    if np.any(z <= Z_MIN):
        raise BehindCameraError(f"cannot compute disparity for depth <= {Z_MIN}")
    return rig.fx * rig.baseline / z
