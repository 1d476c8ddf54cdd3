"""Pure numeric kernels: back-projection, point clouds, egocentric motion, pose ops.

Camera convention throughout: +x right, +y down, +z forward (OpenCV style).
Extrinsics are world-to-camera: x_cam = R @ x_world + t.
All public rotation angles are in degrees.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCloudError, InsufficientViewsError, InvalidDepthError

# Horizontal displacements shorter than this count as no motion at all.
EPS_MOVE = 1e-6

# Default exploration step sizes (degrees / scene units).
DEFAULT_ROTATE_DEG = 45.0
DEFAULT_MOVE_STEP = 0.3

ORTHONORMAL_TOL = 1e-6


def _as_readonly(a, shape, dtype=np.float64):
    arr = np.asarray(a, dtype=dtype)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    arr = np.array(arr)  # private copy
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixel units, factored form of the 3x3 K matrix."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def matrix(self):
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    @classmethod
    def from_matrix(cls, k, width, height):
        k = np.asarray(k, dtype=np.float64).reshape(3, 3)
        return cls(fx=float(k[0, 0]), fy=float(k[1, 1]),
                   cx=float(k[0, 2]), cy=float(k[1, 2]),
                   width=int(width), height=int(height))


@dataclass(frozen=True, eq=False)
class ExtrinsicPose:
    """World-to-camera rigid transform [R | t]."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "R", _as_readonly(self.R, (3, 3)))
        object.__setattr__(self, "t", _as_readonly(self.t, (3,)))
        err = np.abs(self.R @ self.R.T - np.eye(3)).max()
        if err > ORTHONORMAL_TOL:
            raise ValueError(f"rotation not orthonormal (max deviation {err:.2e})")
        if abs(np.linalg.det(self.R) - 1.0) > ORTHONORMAL_TOL:
            raise ValueError("rotation must have determinant +1")

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @property
    def center(self):
        """Camera center in world coordinates, C = -R^T t."""
        return -self.R.T @ self.t

    @property
    def forward(self):
        """World-frame view direction, R^T (0,0,1)."""
        return self.R.T @ np.array([0.0, 0.0, 1.0])

    @property
    def matrix34(self):
        return np.hstack([self.R, self.t[:, None]])

    def allclose(self, other, atol=1e-9):
        return (np.allclose(self.R, other.R, atol=atol)
                and np.allclose(self.t, other.t, atol=atol))


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Row-major scalar raster in scene units; optional per-pixel confidence."""

    values: np.ndarray
    confidence: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("depth values must be a HxW raster")
        v = np.array(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.confidence is not None:
            c = _as_readonly(self.confidence, v.shape)
            if (c[np.isfinite(c)] < 0).any():
                raise ValueError("confidence must be non-negative")
            object.__setattr__(self, "confidence", c)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class PointCloud:
    """World-space colored points; colors are RGB in [0, 1]."""

    points: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        p = _as_readonly(self.points, (len(self.points), 3))
        c = _as_readonly(self.colors, (len(self.colors), 3))
        if len(p) != len(c):
            raise ValueError("points and colors must have equal counts")
        if not np.isfinite(p).all():
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "colors", c)

    def __len__(self):
        return len(self.points)


class MotionLabel(str, enum.Enum):
    FORWARD = "forward"
    FORWARD_RIGHT = "forward-right"
    RIGHT = "right"
    BACKWARD_RIGHT = "backward-right"
    BACKWARD = "backward"
    BACKWARD_LEFT = "backward-left"
    LEFT = "left"
    FORWARD_LEFT = "forward-left"
    NEGLIGIBLE = "negligible"

    def __str__(self):
        return self.value


def back_project(pixel, depth, intrinsics):
    """Lift a pixel plus depth into a camera-frame 3D point.

    Returns (d*(u-cx)/fx, d*(v-cy)/fy, d).
    """
    if not (np.isfinite(depth) and depth > 0):
        raise InvalidDepthError(f"depth must be positive and finite, got {depth!r}")
    u, v = pixel
    return np.array([
        depth * (u - intrinsics.cx) / intrinsics.fx,
        depth * (v - intrinsics.cy) / intrinsics.fy,
        depth,
    ])


def cam_to_world(point_cam, pose):
    """Map a camera-frame point to world coordinates: R^T (x - t)."""
    return pose.R.T @ (np.asarray(point_cam, dtype=np.float64) - pose.t)


def world_to_cam(point_world, pose):
    return pose.R @ np.asarray(point_world, dtype=np.float64) + pose.t


def camera_center(pose):
    """Camera position in world coordinates, -R^T t."""
    return pose.center


def build_point_cloud(bundle, stride=1, confidence_min=0.0,
                      depth_min=None, depth_max=None):
    """Back-project every retained pixel of every frame into a world point cloud.

    Ordering is frame-major, row-major. Colors are sampled from the source
    image at the pixel. Raises EmptyCloudError when every pixel is filtered.
    """
    all_points = []
    all_colors = []
    for frame in bundle.frames:
        depth = frame.depth.values
        h, w = depth.shape
        vs, us = np.mgrid[0:h:stride, 0:w:stride]
        us = us.ravel()
        vs = vs.ravel()
        d = depth[vs, us]
        keep = np.isfinite(d) & (d > 0)
        if depth_min is not None:
            keep &= d >= depth_min
        if depth_max is not None:
            keep &= d <= depth_max
        if confidence_min > 0 and frame.depth.confidence is not None:
            keep &= frame.depth.confidence[vs, us] >= confidence_min
        us, vs, d = us[keep], vs[keep], d[keep]
        if us.size == 0:
            continue
        k = frame.intrinsics
        x = d * (us - k.cx) / k.fx
        y = d * (vs - k.cy) / k.fy
        pts_cam = np.stack([x, y, d], axis=1)
        pose = frame.pose
        pts_world = (pts_cam - pose.t) @ pose.R  # == (R^T (p - t))^T row-wise
        colors = frame.image[vs, us].astype(np.float64) / 255.0
        all_points.append(pts_world)
        all_colors.append(colors)
    if not all_points:
        raise EmptyCloudError("all pixels were filtered out")
    return PointCloud(np.concatenate(all_points), np.concatenate(all_colors))


def egocentric_displacement(pose1, pose2):
    """Displacement between camera centers expressed in camera 1's frame."""
    return pose1.R @ (pose2.center - pose1.center)


def yaw_angle(displacement):
    """Horizontal heading of a displacement in degrees, atan2(d_x, d_z).

    0 deg is straight ahead, positive angles swing to the right. The vertical
    (y) component is ignored. Returns None when the horizontal component is
    below EPS_MOVE (negligible motion).
    """
    d = np.asarray(displacement, dtype=np.float64)
    dx, dz = d[0], d[2]
    if math.hypot(dx, dz) < EPS_MOVE:
        return None
    return math.degrees(math.atan2(dx, dz))


_SECTOR_ORDER = [
    MotionLabel.FORWARD,
    MotionLabel.FORWARD_RIGHT,
    MotionLabel.RIGHT,
    MotionLabel.BACKWARD_RIGHT,
    MotionLabel.BACKWARD,
    MotionLabel.BACKWARD_LEFT,
    MotionLabel.LEFT,
    MotionLabel.FORWARD_LEFT,
]


def discretize_motion(theta):
    """Map a yaw angle in (-180, 180] to one of eight 45-degree sectors.

    Sectors are centered on the canonical directions and half-open on the
    upper edge; e.g. forward = [-22.5, 22.5), backward = [157.5, 180] plus
    (-180, -157.5).
    """
    if theta is None:
        return MotionLabel.NEGLIGIBLE
    if not (-180.0 < theta <= 180.0):
        raise ValueError(f"theta must be in (-180, 180], got {theta}")
    # Shift so sector k covers [45k - 22.5, 45k + 22.5); 180 folds onto backward.
    idx = int(math.floor((theta + 22.5) / 45.0)) % 8
    return _SECTOR_ORDER[idx]


def classify_motion(pose1, pose2):
    """MotionLabel of the move from pose1 to pose2."""
    return discretize_motion(yaw_angle(egocentric_displacement(pose1, pose2)))


def describe_camera_motion(extrinsics, units="normalized"):
    """Render an ordered pose list into one line of motion text per step.

    Views are 1-indexed. Distances carry a unit suffix only for metric
    bundles. A vertical qualifier is appended when the vertical component
    dominates a quarter of the total displacement.
    """
    poses = list(extrinsics)
    if len(poses) < 2:
        raise InsufficientViewsError("need at least 2 poses to describe motion")
    unit_suffix = " meters" if units == "metric-meters" else ""
    lines = []
    for i in range(len(poses) - 1):
        p1, p2 = poses[i], poses[i + 1]
        delta_world = p2.center - p1.center
        dist = float(np.linalg.norm(delta_world))
        disp = egocentric_displacement(p1, p2)
        label = discretize_motion(yaw_angle(disp))
        vertical = ""
        if dist > EPS_MOVE and abs(disp[1]) > 0.25 * dist:
            vertical = " while moving up" if disp[1] < 0 else " while moving down"
        prefix = f"From view {i + 1} to view {i + 2}:"
        if label is MotionLabel.NEGLIGIBLE:
            lines.append(f"{prefix} negligible motion{vertical}")
        else:
            lines.append(
                f"{prefix} moved {label}{vertical} "
                f"(distance {dist:.3f}{unit_suffix})"
            )
    return "\n".join(lines)


_QUADRANT_CS = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0),
                180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}


def _rot_y(phi_deg):
    # exact values at quadrant angles so turn_around is an exact involution
    cs = _QUADRANT_CS.get(phi_deg % 360.0)
    if cs is None:
        phi = math.radians(phi_deg)
        cs = (math.cos(phi), math.sin(phi))
    c, s = cs
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotate_yaw_in_place(pose, phi_deg):
    """Pan the camera about the world y-axis through its own center.

    Positive phi swings the view direction toward the camera's +x (right).
    The camera center is preserved.
    """
    center = pose.center
    r_c2w = _rot_y(phi_deg) @ pose.R.T
    r_w2c = r_c2w.T
    return ExtrinsicPose(r_w2c, -r_w2c @ center)


def rotate_right(pose, angle=DEFAULT_ROTATE_DEG):
    return rotate_yaw_in_place(pose, +angle)


def rotate_left(pose, angle=DEFAULT_ROTATE_DEG):
    return rotate_yaw_in_place(pose, -angle)


def turn_around(pose):
    return rotate_yaw_in_place(pose, 180.0)


def move_forward(pose, distance=DEFAULT_MOVE_STEP):
    """Translate the camera along its view direction; rotation unchanged."""
    if distance < 0:
        raise ValueError("distance must be non-negative")
    new_center = pose.center + distance * pose.forward
    return ExtrinsicPose(pose.R, -pose.R @ new_center)


def move_backward(pose, distance=DEFAULT_MOVE_STEP):
    if distance < 0:
        raise ValueError("distance must be non-negative")
    new_center = pose.center - distance * pose.forward
    return ExtrinsicPose(pose.R, -pose.R @ new_center)
