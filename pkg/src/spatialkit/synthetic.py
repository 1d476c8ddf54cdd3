"""Analytic synthetic scenes: exact ray-cast depth, known colors, known motion.

A scene is the interior of an axis-aligned room plus spheres and boxes.
Colors are a pure function of world position (a 3D checker over a base
color), so the same surface point gets the same color from every view.
The generated GroundTruth carries analytic surface distances, per-pair
motion labels, and per-object image locations, computed with standalone
formulas so tests stay independent of the geometry module under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundle import Frame, ReconstructionBundle
from .geometry import DepthMap, ExtrinsicPose, Intrinsics

_RAY_EPS = 1e-9

SECTOR_CENTERS = {
    "forward": 0.0,
    "forward-right": 45.0,
    "right": 90.0,
    "backward-right": 135.0,
    "backward": 180.0,
    "backward-left": -135.0,
    "left": -90.0,
    "forward-left": -45.0,
}

EIGHT_SECTOR_LABELS = [
    "forward", "forward-right", "right", "backward-right",
    "backward", "backward-left", "left", "forward-left",
]


@dataclass(frozen=True)
class SceneObject:
    shape: str  # "sphere" | "box"
    center: tuple
    size: object  # radius for spheres, (hx, hy, hz) half-extents for boxes
    color: tuple

    def __post_init__(self):
        if self.shape not in ("sphere", "box"):
            raise ValueError(f"unknown shape {self.shape!r}")


@dataclass(frozen=True)
class SyntheticSceneSpec:
    room_half_extents: tuple = (4.0, 3.0, 4.0)
    objects: tuple = ()
    checker_period: float = 1.0
    trajectory: object = "orbit"  # named pattern or explicit pose list
    width: int = 256
    height: int = 192
    units: str = "normalized"

    def __post_init__(self):
        hx, hy, hz = self.room_half_extents
        for obj in self.objects:
            c = np.abs(np.asarray(obj.center, dtype=np.float64))
            if obj.shape == "sphere":
                extent = c + obj.size
            else:
                extent = c + np.asarray(obj.size, dtype=np.float64)
            if (extent > np.array([hx, hy, hz])).any():
                raise ValueError(f"object {obj} does not fit inside the room")

    def intrinsics(self):
        fx = 0.7 * self.width
        return Intrinsics(fx=fx, fy=fx,
                          cx=(self.width - 1) / 2.0, cy=(self.height - 1) / 2.0,
                          width=self.width, height=self.height)


@dataclass
class GroundTruth:
    spec: SyntheticSceneSpec
    motion_labels: list  # per consecutive pose pair, label strings
    object_pixels: list  # per frame: list of (u, v) or None per object

    def surface_distance(self, points):
        """Distance of world points to the nearest scene surface."""
        return surface_distance(self.spec, points)


def _box_boundary_distance(points, center, half_extents):
    q = np.abs(points - np.asarray(center)) - np.asarray(half_extents)
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(q.max(axis=-1), 0.0)
    return np.abs(outside + inside)


def surface_distance(spec, points):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    dists = [_box_boundary_distance(points, (0, 0, 0), spec.room_half_extents)]
    for obj in spec.objects:
        if obj.shape == "sphere":
            dists.append(np.abs(
                np.linalg.norm(points - np.asarray(obj.center), axis=-1) - obj.size))
        else:
            dists.append(_box_boundary_distance(points, obj.center, obj.size))
    return np.min(np.stack(dists), axis=0)


# --- pose construction ---------------------------------------------------------

def look_at_pose(camera_center, target):
    """World-to-camera pose at camera_center looking toward target (+y down)."""
    c = np.asarray(camera_center, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - c
    z = z / np.linalg.norm(z)
    down = np.array([0.0, 1.0, 0.0])
    x = np.cross(down, z)
    n = np.linalg.norm(x)
    if n < 1e-12:  # looking straight up/down; pick an arbitrary right vector
        x = np.array([1.0, 0.0, 0.0])
    else:
        x = x / n
    y = np.cross(z, x)
    r_c2w = np.stack([x, y, z], axis=1)
    r = r_c2w.T
    return ExtrinsicPose(r, -r @ c)


def identity_pose_at(center):
    c = np.asarray(center, dtype=np.float64)
    return ExtrinsicPose(np.eye(3), -c)


def _heading_step(heading_deg, step):
    th = math.radians(heading_deg)
    return np.array([math.sin(th) * step, 0.0, math.cos(th) * step])


def sector_trajectory(label, offset_deg=0.0, step=0.5, start=(0.0, 0.0, -1.0)):
    """Two identity-rotation poses whose displacement heads into `label`'s sector.

    The label is known by construction (|offset_deg| < 22.5), independent of
    any discretization code.
    """
    if abs(offset_deg) >= 22.5:
        raise ValueError("offset must keep the heading inside the sector")
    heading = SECTOR_CENTERS[label] + offset_deg
    p0 = np.asarray(start, dtype=np.float64)
    p1 = p0 + _heading_step(heading, step)
    return [identity_pose_at(p0), identity_pose_at(p1)], label


def named_trajectory(name, num_views=4):
    """Build a named pose pattern; returns (poses, labels or None)."""
    if name == "eight-sector":
        pos = np.array([0.0, 0.0, -1.0])
        poses = [identity_pose_at(pos)]
        for label in EIGHT_SECTOR_LABELS:
            pos = pos + _heading_step(SECTOR_CENTERS[label], 0.3)
            poses.append(identity_pose_at(pos))
        return poses, list(EIGHT_SECTOR_LABELS)
    if name == "lateral":
        starts = [np.array([-0.6 + 0.4 * i, 0.0, -1.5]) for i in range(num_views)]
        return [identity_pose_at(p) for p in starts], ["right"] * (num_views - 1)
    if name == "approach":
        starts = [np.array([0.0, 0.0, -2.0 + 0.4 * i]) for i in range(num_views)]
        return [identity_pose_at(p) for p in starts], ["forward"] * (num_views - 1)
    if name == "orbit":
        radius = 2.5
        angles = np.linspace(0.0, 0.5 * math.pi, num_views, endpoint=False)
        poses = []
        for a in angles:
            c = radius * np.array([math.sin(a), 0.0, -math.cos(a)])
            poses.append(look_at_pose(c, (0.0, 0.0, 0.0)))
        # Orbiting while facing the center: each chord points right of the
        # view direction, at 90 minus half the angular step.
        half = math.degrees(0.5 * (angles[1] - angles[0]))
        yaw = 90.0 - half
        labels = [_label_of_heading(yaw)] * (num_views - 1)
        return poses, labels
    raise ValueError(f"unknown trajectory pattern {name!r}")


def _label_of_heading(theta):
    # standalone discretization used only for ground truth
    idx = int(math.floor(((theta + 22.5) % 360.0) / 45.0)) % 8
    return EIGHT_SECTOR_LABELS[idx]


# --- ray casting -----------------------------------------------------------------

def _cast_rays(spec, pose, intr):
    """Exact depth + surface id per pixel; depth is camera-frame z (= ray t)."""
    h, w = spec.height, spec.width
    vs, us = np.mgrid[0:h, 0:w]
    dirs_cam = np.stack([
        (us - intr.cx) / intr.fx,
        (vs - intr.cy) / intr.fy,
        np.ones_like(us, dtype=np.float64),
    ], axis=-1).reshape(-1, 3)
    origin = pose.center
    dirs = dirs_cam @ pose.R  # rows are R^T @ dir

    n = dirs.shape[0]
    ts = []

    # room interior: exit distance through the walls
    hx = np.asarray(spec.room_half_extents, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = np.where(dirs > 0, hx, -hx)
        t_axes = (bound - origin) / dirs
    t_axes = np.where(np.isfinite(t_axes) & (t_axes > 0), t_axes, np.inf)
    ts.append(t_axes.min(axis=1))

    for obj in spec.objects:
        if obj.shape == "sphere":
            oc = origin - np.asarray(obj.center, dtype=np.float64)
            a = np.einsum("ij,ij->i", dirs, dirs)
            b = 2.0 * dirs @ oc
            c0 = oc @ oc - obj.size ** 2
            disc = b * b - 4 * a * c0
            hit = disc >= 0
            sq = np.sqrt(np.where(hit, disc, 0.0))
            t1 = (-b - sq) / (2 * a)
            t2 = (-b + sq) / (2 * a)
            t = np.where(t1 > _RAY_EPS, t1, np.where(t2 > _RAY_EPS, t2, np.inf))
            ts.append(np.where(hit, t, np.inf))
        else:
            c = np.asarray(obj.center, dtype=np.float64)
            he = np.asarray(obj.size, dtype=np.float64)
            with np.errstate(divide="ignore", invalid="ignore"):
                ta = (c - he - origin) / dirs
                tb = (c + he - origin) / dirs
            tnear = np.minimum(ta, tb)
            tfar = np.maximum(ta, tb)
            # axes with zero direction: ray parallel; inside-slab iff within bounds
            par = np.abs(dirs) < 1e-15
            inside = (np.abs(origin - c) <= he)[None, :] & par
            tnear = np.where(par, np.where(inside, -np.inf, np.inf), tnear)
            tfar = np.where(par, np.where(inside, np.inf, -np.inf), tfar)
            t0 = tnear.max(axis=1)
            t1 = tfar.min(axis=1)
            hit = (t0 <= t1) & (t1 > _RAY_EPS) & (t0 > _RAY_EPS)
            ts.append(np.where(hit, t0, np.inf))

    ts = np.stack(ts)  # (1 + n_objects, n_pixels)
    surface = ts.argmin(axis=0)
    depth = ts[surface, np.arange(n)]
    return depth.reshape(h, w), surface.reshape(h, w), \
        (origin + depth[:, None] * dirs).reshape(h, w, 3)


_WALL_COLOR = np.array([0.82, 0.82, 0.80])


def _shade(spec, surface_id, hit_points):
    """Texture-modulated color per pixel; depends only on world position.

    The modulation is smooth (bounded gradient) so nearby surface points get
    nearly equal colors; a hard checker would make multi-view renders
    disagree at texture edges.
    """
    k = 2.0 * math.pi / spec.checker_period
    waves = np.sin(k * hit_points[..., 0]) * np.sin(k * hit_points[..., 1] + 1.3) \
        * np.sin(k * hit_points[..., 2] + 2.1)
    factor = 0.75 + 0.25 * waves
    base = np.empty(hit_points.shape, dtype=np.float64)
    base[:] = _WALL_COLOR
    for i, obj in enumerate(spec.objects):
        mask = surface_id == i + 1
        base[mask] = np.asarray(obj.color, dtype=np.float64)
    return np.clip(base * factor[..., None], 0.0, 1.0)


def _project_center(point, pose, intr):
    p = pose.R @ np.asarray(point, dtype=np.float64) + pose.t
    if p[2] <= 1e-9:
        return None
    return (intr.fx * p[0] / p[2] + intr.cx, intr.fy * p[1] / p[2] + intr.cy)


def default_objects():
    return (
        SceneObject("sphere", center=(0.8, 0.3, 0.9), size=0.6, color=(0.85, 0.2, 0.2)),
        SceneObject("sphere", center=(-1.2, -0.4, 1.4), size=0.45, color=(0.2, 0.3, 0.85)),
        SceneObject("box", center=(0.0, 0.9, 2.2), size=(0.7, 0.5, 0.4), color=(0.2, 0.75, 0.3)),
    )


def synthesize_scene(spec):
    """Ray-cast a spec into a (ReconstructionBundle, GroundTruth) pair."""
    if isinstance(spec.trajectory, str):
        poses, labels = named_trajectory(spec.trajectory)
    else:
        poses = list(spec.trajectory)
        labels = None
    if not poses:
        raise ValueError("trajectory must contain at least one pose")
    intr = spec.intrinsics()
    frames = []
    object_pixels = []
    for pose in poses:
        depth, surface_id, hits = _cast_rays(spec, pose, intr)
        colors = _shade(spec, surface_id, hits)
        image = np.clip(np.rint(colors * 255.0), 0, 255).astype(np.uint8)
        frames.append(Frame(image=image, depth=DepthMap(depth),
                            intrinsics=intr, pose=pose))
        object_pixels.append(
            [_project_center(obj.center, pose, intr) for obj in spec.objects])
    bundle = ReconstructionBundle(frames=tuple(frames), units=spec.units,
                                  source_tag="synthetic")
    gt = GroundTruth(spec=spec, motion_labels=labels, object_pixels=object_pixels)
    return bundle, gt
