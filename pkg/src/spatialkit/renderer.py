"""CPU point-cloud rasterizer: z-buffered square splats, deterministic ties.

Output pixels are float RGB in [0, 1]; untouched pixels keep the background
color. Ties at equal depth are broken by the lowest point index, so renders
are bit-identical for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCloudError

DEFAULT_POINT_RADIUS = 2
DEFAULT_NEAR_CLIP = 1e-4


@dataclass(frozen=True)
class RenderOptions:
    width: int
    height: int
    point_radius: int = DEFAULT_POINT_RADIUS
    near_clip: float = DEFAULT_NEAR_CLIP
    background: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.near_clip <= 0:
            raise ValueError("near_clip must be positive")
        if self.point_radius < 0 or int(self.point_radius) != self.point_radius:
            raise ValueError("point_radius must be a non-negative integer")


@dataclass(frozen=True, eq=False)
class RenderedImage:
    pixels: np.ndarray  # (H, W, 3) float in [0, 1]
    coverage_fraction: float

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def to_u8(self):
        return np.clip(np.rint(self.pixels * 255.0), 0, 255).astype(np.uint8)

    def save_png(self, path):
        from PIL import Image

        Image.fromarray(self.to_u8(), mode="RGB").save(path, format="PNG")


def project_point(point_world, pose, intrinsics, near_clip=DEFAULT_NEAR_CLIP):
    """Project one world point; returns (u, v, z_cam) or None if behind camera."""
    p = pose.R @ np.asarray(point_world, dtype=np.float64) + pose.t
    z = p[2]
    if z < near_clip:
        return None
    return (
        intrinsics.fx * p[0] / z + intrinsics.cx,
        intrinsics.fy * p[1] / z + intrinsics.cy,
        z,
    )


def project_points(points, pose, intrinsics, near_clip=DEFAULT_NEAR_CLIP):
    """Vectorized projection. Returns (uv (N,2), z (N,), visible mask (N,))."""
    pts = np.asarray(points, dtype=np.float64)
    cam = pts @ pose.R.T + pose.t
    z = cam[:, 2]
    visible = z >= near_clip
    zs = np.where(visible, z, 1.0)  # avoid divide-by-zero on culled points
    u = intrinsics.fx * cam[:, 0] / zs + intrinsics.cx
    v = intrinsics.fy * cam[:, 1] / zs + intrinsics.cy
    return np.stack([u, v], axis=1), z, visible


def synthesize_novel_view(cloud, pose, intrinsics, options=None):
    """Rasterize a colored point cloud from an arbitrary pose.

    Each visible point fills the square of side 2*point_radius+1 around its
    rounded projection; the nearest z wins per pixel, ties go to the lowest
    point index.
    """
    if len(cloud) == 0:
        raise EmptyCloudError("cannot render an empty point cloud")
    if options is None:
        options = RenderOptions(width=intrinsics.width, height=intrinsics.height)
    w, h = options.width, options.height

    uv, z, visible = project_points(cloud.points, pose, intrinsics,
                                    near_clip=options.near_clip)
    idx = np.nonzero(visible)[0]
    img = np.empty((h, w, 3), dtype=np.float64)
    img[:] = np.asarray(options.background, dtype=np.float64)
    if idx.size == 0:
        return RenderedImage(img, 0.0)

    px = np.rint(uv[idx, 0]).astype(np.int64)
    py = np.rint(uv[idx, 1]).astype(np.int64)
    pz = z[idx]

    r = int(options.point_radius)
    # Cull points whose splat square cannot touch the image, then keep only
    # the winning point per center cell: points sharing a rounded center
    # cover identical squares, so only the nearest (lowest index on ties)
    # can ever be visible. This bounds the splat pass by the pixel count.
    keep = (px >= -r) & (px <= w - 1 + r) & (py >= -r) & (py <= h - 1 + r)
    px, py, pz, idx = px[keep], py[keep], pz[keep], idx[keep]
    if px.size == 0:
        return RenderedImage(img, 0.0)
    cell = (py + r) * (w + 2 * r) + (px + r)
    order = np.lexsort((idx, pz, cell))
    cell = cell[order]
    lead = np.ones(order.size, dtype=bool)
    lead[1:] = cell[1:] != cell[:-1]
    sel = order[lead]
    px, py, pz, idx = px[sel], py[sel], pz[sel], idx[sel]

    flat_parts, z_parts, id_parts = [], [], []
    for dy in range(-r, r + 1):
        yy = py + dy
        for dx in range(-r, r + 1):
            xx = px + dx
            ok = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
            flat_parts.append(yy[ok] * w + xx[ok])
            z_parts.append(pz[ok])
            id_parts.append(idx[ok])
    flat = np.concatenate(flat_parts)
    if flat.size == 0:
        return RenderedImage(img, 0.0)
    zs = np.concatenate(z_parts)
    ids = np.concatenate(id_parts)

    # Sort by (pixel, depth, point index); the first entry per pixel wins.
    order = np.lexsort((ids, zs, flat))
    flat, ids = flat[order], ids[order]
    first = np.ones(len(flat), dtype=bool)
    first[1:] = flat[1:] != flat[:-1]
    win_pix = flat[first]
    win_ids = ids[first]

    flat_img = img.reshape(-1, 3)
    flat_img[win_pix] = cloud.colors[win_ids]
    coverage = float(win_pix.size) / float(w * h)
    return RenderedImage(img, coverage)
