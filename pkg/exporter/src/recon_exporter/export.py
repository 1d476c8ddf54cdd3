"""Export raw backbone outputs as a bundle directory.

Bundle directory format (version 1), shared with downstream consumers:
  manifest.json with units, width/height, and per-frame pixel-unit
  intrinsics (row-major 3x3) and extrinsics (row-major 3x4 world-to-camera);
  images/frame_XXXX.png; depth/frame_XXXX.f32 little-endian float32
  row-major; optional confidence/frame_XXXX.f32.
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np
from PIL import Image

from .backbone import load_backbone
from .errors import InferenceError, WriteError

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


def collect_image_paths(images):
    """Resolve a directory or an explicit list to filename-sorted paths."""
    if isinstance(images, (str, Path)) and Path(images).is_dir():
        paths = [p for p in Path(images).iterdir()
                 if p.suffix.lower() in IMAGE_EXTENSIONS]
    else:
        paths = [Path(p) for p in images]
    for p in paths:
        if not p.is_file():
            raise FileNotFoundError(f"{p}: input image not found")
    return sorted(paths, key=lambda p: p.name)


def nearest_rotation(matrix):
    """Project a 3x3 matrix to the nearest rotation (Frobenius norm, SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(matrix, dtype=np.float64))
    r = u @ vt
    if np.linalg.det(r) < 0:
        u = u.copy()
        u[:, -1] *= -1
        r = u @ vt
    return r


def _load_images(paths, resolution):
    arrays = []
    for p in paths:
        img = Image.open(p).convert("RGB")
        if resolution is not None:
            img = img.resize(resolution, Image.BILINEAR)
        arrays.append(np.asarray(img, dtype=np.uint8))
    return arrays


def _pixel_intrinsics(k_norm, w, h):
    """Convert pixel-normalized intrinsics to pixel units."""
    k = np.asarray(k_norm, dtype=np.float64)
    scale = np.diag([float(w), float(h), 1.0])
    return scale @ k


def export(images, config, out_dir, backbone=None):
    """Run the backbone over an image set and write a bundle directory.

    `images` is a directory or an ordered list of files; frames are emitted
    in sorted-filename order. Raises ModelLoadError, InferenceError, or
    WriteError so callers can report distinct exit codes.
    """
    paths = collect_image_paths(images)
    if not paths:
        raise ValueError("need at least one input image")
    arrays = _load_images(paths, config.resolution)
    h, w = arrays[0].shape[:2]

    if backbone is None:
        backbone = load_backbone(config)
    try:
        raw = backbone.infer(arrays)
    except InferenceError:
        raise
    except Exception as e:
        raise InferenceError(f"backbone inference failed: {e}") from e

    n = len(arrays)
    if not (len(raw.depths) == len(raw.intrinsics) == len(raw.poses) == n):
        raise InferenceError(
            f"backbone returned {len(raw.depths)} depths / "
            f"{len(raw.intrinsics)} intrinsics / {len(raw.poses)} poses "
            f"for {n} images")

    root = Path(out_dir)
    try:
        root.mkdir(parents=True, exist_ok=True)
        (root / "images").mkdir(exist_ok=True)
        (root / "depth").mkdir(exist_ok=True)
        if raw.confidences is not None:
            (root / "confidence").mkdir(exist_ok=True)

        manifest_frames = []
        for i in range(n):
            depth = np.asarray(raw.depths[i], dtype=np.float64)
            if depth.shape != (h, w):
                raise InferenceError(
                    f"frame {i}: depth shape {depth.shape} does not match "
                    f"image {w}x{h}")
            image_rel = f"images/frame_{i:04d}.png"
            depth_rel = f"depth/frame_{i:04d}.f32"
            Image.fromarray(arrays[i], mode="RGB").save(root / image_rel,
                                                        format="PNG")
            (root / depth_rel).write_bytes(depth.astype("<f4").tobytes())
            conf_rel = None
            if raw.confidences is not None:
                conf_rel = f"confidence/frame_{i:04d}.f32"
                conf = np.asarray(raw.confidences[i], dtype=np.float64)
                (root / conf_rel).write_bytes(conf.astype("<f4").tobytes())

            k = _pixel_intrinsics(raw.intrinsics[i], w, h)
            pose = np.asarray(raw.poses[i], dtype=np.float64)
            rot = nearest_rotation(pose[:, :3])
            g = np.concatenate([rot, pose[:, 3:4]], axis=1)
            manifest_frames.append({
                "image": image_rel,
                "depth": depth_rel,
                "confidence": conf_rel,
                "intrinsics": [float(x) for x in k.ravel()],
                "extrinsics": [float(x) for x in g.ravel()],
            })

        manifest = {
            "version": 1,
            "units": config.units,
            "source_tag": config.model_tag,
            "width": w,
            "height": h,
            "frames": manifest_frames,
        }
        (root / "manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise WriteError(f"cannot write bundle to {root}: {e}") from e
    return root


def zip_bundle(bundle_dir):
    """Zip a bundle directory (paths relative to its root) into bytes."""
    root = Path(bundle_dir)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as archive:
        for p in sorted(root.rglob("*")):
            if p.is_file():
                archive.write(p, p.relative_to(root).as_posix())
    return buf.getvalue()
