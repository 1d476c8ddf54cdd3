"""Reconstruction bundles: validated container, on-disk format, remote client.

Bundle directory format (version 1):
  manifest.json        UTF-8 JSON, schema below
  depth rasters        little-endian float32, row-major, width*height values
  confidence rasters   same layout, optional
  images               PNG or JPEG at manifest width/height

manifest.json:
  {"version": 1, "units": "normalized"|"metric-meters", "source_tag": str,
   "width": int, "height": int,
   "frames": [{"image": relpath, "depth": relpath, "confidence": relpath|null,
               "intrinsics": [9 floats, row-major 3x3],
               "extrinsics": [12 floats, row-major 3x4 world-to-camera]}]}
"""

from __future__ import annotations

import io
import json
import tempfile
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    BackendFailureError,
    InvalidPoseError,
    MalformedArchiveError,
    MalformedManifestError,
    MalformedRasterError,
    MissingFileError,
    ShapeMismatchError,
    TransportError,
)
from .geometry import DepthMap, ExtrinsicPose, Intrinsics

VALID_UNITS = ("normalized", "metric-meters")


@dataclass(frozen=True, eq=False)
class Frame:
    image: np.ndarray  # (H, W, 3) uint8
    depth: DepthMap
    intrinsics: Intrinsics
    pose: ExtrinsicPose

    def __post_init__(self):
        img = np.ascontiguousarray(self.image, dtype=np.uint8)
        if img.ndim != 3 or img.shape[2] != 3:
            raise ValueError("frame image must be HxWx3 uint8")
        img.setflags(write=False)
        object.__setattr__(self, "image", img)


@dataclass(frozen=True, eq=False)
class ReconstructionBundle:
    frames: tuple
    units: str = "normalized"
    source_tag: str = ""

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a bundle needs at least one frame")
        if self.units not in VALID_UNITS:
            raise ValueError(f"units must be one of {VALID_UNITS}")
        h, w = frames[0].image.shape[:2]
        for i, f in enumerate(frames):
            if f.image.shape[:2] != (h, w) or f.depth.values.shape != (h, w):
                raise ValueError(f"frame {i}: inconsistent dimensions")
        object.__setattr__(self, "frames", frames)

    @property
    def width(self):
        return self.frames[0].image.shape[1]

    @property
    def height(self):
        return self.frames[0].image.shape[0]

    @property
    def extrinsics(self):
        return [f.pose for f in self.frames]


def estimate_depth(bundle, frame_index):
    """Stored per-frame depth map (file-backend semantics)."""
    if not (0 <= frame_index < len(bundle.frames)):
        raise IndexError(f"frame index {frame_index} out of range "
                         f"[0, {len(bundle.frames)})")
    return bundle.frames[frame_index].depth


def save_bundle(bundle, path):
    """Write the bundle directory; serialization is canonical (re-save is byte-identical)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / "images").mkdir(exist_ok=True)
    (root / "depth").mkdir(exist_ok=True)
    manifest_frames = []
    any_conf = any(f.depth.confidence is not None for f in bundle.frames)
    if any_conf:
        (root / "confidence").mkdir(exist_ok=True)
    for i, f in enumerate(bundle.frames):
        image_rel = f"images/frame_{i:04d}.png"
        depth_rel = f"depth/frame_{i:04d}.f32"
        Image.fromarray(np.asarray(f.image), mode="RGB").save(
            root / image_rel, format="PNG")
        (root / depth_rel).write_bytes(
            f.depth.values.astype("<f4").tobytes())
        conf_rel = None
        if f.depth.confidence is not None:
            conf_rel = f"confidence/frame_{i:04d}.f32"
            (root / conf_rel).write_bytes(
                f.depth.confidence.astype("<f4").tobytes())
        manifest_frames.append({
            "image": image_rel,
            "depth": depth_rel,
            "confidence": conf_rel,
            "intrinsics": [float(x) for x in f.intrinsics.matrix.ravel()],
            "extrinsics": [float(x) for x in f.pose.matrix34.ravel()],
        })
    manifest = {
        "version": 1,
        "units": bundle.units,
        "source_tag": bundle.source_tag,
        "width": bundle.width,
        "height": bundle.height,
        "frames": manifest_frames,
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _require(cond, exc, msg):
    if not cond:
        raise exc(msg)


def _read_raster(path, w, h):
    raw = path.read_bytes()
    if len(raw) != 4 * w * h:
        raise MalformedRasterError(
            f"{path}: raster is {len(raw)} bytes, expected {4 * w * h} "
            f"({w}x{h} float32)")
    return np.frombuffer(raw, dtype="<f4").reshape(h, w).astype(np.float64)


def load_bundle(path):
    """Load and fully validate a bundle directory.

    Raises distinct errors naming the offending file or field; no partially
    valid bundle ever escapes.
    """
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise MissingFileError(f"{manifest_path}: manifest not found")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedManifestError(f"{manifest_path}: {e}") from e

    for key in ("version", "units", "source_tag", "width", "height", "frames"):
        _require(key in manifest, MalformedManifestError,
                 f"{manifest_path}: missing field {key!r}")
    _require(manifest["version"] == 1, MalformedManifestError,
             f"{manifest_path}: unsupported version {manifest['version']!r}")
    _require(manifest["units"] in VALID_UNITS, MalformedManifestError,
             f"{manifest_path}: bad units {manifest['units']!r}")
    w, h = manifest["width"], manifest["height"]
    _require(isinstance(w, int) and isinstance(h, int) and w > 0 and h > 0,
             MalformedManifestError, f"{manifest_path}: bad width/height")
    _require(isinstance(manifest["frames"], list) and manifest["frames"],
             MalformedManifestError, f"{manifest_path}: frames must be non-empty")

    frames = []
    for i, rec in enumerate(manifest["frames"]):
        locus = f"{manifest_path}: frames[{i}]"
        for key in ("image", "depth", "intrinsics", "extrinsics"):
            _require(key in rec, MalformedManifestError,
                     f"{locus}: missing field {key!r}")
        image_path = root / rec["image"]
        depth_path = root / rec["depth"]
        _require(image_path.is_file(), MissingFileError,
                 f"{locus}: image file {image_path} not found")
        _require(depth_path.is_file(), MissingFileError,
                 f"{locus}: depth file {depth_path} not found")

        try:
            img = np.asarray(Image.open(image_path).convert("RGB"))
        except Exception as e:
            raise MalformedManifestError(f"{image_path}: unreadable image ({e})") from e
        _require(img.shape[:2] == (h, w), ShapeMismatchError,
                 f"{image_path}: image is {img.shape[1]}x{img.shape[0]}, "
                 f"manifest says {w}x{h}")

        depth_values = _read_raster(depth_path, w, h)

        confidence = None
        if rec.get("confidence"):
            conf_path = root / rec["confidence"]
            _require(conf_path.is_file(), MissingFileError,
                     f"{locus}: confidence file {conf_path} not found")
            confidence = _read_raster(conf_path, w, h)

        kvals = rec["intrinsics"]
        _require(isinstance(kvals, list) and len(kvals) == 9,
                 MalformedManifestError, f"{locus}.intrinsics: need 9 numbers")
        try:
            intr = Intrinsics.from_matrix(np.array(kvals, dtype=np.float64), w, h)
        except ValueError as e:
            raise MalformedManifestError(f"{locus}.intrinsics: {e}") from e

        gvals = rec["extrinsics"]
        _require(isinstance(gvals, list) and len(gvals) == 12,
                 MalformedManifestError, f"{locus}.extrinsics: need 12 numbers")
        g = np.array(gvals, dtype=np.float64).reshape(3, 4)
        try:
            pose = ExtrinsicPose(g[:, :3], g[:, 3])
        except ValueError as e:
            raise InvalidPoseError(f"{locus}.extrinsics: {e}") from e

        frames.append(Frame(image=img,
                            depth=DepthMap(depth_values, confidence),
                            intrinsics=intr, pose=pose))

    return ReconstructionBundle(frames=tuple(frames),
                                units=manifest["units"],
                                source_tag=manifest["source_tag"])


def reconstruct_remote(image_paths, endpoint, timeout=120.0):
    """POST ordered images to a reconstruction service and validate the reply.

    The service answers POST {endpoint}/reconstruct with a zip archive of a
    bundle directory. Failures are tagged for the failure taxonomy.
    """
    import requests

    url = endpoint.rstrip("/")
    if not url.endswith("/reconstruct"):
        url += "/reconstruct"
    files = []
    for p in image_paths:
        p = Path(p)
        if not p.is_file():
            raise MissingFileError(f"{p}: input image not found")
        files.append(("images", (p.name, p.read_bytes(), "image/png")))
    try:
        resp = requests.post(url, files=files, timeout=timeout)
    except requests.Timeout as e:
        raise TransportError(f"reconstruction request timed out: {e}") from e
    except requests.RequestException as e:
        raise TransportError(f"reconstruction request failed: {e}") from e
    if resp.status_code != 200:
        raise BackendFailureError(
            f"reconstruction service returned status {resp.status_code}")
    try:
        archive = zipfile.ZipFile(io.BytesIO(resp.content))
        with tempfile.TemporaryDirectory() as tmp:
            archive.extractall(tmp)
            return load_bundle(tmp)
    except (zipfile.BadZipFile, KeyError) as e:
        raise MalformedArchiveError(f"bad bundle archive from {url}: {e}") from e
