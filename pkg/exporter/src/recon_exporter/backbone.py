"""Backbone adapters: raw network-style outputs before export normalization.

A backbone returns depths, pixel-normalized intrinsics, and world-to-camera
poses that may drift slightly off SO(3), mirroring what feed-forward
reconstruction networks emit. The export step converts intrinsics to pixel
units and projects poses to the nearest rotation.

No real reconstruction weights ship here; the fixture backbone predicts a
deterministic fronto-parallel plane scene with a lateral camera track,
which is geometrically consistent across frames and therefore exercises
the full export contract (including the reprojection check) offline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import InferenceError, ModelLoadError

FIXTURE_PLANE_DEPTH = 2.0
FIXTURE_BASELINE = 0.1
FIXTURE_POSE_NOISE = 1e-4


@dataclass(frozen=True)
class RawReconstruction:
    """Per-frame network outputs, in the backbone's native conventions."""

    depths: tuple          # (H, W) float arrays
    intrinsics: tuple      # (3, 3) arrays, pixel-normalized (divided by w, h)
    poses: tuple           # (3, 4) world-to-camera, possibly non-orthonormal
    confidences: tuple | None = None  # (H, W) arrays, or None if not emitted


@runtime_checkable
class BackboneAdapter(Protocol):
    def infer(self, images) -> RawReconstruction:
        ...


class FixtureBackbone:
    """Deterministic stand-in for a reconstruction network.

    Predicts a plane at constant depth viewed from cameras translating
    laterally by a fixed baseline per frame. Poses carry a small seeded
    perturbation off SO(3) so the export-side orthonormalization is
    exercised on every run.
    """

    def __init__(self, seed=0, emit_confidence=False):
        self.seed = seed
        self.emit_confidence = emit_confidence

    def infer(self, images):
        if not images:
            raise InferenceError("backbone received no images")
        h, w = images[0].shape[:2]
        for i, img in enumerate(images):
            if img.shape[:2] != (h, w):
                raise InferenceError(
                    f"image {i} is {img.shape[1]}x{img.shape[0]}, "
                    f"expected {w}x{h}: mixed resolutions are unsupported")
        rng = np.random.default_rng(self.seed)

        k_norm = np.array([
            [0.7, 0.0, (w - 1) / 2.0 / w],
            [0.0, 0.7 * w / h, (h - 1) / 2.0 / h],
            [0.0, 0.0, 1.0],
        ])
        depths, intrinsics, poses, confidences = [], [], [], []
        for i in range(len(images)):
            depths.append(np.full((h, w), FIXTURE_PLANE_DEPTH,
                                  dtype=np.float64))
            intrinsics.append(k_norm.copy())
            rot = np.eye(3) + FIXTURE_POSE_NOISE * rng.standard_normal((3, 3))
            center = np.array([FIXTURE_BASELINE * i, 0.0, 0.0])
            poses.append(np.concatenate([rot, (-rot @ center)[:, None]],
                                        axis=1))
            if self.emit_confidence:
                confidences.append(np.ones((h, w), dtype=np.float64))
        return RawReconstruction(
            depths=tuple(depths), intrinsics=tuple(intrinsics),
            poses=tuple(poses),
            confidences=tuple(confidences) if self.emit_confidence else None)


def load_backbone(config):
    """Instantiate the backbone for a config; fails as a model-load error."""
    if config.device != "cpu":
        raise ModelLoadError(
            f"device {config.device!r} is unavailable in this build; "
            f"only 'cpu' is supported")
    if config.model_tag == "vggt-class":
        return FixtureBackbone(seed=config.seed, emit_confidence=True)
    if config.model_tag == "cut3r-class":
        return FixtureBackbone(seed=config.seed, emit_confidence=False)
    raise ModelLoadError(f"no backbone registered for {config.model_tag!r}")
