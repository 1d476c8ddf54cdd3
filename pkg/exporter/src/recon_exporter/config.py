"""Exporter configuration.

The model tag decides the scene units written to the manifest: vggt-class
backbones predict scale-free (normalized) scenes, cut3r-class backbones
predict metric-scale scenes in meters.
"""

from __future__ import annotations

from dataclasses import dataclass

MODEL_UNITS = {
    "vggt-class": "normalized",
    "cut3r-class": "metric-meters",
}

DEFAULT_MAX_REQUEST_BYTES = 32 * 1024 * 1024


@dataclass(frozen=True)
class ExporterConfig:
    model_tag: str
    device: str = "cpu"
    # None keeps the input resolution; otherwise (width, height) to resize to
    resolution: tuple | None = None
    max_request_bytes: int = DEFAULT_MAX_REQUEST_BYTES
    seed: int = 0

    def __post_init__(self):
        if self.model_tag not in MODEL_UNITS:
            raise ValueError(
                f"model_tag must be one of {sorted(MODEL_UNITS)}, "
                f"got {self.model_tag!r}")
        if self.resolution is not None:
            w, h = self.resolution
            if w <= 0 or h <= 0:
                raise ValueError("resolution must be positive")
        if self.max_request_bytes <= 0:
            raise ValueError("max_request_bytes must be positive")

    @property
    def units(self):
        return MODEL_UNITS[self.model_tag]
