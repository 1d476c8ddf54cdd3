"""Reconstruction exporter: backbone outputs to the bundle directory format."""

from .backbone import BackboneAdapter, FixtureBackbone, RawReconstruction, load_backbone
from .config import MODEL_UNITS, ExporterConfig
from .errors import ExporterError, InferenceError, ModelLoadError, WriteError
from .export import collect_image_paths, export, nearest_rotation, zip_bundle
from .service import create_app, serve

__version__ = "0.1.0"

__all__ = [
    "BackboneAdapter",
    "ExporterConfig",
    "ExporterError",
    "FixtureBackbone",
    "InferenceError",
    "MODEL_UNITS",
    "ModelLoadError",
    "RawReconstruction",
    "WriteError",
    "collect_image_paths",
    "create_app",
    "export",
    "load_backbone",
    "nearest_rotation",
    "serve",
    "zip_bundle",
]
