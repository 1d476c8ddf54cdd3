import numpy as np
import pytest
from PIL import Image

from recon_exporter import ExporterConfig


def _gradient_image(w, h, phase):
    xx, yy = np.meshgrid(np.arange(w), np.arange(h))
    r = ((xx * 2 + phase * 37) % 256).astype(np.uint8)
    g = ((yy * 3 + phase * 11) % 256).astype(np.uint8)
    b = ((xx + yy + phase * 53) % 256).astype(np.uint8)
    return np.stack([r, g, b], axis=-1)


@pytest.fixture(scope="session")
def sample_images(tmp_path_factory):
    """Three 64x48 images, named out of order to exercise filename sorting."""
    root = tmp_path_factory.mktemp("sample_images")
    for name, phase in (("c_view.png", 2), ("a_view.png", 0),
                        ("b_view.png", 1)):
        Image.fromarray(_gradient_image(64, 48, phase), mode="RGB").save(
            root / name)
    return root


@pytest.fixture(scope="session")
def vggt_config():
    return ExporterConfig(model_tag="vggt-class")


@pytest.fixture(scope="session")
def cut3r_config():
    return ExporterConfig(model_tag="cut3r-class")
