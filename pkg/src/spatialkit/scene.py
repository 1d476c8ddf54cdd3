"""Scene: the question plus its ordered input images."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


def expand_image_paths(path_or_paths):
    """Resolve a directory or path list into a deduplicated, ordered list.

    Directories expand to their png/jpg/jpeg files in lexicographic order;
    explicit lists keep their given order.
    """
    if isinstance(path_or_paths, (str, Path)):
        p = Path(path_or_paths)
        if p.is_dir():
            paths = sorted(
                str(f) for f in p.iterdir()
                if f.suffix.lower() in IMAGE_EXTENSIONS
            )
        else:
            paths = [str(p)]
    else:
        paths = [str(p) for p in path_or_paths]
    seen = set()
    out = []
    for p in paths:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


@dataclass
class Scene:
    """Input to one query: a natural-language question and >= 1 images."""

    question: str
    image_paths: list

    def __post_init__(self):
        self.image_paths = expand_image_paths(self.image_paths)
        if not self.image_paths:
            raise ValueError("a scene needs at least one image")
        self._loaded = None

    def load_images(self):
        """RGB uint8 arrays, loaded lazily and cached."""
        if self._loaded is None:
            import numpy as np
            from PIL import Image

            self._loaded = [
                np.asarray(Image.open(p).convert("RGB"))
                for p in self.image_paths
            ]
        return self._loaded
