"""Shared synthetic scenes: saturated rectangles on a gray background.

The region detector names regions after their hue, so these images have
fully known gold detections with exact boxes.  Saved as PNG to keep the
rectangles pixel-exact (JPEG smearing would soften the region edges).
"""

import numpy as np
import pytest
from PIL import Image

COLORS = {
    "red": (230, 30, 30),
    "green": (40, 200, 60),
    "blue": (40, 60, 230),
    "yellow": (235, 220, 40),
    "magenta": (225, 45, 215),
}

# image name -> ((width, height), [(color, (x0, y0, x1, y1)), ...])
SCENES = {
    "scene_a.png": ((64, 64), [("red", (4, 4, 20, 28)), ("green", (30, 36, 58, 60))]),
    "scene_b.png": (
        (80, 60),
        [("blue", (6, 6, 26, 26)), ("yellow", (40, 8, 72, 30)), ("red", (10, 36, 40, 54))],
    ),
    "scene_c.png": ((48, 48), [("magenta", (12, 12, 36, 36))]),
}

DICTIONARY = ["red", "green", "blue", "yellow", "magenta"]


def paint(path, size, rects) -> None:
    width, height = size
    canvas = np.full((height, width, 3), 120, dtype=np.uint8)
    for name, (x0, y0, x1, y1) in rects:
        canvas[y0:y1, x0:x1] = COLORS[name]
    Image.fromarray(canvas).save(path)


@pytest.fixture(scope="session")
def toy_images(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy_images")
    for name, (size, rects) in SCENES.items():
        paint(root / name, size, rects)
    return root
