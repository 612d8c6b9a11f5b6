import json

import numpy as np
import pytest

from scenecontext.dataset import Dictionary

CART_OBJECTS = ["person", "wheel", "cart", "plant", "bike", "shirt", "basket", "pants"]
CART_PREDICATES = ["on", "under", "has", "in", "on top"]

# the cart-and-bike demo scene: one instance per category, boxes in
# annotation order [y_min, y_max, x_min, x_max]
CART_BOXES = {
    "person": [50, 300, 300, 420],
    "wheel": [320, 400, 120, 200],
    "cart": [180, 380, 60, 260],
    "plant": [120, 180, 150, 210],
    "bike": [200, 420, 280, 460],
    "shirt": [90, 180, 310, 400],
    "basket": [150, 220, 100, 240],
    "pants": [180, 280, 320, 400],
}

CART_TRIPLES = [
    ("wheel", "under", "cart"),
    ("basket", "on top", "cart"),
    ("plant", "in", "basket"),
    ("wheel", "under", "bike"),
    ("pants", "on", "person"),
    ("person", "on", "bike"),
    ("person", "has", "shirt"),
]


def _endpoint(name):
    return {"category": CART_OBJECTS.index(name), "bbox": CART_BOXES[name]}


def cart_scene_payload():
    records = [
        {
            "predicate": CART_PREDICATES.index(pred),
            "subject": _endpoint(subj),
            "object": _endpoint(obj),
        }
        for subj, pred, obj in CART_TRIPLES
    ]
    return {"cart_scene.jpg": records}


@pytest.fixture
def cart_scene():
    return cart_scene_payload(), Dictionary(CART_OBJECTS), Dictionary(CART_PREDICATES)


@pytest.fixture
def cart_scene_file(tmp_path):
    path = tmp_path / "cart_annotations.json"
    path.write_text(json.dumps(cart_scene_payload()))
    return path


def synthetic_annotations(n_images, rng, n_objects=6, n_predicates=4, max_rels=5):
    """Random annotation payload over synthetic dictionaries."""
    payload = {}
    for i in range(n_images):
        records = []
        for _ in range(int(rng.integers(1, max_rels + 1))):
            def endpoint():
                x = np.sort(rng.integers(0, 100, size=2))
                y = np.sort(rng.integers(0, 100, size=2))
                return {
                    "category": int(rng.integers(0, n_objects)),
                    "bbox": [int(y[0]), int(y[1] + 1), int(x[0]), int(x[1] + 1)],
                }

            records.append(
                {
                    "predicate": int(rng.integers(0, n_predicates)),
                    "subject": endpoint(),
                    "object": endpoint(),
                }
            )
        payload[f"img_{i:04d}.jpg"] = records
    return payload
