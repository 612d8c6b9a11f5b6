"""Shared fixtures for the demo scripts: one small street scene (a
person riding a bike that pulls a plant cart) annotated in the same
JSON shape real datasets use, plus a tiny deterministic word-vector
table over its vocabulary."""

import numpy as np

OBJECTS = ["person", "wheel", "cart", "plant", "bike", "shirt", "basket", "pants"]
PREDICATES = ["on", "under", "has", "in", "on top"]

# boxes in annotation order [y_min, y_max, x_min, x_max]
BOXES = {
    "person": [50, 300, 300, 420],
    "wheel": [320, 400, 120, 200],
    "cart": [180, 380, 60, 260],
    "plant": [120, 180, 150, 210],
    "bike": [200, 420, 280, 460],
    "shirt": [90, 180, 310, 400],
    "basket": [150, 220, 100, 240],
    "pants": [180, 280, 320, 400],
}

TRIPLES = [
    ("wheel", "under", "cart"),
    ("basket", "on top", "cart"),
    ("plant", "in", "basket"),
    ("wheel", "under", "bike"),
    ("pants", "on", "person"),
    ("person", "on", "bike"),
    ("person", "has", "shirt"),
]


def scene_payload():
    def endpoint(name):
        return {"category": OBJECTS.index(name), "bbox": BOXES[name]}

    return {
        "street_scene.jpg": [
            {
                "predicate": PREDICATES.index(pred),
                "subject": endpoint(subj),
                "object": endpoint(obj),
            }
            for subj, pred, obj in TRIPLES
        ]
    }


def toy_vectors(dim=12, seed=42):
    """name -> vector map standing in for real pretrained word vectors."""
    rng = np.random.default_rng(seed)
    return {name: rng.normal(size=dim) for name in OBJECTS}
