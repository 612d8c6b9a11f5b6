"""
Parsing annotations and counting a dataset
==========================================

Annotation files map image names to relationship records; each record
names a predicate and two endpoints (category id + box in [y_min,
y_max, x_min, x_max] order, which the parser converts to canonical
boxes).  Identical (category, box) endpoints within an image are
interned into a single object instance, so instance counts reflect
distinct objects rather than annotation rows.
"""

import numpy as np

from scenecontext import enumerate_pairs, image_stats, load_annotations, split

from _common import OBJECTS, PREDICATES, scene_payload

index = load_annotations(scene_payload(), OBJECTS, PREDICATES)
scene = index.images["street_scene.jpg"]

print("images              ", len(index))
print("object instances    ", len(scene.instances))
print("relationships       ", len(scene.relationships))

# every ordered pair is a classification candidate: n(n-1) of them
pairs = enumerate_pairs(scene.instances, mode="ordered")
print("ordered pairs       ", len(pairs))
print("unordered pairs     ", len(enumerate_pairs(scene.instances, mode="unordered")))

stats = image_stats(index)
print("summary             ", stats.summary())

# splitting needs a few images, so synthesize a tiny dataset:
rng = np.random.default_rng(0)
payload = {}
for i in range(30):
    records = []
    for _ in range(int(rng.integers(1, 5))):
        def endpoint():
            x = np.sort(rng.integers(0, 100, size=2))
            y = np.sort(rng.integers(0, 100, size=2))
            return {
                "category": int(rng.integers(0, len(OBJECTS))),
                "bbox": [int(y[0]), int(y[1]) + 1, int(x[0]), int(x[1]) + 1],
            }

        records.append(
            {
                "predicate": int(rng.integers(0, len(PREDICATES))),
                "subject": endpoint(),
                "object": endpoint(),
            }
        )
    payload[f"img_{i:03d}.jpg"] = records

big = load_annotations(payload, OBJECTS, PREDICATES)
train_part, val_part, test_part = split(big, seed=0)
print("split sizes         ", len(train_part), len(val_part), len(test_part))
# same seed, same partition, every time
again = split(big, seed=0)
print("deterministic       ", [p.image_ids() for p in again] ==
      [p.image_ids() for p in (train_part, val_part, test_part)])
