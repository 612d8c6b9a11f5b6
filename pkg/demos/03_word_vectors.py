"""
Word vectors for category names
===============================

Category names are mapped to pretrained word vectors; multi-word names
average their token vectors, lookup falls back case-insensitively, and
a subject/object pair is represented by concatenating the two vectors.
A small JSON cache keeps repeated runs from re-parsing a gigabyte-scale
vector file.
"""

import tempfile
from pathlib import Path

import numpy as np

from scenecontext import EmbeddingTable, build_cache, concat_pair, load_cache, lookup, save_cache

from _common import OBJECTS, toy_vectors

table = EmbeddingTable(12, toy_vectors())
print("vocabulary      ", sorted(table.words()))
print("dimension       ", table.dimension)

person = lookup(table, "person")
bike = lookup(table, "bike")

# the pair feature is subject vector ++ object vector: order matters,
# (person, bike) is not (bike, person)
pair = concat_pair(person, bike)
print("pair width      ", pair.shape[0])
print("order sensitive ", not np.allclose(pair, concat_pair(bike, person)))

# multi-word names average the tokens they can resolve
street = EmbeddingTable(
    3,
    {
        "traffic": np.array([1.0, 0.0, 0.0]),
        "light": np.array([0.0, 1.0, 0.0]),
    },
)
print("multi-word mean ", lookup(street, "traffic light"))

# unknown names either raise or fall back to zeros, caller's choice
print("zero fallback   ", lookup(street, "zebra", fallback="zero"))

# cache round trip: resolve every dictionary name once, save, reload
with tempfile.TemporaryDirectory() as tmp:
    cache_path = Path(tmp) / "vectors_cache.json"
    save_cache(build_cache(table, OBJECTS), cache_path)
    cached = load_cache(cache_path)
    restored = EmbeddingTable(12, cached)
    same = all(
        np.allclose(lookup(restored, name), lookup(table, name)) for name in OBJECTS
    )
    print("cache faithful  ", same)
