"""Per-pair visual features written as RFV1 files.

For every ordered (subject, object) pair of an image the subject box,
the object box, and their enclosing box are cropped, each crop is
featurized, the three vectors are concatenated in that order, and a
fixed random projection maps the concatenation to the declared output
dimension.  The projection decouples the file's width from the
backend's native width (any --dim is reachable) and is seeded by a
constant, so extracting twice gives byte-identical files.

The default featurizer is a pixel-statistics descriptor: a coarse
resampled thumbnail, per-channel histograms and moments, and box
geometry.  No learned weights, no platform-dependent interpolation.
The optional VGG16 featurizer (torchmodels) substitutes fc7
activations when local weights exist; neither is fine-tuned on
relationship labels, the features stay generic.
"""

from __future__ import annotations

import math
from functools import lru_cache
from pathlib import Path

import numpy as np

from .detect import load_image
from .relfiles import (
    AdapterError, load_pair_instances, ordered_pairs, pair_key, save_rfv1, warn,
)

THUMB = 8

# Changing this constant would silently invalidate every feature file
# written so far, so it is frozen here rather than exposed as a flag.
PROJECTION_SEED = 0x52465631


class StatsFeaturizer:
    """Pixel-statistics descriptor of one crop; no learned weights."""

    width = THUMB * THUMB * 3 + 3 * 8 + 6 + 8

    def __call__(self, rgb: np.ndarray, box) -> np.ndarray:
        height, width = rgb.shape[:2]
        x0, y0, x1, y1 = clip_box(box, width, height)
        raw = rgb[y0:y1, x0:x1]
        crop = raw.astype(np.float64) / 255.0

        rows = ((np.arange(THUMB) + 0.5) * crop.shape[0] / THUMB).astype(int)
        cols = ((np.arange(THUMB) + 0.5) * crop.shape[1] / THUMB).astype(int)
        thumb = crop[rows][:, cols].ravel()

        bins = (raw >> 5).reshape(-1, 3)
        hist = np.concatenate(
            [np.bincount(bins[:, c], minlength=8) for c in range(3)]
        ) / float(bins.shape[0])

        flat = crop.reshape(-1, 3)
        moments = np.concatenate([flat.mean(axis=0), flat.std(axis=0)])

        bw, bh = x1 - x0, y1 - y0
        geometry = np.array(
            [
                x0 / width, y0 / height, x1 / width, y1 / height,
                bw / width, bh / height,
                (bw * bh) / (width * height), bw / (bw + bh),
            ]
        )
        return np.concatenate([thumb, hist, moments, geometry])


def clip_box(box, width: int, height: int) -> tuple:
    """Integer pixel bounds inside the image, at least one pixel each way."""
    x_min, y_min, x_max, y_max = box
    x0 = min(max(int(math.floor(x_min)), 0), width - 1)
    y0 = min(max(int(math.floor(y_min)), 0), height - 1)
    x1 = min(max(int(math.ceil(x_max)), x0 + 1), width)
    y1 = min(max(int(math.ceil(y_max)), y0 + 1), height)
    return x0, y0, x1, y1


def enclosing(a, b) -> tuple:
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


@lru_cache(maxsize=4)
def _projection(in_width: int, out_dim: int) -> np.ndarray:
    rng = np.random.default_rng((PROJECTION_SEED, in_width, out_dim))
    return rng.standard_normal((out_dim, in_width)) / math.sqrt(in_width)


def project(vector: np.ndarray, dim: int) -> np.ndarray:
    return (_projection(len(vector), dim) @ vector).astype(np.float32)


def extract_pair_features(image_dir, relationships, out_path, dim: int = 4096,
                          kind: str = "auto", featurizer=None) -> dict:
    """Featurize every ordered pair and write the RFV1 file.

    ``relationships`` is a detections or annotations JSON (path or parsed
    map; ``kind`` disambiguates, default sniffs).  Instance numbering
    follows the consuming pipeline exactly, so every key it enumerates
    over the same file is present.  Images missing from image_dir are
    skipped with a warning; the declared dimension is validated against
    every vector before a single byte is written.
    """
    if dim < 1:
        raise AdapterError(f"feature dimension must be at least 1, got {dim}")
    scenes = load_pair_instances(relationships, kind)
    if featurizer is None:
        featurizer = StatsFeaturizer()
    image_dir = Path(image_dir)

    entries = {}
    for image_id in sorted(scenes):
        instances = scenes[image_id]
        if len(instances) < 2:
            continue
        try:
            rgb = load_image(image_dir / image_id)
        except (OSError, ValueError) as exc:
            warn(f"skipping image {image_id!r}: {exc}")
            continue
        crops: dict[tuple, np.ndarray] = {}

        def crop_vec(box):
            if box not in crops:
                crops[box] = featurizer(rgb, box)
            return crops[box]

        for i, j in ordered_pairs(len(instances)):
            subj, obj = instances[i], instances[j]
            concat = np.concatenate(
                [crop_vec(subj.box), crop_vec(obj.box),
                 crop_vec(enclosing(subj.box, obj.box))]
            )
            key = pair_key(image_id, subj.instance_id, obj.instance_id)
            entries[key] = project(concat, dim)
    save_rfv1(entries, dim, out_path)
    return entries
