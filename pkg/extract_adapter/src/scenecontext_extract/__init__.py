"""Image-side adapter for the scene-graph pipeline.

Turns a directory of images into the two files the pipeline consumes:
a detections JSON (objects with boxes and scores per image) and an RFV1
visual-feature file with one vector per ordered (subject, object) pair,
keyed ``image_id|subject_id|object_id``.  The adapter communicates with
the pipeline through these files only and imports nothing from it.
"""

from .detect import (
    HUE_BANDS,
    detect,
    list_images,
    load_image,
    map_into_dictionary,
    region_detections,
)
from .features import (
    PROJECTION_SEED,
    StatsFeaturizer,
    clip_box,
    enclosing,
    extract_pair_features,
    project,
)
from .relfiles import (
    AdapterError,
    AdapterWarning,
    PairInstance,
    atomic_write,
    instances_from_annotations,
    instances_from_detections,
    load_object_names,
    load_pair_instances,
    ordered_pairs,
    pair_key,
    save_detections,
    save_rfv1,
    sniff_kind,
)

__version__ = "0.1.0"
