"""Annotation ingestion, dictionaries, splits, and pair enumeration.

The annotation input is a JSON map from image name to a list of
relationship records::

    {"img.jpg": [{"predicate": 3,
                  "subject": {"category": 0, "bbox": [ymin, ymax, xmin, xmax]},
                  "object":  {"category": 5, "bbox": [ymin, ymax, xmin, xmax]}}]}

Boxes arrive in the [y_min, y_max, x_min, x_max] order used by published
relationship annotations and are converted at ingestion to the canonical
(x_min, y_min, x_max, y_max) used everywhere else in the toolkit.  Object
mentions are deduplicated by (category, box) into per-image instances,
numbered in first-appearance order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fileio import atomic_write, open_maybe_path
from .geometry import Box

# proportions behind the 3030/750/955 split of the 4735 usable images
SPLIT_WEIGHTS = {"train": 3030, "val": 750, "test": 955}


class AnnotationError(ValueError):
    """Malformed or out-of-range annotation content."""


@dataclass(frozen=True)
class ObjectInstance:
    """One detected or annotated object in an image."""

    instance_id: int
    category_id: int
    bbox: Box
    score: float = 1.0


@dataclass(frozen=True)
class RelationshipAnnotation:
    """Gold (subject, predicate, object) triple over two instances."""

    subject: ObjectInstance
    predicate_id: int
    object: ObjectInstance


class Dictionary:
    """Ordered name list with a dense bidirectional index."""

    def __init__(self, names):
        names = list(names)
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate dictionary names: {dupes}")
        self.names = tuple(names)
        self._index = {name: i for i, name in enumerate(self.names)}

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name):
        return name in self._index

    def __eq__(self, other):
        return isinstance(other, Dictionary) and self.names == other.names

    def __repr__(self):
        return f"Dictionary({len(self)} names)"

    def name_of(self, index: int) -> str:
        if not 0 <= index < len(self.names):
            raise AnnotationError(f"index {index} outside dictionary of {len(self.names)} names")
        return self.names[index]

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise AnnotationError(f"name {name!r} not in dictionary") from None

    @staticmethod
    def synthetic(prefix: str, count: int) -> "Dictionary":
        """Placeholder names for sources that ship no name list."""
        return Dictionary([f"{prefix}_{i:03d}" for i in range(count)])


@dataclass
class ImageAnnotation:
    instances: list[ObjectInstance] = field(default_factory=list)
    relationships: list[RelationshipAnnotation] = field(default_factory=list)


@dataclass
class DatasetIndex:
    """Immutable-after-load view of an annotation source."""

    images: dict[str, ImageAnnotation]
    objects: Dictionary
    predicates: Dictionary

    def __len__(self):
        return len(self.images)

    def image_ids(self) -> list[str]:
        return sorted(self.images)

    def relationship_count(self) -> int:
        return sum(len(a.relationships) for a in self.images.values())

    def merge(self, other: "DatasetIndex") -> "DatasetIndex":
        if self.objects != other.objects or self.predicates != other.predicates:
            raise AnnotationError("cannot merge indexes built over different dictionaries")
        overlap = self.images.keys() & other.images.keys()
        if overlap:
            raise AnnotationError(f"duplicate image ids in merge: {sorted(overlap)[:5]}")
        merged = dict(self.images)
        merged.update(other.images)
        return DatasetIndex(merged, self.objects, self.predicates)

    def subset(self, image_ids) -> "DatasetIndex":
        return DatasetIndex(
            {i: self.images[i] for i in image_ids}, self.objects, self.predicates
        )


def _canonical_box(raw, image: str, ordinal: int) -> Box:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise AnnotationError(
            f"image {image!r}, record {ordinal}: bbox must be a 4-element "
            f"[y_min, y_max, x_min, x_max] list, got {raw!r}"
        )
    y_min, y_max, x_min, x_max = (float(v) for v in raw)
    try:
        return Box(x_min, y_min, x_max, y_max)
    except ValueError as exc:
        raise AnnotationError(f"image {image!r}, record {ordinal}: {exc}") from None


def _parse_endpoint(record, side: str, image: str, ordinal: int, objects: Dictionary):
    try:
        raw = record[side]
        category = raw["category"]
        bbox = raw["bbox"]
    except (KeyError, TypeError):
        raise AnnotationError(
            f"image {image!r}, record {ordinal}: missing or malformed {side!r} entry"
        ) from None
    if not isinstance(category, int) or not 0 <= category < len(objects):
        raise AnnotationError(
            f"image {image!r}, record {ordinal}: {side} category {category!r} "
            f"outside [0, {len(objects)})"
        )
    return category, _canonical_box(bbox, image, ordinal)


def load_annotations(annotation_source, object_names=None, predicate_names=None) -> DatasetIndex:
    """Parse an annotation JSON (path, stream, or already-parsed mapping).

    ``object_names`` / ``predicate_names`` may be Dictionary instances, name
    lists, or None.  With None, permissive synthetic dictionaries sized to
    the largest observed index are created (counting-only uses such as the
    stats command); supplying real dictionaries enables strict bounds checks.
    """
    if isinstance(annotation_source, dict):
        payload = annotation_source
    else:
        stream, should_close = open_maybe_path(annotation_source)
        try:
            payload = json.load(stream)
        finally:
            if should_close:
                stream.close()
    if not isinstance(payload, dict):
        raise AnnotationError("annotation source must be a map of image name to record list")

    objects = _as_dictionary(object_names, payload, "object")
    predicates = _as_dictionary(predicate_names, payload, "predicate")

    images: dict[str, ImageAnnotation] = {}
    for image, records in payload.items():
        if not isinstance(records, list):
            raise AnnotationError(f"image {image!r}: expected a list of records")
        ann = ImageAnnotation()
        seen: dict[tuple, ObjectInstance] = {}

        def intern(category: int, bbox: Box) -> ObjectInstance:
            key = (category, bbox.as_tuple())
            inst = seen.get(key)
            if inst is None:
                inst = ObjectInstance(len(seen), category, bbox)
                seen[key] = inst
                ann.instances.append(inst)
            return inst

        for ordinal, record in enumerate(records):
            if not isinstance(record, dict):
                raise AnnotationError(f"image {image!r}, record {ordinal}: not a mapping")
            predicate = record.get("predicate")
            if not isinstance(predicate, int) or not 0 <= predicate < len(predicates):
                raise AnnotationError(
                    f"image {image!r}, record {ordinal}: predicate {predicate!r} "
                    f"outside [0, {len(predicates)})"
                )
            s_cat, s_box = _parse_endpoint(record, "subject", image, ordinal, objects)
            o_cat, o_box = _parse_endpoint(record, "object", image, ordinal, objects)
            ann.relationships.append(
                RelationshipAnnotation(intern(s_cat, s_box), predicate, intern(o_cat, o_box))
            )
        images[image] = ann
    return DatasetIndex(images, objects, predicates)


def _max_index(payload, field_name):
    best = -1
    for records in payload.values():
        if not isinstance(records, list):
            continue
        for record in records:
            if not isinstance(record, dict):
                continue
            if field_name == "predicate":
                v = record.get("predicate")
                if isinstance(v, int):
                    best = max(best, v)
            else:
                for side in ("subject", "object"):
                    v = record.get(side, {})
                    c = v.get("category") if isinstance(v, dict) else None
                    if isinstance(c, int):
                        best = max(best, c)
    return best


def _as_dictionary(names, payload, kind) -> Dictionary:
    if isinstance(names, Dictionary):
        return names
    if names is not None:
        return Dictionary(names)
    return Dictionary.synthetic(kind, _max_index(payload, kind) + 1)


def save_annotations(index: DatasetIndex, path) -> None:
    """Write the annotation JSON back out (boxes in [ymin, ymax, xmin, xmax])."""
    payload = {}
    for image in index.image_ids():
        rows = []
        for rel in index.images[image].relationships:
            rows.append(
                {
                    "predicate": rel.predicate_id,
                    "subject": _endpoint_json(rel.subject),
                    "object": _endpoint_json(rel.object),
                }
            )
        payload[image] = rows
    with atomic_write(path) as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _endpoint_json(inst: ObjectInstance):
    b = inst.bbox
    return {"category": inst.category_id, "bbox": [b.y_min, b.y_max, b.x_min, b.x_max]}


def split(index: DatasetIndex, seed: int):
    """Deterministic train/val/test partition by image.

    Images without relationships are excluded (nothing to learn from or
    evaluate on); the remainder is shuffled with the given seed and cut in
    3030:750:955 proportions using largest-remainder rounding, leftovers
    to train first.
    """
    eligible = [i for i in index.image_ids() if index.images[i].relationships]
    if len(eligible) < 3:
        raise AnnotationError(
            f"cannot split {len(eligible)} images with relationships into three parts"
        )
    rng = np.random.default_rng(seed)
    order = [eligible[i] for i in rng.permutation(len(eligible))]

    total = sum(SPLIT_WEIGHTS.values())
    n = len(order)
    quotas = {k: n * w / total for k, w in SPLIT_WEIGHTS.items()}
    counts = {k: int(q) for k, q in quotas.items()}
    leftovers = n - sum(counts.values())
    # largest fractional part wins; ties resolved in train, val, test order
    by_fraction = sorted(
        SPLIT_WEIGHTS, key=lambda k: (-(quotas[k] - counts[k]), list(SPLIT_WEIGHTS).index(k))
    )
    for k in by_fraction[:leftovers]:
        counts[k] += 1

    train_ids = sorted(order[: counts["train"]])
    val_ids = sorted(order[counts["train"] : counts["train"] + counts["val"]])
    test_ids = sorted(order[counts["train"] + counts["val"] :])
    return index.subset(train_ids), index.subset(val_ids), index.subset(test_ids)


def enumerate_pairs(instances, mode: str = "ordered") -> list[tuple[int, int]]:
    """All candidate (subject_index, object_index) pairs.

    ordered: n(n-1) directed pairs, lexicographic; unordered: n(n-1)/2
    pairs with subject_index < object_index.
    """
    n = len(instances)
    if mode == "ordered":
        return [(i, j) for i in range(n) for j in range(n) if i != j]
    if mode == "unordered":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    raise ValueError(f"unknown pair mode {mode!r} (expected 'ordered' or 'unordered')")


@dataclass
class ImageStats:
    """Per-image object/relationship counts plus distribution summaries."""

    rows: list[tuple[str, int, int]]

    def summary(self) -> dict:
        if not self.rows:
            return {"images": 0}
        objs = np.array([r[1] for r in self.rows])
        rels = np.array([r[2] for r in self.rows])
        argmax_rel = max(self.rows, key=lambda r: (r[2], r[0]))
        return {
            "images": len(self.rows),
            "objects": {"min": int(objs.min()), "max": int(objs.max()), "mean": float(objs.mean())},
            "relationships": {
                "min": int(rels.min()),
                "max": int(rels.max()),
                "mean": float(rels.mean()),
                "max_image": argmax_rel[0],
            },
        }

    def histogram(self, what: str = "relationships") -> dict[int, int]:
        col = {"objects": 1, "relationships": 2}[what]
        out: dict[int, int] = {}
        for row in self.rows:
            out[row[col]] = out.get(row[col], 0) + 1
        return dict(sorted(out.items()))

    def write_csv(self, path) -> None:
        with atomic_write(path, newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["image_id", "objects", "relationships"])
            writer.writerows(self.rows)


def image_stats(index: DatasetIndex) -> ImageStats:
    rows = [
        (image, len(index.images[image].instances), len(index.images[image].relationships))
        for image in index.image_ids()
    ]
    return ImageStats(rows)


def export_dictionaries(index: DatasetIndex, out_dir) -> None:
    """Write objects.json / predicates.json ({"names": [...]}) into out_dir."""
    out_dir = Path(out_dir)
    for name, dictionary in (("objects", index.objects), ("predicates", index.predicates)):
        with atomic_write(out_dir / f"{name}.json") as fh:
            json.dump({"names": list(dictionary.names)}, fh, indent=1)
            fh.write("\n")


def import_dictionaries(path_dir) -> tuple[Dictionary, Dictionary]:
    path_dir = Path(path_dir)
    return (
        load_dictionary(path_dir / "objects.json"),
        load_dictionary(path_dir / "predicates.json"),
    )


def load_dictionary(path) -> Dictionary:
    """Read a name list: {"names": [...]} or a bare JSON list."""
    stream, should_close = open_maybe_path(path)
    try:
        payload = json.load(stream)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path}: not valid JSON ({exc})") from None
    finally:
        if should_close:
            stream.close()
    if isinstance(payload, dict) and isinstance(payload.get("names"), list):
        names = payload["names"]
    elif isinstance(payload, list):
        names = payload
    else:
        raise AnnotationError(f'{path}: expected {{"names": [...]}} or a JSON list of names')
    if not all(isinstance(n, str) for n in names):
        raise AnnotationError(f"{path}: dictionary names must be strings")
    return Dictionary(names)


def load_detections(source, object_names, skip_unknown: bool = True):
    """Read a detections JSON map {image: [{"category": name, "bbox":
    [x_min, y_min, x_max, y_max], "score": s}]} into per-image instances.

    Instance ids are list positions, which is the id convention feature
    files are keyed by.  Unknown category names are skipped (or rejected
    with skip_unknown=False); skipped entries still consume an id so keys
    stay aligned with the emitting side.
    """
    if isinstance(source, dict):
        payload = source
    else:
        stream, should_close = open_maybe_path(source)
        try:
            payload = json.load(stream)
        finally:
            if should_close:
                stream.close()
    if not isinstance(payload, dict):
        raise AnnotationError("detections source must be a map of image name to detection list")
    if not isinstance(object_names, Dictionary):
        object_names = Dictionary(object_names)

    result: dict[str, list[ObjectInstance]] = {}
    skipped: list[tuple[str, int, str]] = []
    for image, rows in payload.items():
        if not isinstance(rows, list):
            raise AnnotationError(f"image {image!r}: expected a list of detections")
        instances = []
        for ordinal, row in enumerate(rows):
            try:
                name = row["category"]
                x_min, y_min, x_max, y_max = (float(v) for v in row["bbox"])
                score = float(row.get("score", 1.0))
            except (KeyError, TypeError, ValueError):
                raise AnnotationError(
                    f"image {image!r}, detection {ordinal}: malformed record {row!r}"
                ) from None
            if name not in object_names:
                if skip_unknown:
                    skipped.append((image, ordinal, name))
                    continue
                raise AnnotationError(
                    f"image {image!r}, detection {ordinal}: unknown category {name!r}"
                )
            instances.append(
                ObjectInstance(ordinal, object_names.index_of(name), Box(x_min, y_min, x_max, y_max), score)
            )
        result[image] = instances
    return result, skipped
