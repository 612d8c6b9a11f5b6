"""File contracts shared with the scene-graph pipeline.

The adapter talks to the downstream pipeline through files only, so the
three formats are (re)implemented here from their byte-level contracts
rather than imported:

- detections JSON: ``{image: [{"category": name, "bbox": [x_min, y_min,
  x_max, y_max], "score": s}, ...]}``; instance ids are list positions.
- annotations JSON: ``{image: [{"predicate": id, "subject": {"category":
  id, "bbox": [y_min, y_max, x_min, x_max]}, "object": {...}}, ...]}``;
  identical (category, canonical box) endpoints within an image are one
  instance, ids assigned in first-use order (subject before object,
  records in file order).
- RFV1 features: magic ``RFV1``, u32 LE dimension, u32 LE entry count,
  then per entry u16 LE key length, the UTF-8 key
  ``image_id|subject_id|object_id`` and dimension float32 LE values,
  entries sorted by key.

Everything is written atomically (temp file + rename) and sorted, so a
rerun with the same inputs produces byte-identical output.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
import warnings
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

RFV1_MAGIC = b"RFV1"


class AdapterError(ValueError):
    """Malformed input the adapter refuses to process."""


class AdapterWarning(UserWarning):
    """Recoverable oddity: something was skipped or passed through."""


def warn(message: str) -> None:
    warnings.warn(message, AdapterWarning, stacklevel=3)


@contextmanager
def atomic_write(path, mode: str = "w"):
    """Write to a temp file in the target directory, rename on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


@dataclass(frozen=True)
class PairInstance:
    """One object instance as the pipeline will number it."""

    instance_id: int
    category: object          # int (annotations) or name string (detections)
    box: tuple                # canonical (x_min, y_min, x_max, y_max) floats


def pair_key(image_id: str, subject_id: int, object_id: int) -> str:
    if "|" in image_id:
        raise AdapterError(f"image id {image_id!r} may not contain '|'")
    return f"{image_id}|{subject_id}|{object_id}"


def ordered_pairs(n: int) -> list:
    """All n(n-1) directed (subject, object) index pairs, lexicographic."""
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def _load_json_map(source) -> dict:
    if isinstance(source, dict):
        payload = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    if not isinstance(payload, dict):
        raise AdapterError("relationship source must be a JSON map keyed by image id")
    return payload


def sniff_kind(payload: dict) -> str:
    """Guess 'annotations' or 'detections' from the first record seen."""
    for image, rows in payload.items():
        if not isinstance(rows, list):
            raise AdapterError(f"image {image!r}: expected a list of records")
        for row in rows:
            if not isinstance(row, dict):
                raise AdapterError(f"image {image!r}: records must be mappings")
            if "predicate" in row or "subject" in row:
                return "annotations"
            if "category" in row and "bbox" in row:
                return "detections"
            raise AdapterError(f"image {image!r}: unrecognizable record {row!r}")
    return "detections"      # empty map: nothing to extract either way


def _box_from(raw, order: str, context: str) -> tuple:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise AdapterError(f"{context}: bbox must be a 4-element list, got {raw!r}")
    try:
        values = [float(v) for v in raw]
    except (TypeError, ValueError):
        raise AdapterError(f"{context}: non-numeric bbox {raw!r}") from None
    if order == "yyxx":
        y_min, y_max, x_min, x_max = values
    else:
        x_min, y_min, x_max, y_max = values
    if not all(math.isfinite(v) for v in (x_min, y_min, x_max, y_max)):
        raise AdapterError(f"{context}: non-finite bbox {raw!r}")
    if x_min > x_max or y_min > y_max:
        raise AdapterError(f"{context}: inverted bbox {raw!r}")
    return (x_min, y_min, x_max, y_max)


def instances_from_annotations(payload: dict) -> dict:
    """Per-image instance lists with the pipeline's interning applied.

    Numbering must match what the annotation parser on the consuming side
    produces, or every feature key would miss: dedup key is the (category,
    canonical box) pair, ids count up from 0 in first-use order.
    """
    result = {}
    for image, rows in payload.items():
        if not isinstance(rows, list):
            raise AdapterError(f"image {image!r}: expected a list of records")
        seen: dict[tuple, PairInstance] = {}
        instances: list[PairInstance] = []
        for ordinal, row in enumerate(rows):
            for side in ("subject", "object"):
                try:
                    endpoint = row[side]
                    category = endpoint["category"]
                    bbox = endpoint["bbox"]
                except (KeyError, TypeError):
                    raise AdapterError(
                        f"image {image!r}, record {ordinal}: missing or malformed "
                        f"{side!r} entry"
                    ) from None
                if not isinstance(category, int):
                    raise AdapterError(
                        f"image {image!r}, record {ordinal}: {side} category must "
                        f"be an integer id, got {category!r}"
                    )
                box = _box_from(bbox, "yyxx", f"image {image!r}, record {ordinal}")
                key = (category, box)
                if key not in seen:
                    inst = PairInstance(len(seen), category, box)
                    seen[key] = inst
                    instances.append(inst)
        result[image] = instances
    return result


def instances_from_detections(payload: dict) -> dict:
    """Per-image instance lists from a detections file: ids are positions."""
    result = {}
    for image, rows in payload.items():
        if not isinstance(rows, list):
            raise AdapterError(f"image {image!r}: expected a list of detections")
        instances = []
        for ordinal, row in enumerate(rows):
            try:
                name = row["category"]
                bbox = row["bbox"]
            except (KeyError, TypeError):
                raise AdapterError(
                    f"image {image!r}, detection {ordinal}: malformed record {row!r}"
                ) from None
            box = _box_from(bbox, "xyxy", f"image {image!r}, detection {ordinal}")
            instances.append(PairInstance(ordinal, name, box))
        result[image] = instances
    return result


def load_pair_instances(source, kind: str = "auto") -> dict:
    """Read either relationship file into ``{image: [PairInstance, ...]}``."""
    payload = _load_json_map(source)
    if kind == "auto":
        kind = sniff_kind(payload)
    if kind == "annotations":
        return instances_from_annotations(payload)
    if kind == "detections":
        return instances_from_detections(payload)
    raise AdapterError(f"unknown relationship-file kind {kind!r}")


def load_object_names(path) -> list:
    """Read an object dictionary: {"names": [...]} or a bare JSON list."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict) and isinstance(payload.get("names"), list):
        names = payload["names"]
    elif isinstance(payload, list):
        names = payload
    else:
        raise AdapterError(f'{path}: expected {{"names": [...]}} or a JSON list of names')
    if not all(isinstance(n, str) for n in names):
        raise AdapterError(f"{path}: dictionary names must be strings")
    return list(names)


def save_detections(detections: dict, path) -> None:
    """Write the detections JSON map, keys sorted, floats rounded stable."""
    payload = {}
    for image in sorted(detections):
        rows = []
        for det in detections[image]:
            rows.append(
                {
                    "category": det["category"],
                    "bbox": [round(float(v), 6) for v in det["bbox"]],
                    "score": round(float(det["score"]), 6),
                }
            )
        payload[image] = rows
    with atomic_write(path) as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def save_rfv1(entries: dict, dim: int, path) -> None:
    """Write features keyed by relationship-key text, sorted, atomically.

    Every vector is checked against the declared dimension before any
    byte is written; a mismatch aborts with the offending key named.
    """
    if dim < 1:
        raise AdapterError(f"feature dimension must be at least 1, got {dim}")
    prepared = {}
    for key_text in sorted(entries):
        vec = np.asarray(entries[key_text], dtype=np.float32)
        if vec.shape != (dim,):
            raise AdapterError(
                f"feature for {key_text!r} has shape {vec.shape}, "
                f"declared dimension is {dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise AdapterError(f"non-finite feature components for {key_text!r}")
        encoded = key_text.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise AdapterError(f"key too long to serialize: {key_text[:40]!r}...")
        prepared[encoded] = vec
    with atomic_write(path, "wb") as fh:
        fh.write(RFV1_MAGIC)
        fh.write(struct.pack("<II", dim, len(prepared)))
        for encoded, vec in prepared.items():
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(vec.tobytes())
