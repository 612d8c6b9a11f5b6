"""Object detection into the detections JSON contract.

Two backends:

- ``region`` needs no weights at all: it thresholds saturated pixels in
  HSV, labels connected components inside fixed hue bands, and reports
  each sufficiently large region as a detection named after its hue
  ("red", "yellow", ...).  It is not a semantic detector; it exists so
  the complete file pipeline runs deterministically on machines with no
  pretrained model, and for synthetic scenes whose objects are colored
  regions by construction.
- ``torchvision`` runs a real pretrained Faster R-CNN whose weights must
  already sit on local disk (see torchmodels; nothing downloads).

Detected category names are mapped into the consuming pipeline's object
dictionary when one is supplied: exact match, then case-folded, then
with underscores/hyphens collapsed to spaces.  Names with no dictionary
entry pass through verbatim with a warning; detector vocabularies and
relationship-dataset vocabularies never line up exactly, and silently
dropping or mistranslating detections would be worse than surfacing the
gap.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .relfiles import AdapterError, save_detections, warn

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".gif", ".webp", ".tif", ".tiff"}

# PIL's HSV puts the full hue circle in 0..255.  Red wraps around zero.
HUE_BANDS = (
    ("red", 234, 21),
    ("yellow", 22, 63),
    ("green", 64, 106),
    ("cyan", 107, 149),
    ("blue", 150, 191),
    ("magenta", 192, 233),
)


def list_images(image_dir) -> list:
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise AdapterError(f"image directory {str(image_dir)!r} does not exist")
    return sorted(
        p for p in image_dir.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def load_image(path) -> np.ndarray:
    """Decode to an RGB uint8 array; decoding errors propagate as OSError."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def region_detections(rgb: np.ndarray, min_area: float = 0.002,
                      saturation_min: int = 64, value_min: int = 48) -> list:
    """Colored connected regions as detection rows, best score first.

    min_area is a fraction of the image; score is the region's mean
    saturation, so fully saturated synthetic rectangles land near 1.
    """
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise AdapterError(f"expected an RGB image array, got shape {rgb.shape}")
    height, width = rgb.shape[:2]
    hsv = np.asarray(Image.fromarray(rgb, "RGB").convert("HSV"))
    hue = hsv[..., 0].astype(int)
    sat = hsv[..., 1]
    colorful = (sat >= saturation_min) & (hsv[..., 2] >= value_min)
    min_pixels = max(1, int(min_area * height * width))

    rows = []
    for name, lo, hi in HUE_BANDS:
        if lo <= hi:
            band = colorful & (hue >= lo) & (hue <= hi)
        else:
            band = colorful & ((hue >= lo) | (hue <= hi))
        labels, count = ndimage.label(band)
        if count == 0:
            continue
        areas = np.bincount(labels.ravel())
        for label_id, region in enumerate(ndimage.find_objects(labels), start=1):
            if region is None or areas[label_id] < min_pixels:
                continue
            inside = labels[region] == label_id
            score = float(sat[region][inside].mean()) / 255.0
            ys, xs = region
            rows.append(
                {
                    "category": name,
                    "bbox": [float(xs.start), float(ys.start),
                             float(xs.stop), float(ys.stop)],
                    "score": score,
                }
            )
    rows.sort(key=lambda r: (-r["score"], r["bbox"], r["category"]))
    return rows


def _normalize(name: str) -> str:
    return " ".join(name.replace("_", " ").replace("-", " ").casefold().split())


def map_into_dictionary(rows: list, names) -> tuple:
    """Rewrite detection category names to dictionary spelling.

    Returns the rewritten rows and the set of names that had no entry
    (left verbatim); the caller decides how loudly to report those.
    """
    canonical: dict[str, str] = {}
    for name in names:
        canonical.setdefault(name, name)
        canonical.setdefault(name.casefold(), name)
        canonical.setdefault(_normalize(name), name)

    mapped = []
    unmapped = set()
    for row in rows:
        raw = row["category"]
        hit = canonical.get(raw)
        if hit is None:
            hit = canonical.get(raw.casefold())
        if hit is None:
            hit = canonical.get(_normalize(raw))
        if hit is None:
            unmapped.add(raw)
            mapped.append(dict(row))
        else:
            mapped.append({**row, "category": hit})
    return mapped, unmapped


def detect(image_dir, out_path, object_names=None, backend: str = "region",
           weights=None, min_area: float = 0.002) -> dict:
    """Run the detector over a directory and write the detections JSON.

    Unreadable files are skipped with a warning; an empty directory
    yields an empty map.  The backend is resolved (and any model loaded)
    before the first image so a broken model fails the whole run.
    """
    if backend == "region":
        def run(rgb):
            return region_detections(rgb, min_area=min_area)
    elif backend == "torchvision":
        from .torchmodels import load_detector
        run = load_detector(weights)
    else:
        raise AdapterError(f"unknown detector backend {backend!r}")

    result = {}
    unmapped_total = set()
    for path in list_images(image_dir):
        try:
            rgb = load_image(path)
        except (OSError, ValueError) as exc:
            warn(f"skipping unreadable image {path.name!r}: {exc}")
            continue
        rows = run(rgb)
        if object_names is not None:
            rows, unmapped = map_into_dictionary(rows, object_names)
            unmapped_total |= unmapped
        result[path.name] = rows
    for name in sorted(unmapped_total):
        warn(f"category {name!r} is not in the object dictionary; passed through verbatim")
    save_detections(result, out_path)
    return result
