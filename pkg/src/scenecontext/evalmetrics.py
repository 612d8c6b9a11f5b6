"""Evaluation metrics: predicate accuracy, recall@k, detection MAP.

MAP follows the VOC protocol: detections are matched per category in
descending score order, each gold box claimable once, a match needs
IoU >= threshold (default 0.5), and average precision is the area under
the all-point interpolated precision/recall curve.  The mean runs over
the categories that appear in the gold set; a run with no gold at all
is defined as 0.0 and flagged with a warning.

Detections are given per image as (box, category_id, score) rows and
gold as (box, category_id) rows.
"""

from __future__ import annotations

import json
import warnings

import numpy as np

from .geometry import Box, iou


def predicate_accuracy(predictions, gold) -> float:
    predictions = list(predictions)
    gold = list(gold)
    if not gold:
        raise ValueError("gold labels must be non-empty")
    if len(predictions) != len(gold):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(gold)} gold labels"
        )
    hits = sum(1 for p, g in zip(predictions, gold) if p == g)
    return hits / len(gold)


def recall_at_k(ranked_predictions, gold, k: int) -> float:
    """Fraction of samples whose gold label appears in the first k
    entries of its ranked prediction list."""
    ranked_predictions = list(ranked_predictions)
    gold = list(gold)
    if not gold:
        raise ValueError("gold labels must be non-empty")
    if len(ranked_predictions) != len(gold):
        raise ValueError(
            f"length mismatch: {len(ranked_predictions)} lists vs {len(gold)} gold labels"
        )
    if k < 1:
        raise ValueError("k must be at least 1")
    for i, ranked in enumerate(ranked_predictions):
        if len(ranked) < k:
            raise ValueError(f"ranked list {i} has {len(ranked)} entries, k={k}")
    hits = sum(1 for ranked, g in zip(ranked_predictions, gold) if g in ranked[:k])
    return hits / len(gold)


def _all_point_ap(recalls, precisions) -> float:
    """Area under the interpolated curve (precision made non-increasing
    from the right, summed over recall steps)."""
    mrec = np.concatenate(([0.0], recalls, [1.0]))
    mpre = np.concatenate(([0.0], precisions, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    changed = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))


def average_precision_per_category(detections, gold, iou_threshold: float = 0.5) -> dict:
    """AP per category present in gold.

    detections: {image_id: [(Box, category_id, score), ...]}
    gold: {image_id: [(Box, category_id), ...]}
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError("iou_threshold must lie in (0, 1)")
    gold_categories = sorted({
        category for rows in gold.values() for _, category in rows
    })

    results = {}
    for category in gold_categories:
        gold_boxes = {
            image_id: [box for box, cat in rows if cat == category]
            for image_id, rows in gold.items()
        }
        total_gold = sum(len(boxes) for boxes in gold_boxes.values())

        rows = []
        for image_id, dets in detections.items():
            for index, (box, cat, score) in enumerate(dets):
                if cat != category:
                    continue
                if not np.isfinite(score):
                    raise ValueError(f"non-finite score in image {image_id!r}")
                rows.append((-float(score), image_id, index, box))
        rows.sort(key=lambda r: r[:3])

        matched = {image_id: [False] * len(boxes) for image_id, boxes in gold_boxes.items()}
        tp = np.zeros(len(rows))
        fp = np.zeros(len(rows))
        for i, (_, image_id, _, box) in enumerate(rows):
            candidates = gold_boxes.get(image_id, [])
            best_iou, best_j = 0.0, -1
            for j, gold_box in enumerate(candidates):
                overlap = iou(box, gold_box)
                if overlap > best_iou:
                    best_iou, best_j = overlap, j
            if best_j >= 0 and best_iou >= iou_threshold and not matched[image_id][best_j]:
                matched[image_id][best_j] = True
                tp[i] = 1.0
            else:
                fp[i] = 1.0
        if not rows:
            results[category] = 0.0
            continue
        cum_tp = np.cumsum(tp)
        cum_fp = np.cumsum(fp)
        recalls = cum_tp / total_gold
        precisions = cum_tp / (cum_tp + cum_fp)
        results[category] = _all_point_ap(recalls, precisions)
    return results


def mean_average_precision(detections, gold, iou_threshold: float = 0.5) -> float:
    per_category = average_precision_per_category(detections, gold, iou_threshold)
    if not per_category:
        warnings.warn("no gold boxes given; MAP defined as 0.0", stacklevel=2)
        return 0.0
    return float(np.mean(list(per_category.values())))


def report_json(metrics: dict) -> str:
    return json.dumps(metrics, indent=2, sort_keys=True) + "\n"


def report_text(metrics: dict) -> str:
    """Two-column metric table for terminal output."""
    width = max((len(str(k)) for k in metrics), default=6)
    width = max(width, len("metric"))
    lines = [f"{'metric':<{width}}  value", f"{'-' * width}  -----"]
    for key in sorted(metrics):
        value = metrics[key]
        shown = f"{value:.6f}" if isinstance(value, float) else str(value)
        lines.append(f"{str(key):<{width}}  {shown}")
    return "\n".join(lines) + "\n"
