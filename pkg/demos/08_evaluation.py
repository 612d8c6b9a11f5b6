"""
Evaluation: accuracy, recall@k, and mean average precision
==========================================================

Predicate classification is scored by exact-match accuracy and by
recall@k over ranked lists; object detections are scored by VOC-style
average precision (all-point interpolation, greedy IoU matching),
averaged over the categories present in the gold set.
"""

from scenecontext import (
    Box,
    average_precision_per_category,
    mean_average_precision,
    predicate_accuracy,
    recall_at_k,
)

gold_labels = [0, 2, 1, 2, 0]
ranked = [
    [0, 1, 2],  # right at rank 1
    [1, 2, 0],  # right at rank 2
    [1, 0, 2],  # right at rank 1
    [0, 1, 2],  # right at rank 3
    [2, 1, 0],  # right at rank 3
]
top1 = [r[0] for r in ranked]

print("accuracy ", predicate_accuracy(top1, gold_labels))
for k in (1, 2, 3):
    print(f"recall@{k} ", recall_at_k(ranked, gold_labels, k))

# a three-image detection fixture, worked by hand:
#   category 0: TP(0.9), FP(0.8), TP(0.7) over 2 gold -> AP 5/6
#   category 1: TP(0.95), TP(0.6), FP(0.5) over 2 gold -> AP 1.0
gold = {
    "a.jpg": [(Box(0, 0, 10, 10), 0), (Box(20, 20, 30, 30), 1)],
    "b.jpg": [(Box(0, 0, 10, 10), 0)],
    "c.jpg": [(Box(5, 5, 15, 15), 1)],
}
detections = {
    "a.jpg": [(Box(0, 0, 10, 10), 0, 0.9), (Box(20, 20, 30, 30), 1, 0.6)],
    "b.jpg": [(Box(50, 50, 60, 60), 0, 0.8), (Box(0, 0, 10, 5), 0, 0.7)],
    "c.jpg": [(Box(6, 6, 15, 15), 1, 0.95), (Box(5, 5, 15, 15), 1, 0.5)],
}

per_category = average_precision_per_category(detections, gold, iou_threshold=0.5)
print("per-category AP", {c: round(ap, 6) for c, ap in per_category.items()})
print("mean AP        ", round(mean_average_precision(detections, gold), 6))
print("exact 11/12    ", mean_average_precision(detections, gold) == 11 / 12)

# scores only matter through their order: any monotone rescaling of the
# detection scores leaves every AP unchanged
rescaled = {
    image: [(box, cat, 100.0 * score + 3.0) for box, cat, score in rows]
    for image, rows in detections.items()
}
print("monotone invariant", mean_average_precision(rescaled, gold) ==
      mean_average_precision(detections, gold))
