"""Axis-aligned bounding-box arithmetic.

Boxes live in pixel coordinates with the origin at the top-left corner.
Besides plain area/intersection/IoU, this module provides the enclosing
box of a subject-object pair, which is the spatial region attached to
their relationship.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle (x_min, y_min, x_max, y_max), top-left origin.

    Zero-width or zero-height boxes are legal; inverted or non-finite
    coordinates are rejected at construction.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"box coordinate {name} is not finite: {v!r}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(
                f"inverted box: ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def contains(self, other: "Box") -> bool:
        return (
            self.x_min <= other.x_min
            and self.y_min <= other.y_min
            and self.x_max >= other.x_max
            and self.y_max >= other.y_max
        )


def area(b: Box) -> float:
    """Rectangle area, zero for degenerate boxes."""
    return b.width * b.height


def intersection_area(a: Box, b: Box) -> float:
    """Area of the overlap region; 0.0 when the boxes are disjoint."""
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def iou(a: Box, b: Box) -> float:
    """Intersection over union in [0, 1].

    Defined as 0 when the union has zero area (two degenerate boxes),
    so a box only reaches IoU 1 with itself if it has positive area.
    """
    inter = intersection_area(a, b)
    union = area(a) + area(b) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def enclosing_box(a: Box, b: Box) -> Box:
    """Smallest box containing both inputs (the relationship region)."""
    return Box(
        min(a.x_min, b.x_min),
        min(a.y_min, b.y_min),
        max(a.x_max, b.x_max),
        max(a.y_max, b.y_max),
    )
