"""
Bounding boxes, overlap, and the enclosing region
=================================================

Boxes are canonical (x_min, y_min, x_max, y_max) rectangles.  The
enclosing box of a subject and an object is the region a relationship
lives in; IoU is the overlap measure every detection metric builds on.
"""

from scenecontext import Box, area, enclosing_box, intersection_area, iou

subject = Box(300, 50, 420, 300)   # the person
target = Box(280, 200, 460, 420)   # the bike under them

print("subject area     ", area(subject))
print("object area      ", area(target))
print("intersection     ", intersection_area(subject, target))
print("iou              ", round(iou(subject, target), 4))

# the union region both boxes live in: this is what a visual feature
# for the pair (person, bike) gets computed over
region = enclosing_box(subject, target)
print("enclosing region ", region.as_tuple())

# disjoint boxes: zero overlap, IoU 0
print("disjoint iou     ", iou(Box(0, 0, 10, 10), Box(20, 20, 30, 30)))

# identical boxes: IoU 1, and the enclosing box is the box itself
print("identical iou    ", iou(subject, subject))
print("self-enclosing   ", enclosing_box(subject, subject) == subject)
