"""Context retrieval over scene graphs.

Two graph similarities, both over category/predicate labels only (node
identity never matters, so renumbering an image's instances changes
nothing):

* triple_set_similarity: Jaccard overlap of the categorical triple sets.
  Cheap and easy to audit by hand.
* walk_similarity: shared directed label walks up to a small length,
  counted per label sequence with min-matching and normalized by the
  geometric mean of the two graphs' own walk counts.

A corpus can also be ranked against a textual pattern
"subject,predicate,object" where "*" matches anything.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .scenegraph import SceneGraph

WILDCARD = "*"

METHODS = ("jaccard", "walk")


@dataclass(frozen=True)
class TriplePattern:
    subject: str = WILDCARD
    predicate: str = WILDCARD
    object: str = WILDCARD

    def __post_init__(self):
        if all(f == WILDCARD for f in (self.subject, self.predicate, self.object)):
            raise ValueError("pattern needs at least one non-wildcard field")
        for name in (self.subject, self.predicate, self.object):
            if not name:
                raise ValueError("pattern fields may not be empty")

    def matches(self, subject: str, predicate: str, obj: str) -> bool:
        for want, got in ((self.subject, subject), (self.predicate, predicate), (self.object, obj)):
            if want != WILDCARD and want.lower() != got.lower():
                return False
        return True


def parse_pattern(text: str) -> TriplePattern:
    """Parse "subject,predicate,object"; "*" is a wildcard field."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(
            f"pattern needs exactly 3 comma-separated fields, got {len(parts)}: {text!r}"
        )
    return TriplePattern(*parts)


def categorical_triples(graph: SceneGraph) -> set:
    """The set of (subject_category, predicate, object_category) names."""
    by_id = {node.instance_id: node for node in graph.nodes}
    out = set()
    for edge in graph.edges:
        out.add((
            graph.objects.name_of(by_id[edge.subject_id].category_id),
            graph.predicates.name_of(edge.predicate_id),
            graph.objects.name_of(by_id[edge.object_id].category_id),
        ))
    return out


def triple_set_similarity(g1: SceneGraph, g2: SceneGraph) -> float:
    s1, s2 = categorical_triples(g1), categorical_triples(g2)
    if not s1 and not s2:
        return 1.0
    if not s1 or not s2:
        return 0.0
    return len(s1 & s2) / len(s1 | s2)


def _walk_counts(graph: SceneGraph, max_length: int) -> Counter:
    """Multiset of label sequences (cat, pred, cat, pred, ..., cat) over
    all directed walks of 1..max_length edges."""
    category = {
        node.instance_id: graph.objects.name_of(node.category_id)
        for node in graph.nodes
    }
    outgoing = {}
    for edge in graph.edges:
        label = graph.predicates.name_of(edge.predicate_id)
        outgoing.setdefault(edge.subject_id, []).append((edge.object_id, label))

    counts = Counter()
    frontier = Counter()
    for edge in graph.edges:
        label = graph.predicates.name_of(edge.predicate_id)
        seq = (category[edge.subject_id], label, category[edge.object_id])
        counts[seq] += 1
        frontier[(edge.object_id, seq)] += 1
    for _ in range(max_length - 1):
        grown = Counter()
        for (node, seq), count in frontier.items():
            for target, label in outgoing.get(node, ()):
                longer = seq + (label, category[target])
                counts[longer] += count
                grown[(target, longer)] += count
        frontier = grown
    return counts


def walk_similarity(g1: SceneGraph, g2: SceneGraph, length: int = 2) -> float:
    """Shared walk count / geometric mean of own walk counts, in [0, 1]."""
    if length not in (1, 2, 3):
        raise ValueError("length must be 1, 2, or 3")
    c1 = _walk_counts(g1, length)
    c2 = _walk_counts(g2, length)
    total1 = sum(c1.values())
    total2 = sum(c2.values())
    if total1 == 0 and total2 == 0:
        return 1.0
    if total1 == 0 or total2 == 0:
        return 0.0
    shared = sum(min(count, c2[seq]) for seq, count in c1.items())
    return shared / (total1 * total2) ** 0.5


def _pattern_score(pattern: TriplePattern, graph: SceneGraph) -> float:
    by_id = {node.instance_id: node for node in graph.nodes}
    hits = 0
    for edge in graph.edges:
        subject = graph.objects.name_of(by_id[edge.subject_id].category_id)
        predicate = graph.predicates.name_of(edge.predicate_id)
        obj = graph.objects.name_of(by_id[edge.object_id].category_id)
        if pattern.matches(subject, predicate, obj):
            hits += 1
    return float(hits)


def rank_by_context(query, corpus, method: str = "jaccard", limit=None, walk_length: int = 2):
    """Rank corpus graphs against a SceneGraph or TriplePattern query.

    Returns (image_id, score) rows, descending score, ties by image_id.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, pick from {METHODS}")
    if not corpus:
        raise ValueError("corpus must be non-empty")
    if limit is not None and limit < 1:
        raise ValueError("limit must be positive")

    if isinstance(query, TriplePattern):
        def score(graph):
            return _pattern_score(query, graph)
    elif isinstance(query, SceneGraph):
        if method == "jaccard":
            def score(graph):
                return triple_set_similarity(query, graph)
        else:
            def score(graph):
                return walk_similarity(query, graph, walk_length)
    else:
        raise TypeError(f"query must be a SceneGraph or TriplePattern, got {type(query).__name__}")

    rows = sorted(
        ((graph.image_id, score(graph)) for graph in corpus),
        key=lambda row: (-row[1], row[0]),
    )
    return rows[:limit] if limit is not None else rows
