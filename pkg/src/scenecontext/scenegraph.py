"""Directed scene graphs: assembly, triples, DOT and JSON forms.

Nodes are object instances; an edge keeps the predicate id, its
probability, and its rank among the predictions retained for that
(subject, object) pair.  Parallel edges between one pair are expected:
one per retained predicate.  Node identity is the instance id, so two
people in one image stay two nodes.

The JSON document embeds both name dictionaries, which makes the file
self-describing and the round-trip lossless:

    {"version": 1, "image": ..., "objects": [...], "predicates": [...],
     "nodes": [{"id", "category", "bbox", "score"}, ...],
     "edges": [{"subject", "object", "predicate", "probability", "rank"}, ...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .dataset import AnnotationError, Dictionary, ObjectInstance
from .fileio import atomic_write
from .geometry import Box


class GraphSchemaError(ValueError):
    """JSON document rejected; message carries a /path/to/the/field."""


@dataclass(frozen=True)
class Edge:
    subject_id: int
    object_id: int
    predicate_id: int
    probability: float
    rank: int

    def __post_init__(self):
        if self.subject_id == self.object_id:
            raise ValueError("edge endpoints must be distinct instances")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")
        if self.rank < 1:
            raise ValueError("rank counts from 1")


@dataclass
class SceneGraph:
    image_id: str
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    objects: Dictionary = field(default_factory=lambda: Dictionary([]))
    predicates: Dictionary = field(default_factory=lambda: Dictionary([]))

    def node_by_id(self, instance_id: int) -> ObjectInstance:
        for node in self.nodes:
            if node.instance_id == instance_id:
                return node
        raise KeyError(f"no node with instance id {instance_id}")


def assemble(
    image_id: str,
    instances,
    pair_predictions,
    objects: Dictionary,
    predicates: Dictionary,
    k: int = 3,
    min_prob: float = 0.0,
) -> SceneGraph:
    """Keep the top-k predicates per ordered pair, drop any below
    min_prob, and order everything canonically so the result does not
    depend on dict iteration order.

    pair_predictions maps (subject_instance_id, object_instance_id) to a
    list of (predicate_id, probability) already ranked by probability.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not 0.0 <= min_prob <= 1.0:
        raise ValueError("min_prob must lie in [0, 1]")
    nodes = sorted(instances, key=lambda inst: inst.instance_id)
    ids = [node.instance_id for node in nodes]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate instance ids in node list")
    known = set(ids)
    for node in nodes:
        objects.name_of(node.category_id)

    edges = []
    for (subj, obj) in sorted(pair_predictions):
        ranked = pair_predictions[(subj, obj)]
        if subj not in known or obj not in known:
            raise AnnotationError(
                f"prediction for pair ({subj}, {obj}) references an unknown instance"
            )
        if subj == obj:
            raise AnnotationError(f"prediction pairs instance {subj} with itself")
        probs = [float(p) for _, p in ranked]
        if any(probs[i] < probs[i + 1] for i in range(len(probs) - 1)):
            raise ValueError(
                f"predictions for pair ({subj}, {obj}) are not ranked by probability"
            )
        rank = 0
        for predicate_id, prob in ranked[:k]:
            if prob < min_prob:
                break
            predicates.name_of(int(predicate_id))
            rank += 1
            edges.append(Edge(subj, obj, int(predicate_id), float(prob), rank))
    return SceneGraph(image_id, nodes, edges, objects, predicates)


def triples(graph: SceneGraph):
    """(subject_name, predicate_name, object_name, probability) per edge,
    ordered by (subject id, object id, rank)."""
    by_id = {node.instance_id: node for node in graph.nodes}
    rows = []
    for edge in sorted(graph.edges, key=lambda e: (e.subject_id, e.object_id, e.rank)):
        subject = by_id.get(edge.subject_id)
        target = by_id.get(edge.object_id)
        if subject is None or target is None:
            raise AnnotationError(
                f"edge ({edge.subject_id}, {edge.object_id}) references a missing node"
            )
        rows.append((
            graph.objects.name_of(subject.category_id),
            graph.predicates.name_of(edge.predicate_id),
            graph.objects.name_of(target.category_id),
            edge.probability,
        ))
    return rows


def _node_label(graph: SceneGraph, node: ObjectInstance) -> str:
    return f"{graph.objects.name_of(node.category_id)}#{node.instance_id}"


def to_dot(graph: SceneGraph) -> str:
    """Graphviz digraph; node labels "category#instance", edge labels
    "predicate (prob)" with two decimals."""
    by_id = {node.instance_id: node for node in graph.nodes}
    lines = ["digraph scene {"]
    for node in sorted(graph.nodes, key=lambda n: n.instance_id):
        lines.append(f'  "{_node_label(graph, node)}";')
    for edge in sorted(graph.edges, key=lambda e: (e.subject_id, e.object_id, e.rank)):
        label = f"{graph.predicates.name_of(edge.predicate_id)} ({edge.probability:.2f})"
        lines.append(
            f'  "{_node_label(graph, by_id[edge.subject_id])}" -> '
            f'"{_node_label(graph, by_id[edge.object_id])}" [label="{label}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(graph: SceneGraph) -> str:
    doc = {
        "version": 1,
        "image": graph.image_id,
        "objects": list(graph.objects.names),
        "predicates": list(graph.predicates.names),
        "nodes": [
            {
                "id": node.instance_id,
                "category": node.category_id,
                "bbox": list(node.bbox.as_tuple()),
                "score": node.score,
            }
            for node in sorted(graph.nodes, key=lambda n: n.instance_id)
        ],
        "edges": [
            {
                "subject": edge.subject_id,
                "object": edge.object_id,
                "predicate": edge.predicate_id,
                "probability": edge.probability,
                "rank": edge.rank,
            }
            for edge in sorted(graph.edges, key=lambda e: (e.subject_id, e.object_id, e.rank))
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def _expect(doc, key, kind, path):
    if not isinstance(doc, dict):
        raise GraphSchemaError(f"{path or '/'}: expected an object")
    if key not in doc:
        raise GraphSchemaError(f"{path}/{key}: missing")
    value = doc[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise GraphSchemaError(f"{path}/{key}: expected a number")
        return float(value)
    if kind is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise GraphSchemaError(f"{path}/{key}: expected an integer")
        return value
    if not isinstance(value, kind):
        raise GraphSchemaError(f"{path}/{key}: expected {kind.__name__}")
    return value


def from_json(text: str) -> SceneGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphSchemaError(f"/: not valid JSON ({exc})") from exc
    version = _expect(doc, "version", int, "")
    if version != 1:
        raise GraphSchemaError(f"/version: unsupported value {version}")
    image_id = _expect(doc, "image", str, "")
    object_names = _expect(doc, "objects", list, "")
    predicate_names = _expect(doc, "predicates", list, "")
    for field_name, names in (("objects", object_names), ("predicates", predicate_names)):
        for i, name in enumerate(names):
            if not isinstance(name, str):
                raise GraphSchemaError(f"/{field_name}/{i}: expected a string")
    try:
        objects = Dictionary(object_names)
        predicates = Dictionary(predicate_names)
    except ValueError as exc:
        raise GraphSchemaError(f"/objects: {exc}") from exc

    nodes = []
    for i, raw in enumerate(_expect(doc, "nodes", list, "")):
        path = f"/nodes/{i}"
        instance_id = _expect(raw, "id", int, path)
        category = _expect(raw, "category", int, path)
        bbox = _expect(raw, "bbox", list, path)
        if len(bbox) != 4 or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox
        ):
            raise GraphSchemaError(f"{path}/bbox: expected 4 numbers")
        score = _expect(raw, "score", float, path)
        if not 0 <= category < len(objects):
            raise GraphSchemaError(f"{path}/category: {category} outside dictionary")
        try:
            box = Box(*[float(v) for v in bbox])
        except ValueError as exc:
            raise GraphSchemaError(f"{path}/bbox: {exc}") from exc
        nodes.append(ObjectInstance(instance_id, category, box, score))
    ids = {node.instance_id for node in nodes}
    if len(ids) != len(nodes):
        raise GraphSchemaError("/nodes: duplicate instance ids")

    edges = []
    for i, raw in enumerate(_expect(doc, "edges", list, "")):
        path = f"/edges/{i}"
        subject = _expect(raw, "subject", int, path)
        target = _expect(raw, "object", int, path)
        predicate = _expect(raw, "predicate", int, path)
        probability = _expect(raw, "probability", float, path)
        rank = _expect(raw, "rank", int, path)
        for endpoint, key in ((subject, "subject"), (target, "object")):
            if endpoint not in ids:
                raise GraphSchemaError(f"{path}/{key}: unknown instance {endpoint}")
        if not 0 <= predicate < len(predicates):
            raise GraphSchemaError(f"{path}/predicate: {predicate} outside dictionary")
        try:
            edges.append(Edge(subject, target, predicate, probability, rank))
        except ValueError as exc:
            raise GraphSchemaError(f"{path}: {exc}") from exc
    return SceneGraph(image_id, nodes, edges, objects, predicates)


def save_graph(graph: SceneGraph, path, form: str = "json") -> None:
    if form == "json":
        text = to_json(graph)
    elif form == "dot":
        text = to_dot(graph)
    else:
        raise ValueError(f"unknown graph format {form!r}")
    with atomic_write(path) as fh:
        fh.write(text)


def load_graph(path) -> SceneGraph:
    with open(path, encoding="utf-8") as fh:
        return from_json(fh.read())
