"""
Assembling and serializing scene graphs
=======================================

A scene graph is a directed labeled multigraph: object instances are
nodes, ranked predicates are parallel edges.  Assembled from the demo
scene's gold annotations it reproduces the seven expected triples, and
it survives the JSON round trip unchanged.
"""

from scenecontext import (
    assemble,
    from_json,
    gold_pair_predictions,
    load_annotations,
    to_dot,
    to_json,
    triples,
)

from _common import OBJECTS, PREDICATES, TRIPLES, scene_payload

index = load_annotations(scene_payload(), OBJECTS, PREDICATES)
scene = index.images["street_scene.jpg"]

# gold predicates at probability 1.0, one ranked list per annotated pair
graph = assemble(
    "street_scene.jpg",
    scene.instances,
    gold_pair_predictions(scene),
    index.objects,
    index.predicates,
    k=1,
)
print("nodes ", len(graph.nodes))
print("edges ", len(graph.edges))

for subj, pred, obj, prob in triples(graph):
    print(f"  ({subj}, {pred}, {obj})  p={prob:.2f}")

expected = sorted(TRIPLES)
got = sorted((s, p, o) for s, p, o, _ in triples(graph))
print("matches expected triples:", got == expected)

# DOT for rendering with graphviz
print()
print(to_dot(graph))

# JSON is the lossless interchange form
restored = from_json(to_json(graph))
print("json round trip exact:", restored == graph)
