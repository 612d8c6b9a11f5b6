"""
Context-based retrieval over scene graphs
=========================================

Graphs are compared two ways: Jaccard overlap of their categorical
triple sets, and a label-sequence walk kernel that also credits shared
multi-step context.  Triple patterns with wildcards ("person,on,*")
rank a corpus by how many edges match.
"""

from scenecontext import (
    Box,
    Dictionary,
    Edge,
    ObjectInstance,
    SceneGraph,
    parse_pattern,
    rank_by_context,
    triple_set_similarity,
    walk_similarity,
)

OBJ = Dictionary(["person", "bike", "dog", "car", "tree"])
PRED = Dictionary(["on", "near", "under"])


def graph(image_id, node_cats, edge_triples, offset=0):
    nodes = [
        ObjectInstance(i + offset, OBJ.index_of(c), Box(10.0 * i, 0, 10.0 * i + 5, 5))
        for i, c in enumerate(node_cats)
    ]
    ranks = {}
    edges = []
    for s, o, p in edge_triples:
        rank = ranks.get((s, o), 0) + 1
        ranks[(s, o)] = rank
        edges.append(Edge(s + offset, o + offset, PRED.index_of(p), 1.0, rank))
    return SceneGraph(image_id, nodes, edges, OBJ, PRED)


riding = graph("riding.jpg", ["person", "bike", "tree"], [(0, 1, "on"), (1, 2, "near")])
parked = graph("parked.jpg", ["bike", "car", "tree"], [(0, 1, "near"), (1, 2, "near")])
walking = graph("walking.jpg", ["person", "dog"], [(1, 0, "near")])
corpus = [riding, parked, walking]

print("triple-set similarity (riding, parked):",
      round(triple_set_similarity(riding, parked), 4))
print("walk similarity L=2   (riding, parked):",
      round(walk_similarity(riding, parked, length=2), 4))

# node ids are arbitrary: renumbering changes nothing
renumbered = graph("riding.jpg", ["person", "bike", "tree"],
                   [(0, 1, "on"), (1, 2, "near")], offset=40)
print("renumbering invariant:", walk_similarity(riding, renumbered) == 1.0)

# a corpus member always retrieves itself first at similarity 1.0
for method in ("jaccard", "walk"):
    ranking = rank_by_context(riding, corpus, method=method)
    print(f"{method:8s} ranking:", [(i, round(s, 4)) for i, s in ranking])

# wildcard patterns count matching edges
pattern = parse_pattern("*,near,tree")
print("pattern ranking:", rank_by_context(pattern, corpus))
