"""
The full pipeline on one scene
==============================

Names -> word vectors -> projection network -> (optionally visual
features) -> one-vs-rest SVMs -> ranked predicates -> scene graph ->
retrieval.  Visual features come from a binary feature file keyed by
"image|subject|object"; here the deterministic stub provider stands in
for a real CNN so everything runs from annotations alone.
"""

import tempfile
from pathlib import Path

import numpy as np

from scenecontext import (
    EmbeddingTable,
    FeatureStore,
    RelationshipKey,
    SvmConfig,
    TrainConfig,
    assemble,
    build_semantic_dataset,
    combined_features,
    load_annotations,
    load_features,
    make_visual_provider,
    predict_pair_predicates,
    rank_by_context,
    save_features,
    stub_visual,
    train,
    train_svm,
    triples,
)

from _common import OBJECTS, PREDICATES, TRIPLES, scene_payload, toy_vectors

index = load_annotations(scene_payload(), OBJECTS, PREDICATES)
scene = index.images["street_scene.jpg"]
table = EmbeddingTable(12, toy_vectors())

# stage 1: semantic projection trained on the scene's gold pairs
dataset = build_semantic_dataset(index, table)
mlp = train(
    dataset.samples, dataset.labels, dataset.samples, dataset.labels,
    TrainConfig(learning_rate=0.5, epochs=200, batch_size=7, seed=1),
    hidden_width=16, class_count=len(PREDICATES),
).model

# stage 2: visual features; the stub hashes each relationship key into
# a fixed vector, so reruns and other machines agree bit for bit
provider = make_visual_provider("stub", dim=16, seed=0)
key = RelationshipKey("street_scene.jpg", 0, 1)
print("stub is stable  ", np.array_equal(provider(key), stub_visual(key, 16, 0)))

# the same vectors can round-trip through the binary feature file
with tempfile.TemporaryDirectory() as tmp:
    store = FeatureStore(dimension=16)
    for rel in scene.relationships:
        k = RelationshipKey("street_scene.jpg", rel.subject.instance_id,
                            rel.object.instance_id)
        store.put(k, provider(k))
    path = Path(tmp) / "features.bin"
    save_features(store, path)
    print("feature file    ", len(load_features(path)), "entries")

# stage 3: SVMs over semantic ++ visual features
features = combined_features(dataset, mlp, provider)
print("svm input width ", features.shape[1])
svm = train_svm(
    features, dataset.labels,
    SvmConfig(lam=1e-4, epochs=80, batch_size=7, seed=2),
    class_count=len(PREDICATES),
)

# stage 4: rank predicates for every ordered pair and build the graph
predictions = predict_pair_predicates(
    "street_scene.jpg", scene.instances, index.objects, table, mlp, svm,
    provider, k=1,
)
graph = assemble("street_scene.jpg", scene.instances, predictions,
                 index.objects, index.predicates, k=1)
print("edges predicted ", len(graph.edges))

predicted = {(s, p, o) for s, p, o, _ in triples(graph)}
recovered = sum(1 for t in TRIPLES if t in predicted)
print("gold recovered  ", f"{recovered}/{len(TRIPLES)}")

# stage 5: the graph retrieves itself from a corpus
ranking = rank_by_context(graph, [graph], method="walk")
print("self retrieval  ", ranking[0])
