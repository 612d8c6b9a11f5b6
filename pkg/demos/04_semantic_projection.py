"""
The semantic projection network
===============================

A one-hidden-layer network (relu, softmax output) maps concatenated
subject/object word vectors to a distribution over predicates.  It is
plain numpy: Glorot init, mini-batch gradient descent on cross-entropy,
checkpoint at minimal validation loss.  Finite differences confirm the
backward pass.
"""

import numpy as np

from scenecontext import (
    EmbeddingTable,
    TrainConfig,
    build_semantic_dataset,
    forward,
    grad_check,
    init_model,
    load_annotations,
    semantic_embedding,
    train,
)

from _common import OBJECTS, PREDICATES, scene_payload, toy_vectors

# gradient check first: analytic vs numerical, relative error ~1e-9
model = init_model(in_dim=6, hidden_width=5, class_count=4, seed=3)
rng = np.random.default_rng(3)
x = rng.normal(size=6)
print("grad check error", grad_check(model, x, label=1))

# build the (pair vector -> predicate) dataset from the demo scene
table = EmbeddingTable(12, toy_vectors())
index = load_annotations(scene_payload(), OBJECTS, PREDICATES)
dataset = build_semantic_dataset(index, table)
print("samples / width ", dataset.samples.shape)

# seven samples memorize quickly; validation doubles as train here
config = TrainConfig(learning_rate=0.5, epochs=150, batch_size=7, seed=0)
result = train(
    dataset.samples, dataset.labels, dataset.samples, dataset.labels,
    config, hidden_width=16, class_count=len(PREDICATES),
)
print("first/last loss ", round(result.train_losses[0], 4),
      round(result.train_losses[-1], 4))
print("best epoch      ", result.best_epoch)

hits = sum(
    int(np.argmax(forward(result.model, x)[2]) == y)
    for x, y in zip(dataset.samples, dataset.labels)
)
print("train accuracy  ", hits / len(dataset))

# the logits are the pair's semantic embedding, handed on to the SVM
embedding = semantic_embedding(result.model, dataset.samples[0])
print("embedding width ", embedding.shape[0])
