"""
One-vs-rest predicate classifiers
=================================

Each predicate gets a linear max-margin classifier trained with the
stochastic subgradient (Pegasos) schedule; inputs are standardized
once, decision margins are softmaxed into a distribution, and top-k
over that distribution ranks predicates for a pair.
"""

import numpy as np

from scenecontext import SvmConfig, decision_scores, predict_proba, top_k, train_svm

rng = np.random.default_rng(1)

# three linearly separable clouds stand in for predicate classes
centers = np.array([[0.0, 0.0], [7.0, 0.0], [0.0, 7.0]])
labels = np.arange(300) % 3
samples = centers[labels] + rng.normal(scale=0.6, size=(300, 2))

model = train_svm(samples, labels, SvmConfig(lam=1e-4, epochs=60, batch_size=32, seed=0))
print("classifiers      ", model.class_count)
print("feature width    ", model.feature_dim)

hits = sum(
    int(np.argmax(decision_scores(model, x)) == y) for x, y in zip(samples, labels)
)
print("train accuracy   ", hits / len(labels))

# margins -> probabilities: always a proper distribution
x = samples[0]
probs = predict_proba(model, x)
print("prob sum         ", float(probs.sum()))
print("argmax agreement ", int(np.argmax(probs)) == int(np.argmax(decision_scores(model, x))))

# ranked predicates for one input, most probable first
print("top-2            ", [(c, round(p, 4)) for c, p in top_k(model, x, 2)])

# training is deterministic in the seed
again = train_svm(samples, labels, SvmConfig(lam=1e-4, epochs=60, batch_size=32, seed=0))
print("reproducible     ", np.array_equal(model.W, again.W))
