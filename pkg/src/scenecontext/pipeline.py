"""Glue between the dataset, embeddings, classifiers, and graphs.

The flow mirrored here: subject/object category names become word
vectors, their concatenation feeds the projection network, the network's
logits (optionally joined with a visual feature) feed the predicate SVM,
and the SVM's top-k lists become scene-graph edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DatasetIndex, ImageAnnotation, enumerate_pairs
from .predsvm import SvmModel, concat_features, top_k
from .semproj import MlpModel, semantic_embedding
from .visfeat import FeatureStore, RelationshipKey, get_visual, stub_visual
from .wordvec import EmbeddingTable, OutOfVocabularyError, concat_pair, lookup

FALLBACKS = ("error", "zero", "skip")


@dataclass
class SemanticDataset:
    """Gold relationship pairs as network inputs.

    samples[i] is the concatenated subject+object word vector for keys[i],
    labels[i] the gold predicate id.
    """

    samples: np.ndarray
    labels: np.ndarray
    keys: list

    def __len__(self):
        return len(self.labels)


def _pair_vector(table: EmbeddingTable, subject_name: str, object_name: str, fallback: str):
    mode = "zero" if fallback == "zero" else "error"
    subject_vec = lookup(table, subject_name, fallback=mode)
    object_vec = lookup(table, object_name, fallback=mode)
    return concat_pair(subject_vec, object_vec)


def build_semantic_dataset(
    index: DatasetIndex, table: EmbeddingTable, fallback: str = "error"
) -> SemanticDataset:
    """One sample per gold relationship, images in sorted id order.

    fallback: "error" raises on a name with no known token, "zero"
    substitutes the zero vector, "skip" drops the relationship.
    """
    if fallback not in FALLBACKS:
        raise ValueError(f"unknown fallback {fallback!r}, pick from {FALLBACKS}")
    samples, labels, keys = [], [], []
    for image_id in index.image_ids():
        annotation = index.images[image_id]
        for rel in annotation.relationships:
            subject_name = index.objects.name_of(rel.subject.category_id)
            object_name = index.objects.name_of(rel.object.category_id)
            try:
                vec = _pair_vector(table, subject_name, object_name, fallback)
            except OutOfVocabularyError:
                if fallback == "skip":
                    continue
                raise
            samples.append(vec)
            labels.append(rel.predicate_id)
            keys.append(RelationshipKey(
                image_id, rel.subject.instance_id, rel.object.instance_id
            ))
    if samples:
        X = np.stack(samples)
    else:
        X = np.zeros((0, 2 * table.dimension))
    return SemanticDataset(X, np.asarray(labels, dtype=np.int64), keys)


def make_visual_provider(mode: str, store: FeatureStore | None = None,
                         dim: int = 4096, seed: int = 0):
    """A callable key -> vector-or-None for the three feature modes.

    "none" always yields None (semantic-only ablation), "stub" hashes the
    key deterministically, "store" reads a loaded feature file and raises
    on absent keys.
    """
    if mode == "none":
        return lambda key: None
    if mode == "stub":
        return lambda key: stub_visual(key, dim=dim, seed=seed)
    if mode == "store":
        if store is None:
            raise ValueError("store mode needs a loaded FeatureStore")
        return lambda key: get_visual(store, key)
    raise ValueError(f"unknown visual mode {mode!r}, pick from none/stub/store")


def combined_features(
    dataset: SemanticDataset, mlp: MlpModel, visual_provider
) -> np.ndarray:
    """SVM inputs for every sample: semantic logits ++ visual feature."""
    rows = []
    for x, key in zip(dataset.samples, dataset.keys):
        semantic = semantic_embedding(mlp, x)
        rows.append(concat_features(semantic, visual_provider(key)))
    if not rows:
        raise ValueError("dataset has no samples")
    return np.stack(rows)


def gold_pair_predictions(annotation: ImageAnnotation) -> dict:
    """Each annotated (subject, object) pair mapped to its gold
    predicates at probability 1.0, in annotation order, deduplicated."""
    predictions = {}
    for rel in annotation.relationships:
        key = (rel.subject.instance_id, rel.object.instance_id)
        entry = predictions.setdefault(key, [])
        if all(pred != rel.predicate_id for pred, _ in entry):
            entry.append((rel.predicate_id, 1.0))
    return predictions


def predict_pair_predicates(
    image_id: str,
    instances,
    objects,
    table: EmbeddingTable,
    mlp: MlpModel,
    svm: SvmModel,
    visual_provider,
    k: int = 3,
    pair_mode: str = "ordered",
    fallback: str = "error",
) -> dict:
    """Rank predicates for every enumerated instance pair of one image.

    Returns {(subject_instance_id, object_instance_id): [(predicate_id,
    probability), ...]} ready for graph assembly.
    """
    if fallback not in FALLBACKS:
        raise ValueError(f"unknown fallback {fallback!r}, pick from {FALLBACKS}")
    predictions = {}
    instances = list(instances)
    for i, j in enumerate_pairs(instances, mode=pair_mode):
        subject, target = instances[i], instances[j]
        subject_name = objects.name_of(subject.category_id)
        object_name = objects.name_of(target.category_id)
        try:
            pair_vec = _pair_vector(table, subject_name, object_name, fallback)
        except OutOfVocabularyError:
            if fallback == "skip":
                continue
            raise
        semantic = semantic_embedding(mlp, pair_vec)
        key = RelationshipKey(image_id, subject.instance_id, target.instance_id)
        features = concat_features(semantic, visual_provider(key))
        predictions[(subject.instance_id, target.instance_id)] = top_k(svm, features, k)
    return predictions
