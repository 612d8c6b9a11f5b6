"""Scene graphs from object-annotated images.

The pipeline: subject/object category names become word vectors, a
small projection network turns each name pair into a semantic
embedding, one-vs-rest linear SVMs rank the 70 predicates for every
ordered object pair, the top-ranked predicates become the edges of a
directed scene graph, and graphs are compared for context-based image
retrieval.  Everything runs on numpy; no deep-learning framework is
required (visual CNN features can be supplied through a feature file,
or stubbed deterministically).
"""

from .dataset import (
    AnnotationError,
    DatasetIndex,
    Dictionary,
    ImageAnnotation,
    ObjectInstance,
    RelationshipAnnotation,
    enumerate_pairs,
    image_stats,
    load_annotations,
    load_detections,
    load_dictionary,
    save_annotations,
    split,
)
from .evalmetrics import (
    average_precision_per_category,
    mean_average_precision,
    predicate_accuracy,
    recall_at_k,
)
from .geometry import Box, area, enclosing_box, intersection_area, iou
from .pipeline import (
    SemanticDataset,
    build_semantic_dataset,
    combined_features,
    gold_pair_predictions,
    make_visual_provider,
    predict_pair_predicates,
)
from .predsvm import (
    SvmConfig,
    SvmModel,
    concat_features,
    decision_scores,
    load_svm,
    predict_proba,
    save_svm,
    top_k,
    train_svm,
)
from .retrieval import (
    TriplePattern,
    categorical_triples,
    parse_pattern,
    rank_by_context,
    triple_set_similarity,
    walk_similarity,
)
from .scenegraph import (
    Edge,
    GraphSchemaError,
    SceneGraph,
    assemble,
    from_json,
    load_graph,
    save_graph,
    to_dot,
    to_json,
    triples,
)
from .semproj import (
    MlpModel,
    TrainConfig,
    TrainingDiverged,
    TrainResult,
    forward,
    grad_check,
    init_model,
    load_model,
    save_model,
    semantic_embedding,
    train,
)
from .visfeat import (
    FeatureFormatError,
    FeatureStore,
    MissingFeature,
    RelationshipKey,
    get_visual,
    load_features,
    save_features,
    stub_visual,
)
from .wordvec import (
    EmbeddingTable,
    OutOfVocabularyError,
    build_cache,
    concat_pair,
    load_cache,
    lookup,
    parse_binary,
    parse_text,
    save_cache,
)

__version__ = "0.1.0"
