"""Command-line front end for the full pipeline.

Subcommands cover dataset statistics, splitting, the two training
stages, per-pair prediction, scene graph emission, context retrieval,
evaluation, and word-vector cache construction.  Every run is
deterministic given the same flags and seeds, file outputs are written
atomically, and the only environment variable consulted is NO_COLOR.

Exit codes: 0 success, 1 runtime failure (diagnostic on stderr),
2 usage error (argparse).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from pathlib import Path

from .dataset import (
    AnnotationError,
    DatasetIndex,
    Dictionary,
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
    report_json,
    report_text,
)
from .fileio import atomic_write
from .pipeline import (
    build_semantic_dataset,
    combined_features,
    gold_pair_predictions,
    make_visual_provider,
    predict_pair_predicates,
)
from .predsvm import SvmConfig, load_svm, save_svm, train_svm
from .retrieval import METHODS, parse_pattern, rank_by_context
from .scenegraph import assemble, load_graph, save_graph, to_dot, to_json
from .semproj import TrainConfig, load_model, save_loss_curves, save_model, train
from .visfeat import load_features
from .wordvec import (
    EmbeddingTable,
    build_cache,
    load_cache,
    parse_binary,
    parse_text,
    save_cache,
)

PROG = "scenecontext"


def _color_enabled(stream) -> bool:
    if "NO_COLOR" in os.environ:
        return False
    return bool(getattr(stream, "isatty", lambda: False)())


def _diag(message: str) -> None:
    prefix = "error:"
    if _color_enabled(sys.stderr):
        prefix = f"\x1b[31m{prefix}\x1b[0m"
    print(f"{prefix} {message}", file=sys.stderr)


def _load_dictionary_flags(args):
    objects = load_dictionary(args.objects) if getattr(args, "objects", None) else None
    predicates = (
        load_dictionary(args.predicates) if getattr(args, "predicates", None) else None
    )
    return objects, predicates


def _load_index(args, path=None) -> DatasetIndex:
    objects, predicates = _load_dictionary_flags(args)
    return load_annotations(path or args.annotations, objects, predicates)


def _restrict_tokens(objects: Dictionary) -> set:
    """Token set that keeps word-vector parsing from holding the whole
    vocabulary in memory; generous with case so the exact-match restrict
    filter cannot starve the case-insensitive lookup fallback."""
    tokens = set()
    for name in objects:
        for token in name.split():
            tokens.update(
                {token, token.lower(), token.upper(), token.capitalize(), token.title()}
            )
    return tokens


def _load_table(args, objects: Dictionary | None) -> EmbeddingTable:
    if getattr(args, "cache", None):
        vectors = load_cache(args.cache)
        if not vectors:
            raise ValueError(f"{args.cache}: cache holds no vectors")
        dimension = len(next(iter(vectors.values())))
        return EmbeddingTable(dimension, vectors)
    form = args.vectors_format
    if form == "auto":
        form = "binary" if str(args.vectors).endswith(".bin") else "text"
    restrict = _restrict_tokens(objects) if objects is not None else None
    with open(args.vectors, "rb") as fh:
        if form == "binary":
            return parse_binary(fh, restrict=restrict)
        return parse_text(io.TextIOWrapper(fh, encoding="utf-8"), restrict=restrict)


def _add_dictionary_flags(parser, required: bool) -> None:
    parser.add_argument(
        "--objects",
        required=required,
        help="object category names (JSON list or {\"names\": [...]})",
    )
    parser.add_argument(
        "--predicates",
        required=required,
        help="predicate names (JSON list or {\"names\": [...]})",
    )


def _add_vector_flags(parser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--vectors", help="word2vec file (text or binary)")
    group.add_argument("--cache", help="vector cache JSON built by embed-cache")
    parser.add_argument(
        "--vectors-format",
        choices=("auto", "text", "binary"),
        default="auto",
        help="format of --vectors; auto picks binary for .bin paths",
    )


def _add_feature_flags(parser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--features", help="visual feature file for relationship keys")
    group.add_argument(
        "--stub-visual",
        action="store_true",
        help="hash-derived visual features (no image pipeline needed)",
    )
    group.add_argument(
        "--semantic-only",
        action="store_true",
        help="word-vector features alone (the ablation mode); the default",
    )
    parser.add_argument("--stub-dim", type=int, default=4096, help="stub feature width")
    parser.add_argument("--stub-seed", type=int, default=0, help="stub feature seed")


def _feature_provider(args):
    """(mode name, provider callable) from the mutually exclusive flags."""
    if getattr(args, "features", None):
        store = load_features(args.features)
        return f"features:{args.features}", make_visual_provider("store", store=store)
    if getattr(args, "stub_visual", False):
        provider = make_visual_provider("stub", dim=args.stub_dim, seed=args.stub_seed)
        return "stub-visual", provider
    return "semantic-only", make_visual_provider("none")


def _write_json(payload, path) -> None:
    with atomic_write(path) as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------- commands


def cmd_stats(args, parser) -> int:
    index = _load_index(args)
    stats = image_stats(index)
    if args.out:
        stats.write_csv(args.out)
    summary = stats.summary()
    print(f"images        {summary['images']}")
    if summary["images"]:
        print(f"objects       min {summary['objects']['min']}  max {summary['objects']['max']}  mean {summary['objects']['mean']:.4f}")
        rel = summary["relationships"]
        print(f"relationships min {rel['min']}  max {rel['max']}  mean {rel['mean']:.4f}")
        print(f"total         {index.relationship_count()} relationships")
        print(f"busiest image {rel['max_image']} ({rel['max']} relationships)")
    if args.out:
        print(f"wrote per-image counts to {args.out}")
    return 0


def cmd_split(args, parser) -> int:
    index = _load_index(args)
    parts = dict(zip(("train", "val", "test"), split(index, args.seed)))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": args.seed}
    for name, part in parts.items():
        save_annotations(part, out_dir / f"{name}.json")
        manifest[name] = part.image_ids()
        print(f"{name:<5} {len(part):>6} images  {part.relationship_count():>7} relationships")
    _write_json(manifest, out_dir / "manifest.json")
    print(f"wrote {', '.join(n + '.json' for n in parts)} and manifest.json to {out_dir}")
    return 0


def cmd_embed_cache(args, parser) -> int:
    objects = load_dictionary(args.objects)
    table = _load_table(args, objects)
    cache = build_cache(table, list(objects), fallback=args.fallback)
    save_cache(cache, args.out)
    zero = sum(1 for v in cache.values() if not any(v))
    print(f"cached {len(cache)} name vectors (dim {table.dimension}) to {args.out}")
    if zero:
        print(f"{zero} names fell back to the zero vector")
    return 0


def cmd_train_semantic(args, parser) -> int:
    index = _load_index(args)
    val_index = _load_index(args, path=args.val_annotations)
    table = _load_table(args, index.objects)
    train_set = build_semantic_dataset(index, table, fallback=args.fallback)
    val_set = build_semantic_dataset(val_index, table, fallback=args.fallback)
    config = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    result = train(
        train_set.samples,
        train_set.labels,
        val_set.samples,
        val_set.labels,
        config,
        hidden_width=args.hidden,
        class_count=len(index.predicates),
    )
    for epoch, (tl, vl) in enumerate(zip(result.train_losses, result.val_losses), 1):
        print(f"epoch {epoch:>4}  train {tl:.6f}  val {vl:.6f}")
    save_model(result.model, args.out)
    curves = args.curves or f"{args.out}.losses.csv"
    save_loss_curves(result, curves)
    print(f"best epoch {result.best_epoch} (val {result.val_losses[result.best_epoch - 1]:.6f})")
    print(f"wrote model to {args.out}, loss curves to {curves}")
    return 0


def cmd_train_svm(args, parser) -> int:
    index = _load_index(args)
    table = _load_table(args, index.objects)
    mlp = load_model(args.semantic_model)
    dataset = build_semantic_dataset(index, table, fallback=args.fallback)
    mode, provider = _feature_provider(args)
    samples = combined_features(dataset, mlp, provider)
    config = SvmConfig(
        lam=args.lam, epochs=args.epochs, batch_size=args.batch_size, seed=args.seed
    )
    model = train_svm(samples, dataset.labels, config, class_count=len(index.predicates))
    save_svm(model, args.out)
    print(f"feature mode {mode}")
    print(
        f"trained {model.class_count} one-vs-rest classifiers on "
        f"{len(dataset)} samples (dim {model.feature_dim})"
    )
    print(f"wrote model to {args.out}")
    return 0


def _prediction_rows(index, image_id, preds, stream) -> list:
    rows = []
    ann = index.images[image_id]
    by_id = {inst.instance_id: inst for inst in ann.instances}
    for (sid, oid), ranked in sorted(preds.items()):
        subj = index.objects.name_of(by_id[sid].category_id)
        obj = index.objects.name_of(by_id[oid].category_id)
        for rank, (pred_id, prob) in enumerate(ranked, 1):
            name = index.predicates.name_of(pred_id)
            print(
                f"{subj + '#' + str(sid):<20} {obj + '#' + str(oid):<20} "
                f"{rank:>2}  {name:<16} {prob:.6f}",
                file=stream,
            )
        rows.append(
            {
                "subject": sid,
                "object": oid,
                "ranked": [[int(p), float(q)] for p, q in ranked],
            }
        )
    return rows


def cmd_predict(args, parser) -> int:
    index = _load_index(args)
    table = _load_table(args, index.objects)
    mlp = load_model(args.semantic_model)
    svm = load_svm(args.svm_model)
    mode, provider = _feature_provider(args)
    if args.image_id is not None and args.image_id not in index.images:
        raise AnnotationError(f"image {args.image_id!r} not in {args.annotations}")
    images = [args.image_id] if args.image_id is not None else index.image_ids()
    print(f"feature mode {mode}")
    print(f"{'subject':<20} {'object':<20} {'rank':>4}  {'predicate':<16} probability")
    payload = {}
    for image_id in images:
        ann = index.images[image_id]
        preds = predict_pair_predicates(
            image_id,
            ann.instances,
            index.objects,
            table,
            mlp,
            svm,
            provider,
            k=args.k,
            fallback=args.fallback,
        )
        if len(images) > 1:
            print(f"# image {image_id}")
        payload[image_id] = _prediction_rows(index, image_id, preds, sys.stdout)
    if args.out:
        _write_json(payload, args.out)
        print(f"wrote predictions to {args.out}")
    return 0


def cmd_graph(args, parser) -> int:
    if args.vectors and args.cache:
        parser.error("pass --vectors or --cache, not both")
    if not args.gold_predicates:
        missing = [
            flag
            for flag, value in (
                ("--semantic-model", args.semantic_model),
                ("--svm-model", args.svm_model),
                ("--vectors/--cache", args.vectors or args.cache),
            )
            if not value
        ]
        if missing:
            parser.error(
                "graph needs either --gold-predicates or a full model: missing "
                + ", ".join(missing)
            )
    index = _load_index(args)
    if args.image_id not in index.images:
        raise AnnotationError(f"image {args.image_id!r} not in {args.annotations}")
    ann = index.images[args.image_id]
    if args.gold_predicates:
        pair_predictions = gold_pair_predictions(ann)
    else:
        table = _load_table(args, index.objects)
        mlp = load_model(args.semantic_model)
        svm = load_svm(args.svm_model)
        _, provider = _feature_provider(args)
        pair_predictions = predict_pair_predicates(
            args.image_id,
            ann.instances,
            index.objects,
            table,
            mlp,
            svm,
            provider,
            k=args.k,
            fallback=args.fallback,
        )
    graph = assemble(
        args.image_id,
        ann.instances,
        pair_predictions,
        index.objects,
        index.predicates,
        k=args.k,
        min_prob=args.min_prob,
    )
    if args.out:
        save_graph(graph, args.out, form=args.format)
        print(f"wrote {len(graph.nodes)} nodes, {len(graph.edges)} edges to {args.out}")
    else:
        text = to_dot(graph) if args.format == "dot" else to_json(graph)
        sys.stdout.write(text)
    return 0


def cmd_query(args, parser) -> int:
    corpus_dir = Path(args.corpus)
    paths = sorted(corpus_dir.glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no graph JSON files in {corpus_dir}")
    corpus = [load_graph(path) for path in paths]
    query = parse_pattern(args.pattern) if args.pattern else load_graph(args.graph)
    rows = rank_by_context(
        query, corpus, method=args.method, limit=args.limit, walk_length=args.walk_length
    )
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["image_id", "score"])
    for image_id, score in rows:
        writer.writerow([image_id, repr(float(score))])
    if args.out:
        with atomic_write(args.out, newline="") as fh:
            fh.write(buffer.getvalue())
        print(f"wrote {len(rows)} rankings to {args.out}")
    else:
        sys.stdout.write(buffer.getvalue())
    return 0


def _ranked_prediction_lists(index, payload):
    """Per gold relationship: its predicate id and the predicted ranking
    for that (subject, object) pair, in deterministic image order."""
    gold_ids = []
    ranked = []
    for image_id in index.image_ids():
        entries = payload.get(image_id)
        lookup = {}
        for entry in entries or []:
            lookup[(entry["subject"], entry["object"])] = [
                int(p) for p, _ in entry["ranked"]
            ]
        for rel in index.images[image_id].relationships:
            pair = (rel.subject.instance_id, rel.object.instance_id)
            if pair not in lookup:
                raise ValueError(
                    f"predictions missing image {image_id!r} pair {pair}"
                )
            gold_ids.append(rel.predicate_id)
            ranked.append(lookup[pair])
    return ranked, gold_ids


def cmd_eval(args, parser) -> int:
    match = re.fullmatch(r"accuracy|map|recall@(\d+)", args.metric)
    if match is None:
        parser.error(f"unknown metric {args.metric!r}: pick accuracy, recall@k, or map")
    if args.metric == "map" and not args.objects:
        parser.error("map needs --objects so detection category names resolve")
    objects, predicates = _load_dictionary_flags(args)
    index = load_annotations(args.gold, objects, predicates)

    if args.metric == "map":
        detections, skipped = load_detections(args.pred, index.objects)
        det_rows = {
            image: [(inst.bbox, inst.category_id, inst.score) for inst in instances]
            for image, instances in detections.items()
        }
        gold_rows = {
            image: [
                (inst.bbox, inst.category_id) for inst in index.images[image].instances
            ]
            for image in index.image_ids()
        }
        per_category = average_precision_per_category(det_rows, gold_rows, args.iou)
        value = mean_average_precision(det_rows, gold_rows, args.iou)
        report = {"map": value, "iou_threshold": args.iou}
        for category_id, ap in per_category.items():
            report[f"ap[{index.objects.name_of(category_id)}]"] = ap
        if skipped:
            report["skipped_detections"] = len(skipped)
    else:
        with open(args.pred, encoding="utf-8") as fh:
            payload = json.load(fh)
        ranked, gold_ids = _ranked_prediction_lists(index, payload)
        if args.metric == "accuracy":
            value = predicate_accuracy([r[0] for r in ranked], gold_ids)
            report = {"accuracy": value, "samples": len(gold_ids)}
        else:
            k = int(match.group(1))
            value = recall_at_k(ranked, gold_ids, k)
            report = {f"recall@{k}": value, "samples": len(gold_ids)}

    sys.stdout.write(report_json(report) if args.json else report_text(report))
    if args.out:
        with atomic_write(args.out) as fh:
            fh.write(report_json(report))
        print(f"wrote report to {args.out}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Scene graphs from visual relationships: train, predict, query.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("stats", help="per-image object/relationship counts")
    p.add_argument("--annotations", required=True, help="annotation JSON")
    _add_dictionary_flags(p, required=False)
    p.add_argument("--out", help="write per-image CSV here")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="deterministic train/val/test partition")
    p.add_argument("--annotations", required=True)
    _add_dictionary_flags(p, required=False)
    p.add_argument("--seed", type=int, default=0, help="shuffle seed (default 0)")
    p.add_argument("--out", required=True, help="directory for the three split files")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("embed-cache", help="cache word vectors for category names")
    p.add_argument("--objects", required=True, help="object category names")
    p.add_argument("--vectors", required=True, help="word2vec file (text or binary)")
    p.add_argument(
        "--vectors-format", choices=("auto", "text", "binary"), default="auto"
    )
    p.add_argument(
        "--fallback",
        choices=("error", "zero"),
        default="error",
        help="out-of-vocabulary policy (default error)",
    )
    p.add_argument("--out", required=True, help="cache JSON path")
    p.set_defaults(func=cmd_embed_cache)

    p = sub.add_parser("train-semantic", help="train the word-vector projection network")
    p.add_argument("--annotations", required=True, help="training annotations")
    p.add_argument("--val-annotations", required=True, help="validation annotations")
    _add_dictionary_flags(p, required=True)
    _add_vector_flags(p)
    p.add_argument("--hidden", type=int, default=300, help="hidden width (default 300)")
    p.add_argument("--lr", type=float, default=0.1, help="learning rate (default 0.1)")
    p.add_argument("--epochs", type=int, default=100, help="epochs (default 100)")
    p.add_argument("--batch-size", type=int, default=64, help="batch size (default 64)")
    p.add_argument("--seed", type=int, default=0, help="training seed (default 0)")
    p.add_argument(
        "--fallback",
        choices=("error", "zero", "skip"),
        default="error",
        help="out-of-vocabulary policy (default error)",
    )
    p.add_argument("--out", required=True, help="model checkpoint path")
    p.add_argument("--curves", help="loss curve CSV (default OUT.losses.csv)")
    p.set_defaults(func=cmd_train_semantic)

    p = sub.add_parser("train-svm", help="train the one-vs-rest predicate classifiers")
    p.add_argument("--annotations", required=True, help="training annotations")
    _add_dictionary_flags(p, required=True)
    _add_vector_flags(p)
    p.add_argument("--semantic-model", required=True, help="projection checkpoint")
    _add_feature_flags(p)
    p.add_argument("--lam", type=float, default=1e-4, help="regularization (default 1e-4)")
    p.add_argument("--epochs", type=int, default=100, help="epochs (default 100)")
    p.add_argument("--batch-size", type=int, default=64, help="batch size (default 64)")
    p.add_argument("--seed", type=int, default=0, help="training seed (default 0)")
    p.add_argument(
        "--fallback",
        choices=("error", "zero", "skip"),
        default="error",
        help="out-of-vocabulary policy (default error)",
    )
    p.add_argument("--out", required=True, help="classifier file path")
    p.set_defaults(func=cmd_train_svm)

    p = sub.add_parser("predict", help="rank predicates for every instance pair")
    p.add_argument("--annotations", required=True)
    _add_dictionary_flags(p, required=True)
    _add_vector_flags(p)
    p.add_argument("--semantic-model", required=True)
    p.add_argument("--svm-model", required=True)
    _add_feature_flags(p)
    p.add_argument("--image-id", help="one image (default: all images)")
    p.add_argument("--k", type=int, default=3, help="predicates per pair (default 3)")
    p.add_argument(
        "--fallback",
        choices=("error", "zero", "skip"),
        default="error",
        help="out-of-vocabulary policy (default error)",
    )
    p.add_argument("--out", help="write predictions JSON here")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("graph", help="emit a scene graph for one image")
    p.add_argument("--annotations", required=True)
    _add_dictionary_flags(p, required=True)
    p.add_argument("--image-id", required=True)
    p.add_argument(
        "--gold-predicates",
        action="store_true",
        help="edges from gold annotations instead of a model",
    )
    p.add_argument("--vectors")
    p.add_argument("--cache")
    p.add_argument(
        "--vectors-format", choices=("auto", "text", "binary"), default="auto"
    )
    p.add_argument("--semantic-model")
    p.add_argument("--svm-model")
    _add_feature_flags(p)
    p.add_argument("--k", type=int, default=3, help="predicates per pair (default 3)")
    p.add_argument(
        "--min-prob", type=float, default=0.0, help="drop edges below this probability"
    )
    p.add_argument(
        "--fallback",
        choices=("error", "zero", "skip"),
        default="error",
        help="out-of-vocabulary policy (default error)",
    )
    p.add_argument("--format", choices=("dot", "json"), default="dot")
    p.add_argument("--out", help="graph file (default: print to stdout)")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("query", help="rank a graph corpus against a pattern or graph")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--pattern", help='triple pattern "subject,predicate,object"')
    group.add_argument("--graph", help="query graph JSON")
    p.add_argument("--corpus", required=True, help="directory of graph JSON files")
    p.add_argument("--method", choices=METHODS, default="jaccard")
    p.add_argument(
        "--walk-length", type=int, default=2, help="walk kernel depth (default 2)"
    )
    p.add_argument("--limit", type=int, help="return at most this many rows")
    p.add_argument("--out", help="ranking CSV (default: print to stdout)")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="score predictions against gold annotations")
    p.add_argument("--gold", required=True, help="gold annotation JSON")
    p.add_argument("--pred", required=True, help="predictions or detections file")
    p.add_argument(
        "--metric", required=True, help="accuracy, recall@k (e.g. recall@3), or map"
    )
    _add_dictionary_flags(p, required=False)
    p.add_argument(
        "--iou", type=float, default=0.5, help="IoU threshold for map (default 0.5)"
    )
    p.add_argument("--json", action="store_true", help="JSON report instead of table")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except BrokenPipeError:
        return 1
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        _diag(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
