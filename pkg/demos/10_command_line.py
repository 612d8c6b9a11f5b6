"""
The command line, end to end
============================

Every pipeline stage is also a subcommand of the ``scenecontext``
executable.  This script drives main(argv) in-process over a temporary
workspace: stats -> embed-cache -> train-semantic -> train-svm ->
predict -> graph -> query -> eval, the same calls a shell session
would make.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from scenecontext.cli import main

from _common import OBJECTS, PREDICATES, scene_payload, toy_vectors


def run(*argv):
    print("$ scenecontext", " ".join(argv))
    code = main(list(argv))
    print(f"  -> exit {code}")
    assert code == 0


with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    ann = root / "annotations.json"
    ann.write_text(json.dumps(scene_payload()))
    (root / "objects.json").write_text(json.dumps(OBJECTS))
    (root / "predicates.json").write_text(json.dumps(PREDICATES))

    # a text-format vector file over the scene vocabulary
    vectors = toy_vectors()
    lines = [f"{len(vectors)} 12"]
    for name, vec in vectors.items():
        lines.append(name + " " + " ".join(repr(float(v)) for v in vec))
    (root / "vectors.txt").write_text("\n".join(lines) + "\n")

    base = [
        "--annotations", str(ann),
        "--objects", str(root / "objects.json"),
        "--predicates", str(root / "predicates.json"),
    ]

    run("stats", *base, "--out", str(root / "stats.csv"))

    run("embed-cache", "--objects", str(root / "objects.json"),
        "--vectors", str(root / "vectors.txt"),
        "--out", str(root / "cache.json"))

    run("train-semantic", *base,
        "--val-annotations", str(ann),
        "--cache", str(root / "cache.json"),
        "--hidden", "16", "--lr", "0.5", "--epochs", "60", "--batch-size", "7",
        "--seed", "1", "--out", str(root / "semantic.spj"))

    run("train-svm", *base,
        "--cache", str(root / "cache.json"),
        "--semantic-model", str(root / "semantic.spj"),
        "--semantic-only", "--epochs", "60", "--batch-size", "7", "--seed", "2",
        "--out", str(root / "svm.bin"))

    run("predict", *base,
        "--cache", str(root / "cache.json"),
        "--semantic-model", str(root / "semantic.spj"),
        "--svm-model", str(root / "svm.bin"),
        "--semantic-only", "--image-id", "street_scene.jpg", "--k", "1",
        "--out", str(root / "predictions.json"))

    corpus = root / "corpus"
    corpus.mkdir()
    run("graph", *base, "--image-id", "street_scene.jpg",
        "--gold-predicates", "--format", "json",
        "--out", str(corpus / "street.json"))

    run("query", "--pattern", "person,on,*", "--corpus", str(corpus))

    # score the model predictions against the gold annotations
    run("eval", "--gold", str(ann), "--pred", str(root / "predictions.json"),
        "--metric", "accuracy")
