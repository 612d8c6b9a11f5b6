"""Command-line front end: images in, pipeline input files out.

    scenecontext-extract detect  --images DIR --out detections.json
                                 [--objects objects.json]
                                 [--backend region|torchvision]
                                 [--weights FILE] [--min-area F]
    scenecontext-extract extract --images DIR --out pairs.rfv1 --dim N
                                 (--annotations FILE | --detections FILE)
                                 [--backend stats|vgg16] [--weights FILE]

Exit codes: 0 success, 1 runtime failure (diagnostic on stderr), 2
usage error.  Output files are written atomically and repeat runs are
byte-identical.
"""

from __future__ import annotations

import argparse
import sys

from .detect import detect
from .features import extract_pair_features
from .relfiles import AdapterError, load_object_names

PROG = "scenecontext-extract"


def cmd_detect(args) -> None:
    object_names = load_object_names(args.objects) if args.objects else None
    result = detect(
        args.images, args.out, object_names=object_names,
        backend=args.backend, weights=args.weights, min_area=args.min_area,
    )
    total = sum(len(rows) for rows in result.values())
    print(f"{len(result)} images, {total} detections -> {args.out}")


def cmd_extract(args) -> None:
    if args.backend == "vgg16":
        from .torchmodels import Vgg16Featurizer
        featurizer = Vgg16Featurizer(args.weights)
    else:
        featurizer = None
    relationships = args.annotations if args.annotations else args.detections
    kind = "annotations" if args.annotations else "detections"
    entries = extract_pair_features(
        args.images, relationships, args.out,
        dim=args.dim, kind=kind, featurizer=featurizer,
    )
    print(f"{len(entries)} pair features (dim {args.dim}) -> {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Produce detections JSON and RFV1 pair-feature files from images.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    d = sub.add_parser("detect", help="detect objects in every image of a directory")
    d.add_argument("--images", required=True, help="directory of input images")
    d.add_argument("--out", required=True, help="detections JSON to write")
    d.add_argument("--objects", help="object dictionary JSON to map category names into")
    d.add_argument("--backend", choices=("region", "torchvision"), default="region")
    d.add_argument("--weights", help="local detector weights (torchvision backend)")
    d.add_argument("--min-area", type=float, default=0.002,
                   help="smallest region to keep, as a fraction of the image")
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("extract",
                       help="write visual features for every ordered object pair")
    e.add_argument("--images", required=True, help="directory of input images")
    e.add_argument("--out", required=True, help="RFV1 feature file to write")
    e.add_argument("--dim", type=int, default=4096, help="feature dimension to emit")
    source = e.add_mutually_exclusive_group(required=True)
    source.add_argument("--annotations", help="annotation JSON naming the object pairs")
    source.add_argument("--detections", help="detections JSON naming the object pairs")
    e.add_argument("--backend", choices=("stats", "vgg16"), default="stats")
    e.add_argument("--weights", help="local VGG16 weights (vgg16 backend)")
    e.set_defaults(func=cmd_extract)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except BrokenPipeError:
        return 1
    except (AdapterError, ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
