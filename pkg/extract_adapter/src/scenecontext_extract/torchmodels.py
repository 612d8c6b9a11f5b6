"""Optional torchvision backends; pretrained weights must be on disk.

Nothing in this module downloads anything: model architectures are
instantiated weightless and the state dict comes from an explicit
--weights path.  Import failures and unloadable weights both surface as
AdapterError, which the command line turns into a nonzero exit.
"""

from __future__ import annotations

import numpy as np

from .relfiles import AdapterError

# torchvision's COCO detection label space (91 slots, some unused).
COCO_NAMES = (
    "__background__", "person", "bicycle", "car", "motorcycle", "airplane",
    "bus", "train", "truck", "boat", "traffic light", "fire hydrant", "N/A",
    "stop sign", "parking meter", "bench", "bird", "cat", "dog", "horse",
    "sheep", "cow", "elephant", "bear", "zebra", "giraffe", "N/A", "backpack",
    "umbrella", "N/A", "N/A", "handbag", "tie", "suitcase", "frisbee", "skis",
    "snowboard", "sports ball", "kite", "baseball bat", "baseball glove",
    "skateboard", "surfboard", "tennis racket", "bottle", "N/A", "wine glass",
    "cup", "fork", "knife", "spoon", "bowl", "banana", "apple", "sandwich",
    "orange", "broccoli", "carrot", "hot dog", "pizza", "donut", "cake",
    "chair", "couch", "potted plant", "bed", "N/A", "dining table", "N/A",
    "N/A", "toilet", "N/A", "tv", "laptop", "mouse", "remote", "keyboard",
    "cell phone", "microwave", "oven", "toaster", "sink", "refrigerator",
    "N/A", "book", "clock", "vase", "scissors", "teddy bear", "hair drier",
    "toothbrush",
)

_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)


def _import_torch():
    try:
        import torch
        import torchvision
    except ImportError as exc:
        raise AdapterError(f"torch backend unavailable: {exc}") from None
    return torch, torchvision


def _load_state(torch, weights):
    if weights is None:
        raise AdapterError("this backend needs --weights pointing at a local state dict")
    try:
        return torch.load(weights, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise AdapterError(f"cannot load model weights from {weights}: {exc}") from None


def load_detector(weights, score_threshold: float = 0.5):
    """A detection callable backed by Faster R-CNN with local weights."""
    torch, torchvision = _import_torch()
    state = _load_state(torch, weights)
    model = torchvision.models.detection.fasterrcnn_resnet50_fpn(
        weights=None, weights_backbone=None
    )
    try:
        model.load_state_dict(state)
    except Exception as exc:
        raise AdapterError(f"weights at {weights} do not fit the detector: {exc}") from None
    model.eval()

    def run(rgb: np.ndarray) -> list:
        with torch.no_grad():
            tensor = torch.from_numpy(rgb.copy()).permute(2, 0, 1).float() / 255.0
            output = model([tensor])[0]
        rows = []
        for box, label, score in zip(output["boxes"], output["labels"], output["scores"]):
            if float(score) < score_threshold:
                continue
            index = int(label)
            name = COCO_NAMES[index] if 0 <= index < len(COCO_NAMES) else str(index)
            rows.append(
                {
                    "category": name,
                    "bbox": [float(v) for v in box],
                    "score": float(score),
                }
            )
        rows.sort(key=lambda r: (-r["score"], r["bbox"], r["category"]))
        return rows

    return run


class Vgg16Featurizer:
    """fc7 activations (4096-dim) of a crop, resized to 224 and normalized."""

    width = 4096

    def __init__(self, weights):
        torch, torchvision = _import_torch()
        state = _load_state(torch, weights)
        model = torchvision.models.vgg16(weights=None)
        try:
            model.load_state_dict(state)
        except Exception as exc:
            raise AdapterError(f"weights at {weights} do not fit VGG16: {exc}") from None
        model.eval()
        self._torch = torch
        self._model = model
        mean = torch.tensor(_IMAGENET_MEAN).view(3, 1, 1)
        std = torch.tensor(_IMAGENET_STD).view(3, 1, 1)
        self._normalize = lambda t: (t - mean) / std

    def __call__(self, rgb: np.ndarray, box) -> np.ndarray:
        from .features import clip_box

        torch = self._torch
        height, width = rgb.shape[:2]
        x0, y0, x1, y1 = clip_box(box, width, height)
        crop = rgb[y0:y1, x0:x1]
        with torch.no_grad():
            tensor = torch.from_numpy(crop.copy()).permute(2, 0, 1).float() / 255.0
            tensor = torch.nn.functional.interpolate(
                tensor.unsqueeze(0), size=(224, 224),
                mode="bilinear", align_corners=False,
            )
            tensor = self._normalize(tensor.squeeze(0)).unsqueeze(0)
            model = self._model
            x = model.features(tensor)
            x = model.avgpool(x)
            x = torch.flatten(x, 1)
            x = model.classifier[:5](x)      # up through the fc7 relu
        return x.squeeze(0).numpy().astype(np.float64)
