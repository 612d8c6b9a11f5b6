"""One-vs-rest linear SVM over concatenated semantic+visual features.

Training is Pegasos-style subgradient descent on the regularized hinge
objective lam/2 * ||w||^2 + mean hinge, with the 1/(lam*t) step schedule
counted per mini-batch.  Inputs are standardized by the training mean
and deviation (stored on the model, applied at inference).  Each class
trains against its own generator seeded with (seed, class_id), so the
one-vs-rest subproblems are independent and may run in any order.

Class probabilities are a softmax over the margins.  The model file is
SVM1: magic, u32 class count P, u32 feature width D, then float64
little-endian blocks mean, scale, b, row-major W.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .fileio import atomic_write, read_exact
from .numerics import softmax

MAGIC = b"SVM1"

SCHEDULES = ("pegasos",)


@dataclass
class SvmModel:
    W: np.ndarray  # (P, D)
    b: np.ndarray  # (P,)
    mean: np.ndarray  # (D,)
    scale: np.ndarray  # (D,) strictly positive
    objective_curves: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.scale = np.asarray(self.scale, dtype=np.float64)
        p, d = self.W.shape
        if self.b.shape != (p,):
            raise ValueError("bias width does not match W")
        if self.mean.shape != (d,) or self.scale.shape != (d,):
            raise ValueError("standardization width does not match W")
        for name in ("W", "b", "mean", "scale"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")
        if np.any(self.scale <= 0):
            raise ValueError("scale entries must be strictly positive")

    @property
    def class_count(self) -> int:
        return self.W.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.W.shape[1]


@dataclass
class SvmConfig:
    lam: float = 1e-4
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    schedule: str = "pegasos"

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}, pick from {SCHEDULES}")


def concat_features(semantic=None, visual=None) -> np.ndarray:
    """Semantic part first, then visual; either may be omitted for
    ablation runs, but not both."""
    parts = []
    for name, part in (("semantic", semantic), ("visual", visual)):
        if part is None:
            continue
        arr = np.asarray(part, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"{name} feature must be a vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} feature contains non-finite entries")
        parts.append(arr)
    if not parts:
        raise ValueError("at least one of semantic/visual must be present")
    return np.concatenate(parts) if len(parts) > 1 else parts[0].copy()


def _standardize(model: SvmModel, x: np.ndarray) -> np.ndarray:
    return (x - model.mean) / model.scale


def _hinge_objective(w, b, Xs, y_signed, lam) -> float:
    margins = y_signed * (Xs @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    return float(0.5 * lam * (w @ w) + hinge.mean())


def train_svm(
    samples: np.ndarray,
    labels: np.ndarray,
    config: SvmConfig,
    class_count: int | None = None,
    record_objective: bool = False,
) -> SvmModel:
    """Fit P one-vs-rest hinge classifiers; deterministic per seed.

    With record_objective the returned model carries objective_curves of
    shape (P, epochs): the full-set regularized hinge objective of each
    binary subproblem after every epoch.
    """
    X = np.asarray(samples, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("samples must be a non-empty (n, D) array")
    if y.shape != (X.shape[0],):
        raise ValueError("labels length does not match samples")
    if not np.all(np.isfinite(X)):
        raise ValueError("samples contain non-finite entries")
    present = np.unique(y)
    if len(present) < 2:
        raise ValueError("need at least 2 distinct labels to fit a classifier")
    if class_count is None:
        class_count = int(y.max()) + 1
    if y.min() < 0 or y.max() >= class_count:
        raise ValueError(f"labels must lie in [0, {class_count})")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    scale = np.where(std == 0.0, 1.0, std)
    Xs = (X - mean) / scale

    n, d = Xs.shape
    W = np.zeros((class_count, d))
    b = np.zeros(class_count)
    curves = np.zeros((class_count, config.epochs)) if record_objective else None

    for c in range(class_count):
        rng = np.random.default_rng((config.seed, c))
        y_signed = np.where(y == c, 1.0, -1.0)
        w_c = np.zeros(d)
        b_c = 0.0
        t = 0
        for epoch in range(config.epochs):
            order = rng.permutation(n)
            for start in range(0, n, config.batch_size):
                batch = order[start : start + config.batch_size]
                t += 1
                eta = 1.0 / (config.lam * t)
                Xb = Xs[batch]
                yb = y_signed[batch]
                margins = yb * (Xb @ w_c + b_c)
                violating = margins < 1.0
                w_c *= 1.0 - eta * config.lam
                if np.any(violating):
                    coeff = eta / len(batch)
                    w_c += coeff * (yb[violating] @ Xb[violating])
                    b_c += coeff * yb[violating].sum()
            if record_objective:
                curves[c, epoch] = _hinge_objective(w_c, b_c, Xs, y_signed, config.lam)
        W[c] = w_c
        b[c] = b_c

    return SvmModel(W, b, mean, scale, objective_curves=curves)


def decision_scores(model: SvmModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.feature_dim,):
        raise ValueError(f"input has shape {x.shape}, model expects ({model.feature_dim},)")
    return model.W @ _standardize(model, x) + model.b


def predict_proba(model: SvmModel, x: np.ndarray) -> np.ndarray:
    """Distribution over all classes: softmax of the margins."""
    return softmax(decision_scores(model, x))


def top_k(model: SvmModel, x: np.ndarray, k: int) -> list:
    """k most probable (predicate_id, probability), descending, ties to
    the lower id; top_k(model, x, 1)[0] is the predicted class."""
    if not 1 <= k <= model.class_count:
        raise ValueError(f"k must lie in [1, {model.class_count}]")
    probs = predict_proba(model, x)
    ids = np.arange(model.class_count)
    order = np.lexsort((ids, -probs))
    return [(int(i), float(probs[i])) for i in order[:k]]


def save_svm(model: SvmModel, path) -> None:
    with atomic_write(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", model.class_count, model.feature_dim))
        for block in (model.mean, model.scale, model.b, model.W):
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def load_svm(path) -> SvmModel:
    with open(path, "rb") as fh:
        magic = read_exact(fh, 4, 0, "magic")
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        p, d = struct.unpack("<II", read_exact(fh, 8, 4, "header"))
        payload = fh.read()
    expected = 8 * (d + d + p + p * d)
    if len(payload) != expected:
        raise ValueError(
            f"{path}: parameter bytes {len(payload)} do not match header "
            f"(P={p}, D={d} needs {expected})"
        )
    floats = np.frombuffer(payload, dtype="<f8")
    mean = floats[:d].copy()
    scale = floats[d : 2 * d].copy()
    bias = floats[2 * d : 2 * d + p].copy()
    W = floats[2 * d + p :].reshape(p, d).copy()
    return SvmModel(W, bias, mean, scale)
