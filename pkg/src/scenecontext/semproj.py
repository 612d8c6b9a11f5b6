"""Projection network over concatenated subject+object word vectors.

A small feed-forward classifier (one relu hidden layer by default)
trained against predicate labels with mini-batch gradient descent.  Its
pre-softmax output layer doubles as the semantic embedding of a pair.
``hidden_width=0`` degenerates to a linear softmax model, which is
convex and handy for optimizer sanity checks.

Checkpoints use the SPJ1 binary layout: magic ``SPJ1``, u32 hidden
width, u32 class count, then row-major float64 little-endian blocks
W1, b1, W2, b2 (the input width follows from the block length).
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .fileio import atomic_write, read_exact
from .numerics import one_hot, softmax

MAGIC = b"SPJ1"


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; almost always a learning-rate problem."""


@dataclass
class MlpModel:
    W1: np.ndarray  # (H, in_dim); empty when H == 0
    b1: np.ndarray  # (H,)
    W2: np.ndarray  # (P, H), or (P, in_dim) when H == 0
    b2: np.ndarray  # (P,)
    hidden_activation: str = "relu"

    def __post_init__(self):
        for name in ("W1", "b1", "W2", "b2"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            setattr(self, name, arr)
        if self.hidden_activation != "relu":
            raise ValueError(f"unsupported hidden activation {self.hidden_activation!r}")
        h, in_dim = self.W1.shape
        if self.b1.shape != (h,):
            raise ValueError("b1 width does not match W1")
        expected_w2_cols = h if h > 0 else in_dim
        if h > 0 and self.W2.shape[1] != h:
            raise ValueError("W2 width does not match hidden layer")
        if self.b2.shape != (self.W2.shape[0],):
            raise ValueError("b2 width does not match W2")
        del expected_w2_cols

    @property
    def hidden_width(self) -> int:
        return self.W1.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1] if self.hidden_width else self.W2.shape[1]

    @property
    def class_count(self) -> int:
        return self.W2.shape[0]

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(),
            self.hidden_activation,
        )


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    early_stopping: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")


@dataclass
class TrainResult:
    model: MlpModel
    train_losses: np.ndarray  # one entry per epoch
    val_losses: np.ndarray
    best_epoch: int  # 1-based index of minimal validation loss


def init_model(in_dim: int, hidden_width: int, class_count: int, seed: int) -> MlpModel:
    """Seeded uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out))."""
    rng = np.random.default_rng(seed)
    return _init_from_rng(rng, in_dim, hidden_width, class_count)


def _init_from_rng(rng, in_dim, hidden_width, class_count) -> MlpModel:
    def glorot(rows, cols):
        a = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-a, a, size=(rows, cols))

    if hidden_width > 0:
        w1 = glorot(hidden_width, in_dim)
        w2 = glorot(class_count, hidden_width)
    else:
        w1 = np.zeros((0, in_dim))
        w2 = glorot(class_count, in_dim)
    return MlpModel(w1, np.zeros(hidden_width), w2, np.zeros(class_count))


def _forward_batch(model: MlpModel, X: np.ndarray):
    """Returns (pre-activation z1, hidden, logits) for a (n, in_dim) batch."""
    if model.hidden_width:
        z1 = X @ model.W1.T + model.b1
        hidden = np.maximum(z1, 0.0)
        logits = hidden @ model.W2.T + model.b2
    else:
        z1 = np.zeros((X.shape[0], 0))
        hidden = X
        logits = X @ model.W2.T + model.b2
    return z1, hidden, logits


def forward(model: MlpModel, x: np.ndarray):
    """Single-pair pass: (hidden, logits, probs); probs sum to 1."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise ValueError(f"input has shape {x.shape}, model expects ({model.input_dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite entries")
    z1, hidden, logits = _forward_batch(model, x[None, :])
    h = z1[0] if model.hidden_width else np.zeros(0)
    h = np.maximum(h, 0.0)
    return h, logits[0], softmax(logits[0])


def semantic_embedding(model: MlpModel, x: np.ndarray, layer: str = "logits") -> np.ndarray:
    """The pair's semantic embedding: the pre-softmax output layer by
    default, or the hidden layer with layer="hidden"."""
    hidden, logits, _ = forward(model, x)
    if layer == "logits":
        return logits
    if layer == "hidden":
        return hidden
    raise ValueError(f"unknown embedding layer {layer!r}")


def mean_cross_entropy(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    _, _, logits = _forward_batch(model, X)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-log_probs[np.arange(len(y)), y].mean())


def _gradients(model: MlpModel, X: np.ndarray, y: np.ndarray):
    """Analytic gradients of mean cross-entropy over the batch."""
    n = X.shape[0]
    z1, hidden, logits = _forward_batch(model, X)
    dlogits = (softmax(logits, axis=1) - one_hot(y, model.class_count)) / n
    db2 = dlogits.sum(axis=0)
    dW2 = dlogits.T @ hidden
    if model.hidden_width:
        dhidden = dlogits @ model.W2
        dz1 = dhidden * (z1 > 0)
        dW1 = dz1.T @ X
        db1 = dz1.sum(axis=0)
    else:
        dW1 = np.zeros_like(model.W1)
        db1 = np.zeros_like(model.b1)
    return dW1, db1, dW2, db2


def train(
    samples: np.ndarray,
    labels: np.ndarray,
    val_samples: np.ndarray,
    val_labels: np.ndarray,
    config: TrainConfig,
    hidden_width: int = 300,
    class_count: int | None = None,
) -> TrainResult:
    """Mini-batch gradient descent on mean cross-entropy.

    Returns the checkpoint with minimal validation loss (earliest epoch on
    ties) unless config.early_stopping is False, in which case the final
    weights are returned; best_epoch reports the argmin either way.  Loss
    curves carry exactly config.epochs entries per split.
    """
    X = np.asarray(samples, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    Xv = np.asarray(val_samples, dtype=np.float64)
    yv = np.asarray(val_labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0 or Xv.ndim != 2 or Xv.shape[0] == 0:
        raise ValueError("both train and validation splits need at least one sample")
    if class_count is None:
        class_count = int(max(y.max(), yv.max())) + 1
    if y.min() < 0 or y.max() >= class_count or yv.min() < 0 or yv.max() >= class_count:
        raise ValueError(f"labels must lie in [0, {class_count})")

    rng = np.random.default_rng(config.seed)
    model = _init_from_rng(rng, X.shape[1], hidden_width, class_count)

    train_losses = np.empty(config.epochs)
    val_losses = np.empty(config.epochs)
    best_epoch, best_val, best_model = 0, np.inf, model.copy()
    lr = config.learning_rate
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(X.shape[0])
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                dW1, db1, dW2, db2 = _gradients(model, X[batch], y[batch])
                model.W1 -= lr * dW1
                model.b1 -= lr * db1
                model.W2 -= lr * dW2
                model.b2 -= lr * db2
            train_loss = mean_cross_entropy(model, X, y)
            val_loss = mean_cross_entropy(model, Xv, yv)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDiverged(
                f"non-finite loss at epoch {epoch} "
                f"(train={train_loss}, val={val_loss}); lower the learning rate"
            )
        train_losses[epoch - 1] = train_loss
        val_losses[epoch - 1] = val_loss
        if val_loss < best_val:
            best_epoch, best_val, best_model = epoch, val_loss, model.copy()

    final = best_model if config.early_stopping else model
    return TrainResult(final, train_losses, val_losses, best_epoch)


def grad_check(model: MlpModel, x: np.ndarray, label: int, epsilon: float = 1e-5) -> float:
    """Max relative disagreement between analytic and central-difference
    gradients of the single-sample cross-entropy, over every parameter."""
    if not 0 < epsilon <= 1e-2:
        raise ValueError("epsilon must lie in (0, 1e-2]")
    X = np.asarray(x, dtype=np.float64)[None, :]
    y = np.asarray([label])
    analytic = _gradients(model, X, y)
    params = [model.W1, model.b1, model.W2, model.b2]

    worst = 0.0
    for arr, grad in zip(params, analytic):
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + epsilon
            up = mean_cross_entropy(model, X, y)
            flat[i] = original - epsilon
            down = mean_cross_entropy(model, X, y)
            flat[i] = original
            numeric = (up - down) / (2.0 * epsilon)
            denom = max(1e-12, abs(gflat[i]) + abs(numeric))
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


def save_model(model: MlpModel, path) -> None:
    with atomic_write(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", model.hidden_width, model.class_count))
        for block in (model.W1, model.b1, model.W2, model.b2):
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def load_model(path) -> MlpModel:
    with open(path, "rb") as fh:
        magic = read_exact(fh, 4, 0, "magic")
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        h, p = struct.unpack("<II", read_exact(fh, 8, 4, "header"))
        payload = fh.read()
    floats = np.frombuffer(payload, dtype="<f8")
    # W1 | b1 | W2 | b2, with the input width implied by the total length
    if h > 0:
        remaining = floats.size - h - p * h - p
        if remaining <= 0 or remaining % h:
            raise ValueError(f"{path}: parameter block length {floats.size} is inconsistent")
        in_dim = remaining // h
        w2_cols = h
    else:
        if floats.size <= p or (floats.size - p) % p:
            raise ValueError(f"{path}: parameter block length {floats.size} is inconsistent")
        in_dim = (floats.size - p) // p
        w2_cols = in_dim
    cursor = 0

    def take(rows, cols=None):
        nonlocal cursor
        size = rows if cols is None else rows * cols
        block = floats[cursor : cursor + size]
        cursor += size
        return block.reshape(rows, cols).copy() if cols is not None else block.copy()

    w1 = take(h, in_dim) if h > 0 else np.zeros((0, in_dim))
    b1 = take(h)
    w2 = take(p, w2_cols)
    b2 = take(p)
    if cursor != floats.size:
        raise ValueError(f"{path}: trailing bytes after parameter blocks")
    return MlpModel(w1, b1, w2, b2)


def save_loss_curves(result: TrainResult, path) -> None:
    """CSV with one row per epoch: epoch,train_loss,val_loss."""
    with atomic_write(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for epoch, (tr, va) in enumerate(zip(result.train_losses, result.val_losses), start=1):
            writer.writerow([epoch, repr(float(tr)), repr(float(va))])
