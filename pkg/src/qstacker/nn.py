"""Single-hidden-layer classifier whose forward products run on the
quantum matmul engine.

The forward pass is hidden = sigmoid(W1 x), logits = W2 hidden, with both
layer products executed by the matmul orchestrator: exact overlaps in
classical mode, shot-sampled overlaps in quantum mode. Classical mode and
quantum exact mode share one code path, so their training trajectories are
bit-identical at equal seeds. Gradients are always computed classically from
the (possibly noisy) forward activations; no biases are used, so the network
is exactly a pair of matrix products around a sigmoid.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDataset,
    MagicMismatch,
    ParseError,
    ShapeMismatch,
    TruncatedFile,
)
from .matmul import MatMulConfig, matmul
from .seeding import derive_seed, job_rng
from .stacking import StackingPattern

CLASSICAL = "classical"
QUANTUM = "quantum"

# seed-derivation tags, arbitrary distinct constants
_TAG_INIT = 0x11
_TAG_SHUFFLE = 0x5F
_TAG_FORWARD = 0xF0
_TAG_EVAL = 0xE7


@dataclass(frozen=True)
class NetworkShape:
    inputs: int
    hidden: int
    outputs: int

    def __post_init__(self):
        if min(self.inputs, self.hidden, self.outputs) < 1:
            raise ShapeMismatch(f"layer widths must be >= 1, got {self}")


@dataclass(frozen=True)
class TrainConfig:
    shape: NetworkShape
    batch_size: int = 10
    learning_rate: float = 0.01
    epochs: int = 250
    shots: int = 16384
    seed: int = 0
    forward_mode: str = QUANTUM
    exact: bool = False  # quantum exact mode: engine path without sampling
    pattern: StackingPattern = StackingPattern.BATCH

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.forward_mode not in (CLASSICAL, QUANTUM):
            raise ValueError(f"unknown forward mode {self.forward_mode!r}")


@dataclass
class Dataset:
    features: np.ndarray  # samples x dims
    labels: np.ndarray  # int class ids in [0, n_classes)
    train_idx: np.ndarray
    test_idx: np.ndarray
    split_seed: int
    n_classes: int


@dataclass
class Model:
    w1: np.ndarray  # hidden x inputs
    w2: np.ndarray  # outputs x hidden


@dataclass
class TrainReport:
    mode: str
    epochs: list = field(default_factory=list)  # (epoch, train_loss, test_accuracy)
    final_accuracy: float = 0.0
    quantum_jobs: int = 0
    wall_clock_s: float = 0.0


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def init_model(shape: NetworkShape, seed: int) -> Model:
    """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer."""
    rng = job_rng(derive_seed(seed, _TAG_INIT))
    b1 = 1.0 / np.sqrt(shape.inputs)
    b2 = 1.0 / np.sqrt(shape.hidden)
    return Model(
        w1=rng.uniform(-b1, b1, size=(shape.hidden, shape.inputs)),
        w2=rng.uniform(-b2, b2, size=(shape.outputs, shape.hidden)),
    )


def _layer_cfg(mode: str, exact: bool, shots: int, seed: int, pattern) -> MatMulConfig:
    sampled = mode == QUANTUM and not exact
    return MatMulConfig(
        shots=shots, seed=seed, exact=not sampled, pattern=pattern
    )


def forward(
    model: Model,
    x: np.ndarray,
    mode: str = CLASSICAL,
    shots: int = 16384,
    seed: int = 0,
    exact: bool = False,
    pattern: StackingPattern = StackingPattern.BATCH,
):
    """Forward pass for a batch.

    x may be one sample (dims,) or a batch (samples, dims). Returns
    (logits, hidden, jobs) with logits/hidden shaped (outputs|hidden, batch);
    jobs counts the estimation jobs dispatched.
    """
    xb = np.atleast_2d(np.asarray(x, dtype=np.float64))  # samples x dims
    if xb.shape[1] != model.w1.shape[1]:
        raise ShapeMismatch(
            f"input dim {xb.shape[1]} does not match W1 {model.w1.shape}"
        )
    if model.w2.shape[1] != model.w1.shape[0]:
        raise ShapeMismatch(
            f"W2 {model.w2.shape} does not chain with W1 {model.w1.shape}"
        )
    r1 = matmul(model.w1, xb.T, _layer_cfg(mode, exact, shots, derive_seed(seed, 1), pattern))
    hidden = sigmoid(r1.c)
    r2 = matmul(model.w2, hidden, _layer_cfg(mode, exact, shots, derive_seed(seed, 2), pattern))
    return r2.c, hidden, r1.job_count + r2.job_count


def _loss_and_grads(model: Model, xb: np.ndarray, y: np.ndarray,
                    mode: str, shots: int, seed: int, exact: bool, pattern):
    """Summed cross-entropy loss and its weight gradients for one mini-batch.

    The loss is accumulated (not averaged) over the batch, so the step size
    per sample is independent of batch size. The forward activations may be
    noisy (quantum mode); the backward pass is plain chain-rule arithmetic
    on whatever the forward produced.
    """
    logits, hidden, jobs = forward(
        model, xb, mode=mode, shots=shots, seed=seed, exact=exact, pattern=pattern
    )
    batch = xb.shape[0]
    probs = softmax(logits)
    onehot = np.zeros_like(probs)
    onehot[y, np.arange(batch)] = 1.0
    eps = 1e-300
    loss = float(-np.sum(np.log(probs[y, np.arange(batch)] + eps)))
    dlogits = probs - onehot
    dw2 = dlogits @ hidden.T
    dhidden = model.w2.T @ dlogits
    dz1 = dhidden * hidden * (1.0 - hidden)
    dw1 = dz1 @ xb
    return loss, dw1, dw2, jobs


def evaluate(
    model: Model,
    data: Dataset,
    mode: str = CLASSICAL,
    shots: int = 16384,
    seed: int = 0,
    exact: bool = False,
    indices: np.ndarray | None = None,
) -> float:
    """Argmax-logit accuracy on the test split (or explicit indices)."""
    idx = data.test_idx if indices is None else indices
    if len(idx) == 0:
        raise EmptyDataset("no evaluation samples")
    logits, _, _ = forward(
        model, data.features[idx], mode=mode, shots=shots, seed=seed, exact=exact
    )
    pred = logits.argmax(axis=0)
    return float(np.mean(pred == data.labels[idx]))


def train(data: Dataset, cfg: TrainConfig) -> tuple[Model, TrainReport]:
    """Mini-batch SGD with cross-entropy loss; deterministic given cfg.seed."""
    if len(data.train_idx) == 0:
        raise EmptyDataset("no training samples")
    if data.features.shape[1] != cfg.shape.inputs:
        raise ShapeMismatch(
            f"dataset dim {data.features.shape[1]} != shape.inputs {cfg.shape.inputs}"
        )
    if data.n_classes > cfg.shape.outputs:
        raise ShapeMismatch(
            f"{data.n_classes} classes exceed {cfg.shape.outputs} outputs"
        )
    model = init_model(cfg.shape, cfg.seed)
    report = TrainReport(mode=cfg.forward_mode)
    started = time.perf_counter()
    for epoch in range(cfg.epochs):
        order = job_rng(derive_seed(cfg.seed, _TAG_SHUFFLE, epoch)).permutation(
            data.train_idx
        )
        losses = []
        for b, start in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            loss, dw1, dw2, jobs = _loss_and_grads(
                model,
                data.features[idx],
                data.labels[idx],
                cfg.forward_mode,
                cfg.shots,
                derive_seed(cfg.seed, _TAG_FORWARD, epoch, b),
                cfg.exact,
                cfg.pattern,
            )
            model.w1 -= cfg.learning_rate * dw1
            model.w2 -= cfg.learning_rate * dw2
            losses.append(loss / len(idx))  # per-sample loss for the record
            report.quantum_jobs += jobs
        if len(data.test_idx):
            logits, _, jobs = forward(
                model,
                data.features[data.test_idx],
                mode=cfg.forward_mode,
                shots=cfg.shots,
                seed=derive_seed(cfg.seed, _TAG_EVAL, epoch),
                exact=cfg.exact,
            )
            report.quantum_jobs += jobs
            acc = float(np.mean(logits.argmax(axis=0) == data.labels[data.test_idx]))
        else:
            acc = float("nan")
        report.epochs.append((epoch, float(np.mean(losses)), acc))
    report.final_accuracy = report.epochs[-1][2] if report.epochs else float("nan")
    report.wall_clock_s = time.perf_counter() - started
    return model, report


# ---------------------------------------------------------------------------
# dataset ingestion


def split_dataset(
    features: np.ndarray,
    labels: np.ndarray,
    split_seed: int,
    train_fraction: float = 0.8,
    stratify: bool = True,
    counts: tuple[int, int] | None = None,
) -> Dataset:
    """Train/test split; stratified by label unless counts are given, in
    which case the first `counts[0]` samples train and the next test."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(features) != len(labels) or len(labels) == 0:
        raise EmptyDataset("features and labels must be nonempty and aligned")
    n_classes = int(labels.max()) + 1
    if counts is not None:
        n_train, n_test = counts
        if n_train + n_test > len(labels):
            raise EmptyDataset(
                f"requested {n_train}+{n_test} samples from {len(labels)}"
            )
        train_idx = np.arange(n_train)
        test_idx = np.arange(n_train, n_train + n_test)
    elif stratify:
        rng = job_rng(split_seed)
        train_parts, test_parts = [], []
        for c in np.unique(labels):
            idx = rng.permutation(np.where(labels == c)[0])
            k = int(round(len(idx) * train_fraction))
            train_parts.append(idx[:k])
            test_parts.append(idx[k:])
        train_idx = np.sort(np.concatenate(train_parts))
        test_idx = np.sort(np.concatenate(test_parts))
    else:
        idx = job_rng(split_seed).permutation(len(labels))
        k = int(round(len(labels) * train_fraction))
        train_idx = np.sort(idx[:k])
        test_idx = np.sort(idx[k:])
    return Dataset(
        features=features,
        labels=labels,
        train_idx=train_idx,
        test_idx=test_idx,
        split_seed=split_seed,
        n_classes=n_classes,
    )


def ingest_iris(path, split_seed: int = 1234) -> Dataset:
    """IRIS CSV: four float features plus a string label per line.

    Labels map to {0, 1, 2} in sorted order; feature columns are
    standardized to zero mean / unit variance over the whole file.
    """
    rows, names = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = [tok.strip() for tok in line.split(",")]
        if len(parts) != 5:
            raise ParseError(f"{path}:{lineno}: expected 4 features + label")
        try:
            rows.append([float(tok) for tok in parts[:4]])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        names.append(parts[4])
    if not rows:
        raise ParseError(f"{path}: no samples")
    features = np.array(rows, dtype=np.float64)
    classes = sorted(set(names))
    labels = np.array([classes.index(nm) for nm in names], dtype=np.int64)
    std = features.std(axis=0)
    if np.any(std == 0):
        raise ParseError(f"{path}: constant feature column")
    features = (features - features.mean(axis=0)) / std
    return split_dataset(features, labels, split_seed)


_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def _read_idx(path, magic: int, header_dims: int) -> tuple[tuple, np.ndarray]:
    raw = Path(path).read_bytes()
    header = 4 * (1 + header_dims)
    if len(raw) < header:
        raise TruncatedFile(f"{path}: missing IDX header")
    fields = struct.unpack(f">{1 + header_dims}I", raw[:header])
    if fields[0] != magic:
        raise MagicMismatch(f"{path}: magic 0x{fields[0]:08x}, expected 0x{magic:08x}")
    dims = fields[1:]
    count = int(np.prod(dims))
    if len(raw) < header + count:
        raise TruncatedFile(
            f"{path}: payload holds {len(raw) - header} bytes, header declares {count}"
        )
    body = np.frombuffer(raw, dtype=np.uint8, count=count, offset=header)
    return dims, body


def _avg_pool(images: np.ndarray, factor: int) -> np.ndarray:
    n, r, c = images.shape
    if factor < 1 or r % factor or c % factor:
        raise ParseError(f"pooling factor {factor} does not divide {r}x{c}")
    return images.reshape(n, r // factor, factor, c // factor, factor).mean(axis=(2, 4))


def ingest_mnist_idx(
    images_path,
    labels_path,
    downsample: int = 1,
    limit: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """IDX-format image/label pair: big-endian magics 0x803/0x801, uint8
    payload. Pixels scale to [0, 1]; optional average-pool downsampling and
    a leading-sample limit. Returns (features, labels) flat arrays."""
    (n_img, rows, cols), pixels = _read_idx(images_path, _IDX_IMAGES_MAGIC, 3)
    (n_lab,), label_bytes = _read_idx(labels_path, _IDX_LABELS_MAGIC, 1)
    if n_img != n_lab:
        raise ParseError(f"{n_img} images vs {n_lab} labels")
    images = pixels.reshape(n_img, rows, cols).astype(np.float64) / 255.0
    labels = label_bytes.astype(np.int64)
    if limit is not None:
        images = images[:limit]
        labels = labels[:limit]
    if downsample and downsample > 1:
        images = _avg_pool(images, downsample)
    return images.reshape(images.shape[0], -1), labels


def declared_mnist_count(images_path) -> int:
    """Sample count declared by an IDX image header (no payload check)."""
    raw = Path(images_path).read_bytes()
    if len(raw) < 16:
        raise TruncatedFile(f"{images_path}: missing IDX header")
    magic, n, _, _ = struct.unpack(">4I", raw[:16])
    if magic != _IDX_IMAGES_MAGIC:
        raise MagicMismatch(f"{images_path}: magic 0x{magic:08x}")
    return n


# ---------------------------------------------------------------------------
# run configuration and report persistence


def parse_train_config(path) -> dict:
    """key=value run file; '#' starts a comment. Returns a raw string dict."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def train_config_from_dict(raw: dict) -> TrainConfig:
    try:
        shape = tuple(int(tok) for tok in raw["shape"].split(","))
        if len(shape) != 3:
            raise ParseError(f"shape needs 3 widths, got {raw['shape']!r}")
        return TrainConfig(
            shape=NetworkShape(*shape),
            batch_size=int(raw.get("batch", 10)),
            learning_rate=float(raw.get("lr", 0.01)),
            epochs=int(raw.get("epochs", 250)),
            shots=int(raw.get("shots", 16384)),
            seed=int(raw.get("seed", 0)),
            forward_mode=raw.get("mode", QUANTUM).lower(),
            exact=raw.get("exact", "false").lower() in ("1", "true", "yes"),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad train config: {exc}") from exc


def write_train_report_json(report: TrainReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(
            {
                "mode": report.mode,
                "final_accuracy": report.final_accuracy,
                "quantum_jobs": report.quantum_jobs,
                "wall_clock_s": report.wall_clock_s,
                "epochs": len(report.epochs),
            },
            fh,
            indent=2,
        )
        fh.write("\n")


def write_epoch_csv(report: TrainReport, path) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,train_loss,test_accuracy\n")
        for epoch, loss, acc in report.epochs:
            fh.write(f"{epoch},{loss!r},{acc!r}\n")
