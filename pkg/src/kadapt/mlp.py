"""One-hidden-layer MLP over sparse rows: ReLU hidden, softmax output, Adam training.

Inputs stay sparse end to end; dense products iterate the nonzero entries of
each row. Training is bit-deterministic given (seed, config, data).
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .core_math import LOG_EPS
from .errors import (
    InvalidArgumentError,
    ModelChecksumError,
    ModelFormatError,
    ModelVersionError,
)
from .text_features import FeatureMatrix, SparseVector, Vocabulary

MODEL_MAGIC = b"KADP"
MODEL_FORMAT_VERSION = 1

DEFAULT_HIDDEN_DIM = 1000
DEFAULT_N_CLASSES = 2


@dataclass
class ParamSet:
    """Parameter-shaped record; also used for gradients and Adam moments."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.w1, self.b1, self.w2, self.b2

    def copy(self) -> "ParamSet":
        return ParamSet(*(a.copy() for a in self.arrays()))

    @classmethod
    def zeros_like(cls, other: "ParamSet") -> "ParamSet":
        return cls(*(np.zeros_like(a) for a in other.arrays()))


@dataclass
class MlpModel:
    """W1 (input x hidden), b1, W2 (hidden x classes), b2, plus featurization reference."""

    params: ParamSet
    vocab: Vocabulary | None = None

    @property
    def input_dim(self) -> int:
        return self.params.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.params.w1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.params.w2.shape[1]

    def copy(self) -> "MlpModel":
        return MlpModel(self.params.copy(), self.vocab)


@dataclass
class AdamState:
    """Adam moment accumulators and step counter for one model."""

    m: ParamSet
    v: ParamSet
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model: MlpModel, lr: float = 0.001) -> "AdamState":
        if not (lr > 0):
            raise InvalidArgumentError(f"lr must be > 0, got {lr}")
        return cls(m=ParamSet.zeros_like(model.params), v=ParamSet.zeros_like(model.params), lr=lr)


@dataclass
class TrainConfig:
    """Hyperparameters for one training run.

    epochs has no universal default and must be given. dev_fraction is used
    by callers that carve a dev split out of labeled data before training.
    """

    epochs: int
    batch_size: int = 10
    seed: int = 0
    shuffle: bool = True
    dev_fraction: float = 0.0
    tau: float = 1.0
    lr: float = 0.001
    hidden_dim: int = DEFAULT_HIDDEN_DIM

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidArgumentError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise InvalidArgumentError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (self.tau > 0):
            raise InvalidArgumentError(f"tau must be > 0, got {self.tau}")
        if not (0.0 <= self.dev_fraction < 1.0):
            raise InvalidArgumentError(f"dev_fraction must be in [0, 1), got {self.dev_fraction}")
        if not (self.lr > 0):
            raise InvalidArgumentError(f"lr must be > 0, got {self.lr}")
        if self.hidden_dim < 1:
            raise InvalidArgumentError(f"hidden_dim must be >= 1, got {self.hidden_dim}")


@dataclass
class TargetBatch:
    """Features plus either hard labels or soft target rows.

    kind is "hard" or "soft". tau_sq_scale marks soft targets that take part
    in the mixed pseudo-supervised objective, whose gradients (and reported
    loss) are scaled by tau^2 to keep them comparable with hard-label terms.
    """

    features: list[SparseVector]
    kind: str
    hard_labels: np.ndarray | None = None
    soft_rows: np.ndarray | None = None
    tau_sq_scale: bool = False

    def __post_init__(self):
        n = len(self.features)
        if self.kind == "hard":
            if self.hard_labels is None:
                raise InvalidArgumentError("hard batch needs hard_labels")
            self.hard_labels = np.asarray(self.hard_labels, dtype=np.int64)
            if self.hard_labels.shape != (n,):
                raise InvalidArgumentError("hard_labels must align with features")
        elif self.kind == "soft":
            if self.soft_rows is None:
                raise InvalidArgumentError("soft batch needs soft_rows")
            self.soft_rows = np.asarray(self.soft_rows, dtype=np.float64)
            if self.soft_rows.ndim != 2 or self.soft_rows.shape[0] != n:
                raise InvalidArgumentError("soft_rows must align with features")
            sums = self.soft_rows.sum(axis=1)
            if np.any(self.soft_rows < 0) or np.any(np.abs(sums - 1.0) > 1e-8):
                raise InvalidArgumentError("soft rows must be probability vectors")
        else:
            raise InvalidArgumentError(f"unknown batch kind: {self.kind!r}")

    def __len__(self) -> int:
        return len(self.features)

    @classmethod
    def hard(cls, features, labels) -> "TargetBatch":
        return cls(features=list(features), kind="hard", hard_labels=labels)

    @classmethod
    def soft(cls, features, rows, tau_sq_scale: bool = False) -> "TargetBatch":
        return cls(features=list(features), kind="soft", soft_rows=rows, tau_sq_scale=tau_sq_scale)

    def subset(self, indices) -> "TargetBatch":
        idx = np.asarray(indices, dtype=np.int64)
        feats = [self.features[i] for i in idx]
        if self.kind == "hard":
            return TargetBatch.hard(feats, self.hard_labels[idx])
        return TargetBatch.soft(feats, self.soft_rows[idx], self.tau_sq_scale)


@dataclass
class EpochStats:
    epoch: int
    loss: float
    dev_accuracy: float | None = None


def init_model(
    input_dim: int,
    hidden_dim: int = DEFAULT_HIDDEN_DIM,
    n_classes: int = DEFAULT_N_CLASSES,
    seed: int = 0,
    vocab: Vocabulary | None = None,
) -> MlpModel:
    """Glorot-uniform weights from the seeded generator, zero biases."""
    if input_dim < 1 or hidden_dim < 1 or n_classes < 1:
        raise InvalidArgumentError(
            f"dims must be >= 1, got ({input_dim}, {hidden_dim}, {n_classes})"
        )
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(6.0 / (input_dim + hidden_dim))
    lim2 = np.sqrt(6.0 / (hidden_dim + n_classes))
    params = ParamSet(
        w1=rng.uniform(-lim1, lim1, size=(input_dim, hidden_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-lim2, lim2, size=(hidden_dim, n_classes)),
        b2=np.zeros(n_classes),
    )
    return MlpModel(params=params, vocab=vocab)


def _check_input_dim(model: MlpModel, x: SparseVector) -> None:
    if x.dim != model.input_dim:
        raise InvalidArgumentError(f"input dim {x.dim} != model input dim {model.input_dim}")


def _preactivations(model: MlpModel, features) -> np.ndarray:
    """Hidden-layer pre-activations W1'x + b1 for a sequence of sparse rows."""
    p = model.params
    z1 = np.tile(p.b1, (len(features), 1))
    for i, x in enumerate(features):
        _check_input_dim(model, x)
        if x.nnz:
            z1[i] += x.values @ p.w1[x.indices]
    return z1


def forward_batch(model: MlpModel, features) -> tuple[np.ndarray, np.ndarray]:
    """(hidden, logits) arrays for a sequence of sparse rows."""
    p = model.params
    hidden = np.maximum(_preactivations(model, features), 0.0)
    logits = hidden @ p.w2 + p.b2
    return hidden, logits


def forward(model: MlpModel, x: SparseVector) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(hidden, logits, probs) for a single sparse row."""
    hidden, logits = forward_batch(model, [x])
    z = logits[0]
    e = np.exp(z - z.max())
    return hidden[0], z, e / e.sum()


def predict(model: MlpModel, features) -> np.ndarray:
    """Argmax class per row (ties go to the lowest index)."""
    _, logits = forward_batch(model, features)
    return np.argmax(logits, axis=1)


def accuracy(model: MlpModel, features, labels) -> float:
    labels = np.asarray(labels)
    return float(np.mean(predict(model, features) == labels))


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def loss_and_gradients(
    model: MlpModel, batch: TargetBatch, tau: float = 1.0
) -> tuple[float, ParamSet]:
    """Mean cross-entropy over the batch and its exact analytic gradients.

    Hard targets are one-hot at temperature 1; soft targets are compared at
    tempered_softmax(logits, tau). When batch.tau_sq_scale is set (mixed
    pseudo-supervised objective) both loss and gradients are scaled by tau^2.
    """
    if len(batch) == 0:
        raise InvalidArgumentError("batch is empty")
    if batch.kind == "soft" and not (tau > 0):
        raise InvalidArgumentError(f"tau must be > 0 for soft targets, got {tau}")
    p = model.params
    n = len(batch)
    z1 = _preactivations(model, batch.features)
    hidden = np.maximum(z1, 0.0)
    logits = hidden @ p.w2 + p.b2

    if batch.kind == "hard":
        probs = _softmax_rows(logits)
        if np.any(batch.hard_labels >= model.n_classes) or np.any(batch.hard_labels < 0):
            raise InvalidArgumentError("hard label out of range for model classes")
        picked = probs[np.arange(n), batch.hard_labels]
        loss = float(-np.mean(np.log(np.clip(picked, LOG_EPS, 1.0))))
        dlogits = probs
        dlogits[np.arange(n), batch.hard_labels] -= 1.0
        dlogits /= n
    else:
        targets = batch.soft_rows
        if targets.shape[1] != model.n_classes:
            raise InvalidArgumentError("soft rows width must equal model classes")
        q = _softmax_rows(logits / tau)
        loss = float(-np.sum(targets * np.log(np.clip(q, LOG_EPS, 1.0))) / n)
        dlogits = (q - targets) / (n * tau)
        if batch.tau_sq_scale:
            loss *= tau * tau
            dlogits *= tau * tau

    # Backprop through the dense head, then scatter into W1 rows on each
    # example's sparse support.
    dw2 = hidden.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dhidden = dlogits @ p.w2.T
    dz1 = dhidden * (z1 > 0.0)
    db1 = dz1.sum(axis=0)
    dw1 = np.zeros_like(p.w1)
    for i, x in enumerate(batch.features):
        if x.nnz:
            dw1[x.indices] += np.outer(x.values, dz1[i])
    return loss, ParamSet(w1=dw1, b1=db1, w2=dw2, b2=db2)


def adam_step(state: AdamState, model: MlpModel, grads: ParamSet) -> tuple[AdamState, MlpModel]:
    """Standard bias-corrected Adam update, in place. Increments state.t."""
    for param, g in zip(model.params.arrays(), grads.arrays()):
        if param.shape != g.shape:
            raise InvalidArgumentError(f"gradient shape {g.shape} != parameter shape {param.shape}")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for param, g, m, v in zip(
        model.params.arrays(), grads.arrays(), state.m.arrays(), state.v.arrays()
    ):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        param -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return state, model


def run_epoch(
    model: MlpModel,
    state: AdamState,
    data: TargetBatch,
    batch_size: int,
    tau: float,
    rng: np.random.Generator,
    shuffle: bool = True,
) -> float:
    """One pass of shuffled mini-batches; returns the mean example loss."""
    n = len(data)
    order = rng.permutation(n) if shuffle else np.arange(n)
    total = 0.0
    for start in range(0, n, batch_size):
        chunk = order[start : start + batch_size]
        loss, grads = loss_and_gradients(model, data.subset(chunk), tau=tau)
        adam_step(state, model, grads)
        total += loss * len(chunk)
    return total / n


def train(
    model: MlpModel,
    data: TargetBatch,
    config: TrainConfig,
    dev: FeatureMatrix | None = None,
) -> tuple[MlpModel, list[EpochStats]]:
    """Train a copy of the model for config.epochs epochs of seeded mini-batches.

    With a labeled dev set the parameter snapshot with the best dev accuracy
    is returned (ties keep the earlier epoch); otherwise the final-epoch
    model is returned.
    """
    if len(data) == 0:
        raise InvalidArgumentError("training data is empty")
    use_dev = dev is not None and len(dev) > 0
    if use_dev and dev.labels is None:
        raise InvalidArgumentError("dev set must be labeled")
    model = model.copy()
    state = AdamState.for_model(model, lr=config.lr)
    history: list[EpochStats] = []
    best_acc = -1.0
    best_params: ParamSet | None = None
    for epoch in range(config.epochs):
        rng = np.random.default_rng(config.seed + epoch)
        loss = run_epoch(
            model, state, data, config.batch_size, config.tau, rng, shuffle=config.shuffle
        )
        dev_acc = None
        if use_dev:
            dev_acc = accuracy(model, dev.rows, dev.labels)
            if dev_acc > best_acc:
                best_acc = dev_acc
                best_params = model.params.copy()
        history.append(EpochStats(epoch=epoch, loss=loss, dev_accuracy=dev_acc))
    if best_params is not None:
        model = MlpModel(best_params, model.vocab)
    return model, history


def save_model(model: MlpModel, vocab: Vocabulary | None = None, path=None) -> None:
    """Write the binary model container (parameters + CRC + embedded vocabulary)."""
    if path is None:
        raise InvalidArgumentError("path is required")
    vocab = vocab if vocab is not None else model.vocab
    p = model.params
    head = MODEL_MAGIC + struct.pack(
        "<IIII", MODEL_FORMAT_VERSION, model.input_dim, model.hidden_dim, model.n_classes
    )
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in p.arrays())
    crc = struct.pack("<I", zlib.crc32(head + body) & 0xFFFFFFFF)
    vocab_doc = vocab.to_json_dict() if vocab is not None else None
    vocab_bytes = json.dumps(vocab_doc, ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(head + body + crc + struct.pack("<I", len(vocab_bytes)) + vocab_bytes)


def load_model(path) -> MlpModel:
    """Read a model container; signals bad magic, bad version, and corruption distinctly."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4:
        raise ModelChecksumError("file truncated before magic bytes")
    if blob[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"bad magic bytes: {blob[:4]!r}")
    if len(blob) < 20:
        raise ModelChecksumError("file truncated inside header")
    version, input_dim, hidden_dim, n_classes = struct.unpack("<IIII", blob[4:20])
    if version != MODEL_FORMAT_VERSION:
        raise ModelVersionError(f"unsupported model format version {version}")
    counts = [input_dim * hidden_dim, hidden_dim, hidden_dim * n_classes, n_classes]
    body_len = 8 * sum(counts)
    if len(blob) < 20 + body_len + 4:
        raise ModelChecksumError("file truncated inside parameter block")
    stored_crc = struct.unpack("<I", blob[20 + body_len : 24 + body_len])[0]
    if zlib.crc32(blob[: 20 + body_len]) & 0xFFFFFFFF != stored_crc:
        raise ModelChecksumError("checksum mismatch")
    flat = np.frombuffer(blob, dtype="<f8", count=sum(counts), offset=20)
    w1, b1, w2, b2 = np.split(flat.copy(), np.cumsum(counts)[:-1])
    params = ParamSet(
        w1=w1.reshape(input_dim, hidden_dim),
        b1=b1,
        w2=w2.reshape(hidden_dim, n_classes),
        b2=b2,
    )
    offset = 24 + body_len
    if len(blob) < offset + 4:
        raise ModelChecksumError("file truncated before vocabulary length")
    vocab_len = struct.unpack("<I", blob[offset : offset + 4])[0]
    if len(blob) < offset + 4 + vocab_len:
        raise ModelChecksumError("file truncated inside vocabulary block")
    try:
        vocab_doc = json.loads(blob[offset + 4 : offset + 4 + vocab_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"embedded vocabulary is not valid JSON: {exc}") from exc
    vocab = Vocabulary.from_json_dict(vocab_doc) if vocab_doc is not None else None
    return MlpModel(params=params, vocab=vocab)
