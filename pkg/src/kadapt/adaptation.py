"""Teacher training, single/multi-teacher distillation, and MCD-guided
pseudo-supervised training.

Teachers are frozen: their soft targets and the MCD selection are computed
once up front, which keeps every procedure deterministic under a fixed seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_math import cosine, tempered_softmax
from .errors import EmptyClusterError, InvalidArgumentError
from .mlp import (
    AdamState,
    EpochStats,
    MlpModel,
    TargetBatch,
    TrainConfig,
    accuracy,
    forward_batch,
    init_model,
    run_epoch,
    train,
)
from .similarity import (
    DEFAULT_RENYI_ALPHA,
    DivergenceKind,
    js_divergence,
    mmd,
    renyi_divergence,
    similarity_weights,
)
from .text_features import Corpus, FeatureMatrix, SparseVector, build_vocabulary, featurize, merge_corpora, term_distribution

WEIGHT_SUM_TOL = 1e-8


@dataclass
class DistillConfig:
    """Hyperparameters for distilling a student from frozen teachers.

    unsup_epochs/pseudo_epochs give the per-cycle alternation schedule for
    MCD training; epochs is the total epoch budget across both phases.
    hidden_dim of None mirrors the teacher's architecture.
    """

    epochs: int
    tau: float = 5.0
    lam: float = 0.2
    n_mcd: int = 500
    batch_size: int = 10
    lr: float = 0.001
    seed: int = 0
    unsup_epochs: int = 1
    pseudo_epochs: int = 1
    hidden_dim: int | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidArgumentError(f"epochs must be >= 1, got {self.epochs}")
        if not (self.tau > 0):
            raise InvalidArgumentError(f"tau must be > 0, got {self.tau}")
        if not (0.0 <= self.lam <= 1.0):
            raise InvalidArgumentError(f"lambda must be in [0, 1], got {self.lam}")
        if self.n_mcd < 1:
            raise InvalidArgumentError(f"n_mcd must be >= 1, got {self.n_mcd}")
        if self.batch_size < 1:
            raise InvalidArgumentError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (self.lr > 0):
            raise InvalidArgumentError(f"lr must be > 0, got {self.lr}")
        if self.unsup_epochs < 0 or self.pseudo_epochs < 0:
            raise InvalidArgumentError("alternation counts must be >= 0")
        if self.unsup_epochs == 0 and self.pseudo_epochs == 0:
            raise InvalidArgumentError("alternation schedule cannot be all zero")


@dataclass
class Centroids:
    """Per-class mean hidden representation plus member counts."""

    means: np.ndarray  # (n_classes, hidden_dim)
    counts: np.ndarray  # (n_classes,)

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]


@dataclass
class PseudoLabeledSet:
    """Top-MCD examples with teacher hard indicators and soft rows."""

    features: list[SparseVector]
    hard_indicators: np.ndarray  # (n, n_classes) one-hot
    soft_rows: np.ndarray  # (n, n_classes) tempered teacher outputs
    mcd_scores: np.ndarray  # (n,)
    indices: np.ndarray  # (n,) positions in the original set

    def __len__(self) -> int:
        return len(self.features)


def train_teacher(
    labeled: FeatureMatrix, config: TrainConfig, dev: FeatureMatrix | None = None
) -> MlpModel:
    """Train a teacher on hard labels; returns the dev-selected model."""
    if labeled.labels is None:
        raise InvalidArgumentError("teacher training requires a labeled FeatureMatrix")
    model = init_model(labeled.dim, config.hidden_dim, 2, seed=config.seed)
    batch = TargetBatch.hard(labeled.rows, labeled.labels)
    trained, _ = train(model, batch, config, dev=dev)
    return trained


def soft_targets(teacher: MlpModel, unlabeled: FeatureMatrix, tau: float) -> np.ndarray:
    """Tempered teacher outputs, one row per example."""
    if not (tau > 0):
        raise InvalidArgumentError(f"tau must be > 0, got {tau}")
    _, logits = forward_batch(teacher, unlabeled.rows)
    return np.vstack([tempered_softmax(z, tau) for z in logits])


def _validated_weights(teachers, weights) -> np.ndarray:
    if len(teachers) < 1:
        raise InvalidArgumentError("need at least one teacher")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(teachers),):
        raise InvalidArgumentError(f"{w.size} weights for {len(teachers)} teachers")
    if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidArgumentError("teacher weights must be nonnegative and sum to 1")
    return w


def _init_student(teachers, target: FeatureMatrix, config: DistillConfig) -> MlpModel:
    hidden = config.hidden_dim if config.hidden_dim is not None else teachers[0].hidden_dim
    return init_model(target.dim, hidden, teachers[0].n_classes, seed=config.seed)


def _student_train_config(config: DistillConfig) -> TrainConfig:
    return TrainConfig(
        epochs=config.epochs,
        batch_size=config.batch_size,
        seed=config.seed,
        tau=config.tau,
        lr=config.lr,
    )


def mixture_soft_targets(teachers, weights, target: FeatureMatrix, tau: float) -> np.ndarray:
    """Weighted sum of each teacher's tempered output rows."""
    w = _validated_weights(teachers, weights)
    mixed = w[0] * soft_targets(teachers[0], target, tau)
    for wi, teacher in zip(w[1:], teachers[1:]):
        mixed += wi * soft_targets(teacher, target, tau)
    return mixed


def distill_multi(
    teachers,
    weights,
    unlabeled_target: FeatureMatrix,
    config: DistillConfig,
    dev: FeatureMatrix | None = None,
) -> MlpModel:
    """Train a fresh student to match the similarity-weighted teacher mixture."""
    if len(unlabeled_target) == 0:
        raise InvalidArgumentError("unlabeled target set is empty")
    mixed = mixture_soft_targets(teachers, weights, unlabeled_target, config.tau)
    student = _init_student(teachers, unlabeled_target, config)
    batch = TargetBatch.soft(unlabeled_target.rows, mixed)
    trained, _ = train(student, batch, _student_train_config(config), dev=dev)
    return trained


def distill_single(
    teacher: MlpModel,
    unlabeled_target: FeatureMatrix,
    config: DistillConfig,
    dev: FeatureMatrix | None = None,
) -> MlpModel:
    """Single-teacher distillation: the one-teacher case of distill_multi."""
    return distill_multi([teacher], np.array([1.0]), unlabeled_target, config, dev=dev)


def teacher_mixture_probs(teachers, weights, features) -> np.ndarray:
    """Weighted mixture of teacher predictive distributions at temperature 1."""
    return mixture_soft_targets(
        teachers, weights, FeatureMatrix(rows=list(features)), tau=1.0
    )


def teacher_only_predict(teachers, weights, x: SparseVector) -> int:
    """Argmax of the weighted teacher mixture; ties go to the lowest index."""
    probs = teacher_mixture_probs(teachers, weights, [x])
    return int(np.argmax(probs[0]))


def compute_centroids(teacher: MlpModel, examples: FeatureMatrix) -> Centroids:
    """Mean hidden representation per teacher-predicted class."""
    if len(examples) == 0:
        raise InvalidArgumentError("examples set is empty")
    hidden, logits = forward_batch(teacher, examples.rows)
    preds = np.argmax(logits, axis=1)
    n_classes = teacher.n_classes
    means = np.zeros((n_classes, teacher.hidden_dim))
    counts = np.zeros(n_classes, dtype=np.int64)
    for k in range(n_classes):
        members = preds == k
        counts[k] = members.sum()
        if counts[k] == 0:
            raise EmptyClusterError(f"no examples assigned to class {k}; MCD undefined")
        means[k] = hidden[members].mean(axis=0)
    return Centroids(means=means, counts=counts)


def mcd_score(centroids: Centroids, h) -> float:
    """|cos(c_pos, h) - cos(c_neg, h)| for the binary case."""
    if centroids.n_classes != 2:
        raise InvalidArgumentError("mcd_score expects binary centroids; see mcd_score_multi")
    return abs(cosine(centroids.means[1], h) - cosine(centroids.means[0], h))


def mcd_score_multi(centroids: Centroids, h) -> float:
    """Sum of |cos(c_i, h) - cos(c_j, h)| over unique centroid pairs."""
    n = centroids.n_classes
    if n < 2:
        raise InvalidArgumentError("need at least 2 centroids")
    cos_vals = [cosine(centroids.means[k], h) for k in range(n)]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += abs(cos_vals[j] - cos_vals[i])
    return total


def mcd_scores(teacher: MlpModel, examples: FeatureMatrix) -> np.ndarray:
    """Centroids over the full set, then one MCD score per example."""
    centroids = compute_centroids(teacher, examples)
    hidden, _ = forward_batch(teacher, examples.rows)
    score = mcd_score if centroids.n_classes == 2 else mcd_score_multi
    return np.array([score(centroids, h) for h in hidden])


def select_top_n(
    teacher: MlpModel, unlabeled_target: FeatureMatrix, n: int, tau: float = 1.0
) -> PseudoLabeledSet:
    """The n highest-MCD examples with teacher hard labels and soft rows.

    Ties keep the lower original index; if n exceeds the set size the whole
    set is returned.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    scores = mcd_scores(teacher, unlabeled_target)
    order = np.argsort(-scores, kind="stable")[: min(n, len(scores))]
    chosen = unlabeled_target.subset(order)
    _, logits = forward_batch(teacher, chosen.rows)
    preds = np.argmax(logits, axis=1)
    indicators = np.zeros((len(order), teacher.n_classes))
    indicators[np.arange(len(order)), preds] = 1.0
    soft = np.vstack([tempered_softmax(z, tau) for z in logits])
    return PseudoLabeledSet(
        features=chosen.rows,
        hard_indicators=indicators,
        soft_rows=soft,
        mcd_scores=scores[order],
        indices=order,
    )


def distill_mcd(
    teacher: MlpModel,
    unlabeled_target: FeatureMatrix,
    config: DistillConfig,
    dev: FeatureMatrix | None = None,
) -> MlpModel:
    """Alternate unsupervised distillation with pseudo-supervised training.

    The pseudo phase trains on the top-n_mcd examples against the target
    (1-lambda) * y_teacher + lambda * P_teacher^tau, with tau^2-scaled
    gradients. Selection happens once, from the frozen teacher, before
    training begins. The schedule starts with the unsupervised phase and
    cycles (unsup_epochs, pseudo_epochs) until the epoch budget is spent.
    """
    if len(unlabeled_target) == 0:
        raise InvalidArgumentError("unlabeled target set is empty")
    use_dev = dev is not None and len(dev) > 0
    if use_dev and dev.labels is None:
        raise InvalidArgumentError("dev set must be labeled")

    soft_full = soft_targets(teacher, unlabeled_target, config.tau)
    unsup_batch = TargetBatch.soft(unlabeled_target.rows, soft_full)
    pseudo = select_top_n(teacher, unlabeled_target, config.n_mcd, tau=config.tau)
    mixed = (1.0 - config.lam) * pseudo.hard_indicators + config.lam * pseudo.soft_rows
    pseudo_batch = TargetBatch.soft(pseudo.features, mixed, tau_sq_scale=True)

    student = _init_student([teacher], unlabeled_target, config)
    state = AdamState.for_model(student, lr=config.lr)
    cycle = ["unsup"] * config.unsup_epochs + ["pseudo"] * config.pseudo_epochs
    best_acc = -1.0
    best_params = None
    history: list[EpochStats] = []
    for epoch in range(config.epochs):
        phase = cycle[epoch % len(cycle)]
        data = unsup_batch if phase == "unsup" else pseudo_batch
        rng = np.random.default_rng(config.seed + epoch)
        loss = run_epoch(student, state, data, config.batch_size, config.tau, rng)
        dev_acc = None
        if use_dev:
            dev_acc = accuracy(student, dev.rows, dev.labels)
            if dev_acc > best_acc:
                best_acc = dev_acc
                best_params = student.params.copy()
        history.append(EpochStats(epoch=epoch, loss=loss, dev_accuracy=dev_acc))
    if best_params is not None:
        student = MlpModel(best_params, student.vocab)
    return student


def combine_with_general(source_weights) -> np.ndarray:
    """Append a general teacher carrying the mean source weight, renormalized."""
    w = np.asarray(source_weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise InvalidArgumentError("source weights must be a non-empty 1-D sequence")
    combined = np.append(w, w.mean())
    return combined / combined.sum()


def compute_teacher_weights(
    kind: DivergenceKind | str,
    source_corpora: list[Corpus],
    target_corpus: Corpus,
    *,
    teachers=None,
    source_features: list[FeatureMatrix] | None = None,
    target_features: FeatureMatrix | None = None,
    vocab_size: int | None = None,
    alpha: float = DEFAULT_RENYI_ALPHA,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-source divergences from the target, and their softmin weights.

    JS/Renyi compare smoothed term distributions over a vocabulary pooled
    from all corpora involved. MMD compares each teacher's mean hidden
    representation of its own source rows against the target rows, so it
    additionally requires teachers and featurized inputs.
    """
    kind = DivergenceKind(kind)
    if kind is DivergenceKind.MMD:
        if teachers is None or source_features is None or target_features is None:
            raise InvalidArgumentError("MMD weighting needs teachers and featurized inputs")
        if not (len(teachers) == len(source_features) == len(source_corpora)):
            raise InvalidArgumentError("teachers and source features must align with corpora")
        divs = []
        for teacher, feats in zip(teachers, source_features):
            h_src, _ = forward_batch(teacher, feats.rows)
            h_tgt, _ = forward_batch(teacher, target_features.rows)
            divs.append(mmd(h_src, h_tgt))
        divergences = np.array(divs)
    else:
        pooled = merge_corpora(list(source_corpora) + [target_corpus])
        vocab = build_vocabulary(pooled, vocab_size) if vocab_size else build_vocabulary(pooled)
        t_target = term_distribution(target_corpus, vocab)
        divs = []
        for corpus in source_corpora:
            t_source = term_distribution(corpus, vocab)
            if kind is DivergenceKind.JENSEN_SHANNON:
                divs.append(js_divergence(t_source, t_target))
            else:
                divs.append(renyi_divergence(t_source, t_target, alpha))
        divergences = np.array(divs)
    return divergences, similarity_weights(divergences)
