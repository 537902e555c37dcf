"""Corpus ingestion, deterministic splits, synthetic multi-domain generation,
and evaluation metrics + CSV exports."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .core_math import pca_project, pearson
from .adaptation import compute_centroids, mcd_scores
from .errors import (
    CorpusFormatError,
    EmptyCorpusError,
    InvalidArgumentError,
)
from .mlp import MlpModel, forward_batch
from .text_features import Corpus, Document, FeatureMatrix

# Fraction of sampled tokens that carry sentiment; the rest are neutral filler.
SENTIMENT_TOKEN_RATE = 0.4
# Fraction of a domain's vocabulary budget spent on each sentiment polarity.
SENTIMENT_LEXICON_FRACTION = 0.2
# Fraction of the neutral filler lexicon shared across all domains.
NEUTRAL_SHARED_FRACTION = 0.5


@dataclass
class SynthSpec:
    """Knobs for the synthetic multi-domain review generator.

    shared_fraction controls how much of each domain's sentiment-bearing
    lexicon is common to all domains: 1.0 means no domain shift in the
    sentiment signal, 0.0 means none of it transfers.
    """

    n_domains: int = 4
    vocab_size: int = 120
    shared_fraction: float = 0.5
    noise_rate: float = 0.1
    docs_per_domain: int = 2000
    doc_length: tuple[int, int] = (15, 30)
    seed: int = 0

    def __post_init__(self):
        if self.n_domains < 1 or self.docs_per_domain < 1 or self.vocab_size < 10:
            raise InvalidArgumentError("counts must be positive (vocab_size >= 10)")
        if not (0.0 <= self.shared_fraction <= 1.0):
            raise InvalidArgumentError(f"shared_fraction must be in [0, 1], got {self.shared_fraction}")
        if not (0.0 <= self.noise_rate < 0.5):
            raise InvalidArgumentError(f"noise_rate must be in [0, 0.5), got {self.noise_rate}")
        lo, hi = self.doc_length
        if lo < 1 or hi < lo:
            raise InvalidArgumentError(f"bad doc_length range: {self.doc_length}")


@dataclass
class SplitSpec:
    train: float = 0.8
    dev: float = 0.1
    test: float = 0.1
    seed: int = 0

    def __post_init__(self):
        fractions = (self.train, self.dev, self.test)
        if any(f < 0 for f in fractions):
            raise InvalidArgumentError("fractions must be >= 0")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise InvalidArgumentError(f"fractions must sum to 1, got {sum(fractions)}")


def load_corpus(path, fmt: str = "jsonl") -> Corpus:
    """Read a JSONL corpus: one object per line with text, optional label/domain."""
    if fmt != "jsonl":
        raise InvalidArgumentError(f"unsupported corpus format: {fmt!r}")
    docs: list[Document] = []
    domain_id = ""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
                raise CorpusFormatError(f"{path}: line {lineno}: missing string field 'text'")
            label = obj.get("label")
            if label not in (0, 1, None):
                raise CorpusFormatError(f"{path}: line {lineno}: label must be 0, 1 or null, got {label!r}")
            if not domain_id and isinstance(obj.get("domain"), str):
                domain_id = obj["domain"]
            docs.append(Document(text=obj["text"], label=label))
    if not docs:
        raise EmptyCorpusError(f"{path}: corpus contains no documents")
    return Corpus(docs=docs, domain_id=domain_id)


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.docs:
            obj = {"text": doc.text, "label": doc.label, "domain": corpus.domain_id}
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def split(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus, Corpus]:
    """Stratified seeded shuffle, then contiguous cuts per label stratum.

    A part whose fraction is positive must come out non-empty, otherwise the
    split is rejected.
    """
    rng = np.random.default_rng(spec.seed)
    strata: dict[object, list[int]] = {}
    for i, doc in enumerate(corpus.docs):
        strata.setdefault(doc.label, []).append(i)
    parts: tuple[list[int], list[int], list[int]] = ([], [], [])
    for label in sorted(strata, key=lambda v: (v is None, v)):
        idx = np.array(strata[label], dtype=np.int64)
        rng.shuffle(idx)
        m = idx.size
        cut1 = int(round(spec.train * m))
        cut2 = int(round((spec.train + spec.dev) * m))
        parts[0].extend(idx[:cut1])
        parts[1].extend(idx[cut1:cut2])
        parts[2].extend(idx[cut2:])
    fractions = (spec.train, spec.dev, spec.test)
    names = ("train", "dev", "test")
    out = []
    for name, fraction, indices in zip(names, fractions, parts):
        if fraction > 0 and not indices:
            raise InvalidArgumentError(f"{name} fraction {fraction} yields an empty part")
        order = np.array(indices, dtype=np.int64)
        rng.shuffle(order)
        out.append(Corpus(docs=[corpus.docs[i] for i in order], domain_id=corpus.domain_id))
    return out[0], out[1], out[2]


def _domain_lexicons(spec: SynthSpec, domain: int) -> dict[str, list[str]]:
    s = max(1, round(SENTIMENT_LEXICON_FRACTION * spec.vocab_size))
    k = round(spec.shared_fraction * s)
    neutral = max(2, spec.vocab_size - 2 * s)
    n_shared_neutral = round(NEUTRAL_SHARED_FRACTION * neutral)
    lex = {}
    for pol in ("pos", "neg"):
        shared = [f"{pol}_sh_{i}" for i in range(k)]
        private = [f"{pol}_d{domain}_{i}" for i in range(s - k)]
        lex[pol] = shared + private
    lex["neu"] = [f"neu_sh_{i}" for i in range(n_shared_neutral)] + [
        f"neu_d{domain}_{i}" for i in range(neutral - n_shared_neutral)
    ]
    return lex


def synth_domains(spec: SynthSpec) -> list[Corpus]:
    """Generate per-domain corpora with controllable lexical overlap.

    Every document is generated from its true label's sentiment lexicon
    (shared + domain-private words) mixed with neutral filler; the recorded
    label is flipped with probability noise_rate. Deterministic per seed.
    """
    children = np.random.SeedSequence(spec.seed).spawn(spec.n_domains)
    lo, hi = spec.doc_length
    corpora = []
    for d in range(spec.n_domains):
        rng = np.random.default_rng(children[d])
        lex = _domain_lexicons(spec, d)
        docs = []
        for _ in range(spec.docs_per_domain):
            y = int(rng.integers(2))
            length = int(rng.integers(lo, hi + 1))
            sentiment = lex["pos"] if y == 1 else lex["neg"]
            tokens = []
            for _ in range(length):
                if rng.random() < SENTIMENT_TOKEN_RATE:
                    tokens.append(sentiment[rng.integers(len(sentiment))])
                else:
                    tokens.append(lex["neu"][rng.integers(len(lex["neu"]))])
            label = y if rng.random() >= spec.noise_rate else 1 - y
            docs.append(Document(text=" ".join(tokens), label=label))
        corpora.append(Corpus(docs=docs, domain_id=f"domain_{d}"))
    return corpora


def evaluate_accuracy(model: MlpModel, labeled: FeatureMatrix) -> float:
    """Fraction of argmax predictions matching the labels."""
    if labeled.labels is None:
        raise InvalidArgumentError("evaluation requires a labeled FeatureMatrix")
    _, logits = forward_batch(model, labeled.rows)
    return float(np.mean(np.argmax(logits, axis=1) == labeled.labels))


def mcd_accuracy_curve(
    teacher: MlpModel, labeled_target: FeatureMatrix, ns
) -> list[tuple[int, float]]:
    """Teacher accuracy on the top-n examples by MCD, for each requested n."""
    ns = list(ns)
    if not ns or any(n < 1 for n in ns) or any(b < a for a, b in zip(ns, ns[1:])):
        raise InvalidArgumentError("ns must be ascending counts >= 1")
    if labeled_target.labels is None:
        raise InvalidArgumentError("curve requires a labeled FeatureMatrix")
    scores = mcd_scores(teacher, labeled_target)
    order = np.argsort(-scores, kind="stable")
    _, logits = forward_batch(teacher, labeled_target.rows)
    correct = (np.argmax(logits, axis=1) == labeled_target.labels)[order]
    cumulative = np.cumsum(correct)
    out = []
    for n in ns:
        n_eff = min(n, len(correct))
        out.append((n, float(cumulative[n_eff - 1] / n_eff)))
    return out


def mcd_correlation_report(teacher: MlpModel, labeled_target: FeatureMatrix) -> tuple[float, float]:
    """Pearson r (and p) between per-example MCD score and teacher correctness."""
    if labeled_target.labels is None:
        raise InvalidArgumentError("correlation requires a labeled FeatureMatrix")
    scores = mcd_scores(teacher, labeled_target)
    _, logits = forward_batch(teacher, labeled_target.rows)
    correct = (np.argmax(logits, axis=1) == labeled_target.labels).astype(np.float64)
    return pearson(scores, correct)


def write_csv(path, header, rows) -> None:
    """RFC-4180 CSV with a header row, UTF-8."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def pca_export(teacher: MlpModel, target: FeatureMatrix, path) -> None:
    """CSV of 2-D PCA of the teacher's hidden representations with MCD scores."""
    hidden, logits = forward_batch(teacher, target.rows)
    preds = np.argmax(logits, axis=1)
    scores = mcd_scores(teacher, target)
    proj = pca_project(hidden, 2)
    header = ["pc1", "pc2", "mcd_score", "teacher_prediction"]
    rows = []
    for i in range(len(target)):
        rows.append([float(proj[i, 0]), float(proj[i, 1]), float(scores[i]), int(preds[i])])
    if target.labels is not None:
        header.append("label")
        for i, row in enumerate(rows):
            row.append(int(target.labels[i]))
    write_csv(path, header, rows)
