"""Raw text to tf-idf unigram/bigram features, plus per-domain term distributions."""
from __future__ import annotations

import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

DEFAULT_VOCAB_SIZE = 10_000
# Additive smoothing for term distributions; keeps KL/Renyi finite when a
# term never occurs in one domain.
TERM_SMOOTHING = 1e-10

VOCAB_FORMAT_VERSION = 1


@dataclass
class Document:
    text: str
    label: int | None = None

    def __post_init__(self):
        if self.label is not None and self.label not in (0, 1):
            raise InvalidArgumentError(f"label must be 0, 1 or None, got {self.label!r}")


@dataclass
class Corpus:
    """A sequence of documents with optional binary labels, tagged by domain."""

    docs: list[Document]
    domain_id: str = ""

    def __len__(self) -> int:
        return len(self.docs)

    def texts(self) -> list[str]:
        return [d.text for d in self.docs]

    def labels(self) -> np.ndarray | None:
        """Label array if every document is labeled, else None."""
        if any(d.label is None for d in self.docs):
            return None
        return np.array([d.label for d in self.docs], dtype=np.int64)


@dataclass
class SparseVector:
    """Sparse row: strictly increasing indices < dim, nonzero finite values."""

    dim: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.indices.shape != self.values.shape or self.indices.ndim != 1:
            raise InvalidArgumentError("indices and values must be aligned 1-D arrays")
        if self.indices.size:
            if not np.all(np.diff(self.indices) > 0):
                raise InvalidArgumentError("indices must be strictly increasing")
            if self.indices[0] < 0 or self.indices[-1] >= self.dim:
                raise InvalidArgumentError("indices out of range")
            if not np.all(np.isfinite(self.values)) or np.any(self.values == 0.0):
                raise InvalidArgumentError("values must be nonzero and finite")

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out


@dataclass
class FeatureMatrix:
    """Uniform-dimension sparse rows with optional aligned labels."""

    rows: list[SparseVector]
    labels: np.ndarray | None = None
    domain_id: str = ""

    def __post_init__(self):
        dims = {r.dim for r in self.rows}
        if len(dims) > 1:
            raise InvalidArgumentError(f"rows have mixed dims: {sorted(dims)}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if len(self.labels) != len(self.rows):
                raise InvalidArgumentError("labels length must equal row count")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def dim(self) -> int:
        return self.rows[0].dim if self.rows else 0

    def subset(self, indices) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        labels = self.labels[idx] if self.labels is not None else None
        return FeatureMatrix([self.rows[i] for i in idx], labels, self.domain_id)


def _strip_edge_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip leading/trailing punctuation."""
    tokens = []
    for raw in text.lower().split():
        tok = _strip_edge_punct(raw)
        if tok:
            tokens.append(tok)
    return tokens


def _doc_ngrams(tokens: list[str]) -> list[str]:
    """Unigrams plus adjacent space-joined bigrams, in document order."""
    grams = list(tokens)
    grams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return grams


@dataclass
class Vocabulary:
    """Ordered n-gram -> index map with document frequencies and idf values."""

    entries: dict[str, int]
    doc_freq: np.ndarray
    n_docs: int
    idf: np.ndarray = field(init=False)

    def __post_init__(self):
        self.doc_freq = np.asarray(self.doc_freq, dtype=np.int64)
        if len(self.entries) != self.doc_freq.size:
            raise InvalidArgumentError("entries and doc_freq lengths differ")
        if np.any(self.doc_freq < 1):
            raise InvalidArgumentError("doc_freq must be >= 1 for every entry")
        self.idf = np.log((1.0 + self.n_docs) / (1.0 + self.doc_freq)) + 1.0

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, ngram: str) -> bool:
        return ngram in self.entries

    def to_json_dict(self) -> dict:
        items = sorted(self.entries.items(), key=lambda kv: kv[1])
        return {
            "version": VOCAB_FORMAT_VERSION,
            "n_docs": self.n_docs,
            "entries": [[ngram, int(self.doc_freq[idx])] for ngram, idx in items],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Vocabulary":
        if doc.get("version") != VOCAB_FORMAT_VERSION:
            raise InvalidArgumentError(f"unsupported vocabulary version: {doc.get('version')!r}")
        entries = {ngram: i for i, (ngram, _) in enumerate(doc["entries"])}
        doc_freq = np.array([df for _, df in doc["entries"]], dtype=np.int64)
        return cls(entries=entries, doc_freq=doc_freq, n_docs=int(doc["n_docs"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, ensure_ascii=False, sort_keys=True)

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def build_vocabulary(corpus: Corpus, max_size: int = DEFAULT_VOCAB_SIZE) -> Vocabulary:
    """Fit a capped unigram/bigram vocabulary on a corpus.

    Candidates are ranked by total frequency (ties broken lexicographically)
    and the top max_size get indices in that order. idf_w = ln((1+N)/(1+df_w)) + 1.
    """
    if len(corpus) == 0:
        raise InvalidArgumentError("corpus is empty")
    if max_size < 1:
        raise InvalidArgumentError(f"max_size must be >= 1, got {max_size}")
    totals: Counter[str] = Counter()
    doc_freq: Counter[str] = Counter()
    for doc in corpus.docs:
        grams = _doc_ngrams(tokenize(doc.text))
        totals.update(grams)
        doc_freq.update(set(grams))
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    entries = {ngram: i for i, (ngram, _) in enumerate(ranked)}
    df = np.array([doc_freq[ngram] for ngram, _ in ranked], dtype=np.int64)
    return Vocabulary(entries=entries, doc_freq=df, n_docs=len(corpus))


def featurize(corpus: Corpus, vocab: Vocabulary) -> FeatureMatrix:
    """tf-idf rows: count(w) * idf_w per in-vocab n-gram, then L2-normalized."""
    rows = []
    dim = len(vocab)
    for doc in corpus.docs:
        counts: Counter[int] = Counter()
        for gram in _doc_ngrams(tokenize(doc.text)):
            idx = vocab.entries.get(gram)
            if idx is not None:
                counts[idx] += 1
        if counts:
            idx_arr = np.array(sorted(counts), dtype=np.int64)
            vals = np.array([counts[i] for i in idx_arr], dtype=np.float64) * vocab.idf[idx_arr]
            norm = np.linalg.norm(vals)
            if norm > 0:
                vals = vals / norm
            rows.append(SparseVector(dim, idx_arr, vals))
        else:
            rows.append(SparseVector(dim, np.empty(0, dtype=np.int64), np.empty(0)))
    return FeatureMatrix(rows=rows, labels=corpus.labels(), domain_id=corpus.domain_id)


def term_distribution(
    corpus: Corpus, vocab: Vocabulary, smoothing: float = TERM_SMOOTHING
) -> np.ndarray:
    """Smoothed relative frequency of each vocabulary n-gram across the corpus.

    The vocabulary should be fitted on the pooled domains being compared so
    distributions share a common support. Output is strictly positive and
    sums to 1.
    """
    counts = np.zeros(len(vocab))
    for doc in corpus.docs:
        for gram in _doc_ngrams(tokenize(doc.text)):
            idx = vocab.entries.get(gram)
            if idx is not None:
                counts[idx] += 1.0
    counts += smoothing
    return counts / counts.sum()


def merge_corpora(corpora, domain_id: str = "pooled") -> Corpus:
    """Concatenate corpora into one corpus (used for pooled vocabularies)."""
    docs = [doc for corpus in corpora for doc in corpus.docs]
    return Corpus(docs=docs, domain_id=domain_id)
