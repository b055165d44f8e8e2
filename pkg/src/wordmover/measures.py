"""Documents as normalised bags of words, and the reweighting schemes."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyCorpus, EmptyDocument, InvalidMeasure, ZeroNormWord

OPT2_FLOOR = 1e-6


@dataclass(frozen=True)
class Document:
    """Tokens plus, once resolved against a vocabulary, their bag of words.

    ``bow`` maps vocabulary row -> count and only holds in-vocabulary
    tokens; out-of-vocabulary tokens are dropped.
    """

    tokens: tuple = ()
    id: object = None
    label: str | None = None
    bow: Mapping[int, int] = field(default_factory=dict, compare=False)

    @classmethod
    def from_text(cls, text: str, table=None, **kw) -> "Document":
        doc = cls(tuple(text.lower().split()), **kw)
        return doc.resolve(table) if table is not None else doc

    def resolve(self, table) -> "Document":
        counts = Counter(i for i in map(table.index, self.tokens) if i is not None)
        return replace(self, bow=dict(counts))

    @property
    def total_count(self) -> int:
        return sum(self.bow.values())


@dataclass(frozen=True, eq=False)
class WeightedBow:
    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64).ravel()
        w = np.array(self.weights, dtype=np.float64).ravel()
        if idx.size == 0:
            raise EmptyDocument("bag of words is empty")
        if idx.size != w.size:
            raise InvalidMeasure("indices and weights differ in length")
        if np.unique(idx).size != idx.size:
            raise InvalidMeasure("bag-of-words indices must be unique")
        if not np.all(w > 0):
            raise InvalidMeasure("bag-of-words weights must be positive")
        if abs(w.sum() - 1.0) > 1e-9:
            raise InvalidMeasure(f"bag-of-words weights sum to {w.sum()!r}")
        idx.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.indices.size

    def as_dict(self) -> dict:
        return dict(zip(self.indices.tolist(), self.weights.tolist()))


def _normalized(indices, raw) -> WeightedBow:
    raw = np.asarray(raw, dtype=np.float64)
    return WeightedBow(indices, raw / raw.sum())


def build_nbow(doc: Document) -> WeightedBow:
    """Counts divided by the document's in-vocabulary length, sorted by index."""
    if not doc.bow:
        raise EmptyDocument(f"document {doc.id!r} has no in-vocabulary tokens")
    idx = np.array(sorted(doc.bow), dtype=np.int64)
    counts = np.array([doc.bow[i] for i in idx], dtype=np.float64)
    return _normalized(idx, counts)


@dataclass(frozen=True)
class IdfTable:
    doc_count: int
    df: Mapping[int, int]

    def factor(self, index: int) -> float:
        # smoothed idf; an unseen word counts as df = 0
        return math.log((1 + self.doc_count) / (1 + self.df.get(index, 0))) + 1.0


def build_idf(corpus: Sequence[Document]) -> IdfTable:
    if not corpus:
        raise EmptyCorpus("cannot build document frequencies from an empty corpus")
    df = Counter()
    for doc in corpus:
        df.update(doc.bow.keys())
    return IdfTable(len(corpus), dict(df))


def _reweight(bow: WeightedBow, factors: Iterable[float]) -> WeightedBow:
    return _normalized(bow.indices, bow.weights * np.fromiter(factors, dtype=np.float64))


def apply_tfidf(bow: WeightedBow, idf: IdfTable) -> WeightedBow:
    return _reweight(bow, (idf.factor(i) for i in bow.indices.tolist()))


def _norms_of(bow, table):
    norms = table.norms[bow.indices]
    if np.any(norms <= 0):
        bad = table.tokens[bow.indices[np.flatnonzero(norms <= 0)[0]]]
        raise ZeroNormWord(f"word {bad!r} has a zero embedding")
    return norms


def apply_wrd_weights(bow: WeightedBow, table) -> WeightedBow:
    """Scale each word's mass by its embedding norm."""
    return _reweight(bow, _norms_of(bow, table))


def apply_opt2_weights(bow: WeightedBow, table) -> WeightedBow:
    """Scale each word's mass by ``max(ln(d / |w|), 1e-6)``.

    Small-norm (rare) words gain relative mass; the floor keeps words with
    ``|w| >= d`` in the measure.
    """
    norms = _norms_of(bow, table)
    return _reweight(bow, np.maximum(np.log(table.dimension / norms), OPT2_FLOOR))


def opt1_coefficient(doc_a, doc_b, table) -> float:
    """``1 + sum over shared words of min(a, b) / |w|^2``.

    ``doc_a`` and ``doc_b`` are :class:`WeightedBow` instances or plain
    ``{index: amount}`` mappings (e.g. raw counts).
    """
    a = doc_a.as_dict() if isinstance(doc_a, WeightedBow) else doc_a
    b = doc_b.as_dict() if isinstance(doc_b, WeightedBow) else doc_b
    total = 0.0
    for i in sorted(a.keys() & b.keys()):
        sq = float(table.norms[i]) ** 2
        if sq <= 0:
            raise ZeroNormWord(f"shared word {table.tokens[i]!r} has a zero embedding")
        total += min(a[i], b[i]) / sq
    return 1.0 + total
