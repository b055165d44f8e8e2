"""Toy corpora with class-specific word clusters, for smoke tests and demos."""

from __future__ import annotations

import numpy as np

from .bench import Corpus
from .embeddings import EmbeddingTable
from .measures import Document


def clustered_embeddings(n_classes=3, words_per_class=8, dim=8, radius=0.5, noise=0.02, seed=0):
    """Words ``c<class>w<k>`` scattered around ``radius * e_class``.

    Clusters sit on orthogonal axes, so for small ``noise`` they are nearly
    orthogonal and every vector lies well inside the unit ball.
    """
    if dim < n_classes:
        raise ValueError("need at least one dimension per class")
    rng = np.random.default_rng(seed)
    tokens, rows = [], []
    for c in range(n_classes):
        centre = np.zeros(dim)
        centre[c] = radius
        for k in range(words_per_class):
            tokens.append(f"c{c}w{k}")
            rows.append(centre + noise * rng.standard_normal(dim))
    return EmbeddingTable.from_arrays(tokens, np.array(rows))


def clustered_corpus(n_classes=3, docs_per_class=30, words_per_class=8, min_unique=3, max_unique=6,
                     max_repeat=3, seed=0, name="synthetic") -> Corpus:
    """Documents drawing ``min_unique..max_unique`` distinct words from their class cluster."""
    rng = np.random.default_rng(seed)
    docs = []
    for c in range(n_classes):
        for n in range(docs_per_class):
            size = int(rng.integers(min_unique, max_unique + 1))
            words = rng.choice(words_per_class, size=size, replace=False)
            tokens = []
            for w in words:
                tokens.extend([f"c{c}w{w}"] * int(rng.integers(1, max_repeat + 1)))
            rng.shuffle(tokens)
            docs.append(Document(tuple(tokens), id=f"{name}:{c}:{n}", label=f"class{c}"))
    return Corpus(docs, name)


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            fh.write(f"{doc.label}\t{' '.join(doc.tokens)}\n")
