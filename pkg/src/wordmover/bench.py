"""kNN document classification with per-split choice of k.

Protocol: stratified folds (or one predefined train/test split); inside each
training portion a stratified hold-out picks k from ``[k_min, k_max]``; the
chosen k then classifies the test portion against the whole training
portion.  Document frequencies for TF-IDF come from the training portion
only.  All randomness is derived from ``EvalConfig.seed``.
"""

from __future__ import annotations

import logging
import math
import statistics
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    EmptyCorpus,
    InsufficientClassSize,
    KTooLarge,
    MalformedLine,
    WordMoverError,
)
from .measures import Document, build_idf
from .similarity import VariantKind, distance_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Corpus:
    documents: tuple
    name: str = "corpus"
    dropped: int = 0

    def __post_init__(self):
        object.__setattr__(self, "documents", tuple(self.documents))

    def __len__(self):
        return len(self.documents)

    @property
    def labels(self) -> list:
        return [d.label for d in self.documents]

    @property
    def label_set(self) -> tuple:
        return tuple(sorted(set(self.labels)))


def load_corpus(path, name: str | None = None) -> Corpus:
    """One ``label<TAB>text`` document per line; text is lowercased and split on whitespace."""
    path = Path(path)
    name = name or path.stem
    docs = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise MalformedLine(f"{path}:{lineno}: expected 'label<TAB>text'", line=lineno)
        label, text = line.split("\t", 1)
        docs.append(Document(tuple(text.lower().split()), id=f"{name}:{lineno}", label=label.strip()))
    if not docs:
        raise EmptyCorpus(f"{path}: no documents")
    return Corpus(docs, name)


def load_stopwords(path=None) -> frozenset:
    """Stop words, one per line; without ``path`` the bundled English list."""
    if path is None:
        text = resources.files("wordmover").joinpath("data/stopwords_en.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def remove_stopwords(corpus: Corpus, stopwords) -> Corpus:
    if not stopwords:
        return corpus
    kept, dropped = [], 0
    for doc in corpus.documents:
        tokens = tuple(t for t in doc.tokens if t not in stopwords)
        if tokens:
            kept.append(replace(doc, tokens=tokens, bow={}))
        else:
            dropped += 1
    if dropped:
        log.info("%s: dropped %d document(s) made empty by stop-word removal", corpus.name, dropped)
    return Corpus(kept, corpus.name, corpus.dropped + dropped)


def resolve_corpus(corpus: Corpus, table) -> Corpus:
    """Attach bags of words; documents with no in-vocabulary token are dropped."""
    kept, dropped = [], 0
    for doc in corpus.documents:
        doc = doc.resolve(table)
        if doc.bow:
            kept.append(doc)
        else:
            dropped += 1
    if dropped:
        log.warning("%s: dropped %d document(s) with no in-vocabulary tokens", corpus.name, dropped)
    return Corpus(kept, corpus.name, corpus.dropped + dropped)


def _per_class(labels) -> dict:
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    return {lab: np.array(groups[lab]) for lab in sorted(groups)}


def stratified_sample(corpus: Corpus, size: int, seed: int) -> Corpus:
    """Keep ``size`` documents with class proportions preserved (largest remainder)."""
    if size >= len(corpus):
        return corpus
    groups = _per_class(corpus.labels)
    quotas = {lab: size * len(ix) / len(corpus) for lab, ix in groups.items()}
    take = {lab: math.floor(q) for lab, q in quotas.items()}
    order = sorted(groups, key=lambda lab: (-(quotas[lab] - take[lab]), lab))
    for lab in order[: size - sum(take.values())]:
        take[lab] += 1
    rng = np.random.default_rng(seed)
    keep = []
    for lab, ix in groups.items():
        keep.extend(rng.permutation(ix)[: take[lab]].tolist())
    return Corpus([corpus.documents[i] for i in sorted(keep)], corpus.name, corpus.dropped)


# ---------------------------------------------------------------------------
# kNN
# ---------------------------------------------------------------------------


def knn_predict(train_labels: Sequence, distances, k: int):
    """Majority label among the ``k`` nearest training documents.

    Equal distances rank by training index.  A tie in votes goes to the
    label with the smaller summed distance, then to the smallest label.
    """
    d = np.asarray(distances, dtype=np.float64)
    if k < 1 or k > d.size:
        raise KTooLarge(f"k={k} with {d.size} training documents")
    if len(train_labels) != d.size:
        raise ValueError("one distance per training document is required")
    nearest = np.argsort(d, kind="stable")[:k]
    votes, spread = Counter(), Counter()
    for i in nearest.tolist():
        lab = train_labels[i]
        votes[lab] += 1
        spread[lab] += d[i]
    return min(votes, key=lambda lab: (-votes[lab], spread[lab], lab))


def error_percent(predicted, truth) -> float:
    wrong = sum(p != t for p, t in zip(predicted, truth))
    return 100.0 * wrong / len(truth)


def validation_errors(val_dist, train_labels, val_labels, k_range) -> dict:
    """Validation error (percent) for every k in ``k_range``; rows of ``val_dist`` are queries."""
    val_dist = np.asarray(val_dist)
    out = {}
    for k in k_range:
        preds = [knn_predict(train_labels, row, k) for row in val_dist]
        out[k] = error_percent(preds, val_labels)
    return out


def select_k(val_dist, train_labels, val_labels, k_range) -> int:
    """k with the lowest validation error, smallest k on ties."""
    errs = validation_errors(val_dist, train_labels, val_labels, k_range)
    return min(errs, key=lambda k: (errs[k], k))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalConfig:
    k_min: int = 1
    k_max: int = 20
    folds: int = 5
    val_fraction: float = 0.2
    seed: int = 0
    variant: VariantKind = field(default_factory=VariantKind)
    global_k: bool = False
    on_error: str = "fail-fast"
    workers: int = 1

    def __post_init__(self):
        if not 1 <= self.k_min <= self.k_max:
            raise ConfigError(f"need 1 <= k_min <= k_max, got {self.k_min}, {self.k_max}")
        if self.folds < 2:
            raise ConfigError("at least 2 folds are required")
        if not 0 < self.val_fraction < 1:
            raise ConfigError("val_fraction must lie strictly between 0 and 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a non-negative 64-bit integer")
        if self.on_error not in ("fail-fast", "skip"):
            raise ConfigError(f"unknown error policy {self.on_error!r}")


@dataclass(frozen=True)
class EvalReport:
    dataset: str
    variant: str
    geometry: str
    per_fold_errors: tuple
    chosen_k: tuple
    folds: tuple
    failed_folds: tuple = ()
    predefined_split: bool = False

    @property
    def mean(self) -> float:
        return statistics.fmean(self.per_fold_errors) if self.per_fold_errors else math.nan

    @property
    def std(self) -> float | None:
        if self.predefined_split or len(self.per_fold_errors) < 2:
            return None
        return statistics.stdev(self.per_fold_errors)

    def summary(self) -> str:
        if not self.per_fold_errors:
            return "failed"
        if self.std is None:
            return f"{self.mean:.1f}"
        return f"{self.mean:.1f} ± {self.std:.1f}"

    def records(self) -> list:
        return [
            {
                "dataset": self.dataset,
                "variant": self.variant,
                "geometry": self.geometry,
                "fold": fold,
                "chosen_k": k,
                "error_percent": err,
            }
            for fold, k, err in zip(self.folds, self.chosen_k, self.per_fold_errors)
        ]


def stratified_folds(labels, folds: int, rng) -> list:
    """Test-index arrays for ``folds`` folds; each class is dealt round-robin."""
    assignment = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for ix in _per_class(labels).values():
        shuffled = rng.permutation(ix)
        assignment[shuffled] = (offset + np.arange(shuffled.size)) % folds
        offset += shuffled.size
    return [np.flatnonzero(assignment == f) for f in range(folds)]


def stratified_holdout(labels, indices, fraction: float, rng):
    """Split ``indices`` into (fit, held-out), per class, keeping one fit document per class."""
    indices = np.asarray(indices)
    fit, held = [], []
    for ix in _per_class([labels[i] for i in indices]).values():
        members = rng.permutation(indices[ix])
        n_held = min(int(math.floor(fraction * members.size + 0.5)), members.size - 1)
        held.extend(members[:n_held].tolist())
        fit.extend(members[n_held:].tolist())
    return np.array(sorted(fit), dtype=np.int64), np.array(sorted(held), dtype=np.int64)


def corpus_from_split(train: Corpus, test: Corpus, name: str | None = None):
    """Concatenate a predefined train/test pair; returns the corpus and its split."""
    docs = list(train.documents) + list(test.documents)
    split = (np.arange(len(train)), np.arange(len(train), len(docs)))
    return Corpus(docs, name or train.name, train.dropped + test.dropped), split


@dataclass
class _Fold:
    index: int
    train: np.ndarray
    test: np.ndarray
    fit_pos: np.ndarray = None
    held_pos: np.ndarray = None
    D_train: np.ndarray = None
    D_test: np.ndarray = None
    curve: dict = None


def evaluate(corpus: Corpus, table, config: EvalConfig = EvalConfig(), split=None) -> EvalReport:
    """Run the kNN protocol and return test errors per fold.

    ``split`` is an optional ``(train_indices, test_indices)`` pair into
    ``corpus.documents``; when given, the fold count is ignored.
    """
    if any(not d.bow for d in corpus.documents):
        if split is not None:
            raise ConfigError("resolve the corpus before passing a predefined split")
        corpus = resolve_corpus(corpus, table)
    docs = list(corpus.documents)
    labels = [d.label for d in docs]
    if len(docs) < 2:
        raise EmptyCorpus(f"{corpus.name}: need at least two documents")
    if len(set(labels)) < 2:
        raise ConfigError(f"{corpus.name}: need at least two classes")
    variant = config.variant

    if split is not None:
        train, test = (np.sort(np.asarray(s, dtype=np.int64)) for s in split)
        folds = [_Fold(0, train, test)]
    else:
        small = {lab: n for lab, n in Counter(labels).items() if n < config.folds}
        if small:
            raise InsufficientClassSize(f"classes with fewer documents than folds: {sorted(small.items())}")
        tests = stratified_folds(labels, config.folds, np.random.default_rng(config.seed))
        everything = np.arange(len(docs))
        folds = [_Fold(f, np.setdiff1d(everything, t), t) for f, t in enumerate(tests)]

    def matrix(rows, cols=None, idf=None):
        a = [docs[i] for i in rows]
        b = None if cols is None else [docs[i] for i in cols]
        return distance_matrix(
            a, b, table, variant, idf, on_error=config.on_error, workers=config.workers
        )

    full = None
    if not variant.needs_idf and split is None:
        # without corpus statistics the distances do not depend on the fold
        full = matrix(np.arange(len(docs)))

    failed = []
    ready = []
    for fold in folds:
        try:
            rng = np.random.default_rng([config.seed, fold.index])
            fit, held = stratified_holdout(labels, fold.train, config.val_fraction, rng)
            pos = {int(g): p for p, g in enumerate(fold.train)}
            fold.fit_pos = np.array([pos[int(g)] for g in fit], dtype=np.int64)
            fold.held_pos = np.array([pos[int(g)] for g in held], dtype=np.int64)
            if full is not None:
                fold.D_train = full[np.ix_(fold.train, fold.train)]
                fold.D_test = full[np.ix_(fold.test, fold.train)]
            else:
                idf = build_idf([docs[i] for i in fold.train]) if variant.needs_idf else None
                fold.D_train = matrix(fold.train, idf=idf)
                fold.D_test = matrix(fold.test, fold.train, idf=idf)
            if np.isnan(fold.D_train).any() or np.isnan(fold.D_test).any():
                raise WordMoverError(f"fold {fold.index}: some document pairs failed")

            k_hi = min(config.k_max, fold.fit_pos.size)
            if config.k_min > k_hi:
                raise KTooLarge(f"fold {fold.index}: k_min={config.k_min} exceeds {k_hi} fitting documents")
            fit_labels = [labels[fold.train[p]] for p in fold.fit_pos]
            held_labels = [labels[fold.train[p]] for p in fold.held_pos]
            if held_labels:
                fold.curve = validation_errors(
                    fold.D_train[np.ix_(fold.held_pos, fold.fit_pos)],
                    fit_labels,
                    held_labels,
                    range(config.k_min, k_hi + 1),
                )
            else:
                log.warning("fold %d: no held-out documents, using k=%d", fold.index, config.k_min)
                fold.curve = {config.k_min: 0.0}
            ready.append(fold)
        except WordMoverError as exc:
            if config.on_error == "fail-fast":
                raise
            log.error("fold %d failed: %s", fold.index, exc)
            failed.append(fold.index)

    if config.global_k and ready:
        common = set.intersection(*(set(f.curve) for f in ready))
        overall = {k: statistics.fmean(f.curve[k] for f in ready) for k in common}
        best = min(overall, key=lambda k: (overall[k], k))
        chosen = {f.index: best for f in ready}
    else:
        chosen = {f.index: min(f.curve, key=lambda k: (f.curve[k], k)) for f in ready}

    errors, ks, ids = [], [], []
    for fold in ready:
        k = chosen[fold.index]
        train_labels = [labels[g] for g in fold.train]
        preds = [knn_predict(train_labels, row, k) for row in fold.D_test]
        errors.append(error_percent(preds, [labels[g] for g in fold.test]))
        ks.append(k)
        ids.append(fold.index)

    return EvalReport(
        dataset=corpus.name,
        variant=variant.label,
        geometry=variant.geometry.name,
        per_fold_errors=tuple(errors),
        chosen_k=tuple(ks),
        folds=tuple(ids),
        failed_folds=tuple(failed),
        predefined_split=split is not None,
    )


def format_table(reports: Sequence[EvalReport]) -> str:
    """Variants as rows, datasets as columns, cells like ``29.4 ± 1.7``."""
    datasets = list(dict.fromkeys(r.dataset for r in reports))
    rows = list(dict.fromkeys((r.variant, r.geometry) for r in reports))
    cell = {(r.variant, r.geometry, r.dataset): r.summary() for r in reports}
    header = ["variant", "geometry"] + datasets
    body = [[v, g] + [cell.get((v, g, d), "") for d in datasets] for v, g in rows]
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    def fmt(row):
        return "  ".join(str(x).ljust(w) for x, w in zip(row, widths)).rstrip()

    lines = [fmt(header), fmt(["-" * w for w in widths])] + [fmt(r) for r in body]
    return "\n".join(lines)
