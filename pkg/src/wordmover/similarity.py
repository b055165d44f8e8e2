"""Document distances: vanilla WMD and its reweighted variants."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingIdf, PairError, WordMoverError
from .geometry import Geometry, GeometryKind, build_cost_matrix
from .measures import (
    Document,
    apply_opt2_weights,
    apply_tfidf,
    apply_wrd_weights,
    build_nbow,
    opt1_coefficient,
)
from .ot import solve_emd


class Variant(str, enum.Enum):
    WMD = "wmd"
    WMD_TFIDF = "wmd-tfidf"
    WRD = "wrd"
    OPT1 = "opt1"
    OPT2 = "opt2"


_COSINE = Geometry(GeometryKind.COSINE)


@dataclass(frozen=True)
class VariantKind:
    """A distance variant and the ground geometry it runs in.

    WRD is defined with the cosine cost, so its geometry is always cosine
    whatever is passed in.
    """

    variant: Variant = Variant.WMD
    geometry: Geometry = field(default_factory=Geometry)
    opt1_raw_counts: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.WRD:
            object.__setattr__(self, "geometry", _COSINE)

    @property
    def needs_idf(self) -> bool:
        return self.variant is Variant.WMD_TFIDF

    @property
    def label(self) -> str:
        return self.variant.value


@dataclass(frozen=True, eq=False)
class _Prepared:
    bow: object
    counts: dict


def _prepare(doc: Document, table, variant: VariantKind, idf) -> _Prepared:
    if not doc.bow and doc.tokens:
        doc = doc.resolve(table)
    bow = build_nbow(doc)
    v = variant.variant
    if v is Variant.WMD_TFIDF:
        if idf is None:
            raise MissingIdf("the wmd-tfidf variant needs document frequencies")
        bow = apply_tfidf(bow, idf)
    elif v is Variant.WRD:
        bow = apply_wrd_weights(bow, table)
    elif v is Variant.OPT2:
        bow = apply_opt2_weights(bow, table)
    return _Prepared(bow, dict(doc.bow))


def _distance(pa: _Prepared, pb: _Prepared, table, variant: VariantKind) -> float:
    a, b = pa.bow, pb.bow
    if a.indices.size == b.indices.size and np.array_equal(a.indices, b.indices) and np.array_equal(
        a.weights, b.weights
    ):
        return 0.0
    cost = build_cost_matrix(a.indices, b.indices, table, variant.geometry)
    value = solve_emd(a.weights, b.weights, cost).objective
    if variant.variant is Variant.OPT1:
        if variant.opt1_raw_counts:
            value /= opt1_coefficient(pa.counts, pb.counts, table)
        else:
            value /= opt1_coefficient(a, b, table)
    return value


def document_distance(a: Document, b: Document, table, variant: VariantKind = VariantKind(), idf=None) -> float:
    """Distance between two documents under ``variant``.

    Documents that have not been resolved against ``table`` are resolved
    on the fly.  ``idf`` is required for the TF-IDF variant and ignored
    otherwise.
    """
    return _distance(_prepare(a, table, variant, idf), _prepare(b, table, variant, idf), table, variant)


def distance_matrix(
    docs_a,
    docs_b=None,
    table=None,
    variant: VariantKind = VariantKind(),
    idf=None,
    *,
    on_error: str = "fail-fast",
    workers: int = 1,
) -> np.ndarray:
    """All pairwise distances between ``docs_a`` and ``docs_b``.

    With ``docs_b`` omitted (or the very same list) only the upper triangle is
    solved and mirrored, so the result is exactly symmetric with a zero
    diagonal.  ``on_error="skip"`` stores NaN for failing pairs instead of
    raising :class:`PairError`.
    """
    if on_error not in ("fail-fast", "skip"):
        raise ValueError(f"unknown error policy {on_error!r}")
    if table is None:
        raise TypeError("an embedding table is required")
    same = docs_b is None or docs_b is docs_a
    docs_b = docs_a if same else docs_b

    def prep(docs, side):
        out = []
        for k, d in enumerate(docs):
            try:
                out.append(_prepare(d, table, variant, idf))
            except WordMoverError as exc:
                if on_error == "fail-fast":
                    raise PairError(*((k, None) if side == 0 else (None, k)), exc) from exc
                out.append(None)
        return out

    pa = prep(docs_a, 0)
    pb = pa if same else prep(docs_b, 1)
    D = np.zeros((len(pa), len(pb)))

    def row(i):
        start = i + 1 if same else 0
        vals = np.full(len(pb), np.nan)
        for j in range(start, len(pb)):
            if pa[i] is None or pb[j] is None:
                continue
            try:
                vals[j] = _distance(pa[i], pb[j], table, variant)
            except WordMoverError as exc:
                if on_error == "fail-fast":
                    raise PairError(i, j, exc) from exc
        return i, start, vals

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(row, range(len(pa))))
    else:
        results = [row(i) for i in range(len(pa))]
    for i, start, vals in results:
        D[i, start:] = vals[start:]
    if same:
        iu = np.triu_indices(len(pa), k=1)
        D[(iu[1], iu[0])] = D[iu]
        for i, p in enumerate(pa):
            D[i, i] = 0.0 if p is not None else np.nan
    return D
