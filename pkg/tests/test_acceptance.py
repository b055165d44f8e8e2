"""Acceptance criteria, one test (or group) per criterion.

A per-criterion PASS/FAIL/SKIP line is printed at the end of the run by the
``pytest_terminal_summary`` hook in ``conftest.py``.
"""

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from wordmover import synthetic
from wordmover.bench import EvalConfig, evaluate, format_table, load_corpus, load_stopwords, remove_stopwords
from wordmover.bench import resolve_corpus, stratified_sample
from wordmover.embeddings import (
    EmbeddingTable,
    load_binary_word2vec,
    load_embeddings,
    load_text_embeddings,
    save_binary_word2vec,
    save_text_embeddings,
)
from wordmover.geometry import FisherMatrix, Geometry, GeometryKind, build_cost_matrix
from wordmover.geometry import cosine_cost, fisher_cosine_cost, poincare_cost
from wordmover.measures import Document, IdfTable, apply_opt2_weights, apply_tfidf, apply_wrd_weights, build_nbow
from wordmover.ot import brute_force_emd, solve_emd
from wordmover.similarity import Variant, VariantKind, document_distance


def criterion(number, title):
    return pytest.mark.criterion(number, title)


# ---------------------------------------------------------------------------
# 1. exact solver against exhaustive enumeration
# ---------------------------------------------------------------------------


def _instance(rng, trial):
    n, m = rng.integers(1, 7, size=2)
    family = trial % 4
    if family == 1:
        # weights on a coarse grid: many equal partial sums, degenerate bases
        a = rng.integers(1, 4, size=n).astype(float)
        b = rng.integers(1, 4, size=m).astype(float)
        b *= a.sum() / b.sum()
    elif family == 2:
        # some zero weights exercise pruning
        a, b = rng.random(n), rng.random(m)
        a[rng.random(n) < 0.3] = 0.0
        b[rng.random(m) < 0.3] = 0.0
        a[rng.integers(n)] += 0.5
        b[rng.integers(m)] += 0.5
    else:
        a, b = rng.random(n) + 1e-3, rng.random(m) + 1e-3
    C = rng.random((n, m)) * rng.choice([1.0, 10.0, 1000.0])
    return a / a.sum(), b / b.sum(), C


@criterion(1, "solve_emd matches brute force within 1e-9 on 1000 instances, residual <= 1e-8, < 30 s")
def test_c1_ot_optimality():
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    worst_gap = worst_residual = 0.0
    for trial in range(1000):
        a, b, C = _instance(rng, trial)
        plan = solve_emd(a, b, C)
        ref = brute_force_emd(a, b, C)
        worst_gap = max(worst_gap, abs(plan.objective - ref.objective))
        worst_residual = max(worst_residual, plan.marginal_residual(a, b))
    elapsed = time.perf_counter() - start
    print(f"c1: worst gap {worst_gap:.2e}, worst residual {worst_residual:.2e}, {elapsed:.1f} s")
    assert worst_gap <= 1e-9
    assert worst_residual <= 1e-8
    assert elapsed < 30


# ---------------------------------------------------------------------------
# 2. geometry closed forms
# ---------------------------------------------------------------------------


@criterion(2, "geometry closed forms (ln 3, cosine and Fisher cases, identity metric = cosine)")
def test_c2_poincare_ln3():
    assert abs(poincare_cost([0.0, 0.0], [0.5, 0.0]) - math.log(3)) <= 1e-9


@criterion(2, "geometry closed forms (ln 3, cosine and Fisher cases, identity metric = cosine)")
def test_c2_cosine_and_fisher_cases():
    M = FisherMatrix(np.diag([4.0, 1.0]))
    u, v = np.array([0.3, -1.2]), np.array([1.0, 0.0])
    assert abs(cosine_cost(u, u)) <= 1e-12
    assert abs(cosine_cost([1.0, 0.0], [0.0, 2.0]) - 1.0) <= 1e-12
    assert abs(fisher_cosine_cost(u, u, M)) <= 1e-12
    # M-orthogonal pair: e1^T M e2 = 0
    assert abs(fisher_cosine_cost(v, [0.0, 1.0], M) - 1.0) <= 1e-12
    assert abs(fisher_cosine_cost(v, [1.0, 1.0], M) - (1 - 4 / (2 * math.sqrt(5)))) <= 1e-12


@criterion(2, "geometry closed forms (ln 3, cosine and Fisher cases, identity metric = cosine)")
def test_c2_identity_metric_is_cosine():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        d = int(rng.integers(1, 12))
        u, v = rng.standard_normal(d), rng.standard_normal(d)
        assert abs(fisher_cosine_cost(u, v, FisherMatrix.identity(d)) - cosine_cost(u, v)) <= 1e-12


# ---------------------------------------------------------------------------
# 3. variant algebra
# ---------------------------------------------------------------------------


def _random_pairs(count=200, seed=3):
    rng = np.random.default_rng(seed)
    table = EmbeddingTable.from_arrays([f"t{i}" for i in range(60)], rng.standard_normal((60, 10)))

    def draw():
        words = rng.choice(60, size=int(rng.integers(1, 11)), replace=False)
        tokens = [f"t{w}" for w in words for _ in range(int(rng.integers(1, 5)))]
        return Document(tuple(tokens)).resolve(table)

    return table, [(draw(), draw()) for _ in range(count)]


@criterion(3, "variant algebra on 200 random pairs (Opt1 <= WMD, symmetry, identity, uniform idf)")
def test_c3_variant_algebra():
    table, pairs = _random_pairs()
    uniform = IdfTable(10, {i: 3 for i in range(len(table))})
    variants = [VariantKind(v) for v in Variant] + [VariantKind(Variant.OPT1, opt1_raw_counts=True)]
    for a, b in pairs:
        wmd = document_distance(a, b, table)
        assert document_distance(a, b, table, VariantKind(Variant.OPT1)) <= wmd
        tfidf = document_distance(a, b, table, VariantKind(Variant.WMD_TFIDF), uniform)
        assert abs(tfidf - wmd) <= 1e-10
        for v in variants:
            ab = document_distance(a, b, table, v, uniform)
            ba = document_distance(b, a, table, v, uniform)
            assert abs(ab - ba) <= 1e-10
            assert abs(document_distance(a, a, table, v, uniform)) <= 1e-12
            shuffled = Document(tuple(reversed(a.tokens))).resolve(table)
            assert abs(document_distance(a, shuffled, table, v, uniform)) <= 1e-12


# ---------------------------------------------------------------------------
# 4. reweighting examples
# ---------------------------------------------------------------------------


def _norm_table(norms, dim):
    vecs = np.zeros((len(norms), dim))
    vecs[:, 0] = norms
    return EmbeddingTable.from_arrays([f"n{i}" for i in range(len(norms))], vecs)


def _pair_bow():
    return build_nbow(Document((), bow={0: 1, 1: 1}))


@criterion(4, "reweighting examples (WRD 0.25/0.75, OPT2 2/3,1/3, TF-IDF N=4 case)")
def test_c4_wrd():
    out = apply_wrd_weights(_pair_bow(), _norm_table([1.0, 3.0], 2))
    np.testing.assert_allclose(out.weights, [0.25, 0.75], atol=1e-12, rtol=0)


@criterion(4, "reweighting examples (WRD 0.25/0.75, OPT2 2/3,1/3, TF-IDF N=4 case)")
def test_c4_opt2():
    out = apply_opt2_weights(_pair_bow(), _norm_table([3.0, 30.0], 300))
    np.testing.assert_allclose(out.weights, [2 / 3, 1 / 3], atol=1e-12, rtol=0)


@criterion(4, "reweighting examples (WRD 0.25/0.75, OPT2 2/3,1/3, TF-IDF N=4 case)")
def test_c4_tfidf():
    # smoothed idf, N = 4: df 1 vs df 4; reference value from the closed form
    fa, fb = math.log(5 / 2) + 1, math.log(5 / 5) + 1
    expected = fa / (fa + fb)
    out = apply_tfidf(_pair_bow(), IdfTable(4, {0: 1, 1: 4}))
    assert abs(out.weights[0] - expected) <= 1e-4
    assert abs(out.weights[1] - (1 - expected)) <= 1e-4


# ---------------------------------------------------------------------------
# 5. synthetic benchmark
# ---------------------------------------------------------------------------


def _check_separable(table, corpus):
    """Every inter-class distance exceeds every intra-class one.

    Bound first: if the largest within-cluster word cost is below the smallest
    cross-cluster word cost, every bag of words across classes pays more per
    unit of mass than any bag within a class.  Then solve sampled document
    pairs exactly by enumeration.
    """
    cls = np.array([int(t[1:].split("w")[0]) for t in table.tokens])
    idx = np.arange(len(table))
    same = cls[:, None] == cls[None, :]
    for geom in (Geometry(), Geometry(GeometryKind.COSINE)):
        C = build_cost_matrix(idx, idx, table, geom).entries
        assert C[same].max() < C[~same].min(), geom.name

    rng = np.random.default_rng(0)
    docs = corpus.documents
    intra, inter = [], []
    for _ in range(60):
        i, j = rng.choice(len(docs), size=2, replace=False)
        a, b = build_nbow(docs[i]), build_nbow(docs[j])
        cost = build_cost_matrix(a.indices, b.indices, table).entries
        value = brute_force_emd(a.weights, b.weights, cost).objective
        (intra if docs[i].label == docs[j].label else inter).append(value)
    assert intra and inter
    assert max(intra) < min(inter)


def _report_bytes(reports):
    blob = format_table(reports) + "\n"
    blob += "".join(json.dumps(rec) + "\n" for r in reports for rec in r.records())
    return blob.encode()


@criterion(5, "synthetic 3-class benchmark: error <= 5% for every variant, same seed -> identical report, < 60 s")
def test_c5_synthetic_benchmark():
    start = time.perf_counter()
    table = synthetic.clustered_embeddings(n_classes=3, words_per_class=8, dim=8, noise=0.02, seed=0)
    corpus = resolve_corpus(synthetic.clustered_corpus(n_classes=3, docs_per_class=30, seed=1), table)
    assert len(corpus) == 90
    _check_separable(table, corpus)

    def run():
        reports = []
        for v in Variant:
            reports.append(evaluate(corpus, table, EvalConfig(seed=11, variant=VariantKind(v))))
        return reports

    first = run()
    for r in first:
        assert r.mean <= 5.0, (r.variant, r.per_fold_errors)
    second = run()
    assert _report_bytes(first) == _report_bytes(second)
    elapsed = time.perf_counter() - start
    print(f"c5: {elapsed:.1f} s")
    assert elapsed < 60


# ---------------------------------------------------------------------------
# 6. published numbers (needs user-supplied data)
# ---------------------------------------------------------------------------

# error percent, 5-fold cross-validation, stop words removed except on twitter
PUBLISHED = {
    "twitter": {"wmd": 29.4, "wmd-tfidf": 29.2, "wrd": 28.7},
    "classic": {"wmd": 5.7, "wmd-tfidf": 4.9, "wrd": 4.1},
    "bbcsport": {"wmd": 3.4, "wmd-tfidf": 2.7, "wrd": 3.6},
}
# dataset sizes after subsampling
SUBSAMPLE = {"twitter": 3115, "classic": 2000, "bbcsport": 737}

DATA_DIR = os.environ.get("WORDMOVER_REFERENCE_DATA")
VECTORS = os.environ.get("WORDMOVER_REFERENCE_EMBEDDINGS")


@criterion(6, "published error rates within 3.0 points (conditional on user-supplied data)")
@pytest.mark.skipif(not (DATA_DIR and VECTORS), reason="set WORDMOVER_REFERENCE_DATA and WORDMOVER_REFERENCE_EMBEDDINGS")
@pytest.mark.parametrize("dataset", sorted(PUBLISHED))
def test_c6_published_numbers(dataset):
    path = Path(DATA_DIR) / f"{dataset}.tsv"
    if not path.is_file():
        pytest.skip(f"{path} not supplied")
    table = load_embeddings(VECTORS)
    corpus = load_corpus(path, dataset)
    if dataset != "twitter":
        corpus = remove_stopwords(corpus, load_stopwords())
    corpus = resolve_corpus(corpus, table)
    corpus = stratified_sample(corpus, SUBSAMPLE[dataset], seed=0)
    for variant, published in PUBLISHED[dataset].items():
        report = evaluate(corpus, table, EvalConfig(variant=VariantKind(Variant(variant)), workers=os.cpu_count() or 1))
        print(f"c6: {dataset} {variant}: {report.summary()} (published {published})")
        assert abs(report.mean - published) <= 3.0


# ---------------------------------------------------------------------------
# 7. embedding file round trips
# ---------------------------------------------------------------------------


def _random_table(rng, float32):
    n = int(rng.integers(1, 15))
    dim = int(rng.integers(1, 9))
    alphabet = list("abcdefghijklmnopqrstuvwxyz0123456789_'-") + ["é", "ß", "中"]
    tokens = set()
    while len(tokens) < n:
        tokens.add("".join(rng.choice(alphabet, size=int(rng.integers(1, 9)))))
    vecs = rng.standard_normal((n, dim)) * 10.0 ** rng.integers(-6, 7, size=(n, 1))
    if float32:
        vecs = vecs.astype(np.float32).astype(np.float64)
    return EmbeddingTable.from_arrays(sorted(tokens), vecs)


@criterion(7, "1000 random tables round-trip bit-identically through text and binary formats")
def test_c7_round_trips(tmp_path):
    rng = np.random.default_rng(7)
    for k in range(1000):
        text_table = _random_table(rng, float32=False)
        save_text_embeddings(text_table, tmp_path / "e.txt", header=bool(k % 2))
        back = load_text_embeddings(tmp_path / "e.txt")
        assert list(back.tokens) == list(text_table.tokens)
        assert back.vectors.tobytes() == text_table.vectors.tobytes()

        bin_table = _random_table(rng, float32=True)
        save_binary_word2vec(bin_table, tmp_path / "e.bin")
        back = load_binary_word2vec(tmp_path / "e.bin")
        assert list(back.tokens) == list(bin_table.tokens)
        assert back.vectors.tobytes() == bin_table.vectors.tobytes()
