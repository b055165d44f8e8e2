"""Benchmark the Euclidean variants on real corpora and compare with reference errors.

Needs user-supplied data: a directory of ``<dataset>.tsv`` files
(``label<TAB>text``) and 300-d word2vec vectors in the binary format.

    python scripts/reproduce_published.py --data DIR --embeddings GoogleNews-vectors-negative300.bin
"""

import argparse
import os
import time
from pathlib import Path

from wordmover.bench import (
    EvalConfig,
    evaluate,
    format_table,
    load_corpus,
    load_stopwords,
    remove_stopwords,
    resolve_corpus,
    stratified_sample,
)
from wordmover.embeddings import load_embeddings
from wordmover.similarity import Variant, VariantKind

# mean error percent under 5-fold cross-validation
REFERENCE = {
    "twitter": {"wmd": 29.4, "wmd-tfidf": 29.2, "wrd": 28.7, "opt1": 29.6, "opt2": 29.6},
    "amazon": {"wmd": 9.7, "wmd-tfidf": 9.0, "wrd": 7.2, "opt1": 20.7, "opt2": 10.1},
    "classic": {"wmd": 5.7, "wmd-tfidf": 4.9, "wrd": 4.1, "opt1": 15.2, "opt2": 5.8},
    "bbcsport": {"wmd": 3.4, "wmd-tfidf": 2.7, "wrd": 3.6, "opt1": 4.1, "opt2": 2.6},
}
SUBSAMPLE = {"twitter": 3115, "amazon": 1500, "classic": 2000, "bbcsport": 737}
KEEP_STOPWORDS = {"twitter"}


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--datasets", nargs="+", default=sorted(REFERENCE))
    p.add_argument("--variants", nargs="+", default=["wmd", "wmd-tfidf", "wrd"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    args = p.parse_args()

    table = load_embeddings(args.embeddings)
    stop = load_stopwords()
    reports = []
    for name in args.datasets:
        path = args.data / f"{name}.tsv"
        if not path.is_file():
            print(f"skipping {name}: {path} not found")
            continue
        corpus = load_corpus(path, name)
        if name not in KEEP_STOPWORDS:
            corpus = remove_stopwords(corpus, stop)
        corpus = stratified_sample(resolve_corpus(corpus, table), SUBSAMPLE.get(name, len(corpus)), args.seed)
        for v in args.variants:
            start = time.perf_counter()
            config = EvalConfig(seed=args.seed, variant=VariantKind(Variant(v)), workers=args.threads)
            report = evaluate(corpus, table, config)
            ref = REFERENCE.get(name, {}).get(v)
            delta = "" if ref is None else f" (reference {ref}, diff {report.mean - ref:+.1f})"
            print(f"{name} {v}: {report.summary()}{delta}  [{time.perf_counter() - start:.0f} s]")
            reports.append(report)
    print()
    print(format_table(reports))


if __name__ == "__main__":
    main()
