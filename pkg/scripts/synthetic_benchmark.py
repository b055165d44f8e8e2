"""kNN errors of every variant and geometry on clustered synthetic data.

    python scripts/synthetic_benchmark.py --noise 0.3 --seed 1
"""

import argparse
import json
import time

from wordmover import synthetic
from wordmover.bench import EvalConfig, evaluate, format_table, resolve_corpus
from wordmover.geometry import FisherMatrix, Geometry, GeometryKind
from wordmover.similarity import Variant, VariantKind


def configurations(dim):
    # every variant in Euclidean space, then vanilla WMD in the other geometries
    for v in Variant:
        yield VariantKind(v)
    yield VariantKind(Variant.WMD, Geometry(GeometryKind.POINCARE))
    yield VariantKind(Variant.WMD, Geometry(GeometryKind.COSINE))
    yield VariantKind(Variant.WMD, Geometry(GeometryKind.FISHER_COSINE, FisherMatrix.identity(dim)))


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--docs-per-class", type=int, default=30)
    p.add_argument("--words-per-class", type=int, default=8)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--noise", type=float, default=0.02, help="cluster spread; larger values mix classes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--records", help="write per-fold JSON lines here")
    args = p.parse_args()

    table = synthetic.clustered_embeddings(args.classes, args.words_per_class, args.dim, noise=args.noise, seed=args.seed)
    corpus = synthetic.clustered_corpus(
        args.classes, args.docs_per_class, args.words_per_class, seed=args.seed + 1
    )
    corpus = resolve_corpus(corpus, table)

    reports = []
    for variant in configurations(args.dim):
        start = time.perf_counter()
        reports.append(evaluate(corpus, table, EvalConfig(seed=args.seed, variant=variant)))
        print(f"{variant.label:10s} {variant.geometry.name:10s} {time.perf_counter() - start:6.2f} s")
    print()
    print(format_table(reports))
    if args.records:
        with open(args.records, "w") as fh:
            for r in reports:
                for rec in r.records():
                    fh.write(json.dumps(rec) + "\n")


if __name__ == "__main__":
    main()
