"""Command-line front end: ``wordmover {dist,matrix,bench}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .embeddings import load_embeddings
from .errors import WordMoverError
from .geometry import FisherMatrix, Geometry, GeometryKind, load_fisher_matrix
from .measures import Document, build_idf
from .similarity import Variant, VariantKind, distance_matrix, document_distance

log = logging.getLogger("wordmover")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _common(p):
    p.add_argument("--embeddings", required=True, help="word vector file")
    p.add_argument("--format", choices=["text", "bin"], help="embedding format (default: by extension)")
    p.add_argument("--geometry", choices=[g.value for g in GeometryKind], default="euclidean")
    p.add_argument("--euclidean-power", type=int, choices=[1, 2], default=2)
    p.add_argument("--fisher-matrix", help="metric file for --geometry fisher")
    p.add_argument("--fisher-identity", action="store_true", help="use the identity metric for --geometry fisher")
    p.add_argument("--opt1-raw-counts", action="store_true", help="OPT1 coefficient from raw counts")
    p.add_argument("--stopwords", help="stop-word file, one token per line")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--on-error", choices=["fail-fast", "skip"], default="fail-fast")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wordmover", description="Word Mover's Distance and variants.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    variants = [v.value for v in Variant]

    d = sub.add_parser("dist", help="distance between two documents (inline text or files)")
    _common(d)
    d.add_argument("doc_a")
    d.add_argument("doc_b")
    d.add_argument("--variant", choices=variants, default="wmd")
    d.add_argument("--idf-corpus", help="corpus file supplying document frequencies")

    m = sub.add_parser("matrix", help="self distance matrix of a corpus")
    _common(m)
    m.add_argument("--corpus", required=True)
    m.add_argument("--variant", choices=variants, default="wmd")
    m.add_argument("--idf-corpus", help="document frequencies source (default: the corpus itself)")
    m.add_argument("--output", default="-")

    b = sub.add_parser("bench", help="kNN classification benchmark")
    _common(b)
    b.add_argument("--corpus", required=True, help="corpus file, or training part with --test-corpus")
    b.add_argument("--test-corpus", help="predefined test split")
    b.add_argument("--name", help="dataset name in reports")
    b.add_argument("--variant", choices=variants, action="append", help="repeatable; default wmd")
    b.add_argument("--k-min", type=int, default=1)
    b.add_argument("--k-max", type=int, default=20)
    b.add_argument("--folds", type=int, default=5)
    b.add_argument("--val-fraction", type=float, default=0.2)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--global-k", action="store_true", help="one k for all folds")
    b.add_argument("--sample", type=int, help="stratified subsample size")
    b.add_argument("--default-stopwords", action="store_true", help="remove the bundled English stop words")
    b.add_argument("--records", help="write per-fold JSON lines here (default: stdout after the table)")
    return parser


def _geometry(args, table) -> Geometry:
    kind = GeometryKind(args.geometry)
    fisher = None
    if kind is GeometryKind.FISHER_COSINE:
        if args.fisher_matrix:
            fisher = load_fisher_matrix(args.fisher_matrix)
        elif args.fisher_identity:
            fisher = FisherMatrix.identity(table.dimension)
        else:
            raise _UsageError("--geometry fisher needs --fisher-matrix or --fisher-identity")
    return Geometry(kind, fisher, args.euclidean_power)


def _variant(name, args, table) -> VariantKind:
    return VariantKind(Variant(name), _geometry(args, table), args.opt1_raw_counts)


def _stopwords(args):
    if getattr(args, "default_stopwords", False) and not args.stopwords:
        return bench.load_stopwords()
    return bench.load_stopwords(args.stopwords) if args.stopwords else frozenset()


def _read_doc(arg, stop) -> Document:
    path = Path(arg)
    text = path.read_text(encoding="utf-8") if path.is_file() else arg
    return Document(tuple(t for t in text.lower().split() if t not in stop), id=arg)


def _load_table(args):
    return load_embeddings(args.embeddings, args.format)


def _fmt(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


def run_dist(args) -> int:
    table = _load_table(args)
    variant = _variant(args.variant, args, table)
    stop = _stopwords(args)
    idf = None
    if variant.needs_idf:
        if not args.idf_corpus:
            raise _UsageError("--variant wmd-tfidf needs --idf-corpus")
        corpus = bench.remove_stopwords(bench.load_corpus(args.idf_corpus), stop)
        idf = build_idf(bench.resolve_corpus(corpus, table).documents)
    a = _read_doc(args.doc_a, stop).resolve(table)
    b = _read_doc(args.doc_b, stop).resolve(table)
    print(f"{document_distance(a, b, table, variant, idf):.6f}")
    return 0


def run_matrix(args) -> int:
    table = _load_table(args)
    variant = _variant(args.variant, args, table)
    stop = _stopwords(args)
    corpus = bench.resolve_corpus(bench.remove_stopwords(bench.load_corpus(args.corpus), stop), table)
    idf = None
    if variant.needs_idf:
        source = corpus
        if args.idf_corpus:
            source = bench.resolve_corpus(bench.remove_stopwords(bench.load_corpus(args.idf_corpus), stop), table)
        idf = build_idf(source.documents)
    D = distance_matrix(list(corpus.documents), None, table, variant, idf,
                        on_error=args.on_error, workers=args.threads)
    text = "".join(" ".join(_fmt(x) for x in row) + "\n" for row in D)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)
    return 1 if (D != D).any() else 0


def _prepare_corpus(path, args, stop, table):
    corpus = bench.load_corpus(path, args.name)
    return bench.resolve_corpus(bench.remove_stopwords(corpus, stop), table)


def run_bench(args) -> int:
    table = _load_table(args)
    stop = _stopwords(args)
    corpus = _prepare_corpus(args.corpus, args, stop, table)
    split = None
    if args.test_corpus:
        test = _prepare_corpus(args.test_corpus, args, stop, table)
        corpus, split = bench.corpus_from_split(corpus, test, args.name or corpus.name)
    elif args.sample:
        corpus = bench.stratified_sample(corpus, args.sample, args.seed)

    reports = []
    for name in args.variant or ["wmd"]:
        config = bench.EvalConfig(
            k_min=args.k_min,
            k_max=args.k_max,
            folds=args.folds,
            val_fraction=args.val_fraction,
            seed=args.seed,
            variant=_variant(name, args, table),
            global_k=args.global_k,
            on_error=args.on_error,
            workers=args.threads,
        )
        reports.append(bench.evaluate(corpus, table, config, split))

    print(bench.format_table(reports))
    lines = "".join(json.dumps(rec) + "\n" for r in reports for rec in r.records())
    if args.records:
        Path(args.records).write_text(lines)
    else:
        sys.stdout.write("\n" + lines)
    return 1 if any(r.failed_folds for r in reports) else 0


COMMANDS = {"dist": run_dist, "matrix": run_matrix, "bench": run_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        if getattr(args, "threads", 1) < 1:
            raise _UsageError("--threads must be at least 1")
        return COMMANDS[args.command](args)
    except (_UsageError, WordMoverError, ValueError) as exc:
        message = str(exc)
    except OSError as exc:
        message = f"cannot read {exc.filename}: {exc.strerror}" if exc.filename else str(exc)
    print("error: " + " ".join(message.split()), file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
