"""Word-vector tables and their on-disk formats.

Two formats are supported:

* text: one ``token v1 ... vd`` line per word, optionally preceded by a
  ``|V| d`` header line (GloVe / word2vec text releases);
* binary word2vec: an ASCII ``|V| d`` header line, then for each word the
  token bytes terminated by a space and ``d`` little-endian float32 values.
  Newline bytes between records are skipped, as the reference tool writes one
  after every vector.

Vectors are held in float64 regardless of the source precision.  When a token
occurs more than once, the first occurrence wins.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyFile,
    HeaderParseError,
    InconsistentDimension,
    MalformedLine,
    TruncatedFile,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    tokens: tuple
    vectors: np.ndarray
    vocab: Mapping[str, int] = field(repr=False)
    norms: np.ndarray = field(repr=False)
    duplicates: int = 0

    @classmethod
    def from_arrays(cls, tokens: Sequence[str], vectors, duplicates: int = 0) -> "EmbeddingTable":
        vectors = np.array(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[1] < 1:
            raise ValueError(f"vectors must be a |V| x d matrix with d >= 1, got shape {vectors.shape}")
        tokens = tuple(tokens)
        if len(tokens) != vectors.shape[0]:
            raise ValueError(f"{len(tokens)} tokens for {vectors.shape[0]} vectors")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("embedding vectors must be finite")
        vocab = {}
        for i, t in enumerate(tokens):
            if t in vocab:
                raise ValueError(f"duplicate token {t!r}")
            vocab[t] = i
        norms = np.linalg.norm(vectors, axis=1)
        vectors.setflags(write=False)
        norms.setflags(write=False)
        return cls(tokens, vectors, vocab, norms, duplicates)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token) -> bool:
        return token in self.vocab

    def index(self, token: str) -> int | None:
        return self.vocab.get(token)

    def lookup(self, token: str):
        """``(vector, norm)`` for ``token``, or ``None`` when it is not in the vocabulary."""
        i = self.vocab.get(token)
        if i is None:
            return None
        return self.vectors[i], float(self.norms[i])


def lookup(table: EmbeddingTable, token: str):
    return table.lookup(token)


def _build(tokens, rows, path) -> EmbeddingTable:
    if not tokens:
        raise EmptyFile(f"{path}: no word vectors found")
    kept_tokens, kept_rows, seen = [], [], set()
    for t, r in zip(tokens, rows):
        if t in seen:
            continue
        seen.add(t)
        kept_tokens.append(t)
        kept_rows.append(r)
    duplicates = len(tokens) - len(kept_tokens)
    if duplicates:
        log.warning("%s: ignored %d duplicate token(s)", path, duplicates)
    return EmbeddingTable.from_arrays(kept_tokens, np.vstack(kept_rows), duplicates)


def _is_header(fields, next_fields) -> bool:
    if len(fields) != 2 or not all(f.isdigit() for f in fields):
        return False
    # "2 2" could also be the 1-d vector of token "2"; the next line decides
    return next_fields is None or len(next_fields) == int(fields[1]) + 1


def load_text_embeddings(path) -> EmbeddingTable:
    lines = Path(path).read_text(encoding="utf-8", errors="replace").splitlines()
    numbered = [(k, ln.split()) for k, ln in enumerate(lines, start=1) if ln.strip()]
    if not numbered:
        raise EmptyFile(f"{path}: file is empty")
    start = 0
    if _is_header(numbered[0][1], numbered[1][1] if len(numbered) > 1 else None):
        start = 1

    tokens, rows, dim = [], [], None
    for lineno, fields in numbered[start:]:
        if len(fields) < 2:
            raise MalformedLine(f"{path}:{lineno}: expected a token followed by values", line=lineno)
        try:
            values = np.array([float(x) for x in fields[1:]])
        except ValueError:
            raise MalformedLine(f"{path}:{lineno}: non-numeric vector entry", line=lineno) from None
        if not np.all(np.isfinite(values)):
            raise MalformedLine(f"{path}:{lineno}: non-finite vector entry", line=lineno)
        if dim is None:
            dim = values.size
        elif values.size != dim:
            raise InconsistentDimension(
                f"{path}:{lineno}: expected {dim} values, found {values.size}", line=lineno
            )
        tokens.append(fields[0])
        rows.append(values)
    return _build(tokens, rows, path)


def save_text_embeddings(table: EmbeddingTable, path, header: bool = True) -> None:
    """Write the text format; ``repr`` of each float keeps the round trip exact."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"{len(table)} {table.dimension}\n")
        for token, row in zip(table.tokens, table.vectors):
            if not token or any(ch.isspace() for ch in token):
                raise ValueError(f"token {token!r} cannot be written to the text format")
            fh.write(token + " " + " ".join(repr(float(x)) for x in row) + "\n")


def load_binary_word2vec(path) -> EmbeddingTable:
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise HeaderParseError(f"{path}: missing header line")
    try:
        n_words, dim = (int(x) for x in data[:nl].split())
    except ValueError:
        raise HeaderParseError(f"{path}: header must be '<vocab size> <dimension>'") from None
    if n_words < 1 or dim < 1:
        raise HeaderParseError(f"{path}: header declares {n_words} words of dimension {dim}")

    width = 4 * dim
    pos = nl + 1
    tokens, rows = [], []
    for k in range(n_words):
        end = data.find(b" ", pos)
        if end < 0:
            raise TruncatedFile(f"{path}: file ends inside record {k + 1} of {n_words}")
        token = data[pos:end].replace(b"\n", b"").decode("utf-8", errors="replace")
        pos = end + 1
        if pos + width > len(data):
            raise TruncatedFile(f"{path}: file ends inside record {k + 1} of {n_words}")
        rows.append(np.frombuffer(data, dtype="<f4", count=dim, offset=pos).astype(np.float64))
        tokens.append(token)
        pos += width
    return _build(tokens, rows, path)


def save_binary_word2vec(table: EmbeddingTable, path) -> None:
    """Write the binary format; values are narrowed to float32."""
    with open(path, "wb") as fh:
        fh.write(f"{len(table)} {table.dimension}\n".encode("ascii"))
        for token, row in zip(table.tokens, table.vectors):
            raw = token.encode("utf-8")
            if b" " in raw or b"\n" in raw or not raw:
                raise ValueError(f"token {token!r} cannot be written to the binary format")
            fh.write(raw + b" " + row.astype("<f4").tobytes() + b"\n")


def load_embeddings(path, fmt: str | None = None) -> EmbeddingTable:
    """Load by explicit ``fmt`` ("text" or "bin") or by file extension."""
    if fmt is None:
        fmt = "bin" if Path(path).suffix.lower() == ".bin" else "text"
    if fmt == "bin":
        return load_binary_word2vec(path)
    if fmt == "text":
        return load_text_embeddings(path)
    raise ValueError(f"unknown embedding format {fmt!r}")
