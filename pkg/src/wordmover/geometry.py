"""Word-to-word ground costs and cost-matrix assembly."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, InvalidFisherMatrix, OutsideBall, ZeroVector
from .ot import CostMatrix

BALL_MARGIN = 1e-9
ZERO_NORM = 1e-12


class GeometryKind(str, enum.Enum):
    EUCLIDEAN_SQ = "euclidean"
    POINCARE = "poincare"
    COSINE = "cosine"
    FISHER_COSINE = "fisher"


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    """Symmetric positive-definite metric tensor used for tangent-space cosines.

    The lower Cholesky factor ``L`` (``M = L L^T``) is computed once; all
    quadratic forms go through ``L^T x`` so that ``u^T M v`` is evaluated as
    a plain dot product and stays exactly symmetric.
    """

    entries: np.ndarray
    factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        M = np.array(self.entries, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
            raise InvalidFisherMatrix(f"metric must be a non-empty square matrix, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise InvalidFisherMatrix("metric has non-finite entries")
        if np.abs(M - M.T).max() > 1e-9:
            raise InvalidFisherMatrix("metric is not symmetric")
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            raise InvalidFisherMatrix("metric is not positive definite") from None
        M.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "entries", M)
        object.__setattr__(self, "factor", L)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, d: int) -> "FisherMatrix":
        return cls(np.eye(d))

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Map rows of ``x`` to coordinates where the metric is Euclidean."""
        return np.asarray(x, dtype=np.float64) @ self.factor


def load_fisher_matrix(path) -> FisherMatrix:
    """Read ``d`` on the first line, then ``d`` rows of ``d`` reals."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise InvalidFisherMatrix(f"{path}: empty file")
    try:
        d = int(lines[0].strip())
    except ValueError:
        raise InvalidFisherMatrix(f"{path}: first line must be the dimension") from None
    if d < 1 or len(lines) != d + 1:
        raise InvalidFisherMatrix(f"{path}: expected {d} matrix rows, found {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        try:
            row = [float(x) for x in ln.split()]
        except ValueError:
            raise InvalidFisherMatrix(f"{path}:{k}: non-numeric entry") from None
        if len(row) != d:
            raise InvalidFisherMatrix(f"{path}:{k}: expected {d} entries, found {len(row)}")
        rows.append(row)
    return FisherMatrix(np.array(rows))


def save_fisher_matrix(metric: FisherMatrix, path) -> None:
    d = metric.dimension
    out = [str(d)] + [" ".join(repr(float(x)) for x in row) for row in metric.entries]
    Path(path).write_text("\n".join(out) + "\n")


@dataclass(frozen=True)
class Geometry:
    """A ground cost choice.

    ``euclidean_power`` only affects :attr:`GeometryKind.EUCLIDEAN_SQ`:
    2 gives the squared distance, 1 the plain distance.
    """

    kind: GeometryKind = GeometryKind.EUCLIDEAN_SQ
    fisher: FisherMatrix | None = None
    euclidean_power: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", GeometryKind(self.kind))
        if self.kind is GeometryKind.FISHER_COSINE and self.fisher is None:
            raise InvalidFisherMatrix("Fisher-cosine geometry needs a metric (use FisherMatrix.identity for the default)")
        if self.euclidean_power not in (1, 2):
            raise ValueError("euclidean_power must be 1 or 2")

    @property
    def name(self) -> str:
        if self.kind is GeometryKind.EUCLIDEAN_SQ and self.euclidean_power == 1:
            return "euclidean1"
        return self.kind.value


def _pair(u, v):
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape or u.size == 0:
        raise DimensionMismatch(f"vectors of dimension {u.size} and {v.size}")
    return u, v


def euclidean_sq_cost(u, v) -> float:
    u, v = _pair(u, v)
    diff = u - v
    return float(np.dot(diff, diff))


def _arcosh_one_plus(x):
    # arcosh(1 + x) without the cancellation near x = 0
    return np.log1p(x + np.sqrt(x * (x + 2.0)))


def poincare_cost(u, v) -> float:
    """Geodesic distance in the unit Poincare ball."""
    u, v = _pair(u, v)
    su, sv = float(np.dot(u, u)), float(np.dot(v, v))
    for s in (su, sv):
        if np.sqrt(s) >= 1.0 - BALL_MARGIN:
            raise OutsideBall(f"vector norm {np.sqrt(s):.12g} is not inside the unit ball")
    x = 2.0 * euclidean_sq_cost(u, v) / ((1.0 - su) * (1.0 - sv))
    return float(_arcosh_one_plus(x))


def _cosine_from(u, v):
    nu, nv = np.sqrt(np.dot(u, u)), np.sqrt(np.dot(v, v))
    if nu < ZERO_NORM or nv < ZERO_NORM:
        raise ZeroVector("cosine cost is undefined for a zero vector")
    if np.array_equal(u, v):
        return 0.0
    return float(np.clip(1.0 - np.dot(u, v) / (nu * nv), 0.0, 2.0))


def cosine_cost(u, v) -> float:
    """``1 - cos(u, v)``, in ``[0, 2]``."""
    u, v = _pair(u, v)
    return _cosine_from(u, v)


def fisher_cosine_cost(u, v, metric: FisherMatrix) -> float:
    """``1 - u^T M v / (|u|_M |v|_M)``; equals :func:`cosine_cost` for ``M = I``."""
    u, v = _pair(u, v)
    if u.size != metric.dimension:
        raise DimensionMismatch(f"vectors have dimension {u.size}, metric {metric.dimension}")
    return _cosine_from(metric.transform(u), metric.transform(v))


def _as_geometry(g) -> Geometry:
    return g if isinstance(g, Geometry) else Geometry(GeometryKind(g))


def _first_bad(bad_a, bad_b, ia, ib, table):
    # first pair in row-major order that touches a bad word
    if bad_a.any():
        i, j = int(np.flatnonzero(bad_a)[0]), 0
    else:
        i, j = 0, int(np.flatnonzero(bad_b)[0])
    return table.tokens[ia[i]], table.tokens[ib[j]]


def _cosine_matrix(X, Y, nx, ny):
    dots = np.einsum("id,jd->ij", X, Y)
    return np.clip(1.0 - dots / np.outer(nx, ny), 0.0, 2.0)


def build_cost_matrix(words_a, words_b, table, kind=GeometryKind.EUCLIDEAN_SQ) -> CostMatrix:
    """Pairwise ground costs between two lists of vocabulary indices.

    ``kind`` is a :class:`Geometry` or a bare :class:`GeometryKind`.  Cells
    pairing a word with itself are exactly zero.  Errors name the first
    offending word pair.
    """
    geom = _as_geometry(kind)
    ia = np.asarray(words_a, dtype=np.int64)
    ib = np.asarray(words_b, dtype=np.int64)
    X = table.vectors[ia]
    Y = table.vectors[ib]

    if geom.kind is GeometryKind.EUCLIDEAN_SQ:
        C = cdist(X, Y, "sqeuclidean")
        if geom.euclidean_power == 1:
            C = np.sqrt(C)
    elif geom.kind is GeometryKind.POINCARE:
        bad_a = table.norms[ia] >= 1.0 - BALL_MARGIN
        bad_b = table.norms[ib] >= 1.0 - BALL_MARGIN
        if bad_a.any() or bad_b.any():
            pair = _first_bad(bad_a, bad_b, ia, ib, table)
            raise OutsideBall(f"word pair {pair}: vector not inside the unit Poincare ball")
        sa = np.einsum("ij,ij->i", X, X)
        sb = np.einsum("ij,ij->i", Y, Y)
        C = _arcosh_one_plus(2.0 * cdist(X, Y, "sqeuclidean") / np.outer(1.0 - sa, 1.0 - sb))
    else:
        if geom.kind is GeometryKind.FISHER_COSINE:
            if X.shape[1] != geom.fisher.dimension:
                raise DimensionMismatch(
                    f"embeddings have dimension {X.shape[1]}, metric {geom.fisher.dimension}"
                )
            X = geom.fisher.transform(X)
            Y = geom.fisher.transform(Y)
        nx = np.sqrt(np.einsum("ij,ij->i", X, X))
        ny = np.sqrt(np.einsum("ij,ij->i", Y, Y))
        bad_a, bad_b = nx < ZERO_NORM, ny < ZERO_NORM
        if bad_a.any() or bad_b.any():
            pair = _first_bad(bad_a, bad_b, ia, ib, table)
            raise ZeroVector(f"word pair {pair}: zero vector has no direction")
        C = _cosine_matrix(X, Y, nx, ny)

    C[ia[:, None] == ib[None, :]] = 0.0
    return CostMatrix(C)
