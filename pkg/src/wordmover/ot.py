"""Exact discrete optimal transport between two balanced measures.

The solver is a primal network simplex specialised to the complete bipartite
transportation graph.  The basis is a rooted spanning tree of rows and
columns; after each pivot only the re-hung subtree has its potentials
refreshed.  The entering cell is the one with the most negative reduced cost.  Ties are broken toward the lowest
row-major cell index, and after a run of degenerate pivots the solver falls
back to Bland's lowest-index rule for the rest of the solve, which rules out
cycling.

:func:`brute_force_emd` is a small-instance oracle built on a different
route: it walks every vertex of the *dual* polyhedron
``{(u, v) : u_i + v_j <= C_ij, u_0 = 0}`` and takes the best one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InstanceTooLarge,
    InvalidCost,
    InvalidMeasure,
    NonfiniteCost,
)

RENORMALIZE_TOL = 1e-6
PRUNE_BELOW = 1e-12
BRUTE_FORCE_MAX_SIZE = 6


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Nonnegative weights summing to one.

    Weights whose total is within ``1e-6`` of one are rescaled on
    construction; anything further off raises :class:`InvalidMeasure`.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).ravel()
        if w.size == 0:
            raise InvalidMeasure("measure needs at least one support point")
        if not np.all(np.isfinite(w)):
            raise InvalidMeasure("measure weights must be finite")
        if np.any(w < 0):
            raise InvalidMeasure(f"negative weight {w.min()!r}")
        total = w.sum()
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise InvalidMeasure(f"weights sum to {total!r}, expected 1")
        if abs(total - 1.0) > 0.0:
            w = w / total
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.size

    @classmethod
    def uniform(cls, n: int) -> "DiscreteMeasure":
        return cls(np.full(n, 1.0 / n))


@dataclass(frozen=True, eq=False)
class CostMatrix:
    entries: np.ndarray

    def __post_init__(self):
        c = np.array(self.entries, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] == 0 or c.shape[1] == 0:
            raise DimensionMismatch(f"cost matrix must be a non-empty 2-D array, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise NonfiniteCost("cost matrix contains NaN or infinite entries")
        if np.any(c < 0):
            raise InvalidCost(f"negative transport cost {c.min()!r}")
        c.setflags(write=False)
        object.__setattr__(self, "entries", c)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True, eq=False)
class TransportPlan:
    coupling: np.ndarray
    objective: float

    def marginal_residual(self, source, target) -> float:
        """Max-norm violation of both marginal constraints."""
        a = _as_measure(source).weights
        b = _as_measure(target).weights
        rows = np.abs(self.coupling.sum(axis=1) - a).max()
        cols = np.abs(self.coupling.sum(axis=0) - b).max()
        return float(max(rows, cols))


def _as_measure(x) -> DiscreteMeasure:
    return x if isinstance(x, DiscreteMeasure) else DiscreteMeasure(x)


def _as_cost(x) -> CostMatrix:
    return x if isinstance(x, CostMatrix) else CostMatrix(x)


def _check_shapes(a, b, cost):
    if cost.n != a.size or cost.m != b.size:
        raise DimensionMismatch(
            f"cost matrix is {cost.n}x{cost.m} but measures have sizes {a.size} and {b.size}"
        )


def solve_emd(source, target, cost) -> TransportPlan:
    """Solve the balanced Kantorovich problem exactly.

    Parameters
    ----------
    source : DiscreteMeasure or array_like, shape (n,)
    target : DiscreteMeasure or array_like, shape (m,)
    cost : CostMatrix or array_like, shape (n, m)

    Returns
    -------
    TransportPlan
        Optimal coupling and its cost ``sum(C * P)``.

    Notes
    -----
    Rows and columns carrying less than ``1e-12`` mass are removed before
    solving and come back as zero rows/columns of the coupling.
    """
    a = _as_measure(source)
    b = _as_measure(target)
    cost = _as_cost(cost)
    _check_shapes(a, b, cost)

    wa, wb, C = a.weights, b.weights, cost.entries
    rows = np.flatnonzero(wa >= PRUNE_BELOW)
    cols = np.flatnonzero(wb >= PRUNE_BELOW)
    ra = wa[rows] / wa[rows].sum()
    rb = wb[cols] / wb[cols].sum()
    sub = _network_simplex(ra, rb, C[np.ix_(rows, cols)])

    coupling = np.zeros(C.shape)
    coupling[np.ix_(rows, cols)] = sub
    coupling.setflags(write=False)
    return TransportPlan(coupling, float((C * coupling).sum()))


def _northwest_corner(a, b):
    """Initial spanning-tree basis: exactly n + m - 1 cells, some possibly zero."""
    n, m = a.size, b.size
    ra, rb = a.copy(), b.copy()
    flows = {}
    i = j = 0
    while True:
        x = min(ra[i], rb[j])
        flows[(i, j)] = x
        ra[i] -= x
        rb[j] -= x
        if i == n - 1 and j == m - 1:
            break
        if i == n - 1:
            j += 1
        elif j == m - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return flows


def _hang(root, adj, parent, depth, pot, C, n):
    """Set parent/depth/potential below ``root``, whose own entries are already set."""
    stack = [root]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y == parent[x]:
                continue
            parent[y] = x
            depth[y] = depth[x] + 1
            pot[y] = (C[y, x - n] if y < n else C[x, y - n]) - pot[x]
            stack.append(y)


def _network_simplex(a, b, C):
    n, m = C.shape
    if n == 1:
        return b[None, :].copy()
    if m == 1:
        return a[:, None].copy()

    flows = _northwest_corner(a, b)
    # tree nodes: rows are 0..n-1 and columns n..n+m-1
    adj = [set() for _ in range(n + m)]
    for i, j in flows:
        adj[i].add(n + j)
        adj[n + j].add(i)
    parent = [-1] * (n + m)
    depth = [0] * (n + m)
    pot = np.zeros(n + m)
    _hang(0, adj, parent, depth, pot, C, n)

    scale = C.max()
    tol = 1e-12 * scale
    bland = False
    degenerate_run = 0
    max_degenerate_run = n + m
    max_pivots = 50 * n * m + 1000

    def cell(x, y):
        return (x, y - n) if x < n else (y, x - n)

    for _ in range(max_pivots):
        if scale == 0.0:
            break
        flat = (C - pot[:n, None] - pot[None, n:]).ravel()
        if bland:
            candidates = np.flatnonzero(flat < -tol)
            if candidates.size == 0:
                break
            enter = int(candidates[0])
        else:
            enter = int(np.argmin(flat))
            if flat[enter] >= -tol:
                break
        ie, je = divmod(enter, m)

        # tree path row ie -> column je, climbing both ends to their common ancestor
        x, y = ie, n + je
        up_from_row, up_from_col = [], []
        while x != y:
            if depth[x] >= depth[y]:
                up_from_row.append(cell(x, parent[x]))
                x = parent[x]
            else:
                up_from_col.append(cell(y, parent[y]))
                y = parent[y]
        path = up_from_row + up_from_col[::-1]
        # cells at even positions of the path lose mass, odd positions gain it
        losing = path[0::2]
        gaining = path[1::2]
        theta = min(flows[c] for c in losing)
        leave = min(c for c in losing if flows[c] <= theta)

        for c in losing:
            flows[c] -= theta
        for c in gaining:
            flows[c] += theta
        del flows[leave]
        flows[(ie, je)] = theta

        lr, lc = leave[0], n + leave[1]
        adj[lr].discard(lc)
        adj[lc].discard(lr)
        adj[ie].add(n + je)
        adj[n + je].add(ie)
        # the endpoint of the entering cell on the leaving cell's side of the
        # path belongs to the detached subtree; re-hang it from the other end
        if leave in up_from_row:
            inner, outer = ie, n + je
        else:
            inner, outer = n + je, ie
        parent[inner] = outer
        depth[inner] = depth[outer] + 1
        pot[inner] = C[ie, je] - pot[outer]
        _hang(inner, adj, parent, depth, pot, C, n)

        if theta > 0.0:
            degenerate_run = 0
        else:
            degenerate_run += 1
            if degenerate_run > max_degenerate_run:
                bland = True
    else:
        raise RuntimeError("network simplex did not converge")

    plan = np.zeros((n, m))
    for (i, j), x in flows.items():
        plan[i, j] = x
    np.maximum(plan, 0.0, out=plan)
    return plan


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


def _components_without(tree, drop, n, m, root=0):
    """Node set reachable from ``root`` in ``tree`` minus edge ``drop``.

    Rows are nodes ``0..n-1`` and columns ``n..n+m-1``.
    """
    adj = [[] for _ in range(n + m)]
    for i, j in tree:
        if (i, j) != drop:
            adj[i].append(n + j)
            adj[n + j].append(i)
    seen = {root}
    stack = [root]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def _dual_from_tree(tree, C):
    n, m = C.shape
    adj = [[] for _ in range(n + m)]
    for i, j in tree:
        adj[i].append(n + j)
        adj[n + j].append(i)
    pot = [None] * (n + m)
    pot[0] = 0.0
    stack = [0]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if pot[y] is None:
                i, j = (x, y - n) if x < n else (y, x - n)
                pot[y] = C[i, j] - pot[x]
                stack.append(y)
    return np.array(pot[:n]), np.array(pot[n:])


def _primal_from_tree(tree, a, b):
    """Flows on a spanning tree basis, by repeatedly peeling leaves."""
    n, m = a.size, b.size
    residual = np.concatenate([a, b]).astype(np.float64)
    edges = set(tree)
    degree = [0] * (n + m)
    for i, j in edges:
        degree[i] += 1
        degree[n + j] += 1
    flows = {}
    while edges:
        for i, j in sorted(edges):
            if degree[i] == 1:
                x = residual[i]
            elif degree[n + j] == 1:
                x = residual[n + j]
            else:
                continue
            flows[(i, j)] = x
            residual[i] -= x
            residual[n + j] -= x
            degree[i] -= 1
            degree[n + j] -= 1
            edges.discard((i, j))
            break
    return flows


def _initial_dual_basis(C, tol):
    n, m = C.shape
    u = np.zeros(n)
    v = C.min(axis=0).astype(np.float64)
    while True:
        tight = [(i, j) for i in range(n) for j in range(m) if C[i, j] - u[i] - v[j] <= tol]
        comp = _components_without(tight, None, n, m)
        if len(comp) == n + m:
            break
        in_rows = [i for i in range(n) if i in comp]
        in_cols = [j for j in range(m) if n + j in comp]
        out_rows = [i for i in range(n) if i not in comp]
        out_cols = [j for j in range(m) if n + j not in comp]
        # shift the unreached part: its rows by +d, its columns by -d
        up = [C[i, j] - u[i] - v[j] for i in out_rows for j in in_cols]
        if up:
            d = min(up)
        else:
            d = -min(C[i, j] - u[i] - v[j] for i in in_rows for j in out_cols)
        u[out_rows] += d
        v[out_cols] -= d
    adj = [[] for _ in range(n + m)]
    for i, j in tight:
        adj[i].append(n + j)
        adj[n + j].append(i)
    seen = {0}
    queue = deque([0])
    tree = []
    while queue:
        x = queue.popleft()
        for y in sorted(adj[x]):
            if y not in seen:
                seen.add(y)
                queue.append(y)
                tree.append((x, y - n) if x < n else (y, x - n))
    return frozenset(tree)


def brute_force_emd(source, target, cost) -> TransportPlan:
    """Exact EMD by exhaustive enumeration of dual vertices (sizes <= 6).

    Every basis of the dual polyhedron is a spanning tree of the bipartite
    graph whose cells are tight.  Starting from one such tree, all others
    are reached by exchanging a tree edge for the first cell that becomes
    tight when the cut-off subtree's potentials are shifted.  By strong
    duality the best dual value is the EMD; the coupling is read off an
    optimal basis that is also primal feasible.

    Meant for tests: heavily tied cost matrices multiply the number of
    bases that have to be visited.
    """
    a = _as_measure(source)
    b = _as_measure(target)
    cost = _as_cost(cost)
    _check_shapes(a, b, cost)
    n, m = cost.n, cost.m
    if n > BRUTE_FORCE_MAX_SIZE or m > BRUTE_FORCE_MAX_SIZE:
        raise InstanceTooLarge(f"brute force supports sizes up to {BRUTE_FORCE_MAX_SIZE}, got {n}x{m}")
    wa, wb, C = a.weights, b.weights, cost.entries
    tol = 1e-12 * max(1.0, C.max())

    start = _initial_dual_basis(C, tol)
    seen = {start}
    queue = deque([start])
    bases = []
    while queue:
        tree = queue.popleft()
        u, v = _dual_from_tree(tree, C)
        bases.append((float(wa @ u + wb @ v), tree))
        for edge in tree:
            comp = _components_without(tree, edge, n, m)
            # shifting the cut-off side so that `edge` loosens tightens cells
            # crossing the cut in the opposite orientation
            if edge[0] in comp:
                cells = [(i, j) for i in range(n) if i not in comp for j in range(m) if n + j in comp]
            else:
                cells = [(i, j) for i in range(n) if i in comp for j in range(m) if n + j not in comp]
            cells = [c for c in cells if c != edge]
            if not cells:
                continue
            slack = {c: C[c] - u[c[0]] - v[c[1]] for c in cells}
            step = min(slack.values())
            for c in cells:
                if slack[c] <= step + tol:
                    nxt = (tree - {edge}) | {c}
                    if nxt not in seen:
                        seen.add(nxt)
                        queue.append(nxt)

    best = max(val for val, _ in bases)
    chosen = None
    for val, tree in bases:
        if val >= best - tol:
            flows = _primal_from_tree(tree, wa, wb)
            lowest = min(flows.values())
            if chosen is None or lowest > chosen[0]:
                chosen = (lowest, flows)
    if chosen is None or chosen[0] < -1e-9:
        raise RuntimeError("no primal-feasible optimal basis found")

    coupling = np.zeros((n, m))
    for (i, j), x in chosen[1].items():
        coupling[i, j] = max(x, 0.0)
    coupling.setflags(write=False)
    return TransportPlan(coupling, float((C * coupling).sum()))
