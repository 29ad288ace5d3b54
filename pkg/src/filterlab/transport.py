"""Exact discrete optimal transport between weighted point sets.

:func:`solve_transport` is a primal network simplex specialised to the
transportation problem. The default configuration starts from a greedy
least-cost basic solution and prices with Dantzig's rule (most negative
reduced cost, lowest row-major index on ties); ``initial="northwest"`` and
``pivot="bland"`` select the textbook northwest-corner start and Bland's
anti-cycling rule. The leaving cell is always the blocking cell with the
lowest row-major index. Every choice is a pure function of the input bits,
so repeated solves are bit-identical.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import MarginalMismatch, ZeroMassTarget

MARGINAL_TOL = 1e-9
# consecutive degenerate pivots tolerated under Dantzig pricing before
# switching to Bland's rule for the rest of the solve
_DEGENERATE_RUN = 2000


@dataclass(frozen=True)
class TransportPlan:
    """Coupling matrix of shape ``(P, N)`` with its objective value."""

    plan: np.ndarray
    cost: float
    iterations: int = 0

    @property
    def shape(self):
        return self.plan.shape


def cost_matrix(src, dst):
    """Squared Euclidean distances, ``C[i, j] = |src_i - dst_j|**2``."""
    src = np.atleast_2d(np.asarray(src, dtype=float))
    dst = np.atleast_2d(np.asarray(dst, dtype=float))
    if src.shape[1] != dst.shape[1]:
        raise ValueError("source and target points differ in dimension")
    diff = src[:, None, :] - dst[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _northwest_corner(a, b):
    P, N = a.size, b.size
    basis = []
    ra, rb = a.copy(), b.copy()
    i = j = 0
    while True:
        if i == P - 1:
            # last row closes out the remaining columns: P + N - 1 cells total
            basis.extend((i, jj) for jj in range(j, N))
            break
        if j == N - 1:
            basis.extend((ii, j) for ii in range(i, P))
            break
        basis.append((i, j))
        if ra[i] <= rb[j]:
            rb[j] -= ra[i]
            i += 1
        else:
            ra[i] -= rb[j]
            j += 1
    return basis


def _least_cost(C, a, b):
    """Greedy least-cost basic solution, completed to a spanning tree."""
    P, N = a.size, b.size
    parent = list(range(P + N))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    order = np.argsort(C.ravel(), kind="stable")
    ra, rb = a.copy(), b.copy()
    basis = []
    for e in order:
        i, j = divmod(int(e), N)
        x = min(ra[i], rb[j])
        if x <= 0:
            continue
        ri, rj = find(i), find(P + j)
        if ri == rj:
            continue
        parent[ri] = rj
        basis.append((i, j))
        ra[i] -= x
        rb[j] -= x
        if len(basis) == P + N - 1:
            return basis
    for e in order:
        i, j = divmod(int(e), N)
        ri, rj = find(i), find(P + j)
        if ri != rj:
            parent[ri] = rj
            basis.append((i, j))
            if len(basis) == P + N - 1:
                break
    return basis


def _tree_flows(basis, a, b):
    """Basic flows of a spanning tree for the given marginals (leaf elimination)."""
    P, N = a.size, b.size
    flow = np.zeros((P, N))
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    incident = [[] for _ in range(P + N)]
    for k, (i, j) in enumerate(basis):
        incident[i].append(k)
        incident[P + j].append(k)
    degree = [len(x) for x in incident]
    done = [False] * len(basis)
    leaves = deque(node for node in range(P + N) if degree[node] == 1)
    while leaves:
        node = leaves.popleft()
        if degree[node] != 1:
            continue
        k = next(k for k in incident[node] if not done[k])
        i, j = basis[k]
        x = ra[i] if node < P else rb[j]
        flow[i, j] = x
        ra[i] -= x
        rb[j] -= x
        done[k] = True
        for end in (i, P + j):
            degree[end] -= 1
            if end != node and degree[end] == 1:
                leaves.append(end)
    return np.maximum(flow, 0.0)


class _Basis:
    """Spanning-tree basis with its dual potentials ``u_i + v_j = C_ij``.

    A transportation tree has at most ``N - 1`` rows of degree two or more;
    every other row is a leaf hanging off one column. Only the core (all
    columns plus branching rows) is walked in Python, leaf rows are handled
    as a vectorised gather, which keeps a pivot cheap when ``P >> N``.
    """

    def __init__(self, C, basis):
        P, N = C.shape
        self.C, self.P, self.N = C, P, N
        self.cols_of = [[] for _ in range(P)]
        for i, j in basis:
            self.cols_of[i].append(j)
        self.branch_rows = [set() for _ in range(N)]
        self.leaf_col = np.full(P, -1)
        for i in range(P):
            self._refresh(i, ())
        self.u = np.zeros(P)
        self.v = np.zeros(N)
        self.parent = {}
        self.depth = {}
        self.update_potentials()

    def _refresh(self, i, old_cols):
        for c in old_cols:
            self.branch_rows[c].discard(i)
        cols = self.cols_of[i]
        if len(cols) == 1:
            self.leaf_col[i] = cols[0]
        else:
            self.leaf_col[i] = -1
            for c in cols:
                self.branch_rows[c].add(i)

    def update_potentials(self):
        """Breadth-first walk of the core from column 0, then the leaves."""
        C, P = self.C, self.P
        u, v = self.u, self.v
        root = P
        parent = {root: -1}
        depth = {root: 0}
        v[0] = 0.0
        queue = deque([root])
        while queue:
            node = queue.popleft()
            if node >= P:
                c = node - P
                for r in sorted(self.branch_rows[c]):
                    if r not in parent:
                        parent[r], depth[r] = node, depth[node] + 1
                        u[r] = C[r, c] - v[c]
                        queue.append(r)
            else:
                for c in self.cols_of[node]:
                    if P + c not in parent:
                        parent[P + c], depth[P + c] = node, depth[node] + 1
                        v[c] = C[node, c] - u[node]
                        queue.append(P + c)
        self.parent, self.depth = parent, depth
        leaves = np.flatnonzero(self.leaf_col >= 0)
        lc = self.leaf_col[leaves]
        u[leaves] = C[leaves, lc] - v[lc]

    def reduced_costs(self):
        return self.C - self.u[:, None] - self.v[None, :]

    def cycle(self, i, j):
        """Cells on the tree path from column ``j`` to row ``i``."""
        P, parent, depth = self.P, self.parent, self.depth
        tail = []
        target = i
        if self.leaf_col[i] >= 0:
            target = P + int(self.leaf_col[i])
            tail = [i]
        a, b = P + j, target
        left, right = [a], [b]
        while depth[a] > depth[b]:
            a = parent[a]
            left.append(a)
        while depth[b] > depth[a]:
            b = parent[b]
            right.append(b)
        while a != b:
            a, b = parent[a], parent[b]
            left.append(a)
            right.append(b)
        nodes = left + right[-2::-1] + tail
        return [(x, y - P) if x < P else (y, x - P) for x, y in zip(nodes[:-1], nodes[1:])]

    def swap(self, enter, leave):
        k, l = leave
        i, j = enter
        old_k = tuple(self.cols_of[k])
        self.cols_of[k].remove(l)
        self._refresh(k, old_k)
        old_i = tuple(self.cols_of[i])
        self.cols_of[i].append(j)
        self._refresh(i, old_i)
        self.update_potentials()


def solve_transport(cost, src_w, dst_w, pivot="dantzig", initial="least-cost", max_iter=None):
    """Optimal transport plan for ``cost`` between two discrete measures.

    Parameters
    ----------
    cost : array_like, shape (P, N)
    src_w : array_like, shape (P,)
        Row marginal.
    dst_w : array_like, shape (N,)
        Column marginal; rescaled to the total of ``src_w``.
    pivot : {"dantzig", "bland"}
    initial : {"least-cost", "northwest"}

    Returns
    -------
    TransportPlan
        An optimal basic solution; zero-weight rows and columns come back as
        zero rows and columns.

    Raises
    ------
    MarginalMismatch
        If the two marginals carry different total mass.
    """
    if pivot not in ("dantzig", "bland"):
        raise ValueError(f"unknown pivot rule {pivot!r}")
    if initial not in ("least-cost", "northwest"):
        raise ValueError(f"unknown initial basis {initial!r}")
    C = np.asarray(cost, dtype=float)
    a = np.asarray(src_w, dtype=float).reshape(-1)
    b = np.asarray(dst_w, dtype=float).reshape(-1)
    if C.shape != (a.size, b.size):
        raise ValueError(f"cost shape {C.shape} does not match weights ({a.size}, {b.size})")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(C))):
        raise ValueError("transport inputs must be finite")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("transport weights must be nonnegative")
    sa, sb = a.sum(), b.sum()
    if sa <= 0 or abs(sa - sb) > MARGINAL_TOL * max(sa, sb):
        raise MarginalMismatch(f"source mass {sa!r} != target mass {sb!r}")

    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    a_r = a[rows]
    b_r = b[cols] * (sa / sb)
    C_r = np.ascontiguousarray(C[np.ix_(rows, cols)])
    P, N = C_r.shape

    basis = _northwest_corner(a_r, b_r) if initial == "northwest" else _least_cost(C_r, a_r, b_r)
    flow = _tree_flows(basis, a_r, b_r)
    pos = {cell: k for k, cell in enumerate(basis)}
    tree = _Basis(C_r, basis)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(C_r))))
    if max_iter is None:
        max_iter = 50 * (P + N) * max(P, N) + 1000

    rule = pivot
    degenerate_run = 0
    iterations = 0
    while True:
        reduced = tree.reduced_costs()
        if rule == "bland":
            candidates = np.flatnonzero(reduced.ravel() < -tol)
            if candidates.size == 0:
                break
            e = int(candidates[0])
        else:
            e = int(np.argmin(reduced))
            if reduced.flat[e] >= -tol:
                break
        if iterations >= max_iter:
            raise RuntimeError(f"network simplex did not converge in {max_iter} pivots")
        i, j = divmod(e, N)
        cells = tree.cycle(i, j)
        minus = cells[0::2]
        theta = min(flow[c] for c in minus)
        leaving = min((c for c in minus if flow[c] <= theta), key=lambda c: c[0] * N + c[1])
        for c in minus:
            flow[c] -= theta
        for c in cells[1::2]:
            flow[c] += theta
        flow[i, j] += theta
        flow[leaving] = 0.0
        k = pos.pop(leaving)
        basis[k] = (i, j)
        pos[(i, j)] = k
        tree.swap((i, j), leaving)
        iterations += 1

        degenerate_run = degenerate_run + 1 if theta == 0.0 else 0
        if degenerate_run > _DEGENERATE_RUN:
            rule = "bland"

    flow = _tree_flows(basis, a_r, b_r)
    plan = np.zeros(C.shape)
    plan[np.ix_(rows, cols)] = flow
    return TransportPlan(plan, float(np.sum(plan * C)), iterations)


def barycentric_projection(plan, src, dst_w):
    """Map a plan to target points: ``x_j = sum_i T_ij src_i / w_j``.

    Each output point is a convex combination of the source points.
    """
    T = plan.plan if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    src = np.atleast_2d(np.asarray(src, dtype=float))
    w = np.asarray(dst_w, dtype=float).reshape(-1)
    if np.any(w <= 0):
        raise ZeroMassTarget(f"target(s) {np.flatnonzero(w <= 0).tolist()} carry no mass")
    return (T.T @ src) / w[:, None]
