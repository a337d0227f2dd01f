"""Density-based hierarchical clustering built from first principles:
core distances -> mutual reachability -> MST -> single-linkage dendrogram ->
condensation by minimum cluster size -> excess-of-mass flat extraction with
an epsilon floor. Points in no selected cluster are labeled noise (-1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

INF_LAMBDA = 1e15


def _lambda_of(dist: float) -> float:
    return 1.0 / dist if dist > 0 else INF_LAMBDA


def core_distances(D: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance to the min_samples-th nearest neighbor, the point itself
    counted as its own first neighbor."""
    k = min(min_samples, D.shape[0]) - 1
    return np.sort(D, axis=1)[:, k]


def mutual_reachability(D: np.ndarray, core: np.ndarray) -> np.ndarray:
    return np.maximum(D, np.maximum(core[:, None], core[None, :]))


def mst_prim(W: np.ndarray) -> list[tuple[int, int, float]]:
    """Exact MST over a dense symmetric weight matrix (Prim, O(n^2))."""
    n = W.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    best_from = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    best = W[0].copy()
    best[0] = np.inf
    edges = []
    for _ in range(n - 1):
        masked = np.where(in_tree, np.inf, best)
        v = int(np.argmin(masked))
        u = int(best_from[v])
        edges.append((min(u, v), max(u, v), float(best[v])))
        in_tree[v] = True
        improve = W[v] < best
        improve &= ~in_tree
        best[improve] = W[v][improve]
        best_from[improve] = v
    return edges


def single_linkage(edges: list[tuple[int, int, float]], n: int) -> np.ndarray:
    """scipy-style linkage matrix Z from MST edges: each row
    (left, right, distance, size); new node ids start at n."""
    order = sorted(range(len(edges)), key=lambda i: (edges[i][2], edges[i][0], edges[i][1]))
    parent = list(range(2 * n - 1))
    size = [1] * n + [0] * (n - 1)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    Z = np.zeros((n - 1, 4))
    node = {i: i for i in range(n)}  # root of each component -> dendrogram node id
    next_id = n
    for row, i in enumerate(order):
        u, v, w = edges[i]
        ru, rv = find(u), find(v)
        a, b = node[ru], node[rv]
        Z[row] = (min(a, b), max(a, b), w, size[a] + size[b])
        size[next_id] = size[a] + size[b]
        parent[ru] = next_id
        parent[rv] = next_id
        node[next_id] = next_id
        node[find(next_id)] = next_id
        next_id += 1
    return Z


@dataclass
class CondensedTree:
    # parallel arrays: parent cluster id, child (point id < n or cluster id >= n),
    # lambda at which the child left the parent, child size
    parent: np.ndarray
    child: np.ndarray
    lam: np.ndarray
    size: np.ndarray
    birth_lambda: dict[int, float]
    n_points: int

    @property
    def root(self) -> int:
        return self.n_points

    def cluster_ids(self) -> list[int]:
        return sorted(self.birth_lambda)

    def child_clusters(self, c: int) -> list[int]:
        mask = (self.parent == c) & (self.child >= self.n_points)
        return [int(x) for x in self.child[mask]]


def condense_tree(Z: np.ndarray, n: int, min_cluster_size: int) -> CondensedTree:
    """Walk the dendrogram top-down; splits where both sides have at least
    min_cluster_size survive as clusters, smaller side points fall out."""
    children = {}  # dendrogram node -> (left, right, dist)
    sizes = np.ones(2 * n - 1, dtype=np.int64)
    for i, (a, b, d, s) in enumerate(Z):
        children[n + i] = (int(a), int(b), float(d))
        sizes[n + i] = int(s)

    rows_parent, rows_child, rows_lam, rows_size = [], [], [], []
    birth = {n: _lambda_of(Z[-1][2]) if n > 1 else INF_LAMBDA}
    next_cluster = n + 1
    # stack of (dendrogram node, condensed cluster id)
    stack = [(2 * n - 2, n)] if n > 1 else []
    if n == 1:
        rows_parent, rows_child, rows_lam, rows_size = [n], [0], [INF_LAMBDA], [1]

    def emit_points(node, cluster, lam):
        todo = [node]
        while todo:
            x = todo.pop()
            if x < n:
                rows_parent.append(cluster)
                rows_child.append(x)
                rows_lam.append(lam)
                rows_size.append(1)
            else:
                todo.extend(children[x][:2])

    while stack:
        node, cluster = stack.pop()
        if node < n:
            rows_parent.append(cluster)
            rows_child.append(node)
            rows_lam.append(INF_LAMBDA)
            rows_size.append(1)
            continue
        left, right, dist = children[node]
        lam = _lambda_of(dist)
        big_left = sizes[left] >= min_cluster_size
        big_right = sizes[right] >= min_cluster_size
        if big_left and big_right:
            for side in (left, right):
                cid = next_cluster
                next_cluster += 1
                birth[cid] = lam
                rows_parent.append(cluster)
                rows_child.append(cid)
                rows_lam.append(lam)
                rows_size.append(int(sizes[side]))
                stack.append((side, cid))
        elif big_left or big_right:
            big, small = (left, right) if big_left else (right, left)
            emit_points(small, cluster, lam)
            stack.append((big, cluster))
        else:
            emit_points(left, cluster, lam)
            emit_points(right, cluster, lam)

    return CondensedTree(
        parent=np.asarray(rows_parent, dtype=np.int64),
        child=np.asarray(rows_child, dtype=np.int64),
        lam=np.asarray(rows_lam),
        size=np.asarray(rows_size, dtype=np.int64),
        birth_lambda=birth,
        n_points=n,
    )


def cluster_stability(tree: CondensedTree) -> dict[int, float]:
    stab = {c: 0.0 for c in tree.birth_lambda}
    for p, lam, size in zip(tree.parent, tree.lam, tree.size):
        birth = tree.birth_lambda[int(p)]
        lam_c = min(lam, INF_LAMBDA)
        stab[int(p)] += (lam_c - min(birth, lam_c)) * size
    return stab


def extract_eom(tree: CondensedTree, epsilon: float = 0.0) -> list[int]:
    """Excess-of-mass cluster selection; the root is selectable only when it
    has no child clusters. Selected clusters born below the epsilon distance
    floor are replaced by their first ancestor at or above it."""
    stab = cluster_stability(tree)
    clusters = tree.cluster_ids()
    kids = {c: tree.child_clusters(c) for c in clusters}
    parent_of = {}
    for c in clusters:
        for k in kids[c]:
            parent_of[k] = c

    selected: set[int] = set()
    subtree_stab: dict[int, float] = {}
    for c in sorted(clusters, reverse=True):  # children have larger ids
        child_total = sum(subtree_stab[k] for k in kids[c])
        if not kids[c]:
            selected.add(c)
            subtree_stab[c] = stab[c]
        elif child_total > stab[c] or c == tree.root:
            subtree_stab[c] = child_total
        else:
            subtree_stab[c] = stab[c]
            selected.add(c)
            drop = list(kids[c])
            while drop:
                x = drop.pop()
                selected.discard(x)
                drop.extend(kids[x])

    if not selected and not kids[tree.root]:
        selected = {tree.root}

    if epsilon > 0:
        lam_max = 1.0 / epsilon
        merged: set[int] = set()
        for c in sorted(selected):
            if c in merged or tree.birth_lambda[c] <= lam_max:
                continue
            anc = c
            while anc in parent_of and tree.birth_lambda[anc] > lam_max:
                anc = parent_of[anc]
                if anc == tree.root:
                    break
            target = anc if anc != tree.root or not kids[tree.root] else c
            if target != c and target != tree.root:
                merged.add(target)
                drop = list(kids[target])
                while drop:
                    x = drop.pop()
                    merged.discard(x)
                    selected.discard(x)
                    drop.extend(kids[x])
                selected.discard(c)
                selected.add(target)
    return sorted(selected)


def labels_from_selection(tree: CondensedTree, selected: list[int]) -> np.ndarray:
    """Map each point to the selected cluster it falls under, else -1.
    Final labels are 0..K-1 in ascending condensed-id order."""
    label_of = {c: i for i, c in enumerate(selected)}
    parent_of = {}
    for p, ch in zip(tree.parent, tree.child):
        if ch >= tree.n_points:
            parent_of[int(ch)] = int(p)
    # child cluster ids are always larger than their parent's, so ascending
    # order resolves ownership top-down
    owner = {}
    for c in sorted(tree.birth_lambda):
        if c in label_of:
            owner[c] = label_of[c]
        else:
            owner[c] = owner.get(parent_of.get(c, -1), -1)
    labels = np.full(tree.n_points, -1, dtype=np.int64)
    point_lambda = np.zeros(tree.n_points)
    for p, ch, lam in zip(tree.parent, tree.child, tree.lam):
        if ch < tree.n_points:
            labels[int(ch)] = owner[int(p)]
            point_lambda[int(ch)] = lam
    return labels, point_lambda


@dataclass
class HdbscanState:
    points: np.ndarray
    labels: np.ndarray
    core: np.ndarray
    cluster_eps: np.ndarray      # per final cluster label: max joining distance
    min_cluster_size: int
    min_samples: int
    epsilon: float

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_eps)


def hdbscan_fit(points: np.ndarray, min_cluster_size: int = 30,
                min_samples: int = 30, epsilon: float = 0.01) -> HdbscanState:
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < min_cluster_size:
        warnings.warn(f"{n} points < min_cluster_size {min_cluster_size}: all noise")
        return HdbscanState(points=points, labels=np.full(n, -1, dtype=np.int64),
                            core=np.zeros(n), cluster_eps=np.zeros(0),
                            min_cluster_size=min_cluster_size,
                            min_samples=min_samples, epsilon=epsilon)
    D = cdist(points, points)
    core = core_distances(D, min_samples)
    mr = mutual_reachability(D, core)
    edges = mst_prim(mr)
    Z = single_linkage(edges, n)
    tree = condense_tree(Z, n, min_cluster_size)
    selected = extract_eom(tree, epsilon)
    labels, point_lambda = labels_from_selection(tree, selected)
    # joining threshold per cluster: the largest mutual-reachability distance
    # at which any member actually entered it
    cluster_eps = np.zeros(len(selected))
    for i in range(len(selected)):
        lams = point_lambda[labels == i]
        lams = lams[lams < INF_LAMBDA]
        cluster_eps[i] = float((1.0 / lams).max()) if lams.size else 0.0
    return HdbscanState(points=points, labels=labels, core=core,
                        cluster_eps=cluster_eps, min_cluster_size=min_cluster_size,
                        min_samples=min_samples, epsilon=epsilon)


def hdbscan_predict(state: HdbscanState, queries: np.ndarray) -> np.ndarray:
    """Approximate out-of-sample labels: a query joins the cluster of the
    training point with the smallest mutual-reachability distance, provided
    that distance is within the cluster's joining threshold. A query equal to
    a training point reproduces that point's fit-time label exactly."""
    if state.points.shape[0] == 0:
        raise ValueError("empty model")
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != state.points.shape[1]:
        raise ValueError("dimension mismatch")
    D = cdist(queries, state.points)
    k = min(state.min_samples, state.points.shape[0]) - 1
    out = np.full(queries.shape[0], -1, dtype=np.int64)
    member = state.labels >= 0
    for i in range(queries.shape[0]):
        d = D[i]
        exact = np.flatnonzero(d == 0)
        if exact.size:
            out[i] = state.labels[exact[0]]
            continue
        core_q = np.sort(d)[k] if k >= 0 else 0.0
        mr = np.maximum(d, np.maximum(core_q, state.core))
        best = None
        for j in np.flatnonzero(member):
            c = state.labels[j]
            if mr[j] > state.cluster_eps[c]:
                continue
            key = (mr[j], d[j], c, j)
            if best is None or key < best[0]:
                best = (key, c)
        if best is not None:
            out[i] = best[1]
    return out
