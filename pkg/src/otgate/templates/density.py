"""HDBSCAN on a precomputed distance matrix.

Mutual-reachability graph, minimum spanning tree, single-linkage hierarchy,
condensed tree, and excess-of-mass cluster selection. Written for the small
matrices met here (a few hundred items at most).
"""

from collections import deque

import numpy as np

from ..errors import ArgumentError
from ..partition import DistanceMatrix
from .hierarchy import MetaPartition


def core_distances(dist, min_samples):
    """Distance to the ``min_samples``-th nearest item, the item itself included."""
    k = min(min_samples, dist.shape[0])
    return np.sort(dist, axis=1)[:, k - 1]


def mutual_reachability(dist, min_samples):
    core = core_distances(dist, min_samples)
    mr = np.maximum(dist, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(mr, 0.0)
    return mr


def minimum_spanning_tree(weights):
    """Prim's algorithm on a dense matrix; returns edges sorted by weight.

    Ties in the sort keep Prim's discovery order, which itself prefers the
    lowest index.
    """
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    source = np.zeros(n, dtype=int)
    in_tree[0] = True
    best[1:] = weights[0, 1:]
    edges = []
    for _ in range(n - 1):
        candidates = np.where(in_tree, np.inf, best)
        v = int(np.argmin(candidates))
        edges.append((int(source[v]), v, float(best[v])))
        in_tree[v] = True
        closer = (~in_tree) & (weights[v] < best)
        best[closer] = weights[v][closer]
        source[closer] = v
    edges.sort(key=lambda e: e[2])
    return edges


def _single_linkage(edges, n):
    parent = list(range(2 * n - 1))
    top = list(range(n))
    children = {}
    size = [1] * n + [0] * (n - 1)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step, (u, v, w) in enumerate(edges):
        ru, rv = find(u), find(v)
        node = n + step
        children[node] = (top[ru], top[rv], w)
        size[node] = size[top[ru]] + size[top[rv]]
        parent[ru] = rv
        top[rv] = node
    return children, size


def _leaves(node, children, n):
    out, stack = [], [node]
    while stack:
        x = stack.pop()
        if x < n:
            out.append(x)
        else:
            a, b, _ = children[x]
            stack.extend((b, a))
    return out


def condense(children, size, n, min_cluster_size, floor):
    """Condensed cluster tree as a list of ``(parent, child, lambda, size)``.

    Cluster ids start at ``n`` (the root); children ``< n`` are points.
    """
    root = 2 * n - 2
    label = {root: n}
    next_label = n + 1
    rows = []
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if node < n:
            continue
        left, right, dist = children[node]
        lam = 1.0 / max(dist, floor)
        own = label[node]
        big_left = size[left] >= min_cluster_size
        big_right = size[right] >= min_cluster_size
        if big_left and big_right:
            for child in (left, right):
                label[child] = next_label
                rows.append((own, next_label, lam, size[child]))
                next_label += 1
                queue.append(child)
        else:
            for child, big in ((left, big_left), (right, big_right)):
                if big:
                    label[child] = own
                    queue.append(child)
                else:
                    for point in _leaves(child, children, n):
                        rows.append((own, point, lam, 1))
    return rows


def select_clusters(rows, n, allow_single_cluster=False):
    """Excess-of-mass selection; returns the set of selected cluster ids."""
    birth = {n: 0.0}
    for parent, child, lam, _ in rows:
        if child >= n:
            birth[child] = lam
    stability = dict.fromkeys(birth, 0.0)
    kids = {c: [] for c in birth}
    for parent, child, lam, sz in rows:
        stability[parent] += (lam - birth[parent]) * sz
        if child >= n:
            kids[parent].append(child)

    selected = {}
    for c in sorted(birth, reverse=True):
        if c == n and not allow_single_cluster:
            continue
        below = sum(stability[k] for k in kids[c])
        if kids[c] and below > stability[c]:
            selected[c] = False
            stability[c] = below
        else:
            selected[c] = True
            stack = list(kids[c])
            while stack:
                k = stack.pop()
                selected[k] = False
                stack.extend(kids[k])
    if not allow_single_cluster and n in kids and not kids[n]:
        return set()
    return {c for c, keep in selected.items() if keep}


def density_labels(dist, min_cluster_size=2, min_samples=None, allow_single_cluster=False):
    """HDBSCAN labels for a square distance array; ``-1`` marks noise."""
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if min_cluster_size < 2:
        raise ArgumentError("min_cluster_size must be at least 2")
    if n < 2:
        raise ArgumentError("density clustering needs at least two items")
    mr = mutual_reachability(dist, min_samples or min_cluster_size)
    positive = mr[mr > 0]
    floor = 1e-12 * float(positive.max()) if positive.size else 1e-12
    children, size = _single_linkage(minimum_spanning_tree(mr), n)
    rows = condense(children, size, n, min_cluster_size, floor)
    chosen = select_clusters(rows, n, allow_single_cluster)

    parent_of = {child: parent for parent, child, _, _ in rows if child >= n}
    labels = np.full(n, -1, dtype=int)
    for parent, child, _, _ in rows:
        if child >= n:
            continue
        c = parent
        while c not in chosen and c in parent_of:
            c = parent_of[c]
        if c in chosen:
            labels[child] = c
    return labels


def density_cluster(dm, min_cluster_size=2, min_samples=None, allow_single_cluster=False):
    """Density-based grouping of a :class:`DistanceMatrix` into a :class:`MetaPartition`."""
    if not isinstance(dm, DistanceMatrix):
        dm = DistanceMatrix(dm, [str(i) for i in range(len(dm))])
    labels = density_labels(dm.entries, min_cluster_size, min_samples, allow_single_cluster)
    return MetaPartition.from_labels(dm.ids, labels)
