"""Agglomerative clustering of a precomputed distance matrix."""

from dataclasses import dataclass, field

import numpy as np

from .. import _backend
from ..errors import ArgumentError
from ..partition import DistanceMatrix

LINKAGES = {"single": _backend.SINGLE, "complete": _backend.COMPLETE, "average": _backend.AVERAGE}


@dataclass
class Dendrogram:
    """Merge history in scipy numbering.

    Leaves are ``0..N-1``; merge ``t`` creates node ``N + t``. Each row of
    ``merges`` is ``(node_a, node_b, height, size)``.
    """

    merges: np.ndarray
    ids: list
    linkage: str = "complete"

    def __post_init__(self):
        self.merges = np.asarray(self.merges, dtype=float).reshape(-1, 4)
        if self.merges.shape[0] != max(len(self.ids) - 1, 0):
            raise ArgumentError(f"{len(self.ids)} leaves need {len(self.ids) - 1} merges")

    def __len__(self):
        return len(self.ids)

    @property
    def heights(self):
        return self.merges[:, 2]

    def members(self, node):
        """Leaf indices under ``node``."""
        n = len(self.ids)
        stack, out = [int(node)], []
        while stack:
            x = stack.pop()
            if x < n:
                out.append(x)
            else:
                a, b = self.merges[x - n, :2]
                stack.extend((int(b), int(a)))
        return sorted(out)


@dataclass
class MetaPartition:
    """Grouping of database entries; groups are numbered ``1..G``."""

    assignment: dict
    noise: list = field(default_factory=list)

    def __post_init__(self):
        groups = sorted(set(self.assignment.values()))
        if groups != list(range(1, len(groups) + 1)):
            raise ArgumentError(f"group indices must be contiguous from 1, got {groups}")
        if set(self.noise) & set(self.assignment):
            raise ArgumentError("an id cannot be both assigned and noise")

    @property
    def n_groups(self):
        return len(set(self.assignment.values()))

    def members(self, group):
        return [i for i, g in self.assignment.items() if g == group]

    def groups(self):
        return {g: self.members(g) for g in range(1, self.n_groups + 1)}

    def label_vector(self, ids):
        """Group index per id, 0 for noise."""
        return np.array([self.assignment.get(i, 0) for i in ids], dtype=int)

    @classmethod
    def from_labels(cls, ids, labels):
        """Build from per-id integer labels (negative = noise), renumbering
        groups by their first member."""
        order = {}
        for lab in labels:
            if lab >= 0 and lab not in order:
                order[lab] = len(order) + 1
        assignment = {i: order[lab] for i, lab in zip(ids, labels) if lab >= 0}
        noise = [i for i, lab in zip(ids, labels) if lab < 0]
        return cls(assignment, noise)


def hierarchical_cluster(dm, linkage="complete"):
    """Agglomerative dendrogram of a :class:`DistanceMatrix`.

    Ties are broken toward the pair whose smallest leaf indices come first.
    """
    if not isinstance(dm, DistanceMatrix):
        dm = DistanceMatrix(dm, [str(i) for i in range(len(dm))])
    if len(dm) < 2:
        raise ArgumentError("hierarchical clustering needs at least two items")
    try:
        method = LINKAGES[linkage]
    except KeyError:
        raise ArgumentError(f"unknown linkage {linkage!r}; choose from {sorted(LINKAGES)}") from None
    merges = _backend.linkage(np.ascontiguousarray(dm.entries), method)
    return Dendrogram(merges, list(dm.ids), linkage)


def cut_tree(t, k):
    """Cut a dendrogram into exactly ``k`` groups by undoing its last ``k-1`` merges."""
    n = len(t)
    if not 1 <= k <= n:
        raise ArgumentError(f"k must be in [1, {n}], got {k}")
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    root_of_node = list(range(n))
    for step in range(n - k):
        a, b = (int(v) for v in t.merges[step, :2])
        ra, rb = find(root_of_node[a]), find(root_of_node[b])
        parent[max(ra, rb)] = min(ra, rb)
        root_of_node.append(min(ra, rb))
    labels = [find(i) for i in range(n)]
    return MetaPartition.from_labels(t.ids, labels)


def auto_cut(t):
    """Number of groups at the widest gap between consecutive merge heights."""
    n = len(t)
    if n < 3:
        return 1
    heights = np.concatenate([[0.0], t.heights])
    gaps = np.diff(heights)
    # gaps[s] precedes merge s + 1; stopping after s merges leaves n - s groups
    s = int(np.argmax(gaps[1:])) + 1
    return n - s
