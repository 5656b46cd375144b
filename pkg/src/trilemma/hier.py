"""Agglomerative hierarchical clustering via the Lance-Williams recurrence.

Node ids follow the usual convention: leaves are ``0..n-1`` and the m-th
merge creates node ``n + m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .kmeans import _as_points

LINKAGES = ("ward", "single", "complete", "average")

HEIGHT_FORMS = {
    "ward": "Lance-Williams ward update on squared Euclidean distances (no square root applied)",
    "single": "Euclidean distance, single linkage",
    "complete": "Euclidean distance, complete linkage",
    "average": "Euclidean distance, unweighted average linkage (UPGMA)",
}


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    leaves: tuple[str, ...]
    merges: tuple[Merge, ...]
    linkage: str = "ward"

    @property
    def n(self) -> int:
        return len(self.leaves)

    def members(self, node: int) -> list[int]:
        """Leaf indices under ``node``, left subtree first."""
        n = self.n
        out = []
        stack = [node]
        while stack:
            v = stack.pop()
            if v < n:
                out.append(v)
            else:
                m = self.merges[v - n]
                stack.append(m.right)
                stack.append(m.left)
        return out

    def leaf_order(self) -> list[int]:
        """Leaves in the order a left-first walk from the root meets them."""
        if self.n == 1:
            return [0]
        return self.members(2 * self.n - 2)

    def to_dict(self) -> dict:
        return {
            "leaves": list(self.leaves),
            "linkage": self.linkage,
            "height_form": HEIGHT_FORMS[self.linkage],
            "merges": [
                {"id": self.n + i, "left": m.left, "right": m.right, "height": m.height, "size": m.size}
                for i, m in enumerate(self.merges)
            ],
        }

    def to_newick(self, precision: int = 6) -> str:
        n = self.n
        heights = [0.0] * n + [m.height for m in self.merges]

        def label(i: int) -> str:
            name = self.leaves[i]
            if any(ch in name for ch in " ,;:()[]'"):
                return "'" + name.replace("'", "''") + "'"
            return name

        def render(node: int, parent_height: float) -> str:
            length = max(parent_height - heights[node], 0.0)
            if node < n:
                text = label(node)
            else:
                m = self.merges[node - n]
                text = f"({render(m.left, heights[node])},{render(m.right, heights[node])})"
            return f"{text}:{length:.{precision}f}"

        if n == 1:
            return label(0) + ";"
        root = 2 * n - 2
        m = self.merges[-1]
        return f"({render(m.left, heights[root])},{render(m.right, heights[root])});"


def agglomerate(fm, linkage: str = "ward", names=None) -> Dendrogram:
    """Build the merge tree bottom-up.

    At each step the closest pair of active clusters is merged; among equal
    distances the pair with the smallest ``(smaller id, larger id)`` wins.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; expected one of {LINKAGES}")
    x = _as_points(fm)
    n = x.shape[0]
    if n < 2:
        raise ValueError("agglomerate needs at least two points")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    if names is None:
        names = getattr(fm, "names", None) or [str(i) for i in range(n)]
    if len(names) != n:
        raise ValueError("one name per point is required")

    total = 2 * n - 1
    dist = np.full((total, total), np.inf)
    base = cdist(x, x, "sqeuclidean" if linkage == "ward" else "euclidean")
    dist[:n, :n] = base
    # only the upper triangle (row id < column id) is consulted
    dist[np.tril_indices(total)] = np.inf
    size = np.zeros(total, dtype=int)
    size[:n] = 1
    active = list(range(n))
    merges = []

    for step in range(n - 1):
        sub = dist[np.ix_(active, active)]
        flat = int(np.argmin(sub))  # row-major: lexicographically smallest pair
        ia, ib = divmod(flat, len(active))
        i, j = active[ia], active[ib]
        height = float(dist[i, j])
        new = n + step
        ni, nj = size[i], size[j]
        size[new] = ni + nj
        merges.append(Merge(i, j, height, int(size[new])))

        active.remove(i)
        active.remove(j)
        for k in active:
            dki = dist[min(k, i), max(k, i)]
            dkj = dist[min(k, j), max(k, j)]
            nk = size[k]
            if linkage == "single":
                d = min(dki, dkj)
            elif linkage == "complete":
                d = max(dki, dkj)
            elif linkage == "average":
                d = (ni * dki + nj * dkj) / (ni + nj)
            else:
                d = ((ni + nk) * dki + (nj + nk) * dkj - nk * height) / (ni + nj + nk)
            dist[k, new] = d
        active.append(new)

    return Dendrogram(tuple(str(s) for s in names), tuple(merges), linkage)


def cut(dg: Dendrogram, k: int) -> np.ndarray:
    """Flat labels after undoing the last ``k - 1`` merges.

    Components are numbered in order of their first leaf.
    """
    n = dg.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}, got {k}")
    parent = list(range(2 * n - 1))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for m_idx, m in enumerate(dg.merges[: n - k]):
        node = n + m_idx
        parent[find(m.left)] = node
        parent[find(m.right)] = node

    labels = np.empty(n, dtype=int)
    seen: dict[int, int] = {}
    for leaf in range(n):
        root = find(leaf)
        if root not in seen:
            seen[root] = len(seen)
        labels[leaf] = seen[root]
    return labels
