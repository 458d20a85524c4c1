"""Small disjoint-set (union-find) with path compression and union by size."""

from __future__ import annotations

import numpy as np


class UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return int(root)

    def union(self, a: int, b: int) -> int:
        """Merge the two sets; the root with the larger size wins (ties keep
        the lower index as root). Returns the surviving root."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[rb] > self.size[ra] or (self.size[rb] == self.size[ra] and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def roots(self) -> np.ndarray:
        """Root of every element, fully compressed."""
        parent = self.parent
        while True:
            grand = parent[parent]
            if (grand == parent).all():
                break
            parent = grand
        self.parent = parent
        return parent.copy()
