"""Arena storage for one quenched tree realization.

Vertices are integer ids into parallel arrays. Children of a vertex are always
a contiguous id block ``[first_child, first_child + nu)``, both for eager
breadth-first materialization and for lazy growth during walk simulation, so
vectorized passes never need per-vertex indirection. Once a vertex's children
have been generated they are fixed for the lifetime of the tree (quenched
environment): revisits see the same branching.

The artificial parent of the root, when attached, sits at depth -1 and has the
root as its only child.
"""

from __future__ import annotations

from bisect import bisect_right

import numpy as np

from .errors import InvalidStateError
from .offspring import OffspringDistribution
from .rng import D_TREE, substream

ROOT = 0
_UBUF = 512  # uniforms prefetched per refill for scalar offspring draws


class QuenchedTree:
    """One realization of the branching tree, grown lazily from its root."""

    __slots__ = ("dist", "parent", "depth", "first_child", "nu", "star_root",
                 "_rng", "_u", "_ui", "_cum", "_ks")

    def __init__(self, dist: OffspringDistribution, rng: np.random.Generator):
        self.dist = dist
        self.parent = [-1]
        self.depth = [0]
        self.first_child = [-1]
        self.nu = [-1]          # -1 marks children not yet generated
        self.star_root: int | None = None
        self._rng = rng
        self._u: list[float] = []
        self._ui = 0
        self._cum = dist._cum.tolist()
        self._ks = [k for k, _ in dist.entries]

    def __len__(self) -> int:
        return len(self.parent)

    @property
    def root(self) -> int:
        return ROOT

    def _draw_nu(self) -> int:
        if self._ui >= len(self._u):
            self._u = self._rng.random(_UBUF).tolist()
            self._ui = 0
        u = self._u[self._ui]
        self._ui += 1
        return self._ks[bisect_right(self._cum, u)]

    def children(self, v: int) -> list[int]:
        """Ids of v's children, generating them on first access."""
        k = self.nu[v]
        if k < 0:
            k = self._draw_nu()
            fc = len(self.parent)
            dep = self.depth[v] + 1
            self.parent.extend([v] * k)
            self.depth.extend([dep] * k)
            self.first_child.extend([-1] * k)
            self.nu.extend([-1] * k)
            self.first_child[v] = fc
            self.nu[v] = k
        fc = self.first_child[v]
        return list(range(fc, fc + k))

    def materialize_to_depth(self, n: int) -> None:
        """Generate all vertices down to depth n, breadth first."""
        if n <= 0:
            return
        level = [v for v in range(len(self.parent)) if self.depth[v] == 0]
        start_depth = 0
        # resume from the deepest fully generated level
        while start_depth < n:
            pending = [v for v in level if self.nu[v] < 0]
            if pending:
                counts = self.dist.draw_counts(self._rng, len(pending))
                for v, k in zip(pending, counts.tolist()):
                    fc = len(self.parent)
                    dep = self.depth[v] + 1
                    self.parent.extend([v] * k)
                    self.depth.extend([dep] * k)
                    self.first_child.extend([-1] * k)
                    self.nu.extend([-1] * k)
                    self.first_child[v] = fc
                    self.nu[v] = k
            nxt = []
            for v in level:
                fc = self.first_child[v]
                nxt.extend(range(fc, fc + self.nu[v]))
            level = nxt
            start_depth += 1

    def max_generated_depth(self) -> int:
        return max(self.depth)

    def is_materialized_to(self, n: int) -> bool:
        """True when every vertex above depth n has generated children."""
        return all(self.nu[v] >= 0 for v in range(len(self.parent))
                   if -1 < self.depth[v] < n)

    def level_ids(self, n: int) -> list[np.ndarray]:
        """Vertex ids grouped by depth 0..n, each in ascending id order."""
        depth = np.asarray(self.depth, dtype=np.int64)
        return [np.flatnonzero(depth == k) for k in range(n + 1)]

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(parent, depth, first_child, nu) as int64 numpy snapshots."""
        return (np.asarray(self.parent, dtype=np.int64),
                np.asarray(self.depth, dtype=np.int64),
                np.asarray(self.first_child, dtype=np.int64),
                np.asarray(self.nu, dtype=np.int64))

    def to_adjacency(self) -> dict:
        """Debug dump {"id": {"parent": id|None, "children": [...], "depth": d}}."""
        out = {}
        for v in range(len(self.parent)):
            k = self.nu[v]
            kids = list(range(self.first_child[v], self.first_child[v] + k)) if k >= 0 else []
            par = self.parent[v]
            out[str(v)] = {"parent": None if par < 0 else par,
                           "children": kids, "depth": self.depth[v]}
        return out


def sample_truncated_tree(dist: OffspringDistribution, n: int,
                          seed: int) -> QuenchedTree:
    """Fresh tree realization fully materialized to depth n, deterministic in
    (dist, n, seed)."""
    if n < 0:
        raise ValueError(f"truncation depth must be >= 0, got {n}")
    tree = QuenchedTree(dist, substream(seed, D_TREE, 0))
    tree.materialize_to_depth(n)
    return tree


def ensure_children(tree: QuenchedTree, v: int) -> list[int]:
    """Children of v, generated exactly once and cached thereafter."""
    if not (0 <= v < len(tree)):
        raise ValueError(f"vertex {v} does not exist")
    return tree.children(v)


def attach_star_root(tree: QuenchedTree) -> int:
    """Add the artificial parent of the root (depth -1, single child).

    Returns its vertex id. Raises InvalidStateError when already attached.
    """
    if tree.star_root is not None:
        raise InvalidStateError("artificial root already attached")
    star = len(tree.parent)
    tree.parent.append(-1)
    tree.depth.append(-1)
    tree.first_child.append(ROOT)
    tree.nu.append(1)
    tree.parent[ROOT] = star
    tree.star_root = star
    return star
