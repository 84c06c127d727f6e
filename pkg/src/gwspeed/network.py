"""Electric-network view of the tree with its artificial root attached.

Every edge {x, y} away from the artificial root carries conductance
lambda**(-(min depth)-1); the edge into the artificial root carries 1, so the
weighted degree there is exactly 1 and the effective conductance to the
boundary equals the probability of reaching the boundary level before the
artificial root. Effective conductance is computed by exact series-parallel
reduction, which on a tree is linear time.

For very small bias the raw conductances lambda**(-k-1) overflow doubles on
deep truncations, so below ``SMALL_LAMBDA`` the reduction runs on resistances
rescaled by lambda**depth per level, which is overflow-free and algebraically
identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UnsupportedRegimeError
from .offspring import make_distribution
from .tree import QuenchedTree, attach_star_root, sample_truncated_tree

SMALL_LAMBDA = 0.1


@dataclass
class WeightedTreeNetwork:
    """Edge conductances and weighted vertex degrees for one truncated tree."""

    tree: QuenchedTree
    level: int
    lam: float
    parent_edge_conductance: np.ndarray  # per vertex, NaN at the artificial root
    pi: np.ndarray                       # per vertex, sum of incident conductances

    def edge_conductance(self, x: int, y: int) -> float:
        """Conductance of the edge {x, y}; the pair must be parent/child."""
        if self.tree.parent[y] == x:
            return float(self.parent_edge_conductance[y])
        if self.tree.parent[x] == y:
            return float(self.parent_edge_conductance[x])
        raise ValueError(f"({x}, {y}) is not an edge")


def build_conductances(tree: QuenchedTree, lam: float) -> WeightedTreeNetwork:
    """Assign conductances on a tree with the artificial root attached.

    Requires lam > 0; the walk-network correspondence degenerates at zero
    bias. The truncation level is the deepest fully generated level.
    """
    if lam <= 0.0:
        raise UnsupportedRegimeError(f"conductances need bias > 0, got {lam:.9g}")
    if tree.star_root is None:
        raise ValueError("tree has no artificial root; attach it first")
    depth = np.asarray(tree.depth, dtype=np.int64)
    nu = np.asarray(tree.nu, dtype=np.int64)
    n = int(depth.max())
    star = tree.star_root

    cond = np.empty(len(tree))
    # edge above a depth-k vertex has conductance lam**(-k); the root's edge
    # to the artificial parent is 1 by construction.
    with np.errstate(over="ignore"):
        cond[:] = lam ** (-depth.astype(float))
    cond[tree.root] = 1.0
    cond[star] = np.nan

    pi = np.where(np.isnan(cond), 0.0, cond).copy()
    with np.errstate(over="ignore", invalid="ignore"):
        child_edge = lam ** (-(depth.astype(float) + 1.0))
    generated = nu >= 0
    pi[generated] += nu[generated] * child_edge[generated]
    pi[star] = 1.0
    return WeightedTreeNetwork(tree=tree, level=n, lam=lam,
                               parent_edge_conductance=cond, pi=pi)


def _ragged_children(first_child: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Flat child ids for a level, parents taken in the given order."""
    total = int(nu.sum())
    starts = np.cumsum(nu) - nu
    return np.repeat(first_child, nu) + (np.arange(total, dtype=np.int64)
                                         - np.repeat(starts, nu))


def effective_conductance_to_level(net: WeightedTreeNetwork, n: int) -> float:
    """Exact series-parallel conductance between the artificial root and the
    set of depth-n vertices. Equals the probability of hitting depth n before
    the artificial root when starting there."""
    tree = net.tree
    if not tree.is_materialized_to(n):
        raise ValueError(f"tree is not materialized to depth {n}")
    lam = net.lam
    levels = tree.level_ids(n)
    for k in range(n + 1):
        if levels[k].size == 0:
            raise ValueError(f"no vertices at depth {k}; tree too shallow")
    fc = np.asarray(tree.first_child, dtype=np.int64)
    nu_all = np.asarray(tree.nu, dtype=np.int64)

    # subtree resistance below each vertex, indexed by vertex id
    resist = np.zeros(len(tree))
    scaled = lam < SMALL_LAMBDA
    for k in range(n - 1, -1, -1):
        ids = levels[k]
        kids = _ragged_children(fc[ids], nu_all[ids])
        if scaled:
            # resistances carried in units of lam**(depth+1):
            # rho(x) = 1 / sum_i 1/(1 + lam*rho(child_i))
            inv = 1.0 / (1.0 + lam * resist[kids])
        else:
            inv = 1.0 / (lam ** (k + 1.0) + resist[kids])
        off = np.cumsum(nu_all[ids]) - nu_all[ids]
        resist[ids] = 1.0 / np.add.reduceat(inv, off)
    root_r = float(resist[tree.root])
    if scaled:
        return 1.0 / (1.0 + lam * root_r)
    return 1.0 / (1.0 + root_r)


def regular_return_gf(d: int, lam: float, z: float) -> float:
    """Generating function of the first return to the parent on the d-ary
    tree: ((lam+d) - sqrt((lam+d)**2 - 4*d*lam*z**2)) / (2*d*z).

    At z = 1 the expression simplifies to min(lam, d)/d, which is returned
    exactly. z must lie in (0, 1].
    """
    if d < 1:
        raise ValueError(f"branching d must be >= 1, got {d}")
    if lam < 0:
        raise ValueError(f"bias must be >= 0, got {lam:.9g}")
    if not (0.0 < z <= 1.0):
        raise ValueError(f"z must be in (0, 1], got {z:.9g}")
    if z == 1.0:
        return min(lam, d) / d
    s = lam + d
    disc = s * s - 4.0 * d * lam * z * z
    return (s - math.sqrt(disc)) / (2.0 * d * z)


def regular_escape_probability(d: int, lam: float) -> float:
    """Probability of never hitting the parent on the d-ary tree: 1 - min(lam, d)/d."""
    if d < 1:
        raise ValueError(f"branching d must be >= 1, got {d}")
    if lam < 0:
        raise ValueError(f"bias must be >= 0, got {lam:.9g}")
    return 1.0 - min(lam, d) / d


@lru_cache(maxsize=128)
def _regular_conductance(d: int, lam: float, n: int) -> float:
    dist = make_distribution({d: 1.0})
    tree = sample_truncated_tree(dist, n, seed=0)
    attach_star_root(tree)
    return effective_conductance_to_level(build_conductances(tree, lam), n)


def conductance_sandwich(tree: QuenchedTree, lam: float,
                         n: int) -> tuple[float, float, float]:
    """Effective conductance of the tree bracketed by the regular trees built
    from its minimum and maximum branching numbers.

    Returns (low, mid, high). Increasing every edge conductance cannot
    decrease the effective conductance, so the ordering is a hard invariant;
    a violation beyond float tolerance raises RuntimeError.
    """
    if lam <= 0.0:
        raise UnsupportedRegimeError(f"sandwich needs bias > 0, got {lam:.9g}")
    if tree.star_root is None:
        attach_star_root(tree)
    c_mid = effective_conductance_to_level(build_conductances(tree, lam), n)
    m1, m2 = tree.dist.m1, tree.dist.m2
    if m1 < 1:
        raise UnsupportedRegimeError("sandwich needs a leafless offspring law")
    c_low = _regular_conductance(m1, lam, n)
    c_high = _regular_conductance(m2, lam, n)
    slack = 1e-12 * max(1.0, abs(c_mid))
    if not (c_low <= c_mid + slack and c_mid <= c_high + slack):
        raise RuntimeError(
            f"conductance ordering violated: {c_low:.17g} <= {c_mid:.17g} "
            f"<= {c_high:.17g} fails"
        )
    return c_low, c_mid, c_high
