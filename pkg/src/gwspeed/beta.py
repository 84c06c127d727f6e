"""Level-n escape probabilities and their bias derivatives on truncated trees.

For a truncation depth n, beta_n(x) is the probability that the walk started
at x hits depth n before the parent of x. It is 1 on the boundary level and
satisfies, one level up,

    beta_n(x) = S / (lam + S),            S = sum of the children's beta_n,

which is evaluated exactly bottom-up. Writing A(x) = lam/(lam+S)^2 and
B(x) = S/(lam+S)^2, the bias derivative obeys

    -beta_n'(x) = A(x) * sum_i(-beta_n'(child_i)) + B(x),

with derivative 0 on the boundary. ``beta_derivative_path_sum`` re-derives the
root derivative by unrolling that recursion into a sum over vertices of B
times the product of A along the ancestor path; it is kept deliberately naive
(per-vertex parent climbing) to serve as an independent check of the
recursion.

Sample pools of iid root pairs (beta, beta') come in two flavors: ``tree``
draws genuinely independent truncated trees (unbiased), while ``population``
iterates a fixed-size pool through the recursion by resampling members,
which is fast but carries an O(1/pool size) dependence bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidStateError, UnsupportedRegimeError
from .offspring import OffspringDistribution
from .rng import D_POOL, D_POOL_POP, substream
from .tree import QuenchedTree

# Chunking keeps peak forest memory near this many vertices on one level.
_CHUNK_LEVEL_BUDGET = 6_000_000


@dataclass
class BetaTable:
    """Per-vertex beta_n, its bias derivative and the A/B factors for one
    (tree, level, bias) triple. Arrays are indexed by vertex id; entries
    outside depth 0..n are NaN."""

    tree: QuenchedTree
    level: int
    lam: float
    beta: np.ndarray
    a: np.ndarray
    b: np.ndarray
    dbeta: np.ndarray | None = None

    @property
    def root_beta(self) -> float:
        return float(self.beta[self.tree.root])

    @property
    def root_dbeta(self) -> float:
        if self.dbeta is None:
            raise InvalidStateError("derivative not computed for this table")
        return float(self.dbeta[self.tree.root])


def _level_children(tree: QuenchedTree, ids: np.ndarray,
                    nu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(flat child ids, exclusive offsets) for one level of parents."""
    counts = nu[ids]
    starts = np.cumsum(counts) - counts
    total = int(counts.sum())
    fc = np.asarray(tree.first_child, dtype=np.int64)[ids]
    flat = np.repeat(fc, counts) + (np.arange(total, dtype=np.int64)
                                    - np.repeat(starts, counts))
    return flat, starts


def compute_beta(tree: QuenchedTree, n: int, lam: float) -> BetaTable:
    """Exact bottom-up evaluation of beta_n on a tree materialized to depth n."""
    if lam < 0:
        raise ValueError(f"bias must be >= 0, got {lam:.9g}")
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    if not tree.is_materialized_to(n):
        raise ValueError(f"tree is not materialized to depth {n}")
    nu = np.asarray(tree.nu, dtype=np.int64)
    levels = tree.level_ids(n)
    for k, ids in enumerate(levels):
        if ids.size == 0:
            raise ValueError(f"no vertices at depth {k}; tree too shallow for level {n}")
        if k < n and (nu[ids] < 1).any():
            raise ValueError("tree has an internal vertex without children; "
                             "a leafless offspring law is required")

    size = len(tree)
    beta = np.full(size, np.nan)
    a = np.full(size, np.nan)
    b = np.full(size, np.nan)
    beta[levels[n]] = 1.0
    for k in range(n - 1, -1, -1):
        ids = levels[k]
        kids, off = _level_children(tree, ids, nu)
        s = np.add.reduceat(beta[kids], off)
        denom = lam + s
        beta[ids] = s / denom
        a[ids] = lam / (denom * denom)
        b[ids] = s / (denom * denom)
    return BetaTable(tree=tree, level=n, lam=lam, beta=beta, a=a, b=b)


def compute_beta_derivative(table: BetaTable) -> BetaTable:
    """Fill the bias derivative on an existing table, bottom-up."""
    tree = table.tree
    n = table.level
    nu = np.asarray(tree.nu, dtype=np.int64)
    levels = tree.level_ids(n)
    dbeta = np.full(len(tree), np.nan)
    dbeta[levels[n]] = 0.0
    for k in range(n - 1, -1, -1):
        ids = levels[k]
        kids, off = _level_children(tree, ids, nu)
        sp = np.add.reduceat(dbeta[kids], off)
        dbeta[ids] = table.a[ids] * sp - table.b[ids]
    table.dbeta = dbeta
    return table


def beta_derivative_path_sum(table: BetaTable) -> float:
    """Root derivative via the unrolled sum over vertices of B times the
    product of A along the strict ancestor path. O(vertices * depth); this is
    the reference the local recursion is checked against."""
    tree = table.tree
    n = table.level
    parent = tree.parent
    depth = tree.depth
    a, b = table.a, table.b
    terms = []
    for v in range(len(tree)):
        dep = depth[v]
        if dep < 0 or dep > n - 1:
            continue
        term = float(b[v])
        x = v
        while parent[x] >= 0 and depth[parent[x]] >= 0:
            x = parent[x]
            term *= float(a[x])
        terms.append(term)
    return -math.fsum(terms)


# Pools -------------------------------------------------------------------


@dataclass
class BetaPool:
    """Sampled (beta, beta') root pairs at one (level, bias)."""

    beta: np.ndarray
    dbeta: np.ndarray
    level: int
    lam: float
    method: str

    def __len__(self) -> int:
        return self.beta.size

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("beta,dbeta\n")
            for bv, dv in zip(self.beta, self.dbeta):
                fh.write(f"{bv:.9g},{dv:.9g}\n")


def _sample_offspring_layers(dist: OffspringDistribution, depth: int,
                             n_trees: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Offspring counts for a forest of independent trees, one array per
    level 0..depth-1, laid out so consecutive blocks are whole subtrees."""
    layers = []
    width = n_trees
    for _ in range(depth):
        counts = dist.draw_counts(rng, width)
        layers.append(counts)
        width = int(counts.sum(dtype=np.int64))
    return layers


def _forest_root_values(layers: list[np.ndarray], lam: float,
                        n_trees: int) -> tuple[np.ndarray, np.ndarray]:
    """Root (beta, beta') for every tree of a sampled forest."""
    if not layers:
        return np.ones(n_trees), np.zeros(n_trees)
    width = int(layers[-1].sum(dtype=np.int64))
    b = np.ones(width)
    db = np.zeros(width)
    for counts in reversed(layers):
        counts64 = counts.astype(np.int64)
        off = np.cumsum(counts64) - counts64
        s = np.add.reduceat(b, off)
        sp = np.add.reduceat(db, off)
        denom = lam + s
        b = s / denom
        db = (lam * sp - s) / (denom * denom)
    return b, db


def _trees_per_chunk(dist: OffspringDistribution, n: int) -> int:
    peak = max(1.0, dist.m) ** n
    return max(1, int(_CHUNK_LEVEL_BUDGET / max(1.0, peak)))


def sample_pools_shared_trees(dist: OffspringDistribution, lams, n: int,
                              count: int, seed: int) -> list[BetaPool]:
    """Tree-method pools at several biases evaluated on one common set of
    trees (the i-th sample of every pool comes from the same realization),
    so cross-bias comparisons share all structural randomness."""
    if dist.has_leaves:
        raise UnsupportedRegimeError("sample pools need a leafless offspring law")
    if count < 1:
        raise ValueError(f"pool size must be >= 1, got {count}")
    lams = [float(l) for l in lams]
    for lam in lams:
        if lam < 0:
            raise ValueError(f"bias must be >= 0, got {lam:.9g}")
    betas = [np.empty(count) for _ in lams]
    dbetas = [np.empty(count) for _ in lams]
    chunk = _trees_per_chunk(dist, n)
    for ci, lo in enumerate(range(0, count, chunk)):
        hi = min(lo + chunk, count)
        rng = substream(seed, D_POOL, ci)
        layers = _sample_offspring_layers(dist, n, hi - lo, rng)
        for j, lam in enumerate(lams):
            b, db = _forest_root_values(layers, lam, hi - lo)
            betas[j][lo:hi] = b
            dbetas[j][lo:hi] = db
    return [BetaPool(beta=betas[j], dbeta=dbetas[j], level=n, lam=lam, method="tree")
            for j, lam in enumerate(lams)]


def sample_pool(dist: OffspringDistribution, lam: float, n: int, count: int,
                seed: int, method: str = "tree") -> BetaPool:
    """Pool of iid (beta, beta') samples at level n and the given bias.

    method="tree": one independent truncated tree per sample (unbiased).
    method="population": a pool of ``count`` values seeded at the boundary
    pair (1, 0) and pushed through the recursion n times by resampling pool
    members; approximate, with O(1/count) dependence between samples.
    """
    if method == "tree":
        return sample_pools_shared_trees(dist, [lam], n, count, seed)[0]
    if method != "population":
        raise ValueError(f"unknown pool method {method!r}")
    if dist.has_leaves:
        raise UnsupportedRegimeError("sample pools need a leafless offspring law")
    if lam < 0:
        raise ValueError(f"bias must be >= 0, got {lam:.9g}")
    if count < 1:
        raise ValueError(f"pool size must be >= 1, got {count}")
    rng = substream(seed, D_POOL_POP, 0)
    b = np.ones(count)
    db = np.zeros(count)
    for _ in range(n):
        counts = dist.draw_counts(rng, count).astype(np.int64)
        idx = rng.integers(0, count, size=int(counts.sum()))
        off = np.cumsum(counts) - counts
        s = np.add.reduceat(b[idx], off)
        sp = np.add.reduceat(db[idx], off)
        denom = lam + s
        b = s / denom
        db = (lam * sp - s) / (denom * denom)
    return BetaPool(beta=b, dbeta=db, level=n, lam=lam, method="population")


# Bound checking ------------------------------------------------------------


@dataclass
class BoundReport:
    """Violation counts for the escape-probability envelope, the derivative
    ratio bound and the worst-case tuple denominator."""

    lam: float
    m1: int
    m2: int
    samples: int
    envelope_violations: int | None = None
    derivative_violations: int | None = None
    denominator_floor: float | None = None
    denominator_violations: int | None = None
    skipped: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(v in (None, 0) for v in (self.envelope_violations,
                                            self.derivative_violations,
                                            self.denominator_violations))

    def counts(self) -> dict:
        return {"envelope": self.envelope_violations,
                "derivative": self.derivative_violations,
                "denominator": self.denominator_violations}


def check_bounds(pool_or_table, m1: int, m2: int, lam: float) -> BoundReport:
    """Count violations of the proven sample-level bounds.

    Checks, per (beta, beta') pair:
      envelope      1 - min(lam, m1)/m1 <= beta <= 1 - lam/m2
      derivative    0 < -beta' <= beta / (m1 - lam)          (needs lam < m1)
      denominator   lam - 1 + (m1+1) * min(beta) >= m1 - lam/m1, the worst
                    case over every tuple that could be drawn from the pool
                    (needs lam < m1)

    A BetaTable contributes its root pair only; a BetaPool contributes every
    sample. Checks whose precondition fails are recorded in ``skipped``.
    """
    if isinstance(pool_or_table, BetaTable):
        beta = np.array([pool_or_table.root_beta])
        dbeta = (np.array([pool_or_table.root_dbeta])
                 if pool_or_table.dbeta is not None else None)
    elif isinstance(pool_or_table, BetaPool):
        beta = pool_or_table.beta
        dbeta = pool_or_table.dbeta
    else:
        raise TypeError("expected a BetaPool or BetaTable")

    report = BoundReport(lam=lam, m1=m1, m2=m2, samples=int(beta.size))
    if lam > m2:
        report.skipped["envelope"] = (
            f"bias {lam:.9g} above maximum branching {m2}; envelope empty")
    else:
        lo = 1.0 - min(lam, m1) / m1
        hi = 1.0 - lam / m2
        report.envelope_violations = int(((beta < lo) | (beta > hi)).sum())
    if lam >= m1:
        report.skipped["derivative"] = (
            f"bias {lam:.9g} not below minimum branching {m1}")
        report.skipped["denominator"] = report.skipped["derivative"]
    else:
        if dbeta is None:
            report.skipped["derivative"] = "derivative values not available"
        else:
            neg = -dbeta
            cap = beta / (m1 - lam)
            report.derivative_violations = int(((neg <= 0.0) | (neg > cap)).sum())
        floor = lam - 1.0 + (m1 + 1) * float(beta.min())
        threshold = m1 - lam / m1
        report.denominator_floor = floor
        report.denominator_violations = int(floor < threshold)
    return report
