"""Quenched simulation of the biased walk, speed and hitting estimators.

From a vertex with k children the walk steps to the parent with probability
lam/(lam+k) and to each child with probability 1/(lam+k); at a parentless
vertex it picks a child uniformly. The artificial root, when present, has one
child, so the walk leaves it deterministically; the same parentless rule
covers it.

Speed is estimated from the terminal statistic (depth after ``steps`` steps)
divided by the step count, one independent tree and walk per replica, with
the standard error taken across replicas. Replicas are iid by construction,
so no autocorrelation correction is needed.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedRegimeError
from .offspring import OffspringDistribution
from .rng import D_HIT, D_TREE, D_WALK, D_WALK_TREE, substream
from .tree import ROOT, QuenchedTree, attach_star_root, sample_truncated_tree

_GRAPH_CODES = {"T": 0, "T_star": 1}
_BLOCK = 1 << 14
_MAX_SYNC_ROUNDS = 10_000_000


@dataclass
class WalkState:
    """Mutable walk cursor: current vertex, step count and its own stream."""

    position: int
    steps: int
    rng: np.random.Generator


@dataclass
class SpeedEstimate:
    mean: float
    stderr: float
    replicas: int
    steps_per_replica: int
    lam: float
    graph: str
    regime_warning: bool = False
    per_replica: list | None = None


@dataclass
class HittingEstimate:
    estimate: float
    stderr: float
    trials: int
    successes: int
    lam: float
    level: int
    mode: str


def transition_step(tree: QuenchedTree, state: WalkState, lam: float) -> WalkState:
    """Advance the walk one step, generating children lazily on first visit."""
    if lam < 0:
        raise ValueError(f"bias must be >= 0, got {lam:.9g}")
    pos = state.position
    kids = tree.children(pos)
    k = len(kids)
    par = tree.parent[pos]
    u = state.rng.random()
    if k == 0:
        if par < 0:
            raise ValueError("walk is stuck at a childless, parentless vertex")
        state.position = par
    elif par < 0:
        j = int(u * k)
        state.position = kids[j if j < k else k - 1]
    else:
        t = u * (lam + k) - lam
        if t < 0.0:
            state.position = par
        else:
            j = int(t)
            state.position = kids[j if j < k else k - 1]
    state.steps += 1
    return state


def _walk_final_depth(tree: QuenchedTree, lam: float, steps: int,
                      rng: np.random.Generator, start: int = ROOT) -> int:
    """Depth after ``steps`` steps; tight-loop equivalent of transition_step
    (consumes the identical uniform stream)."""
    parent = tree.parent
    depth = tree.depth
    first_child = tree.first_child
    nu_list = tree.nu
    draw_nu = tree._draw_nu
    pos = start
    dep = depth[start]
    remaining = steps
    while remaining > 0:
        block = rng.random(min(_BLOCK, remaining)).tolist()
        remaining -= len(block)
        for u in block:
            k = nu_list[pos]
            if k < 0:
                k = draw_nu()
                fc = len(parent)
                parent.extend([pos] * k)
                depth.extend([dep + 1] * k)
                first_child.extend([-1] * k)
                nu_list.extend([-1] * k)
                first_child[pos] = fc
                nu_list[pos] = k
            par = parent[pos]
            if par < 0:
                j = int(u * k)
                pos = first_child[pos] + (j if j < k else k - 1)
                dep += 1
            else:
                t = u * (lam + k) - lam
                if t < 0.0:
                    pos = par
                    dep -= 1
                else:
                    j = int(t)
                    pos = first_child[pos] + (j if j < k else k - 1)
                    dep += 1
    return dep


def _replica_depths(entries, lam, steps, seed, graph, indices) -> list[int]:
    dist = OffspringDistribution(entries)
    gcode = _GRAPH_CODES[graph]
    out = []
    for i in indices:
        tree = QuenchedTree(dist, substream(seed, D_WALK_TREE, gcode, i))
        if graph == "T_star":
            attach_star_root(tree)
        walk_rng = substream(seed, D_WALK, gcode, i)
        out.append(_walk_final_depth(tree, lam, steps, walk_rng))
    return out


def simulate_speed(dist: OffspringDistribution, lam: float, steps: int,
                   replicas: int, seed: int, graph: str = "T",
                   keep_replicas: bool = False, workers: int = 1) -> SpeedEstimate:
    """Monte Carlo speed estimate: fresh tree and walk per replica.

    Deterministic in (dist, lam, steps, replicas, seed, graph) and independent
    of ``workers``; replica streams are keyed by index and results are
    aggregated in index order.
    """
    if graph not in _GRAPH_CODES:
        raise ValueError(f"graph must be one of {sorted(_GRAPH_CODES)}, got {graph!r}")
    if dist.has_leaves:
        raise UnsupportedRegimeError("speed simulation needs a leafless offspring law")
    if lam < 0:
        raise ValueError(f"bias must be >= 0, got {lam:.9g}")
    if steps < 1 or replicas < 2:
        raise ValueError("need steps >= 1 and replicas >= 2")
    regime_warning = lam >= dist.m
    if regime_warning:
        warnings.warn(
            f"bias {lam:.9g} at or above mean branching {dist.m:.9g}; the walk "
            "is not transient and the speed estimate is only a finite-time statistic",
            UserWarning, stacklevel=2)

    indices = list(range(replicas))
    if workers > 1:
        chunks = [indices[c::workers] for c in range(workers)]
        depths_by_index = {}
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [(chunk, pool.submit(_replica_depths, dist.entries, lam,
                                        steps, seed, graph, chunk))
                    for chunk in chunks if chunk]
            for chunk, fut in futs:
                for i, dep in zip(chunk, fut.result()):
                    depths_by_index[i] = dep
        depths = [depths_by_index[i] for i in indices]
    else:
        depths = _replica_depths(dist.entries, lam, steps, seed, graph, indices)

    speeds = np.array(depths, dtype=float) / steps
    mean = float(speeds.mean())
    stderr = float(speeds.std(ddof=1) / np.sqrt(replicas))
    per = None
    if keep_replicas:
        per = [(i, depths[i], steps, float(speeds[i])) for i in indices]
    return SpeedEstimate(mean=mean, stderr=stderr, replicas=replicas,
                         steps_per_replica=steps, lam=lam, graph=graph,
                         regime_warning=regime_warning, per_replica=per)


def hitting_beta_mc(dist_or_tree, lam: float, n: int, trials: int, seed: int,
                    mode: str = "quenched") -> HittingEstimate:
    """Estimate the probability of reaching depth n before the artificial
    root, walking from the root.

    quenched: all trials on one fixed tree (supplied or sampled from the
    seed). annealed: a fresh tree per trial, estimating the tree-averaged
    probability.
    """
    if lam < 0:
        raise ValueError(f"bias must be >= 0, got {lam:.9g}")
    if n < 1:
        raise ValueError(f"level must be >= 1, got {n}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if mode not in ("quenched", "annealed"):
        raise ValueError(f"mode must be quenched or annealed, got {mode!r}")

    if mode == "annealed":
        if not isinstance(dist_or_tree, OffspringDistribution):
            raise ValueError("annealed mode requires an offspring law, not a fixed tree")
        successes = 0
        for t in range(trials):
            tree = QuenchedTree(dist_or_tree, substream(seed, D_TREE, t))
            star = attach_star_root(tree)
            successes += _hit_level_once(tree, star, lam, n,
                                         substream(seed, D_HIT, t))
        p = successes / trials
        return HittingEstimate(estimate=p, stderr=float(np.sqrt(p * (1 - p) / trials)),
                               trials=trials, successes=successes, lam=lam,
                               level=n, mode=mode)

    if isinstance(dist_or_tree, OffspringDistribution):
        tree = sample_truncated_tree(dist_or_tree, n, seed)
    else:
        tree = dist_or_tree
        if not tree.is_materialized_to(n):
            raise ValueError(f"fixed tree is not materialized to depth {n}")
    if tree.star_root is None:
        attach_star_root(tree)
    successes = _hit_level_vectorized(tree, lam, n, trials, substream(seed, D_HIT, 0))
    p = successes / trials
    return HittingEstimate(estimate=p, stderr=float(np.sqrt(p * (1 - p) / trials)),
                           trials=trials, successes=successes, lam=lam,
                           level=n, mode=mode)


def _hit_level_once(tree: QuenchedTree, star: int, lam: float, n: int,
                    rng: np.random.Generator) -> int:
    """One lazy-tree trial; returns 1 on reaching depth n first."""
    state = WalkState(position=ROOT, steps=0, rng=rng)
    while True:
        transition_step(tree, state, lam)
        if state.position == star:
            return 0
        if tree.depth[state.position] == n:
            return 1


def _hit_level_vectorized(tree: QuenchedTree, lam: float, n: int, trials: int,
                          rng: np.random.Generator) -> int:
    parent, depth, first_child, nu = tree.arrays()
    star = tree.star_root
    pos = np.full(trials, ROOT, dtype=np.int64)
    successes = 0
    for _ in range(_MAX_SYNC_ROUNDS):
        if pos.size == 0:
            return successes
        u = rng.random(pos.size)
        k = nu[pos]
        par = parent[pos]
        t = u * (lam + k) - lam
        j = t.astype(np.int64)
        np.minimum(j, k - 1, out=j)
        np.maximum(j, 0, out=j)
        pos = np.where(t >= 0.0, first_child[pos] + j, par)
        succ = depth[pos] == n
        fail = pos == star
        successes += int(succ.sum())
        pos = pos[~(succ | fail)]
    raise RuntimeError("hitting walk failed to absorb within the round cap")


def lemma0_compare(dist: OffspringDistribution, lam: float, steps: int,
                   replicas: int, seed: int,
                   workers: int = 1) -> tuple[SpeedEstimate, SpeedEstimate, float]:
    """Speed on the bare tree versus the tree with the artificial root,
    estimated with independent randomness, plus the discrepancy z-score."""
    est_t = simulate_speed(dist, lam, steps, replicas, seed, graph="T",
                           workers=workers)
    est_s = simulate_speed(dist, lam, steps, replicas, seed, graph="T_star",
                           workers=workers)
    if est_t.mean == est_s.mean:
        z = 0.0
    else:
        denom = float(np.hypot(est_t.stderr, est_s.stderr))
        z = abs(est_t.mean - est_s.mean) / denom if denom > 0 else float("inf")
    return est_t, est_s, z
