"""Reference competitors: brute-force enumeration oracle and two-stage
k-means baselines (UE-centric and BS-centric)."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from . import capacity as capacity_mod
from .errors import EnumerationBudgetExceeded, InfeasibleProblem
from .netmodel import STREAM_BASELINE, BipartiteGraph, ChannelModel, \
    NetworkLayout, substream
from .partition import Decomposition, optimal_m, validate


@dataclass(frozen=True)
class EnumerationBudget:
    max_assignments: int = 10 ** 8

    def __post_init__(self):
        if self.max_assignments < 1:
            raise ValueError("budget must be positive")


@lru_cache(maxsize=None)
def stirling2(n: int, m: int) -> int:
    """Number of partitions of n labeled items into exactly m nonempty blocks."""
    if m < 0 or m > n:
        return 0
    if n == 0:
        return 1 if m == 0 else 0
    return m * stirling2(n - 1, m) + stirling2(n - 1, m - 1)


def count_partitions(n: int, m: int) -> int:
    """Enumerated partition count (canonical labelings with exactly m blocks)."""
    return int(_kernels.count_rgs_leaves(n, m))


def brute_force(graph: BipartiteGraph, k_max: int, m: int, objective="sumcut",
                channel: ChannelModel | None = None,
                budget: EnumerationBudget = EnumerationBudget()):
    """Globally optimal decomposition with exactly m subnetworks.

    Enumerates unlabeled partitions via canonical restricted-growth strings,
    so each of the S(K+L, m) partitions is visited once. objective is
    "sumcut" (minimized) or "capacity" (the per-BS approximation, maximized;
    needs a channel).

    Returns (decomposition, value).
    """
    if objective not in ("sumcut", "capacity"):
        raise ValueError(f"unknown objective {objective!r}")
    if objective == "capacity" and channel is None:
        raise ValueError("capacity objective needs a channel model")
    n = graph.n
    required = stirling2(n, m)
    if required > budget.max_assignments:
        raise EnumerationBudgetExceeded(required, budget.max_assignments)
    p = channel.power_p if channel is not None else 0.0
    n0 = channel.noise_n0 if channel is not None else 1.0
    assign, value, found = _kernels.enum_best_partition(
        graph.w, graph.n_ue, graph.n_bs, m, k_max,
        objective == "capacity", p, n0)
    if not found:
        raise InfeasibleProblem(
            f"no feasible decomposition with m={m}, k_max={k_max}")
    decomp = Decomposition(assign, graph.n_ue, m).canonical()
    # report the value through the shared evaluation path so equal
    # decompositions compare bit-equal across solvers
    if objective == "capacity":
        value = capacity_mod.sum_capacity_approx(
            np.sqrt(graph.w), channel, decomp)
    else:
        value = capacity_mod.sumcut(graph, decomp)
    return decomp, float(value)


def _farthest_point_init(points, n_clusters, rng):
    centers = np.empty((n_clusters, 2))
    first = int(rng.integers(points.shape[0]))
    centers[0] = points[first]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, n_clusters):
        centers[j] = points[int(np.argmax(d2))]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(points, n_clusters, rng, max_iter=100):
    """Plain k-means with farthest-point init; ties and empty clusters are
    resolved deterministically. Returns the label vector."""
    if n_clusters >= points.shape[0]:
        return np.arange(points.shape[0]) % n_clusters
    centers = _farthest_point_init(points, n_clusters, rng)
    labels = np.full(points.shape[0], -1)
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
        new_labels = np.argmin(d2, axis=1)
        for j in range(n_clusters):
            sel = new_labels == j
            if not np.any(sel):
                # reseed an empty cluster at the point worst served now
                worst = int(np.argmax(d2[np.arange(len(new_labels)), new_labels]))
                new_labels[worst] = j
                sel = new_labels == j
            centers[j] = points[sel].mean(axis=0)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels


def _split_oversized(points, labels, k_max, seed):
    """Recursively bisect clusters that exceed the UE cap."""
    split_id = 0
    while True:
        counts = np.bincount(labels)
        over = np.flatnonzero(counts > k_max)
        if over.size == 0:
            return labels
        j = int(over[0])
        members = np.flatnonzero(labels == j)
        rng = substream(seed, STREAM_BASELINE, 1, split_id)
        split_id += 1
        sub = _lloyd(points[members], 2, rng)
        new_label = labels.max() + 1
        labels = labels.copy()
        labels[members[sub == 1]] = new_label


def kmeans_ue_centric(layout: NetworkLayout, gains: np.ndarray, k_max: int,
                      seed: int) -> Decomposition:
    """Two-stage baseline: cluster UEs geographically, then attach BSs.

    UE clusters over the cap are recursively bisected; each BS then joins
    the cluster with the nearest UE centroid; clusters left with no BS pull
    in the nearest BS that can be moved without emptying its donor.
    """
    k, l = layout.k, layout.l
    m0 = optimal_m(k, k_max)
    rng = substream(seed, STREAM_BASELINE, 0)
    labels = _lloyd(layout.ue, m0, rng)
    labels = _split_oversized(layout.ue, labels, k_max, seed)
    # compact labels in first-occurrence order
    _, labels = np.unique(labels, return_inverse=True)
    m = labels.max() + 1
    if l < m:
        raise InfeasibleProblem(f"{m} clusters but only {l} BSs")
    centroids = np.array([layout.ue[labels == j].mean(axis=0) for j in range(m)])
    d2 = ((layout.bs[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=-1)
    bs_labels = np.argmin(d2, axis=1)
    bs_labels = _repair_empty_bs(bs_labels, d2, m)
    assignment = np.concatenate([labels, bs_labels])
    decomp = Decomposition(assignment, k, int(m)).canonical()
    assert not validate(decomp, k_max)
    return decomp


def _repair_empty_bs(bs_labels, d2, m):
    """Give every cluster a BS by moving in the nearest one whose donor
    cluster keeps at least one BS."""
    bs_labels = bs_labels.copy()
    while True:
        counts = np.bincount(bs_labels, minlength=m)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return bs_labels
        j = int(empty[0])
        order = np.argsort(d2[:, j], kind="stable")
        moved = False
        for b in order:
            if counts[bs_labels[b]] > 1:
                bs_labels[b] = j
                moved = True
                break
        if not moved:
            raise InfeasibleProblem("cannot give every cluster a BS")


def kmeans_bs_centric(layout: NetworkLayout, gains: np.ndarray, k_max: int,
                      seed: int) -> Decomposition:
    """Two-stage baseline: cluster BSs geographically, then attach UEs.

    Each UE joins the cluster of its strongest-gain BS; while a cluster
    exceeds the cap, its weakest-gain UE moves to the best under-cap
    cluster by gain.
    """
    k, l = layout.k, layout.l
    m0 = optimal_m(k, k_max)
    if l < m0:
        raise InfeasibleProblem(f"{m0} clusters but only {l} BSs")
    rng = substream(seed, STREAM_BASELINE, 0)
    bs_labels = _lloyd(layout.bs, m0, rng)
    _, bs_labels = np.unique(bs_labels, return_inverse=True)
    m = bs_labels.max() + 1
    q = np.asarray(gains, dtype=float)
    ue_labels = bs_labels[np.argmax(q, axis=1)]
    # best gain each UE sees inside every cluster
    gain_to = np.full((k, m), -np.inf)
    for j in range(m):
        gain_to[:, j] = q[:, bs_labels == j].max(axis=1)
    while True:
        counts = np.bincount(ue_labels, minlength=m)
        over = np.flatnonzero(counts > k_max)
        if over.size == 0:
            break
        j = int(over[np.argmax(counts[over])])
        members = np.flatnonzero(ue_labels == j)
        weakest = members[int(np.argmin(gain_to[members, j]))]
        under = np.flatnonzero(counts < k_max)
        target = under[int(np.argmax(gain_to[weakest, under]))]
        ue_labels[weakest] = target
    assignment = np.concatenate([ue_labels, bs_labels])
    decomp = Decomposition(assignment, k, int(m)).canonical()
    assert not validate(decomp, k_max)
    return decomp
