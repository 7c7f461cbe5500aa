"""Hierarchical bisection decomposition (the low-complexity route).

Instead of solving the full M*-way partition at once, repeatedly bisect the
subnetwork holding the most UEs. Each bisection targets UE counts that keep
one side an integer multiple of the cap, which forces the final profile of
M*-1 full subnetworks plus one remainder and guarantees the cap is met. BS
floors sized to each side's future split count keep every later bisection
feasible.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .capacity import sumcut
from .errors import InfeasibleProblem
from .netmodel import BipartiteGraph
from .partition import Decomposition, optimal_m, validate
from .solver_bnb import SolveReport, SolverConfig, solve_p5


@dataclass(frozen=True)
class BisectPlan:
    """UE targets and BS floors for splitting a k_n-UE subnetwork."""

    k_n: int
    k1: int
    k2: int
    bs_floor_1: int
    bs_floor_2: int

    @classmethod
    def for_subnetwork(cls, k_n: int, k_max: int) -> "BisectPlan":
        k1, k2 = bisect_targets(k_n, k_max)
        return cls(k_n=k_n, k1=k1, k2=k2,
                   bs_floor_1=optimal_m(k1, k_max),
                   bs_floor_2=optimal_m(k2, k_max))


def bisect_targets(k_n: int, k_max: int) -> tuple[int, int]:
    """UE counts for the two sides of a bisection.

    The first side takes k_max times half the remaining number of full
    subnetworks (rounded down), so it is always an integer multiple of
    k_max; the second side takes the rest.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if k_n <= k_max:
        raise ValueError(f"nothing to split: k_n={k_n} <= k_max={k_max}")
    k1 = k_max * (optimal_m(k_n, k_max) // 2)
    return k1, k_n - k1


def size_profile(k: int, k_max: int) -> list[int]:
    """Final UE-count multiset of the bisection recursion, no graph needed."""
    sizes = [k]
    m_star = optimal_m(k, k_max)
    for _ in range(m_star - 1):
        sizes.sort()
        big = sizes.pop()
        k1, k2 = bisect_targets(big, k_max)
        sizes.extend([k1, k2])
    return sorted(sizes)


def bisect_decompose(graph: BipartiteGraph, k_max: int,
                     cfg: SolverConfig = SolverConfig(),
                     trace_path=None) -> SolveReport:
    """Decompose the graph into M* subnetworks by repeated bisection.

    Each iteration splits the subnetwork with the most UEs (ties by lowest
    canonical label) with an exact two-way solve. Emits one JSON-lines trace
    record per iteration when trace_path is given.
    """
    k, l = graph.n_ue, graph.n_bs
    n = graph.n
    m_star = optimal_m(k, k_max)
    if l < m_star:
        raise InfeasibleProblem(f"need at least {m_star} BSs, graph has {l}")
    assignment = np.zeros(n, dtype=np.int64)
    m_cur = 1
    total_nodes = 0
    total_wall = 0.0
    worst_gap = 0.0
    status = "optimal"
    trace = []
    for it in range(1, m_star):
        ue_counts = np.bincount(assignment[:k], minlength=m_cur)
        target = int(np.argmax(ue_counts))  # argmax takes the lowest label on ties
        plan = BisectPlan.for_subnetwork(int(ue_counts[target]), k_max)
        ue_idx = np.flatnonzero(assignment[:k] == target)
        bs_idx = np.flatnonzero(assignment[k:] == target)
        sub = graph.subgraph(ue_idx, bs_idx)
        try:
            rep = solve_p5(sub, plan.k1, plan.k2, plan.bs_floor_1,
                           plan.bs_floor_2, cfg)
        except InfeasibleProblem as exc:
            raise InfeasibleProblem(f"bisection iteration {it}: {exc}") from exc
        if rep.decomposition is None:
            raise InfeasibleProblem(
                f"bisection iteration {it}: no incumbent within limits")
        total_nodes += rep.nodes_explored
        total_wall += rep.wall_time
        worst_gap = max(worst_gap, rep.gap)
        if rep.status != "optimal" and status == "optimal":
            status = rep.status
        sub_assign = rep.decomposition.assignment
        side2 = np.flatnonzero(sub_assign == 1)
        members = np.concatenate([ue_idx, k + bs_idx])
        assignment[members[side2]] = m_cur
        m_cur += 1
        # keep labels in first-vertex order so size ties break canonically
        assignment = Decomposition(assignment, k, m_cur).canonical().assignment
        trace.append({
            "iteration": it, "selected_ue_count": plan.k_n,
            "k1": plan.k1, "k2": plan.k2,
            "objective": rep.objective, "nodes": rep.nodes_explored,
        })
        # every piece must keep enough BSs for its own future splits
        d = Decomposition(assignment, k, m_cur)
        bs_counts = d.bs_counts()
        for j, c in enumerate(d.ue_counts()):
            if c > 0 and bs_counts[j] < optimal_m(int(c), k_max):
                raise AssertionError(
                    f"iteration {it} left subnetwork {j} short of BSs")
    decomp = Decomposition(assignment, k, m_star).canonical()
    assert not validate(decomp, k_max)
    if trace_path is not None:
        with open(trace_path, "w") as fh:
            for row in trace:
                fh.write(json.dumps(row) + "\n")
    report = SolveReport(objective=sumcut(graph, decomp), decomposition=decomp,
                         nodes_explored=total_nodes, gap=worst_gap,
                         wall_time=total_wall, status=status)
    report.audit = trace
    return report
