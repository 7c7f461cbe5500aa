"""Exact branch-and-bound solver for capped min-sumcut partitioning.

Minimizes sum_m x_m^T L x_m over one-subnetwork-per-vertex assignments with
per-column UE bounds and BS floors. Lower bounds come from a dual-certified
continuous relaxation (see _kernels.relax_dual_bound); incumbents come from
rounding the relaxed point and repairing feasibility. Search is best-bound
first. Branching pins one UE to one column per child; once every UE is
pinned the optimal BS completion is computed directly, which is exact
because the objective is separable over BS choices at that point.
"""
from __future__ import annotations

import heapq
import itertools
import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .capacity import sumcut
from .errors import InfeasibleProblem
from .netmodel import STREAM_SOLVER, BipartiteGraph, substream
from .partition import Decomposition, optimal_m

_INNER_ITERS = 60
_OUTER_ITERS = 30
_OUTER_ITERS_STANDALONE = 80


class RelaxationInfeasible(Exception):
    """The relaxed subproblem admits no point; the node can be pruned."""


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-6        # relative optimality-gap tolerance
    relax_tol: float = 1e-8      # relaxation convergence tolerance
    node_limit: int | None = None
    time_limit: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.node_limit is not None and self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")


@dataclass(frozen=True)
class ColumnBounds:
    """Per-column UE count window and BS count floor."""

    ue_lo: np.ndarray
    ue_hi: np.ndarray
    bs_lo: np.ndarray

    def __post_init__(self):
        for name in ("ue_lo", "ue_hi", "bs_lo"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float))

    @property
    def m(self) -> int:
        return self.ue_hi.size

    @classmethod
    def capped(cls, m: int, k_max: int, bs_floors=None, ue_floor: int = 0):
        floors = np.ones(m) if bs_floors is None else np.asarray(bs_floors, float)
        return cls(ue_lo=np.full(m, float(ue_floor)),
                   ue_hi=np.full(m, float(k_max)), bs_lo=floors)

    def symmetric(self) -> bool:
        return (np.all(self.ue_lo == self.ue_lo[0])
                and np.all(self.ue_hi == self.ue_hi[0])
                and np.all(self.bs_lo == self.bs_lo[0]))


@dataclass
class SolveReport:
    objective: float
    decomposition: Decomposition | None
    nodes_explored: int
    gap: float
    wall_time: float
    status: str                  # optimal | gap-reached | limit-hit
    audit: list = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        return json.dumps({
            "objective": self.objective,
            "m": None if self.decomposition is None else self.decomposition.m,
            "assignment": (None if self.decomposition is None
                           else self.decomposition.assignment.tolist()),
            "nodes_explored": self.nodes_explored,
            "gap": self.gap,
            "wall_time": self.wall_time,
            "status": self.status,
        })


def _pins_from_fixed(fixed, n) -> np.ndarray:
    pins = np.full(n, -1, dtype=np.int64)
    if fixed is None:
        return pins
    if isinstance(fixed, dict):
        for i, c in fixed.items():
            pins[int(i)] = int(c)
    else:
        pins[:] = np.asarray(fixed, dtype=np.int64)
    return pins


def _counts_feasible(pins, n_ue, bounds: ColumnBounds) -> bool:
    ue_pins = pins[:n_ue]
    cnt = np.bincount(ue_pins[ue_pins >= 0], minlength=bounds.m).astype(float)
    if np.any(cnt > bounds.ue_hi):
        return False
    free_ue = int((ue_pins < 0).sum())
    need = np.maximum(bounds.ue_lo - cnt, 0.0).sum()
    slack = (bounds.ue_hi - cnt).sum()
    if need > free_ue or free_ue > slack:
        return False
    n_bs = pins.size - n_ue
    return bounds.bs_lo.sum() <= n_bs


def _assemble_node(lap, pins, n_ue, bounds: ColumnBounds):
    """Split the quadratic form into pinned constant, linear tilt on free
    rows, and the free-free block; adjust column bounds for pinned counts."""
    m = bounds.m
    n = pins.size
    free = pins < 0
    onehot = np.zeros((n, m))
    pinned = np.flatnonzero(~free)
    onehot[pinned, pins[pinned]] = 1.0
    const = float(np.einsum("im,ij,jm->", onehot, lap, onehot))
    lff = np.ascontiguousarray(lap[np.ix_(free, free)])
    lin = np.ascontiguousarray(2.0 * (lap[free] @ onehot))
    ue_pins = pins[:n_ue]
    cnt = np.bincount(ue_pins[ue_pins >= 0], minlength=m).astype(float)
    lo = np.maximum(bounds.ue_lo - cnt, 0.0)
    hi = bounds.ue_hi - cnt
    is_ue = (np.flatnonzero(free) < n_ue).astype(float)
    return free, onehot, const, lff, lin, lo, hi, is_ue


def relax_lower_bound(graph: BipartiteGraph, bounds: ColumnBounds, fixed,
                      relax_tol: float = 1e-8, mu0=None, lip=None,
                      prune_bar=np.inf, outer_iters=_OUTER_ITERS_STANDALONE):
    """Fractional point and certified lower bound under a partial assignment.

    fixed maps vertex index -> column (dict, or a full vector with -1 for
    free). Returns (x, lb); the bound is valid for every integer completion
    of the pattern. Raises RelaxationInfeasible when the pinned counts
    already rule out any completion.
    """
    lap = graph.laplacian
    pins = _pins_from_fixed(fixed, graph.n)
    if not _counts_feasible(pins, graph.n_ue, bounds):
        raise RelaxationInfeasible
    free, onehot, const, lff, lin, lo, hi, is_ue = _assemble_node(
        lap, pins, graph.n_ue, bounds)
    if not free.any():
        return onehot, const
    if lip is None:
        lip = 2.0 * max(float(np.linalg.eigvalsh(lap).max()), 1e-12) * 1.0001
    if mu0 is None:
        mu0 = np.zeros((3, bounds.m))
    bar = prune_bar - const if np.isfinite(prune_bar) else 1e300
    x_free, lb_rel, _ = _kernels.relax_dual_bound(
        lff, lin, is_ue, lo, hi, bounds.bs_lo.astype(float), mu0, lip,
        outer_iters, _INNER_ITERS, relax_tol, bar)
    x = onehot.copy()
    x[free] = x_free
    # the whole quadratic form is PSD, so 0 is always a valid floor on the
    # total (but not on the free part alone, whose cross terms can be < 0)
    return x, max(const + lb_rel, 0.0)


def round_and_repair(x, n_ue, bounds: ColumnBounds, lap=None):
    """Per-row argmax assignment followed by greedy feasibility repair.

    UEs leave over-cap columns lowest-margin first, landing where the
    objective grows least; under-floor columns pull in the cheapest UE;
    BS-deficient columns pull in the BS with the highest affinity for them.
    Returns the integer assignment vector, or None when repair cannot
    restore feasibility. A feasible binary x is returned unchanged.
    """
    x = np.asarray(x, dtype=float)
    n, m = x.shape
    assign = np.argmax(x, axis=1)
    srt = np.sort(x, axis=1)
    margin = srt[:, -1] - (srt[:, -2] if m > 1 else 0.0)
    if lap is None:
        lap = np.zeros((n, n))
    onehot = np.zeros((n, m))
    onehot[np.arange(n), assign] = 1.0

    def move_cost(i, src, dst):
        s = lap[i] @ onehot
        return 2.0 * (s[dst] - s[src]) + 2.0 * lap[i, i]

    def do_move(i, dst):
        onehot[i, assign[i]] = 0.0
        onehot[i, dst] = 1.0
        assign[i] = dst

    # over-cap UE columns
    while True:
        cnt = np.bincount(assign[:n_ue], minlength=m).astype(float)
        over = np.flatnonzero(cnt > bounds.ue_hi)
        if over.size == 0:
            break
        c = int(over[np.argmax((cnt - bounds.ue_hi)[over])])
        members = np.flatnonzero(assign[:n_ue] == c)
        i = int(members[np.argmin(margin[members])])
        targets = np.flatnonzero(cnt < bounds.ue_hi)
        targets = targets[targets != c]
        if targets.size == 0:
            return None
        dst = int(targets[np.argmin([move_cost(i, c, t) for t in targets])])
        do_move(i, dst)
    # under-floor UE columns
    while True:
        cnt = np.bincount(assign[:n_ue], minlength=m).astype(float)
        under = np.flatnonzero(cnt < bounds.ue_lo)
        if under.size == 0:
            break
        c = int(under[0])
        sources = np.flatnonzero(cnt > bounds.ue_lo)
        cand = np.flatnonzero(np.isin(assign[:n_ue], sources))
        if cand.size == 0:
            return None
        costs = [move_cost(int(i), assign[i], c) for i in cand]
        i = int(cand[np.argmin(costs)])
        do_move(i, c)
    # BS floors
    while True:
        cnt = np.bincount(assign[n_ue:], minlength=m).astype(float)
        deficient = np.flatnonzero(cnt < bounds.bs_lo)
        if deficient.size == 0:
            break
        c = int(deficient[0])
        rows = np.arange(n_ue, n)
        donors = rows[cnt[assign[rows]] - 1 >= bounds.bs_lo[assign[rows]]]
        donors = donors[assign[donors] != c]
        if donors.size == 0:
            return None
        b = int(donors[np.argmax(x[donors, c])])
        do_move(b, c)
    return assign


def _bs_completion(ue_assign, w, bounds: ColumnBounds):
    """Optimal BS columns given a full UE assignment (the objective is then
    separable per BS up to the floor constraints). Returns (value, assignment)
    with value the resulting sumcut, or None when floors cannot be met."""
    k, l = w.shape
    m = bounds.m
    gain = np.zeros((l, m))
    for j in range(m):
        sel = ue_assign == j
        if sel.any():
            gain[:, j] = w[sel].sum(axis=0)
    col = np.argmax(gain, axis=1)
    floors = bounds.bs_lo.astype(int)
    if floors.sum() > l:
        return None
    cnt = np.bincount(col, minlength=m)
    if np.all(cnt >= floors):
        within = gain[np.arange(l), col].sum()
        return 2.0 * (w.sum() - within), col
    if m == 2:
        col = col.copy()
        for c in (0, 1):
            need = floors[c] - np.bincount(col, minlength=2)[c]
            if need > 0:
                o = 1 - c
                cand = np.flatnonzero(col == o)
                regret = gain[cand, o] - gain[cand, c]
                move = cand[np.argsort(regret, kind="stable")[:need]]
                col[move] = c
        if np.any(np.bincount(col, minlength=2) < floors):
            return None
        within = gain[np.arange(l), col].sum()
        return 2.0 * (w.sum() - within), col
    # general case: transportation LP, integral at a vertex
    c_vec = -gain.reshape(-1)
    a_eq = np.zeros((l, l * m))
    for b in range(l):
        a_eq[b, b * m:(b + 1) * m] = 1.0
    a_ub = np.zeros((m, l * m))
    for j in range(m):
        a_ub[j, j::m] = -1.0
    res = linprog(c_vec, A_ub=a_ub, b_ub=-floors.astype(float), A_eq=a_eq,
                  b_eq=np.ones(l), bounds=(0.0, 1.0), method="highs")
    if not res.success:
        return None
    z = res.x.reshape(l, m)
    col = np.argmax(z, axis=1)
    if np.any(np.bincount(col, minlength=m) < floors):
        return None
    within = gain[np.arange(l), col].sum()
    return 2.0 * (w.sum() - within), col


def _assignment_objective(assign, w, n_ue):
    within = 0.0
    for b in range(w.shape[1]):
        sel = assign[:n_ue] == assign[n_ue + b]
        within += w[sel, b].sum()
    return 2.0 * (w.sum() - within)


def _branch_and_bound(graph: BipartiteGraph, bounds: ColumnBounds,
                      cfg: SolverConfig, symmetric, trace_path=None,
                      audit=False) -> SolveReport:
    start = time.perf_counter()
    lap = graph.laplacian
    n, n_ue = graph.n, graph.n_ue
    m = bounds.m
    if bounds.bs_lo.sum() > graph.n_bs:
        raise InfeasibleProblem(
            f"BS floors need {int(bounds.bs_lo.sum())} BSs, graph has {graph.n_bs}")
    lip = 2.0 * max(float(np.linalg.eigvalsh(lap).max()), 1e-12) * 1.0001
    rng = substream(cfg.seed, STREAM_SOLVER)
    tie = itertools.count()

    pins0 = np.full(n, -1, dtype=np.int64)
    if symmetric and n_ue >= 1:
        pins0[0] = 0  # column labels are interchangeable; anchor the first UE

    inc_val = np.inf
    inc_assign = None
    # heap entries: (key, tie, pins, mu, depth, cached (lb, x) or None)
    heap = [(0.0, next(tie), pins0, np.zeros((3, m)), 0, None)]
    nodes = 0
    status = None
    gap = np.inf
    trace_rows = []
    audit_rows = [] if audit else None

    def bar():
        return inc_val - cfg.epsilon * abs(inc_val) if np.isfinite(inc_val) else np.inf

    def consider(assign):
        nonlocal inc_val, inc_assign
        val = _assignment_objective(assign, graph.w, n_ue)
        if val < inc_val:
            inc_val = val
            inc_assign = assign.copy()

    while heap:
        key, _, pins, mu, depth, cached = heapq.heappop(heap)
        if cfg.node_limit is not None and nodes >= cfg.node_limit:
            status = "limit-hit"
            gap = _rel_gap(inc_val, key)
            break
        if cfg.time_limit is not None and time.perf_counter() - start > cfg.time_limit:
            status = "limit-hit"
            gap = _rel_gap(inc_val, key)
            break
        if key >= bar():
            # best-bound order: every remaining node is at least this weak
            status = "gap-reached" if heap else "optimal"
            gap = _rel_gap(inc_val, key)
            if audit_rows is not None:
                audit_rows.append(_audit_row(nodes, depth, key, inc_val,
                                             "pruned-bound", pins))
            break

        if cached is None:
            nodes += 1
            if not _counts_feasible(pins, n_ue, bounds):
                if audit_rows is not None:
                    audit_rows.append(_audit_row(nodes, depth, key, inc_val,
                                                 "pruned-infeasible", pins))
                continue
            free_ue = np.flatnonzero(pins[:n_ue] < 0)
            if free_ue.size == 0:
                done = _bs_completion(pins[:n_ue], graph.w, bounds)
                if done is not None:
                    val, col = done
                    full = pins.copy()
                    full[n_ue:] = col
                    consider(full)
                if audit_rows is not None:
                    audit_rows.append(_audit_row(nodes, depth, key, inc_val,
                                                 "leaf-closed", pins))
                if trace_path is not None:
                    trace_rows.append((nodes, depth, key, inc_val))
                continue

            free, onehot, const, lff, lin, lo, hi, is_ue = _assemble_node(
                lap, pins, n_ue, bounds)
            node_bar = bar() - const if np.isfinite(inc_val) else 1e300
            x_free, lb_rel, mu = _kernels.relax_dual_bound(
                lff, lin, is_ue, lo, hi, bounds.bs_lo, mu, lip,
                _OUTER_ITERS, _INNER_ITERS, cfg.relax_tol, node_bar)
            lb = max(const + lb_rel, 0.0, key)
            if trace_path is not None:
                trace_rows.append((nodes, depth, lb, inc_val))
            x = onehot
            x[free] = x_free

            cand = round_and_repair(x, n_ue, bounds, lap=lap)
            if cand is not None:
                consider(cand)
                # BS side re-optimized for the rounded UE pattern
                done = _bs_completion(cand[:n_ue], graph.w, bounds)
                if done is not None:
                    full = cand.copy()
                    full[n_ue:] = done[1]
                    consider(full)
            if lb >= bar():
                if audit_rows is not None:
                    audit_rows.append(_audit_row(nodes, depth, lb, inc_val,
                                                 "pruned-bound", pins))
                continue
            if heap and lb > heap[0][0] + 1e-12:
                # tightened bound is no longer the global minimum: re-queue
                # so only true best-bound nodes get branched
                heapq.heappush(heap, (lb, next(tie), pins, mu, depth, (lb, x)))
                continue
        else:
            lb, x = cached
            if lb >= bar():
                if audit_rows is not None:
                    audit_rows.append(_audit_row(nodes, depth, lb, inc_val,
                                                 "pruned-bound", pins))
                continue
            free_ue = np.flatnonzero(pins[:n_ue] < 0)

        if audit_rows is not None:
            audit_rows.append(_audit_row(nodes, depth, lb, inc_val,
                                         "branched", pins))
        scores = np.min(np.abs(x[free_ue] - 0.5), axis=1)
        best = scores.min()
        ties = free_ue[scores <= best + 1e-12]
        row = int(ties[0]) if ties.size == 1 else int(rng.choice(ties))
        opened = np.unique(pins[pins >= 0])
        if symmetric:
            closed = np.setdiff1d(np.arange(m), opened)
            targets = list(opened) + ([int(closed[0])] if closed.size else [])
        else:
            targets = list(range(m))
        for c in targets:
            child = pins.copy()
            child[row] = c
            if _counts_feasible(child, n_ue, bounds):
                heapq.heappush(heap, (lb, next(tie), child, mu.copy(),
                                      depth + 1, None))
    else:
        status = "optimal"
        gap = 0.0

    wall = time.perf_counter() - start
    if trace_path is not None:
        with open(trace_path, "w") as fh:
            fh.write("node,depth,lb,incumbent\n")
            for r in trace_rows:
                fh.write(f"{r[0]},{r[1]},{r[2]!r},{r[3]!r}\n")
    if inc_assign is None:
        if status in (None, "optimal"):
            raise InfeasibleProblem("no feasible decomposition exists")
        report = SolveReport(np.nan, None, nodes, np.inf, wall, "limit-hit")
        report.audit = audit_rows or []
        return report
    if status is None:
        status = "optimal"
        gap = 0.0
    decomp = Decomposition(inc_assign, n_ue, m).canonical()
    # report through the shared path so equal decompositions compare bit-equal
    report = SolveReport(float(sumcut(graph, decomp)), decomp, nodes,
                         float(gap), wall, status)
    report.audit = audit_rows or []
    return report


def _rel_gap(inc, lb):
    if not np.isfinite(inc):
        return np.inf
    return max(0.0, (inc - lb) / max(abs(inc), 1e-300))


def _audit_row(node, depth, lb, inc, action, pins):
    return {"node": node, "depth": depth, "lb": float(lb),
            "incumbent": float(inc) if np.isfinite(inc) else None,
            "action": action, "pins": pins.copy()}


def solve_p4(graph: BipartiteGraph, k_max: int, cfg: SolverConfig = SolverConfig(),
             trace_path=None, audit=False) -> SolveReport:
    """Decompose the whole graph into ceil(K/k_max) subnetworks minimizing
    sumcut, with at most k_max UEs and at least one BS per subnetwork."""
    k, l = graph.n_ue, graph.n_bs
    m = optimal_m(k, k_max)
    if l < m:
        raise InfeasibleProblem(f"need at least {m} BSs, graph has {l}")
    ue_floor = max(0, k - (m - 1) * k_max)  # implied by the caps elsewhere
    bounds = ColumnBounds(ue_lo=np.full(m, float(ue_floor)),
                          ue_hi=np.full(m, float(k_max)),
                          bs_lo=np.ones(m))
    return _branch_and_bound(graph, bounds, cfg, symmetric=True,
                             trace_path=trace_path, audit=audit)


def solve_p5(graph: BipartiteGraph, k1: int, k2: int, bs_floor_1: int,
             bs_floor_2: int, cfg: SolverConfig = SolverConfig(),
             trace_path=None, audit=False) -> SolveReport:
    """Bisect the graph into two subnetworks holding exactly k1 and k2 UEs
    and at least bs_floor_1 / bs_floor_2 BSs."""
    if k1 < 1 or k2 < 1:
        raise ValueError(f"both sides need at least one UE, got {k1}, {k2}")
    if k1 + k2 != graph.n_ue:
        raise ValueError(f"k1 + k2 = {k1 + k2} != K = {graph.n_ue}")
    if bs_floor_1 < 0 or bs_floor_2 < 0:
        raise ValueError("BS floors must be nonnegative")
    if bs_floor_1 + bs_floor_2 > graph.n_bs:
        raise InfeasibleProblem(
            f"BS floors {bs_floor_1}+{bs_floor_2} exceed L={graph.n_bs}")
    bounds = ColumnBounds(ue_lo=np.array([k1, k2], dtype=float),
                          ue_hi=np.array([k1, k2], dtype=float),
                          bs_lo=np.array([bs_floor_1, bs_floor_2], dtype=float))
    return _branch_and_bound(graph, bounds, cfg, symmetric=bounds.symmetric(),
                             trace_path=trace_path, audit=audit)
