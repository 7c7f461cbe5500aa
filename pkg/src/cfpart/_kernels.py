"""Hot numeric kernels, JIT-compiled with numba when available.

Set CFPART_NO_NUMBA=1 to skip JIT compilation; the same functions then run
as plain NumPy/Python, slower but bit-for-bit equivalent. The benchmark in
benchmarks/kernel_bench.py times both paths side by side.
"""
import os

import numpy as np

_NO_NUMBA = os.environ.get("CFPART_NO_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on",
}

if not _NO_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _NO_NUMBA = True

if _NO_NUMBA:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(func):
            return func

        return deco

JIT_ENABLED = not _NO_NUMBA


def python_impl(func):
    """Return the pure-Python/NumPy implementation behind a kernel."""
    return getattr(func, "py_func", func)


@njit(cache=True)
def project_rows_to_simplex(x):
    """In-place Euclidean projection of every row of x onto the unit simplex."""
    n, m = x.shape
    for i in range(n):
        srt = np.sort(x[i])[::-1]
        css = 0.0
        theta = 0.0
        for j in range(m):
            css += srt[j]
            t = (css - 1.0) / (j + 1.0)
            if srt[j] > t:
                theta = t
        for j in range(m):
            v = x[i, j] - theta
            x[i, j] = v if v > 0.0 else 0.0


@njit(cache=True)
def relax_dual_bound(lap, lin, is_ue, ue_lo, ue_hi, bs_lo, mu0, lip,
                     max_outer, max_inner, tol, prune_bar):
    """Certified lower bound for the column-constrained quadratic relaxation.

    Minimizes sum_m x_m^T lap x_m + sum(lin * x) over row-stochastic x
    whose column sums obey per-column UE bounds [ue_lo, ue_hi] and BS
    floors bs_lo. The column constraints are dualized; the multipliers are
    raised by supergradient ascent while the inner simplex-constrained
    subproblem runs Nesterov-accelerated projected gradient. Every outer
    round produces a valid bound via the linearization gap over the row
    simplices, so truncating the iteration never invalidates the result.

    Ascent stops early once the bound clears prune_bar or stalls below tol.
    Returns (x, lb, mu) with x the last inner iterate of the best round.
    """
    nf, m = lin.shape
    mu = mu0.copy()
    x = np.full((nf, m), 1.0 / m)
    is_bs = 1.0 - is_ue
    best_lb = -1e300
    best_x = x.copy()
    best_mu = mu.copy()
    lam = 2.0
    stall = 0
    c = np.empty((nf, m))
    for outer in range(max_outer):
        for j in range(m):
            cj = mu[0, j] - mu[1, j]
            bj = mu[2, j]
            for i in range(nf):
                c[i, j] = lin[i, j] + cj * is_ue[i] - bj * is_bs[i]
        mu_const = 0.0
        for j in range(m):
            mu_const += (-mu[0, j] * ue_hi[j] + mu[1, j] * ue_lo[j]
                         + mu[2, j] * bs_lo[j])

        # inner: FISTA over the product of row simplices, warm-started
        y = x.copy()
        xk = x.copy()
        t = 1.0
        for _ in range(max_inner):
            grad = 2.0 * (lap @ y) + c
            xn = y - grad / lip
            project_rows_to_simplex(xn)
            tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / tn
            y = xn + beta * (xn - xk)
            xk = xn
            t = tn
        x = xk

        lx = lap @ x
        fval = mu_const
        for i in range(nf):
            for j in range(m):
                fval += x[i, j] * (lx[i, j] + c[i, j])
        grad = 2.0 * lx + c
        gap = 0.0
        for i in range(nf):
            gmin = grad[i, 0]
            gdot = 0.0
            for j in range(m):
                if grad[i, j] < gmin:
                    gmin = grad[i, j]
                gdot += grad[i, j] * x[i, j]
            gap += gdot - gmin
        lb = fval - gap
        if lb > best_lb + tol * (1.0 + abs(best_lb)):
            stall = 0
        else:
            stall += 1
        if lb > best_lb:
            best_lb = lb
            best_x = x.copy()
            best_mu = mu.copy()
        if best_lb >= prune_bar or stall >= 6:
            break

        # supergradient of the dual at the inner iterate
        g = np.empty((3, m))
        gn2 = 0.0
        for j in range(m):
            su = 0.0
            sb = 0.0
            for i in range(nf):
                su += is_ue[i] * x[i, j]
                sb += is_bs[i] * x[i, j]
            g[0, j] = su - ue_hi[j]
            g[1, j] = ue_lo[j] - su
            g[2, j] = bs_lo[j] - sb
            gn2 += g[0, j] ** 2 + g[1, j] ** 2 + g[2, j] ** 2
        if gn2 < 1e-24:
            break
        # Polyak-style step toward a moving target, halved on stalls
        if prune_bar < 1e299:
            target = prune_bar
        else:
            target = fval + 0.5 * (abs(fval) + 1.0)
        if target < best_lb + 1e-12:
            target = best_lb + 0.5 * (abs(best_lb) + 1.0)
        if stall > 0 and stall % 2 == 0:
            lam *= 0.5
        step = lam * (target - lb) / gn2
        for j in range(m):
            for r in range(3):
                v = mu[r, j] + step * g[r, j]
                mu[r, j] = v if v > 0.0 else 0.0
    return best_x, best_lb, best_mu


@njit(cache=True)
def enum_best_partition(w, n_ue, n_bs, m, kmax, obj_capacity, p, n0):
    """Exhaustive search over canonical set partitions with exactly m blocks.

    Vertices are ordered UEs first, then BSs. Feasible partitions keep every
    block's UE count <= kmax and give every block at least one BS. Canonical
    restricted-growth labeling visits each unlabeled partition exactly once;
    ties keep the first (lexicographically smallest) optimum.

    Returns (assign, value, found): the minimum-sumcut assignment when
    obj_capacity is False, otherwise the maximum of the per-BS log-rate sum.
    """
    n = n_ue + n_bs
    assign = np.full(n, -1, np.int64)
    maxlab = np.full(n + 1, -1, np.int64)
    ue_cnt = np.zeros(m, np.int64)
    bs_cnt = np.zeros(m, np.int64)
    acc = np.zeros((m, n_bs))
    colsum = np.zeros(n_bs)
    for l in range(n_bs):
        s = 0.0
        for k in range(n_ue):
            s += w[k, l]
        colsum[l] = s
    total_w = colsum.sum()
    within = 0.0
    zero_bs = 0
    opened = 0
    best_val = -1e300 if obj_capacity else 1e300
    best_assign = np.full(n, -1, np.int64)
    found = False

    i = 0
    while i >= 0:
        v = assign[i]
        if v >= 0:
            # undo the previous placement of vertex i
            if i < n_ue:
                ue_cnt[v] -= 1
                for l in range(n_bs):
                    acc[v, l] -= w[i, l]
            else:
                bs_cnt[v] -= 1
                within -= acc[v, i - n_ue]
                if bs_cnt[v] == 0:
                    zero_bs += 1
            if v == maxlab[i] + 1:
                opened -= 1
                zero_bs -= 1
        limit = maxlab[i] + 1
        if limit > m - 1:
            limit = m - 1
        v += 1
        placed = False
        while v <= limit:
            if i < n_ue and ue_cnt[v] + 1 > kmax:
                v += 1
                continue
            newmax = maxlab[i] if v <= maxlab[i] else v
            rem = n - 1 - i
            # enough vertices left to open the remaining blocks
            if m - 1 - newmax > rem:
                v += 1
                continue
            # enough BS positions left to cover BS-less blocks
            rem_bs = n_bs if i < n_ue else n - 1 - i
            nb = zero_bs
            if v == maxlab[i] + 1:
                nb += 1  # newly opened block has no BS yet
            if i >= n_ue and (v == maxlab[i] + 1 or bs_cnt[v] == 0):
                nb -= 1  # this BS fills one
            need_bs = nb + (m - 1 - newmax)
            if need_bs > rem_bs:
                v += 1
                continue
            # remaining UEs must fit in the remaining cap slack
            if i < n_ue - 1:
                op = opened + (1 if v == maxlab[i] + 1 else 0)
                used = i + 1
                slack = op * kmax - used + (m - 1 - newmax) * kmax
                if n_ue - 1 - i > slack:
                    v += 1
                    continue
            placed = True
            break
        if not placed:
            assign[i] = -1
            i -= 1
            continue
        assign[i] = v
        if v == maxlab[i] + 1:
            opened += 1
            zero_bs += 1
        if i < n_ue:
            ue_cnt[v] += 1
            for l in range(n_bs):
                acc[v, l] += w[i, l]
        else:
            if bs_cnt[v] == 0:
                zero_bs -= 1
            bs_cnt[v] += 1
            within += acc[v, i - n_ue]
        maxlab[i + 1] = maxlab[i] if v <= maxlab[i] else v
        if i == n - 1:
            if maxlab[n] == m - 1 and zero_bs == 0:
                if obj_capacity:
                    val = 0.0
                    for l in range(n_bs):
                        inw = acc[assign[n_ue + l], l]
                        val += np.log2(1.0 + p * inw / (n0 + p * (colsum[l] - inw)))
                    if val > best_val:
                        best_val = val
                        best_assign[:] = assign
                        found = True
                else:
                    val = 2.0 * (total_w - within)
                    if val < best_val:
                        best_val = val
                        best_assign[:] = assign
                        found = True
        else:
            i += 1
    return best_assign, best_val, found


@njit(cache=True)
def count_rgs_leaves(n, m):
    """Count canonical restricted-growth strings of length n with exactly m labels."""
    assign = np.full(n, -1, np.int64)
    maxlab = np.full(n + 1, -1, np.int64)
    count = 0
    i = 0
    while i >= 0:
        v = assign[i] + 1
        limit = maxlab[i] + 1
        if limit > m - 1:
            limit = m - 1
        placed = False
        while v <= limit:
            if m - 1 - (maxlab[i] if v <= maxlab[i] else v) > n - 1 - i:
                v += 1
                continue
            placed = True
            break
        if not placed:
            assign[i] = -1
            i -= 1
            continue
        assign[i] = v
        maxlab[i + 1] = maxlab[i] if v <= maxlab[i] else v
        if i == n - 1:
            if maxlab[n] == m - 1:
                count += 1
        else:
            i += 1
    return count
