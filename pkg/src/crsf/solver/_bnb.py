"""Numba kernels for the exact selection search.

The search is a depth-first branch and bound.  Each node is bounded by a
Lagrangian relaxation of the one-SF-per-request constraint, which splits the
problem into one 0-1 knapsack per SF.  Pairs that cannot appear in an
improving solution are eliminated, forced pairs are fixed, and branching is
on a single request (one child per candidate SF plus an "unassigned" child).
"""
import time
import warnings

import numba as nb
import numpy as np

# the clock is read in object mode every few nodes; the GIL is only held briefly
warnings.filterwarnings("ignore", message="Code running in object mode",
                        category=nb.NumbaWarning)

TOL = 1e-12
PRUNE_REL = 1e-10


@nb.njit(cache=True, nogil=True)
def knap(vals, wts, cap, sel):
    """Exact 0-1 knapsack by depth-first search with the Dantzig bound.

    Items of equal weight are interchangeable up to value, so once one of
    them is left out, the cheaper ones after it in ratio order are skipped.
    Writes the chosen items into ``sel`` and returns the optimal value.
    """
    n = vals.shape[0]
    for k in range(n):
        sel[k] = 0
    if n == 0:
        return 0.0
    key = np.empty(n)
    for k in range(n):
        key[k] = -vals[k] / wts[k]
    order = np.argsort(key, kind='mergesort')
    v = vals[order]; w = wts[order]
    # group ids by exact weight
    wo = np.argsort(w, kind='mergesort')
    g = np.empty(n, np.int64)
    ng = 0
    for q in range(n):
        if q > 0 and w[wo[q]] != w[wo[q - 1]]:
            ng += 1
        g[wo[q]] = ng
    ng += 1
    excl = np.zeros(ng, np.int64)
    take = np.zeros(n, np.int8)
    best_take = np.zeros(n, np.int8)
    best = -1.0
    cv = 0.0; cw = 0.0; i = 0
    while True:
        ub = cv; rw = cap - cw; j = i
        while j < n:
            if excl[g[j]] > 0:
                j += 1
                continue
            if w[j] <= rw + TOL:
                rw -= w[j]; ub += v[j]; j += 1
            else:
                if rw > 0:
                    ub += v[j] * rw / w[j]
                break
        back = True
        if ub > best + 1e-12 * max(1.0, best):
            # take the open fitting items in [i, j)
            for k in range(i, j):
                if excl[g[k]] > 0:
                    take[k] = 0; excl[g[k]] += 1
                else:
                    take[k] = 1; cw += w[k]; cv += v[k]
            if j < n:
                take[j] = 0; excl[g[j]] += 1
                i = j + 1
            else:
                i = n
            if i >= n:
                if cv > best:
                    best = cv
                    best_take[:] = take
            else:
                back = False
        if back:
            k = i - 1
            while k >= 0 and take[k] == 0:
                excl[g[k]] -= 1
                k -= 1
            if k < 0:
                break
            take[k] = 0; cw -= w[k]; cv -= v[k]; excl[g[k]] += 1
            i = k + 1
    for k in range(n):
        sel[order[k]] = best_take[k]
    return best

@nb.njit(cache=True, nogil=True)
def kp_for_sf(m, status, alive, resid, lam, c, U, sel_row, skip):
    # knapsack of SF m over free requests with reduced values c - lam
    R = c.shape[0]
    idx = np.empty(R, np.int64); n = 0
    for r in range(R):
        sel_row[r] = 0
        if r != skip and status[r] == -1 and alive[r, m] and U[r] <= resid[m] + TOL:
            if c[r, m] - lam[r] > TOL:
                idx[n] = r; n += 1
    vals = np.empty(n); wts = np.empty(n)
    for k in range(n):
        vals[k] = c[idx[k], m] - lam[idx[k]]; wts[k] = U[idx[k]]
    s = np.zeros(n, np.int8)
    v = knap(vals, wts, resid[m], s)
    for k in range(n):
        if s[k]:
            sel_row[idx[k]] = 1
    return v

@nb.njit(cache=True, nogil=True)
def all_kp(status, alive, resid, lam, c, U, kpval, sel):
    for m in range(c.shape[1]):
        kpval[m] = kp_for_sf(m, status, alive, resid, lam, c, U, sel[m], -1)

@nb.njit(cache=True, nogil=True)
def node_bound(status, fixed, lam, kpval):
    b = fixed
    for r in range(status.shape[0]):
        if status[r] == -1:
            b += lam[r]
    for m in range(kpval.shape[0]):
        b += kpval[m]
    return b

@nb.njit(cache=True, nogil=True)
def subgrad(status, alive, resid, fixed, lam, c, U, kpval, sel, target, iters):
    # Polyak steps towards target; lam, kpval and sel end at the best bound
    R, M = c.shape
    all_kp(status, alive, resid, lam, c, U, kpval, sel)
    best = node_bound(status, fixed, lam, kpval)
    if best <= target or iters <= 0:
        return best
    best_lam = lam.copy()
    theta = 1.0; stall = 0
    cur_lam = lam.copy(); cur_kp = kpval.copy(); cur_sel = sel.copy()
    g = np.zeros(R)
    b = best
    for it in range(iters):
        gg = 0.0
        for r in range(R):
            g[r] = 0.0
            if status[r] == -1:
                cnt = 0
                for m in range(M):
                    cnt += cur_sel[m, r]
                gr = 1.0 - cnt
                if gr > 0 and cur_lam[r] <= 0:
                    gr = 0.0
                g[r] = gr; gg += gr * gr
        if gg == 0:
            break
        gap = b - target
        if gap <= 0:
            gap = 1e-3 * max(1.0, abs(b))
        t = theta * gap / gg
        for r in range(R):
            if g[r] != 0:
                cur_lam[r] = max(0.0, cur_lam[r] - t * g[r])
        all_kp(status, alive, resid, cur_lam, c, U, cur_kp, cur_sel)
        b = node_bound(status, fixed, cur_lam, cur_kp)
        if b < best - 1e-12 * max(1.0, abs(best)):
            best = b; best_lam[:] = cur_lam; kpval[:] = cur_kp; sel[:, :] = cur_sel
            stall = 0
        else:
            stall += 1
            if stall >= 4:
                theta *= 0.5; stall = 0
        if best <= target:
            break
    lam[:] = best_lam
    return best

@nb.njit(cache=True, nogil=True)
def local_search(assign, rr, c, alive, U, status):
    """Improve a feasible assignment in place. Returns gain."""
    R, M = c.shape
    total = 0.0
    improved = True
    while improved:
        improved = False
        # shift / insert
        for r in range(R):
            if status[r] != -1:
                continue
            a = assign[r]
            cur = c[r, a] if a >= 0 else 0.0
            bm = -1; bg = 1e-9 * max(1.0, cur)
            for m in range(M):
                if m != a and alive[r, m] and U[r] <= rr[m] + TOL and c[r, m] - cur > bg:
                    bg = c[r, m] - cur; bm = m
            if bm >= 0:
                if a >= 0:
                    rr[a] += U[r]
                rr[bm] -= U[r]; assign[r] = bm; total += bg; improved = True
        if improved:
            continue
        # swap r <-> q
        for r in range(R):
            if status[r] != -1:
                continue
            a = assign[r]
            for q in range(r + 1, R):
                if status[q] != -1:
                    continue
                b = assign[q]
                if a == b:
                    continue
                if b >= 0 and not alive[r, b]:
                    continue
                if a >= 0 and not alive[q, a]:
                    continue
                old = (c[r, a] if a >= 0 else 0.0) + (c[q, b] if b >= 0 else 0.0)
                new = (c[r, b] if b >= 0 else 0.0) + (c[q, a] if a >= 0 else 0.0)
                if new - old <= 1e-9 * max(1.0, old):
                    continue
                if b >= 0 and U[r] - U[q] > rr[b] + TOL:
                    continue
                if a >= 0 and U[q] - U[r] > rr[a] + TOL:
                    continue
                if b >= 0:
                    rr[b] -= U[r] - U[q]
                if a >= 0:
                    rr[a] -= U[q] - U[r]
                assign[r] = b; assign[q] = a
                total += new - old; improved = True
                a = b
        if improved:
            continue
        # ejection: r moves into b (a -> b), pushing q out of b to d (another SF or unassigned)
        for r in range(R):
            if status[r] != -1:
                continue
            a = assign[r]
            cur_r = c[r, a] if a >= 0 else 0.0
            done = False
            for q in range(R):
                if q == r or status[q] != -1:
                    continue
                b = assign[q]
                if b < 0 or b == a or not alive[r, b]:
                    continue
                if U[r] - U[q] > rr[b] + TOL:
                    continue
                base_gain = c[r, b] - cur_r - c[q, b]
                # q's new home d; a gains U[r] back
                bd = -2; bgain = 1e-9 * max(1.0, c[q, b])
                if base_gain > bgain:
                    bd = -1; bgain = base_gain
                for d in range(M):
                    if d == b or not alive[q, d]:
                        continue
                    room = rr[d] + (U[r] if d == a else 0.0)
                    if U[q] <= room + TOL:
                        g = base_gain + c[q, d]
                        if g > bgain:
                            bgain = g; bd = d
                if bd >= -1:
                    if a >= 0:
                        rr[a] += U[r]
                    rr[b] += U[q] - U[r]
                    assign[r] = b
                    assign[q] = bd
                    if bd >= 0:
                        rr[bd] -= U[q]
                    total += bgain; improved = True
                    done = True
                    break
            if done:
                a = assign[r]
    return total


@nb.njit(cache=True, nogil=True)
def repair(status, alive, resid, sel, c, U, out_assign):
    # feasible solution from the relaxation, then local search
    R, M = c.shape
    rr = resid.copy()
    val = 0.0
    for r in range(R):
        out_assign[r] = -1
        if status[r] >= 0:
            out_assign[r] = status[r]
            val += c[r, status[r]]
    for r in range(R):
        if status[r] != -1:
            continue
        bm = -1
        for m in range(M):
            if sel[m, r] and (bm < 0 or c[r, m] > c[r, bm]):
                bm = m
        if bm >= 0:
            out_assign[r] = bm; rr[bm] -= U[r]; val += c[r, bm]
    best_c = np.full(R, -1.0)
    for r in range(R):
        if status[r] == -1 and out_assign[r] < 0:
            for m in range(M):
                if alive[r, m] and c[r, m] > best_c[r]:
                    best_c[r] = c[r, m]
    order = np.argsort(-best_c, kind='mergesort')
    for q in range(R):
        r = order[q]
        if best_c[r] < 0:
            break
        bm = -1
        for m in range(M):
            if alive[r, m] and U[r] <= rr[m] + TOL and (bm < 0 or c[r, m] > c[r, bm]):
                bm = m
        if bm >= 0:
            out_assign[r] = bm; rr[bm] -= U[r]; val += c[r, bm]
    val += local_search(out_assign, rr, c, alive, U, status)
    return val

@nb.njit(cache=True, nogil=True)
def transport(c, alive, cls, K, slots, out):
    """Max-value assignment with at most slots[k, m] requests of class k on SF m.

    Capacities are ignored; successive shortest paths per class.
    Returns total value; out[r] = SF or -1.
    """
    R, M = c.shape
    total = 0.0
    for r in range(R):
        out[r] = -1
    for k in range(K):
        rows = np.empty(R, np.int64); nr = 0
        for r in range(R):
            if cls[r] == k:
                rows[nr] = r; nr += 1
        if nr == 0:
            continue
        # nodes: 0 source, 1..nr requests, nr+1..nr+M SFs, nr+M+1 sink
        V = nr + M + 2
        snk = V - 1
        capm = np.zeros((V, V), np.int64)
        cost = np.zeros((V, V))
        for i in range(nr):
            capm[0, 1 + i] = 1
            r = rows[i]
            for m in range(M):
                if alive[r, m] and c[r, m] > 0 and slots[k, m] > 0:
                    capm[1 + i, 1 + nr + m] = 1
                    cost[1 + i, 1 + nr + m] = -c[r, m]
                    cost[1 + nr + m, 1 + i] = c[r, m]
        for m in range(M):
            capm[1 + nr + m, snk] = slots[k, m]
        # potentials for the DAG with negative arc costs
        pot = np.zeros(V)
        for m in range(M):
            mn = 0.0
            for i in range(nr):
                if capm[1 + i, 1 + nr + m] > 0 and cost[1 + i, 1 + nr + m] < mn:
                    mn = cost[1 + i, 1 + nr + m]
            pot[1 + nr + m] = mn
        ps = 0.0
        for m in range(M):
            if pot[1 + nr + m] < ps:
                ps = pot[1 + nr + m]
        pot[snk] = ps
        dist = np.empty(V); prev = np.empty(V, np.int64); done = np.empty(V, np.bool_)
        for _ in range(nr):
            for v in range(V):
                dist[v] = 1e300; prev[v] = -1; done[v] = False
            dist[0] = 0.0
            for _it in range(V):
                u = -1; du = 1e300
                for v in range(V):
                    if not done[v] and dist[v] < du:
                        du = dist[v]; u = v
                if u < 0:
                    break
                done[u] = True
                for v in range(V):
                    if capm[u, v] > 0 and not done[v]:
                        nd = du + cost[u, v] + pot[u] - pot[v]
                        if nd < dist[v] - 1e-12:
                            dist[v] = nd; prev[v] = u
            if dist[snk] >= 1e300:
                break
            real = dist[snk] - pot[0] + pot[snk]
            if real >= -1e-12:
                break
            for v in range(V):
                if dist[v] < 1e300:
                    pot[v] += dist[v]
            v = snk
            while v != 0:
                u = prev[v]
                capm[u, v] -= 1; capm[v, u] += 1
                v = u
            total -= real
        for i in range(nr):
            for m in range(M):
                # a used arc leaves residual capacity on its reverse
                if capm[1 + nr + m, 1 + i] > 0:
                    out[rows[i]] = m
    return total


@nb.njit(cache=True, nogil=True)
def repair2(status, alive, resid, sel, c, U, cls, K, out_assign):
    R, M = c.shape
    val = repair(status, alive, resid, sel, c, U, out_assign)
    # transport over the free requests with the relaxation's class counts per SF
    slots = np.zeros((K, M), np.int64)
    al = alive.copy()
    for r in range(R):
        if status[r] != -1:
            for m in range(M):
                al[r, m] = False
    for m in range(M):
        for r in range(R):
            if sel[m, r] and status[r] == -1:
                slots[cls[r], m] += 1
    tmp = np.empty(R, np.int64)
    v2 = transport(c, al, cls, K, slots, tmp)
    rr = resid.copy()
    for r in range(R):
        if status[r] >= 0:
            tmp[r] = status[r]
            v2 += c[r, status[r]]
        elif tmp[r] >= 0:
            rr[tmp[r]] -= U[r]
    # fixed requests already consumed resid
    v2 += local_search(tmp, rr, c, alive, U, status)
    if v2 > val:
        out_assign[:] = tmp
        return v2
    return val


@nb.njit(cache=True, nogil=True)
def fix_ones(status, alive, resid, lam, c, U, kpval, sel, bound, target):
    """Fix r->m where removing r from m's knapsack cannot beat target. Returns fixed value added."""
    R, M = c.shape
    tol = PRUNE_REL * max(1.0, abs(target))
    tmp = np.zeros(R, np.int8)
    add = 0.0
    to = -np.ones(R, np.int64)
    for m in range(M):
        for r in range(R):
            if status[r] != -1 or not sel[m, r] or to[r] >= 0:
                continue
            # the current selection minus r is a lower bound on the knapsack without r
            if bound - (c[r, m] - lam[r]) > target + tol:
                continue
            kr = kp_for_sf(m, status, alive, resid, lam, c, U, tmp, r)
            if bound - kpval[m] + kr <= target + tol:
                to[r] = m
    for r in range(R):
        if to[r] >= 0:
            status[r] = to[r]
            add += c[r, to[r]]
    return add


@nb.njit(cache=True, nogil=True)
def lp_value(cw, cv, n, cap):
    # fractional knapsack value from cumulative weights/values in ratio order
    if n == 0 or cap <= 0:
        return 0.0
    lo = 0; hi = n
    while lo < hi:
        mid = (lo + hi) // 2
        if cw[mid + 1] <= cap:
            lo = mid + 1
        else:
            hi = mid
    if lo >= n:
        return cv[n]
    w = cw[lo + 1] - cw[lo]
    return cv[lo] + (cv[lo + 1] - cv[lo]) * (cap - cw[lo]) / w


@nb.njit(cache=True, nogil=True)
def eliminate(status, alive, resid, fixed, lam, c, U, kpval, sel, bound, target):
    """Drop pairs whose forced bound cannot beat target. Returns number removed.

    The exact knapsack with r forced in is only solved when a fractional upper
    bound and a greedy lower bound disagree about the outcome.
    """
    R, M = c.shape
    tol = PRUNE_REL * max(1.0, abs(target))
    tmp = np.zeros(R, np.int8)
    removed = 0
    cw = np.empty(R + 1); cv = np.empty(R + 1)
    idx = np.empty(R, np.int64); key = np.empty(R)
    sw = np.empty(R + 1); sv = np.empty(R + 1)
    for m in range(M):
        # candidate items of m in decreasing ratio order
        n = 0
        for r in range(R):
            if status[r] == -1 and alive[r, m] and U[r] <= resid[m] + TOL and c[r, m] - lam[r] > TOL:
                idx[n] = r; key[n] = -(c[r, m] - lam[r]) / U[r]; n += 1
        order = np.argsort(key[:n], kind='mergesort')
        cw[0] = 0.0; cv[0] = 0.0
        for q in range(n):
            r = idx[order[q]]
            cw[q + 1] = cw[q] + U[r]; cv[q + 1] = cv[q] + c[r, m] - lam[r]
        # selected items in increasing ratio order, dropped first to free room
        ns = 0; used = 0.0
        for q in range(n - 1, -1, -1):
            r = idx[order[q]]
            if sel[m, r]:
                sw[ns] = U[r]; sv[ns] = c[r, m] - lam[r]; used += U[r]; ns += 1
        slack = bound - kpval[m] - target - tol
        for r in range(R):
            if status[r] != -1 or not alive[r, m]:
                continue
            if sel[m, r]:
                continue
            if U[r] > resid[m] + TOL:
                alive[r, m] = False; removed += 1
                continue
            red = c[r, m] - lam[r]
            room = resid[m] - U[r]
            if red + lp_value(cw, cv, n, room + TOL) + slack <= 0:
                alive[r, m] = False; removed += 1
                continue
            free = room - used
            lb = kpval[m]
            q = 0
            while free < -TOL and q < ns:
                free += sw[q]; lb -= sv[q]; q += 1
            if free >= -TOL and red + lb + slack > 0:
                continue
            # KP_m with r forced in
            resid[m] -= U[r]
            kf = kp_for_sf(m, status, alive, resid, lam, c, U, tmp, r)
            resid[m] += U[r]
            forced = red + kf
            if bound - kpval[m] + forced <= target + tol:
                alive[r, m] = False; removed += 1
    return removed

@nb.njit(cache=True, nogil=True)
def solve_gap(c, feas, U, C, cls, K, inc_val, inc_assign, node_limit, time_limit,
              root_iters, node_iters, n_strong):
    """Return (best value, best assignment, nodes, proven optimal)."""
    R, M = c.shape
    S = R * (M + 1) + 2
    st_status = np.empty((S, R), np.int64)
    st_alive = np.empty((S, R, M), np.bool_)
    st_resid = np.empty((S, M))
    st_fixed = np.empty(S)
    st_lam = np.empty((S, R))
    st_kp = np.empty((S, M))
    st_sel = np.empty((S, M, R), np.int8)
    st_bound = np.empty(S)
    best = inc_val
    best_assign = inc_assign.copy()
    tmp_assign = np.empty(R, np.int64)

    st_status[0, :] = -1
    st_alive[0] = feas
    st_resid[0, :] = C
    st_fixed[0] = 0.0
    st_lam[0, :] = 0.0
    all_kp(st_status[0], st_alive[0], st_resid[0], st_lam[0], c, U, st_kp[0], st_sel[0])
    st_bound[0] = 1e300
    sp = 1
    nodes = 0
    with nb.objmode(t0='float64'):
        t0 = time.perf_counter()
    complete = True
    while sp > 0:
        sp -= 1
        s = sp
        tol = PRUNE_REL * max(1.0, abs(best))
        if st_bound[s] <= best + tol:
            continue
        nodes += 1
        if nodes > node_limit:
            complete = False
            break
        if time_limit > 0 and (nodes & 7) == 0:
            with nb.objmode(now='float64'):
                now = time.perf_counter()
            if now - t0 > time_limit:
                complete = False
                break
        status = st_status[s].copy(); alive = st_alive[s].copy(); resid = st_resid[s].copy()
        fixed = st_fixed[s]; lam = st_lam[s].copy(); kpv = st_kp[s].copy(); sel = st_sel[s].copy()
        it = root_iters if nodes == 1 else node_iters
        bound = subgrad(status, alive, resid, fixed, lam, c, U, kpv, sel, best, it)
        if bound <= best + tol:
            continue
        pv = repair2(status, alive, resid, sel, c, U, cls, K, tmp_assign)
        if pv > best + tol:
            best = pv; best_assign[:] = tmp_assign
            tol = PRUNE_REL * max(1.0, abs(best))
        if bound <= best + tol:
            continue
        eliminate(status, alive, resid, fixed, lam, c, U, kpv, sel, bound, best)
        add = fix_ones(status, alive, resid, lam, c, U, kpv, sel, bound, best)
        if add > 0:
            for r in range(R):
                if status[r] >= 0 and st_status[s, r] == -1:
                    resid[status[r]] -= U[r]
            fixed += add
            dead = False
            for mm in range(M):
                if resid[mm] < -TOL:
                    dead = True
            if dead:
                continue
            # re-solve the knapsacks under the same multipliers; children refine them
            bound = subgrad(status, alive, resid, fixed, lam, c, U, kpv, sel, best, 0)
            if bound <= best + tol:
                continue
            pv = repair2(status, alive, resid, sel, c, U, cls, K, tmp_assign)
            if pv > best + tol:
                best = pv; best_assign[:] = tmp_assign
                tol = PRUNE_REL * max(1.0, abs(best))
            if bound <= best + tol:
                continue
        # exclusion / forcing
        must = np.zeros(R, np.bool_)
        dead = False
        for r in range(R):
            if status[r] != -1:
                continue
            if bound - lam[r] <= best + tol:
                # leaving r unassigned cannot improve, so it needs a home
                must[r] = True
                na = 0
                for m in range(M):
                    if alive[r, m] and U[r] <= resid[m] + TOL:
                        na += 1
                if na == 0:
                    dead = True
                    break
        if dead:
            continue
        # strong branching over a few candidates
        cand = np.empty(R, np.int64); cscore = np.empty(R); ncand = 0
        for r in range(R):
            if status[r] != -1:
                continue
            cnt = 0
            for m in range(M):
                cnt += sel[m, r]
            if cnt >= 2:
                sc = 1e18 + cnt * 1e15 + lam[r]
            elif cnt == 0 and lam[r] > 0:
                sc = lam[r]
            else:
                continue
            cand[ncand] = r; cscore[ncand] = sc; ncand += 1
        if ncand == 0:
            continue
        co = np.argsort(-cscore[:ncand], kind='mergesort')
        ntry = min(ncand, n_strong)
        br = -1; brval = 1e300
        tmp_sel = np.zeros(R, np.int8)
        for qq in range(ntry):
            r = cand[co[qq]]
            worst = -1e300
            # exclusion child
            if not must[r]:
                b = bound - lam[r]
                for mm in range(M):
                    if sel[mm, r]:
                        b += kp_for_sf(mm, status, alive, resid, lam, c, U, tmp_sel, r) - kpv[mm]
                worst = b
            for m in range(M):
                if alive[r, m] and U[r] <= resid[m] + TOL:
                    b = bound - lam[r] + c[r, m]
                    for mm in range(M):
                        if mm == m:
                            resid[m] -= U[r]
                            b += kp_for_sf(mm, status, alive, resid, lam, c, U, tmp_sel, r) - kpv[mm]
                            resid[m] += U[r]
                        elif sel[mm, r]:
                            b += kp_for_sf(mm, status, alive, resid, lam, c, U, tmp_sel, r) - kpv[mm]
                    if b > worst:
                        worst = b
            if worst < brval:
                brval = worst; br = r
            if brval <= best + tol:
                break
        r = br
        ms = np.empty(M + 1, np.int64); nm = 0
        for m in range(M):
            if alive[r, m] and U[r] <= resid[m] + TOL:
                ms[nm] = m; nm += 1
        k = nm + 1
        if must[r]:
            k = nm
        base = sp
        for q in range(k):
            t = base + q
            st_status[t, :] = status; st_alive[t] = alive; st_resid[t, :] = resid; st_lam[t, :] = lam
            st_kp[t, :] = kpv; st_sel[t, :, :] = sel
            fx = fixed
            if q < nm:
                m = ms[q]
                st_status[t, r] = m; st_resid[t, m] -= U[r]; fx += c[r, m]
            else:
                m = -1
                st_status[t, r] = -2
            st_fixed[t] = fx
            for mm in range(M):
                if mm == m or sel[mm, r]:
                    st_kp[t, mm] = kp_for_sf(mm, st_status[t], st_alive[t], st_resid[t], st_lam[t], c, U, st_sel[t, mm], -1)
            st_bound[t] = node_bound(st_status[t], fx, st_lam[t], st_kp[t])
        cb = st_bound[base:base + k].copy()
        perm = np.argsort(cb, kind='mergesort')
        tstatus = st_status[base:base + k].copy(); talive = st_alive[base:base + k].copy(); tres = st_resid[base:base + k].copy()
        tlam = st_lam[base:base + k].copy(); tkp = st_kp[base:base + k].copy()
        tsel = st_sel[base:base + k].copy(); tfx = st_fixed[base:base + k].copy(); tb = st_bound[base:base + k].copy()
        w = 0
        for q in range(k):
            p = perm[q]
            if tb[p] <= best + tol:
                continue
            t = base + w
            st_status[t] = tstatus[p]; st_alive[t] = talive[p]; st_resid[t] = tres[p]; st_lam[t] = tlam[p]
            st_kp[t] = tkp[p]; st_sel[t] = tsel[p]; st_fixed[t] = tfx[p]; st_bound[t] = tb[p]
            w += 1
        sp = base + w
    return best, best_assign, nodes, complete
