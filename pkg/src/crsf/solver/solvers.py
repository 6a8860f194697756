"""Exact, greedy, priority-only baseline and brute-force solvers."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from . import _bnb
from .model import CAPACITY_SLACK, Assignment, InstanceError, SelectionInstance, assignment_from_vector

log = logging.getLogger(__name__)

BRUTE_FORCE_CAP = 2_000_000


@dataclass(frozen=True)
class Budget:
    nodes: int = 10**7
    seconds: float = 30.0


DEFAULT_BUDGET = Budget()

# subgradient iterations at the root / at other nodes, strong-branching candidates
_ROOT_ITERS = 300
_NODE_ITERS = 30
_N_STRONG = 1


def _usable(instance: SelectionInstance, c: np.ndarray) -> np.ndarray:
    # pairs that can ever carry value: feasible, positive, and fitting an empty SF
    u = instance.utilization[:, None]
    return instance.feasible & (c > 0) & (u <= instance.capacity[None, :] + CAPACITY_SLACK)


def _greedy_vector(c, usable, u, cap):
    r_count, m_count = c.shape
    resid = cap.astype(float).copy()
    vec = np.full(r_count, -1, dtype=np.int64)
    rs, ms = np.nonzero(usable)
    # descending c, ties by (request, sf) index; lexsort keys go last-is-primary
    order = np.lexsort((ms, rs, -c[rs, ms]))
    for i in order:
        r, m = rs[i], ms[i]
        if vec[r] < 0 and u[r] <= resid[m] + CAPACITY_SLACK:
            vec[r] = m
            resid[m] -= u[r]
    return vec


def _canonicalize(vec, c, usable, u, cap):
    """Move requests to lower-index SFs of equal value while capacity allows.

    Keeps the objective unchanged and gives the same answer for equal inputs
    regardless of which optimum the search found first.
    """
    resid = cap.astype(float).copy()
    for r, m in enumerate(vec):
        if m >= 0:
            resid[m] -= u[r]
    changed = True
    while changed:
        changed = False
        for r in range(len(vec)):
            a = vec[r]
            if a <= 0:
                continue
            for m in range(a):
                if usable[r, m] and c[r, m] == c[r, a] and u[r] <= resid[m] + CAPACITY_SLACK:
                    resid[a] += u[r]
                    resid[m] -= u[r]
                    vec[r] = m
                    changed = True
                    break
    return vec


def _empty(instance: SelectionInstance, name: str) -> Assignment:
    return Assignment({}, 0.0, True, np.zeros(instance.num_requests), solver=name)


def _value(vec, c):
    return float(sum(c[r, m] for r, m in enumerate(vec) if m >= 0))


def _fits(vec, usable, u, cap):
    if len(vec) != len(u):
        return False
    load = np.zeros(len(cap))
    for r, m in enumerate(vec):
        if m >= 0:
            if not (m < len(cap) and usable[r, m]):
                return False
            load[m] += u[r]
    return bool(np.all(load <= cap + CAPACITY_SLACK))


def _search(c: np.ndarray, instance: SelectionInstance, budget: Budget, incumbent=None):
    """Run the branch and bound on coefficients c. Returns (vector, proven, nodes)."""
    usable = _usable(instance, c)
    u = instance.utilization
    cap = instance.capacity
    vec = _greedy_vector(c, usable, u, cap)
    if not usable.any():
        return vec, True, 0
    inc = _value(vec, c)
    if incumbent is not None:
        # pairs with non-positive value are dropped; they never help
        start = np.array([m if m >= 0 and c[r, m] > 0 else -1 for r, m in enumerate(incumbent)],
                         dtype=np.int64)
        if _fits(start, usable, u, cap) and _value(start, c) > inc:
            vec, inc = start, _value(start, c)
    cc = np.ascontiguousarray(np.where(usable, c, 0.0))
    # requests with equal utilization share a class in the transport heuristic
    levels, cls = np.unique(u, return_inverse=True)
    _, best_vec, nodes, complete = _bnb.solve_gap(
        cc, np.ascontiguousarray(usable), np.ascontiguousarray(u, dtype=float),
        np.ascontiguousarray(cap, dtype=float), cls.astype(np.int64), len(levels),
        inc, vec, int(budget.nodes),
        float(budget.seconds), _ROOT_ITERS, _NODE_ITERS, _N_STRONG)
    best_vec = _canonicalize(np.array(best_vec, dtype=np.int64), c, usable, u, cap)
    return best_vec, bool(complete), int(nodes)


def solve_exact(instance: SelectionInstance, budget: Budget = DEFAULT_BUDGET,
                incumbent=None) -> Assignment:
    """Maximize the total coefficient of assigned pairs under capacity and one-SF-per-request.

    Returns the proven optimum with ``optimal=True``, or the best assignment
    found when the node or time budget runs out.  ``incumbent`` is an optional
    starting vector (SF index or -1 per request); the result is never worse.
    """
    if instance.num_requests == 0 or instance.num_sfs == 0:
        return _empty(instance, "exact")
    t0 = time.perf_counter()
    vec, proven, nodes = _search(instance.coefficients, instance, budget, incumbent)
    if not proven:
        log.warning("exact search stopped by budget after %d nodes on a %dx%d instance",
                    nodes, *instance.shape)
    return assignment_from_vector(instance, vec, proven, nodes=nodes, solver="exact",
                                  runtime_s=time.perf_counter() - t0)


def solve_baseline(instance: SelectionInstance, priorities: np.ndarray,
                   budget: Budget = DEFAULT_BUDGET) -> Assignment:
    """Maximize the total priority weight S instead of c, then report values under c."""
    s = np.asarray(priorities, float)
    if s.shape != instance.shape:
        raise InstanceError(f"priority matrix is {s.shape}, instance is {instance.shape}")
    if instance.num_requests == 0 or instance.num_sfs == 0:
        return _empty(instance, "baseline")
    t0 = time.perf_counter()
    vec, proven, nodes = _search(s, instance, budget)
    if not proven:
        log.warning("baseline search stopped by budget after %d nodes on a %dx%d instance",
                    nodes, *instance.shape)
    return assignment_from_vector(instance, vec, proven, nodes=nodes, solver="baseline",
                                  runtime_s=time.perf_counter() - t0)


def solve_greedy(instance: SelectionInstance) -> Assignment:
    """Take pairs by descending c and assign whenever the request is free and the SF has room."""
    if instance.num_requests == 0 or instance.num_sfs == 0:
        return _empty(instance, "greedy")
    t0 = time.perf_counter()
    c = instance.coefficients
    vec = _greedy_vector(c, _usable(instance, c), instance.utilization, instance.capacity)
    return assignment_from_vector(instance, vec, False, solver="greedy",
                                  runtime_s=time.perf_counter() - t0)


def brute_force(instance: SelectionInstance, cap: int = BRUTE_FORCE_CAP) -> Assignment:
    """Enumerate every request -> (SF or unassigned) vector.

    Among optimal vectors the lexicographically smallest wins, with
    "unassigned" ordered after every SF index.
    """
    r_count, m_count = instance.shape
    size = (m_count + 1) ** r_count
    if size > cap:
        raise InstanceError(f"{size} assignment vectors exceed the enumeration cap {cap}")
    if r_count == 0 or m_count == 0:
        return _empty(instance, "brute")
    t0 = time.perf_counter()
    c = instance.coefficients
    usable = _usable(instance, c)
    u = instance.utilization
    # digit m < M means SF m, digit M means unassigned; request 0 is the most significant digit
    val_table = np.zeros((r_count, m_count + 1))
    val_table[:, :m_count] = np.where(usable, c, 0.0)
    ok_table = np.ones((r_count, m_count + 1), dtype=bool)
    ok_table[:, :m_count] = usable
    powers = (m_count + 1) ** np.arange(r_count - 1, -1, -1, dtype=np.int64)
    best_val = -np.inf
    best_idx = -1
    chunk = 1 << 18
    for start in range(0, size, chunk):
        idx = np.arange(start, min(size, start + chunk), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % (m_count + 1)
        rows = np.arange(r_count)[None, :]
        ok = ok_table[rows, digits].all(axis=1)
        vals = val_table[rows, digits].sum(axis=1)
        for m in range(m_count):
            load = ((digits == m) * u[None, :]).sum(axis=1)
            ok &= load <= instance.capacity[m] + CAPACITY_SLACK
        if not ok.any():
            continue
        vals = np.where(ok, vals, -np.inf)
        top = vals.max()
        tol = 1e-12 * max(1.0, abs(top))
        if best_idx < 0 or top > best_val + tol:
            best_val = top
            best_idx = int(idx[np.flatnonzero(vals >= top - tol)[0]])
    digits = (best_idx // powers) % (m_count + 1)
    vec = np.where(digits == m_count, -1, digits)
    return assignment_from_vector(instance, vec, True, nodes=size, solver="brute",
                                  runtime_s=time.perf_counter() - t0)
