"""Per-slot selection problem and its solution."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..scoring import CoefficientMatrix

# absolute slack on capacity checks, matching the search kernels
CAPACITY_SLACK = 1e-12
OBJECTIVE_RTOL = 1e-9


class InstanceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SelectionInstance:
    """Coefficients c, latency feasibility mask, per-request utilization, SF capacities."""

    coefficients: np.ndarray
    feasible: np.ndarray
    utilization: np.ndarray
    capacity: np.ndarray
    request_ids: tuple[int, ...] = ()
    sf_ids: tuple[int, ...] = ()

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float, ndmin=2, copy=True)
        if c.size == 0:
            c = c.reshape(len(np.atleast_1d(self.utilization)), len(np.atleast_1d(self.capacity)))
        feas = np.array(self.feasible, dtype=bool, copy=True).reshape(c.shape)
        u = np.array(self.utilization, dtype=float, copy=True).reshape(-1)
        cap = np.array(self.capacity, dtype=float, copy=True).reshape(-1)
        r, m = c.shape
        if u.shape != (r,) or cap.shape != (m,):
            raise InstanceError(f"dimension mismatch: c is {r}x{m}, "
                                f"utilization {u.shape[0]}, capacity {cap.shape[0]}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(u)) and np.all(np.isfinite(cap))):
            raise InstanceError("instance has non-finite entries")
        if np.any(u <= 0):
            raise InstanceError("utilization must be > 0")
        if np.any(cap < 0):
            raise InstanceError("capacity must be >= 0")
        for a in (c, feas, u, cap):
            a.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "feasible", feas)
        object.__setattr__(self, "utilization", u)
        object.__setattr__(self, "capacity", cap)
        object.__setattr__(self, "request_ids", tuple(self.request_ids) or tuple(range(r)))
        object.__setattr__(self, "sf_ids", tuple(self.sf_ids) or tuple(range(m)))
        if len(self.request_ids) != r or len(self.sf_ids) != m:
            raise InstanceError("id maps do not match the coefficient matrix")

    @property
    def shape(self) -> tuple[int, int]:
        return self.coefficients.shape

    @property
    def num_requests(self) -> int:
        return self.coefficients.shape[0]

    @property
    def num_sfs(self) -> int:
        return self.coefficients.shape[1]

    def with_coefficients(self, c: np.ndarray) -> SelectionInstance:
        return SelectionInstance(c, self.feasible, self.utilization, self.capacity,
                                 self.request_ids, self.sf_ids)

    def with_capacity(self, capacity: Sequence[float] | np.ndarray) -> SelectionInstance:
        return SelectionInstance(self.coefficients, self.feasible, self.utilization,
                                 capacity, self.request_ids, self.sf_ids)


def build_instance(coefficients: CoefficientMatrix, latency: np.ndarray,
                   thresholds: np.ndarray, utilization: np.ndarray,
                   capacity: np.ndarray) -> SelectionInstance:
    """Assemble an instance; a pair is feasible iff its latency is within the request's threshold."""
    latency = np.asarray(latency, float)
    thresholds = np.asarray(thresholds, float).reshape(-1, 1)
    feasible = latency <= thresholds
    return SelectionInstance(coefficients.c, feasible, utilization, capacity,
                             coefficients.request_order, coefficients.sf_order)


@dataclass(frozen=True, eq=False)
class Assignment:
    """Partial map request index -> SF index with its value under c."""

    assigned: Mapping[int, int]
    objective: float
    optimal: bool
    per_request_value: np.ndarray
    nodes: int = 0
    solver: str = ""
    runtime_s: float = field(default=0.0, compare=False)

    def vector(self, num_requests: int | None = None) -> np.ndarray:
        n = len(self.per_request_value) if num_requests is None else num_requests
        out = np.full(n, -1, dtype=np.int64)
        for r, m in self.assigned.items():
            out[r] = m
        return out

    @property
    def num_assigned(self) -> int:
        return len(self.assigned)


def assignment_from_vector(instance: SelectionInstance, vec: Sequence[int], optimal: bool,
                           **kw) -> Assignment:
    """Build an Assignment from a vector with -1 for unassigned, valued under c."""
    c = instance.coefficients
    per = np.zeros(instance.num_requests)
    assigned = {}
    for r, m in enumerate(vec):
        m = int(m)
        if m >= 0:
            assigned[r] = m
            per[r] = c[r, m]
    return Assignment(assigned, float(per.sum()), optimal, per, **kw)


def verify_assignment(instance: SelectionInstance, assignment: Assignment) -> bool:
    """Re-check feasibility, capacity and at-most-one, plus the reported objective."""
    r_count, m_count = instance.shape
    if len(assignment.per_request_value) != r_count:
        return False
    load = np.zeros(m_count)
    total = 0.0
    seen = set()
    for r, m in assignment.assigned.items():
        if not (0 <= r < r_count and 0 <= m < m_count) or r in seen:
            return False
        seen.add(r)
        if not instance.feasible[r, m]:
            return False
        load[m] += instance.utilization[r]
        total += instance.coefficients[r, m]
    if np.any(load > instance.capacity * (1 + OBJECTIVE_RTOL) + CAPACITY_SLACK):
        return False
    for r in range(r_count):
        expected = instance.coefficients[r, assignment.assigned[r]] if r in seen else 0.0
        if not np.isclose(assignment.per_request_value[r], expected, rtol=OBJECTIVE_RTOL, atol=0):
            return False
    tol = OBJECTIVE_RTOL * max(1.0, abs(total))
    return abs(assignment.objective - total) <= tol
