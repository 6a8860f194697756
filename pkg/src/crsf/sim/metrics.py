"""Per-round metrics and their aggregation over rounds."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..solver import Assignment, SelectionInstance, verify_assignment


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class RoundMetrics:
    aggregate: float
    asr: float
    # None when some request went unassigned
    qos_per_request: float | None
    solver_ms: float
    optimal: bool


def compute_metrics(assignment: Assignment, instance: SelectionInstance) -> RoundMetrics:
    if not verify_assignment(instance, assignment):
        raise MetricsError("assignment violates the instance constraints")
    n = instance.num_requests
    aggregate = float(np.sum(assignment.per_request_value))
    # an empty batch counts as fully served
    asr = assignment.num_assigned / n if n else 1.0
    per_request = aggregate / n if n and assignment.num_assigned == n else None
    return RoundMetrics(aggregate, asr, per_request, assignment.runtime_s * 1e3, assignment.optimal)


def _mean_std(xs: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(xs, float)
    std = float(a.std(ddof=1)) if len(a) > 1 else 0.0
    return float(a.mean()), std


@dataclass(frozen=True)
class MetricsRow:
    experiment: str
    solver: str
    scoring_mode: str
    num_requests: int
    num_sfs: int
    capacity_override: float | None
    rounds: int
    seed: int
    mean_aggregate_qos: float
    std_aggregate_qos: float
    mean_asr: float
    std_asr: float
    mean_qos_per_request: float | None
    std_qos_per_request: float | None
    mean_solver_ms: float | None
    non_optimal_rounds: int = 0

    @property
    def all_served(self) -> bool:
        return self.mean_qos_per_request is not None


def aggregate_rounds(rounds: Sequence[RoundMetrics], *, experiment: str, solver: str,
                     scoring_mode: str, num_requests: int, num_sfs: int,
                     capacity_override: float | None, seed: int,
                     record_timing: bool = False) -> MetricsRow:
    if not rounds:
        raise MetricsError("no rounds to aggregate")
    agg = _mean_std([m.aggregate for m in rounds])
    asr = _mean_std([m.asr for m in rounds])
    if all(m.qos_per_request is not None for m in rounds):
        per = _mean_std([m.qos_per_request for m in rounds])
    else:
        per = (None, None)
    ms = float(np.mean([m.solver_ms for m in rounds])) if record_timing else None
    return MetricsRow(experiment, solver, scoring_mode, num_requests, num_sfs, capacity_override,
                      len(rounds), seed, agg[0], agg[1], asr[0], asr[1], per[0], per[1], ms,
                      sum(not m.optimal for m in rounds))
