"""The four experiment families: request, SF and capacity sweeps plus per-request QoS."""
from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from ..solver import Budget, solve_baseline, solve_exact, solve_greedy
from .config import SimConfig
from .metrics import MetricsRow, RoundMetrics, aggregate_rounds, compute_metrics
from .sampling import sample_instance, to_instance

log = logging.getLogger(__name__)

CSV_HEADER = (
    "experiment", "solver", "scoring_mode", "num_requests", "num_sfs", "capacity_override",
    "rounds", "seed", "mean_aggregate_qos", "std_aggregate_qos", "mean_asr", "std_asr",
    "mean_qos_per_request", "std_qos_per_request", "mean_solver_ms",
)

EXPERIMENTS = ("request-sweep", "sf-sweep", "per-request-qos", "capacity-sweep")

REQUEST_GRID = tuple(range(10, 101, 10))
REQUEST_SWEEP_SFS = (5, 10)
SF_GRID = tuple(range(4, 21, 2))
SF_SWEEP_REQUESTS = (50, 100)
PER_REQUEST_SF_GRID = tuple(range(8, 21, 2))
PER_REQUEST_REQUESTS = (50,)
CAPACITY_GRID = tuple(float(c) for c in range(30, 301, 30))
CAPACITY_SWEEP_POINT = (100, 5)  # (requests, SFs)

BASELINE = "baseline"


@dataclass(frozen=True)
class RoundPair:
    """Proposed and baseline metrics of one sampled round."""

    proposed: RoundMetrics
    baseline: RoundMetrics


@dataclass
class ExperimentResult:
    name: str
    rows: list[MetricsRow] = field(default_factory=list)
    # per point: list of RoundPair in round order
    rounds: dict[tuple[int, int, float | None], list[RoundPair]] = field(default_factory=dict)
    dominance_violations: int = 0

    def point_rows(self, solver: str) -> list[MetricsRow]:
        return [r for r in self.rows if r.solver == solver]


def _solve_round(config: SimConfig, round_index: int) -> RoundPair:
    sample = sample_instance(config, round_index)
    instance, priorities = to_instance(sample, config)
    base = solve_baseline(instance, priorities, Budget(config.baseline_node_budget, 0.0))
    if config.solver == "exact":
        # the baseline plan is feasible, so it is a valid starting incumbent
        prop = solve_exact(instance, Budget(config.node_budget, 0.0), incumbent=base.vector())
    else:
        prop = solve_greedy(instance)
    return RoundPair(compute_metrics(prop, instance), compute_metrics(base, instance))


def _run_rounds(config: SimConfig, workers: int | None,
                round_solver: Callable[[SimConfig, int], RoundPair]) -> list[RoundPair]:
    workers = workers or os.cpu_count() or 1
    idx = range(config.rounds)
    if workers == 1:
        return [round_solver(config, i) for i in idx]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: round_solver(config, i), idx))


def _summarize(config: SimConfig, experiment: str, pairs: list[RoundPair],
               record_timing: bool) -> tuple[list[MetricsRow], int]:
    violations = 0
    if config.solver == "exact":
        for i, p in enumerate(pairs):
            tol = 1e-9 * max(1.0, abs(p.baseline.aggregate))
            if p.proposed.aggregate < p.baseline.aggregate - tol:
                violations += 1
                log.error("round %d: proposed %.6f below baseline %.6f", i,
                          p.proposed.aggregate, p.baseline.aggregate)
    common = dict(experiment=experiment, scoring_mode=config.scoring_mode,
                  num_requests=config.num_requests, num_sfs=config.num_sfs,
                  capacity_override=config.capacity_override, seed=config.seed,
                  record_timing=record_timing)
    rows = [aggregate_rounds([p.proposed for p in pairs], solver=config.solver, **common),
            aggregate_rounds([p.baseline for p in pairs], solver=BASELINE, **common)]
    for row in rows:
        if row.non_optimal_rounds:
            log.warning("%s %s R=%d M=%d: %d rounds stopped by the node budget", experiment,
                        row.solver, row.num_requests, row.num_sfs, row.non_optimal_rounds)
    return rows, violations


def run_point(config: SimConfig, experiment: str, workers: int | None = None,
              record_timing: bool = False,
              round_solver: Callable[[SimConfig, int], RoundPair] = _solve_round,
              ) -> tuple[list[MetricsRow], list[RoundPair], int]:
    """Run every round of one grid point; returns (rows, rounds, dominance violations)."""
    pairs = _run_rounds(config, workers, round_solver)
    rows, violations = _summarize(config, experiment, pairs, record_timing)
    return rows, pairs, violations


def _grid(name: str) -> list[tuple[int, int, float | None]]:
    if name == "request-sweep":
        return [(r, m, None) for m in REQUEST_SWEEP_SFS for r in REQUEST_GRID]
    if name == "sf-sweep":
        return [(r, m, None) for r in SF_SWEEP_REQUESTS for m in SF_GRID]
    if name == "per-request-qos":
        return [(r, m, None) for r in PER_REQUEST_REQUESTS for m in PER_REQUEST_SF_GRID]
    if name == "capacity-sweep":
        r, m = CAPACITY_SWEEP_POINT
        return [(r, m, c) for c in CAPACITY_GRID]
    raise ValueError(f"unknown experiment {name!r}")


def run_experiment(name: str, template: SimConfig | None = None,
                   grid: Sequence[tuple[int, int, float | None]] | None = None,
                   workers: int | None = None, record_timing: bool = False,
                   round_solver: Callable[[SimConfig, int], RoundPair] = _solve_round,
                   cache: dict | None = None) -> ExperimentResult:
    """Run one experiment family over its grid of (requests, SFs, capacity override).

    For per-request-qos only points where every round served every request
    (under the proposed solver) are kept.  ``cache`` may be shared between
    calls with the same template so grid points common to several families
    (the per-request and SF sweeps overlap) are solved once.
    """
    template = template or SimConfig(0, 0)
    grid = _grid(name) if grid is None else list(grid)
    result = ExperimentResult(name)
    for r, m, cap in grid:
        config = template.with_(num_requests=r, num_sfs=m, capacity_override=cap)
        key = (repr(config), round_solver)
        if cache is not None and key in cache:
            pairs = cache[key]
        else:
            pairs = _run_rounds(config, workers, round_solver)
            if cache is not None:
                cache[key] = pairs
        rows, violations = _summarize(config, name, pairs, record_timing)
        result.rounds[(r, m, cap)] = pairs
        result.dominance_violations += violations
        if name == "per-request-qos" and not rows[0].all_served:
            continue
        result.rows.extend(rows)
    return result


def experiment_request_sweep(template: SimConfig | None = None, **kw) -> ExperimentResult:
    return run_experiment("request-sweep", template, **kw)


def experiment_sf_sweep(template: SimConfig | None = None, **kw) -> ExperimentResult:
    return run_experiment("sf-sweep", template, **kw)


def experiment_per_request_qos(template: SimConfig | None = None, **kw) -> ExperimentResult:
    return run_experiment("per-request-qos", template, **kw)


def experiment_capacity_sweep(template: SimConfig | None = None, **kw) -> ExperimentResult:
    return run_experiment("capacity-sweep", template, **kw)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def rows_to_csv(rows: Iterable[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow([_fmt(getattr(row, col)) for col in CSV_HEADER])
    return buf.getvalue()


def write_csv(rows: Iterable[MetricsRow], path: str | os.PathLike) -> Path:
    path = Path(path)
    path.write_text(rows_to_csv(rows), encoding="utf-8")
    return path


def read_csv(path: str | os.PathLike) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: header does not match the experiment CSV schema")
        return list(reader)
