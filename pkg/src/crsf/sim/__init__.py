"""Monte-Carlo harness: instance sampling, metrics and experiment sweeps."""
from .config import DEFAULT_RANGES, SENSING_RANGES, ConfigError, Range, SimConfig
from .experiments import (CSV_HEADER, EXPERIMENTS, ExperimentResult, experiment_capacity_sweep,
                          experiment_per_request_qos, experiment_request_sweep, experiment_sf_sweep,
                          read_csv, rows_to_csv, run_experiment, run_point, write_csv)
from .metrics import MetricsError, MetricsRow, RoundMetrics, aggregate_rounds, compute_metrics
from .sampling import RoundSample, descriptors_for, sample_instance, to_instance

__all__ = [
    "DEFAULT_RANGES", "SENSING_RANGES", "ConfigError", "Range", "SimConfig", "CSV_HEADER",
    "EXPERIMENTS", "ExperimentResult", "experiment_capacity_sweep", "experiment_per_request_qos",
    "experiment_request_sweep", "experiment_sf_sweep", "read_csv", "rows_to_csv", "run_experiment",
    "run_point", "write_csv", "MetricsError", "MetricsRow", "RoundMetrics", "aggregate_rounds",
    "compute_metrics", "RoundSample", "descriptors_for", "sample_instance", "to_instance",
]
