"""Simulation settings: sampling ranges and per-point configuration."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

_RANGE_RE = re.compile(r"^\s*([\[(])\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*([\])])\s*$")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Range:
    """Interval with explicit bracket openness, e.g. ``Range.parse("(0, 1]")``."""

    low: float
    high: float
    low_closed: bool = True
    high_closed: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.low) and np.isfinite(self.high)):
            raise ConfigError("range bounds must be finite")
        if self.low > self.high or (self.low == self.high and not (self.low_closed and self.high_closed)):
            raise ConfigError(f"empty range {self}")

    @classmethod
    def parse(cls, text: str) -> Range:
        m = _RANGE_RE.match(text)
        if not m:
            raise ConfigError(f"cannot parse range {text!r}")
        return cls(float(m.group(2)), float(m.group(3)), m.group(1) == "[", m.group(4) == "]")

    @classmethod
    def point(cls, value: float) -> Range:
        return cls(value, value, True, True)

    def __str__(self):
        return (f"{'[' if self.low_closed else '('}{self.low:g}, "
                f"{self.high:g}{']' if self.high_closed else ')'}")

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x)
        lo = x >= self.low if self.low_closed else x > self.low
        hi = x <= self.high if self.high_closed else x < self.high
        return lo & hi

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Uniform draws that never hit an open endpoint.

        ``rng.random`` is uniform on [0, 1); it is mirrored for ranges open at
        the bottom and redrawn at 0 when both ends are open.  Closed upper ends
        are reached with probability zero, as for any continuous draw.
        """
        width = self.high - self.low
        if width == 0:
            return np.full(size, self.low)
        u = rng.random(size)
        if not self.low_closed and not self.high_closed:
            zero = u == 0.0
            while np.any(zero):
                u[zero] = rng.random(int(zero.sum()))
                zero = u == 0.0
        if self.low_closed:
            x = self.low + width * u
        else:
            x = self.high - width * u
        # rounding in low + width*u can land on an excluded endpoint
        lo = self.low if self.low_closed else np.nextafter(self.low, self.high)
        hi = self.high if self.high_closed else np.nextafter(self.high, self.low)
        return np.clip(x, lo, hi)


# sensing parameter ranges (position accuracy, latency, sensing range,
# resolution, detection probability, false alarm probability)
SENSING_RANGES = (
    Range(20, 500, True, False),
    Range(10, 500, True, False),
    Range(50, 300, True, False),
    Range(1, 20, True, False),
    Range(0.5, 1, False, False),
    Range(0, 0.1, False, False),
)

DEFAULT_RANGES = {
    "w": Range(0, 1, False, True),
    "S": Range(1, 10, True, True),
    "L": Range(60, 120, True, False),
    "T": Range(90, 140, True, False),
    "C": Range(30, 50, True, True),
    "U": Range(5, 10, True, True),
}


@dataclass(frozen=True)
class SimConfig:
    num_requests: int
    num_sfs: int
    num_categories: int = 5
    num_params: int = 6
    rounds: int = 100
    seed: int = 0
    ranges: Mapping[str, Range] = field(default_factory=lambda: dict(DEFAULT_RANGES))
    param_ranges: tuple[Range, ...] = SENSING_RANGES
    scoring_mode: str = "raw"
    solver: str = "exact"
    capacity_override: float | None = None
    # B&B node budgets per solve; node counts keep runs reproducible where a clock would not
    node_budget: int = 1_000
    baseline_node_budget: int = 100

    def __post_init__(self):
        if self.num_requests < 0 or self.num_sfs < 0:
            raise ConfigError("num_requests and num_sfs must be >= 0")
        if self.num_categories < 1 or self.rounds < 1:
            raise ConfigError("num_categories and rounds must be >= 1")
        if len(self.param_ranges) != self.num_params:
            raise ConfigError(f"{self.num_params} parameters but {len(self.param_ranges)} ranges")
        missing = set(DEFAULT_RANGES) - set(self.ranges)
        if missing:
            raise ConfigError(f"missing ranges: {sorted(missing)}")
        if self.scoring_mode not in ("raw", "normalized"):
            raise ConfigError(f"unknown scoring mode {self.scoring_mode!r}")
        if self.solver not in ("exact", "greedy"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.node_budget < 1 or self.baseline_node_budget < 1:
            raise ConfigError("node budgets must be >= 1")
        if self.capacity_override is not None and self.capacity_override < 0:
            raise ConfigError("capacity_override must be >= 0")

    def with_(self, **kw) -> SimConfig:
        return replace(self, **kw)
