"""Random slot instances drawn from the configured uniform ranges."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..registry import CategoryProfile, Direction, LatencyMatrix, QosParamDescriptor, ServiceRequest, SfProfile
from ..schema import SENSING_PARAMS
from ..scoring import build_coefficients, priority_matrix
from ..solver import SelectionInstance, build_instance
from .config import SimConfig

SERVICE_TYPE = "sensing"


@dataclass(frozen=True)
class RoundSample:
    requests: tuple[ServiceRequest, ...]
    profiles: tuple[SfProfile, ...]
    categories: tuple[CategoryProfile, ...]
    latency: LatencyMatrix


def descriptors_for(config: SimConfig) -> tuple[QosParamDescriptor, ...]:
    """Parameter descriptors spanning the configured parameter ranges."""
    out = []
    for n, rng in enumerate(config.param_ranges):
        if config.num_params == len(SENSING_PARAMS):
            base = SENSING_PARAMS[n]
            out.append(QosParamDescriptor(base.name, base.unit, base.direction, rng.low, rng.high))
        else:
            out.append(QosParamDescriptor(f"p{n}", "", Direction.BENEFIT, rng.low, rng.high))
    return tuple(out)


def round_rng(seed: int, round_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, round_index])


def sample_instance(config: SimConfig, round_index: int) -> RoundSample:
    """Draw one round; a pure function of (config, round_index).

    SF-side values are drawn before request-side ones, so rounds that differ
    only in the number of requests share the same SFs and categories.
    """
    rng = round_rng(config.seed, round_index)
    n_sf, n_req, n_cat = config.num_sfs, config.num_requests, config.num_categories
    ranges = config.ranges
    params = np.column_stack([r.sample(rng, n_sf) for r in config.param_ranges]) if n_sf else \
        np.zeros((0, config.num_params))
    capacity = ranges["C"].sample(rng, n_sf)
    if config.capacity_override is not None:
        capacity[:] = config.capacity_override
    weights = ranges["w"].sample(rng, (n_cat, config.num_params))
    thresholds = ranges["T"].sample(rng, n_cat)
    utilization = ranges["U"].sample(rng, n_cat)
    cat_of = rng.integers(0, n_cat, n_req)
    s = ranges["S"].sample(rng, (n_req, n_sf))
    lat = ranges["L"].sample(rng, (n_req, n_sf))

    profiles = tuple(SfProfile(m + 1, m + 1, SERVICE_TYPE, tuple(params[m]), capacity[m])
                     for m in range(n_sf))
    categories = tuple(CategoryProfile(k + 1, tuple(weights[k]), thresholds[k], utilization[k])
                       for k in range(n_cat))
    requests = tuple(
        ServiceRequest(r + 1, 0, SERVICE_TYPE, int(cat_of[r]) + 1,
                       {m + 1: s[r, m] for m in range(n_sf)})
        for r in range(n_req))
    latency = LatencyMatrix({(r + 1, m + 1): lat[r, m] for r in range(n_req) for m in range(n_sf)})
    return RoundSample(requests, profiles, categories, latency)


def to_instance(sample: RoundSample, config: SimConfig) -> tuple[SelectionInstance, np.ndarray]:
    """Selection instance under the configured scoring mode, plus the priority matrix S."""
    coeffs = build_coefficients(sample.requests, sample.profiles, sample.categories,
                                config.scoring_mode, descriptors_for(config))
    cats = {c.category_id: c for c in sample.categories}
    req_cats = [cats[r.category_id] for r in sample.requests]
    lat = np.array([[sample.latency.get(r.request_id, p.sf_id) for p in sample.profiles]
                    for r in sample.requests]).reshape(len(sample.requests), len(sample.profiles))
    instance = build_instance(coeffs, lat, [c.latency_threshold for c in req_cats],
                              [c.utilization for c in req_cats],
                              [p.capacity for p in sample.profiles])
    return instance, priority_matrix(sample.requests, coeffs.sf_order)
