"""QoS scores per (category, SF) and the priority-weighted coefficient matrix."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .registry import CategoryProfile, Direction, QosParamDescriptor, ServiceRequest, SfProfile


class ScoringError(ValueError):
    pass


class ScoringMode(str, enum.Enum):
    RAW = "raw"
    NORMALIZED = "normalized"


def normalize_params(p: Sequence[float], descriptors: Sequence[QosParamDescriptor]) -> np.ndarray:
    """Map each parameter to [0, 1] with 1 meaning best service.

    Benefit parameters grow from range_min to range_max, cost parameters the
    other way round.
    """
    if len(p) != len(descriptors):
        raise ScoringError(f"expected {len(descriptors)} parameters, got {len(p)}")
    out = np.empty(len(p))
    for i, (v, d) in enumerate(zip(p, descriptors)):
        if not d.contains(v):
            raise ScoringError(f"{d.name}={v} outside [{d.range_min}, {d.range_max}]")
        x = (v - d.range_min) / (d.range_max - d.range_min)
        out[i] = x if d.direction is Direction.BENEFIT else 1.0 - x
    return out


def category_qos(weights: Sequence[float], p: Sequence[float]) -> float:
    if len(weights) != len(p):
        raise ScoringError(f"weights has length {len(weights)}, parameters {len(p)}")
    return float(np.dot(np.asarray(weights, float), np.asarray(p, float)))


@dataclass(frozen=True)
class ScoreMatrix:
    """Q[k, m] for category ids ``category_order`` and SF ids ``sf_order``."""

    q: np.ndarray
    category_order: tuple[int, ...]
    sf_order: tuple[int, ...]

    def __post_init__(self):
        if self.q.shape != (len(self.category_order), len(self.sf_order)):
            raise ScoringError("score matrix shape does not match its index maps")
        if not np.all(np.isfinite(self.q)):
            raise ScoringError("score matrix has non-finite entries")

    def value(self, category_id: int, sf_id: int) -> float:
        try:
            k = self.category_order.index(category_id)
        except ValueError:
            raise ScoringError(f"unknown category {category_id}") from None
        try:
            m = self.sf_order.index(sf_id)
        except ValueError:
            raise ScoringError(f"unknown SF {sf_id}") from None
        return float(self.q[k, m])


def score_matrix(profiles: Sequence[SfProfile], categories: Sequence[CategoryProfile],
                 descriptors: Sequence[QosParamDescriptor] | None = None,
                 mode: ScoringMode | str = ScoringMode.RAW) -> ScoreMatrix:
    mode = ScoringMode(mode)
    if mode is ScoringMode.NORMALIZED and descriptors is None:
        raise ScoringError("normalized scoring needs the parameter descriptors")
    n = len(categories[0].weights) if categories else 0
    p = np.zeros((len(profiles), n))
    for j, prof in enumerate(profiles):
        if len(prof.qos_params) != n:
            raise ScoringError(f"SF {prof.sf_id} has {len(prof.qos_params)} parameters, expected {n}")
        if mode is ScoringMode.NORMALIZED:
            p[j] = normalize_params(prof.qos_params, descriptors)
        else:
            p[j] = prof.qos_params
    w = np.array([cat.weights for cat in categories], float).reshape(len(categories), n)
    return ScoreMatrix(w @ p.T, tuple(c.category_id for c in categories),
                       tuple(prof.sf_id for prof in profiles))


def request_qos(request: ServiceRequest, scores: ScoreMatrix, sf_id: int) -> float:
    return scores.value(request.category_id, sf_id)


@dataclass(frozen=True)
class CoefficientMatrix:
    """c[r, m] = S[r, m] * Q[k(r), m] with row/column id maps."""

    c: np.ndarray
    request_order: tuple[int, ...]
    sf_order: tuple[int, ...]

    def __post_init__(self):
        if self.c.shape != (len(self.request_order), len(self.sf_order)):
            raise ScoringError("coefficient matrix shape does not match its index maps")
        if not np.all(np.isfinite(self.c)):
            raise ScoringError("coefficient matrix has non-finite entries")


def priority_matrix(requests: Sequence[ServiceRequest], sf_ids: Sequence[int]) -> np.ndarray:
    """S[r, m] from each request's priority map; every SF must be covered."""
    s = np.empty((len(requests), len(sf_ids)))
    for i, req in enumerate(requests):
        for j, sf_id in enumerate(sf_ids):
            try:
                s[i, j] = req.priority_weights[sf_id]
            except KeyError:
                raise ScoringError(
                    f"request {req.request_id} has no priority weight for SF {sf_id}") from None
    return s


def build_coefficients(requests: Sequence[ServiceRequest], profiles: Sequence[SfProfile],
                       categories: Sequence[CategoryProfile] | Mapping[int, CategoryProfile],
                       mode: ScoringMode | str = ScoringMode.RAW,
                       descriptors: Sequence[QosParamDescriptor] | None = None) -> CoefficientMatrix:
    if isinstance(categories, Mapping):
        categories = list(categories.values())
    types = {p.service_type for p in profiles} | {r.service_type for r in requests}
    if len(types) > 1:
        raise ScoringError(f"requests and SFs span several service types: {sorted(types)}")
    scores = score_matrix(profiles, categories, descriptors, mode)
    sf_ids = scores.sf_order
    s = priority_matrix(requests, sf_ids)
    rows = []
    for req in requests:
        try:
            k = scores.category_order.index(req.category_id)
        except ValueError:
            raise ScoringError(f"request {req.request_id}: unknown category {req.category_id}") from None
        rows.append(k)
    q = scores.q[rows] if requests else np.zeros((0, len(sf_ids)))
    return CoefficientMatrix(s * q, tuple(r.request_id for r in requests), sf_ids)
