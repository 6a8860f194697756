"""Service-function catalog kept by the CRSF.

One ``Registry`` holds every SF that registered for inter-subnetwork sharing,
keyed by ``sf_id``.  Each service type has its own QoS parameter schema, and at
most one SF per (subnetwork, service type) is accepted.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

_SERVICE_TYPE_RE = re.compile(r"^[a-z0-9]+(?:-[a-z0-9]+)*$")


class RegistryError(Exception):
    """Base class for registry rejections."""

    code = "invalid"


class SchemaError(RegistryError):
    """Profile does not match the schema of its service type."""

    code = "schema"


class ConflictError(RegistryError):
    """A different SF already serves this (subnetwork, service type)."""

    code = "conflict"


class NotFoundError(RegistryError):
    code = "not-found"


class InvalidValueError(RegistryError):
    code = "invalid"


def validate_service_type(name: str) -> str:
    if not isinstance(name, str) or not _SERVICE_TYPE_RE.match(name):
        raise SchemaError(f"invalid service type {name!r}")
    return name


class Direction(str, enum.Enum):
    BENEFIT = "benefit"
    COST = "cost"


@dataclass(frozen=True)
class QosParamDescriptor:
    name: str
    unit: str
    direction: Direction
    range_min: float
    range_max: float

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if not (math.isfinite(self.range_min) and math.isfinite(self.range_max)):
            raise SchemaError(f"{self.name}: non-finite range")
        if not self.range_min < self.range_max:
            raise SchemaError(f"{self.name}: range_min must be < range_max")

    def contains(self, value: float) -> bool:
        return self.range_min <= value <= self.range_max


@dataclass(frozen=True)
class SfProfile:
    sf_id: int
    subnetwork_id: int
    service_type: str
    qos_params: tuple[float, ...]
    capacity: float

    def __post_init__(self):
        validate_service_type(self.service_type)
        params = tuple(float(p) for p in self.qos_params)
        if not all(math.isfinite(p) for p in params):
            raise InvalidValueError("qos_params must be finite")
        object.__setattr__(self, "qos_params", params)
        cap = float(self.capacity)
        if not math.isfinite(cap) or cap < 0:
            raise InvalidValueError(f"capacity must be >= 0, got {self.capacity}")
        object.__setattr__(self, "capacity", cap)

    def with_capacity(self, capacity: float) -> SfProfile:
        return SfProfile(self.sf_id, self.subnetwork_id, self.service_type,
                         self.qos_params, capacity)


@dataclass(frozen=True)
class CategoryProfile:
    category_id: int
    weights: tuple[float, ...]
    latency_threshold: float
    utilization: float

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if any(not math.isfinite(x) or x < 0 for x in w):
            raise InvalidValueError("category weights must be finite and >= 0")
        object.__setattr__(self, "weights", w)
        if not self.latency_threshold > 0:
            raise InvalidValueError("latency_threshold must be > 0")
        if not self.utilization > 0:
            raise InvalidValueError("utilization must be > 0")


@dataclass(frozen=True)
class ServiceRequest:
    """A delegated discovery request.

    ``category_id`` is the one-hot category indicator in compact form.
    ``priority_weights`` maps sf_id to the request's preference for the domain
    hosting that SF; every listed weight must be positive.
    """

    request_id: int
    origin_subnetwork: int
    service_type: str
    category_id: int
    priority_weights: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        validate_service_type(self.service_type)
        weights = {int(k): float(v) for k, v in self.priority_weights.items()}
        for sf_id, s in weights.items():
            if not (math.isfinite(s) and s > 0):
                raise InvalidValueError(f"priority weight for SF {sf_id} must be > 0")
        object.__setattr__(self, "priority_weights", weights)


@dataclass
class LatencyMatrix:
    """Service latency in ms per (request_id, sf_id)."""

    entries: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        for key, v in self.entries.items():
            if not (math.isfinite(v) and v >= 0):
                raise InvalidValueError(f"latency {key} must be >= 0")

    def set_row(self, request_id: int, row: Mapping[int, float]) -> None:
        for sf_id, v in row.items():
            v = float(v)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidValueError(f"latency for SF {sf_id} must be >= 0")
            self.entries[(request_id, int(sf_id))] = v

    def get(self, request_id: int, sf_id: int) -> float:
        return self.entries[(request_id, sf_id)]

    def missing(self, request_ids: Iterable[int], sf_ids: Iterable[int]) -> list[tuple[int, int]]:
        sf_ids = list(sf_ids)
        return [(r, m) for r in request_ids for m in sf_ids if (r, m) not in self.entries]


@dataclass(frozen=True)
class RegistryEntry:
    profile: SfProfile
    last_update_slot: int


class Registry:
    """Mutable SF catalog.  Mutations are expected from a single owner."""

    def __init__(self, schemas: Mapping[str, Sequence[QosParamDescriptor]]):
        self.schemas = {validate_service_type(k): tuple(v) for k, v in schemas.items()}
        self.entries: dict[int, RegistryEntry] = {}
        self.current_slot = 0

    def __len__(self):
        return len(self.entries)

    def __contains__(self, sf_id):
        return sf_id in self.entries

    def _check_schema(self, profile: SfProfile) -> None:
        descriptors = self.schemas.get(profile.service_type)
        if descriptors is None:
            raise SchemaError(f"unknown service type {profile.service_type!r}")
        if len(profile.qos_params) != len(descriptors):
            raise SchemaError(
                f"{profile.service_type} expects {len(descriptors)} QoS parameters, "
                f"got {len(profile.qos_params)}")
        for d, p in zip(descriptors, profile.qos_params):
            if not d.contains(p):
                raise SchemaError(f"{d.name}={p} outside [{d.range_min}, {d.range_max}]")

    def register_sf(self, profile: SfProfile) -> RegistryEntry:
        self._check_schema(profile)
        for sf_id, entry in self.entries.items():
            other = entry.profile
            if (sf_id != profile.sf_id and other.subnetwork_id == profile.subnetwork_id
                    and other.service_type == profile.service_type):
                raise ConflictError(
                    f"subnetwork {profile.subnetwork_id} already offers "
                    f"{profile.service_type} as SF {sf_id}")
        prior = self.entries.get(profile.sf_id)
        if prior is not None and prior.profile.service_type != profile.service_type:
            raise ConflictError(f"SF {profile.sf_id} is registered for "
                                f"{prior.profile.service_type}")
        entry = RegistryEntry(profile, self.current_slot)
        self.entries[profile.sf_id] = entry
        return entry

    def update_capacity(self, sf_id: int, capacity: float) -> RegistryEntry:
        entry = self.entries.get(sf_id)
        if entry is None:
            raise NotFoundError(f"SF {sf_id} is not registered")
        if not (math.isfinite(capacity) and capacity >= 0):
            raise InvalidValueError(f"capacity must be >= 0, got {capacity}")
        entry = RegistryEntry(entry.profile.with_capacity(capacity), self.current_slot)
        self.entries[sf_id] = entry
        return entry

    def deregister_sf(self, sf_id: int) -> None:
        if self.entries.pop(sf_id, None) is None:
            raise NotFoundError(f"SF {sf_id} is not registered")

    def service_type_of(self, sf_id: int) -> str:
        entry = self.entries.get(sf_id)
        if entry is None:
            raise NotFoundError(f"SF {sf_id} is not registered")
        return entry.profile.service_type

    def snapshot(self, service_type: str) -> tuple[SfProfile, ...]:
        """Profiles of one service type ordered by sf_id; detached from later mutations."""
        return tuple(self.entries[k].profile for k in sorted(self.entries)
                     if self.entries[k].profile.service_type == service_type)

    def advance_slot(self) -> int:
        self.current_slot += 1
        return self.current_slot
