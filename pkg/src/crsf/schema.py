"""Service-type schemas: QoS parameter descriptors plus category profiles."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .registry import CategoryProfile, Direction, QosParamDescriptor, SchemaError, validate_service_type

# Sensing QoS parameters with the ranges used in the sensing experiments.
SENSING_PARAMS = (
    QosParamDescriptor("position_accuracy", "cm", Direction.COST, 20.0, 500.0),
    QosParamDescriptor("latency", "ms", Direction.COST, 10.0, 500.0),
    QosParamDescriptor("sensing_range", "m", Direction.BENEFIT, 50.0, 300.0),
    QosParamDescriptor("resolution", "cm", Direction.COST, 1.0, 20.0),
    QosParamDescriptor("detection_probability", "", Direction.BENEFIT, 0.5, 1.0),
    QosParamDescriptor("false_alarm_probability", "", Direction.COST, 0.0, 0.1),
)


@dataclass(frozen=True)
class ServiceTypeSchema:
    name: str
    params: tuple[QosParamDescriptor, ...]
    categories: tuple[CategoryProfile, ...]

    def __post_init__(self):
        validate_service_type(self.name)
        n = len(self.params)
        ids = [c.category_id for c in self.categories]
        if len(set(ids)) != len(ids):
            raise SchemaError(f"{self.name}: duplicate category ids")
        for cat in self.categories:
            if len(cat.weights) != n:
                raise SchemaError(f"{self.name}: category {cat.category_id} has "
                                  f"{len(cat.weights)} weights, expected {n}")

    def category(self, category_id: int) -> CategoryProfile:
        for cat in self.categories:
            if cat.category_id == category_id:
                return cat
        raise SchemaError(f"{self.name}: unknown category {category_id}")


def schema_from_dict(name: str, d: dict[str, Any]) -> ServiceTypeSchema:
    try:
        params = tuple(QosParamDescriptor(p["name"], p.get("unit", ""), p["direction"],
                                          float(p["range_min"]), float(p["range_max"]))
                       for p in d["params"])
        cats = tuple(CategoryProfile(int(c["category_id"]), tuple(c["weights"]),
                                     float(c["latency_threshold"]), float(c["utilization"]))
                     for c in d["categories"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: malformed schema ({exc})") from exc
    return ServiceTypeSchema(name, params, cats)


def schema_to_dict(schema: ServiceTypeSchema) -> dict[str, Any]:
    return {
        "params": [{"name": p.name, "unit": p.unit, "direction": p.direction.value,
                    "range_min": p.range_min, "range_max": p.range_max} for p in schema.params],
        "categories": [{"category_id": c.category_id, "weights": list(c.weights),
                        "latency_threshold": c.latency_threshold,
                        "utilization": c.utilization} for c in schema.categories],
    }


def load_schemas(path: str | Path) -> dict[str, ServiceTypeSchema]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    types = raw.get("service_types", raw)
    return {name: schema_from_dict(name, body) for name, body in types.items()}


def dump_schemas(schemas: dict[str, ServiceTypeSchema], path: str | Path) -> None:
    body = {"service_types": {k: schema_to_dict(v) for k, v in schemas.items()}}
    Path(path).write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
