"""Wire format between the CRSF, SFs and requesters.

A frame is a 4-byte big-endian length followed by that many bytes of UTF-8
JSON: ``{"type": ..., "slot": ..., "payload": {...}}``.  Unknown extra fields
are ignored when decoding and never produced when encoding.
"""
from __future__ import annotations

import asyncio
import enum
import json
import math
import struct
from dataclasses import dataclass, field
from typing import Any, Mapping, Union

from .registry import RegistryError, ServiceRequest, SfProfile

HEADER = struct.Struct(">I")
MAX_FRAME = 16 * 1024 * 1024


class ProtocolError(Exception):
    """Decoding failure; ``code`` is one of parse, unsupported, schema."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class MessageType(str, enum.Enum):
    REGISTER = "REGISTER"
    CAPACITY_UPDATE = "CAPACITY_UPDATE"
    DISCOVER = "DISCOVER"
    SELECTION_NOTICE = "SELECTION_NOTICE"
    ACK = "ACK"
    ERROR = "ERROR"
    # closes the current slot in tick mode
    TICK = "TICK"


@dataclass(frozen=True)
class Register:
    profile: SfProfile


@dataclass(frozen=True)
class CapacityUpdate:
    sf_id: int
    capacity: float


@dataclass(frozen=True)
class Discover:
    request: ServiceRequest
    latency: Mapping[int, float]


@dataclass(frozen=True)
class SelectionNotice:
    """Outcome for one request; ``sf_id`` is None when the request went unserved."""

    request_id: int
    sf_id: int | None
    value: float | None
    optimal: bool = True

    @property
    def served(self) -> bool:
        return self.sf_id is not None


@dataclass(frozen=True)
class Ack:
    of: str
    ref: int | None = None


@dataclass(frozen=True)
class Error:
    code: str
    message: str = ""


@dataclass(frozen=True)
class Tick:
    pass


Payload = Union[Register, CapacityUpdate, Discover, SelectionNotice, Ack, Error, Tick]

PAYLOAD_TYPES = {
    MessageType.REGISTER: Register,
    MessageType.CAPACITY_UPDATE: CapacityUpdate,
    MessageType.DISCOVER: Discover,
    MessageType.SELECTION_NOTICE: SelectionNotice,
    MessageType.ACK: Ack,
    MessageType.ERROR: Error,
    MessageType.TICK: Tick,
}


@dataclass(frozen=True)
class Message:
    type: MessageType
    slot: int
    payload: Payload = field(default_factory=Tick)

    def __post_init__(self):
        object.__setattr__(self, "type", MessageType(self.type))
        if not isinstance(self.payload, PAYLOAD_TYPES[self.type]):
            raise ProtocolError("schema", f"{self.type.value} cannot carry "
                                          f"{type(self.payload).__name__}")
        if self.slot < 0:
            raise ProtocolError("schema", "slot must be >= 0")


def message(payload: Payload, slot: int = 0) -> Message:
    for t, cls in PAYLOAD_TYPES.items():
        if isinstance(payload, cls):
            return Message(t, slot, payload)
    raise TypeError(f"not a payload: {payload!r}")


# encoding

def _profile_dict(p: SfProfile) -> dict[str, Any]:
    return {"sf_id": p.sf_id, "subnetwork_id": p.subnetwork_id, "service_type": p.service_type,
            "qos_params": list(p.qos_params), "capacity": p.capacity}


def _payload_dict(p: Payload) -> dict[str, Any]:
    if isinstance(p, Register):
        return _profile_dict(p.profile)
    if isinstance(p, CapacityUpdate):
        return {"sf_id": p.sf_id, "capacity": p.capacity}
    if isinstance(p, Discover):
        r = p.request
        return {"request": {"request_id": r.request_id, "origin_subnetwork": r.origin_subnetwork,
                            "service_type": r.service_type, "category_id": r.category_id,
                            "priority_weights": {str(k): v for k, v in r.priority_weights.items()}},
                "latency": {str(k): v for k, v in p.latency.items()}}
    if isinstance(p, SelectionNotice):
        return {"request_id": p.request_id, "sf_id": p.sf_id, "value": p.value,
                "status": "served" if p.served else "unserved", "optimal": p.optimal}
    if isinstance(p, Ack):
        return {"of": p.of, "ref": p.ref}
    if isinstance(p, Error):
        return {"code": p.code, "message": p.message}
    return {}


def encode_message(msg: Message) -> bytes:
    body = {"type": msg.type.value, "slot": msg.slot, "payload": _payload_dict(msg.payload)}
    return json.dumps(body, separators=(",", ":"), allow_nan=False).encode("utf-8")


def encode_frame(msg: Message) -> bytes:
    data = encode_message(msg)
    return HEADER.pack(len(data)) + data


# decoding

def _schema(msg: str) -> ProtocolError:
    return ProtocolError("schema", msg)


def _get(d: Mapping, key: str):
    if key not in d:
        raise _schema(f"missing field {key!r}")
    return d[key]


def _int(d: Mapping, key: str) -> int:
    v = _get(d, key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise _schema(f"{key} must be an integer")
    return v


def _real(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise _schema(f"{what} must be a finite number")
    return float(v)


def _str(d: Mapping, key: str) -> str:
    v = _get(d, key)
    if not isinstance(v, str):
        raise _schema(f"{key} must be a string")
    return v


def _obj(v, what: str) -> Mapping:
    if not isinstance(v, dict):
        raise _schema(f"{what} must be an object")
    return v


def _id_map(v, what: str) -> dict[int, float]:
    out = {}
    for k, x in _obj(v, what).items():
        try:
            sf = int(k)
        except ValueError:
            raise _schema(f"{what} key {k!r} is not an SF id") from None
        if str(sf) != k:
            raise _schema(f"{what} key {k!r} is not an SF id")
        out[sf] = _real(x, f"{what}[{k}]")
    return out


def _decode_payload(t: MessageType, d: Mapping) -> Payload:
    if t is MessageType.REGISTER:
        params = _get(d, "qos_params")
        if not isinstance(params, list):
            raise _schema("qos_params must be a list")
        return Register(SfProfile(_int(d, "sf_id"), _int(d, "subnetwork_id"), _str(d, "service_type"),
                                  tuple(_real(p, "qos_params") for p in params),
                                  _real(_get(d, "capacity"), "capacity")))
    if t is MessageType.CAPACITY_UPDATE:
        cap = _real(_get(d, "capacity"), "capacity")
        if cap < 0:
            raise _schema("capacity must be >= 0")
        return CapacityUpdate(_int(d, "sf_id"), cap)
    if t is MessageType.DISCOVER:
        r = _obj(_get(d, "request"), "request")
        req = ServiceRequest(_int(r, "request_id"), _int(r, "origin_subnetwork"),
                             _str(r, "service_type"), _int(r, "category_id"),
                             _id_map(_get(r, "priority_weights"), "priority_weights"))
        return Discover(req, _id_map(_get(d, "latency"), "latency"))
    if t is MessageType.SELECTION_NOTICE:
        status = _str(d, "status")
        optimal = _get(d, "optimal")
        if not isinstance(optimal, bool):
            raise _schema("optimal must be a boolean")
        if status == "unserved":
            return SelectionNotice(_int(d, "request_id"), None, None, optimal)
        if status != "served":
            raise _schema(f"unknown notice status {status!r}")
        return SelectionNotice(_int(d, "request_id"), _int(d, "sf_id"),
                               _real(_get(d, "value"), "value"), optimal)
    if t is MessageType.ACK:
        ref = d.get("ref")
        if ref is not None:
            ref = _int(d, "ref")
        return Ack(_str(d, "of"), ref)
    if t is MessageType.ERROR:
        msg = d.get("message", "")
        if not isinstance(msg, str):
            raise _schema("message must be a string")
        return Error(_str(d, "code"), msg)
    return Tick()


def decode_message(data: bytes) -> Message:
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, ValueError, RecursionError) as exc:
        raise ProtocolError("parse", f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ProtocolError("parse", "message must be a JSON object")
    t = obj.get("type")
    if not isinstance(t, str):
        raise ProtocolError("parse", "missing message type")
    try:
        mtype = MessageType(t)
    except ValueError:
        raise ProtocolError("unsupported", f"unknown message type {t!r}") from None
    slot = _int(obj, "slot")
    if slot < 0:
        raise _schema("slot must be >= 0")
    payload = obj.get("payload", {})
    try:
        return Message(mtype, slot, _decode_payload(mtype, _obj(payload, "payload")))
    except RegistryError as exc:
        raise _schema(str(exc)) from None


def decode_frame(frame: bytes) -> Message:
    """Decode exactly one complete frame."""
    if len(frame) < HEADER.size:
        raise ProtocolError("parse", "truncated frame header")
    (n,) = HEADER.unpack_from(frame)
    if n > MAX_FRAME:
        raise ProtocolError("parse", f"frame of {n} bytes exceeds the limit")
    if len(frame) - HEADER.size != n:
        raise ProtocolError("parse", f"frame declares {n} bytes, carries {len(frame) - HEADER.size}")
    return decode_message(bytes(frame[HEADER.size:]))


async def read_frame(reader: asyncio.StreamReader) -> bytes | None:
    """Next raw frame from a stream, or None on a clean end of stream."""
    try:
        head = await reader.readexactly(HEADER.size)
    except asyncio.IncompleteReadError as exc:
        if exc.partial:
            raise ProtocolError("parse", "truncated frame header") from None
        return None
    (n,) = HEADER.unpack(head)
    if n > MAX_FRAME:
        raise ProtocolError("parse", f"frame of {n} bytes exceeds the limit")
    try:
        body = await reader.readexactly(n)
    except asyncio.IncompleteReadError:
        raise ProtocolError("parse", "truncated frame body") from None
    return head + body
