"""The network-facing CRSF.

``Crsf`` is the transport-free core: it owns the registry and the per-service
batches, turns incoming messages into replies and, when a slot closes, solves
each batch and produces the selection notices.  ``CrsfServer`` wraps it in an
asyncio TCP server that speaks the framed protocol, and ``CrsfClient`` is a
small client used by the CLI and the tests.
"""
from __future__ import annotations

import asyncio
import enum
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Hashable, Sequence, TextIO

import numpy as np

from .protocol import (Ack, CapacityUpdate, Discover, Error, Message, MessageType, ProtocolError,
                       Register, SelectionNotice, Tick, decode_frame, encode_frame, read_frame)
from .registry import Registry, RegistryError, ServiceRequest, SfProfile
from .schema import ServiceTypeSchema, load_schemas, schema_from_dict
from .scoring import ScoringMode, score_matrix
from .solver import (Assignment, Budget, SelectionInstance, brute_force, solve_baseline,
                     solve_exact, solve_greedy, verify_assignment)

log = logging.getLogger(__name__)

SOLVERS = ("exact", "greedy", "baseline", "brute")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    schemas: dict[str, ServiceTypeSchema]
    host: str = "127.0.0.1"
    port: int = 7400
    slot_period: float = 0.1
    tick_mode: bool = False
    solver: str = "exact"
    scoring_mode: str = "raw"
    budget: Budget = Budget()

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        ScoringMode(self.scoring_mode)
        if not self.slot_period > 0:
            raise ConfigError("slot period must be > 0")
        if not 0 <= self.port < 65536:
            raise ConfigError(f"invalid port {self.port}")


def config_from_dict(d: dict[str, Any], base_dir: str | Path = ".") -> ServiceConfig:
    """Build a config from its JSON form.

    ``schemas`` is either a path to a schema file (relative to ``base_dir``)
    or an inline ``{service_type: schema}`` object.
    """
    try:
        raw = d["schemas"]
        if isinstance(raw, str):
            schemas = load_schemas(Path(base_dir) / raw)
        else:
            schemas = {name: schema_from_dict(name, body)
                       for name, body in raw.get("service_types", raw).items()}
        mode = d.get("mode", "timer")
        if mode not in ("timer", "tick"):
            raise ConfigError(f"mode must be 'timer' or 'tick', got {mode!r}")
        budget = d.get("budget", {})
        return ServiceConfig(
            schemas=schemas,
            host=str(d.get("host", "127.0.0.1")),
            port=int(d.get("port", 7400)),
            slot_period=float(d.get("slot_period_ms", 100)) / 1000.0,
            tick_mode=mode == "tick",
            solver=str(d.get("solver", "exact")),
            scoring_mode=str(d.get("scoring_mode", "raw")),
            budget=Budget(int(budget.get("nodes", Budget.nodes)),
                          float(budget.get("seconds", Budget.seconds))))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, OSError, RegistryError) as exc:
        raise ConfigError(f"invalid service config: {exc}") from exc


def load_config(path: str | Path) -> ServiceConfig:
    path = Path(path)
    try:
        body = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(body, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(body, path.parent)


class Phase(str, enum.Enum):
    COLLECTING = "collecting"
    SOLVING = "solving"
    NOTIFYING = "notifying"


@dataclass(frozen=True)
class Pending:
    request: ServiceRequest
    latency: dict[int, float]
    reply_to: Hashable


@dataclass(frozen=True)
class Batch:
    """Requests of one service type frozen at slot close, with the SF snapshot."""

    service_type: str
    slot: int
    pending: tuple[Pending, ...]
    profiles: tuple[SfProfile, ...]
    schema: ServiceTypeSchema


@dataclass(frozen=True)
class BatchOutcome:
    batch: Batch
    instance: SelectionInstance
    assignment: Assignment


@dataclass(frozen=True)
class SlotReport:
    slot: int
    outcomes: tuple[BatchOutcome, ...]
    notices: tuple[tuple[Hashable, Message], ...]

    @property
    def batch_size(self) -> int:
        return sum(len(o.batch.pending) for o in self.outcomes)

    @property
    def objective(self) -> float:
        return float(sum(o.assignment.objective for o in self.outcomes))

    @property
    def optimal(self) -> bool:
        return all(o.assignment.optimal for o in self.outcomes)

    def log_line(self) -> str:
        return (f"slot {self.slot} batch {self.batch_size} objective {self.objective:.6f} "
                f"optimal {str(self.optimal).lower()}")


Reply = tuple[Hashable, Message]


def build_batch_instance(batch: Batch, scoring_mode: str = "raw") -> tuple[SelectionInstance, np.ndarray]:
    """Selection instance and priority matrix for a frozen batch.

    A pair without a priority weight or a latency entry (for example an SF
    that registered after the request arrived) is treated as infeasible.
    """
    profiles, schema = batch.profiles, batch.schema
    reqs = [p.request for p in batch.pending]
    scores = score_matrix(profiles, schema.categories, schema.params, scoring_mode)
    sf_ids = [p.sf_id for p in profiles]
    r_count, m_count = len(reqs), len(sf_ids)
    s = np.zeros((r_count, m_count))
    feasible = np.zeros((r_count, m_count), dtype=bool)
    q = np.zeros((r_count, m_count))
    util = np.ones(r_count)
    for i, entry in enumerate(batch.pending):
        req = entry.request
        cat = schema.category(req.category_id)
        util[i] = cat.utilization
        q[i] = scores.q[scores.category_order.index(req.category_id)]
        for j, sf_id in enumerate(sf_ids):
            weight = req.priority_weights.get(sf_id)
            lat = entry.latency.get(sf_id)
            if weight is None or lat is None:
                continue
            s[i, j] = weight
            feasible[i, j] = lat <= cat.latency_threshold
    instance = SelectionInstance(s * q, feasible, util, [p.capacity for p in profiles],
                                 tuple(r.request_id for r in reqs), tuple(sf_ids))
    return instance, s


def solve_batch(batch: Batch, solver: str = "exact", scoring_mode: str = "raw",
                budget: Budget = Budget()) -> BatchOutcome:
    instance, s = build_batch_instance(batch, scoring_mode)
    if solver == "exact":
        a = solve_exact(instance, budget)
    elif solver == "baseline":
        a = solve_baseline(instance, s, budget)
    elif solver == "greedy":
        a = solve_greedy(instance)
    else:
        a = brute_force(instance)
    if not verify_assignment(instance, a):
        raise AssertionError(f"{solver} produced an invalid assignment in slot {batch.slot}")
    return BatchOutcome(batch, instance, a)


class Crsf:
    """Registry, per-service-type request batches and slot bookkeeping."""

    def __init__(self, schemas: dict[str, ServiceTypeSchema], solver: str = "exact",
                 scoring_mode: str = "raw", budget: Budget = Budget()):
        self.schemas = dict(schemas)
        self.registry = Registry({k: v.params for k, v in self.schemas.items()})
        self.solver = solver
        self.scoring_mode = scoring_mode
        self.budget = budget
        self.pending: dict[str, list[Pending]] = {}
        self.providers: dict[int, Hashable] = {}
        self.phase = Phase.COLLECTING

    @property
    def slot(self) -> int:
        return self.registry.current_slot

    def reply(self, payload) -> Message:
        return Message(MessageType.ACK if isinstance(payload, Ack) else MessageType.ERROR,
                       self.slot, payload)

    def error(self, code: str, message: str) -> Message:
        return self.reply(Error(code, message))

    def handle(self, msg: Message, sender: Hashable) -> Message:
        """Apply one inbound message and return the immediate reply."""
        p = msg.payload
        if isinstance(p, Register):
            return self.handle_register(p, sender)
        if isinstance(p, CapacityUpdate):
            return self.handle_capacity(p)
        if isinstance(p, Discover):
            return self.handle_discover(p, sender)
        return self.error("unsupported", f"{msg.type.value} is not accepted by the CRSF")

    def handle_register(self, p: Register, sender: Hashable) -> Message:
        try:
            self.registry.register_sf(p.profile)
        except RegistryError as exc:
            return self.error(exc.code, str(exc))
        self.providers[p.profile.sf_id] = sender
        return self.reply(Ack(MessageType.REGISTER.value, p.profile.sf_id))

    def handle_capacity(self, p: CapacityUpdate) -> Message:
        try:
            self.registry.update_capacity(p.sf_id, p.capacity)
        except RegistryError as exc:
            return self.error(exc.code, str(exc))
        return self.reply(Ack(MessageType.CAPACITY_UPDATE.value, p.sf_id))

    def handle_discover(self, p: Discover, sender: Hashable) -> Message:
        req = p.request
        stype = req.service_type
        offered = {prof.sf_id for prof in self.registry.snapshot(stype)} \
            if stype in self.schemas else set()
        if not offered:
            return self.error("no-provider", f"no SF offers {stype!r}")
        try:
            self.schemas[stype].category(req.category_id)
        except RegistryError as exc:
            return self.error("schema", str(exc))
        for what, ids in (("priority map", req.priority_weights), ("latency row", p.latency)):
            unknown = sorted(set(ids) - offered)
            if unknown:
                return self.error("unknown-sf", f"{what} names unregistered {stype} SF(s) {unknown}")
        if any(not (math.isfinite(v) and v >= 0) for v in p.latency.values()):
            return self.error("schema", "latency entries must be >= 0")
        queue = self.pending.setdefault(stype, [])
        if any(e.request.request_id == req.request_id for e in queue):
            return self.error("duplicate-request", f"request {req.request_id} is already queued")
        queue.append(Pending(req, dict(p.latency), sender))
        return self.reply(Ack(MessageType.DISCOVER.value, req.request_id))

    def close_slot(self) -> tuple[int, list[Batch]]:
        """Freeze the current batches and open the next slot.

        Messages handled after this call belong to the next slot.
        """
        slot = self.slot
        batches = []
        for stype in sorted(self.pending):
            queue = self.pending[stype]
            if queue:
                batches.append(Batch(stype, slot, tuple(queue), self.registry.snapshot(stype),
                                     self.schemas[stype]))
        self.pending = {}
        self.registry.advance_slot()
        return slot, batches

    def solve(self, slot: int, batches: Sequence[Batch]) -> SlotReport:
        """Solve frozen batches; safe to run off the event loop."""
        outcomes = tuple(solve_batch(b, self.solver, self.scoring_mode, self.budget) for b in batches)
        return SlotReport(slot, outcomes, ())

    def notices(self, report: SlotReport) -> SlotReport:
        """Attach one notice per request, plus a copy for the chosen SF's connection."""
        out: list[Reply] = []
        for o in report.outcomes:
            a = o.assignment
            sf_ids = o.instance.sf_ids
            for i, entry in enumerate(o.batch.pending):
                m = a.assigned.get(i)
                if m is None:
                    notice = SelectionNotice(entry.request.request_id, None, None, a.optimal)
                else:
                    notice = SelectionNotice(entry.request.request_id, sf_ids[m],
                                             float(a.per_request_value[i]), a.optimal)
                msg = Message(MessageType.SELECTION_NOTICE, report.slot, notice)
                out.append((entry.reply_to, msg))
                provider = self.providers.get(notice.sf_id) if notice.served else None
                if provider is not None and provider != entry.reply_to:
                    out.append((provider, msg))
        return SlotReport(report.slot, report.outcomes, tuple(out))

    def run_slot(self) -> SlotReport:
        """Close, solve and notify in one synchronous step."""
        self.phase = Phase.SOLVING
        try:
            slot, batches = self.close_slot()
            report = self.solve(slot, batches)
            self.phase = Phase.NOTIFYING
            return self.notices(report)
        finally:
            self.phase = Phase.COLLECTING


# transport

class _Connection:
    _ids = 0

    def __init__(self, writer: asyncio.StreamWriter):
        _Connection._ids += 1
        self.id = _Connection._ids
        self.writer = writer

    def __hash__(self):
        return self.id

    def send(self, msg: Message) -> None:
        if self.writer.is_closing():
            return
        try:
            self.writer.write(encode_frame(msg))
        except (ConnectionError, RuntimeError):
            pass


class CrsfServer:
    """asyncio server around a ``Crsf`` core.

    In timer mode a slot closes every ``slot_period`` seconds; in tick mode a
    TICK message closes it and is acknowledged after the notices are sent.
    """

    def __init__(self, config: ServiceConfig, out: TextIO | None = None,
                 on_slot: Callable[[SlotReport], None] | None = None):
        self.config = config
        self.core = Crsf(config.schemas, config.solver, config.scoring_mode, config.budget)
        self.out = out if out is not None else sys.stdout
        self.on_slot = on_slot
        self._server: asyncio.base_events.Server | None = None
        self._slot_lock = asyncio.Lock()
        self._timer: asyncio.Task | None = None
        self._conns: set[_Connection] = set()

    @property
    def port(self) -> int:
        assert self._server is not None
        return self._server.sockets[0].getsockname()[1]

    def _print(self, line: str) -> None:
        print(line, file=self.out, flush=True)

    async def start(self) -> None:
        self._server = await asyncio.start_server(self._serve_conn, self.config.host, self.config.port)
        mode = "tick" if self.config.tick_mode else f"timer {self.config.slot_period * 1000:g}ms"
        self._print(f"crsf ready on {self.config.host}:{self.port} mode {mode} "
                    f"solver {self.config.solver} scoring {self.config.scoring_mode}")
        if not self.config.tick_mode:
            self._timer = asyncio.create_task(self._timer_loop())

    async def serve_forever(self) -> None:
        if self._server is None:
            await self.start()
        try:
            await self._server.serve_forever()
        except asyncio.CancelledError:
            pass
        finally:
            await self.close()

    async def close(self) -> None:
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None
        if self._server is not None:
            self._server.close()
            for conn in list(self._conns):
                conn.writer.close()
            await self._server.wait_closed()

    async def _timer_loop(self) -> None:
        loop = asyncio.get_running_loop()
        next_at = loop.time() + self.config.slot_period
        while True:
            await asyncio.sleep(max(0.0, next_at - loop.time()))
            try:
                await self.run_slot()
            except Exception:
                log.exception("slot failed")
            next_at = max(next_at + self.config.slot_period, loop.time())

    async def run_slot(self) -> SlotReport:
        async with self._slot_lock:
            core = self.core
            core.phase = Phase.SOLVING
            slot, batches = core.close_slot()
            try:
                report = await asyncio.to_thread(core.solve, slot, batches)
            finally:
                core.phase = Phase.NOTIFYING
            report = core.notices(report)
            for conn, msg in report.notices:
                conn.send(msg)
            core.phase = Phase.COLLECTING
            self._print(report.log_line())
            if self.on_slot is not None:
                self.on_slot(report)
            return report

    async def _serve_conn(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        conn = _Connection(writer)
        self._conns.add(conn)
        try:
            while True:
                try:
                    frame = await read_frame(reader)
                except ProtocolError as exc:
                    # framing is lost; report and drop the connection
                    conn.send(self.core.error(exc.code, str(exc)))
                    break
                if frame is None:
                    break
                try:
                    msg = decode_frame(frame)
                except ProtocolError as exc:
                    conn.send(self.core.error(exc.code, str(exc)))
                    continue
                if isinstance(msg.payload, Tick):
                    if not self.config.tick_mode:
                        conn.send(self.core.error("unsupported", "TICK is only accepted in tick mode"))
                        continue
                    report = await self.run_slot()
                    conn.send(self.core.reply(Ack(MessageType.TICK.value, report.slot)))
                    continue
                conn.send(self.core.handle(msg, conn))
                await writer.drain()
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        except Exception:  # never let one connection take the service down
            log.exception("connection handler failed")
        finally:
            self._conns.discard(conn)
            self.core.providers = {k: v for k, v in self.core.providers.items() if v is not conn}
            writer.close()


class CrsfClient:
    """Framed-protocol client; replies and notices are read in arrival order."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer

    @classmethod
    async def connect(cls, host: str, port: int) -> CrsfClient:
        reader, writer = await asyncio.open_connection(host, port)
        return cls(reader, writer)

    async def send(self, msg: Message) -> None:
        self.writer.write(encode_frame(msg))
        await self.writer.drain()

    async def send_raw(self, data: bytes) -> None:
        self.writer.write(data)
        await self.writer.drain()

    async def recv(self, timeout: float | None = None) -> Message | None:
        frame = await asyncio.wait_for(read_frame(self.reader), timeout)
        return None if frame is None else decode_frame(frame)

    async def request(self, msg: Message, timeout: float | None = 30.0) -> tuple[Message, list[Message]]:
        """Send and wait for the ACK or ERROR answering it.

        Returns that reply plus any notices that arrived first.
        """
        await self.send(msg)
        notices = []
        while True:
            reply = await self.recv(timeout)
            if reply is None:
                raise ConnectionError("server closed the connection")
            if reply.type in (MessageType.ACK, MessageType.ERROR):
                return reply, notices
            notices.append(reply)

    async def close(self) -> None:
        self.writer.close()
        try:
            await self.writer.wait_closed()
        except ConnectionError:
            pass
