"""Drive sampled rounds through a live CRSF over TCP instead of calling solvers directly."""
from __future__ import annotations

import asyncio
import io

import numpy as np

from ..protocol import CapacityUpdate, Discover, Message, MessageType, Register, Tick, message
from ..schema import ServiceTypeSchema
from ..service import CrsfClient, CrsfServer, ServiceConfig
from ..solver import Assignment, Budget, SelectionInstance, assignment_from_vector
from .config import SimConfig
from .experiments import RoundPair
from .metrics import compute_metrics
from .sampling import SERVICE_TYPE, RoundSample, descriptors_for, sample_instance, to_instance


class ServiceRoundError(RuntimeError):
    pass


async def _run_on_service(sample: RoundSample, config: SimConfig, solver: str,
                          instance: SelectionInstance) -> Assignment:
    schema = ServiceTypeSchema(SERVICE_TYPE, descriptors_for(config), sample.categories)
    svc = ServiceConfig({SERVICE_TYPE: schema}, port=0, tick_mode=True, solver=solver,
                        scoring_mode=config.scoring_mode,
                        budget=Budget(config.baseline_node_budget if solver == "baseline"
                                      else config.node_budget, 0.0))
    server = CrsfServer(svc, out=io.StringIO())
    await server.start()
    client = await CrsfClient.connect("127.0.0.1", server.port)
    try:
        async def call(payload):
            reply, _ = await client.request(message(payload))
            if reply.type is MessageType.ERROR:
                raise ServiceRoundError(f"{type(payload).__name__} rejected: {reply.payload}")

        for prof in sample.profiles:
            await call(Register(prof))
            # resent through the update path, as an SF would each interval
            await call(CapacityUpdate(prof.sf_id, prof.capacity))
        for req in sample.requests:
            row = {p.sf_id: sample.latency.get(req.request_id, p.sf_id) for p in sample.profiles}
            await call(Discover(req, row))
        reply, notices = await client.request(Message(MessageType.TICK, 0, Tick()))
        if reply.type is not MessageType.ACK:
            raise ServiceRoundError(f"TICK rejected: {reply.payload}")
    finally:
        await client.close()
        await server.close()

    col = {sf_id: j for j, sf_id in enumerate(instance.sf_ids)}
    row = {rid: i for i, rid in enumerate(instance.request_ids)}
    vec = np.full(instance.num_requests, -1, dtype=np.int64)
    seen = set()
    optimal = True
    for n in notices:
        p = n.payload
        if p.request_id in seen:
            raise ServiceRoundError(f"duplicate notice for request {p.request_id}")
        seen.add(p.request_id)
        optimal &= p.optimal
        if p.served:
            vec[row[p.request_id]] = col[p.sf_id]
    if len(seen) != instance.num_requests:
        raise ServiceRoundError(f"{len(seen)} notices for {instance.num_requests} requests")
    return assignment_from_vector(instance, vec, optimal, solver=solver)


def solve_round_via_service(config: SimConfig, round_index: int) -> RoundPair:
    """Same contract as the in-process round solver, but each solve goes over the wire."""
    sample = sample_instance(config, round_index)
    instance, _ = to_instance(sample, config)
    proposed = "exact" if config.solver == "exact" else "greedy"
    base = asyncio.run(_run_on_service(sample, config, "baseline", instance))
    prop = asyncio.run(_run_on_service(sample, config, proposed, instance))
    return RoundPair(compute_metrics(prop, instance), compute_metrics(base, instance))
