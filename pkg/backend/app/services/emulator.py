"""
Discrete-event emulation of the sliced satellite network.

Each beam link is a single capacity server. Every Active slice gets, per covered
beam and link direction, a FIFO lane policed at its MBR and marked against a
token bucket running at its GBR. The link serves guaranteed traffic first
(conformant packets, and everything a Hard-isolation slice was allowed to send),
then shares what is left between excess traffic and the best-effort default
queue by scheduler weight. Propagation delay from the orbit is added at egress.

A run is a pure function of (network, flows, duration, seed): randomness comes
only from per-flow generators spawned from the seed.
"""

import heapq
import logging
import math
from collections import deque
from typing import Deque, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.core.errors import InconsistentState
from app.core.service_config import ServiceConfig
from app.models.classifier import DEFAULT_SLICE, RuleTable, StitchTopology
from app.models.enums import Isolation, LifecycleState, LinkDirection, TrafficPattern
from app.models.pool import ResourcePool
from app.models.results import BeamSeries, IsolationVerdict, LaneMetrics, MetricsReport, SliceMetrics
from app.models.scenario import TrafficSpec
from app.models.slice import SliceInstance
from app.services.qos_mapper import map_qos, propagation_delay_ms
from app.services.slice_classifier import classify, compile_stitch_tables

logger = logging.getLogger(__name__)

_DEPARTURE = 0
_ARRIVAL = 1

# buckets always hold at least one full-size packet
MTU_BITS = 8 * 1500


class LinkConfig(BaseModel):
    beam_id: str
    direction: LinkDirection
    capacity_mbps: float = Field(..., ge=0)

    @property
    def key(self) -> str:
        return f"{self.beam_id}/{self.direction.value}"


class SliceLane(BaseModel):
    """Queue + token buckets of one slice on one beam link"""
    slice_id: str
    beam_id: str
    direction: LinkDirection
    gbr_mbps: float = Field(..., ge=0)
    mbr_mbps: float = Field(..., ge=0)
    hard: bool = False
    weight: int = Field(1, gt=0)
    chain_ms: float = Field(0.0, ge=0)

    @property
    def link_key(self) -> str:
        return f"{self.beam_id}/{self.direction.value}"


class EmulatedNetwork(BaseModel):
    """Immutable description of what a scenario runs against"""
    propagation_ms: float = Field(..., ge=0)
    links: List[LinkConfig] = Field(default_factory=list)
    lanes: List[SliceLane] = Field(default_factory=list)
    tables: Dict[str, RuleTable] = Field(default_factory=dict, description="Ingress tables keyed 'location/direction'")
    burst_ms: float = Field(50.0, gt=0)
    queue_packets: int = Field(100, gt=0)
    default_weight: int = Field(1, gt=0)
    sample_interval_s: float = Field(0.1, gt=0)
    packet_size_bytes: int = Field(1250, gt=0, le=1500, description="Size of packets whose flow names none")


def build_network(
    slices: Sequence[SliceInstance],
    pool: ResourcePool,
    tables: Optional[Dict[str, RuleTable]] = None,
    config: Optional[ServiceConfig] = None,
    topology: Optional[StitchTopology] = None,
) -> EmulatedNetwork:
    """
    Emulated network for the Active slices.

    Raises:
        InconsistentState: an Active slice holds no allocation
    """
    config = config or ServiceConfig()
    active = [s for s in slices if s.state == LifecycleState.ACTIVE]
    for instance in active:
        if instance.allocation is None:
            raise InconsistentState(instance.slice_id)

    links = []
    for beam in pool.beams:
        links.append(LinkConfig(beam_id=beam.beam_id, direction=LinkDirection.FORWARD, capacity_mbps=beam.fwd_capacity_mbps))
        links.append(LinkConfig(beam_id=beam.beam_id, direction=LinkDirection.RETURN, capacity_mbps=beam.rtn_capacity_mbps))

    lanes = []
    for instance in sorted(active, key=lambda s: (s.creation_index, s.slice_id)):
        sat_qos = instance.sat_qos or map_qos(instance.profile.qos, instance.profile.service_class, config.qos_map)
        chain_ms = instance.chain.latency_ms if instance.chain is not None else 0.0
        for beam_id, res in instance.allocation.beams.items():
            for direction, gbr, mbr in (
                (LinkDirection.FORWARD, res.gbr_fwd, res.mbr_fwd),
                (LinkDirection.RETURN, res.gbr_rtn, res.mbr_rtn),
            ):
                lanes.append(SliceLane(
                    slice_id=instance.slice_id,
                    beam_id=beam_id,
                    direction=direction,
                    gbr_mbps=gbr,
                    mbr_mbps=mbr,
                    hard=instance.profile.isolation == Isolation.HARD,
                    weight=sat_qos.scheduler_weight,
                    chain_ms=chain_ms,
                ))

    if tables is None:
        tables = compile_stitch_tables(active, topology or config.topology)

    return EmulatedNetwork(
        propagation_ms=propagation_delay_ms(pool.orbit, config.altitudes_km),
        links=links,
        lanes=lanes,
        tables=tables,
        burst_ms=config.emulator.burst_ms,
        queue_packets=config.emulator.queue_packets,
        default_weight=config.emulator.default_weight,
        sample_interval_s=config.emulator.sample_interval_s,
        packet_size_bytes=config.emulator.packet_size_bytes,
    )


def validate_flows(network: EmulatedNetwork, flows: Sequence[TrafficSpec]) -> None:
    """Raise ValueError for flows on links the network does not have"""
    known = {link.key for link in network.links}
    for i, flow in enumerate(flows):
        if f"{flow.beam_id}/{flow.direction.value}" not in known:
            raise ValueError(f"flows[{i}]: beam {flow.beam_id!r} is not part of the network")


# ============================================================================
# Run-time state
# ============================================================================

class _TokenBucket:
    """Token bucket in bits, refilled on simulated time"""

    def __init__(self, rate_bps: float, capacity_bits: float):
        self.rate = rate_bps
        self.capacity = capacity_bits
        self.tokens = capacity_bits
        self.last = 0.0

    def drip(self, now: float) -> None:
        self.tokens = min(self.capacity, self.tokens + self.rate * (now - self.last))
        self.last = now

    def consume(self, bits: float, now: float) -> bool:
        self.drip(now)
        if bits > self.tokens:
            return False
        self.tokens -= bits
        return True


class _Packet:
    __slots__ = ("arrival", "bits", "guaranteed")

    def __init__(self, arrival: float, bits: float, guaranteed: bool):
        self.arrival = arrival
        self.bits = bits
        self.guaranteed = guaranteed


class _Tally:
    __slots__ = ("packets_in", "bits_in", "carried", "bits_carried", "dropped", "delays")

    def __init__(self):
        self.packets_in = 0
        self.bits_in = 0.0
        self.carried = 0
        self.bits_carried = 0.0
        self.dropped = 0
        self.delays: List[float] = []


class _Queue:
    def __init__(self, key: str, slice_id: str, weight: int, bound: int, chain_ms: float,
                 policer: Optional[_TokenBucket], marker: Optional[_TokenBucket], hard: bool):
        self.key = key
        self.slice_id = slice_id
        self.weight = weight
        self.bound = bound
        self.chain_ms = chain_ms
        self.policer = policer
        self.marker = marker
        self.hard = hard
        self.packets: Deque[_Packet] = deque()
        self.last_finish = 0.0
        self.lane_in_bits = 0.0
        self.lane_carried_bits = 0.0


class _Link:
    def __init__(self, config: LinkConfig, bins: int):
        self.config = config
        self.rate_bps = config.capacity_mbps * 1e6
        self.queues: List[_Queue] = []
        self.busy = False
        self.vclock = 0.0
        self.busy_time = [0.0] * bins
        self.in_service: Optional[Tuple[_Queue, _Packet]] = None

    def next_packet(self) -> Optional[Tuple[_Queue, _Packet]]:
        guaranteed = [q for q in self.queues if q.packets and q.packets[0].guaranteed]
        if guaranteed:
            queue = min(guaranteed, key=lambda q: (q.packets[0].arrival, q.key))
            return queue, queue.packets.popleft()

        backlogged = [q for q in self.queues if q.packets]
        if not backlogged:
            return None
        tags = {
            q.key: max(q.last_finish, self.vclock) + q.packets[0].bits / q.weight
            for q in backlogged
        }
        queue = min(backlogged, key=lambda q: (tags[q.key], q.key))
        queue.last_finish = tags[queue.key]
        self.vclock = tags[queue.key]
        return queue, queue.packets.popleft()


def _arrivals(flow: TrafficSpec, packet_bytes: int, rng: np.random.Generator, horizon: float) -> Iterator[float]:
    end = min(flow.stop_s, horizon)
    if flow.rate_mbps <= 0:
        return
    interval = packet_bytes * 8 / (flow.rate_mbps * 1e6)
    if flow.pattern == TrafficPattern.CBR:
        k = 0
        while True:
            t = flow.start_s + k * interval
            if t >= end:
                return
            yield t
            k += 1
    else:
        t = flow.start_s + float(rng.exponential(interval))
        while t < end:
            yield t
            t += float(rng.exponential(interval))


def run_scenario(
    network: EmulatedNetwork,
    traffic: Sequence[TrafficSpec],
    duration_s: float,
    seed: int,
) -> MetricsReport:
    """Run one scenario; identical inputs give an identical report"""
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    validate_flows(network, traffic)

    bins = max(1, math.ceil(duration_s / network.sample_interval_s - 1e-9))
    links: Dict[str, _Link] = {l.key: _Link(l, bins) for l in network.links}
    queues: Dict[Tuple[str, str], _Queue] = {}
    tallies: Dict[str, _Tally] = {DEFAULT_SLICE: _Tally()}
    gbr_by_lane: Dict[Tuple[str, str], float] = {}

    for lane in network.lanes:
        link = links[lane.link_key]
        burst_s = network.burst_ms / 1000.0
        policer = _TokenBucket(lane.mbr_mbps * 1e6, max(lane.mbr_mbps * 1e6 * burst_s, MTU_BITS))
        marker = _TokenBucket(lane.gbr_mbps * 1e6, max(lane.gbr_mbps * 1e6 * burst_s, MTU_BITS) if lane.gbr_mbps > 0 else 0.0)
        queue = _Queue(f"{lane.slice_id}@{lane.link_key}", lane.slice_id, lane.weight,
                       network.queue_packets, lane.chain_ms, policer, marker, lane.hard)
        link.queues.append(queue)
        queues[(lane.slice_id, lane.link_key)] = queue
        tallies.setdefault(lane.slice_id, _Tally())
        gbr_by_lane[(lane.slice_id, lane.link_key)] = lane.gbr_mbps
    for key, link in links.items():
        # "~" sorts after slice ids, keeping the default queue last on ties
        queue = _Queue(f"~{DEFAULT_SLICE}@{key}", DEFAULT_SLICE, network.default_weight,
                       network.queue_packets, 0.0, None, None, False)
        link.queues.append(queue)
        queues[(DEFAULT_SLICE, key)] = queue

    # every packet of a flow carries the same metadata, classify once per flow
    flow_queues: List[_Queue] = []
    for flow in traffic:
        table = network.tables.get(f"{flow.location}/{flow.mark.value}")
        slice_id = classify(flow.meta, table) if table is not None else DEFAULT_SLICE
        link_key = f"{flow.beam_id}/{flow.direction.value}"
        flow_queues.append(queues.get((slice_id, link_key)) or queues[(DEFAULT_SLICE, link_key)])

    packet_bytes = [flow.packet_size_bytes or network.packet_size_bytes for flow in traffic]
    streams = np.random.SeedSequence(seed).spawn(max(1, len(traffic)))
    generators = [
        _arrivals(flow, packet_bytes[i], np.random.default_rng(streams[i]), duration_s)
        for i, flow in enumerate(traffic)
    ]

    heap: List[tuple] = []
    seq = 0

    def push(time: float, kind: int, payload) -> None:
        nonlocal seq
        heapq.heappush(heap, (time, kind, seq, payload))
        seq += 1

    for index, gen in enumerate(generators):
        first = next(gen, None)
        if first is not None:
            push(first, _ARRIVAL, index)

    def start_service(link: _Link, now: float) -> None:
        if link.busy or link.rate_bps <= 0:
            return
        picked = link.next_packet()
        if picked is None:
            return
        queue, packet = picked
        link.busy = True
        link.in_service = picked
        done = now + packet.bits / link.rate_bps
        _add_busy(link, now, min(done, duration_s), network.sample_interval_s)
        push(done, _DEPARTURE, link.config.key)

    while heap:
        now, kind, _, payload = heapq.heappop(heap)
        if now > duration_s:
            break

        if kind == _ARRIVAL:
            flow = traffic[payload]
            queue = flow_queues[payload]
            link = links[f"{flow.beam_id}/{flow.direction.value}"]
            bits = packet_bytes[payload] * 8.0
            tally = tallies.setdefault(queue.slice_id, _Tally())
            tally.packets_in += 1
            tally.bits_in += bits
            queue.lane_in_bits += bits

            if queue.policer is not None and not queue.policer.consume(bits, now):
                tally.dropped += 1
            elif len(queue.packets) >= queue.bound:
                tally.dropped += 1
            else:
                if queue.marker is None:
                    guaranteed = False
                else:
                    # the marker drains whenever the packet conforms to GBR
                    conformant = queue.marker.consume(bits, now)
                    guaranteed = conformant or queue.hard
                queue.packets.append(_Packet(now, bits, guaranteed))
                start_service(link, now)

            following = next(generators[payload], None)
            if following is not None:
                push(following, _ARRIVAL, payload)
        else:
            link = links[payload]
            queue, packet = link.in_service
            link.busy = False
            link.in_service = None
            tally = tallies[queue.slice_id]
            tally.carried += 1
            tally.bits_carried += packet.bits
            queue.lane_carried_bits += packet.bits
            tally.delays.append((now - packet.arrival) * 1000.0 + queue.chain_ms + network.propagation_ms)
            start_service(link, now)

    in_flight: Dict[str, int] = {}
    for link in links.values():
        for queue in link.queues:
            in_flight[queue.slice_id] = in_flight.get(queue.slice_id, 0) + len(queue.packets)
        if link.in_service is not None:
            sid = link.in_service[0].slice_id
            in_flight[sid] = in_flight.get(sid, 0) + 1

    slices: Dict[str, SliceMetrics] = {}
    for slice_id in sorted(tallies):
        tally = tallies[slice_id]
        delays = np.asarray(tally.delays, dtype=float)
        lanes = {}
        for (sid, link_key), queue in sorted(queues.items()):
            if sid == slice_id and queue.lane_in_bits > 0:
                lanes[link_key] = LaneMetrics(
                    offered_mbps=queue.lane_in_bits / duration_s / 1e6,
                    carried_mbps=queue.lane_carried_bits / duration_s / 1e6,
                    gbr_mbps=gbr_by_lane.get((sid, link_key), 0.0),
                )
        slices[slice_id] = SliceMetrics(
            offered_mbps=tally.bits_in / duration_s / 1e6,
            carried_mbps=tally.bits_carried / duration_s / 1e6,
            mean_delay_ms=float(np.mean(delays)) if delays.size else 0.0,
            p99_delay_ms=float(np.percentile(delays, 99)) if delays.size else 0.0,
            loss_ratio=tally.dropped / tally.packets_in if tally.packets_in else 0.0,
            packets_in=tally.packets_in,
            packets_carried=tally.carried,
            packets_dropped=tally.dropped,
            packets_in_flight=in_flight.get(slice_id, 0),
            lanes=lanes,
        )

    beams = []
    for key in sorted(links):
        link = links[key]
        times = [i * network.sample_interval_s for i in range(bins)]
        widths = [min(network.sample_interval_s, duration_s - t) for t in times]
        beams.append(BeamSeries(
            beam_id=link.config.beam_id,
            direction=link.config.direction,
            times_s=times,
            utilization=[min(1.0, busy / width) if width > 0 else 0.0 for busy, width in zip(link.busy_time, widths)],
        ))

    logger.debug("scenario seed=%d duration=%.3fs events=%d", seed, duration_s, seq)
    return MetricsReport(duration_s=duration_s, seed=seed, slices=slices, beams=beams)


def _add_busy(link: _Link, start: float, end: float, interval: float) -> None:
    if end <= start:
        return
    first = int(start // interval)
    last = min(len(link.busy_time) - 1, int(end // interval))
    for b in range(first, last + 1):
        lo = max(start, b * interval)
        hi = min(end, (b + 1) * interval)
        if hi > lo:
            link.busy_time[b] += hi - lo


def verify_isolation(
    report: MetricsReport,
    slices: Sequence[SliceInstance],
    tolerance: float = 0.02,
) -> List[IsolationVerdict]:
    """
    A slice passes when its carried load reaches
    min(offered, profile gbr) * (1 - tolerance), whatever links it used.
    """
    verdicts = []
    for instance in slices:
        metrics = report.slices.get(instance.slice_id, SliceMetrics())
        required = min(metrics.offered_mbps, instance.profile.qos.gbr_mbps) * (1.0 - tolerance)
        verdicts.append(IsolationVerdict(
            slice_id=instance.slice_id,
            passed=metrics.carried_mbps >= required,
            offered_mbps=metrics.offered_mbps,
            carried_mbps=metrics.carried_mbps,
            required_mbps=required,
            tolerance=tolerance,
        ))
    return verdicts
