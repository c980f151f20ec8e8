"""
Admission control and capacity accounting on the HUB resource pool.

Operations are functional: allocate/release return a new ResourcePool and never
touch the one they were given, so a caller can stage several steps on a working
copy and publish it only when the whole pipeline succeeded.
"""

import logging
from typing import Dict, List, Optional, Tuple

from app.core.errors import AdmissionRace, InsufficientCompute, UnknownAllocation, UnknownBeam
from app.core.service_config import ServiceConfig
from app.models.catalog import NfChain
from app.models.enums import Isolation, OrbitPreference
from app.models.pool import (
    AdmissionDecision,
    Allocation,
    BeamReservation,
    BeamUtilization,
    HostDemand,
    HostUtilization,
    ResourcePool,
    UtilizationReport,
)
from app.models.slice import SliceProfile
from app.services.gateway_composer import place_chain
from app.services.qos_mapper import latency_feasibility

logger = logging.getLogger(__name__)

# float slack for capacity comparisons
EPSILON = 1e-9

_LINKS = (("fwd", "fwd_capacity_mbps"), ("rtn", "rtn_capacity_mbps"))


def beam_demand(profile: SliceProfile, return_link_ratio: float = 0.1) -> BeamReservation:
    """Per-beam reservation a profile asks for"""
    qos = profile.qos
    return BeamReservation(
        gbr_fwd=qos.gbr_mbps,
        mbr_fwd=qos.mbr_mbps,
        gbr_rtn=qos.rtn_gbr_mbps if qos.rtn_gbr_mbps is not None else qos.gbr_mbps * return_link_ratio,
        mbr_rtn=qos.rtn_mbr_mbps if qos.rtn_mbr_mbps is not None else qos.mbr_mbps * return_link_ratio,
        exclusive=profile.isolation == Isolation.HARD,
    )


def _capacity_reason(profile: SliceProfile, pool: ResourcePool, demand: BeamReservation) -> Optional[Tuple[str, str]]:
    beams = [pool.beam(beam_id) for beam_id in profile.coverage_beams]

    for beam in beams:
        for link, cap_field in _LINKS:
            capacity = getattr(beam, cap_field)
            guaranteed = getattr(beam, f"allocated_gbr_{link}") + getattr(beam, f"allocated_exclusive_{link}")
            if guaranteed + getattr(demand, f"gbr_{link}") > capacity + EPSILON:
                return "GBR_CAPACITY", f"beam {beam.beam_id} {link}: {guaranteed} + {getattr(demand, f'gbr_{link}')} > {capacity}"

    for beam in beams:
        for link, cap_field in _LINKS:
            capacity = getattr(beam, cap_field)
            mbr = getattr(demand, f"mbr_{link}")
            if getattr(beam, f"allocated_mbr_{link}") + mbr > capacity * pool.overbooking_mbr + EPSILON:
                return "MBR_CAPACITY", f"beam {beam.beam_id} {link}: overbooked headroom exhausted"
            if demand.exclusive:
                guaranteed = getattr(beam, f"allocated_gbr_{link}") + getattr(beam, f"allocated_exclusive_{link}")
                if guaranteed + mbr > capacity + EPSILON:
                    return "MBR_CAPACITY", f"beam {beam.beam_id} {link}: hard isolation needs {mbr} exclusive"
    return None


def check_admission(
    profile: SliceProfile,
    pool: ResourcePool,
    chain: Optional[NfChain] = None,
    config: Optional[ServiceConfig] = None,
) -> AdmissionDecision:
    """
    Decide whether the pool can take the slice. Checks run in a fixed order
    (capacity, latency, compute) and the first failing one names the reject.

    Raises:
        UnknownBeam: a coverage beam is not part of the pool
    """
    config = config or ServiceConfig()
    for beam_id in profile.coverage_beams:
        if pool.beam(beam_id) is None:
            raise UnknownBeam(beam_id)

    failure = _capacity_reason(profile, pool, beam_demand(profile, config.return_link_ratio))
    if failure:
        return AdmissionDecision.reject(*failure)

    if profile.orbit_preference not in (OrbitPreference.ANY, pool.orbit.value):
        return AdmissionDecision.reject(
            "ORBIT_MISMATCH", f"slice wants {profile.orbit_preference.value}, pool is {pool.orbit.value}"
        )
    budget = latency_feasibility(profile.qos, pool.orbit, chain, config.scheduling_ms, config.altitudes_km)
    if not budget.feasible:
        return AdmissionDecision.reject("LATENCY", f"slack {budget.slack_ms:.2f} ms")

    if chain is not None:
        try:
            place_chain(chain, pool.hosts)
        except InsufficientCompute as e:
            return AdmissionDecision.reject("COMPUTE", str(e))

    return AdmissionDecision.admit()


def _retally(pool: ResourcePool) -> ResourcePool:
    """Recompute running totals from the ledger, in slice_id order"""
    for beam in pool.beams:
        for field in (
            "allocated_gbr_fwd", "allocated_gbr_rtn", "allocated_mbr_fwd",
            "allocated_mbr_rtn", "allocated_exclusive_fwd", "allocated_exclusive_rtn",
        ):
            setattr(beam, field, 0.0)
    for host in pool.hosts:
        host.allocated_cpu = 0
        host.allocated_mem = 0

    for slice_id in sorted(pool.allocations):
        allocation = pool.allocations[slice_id]
        for beam_id, res in allocation.beams.items():
            beam = pool.beam(beam_id)
            for link in ("fwd", "rtn"):
                gbr = getattr(res, f"gbr_{link}")
                mbr = getattr(res, f"mbr_{link}")
                setattr(beam, f"allocated_gbr_{link}", getattr(beam, f"allocated_gbr_{link}") + gbr)
                setattr(beam, f"allocated_mbr_{link}", getattr(beam, f"allocated_mbr_{link}") + mbr)
                if res.exclusive:
                    setattr(beam, f"allocated_exclusive_{link}", getattr(beam, f"allocated_exclusive_{link}") + (mbr - gbr))
        for host_id, demand in allocation.hosts.items():
            host = pool.host(host_id)
            host.allocated_cpu += demand.cpu
            host.allocated_mem += demand.mem
    return pool


def allocate(
    profile: SliceProfile,
    pool: ResourcePool,
    chain: Optional[NfChain] = None,
    config: Optional[ServiceConfig] = None,
) -> Tuple[Allocation, ResourcePool]:
    """
    Reserve beam capacity and place the chain on hosts, all or nothing.

    Admission is re-checked against `pool` (compare-and-commit).

    Raises:
        AdmissionRace: the pool no longer admits the slice
    """
    config = config or ServiceConfig()
    slice_id = profile.slice_id
    if slice_id in pool.allocations:
        raise AdmissionRace(slice_id, "slice already holds an allocation")

    decision = check_admission(profile, pool, chain, config)
    if not decision.admitted:
        raise AdmissionRace(slice_id, decision.reason)

    demand = beam_demand(profile, config.return_link_ratio)
    placement: Dict[str, str] = {}
    host_demands: Dict[str, HostDemand] = {}
    if chain is not None:
        placement = place_chain(chain, pool.hosts).hosts
        by_id = {nf.nf_id: nf for nf in chain.members}
        for nf_id, host_id in placement.items():
            entry = host_demands.setdefault(host_id, HostDemand())
            entry.cpu += by_id[nf_id].cpu_units
            entry.mem += by_id[nf_id].mem_mb

    allocation = Allocation(
        slice_id=slice_id,
        beams={beam_id: demand.model_copy() for beam_id in profile.coverage_beams},
        placement=placement,
        hosts=host_demands,
    )
    updated = pool.model_copy(deep=True)
    updated.allocations[slice_id] = allocation
    logger.debug("allocated slice=%s beams=%s hosts=%s", slice_id, profile.coverage_beams, sorted(host_demands))
    return allocation, _retally(updated)


def release(allocation: Allocation, pool: ResourcePool) -> ResourcePool:
    """
    Return an allocation's resources to the pool. Not idempotent.

    Raises:
        UnknownAllocation: the allocation is not live in this pool
    """
    live = pool.allocations.get(allocation.slice_id)
    if live is None or live != allocation:
        raise UnknownAllocation(allocation.slice_id)
    updated = pool.model_copy(deep=True)
    del updated.allocations[allocation.slice_id]
    return _retally(updated)


def restore(allocations: List[Allocation], pool: ResourcePool) -> ResourcePool:
    """Re-enter recovered allocations without admission checks"""
    updated = pool.model_copy(deep=True)
    for allocation in allocations:
        updated.allocations[allocation.slice_id] = allocation
    return _retally(updated)


def _fraction(allocated: float, capacity: float) -> float:
    if capacity <= 0:
        return 0.0
    return min(1.0, max(0.0, allocated / capacity))


def utilization(pool: ResourcePool) -> UtilizationReport:
    return UtilizationReport(
        beams=[
            BeamUtilization(
                beam_id=b.beam_id,
                gbr_fwd=_fraction(b.allocated_gbr_fwd, b.fwd_capacity_mbps),
                gbr_rtn=_fraction(b.allocated_gbr_rtn, b.rtn_capacity_mbps),
                mbr_fwd=_fraction(b.allocated_mbr_fwd, b.fwd_capacity_mbps * pool.overbooking_mbr),
                mbr_rtn=_fraction(b.allocated_mbr_rtn, b.rtn_capacity_mbps * pool.overbooking_mbr),
            )
            for b in pool.beams
        ],
        hosts=[
            HostUtilization(
                host_id=h.host_id,
                cpu=_fraction(h.allocated_cpu, h.cpu_units),
                mem=_fraction(h.allocated_mem, h.mem_mb),
            )
            for h in pool.hosts
        ],
    )
