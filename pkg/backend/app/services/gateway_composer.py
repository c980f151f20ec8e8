"""
Per-slice satellite gateway composition.

The gateway is an ordered chain of network functions taken from the catalog.
Selecting the chain is a weighted set cover over capability tags: exact
branch-and-bound for small catalogs, greedy cost-per-new-capability above
EXACT_SEARCH_LIMIT. Placement on HUB hosts is first-fit-decreasing.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from app.core.errors import InsufficientCompute, Uncoverable
from app.core.service_config import QosMapConfig
from app.models.catalog import NfChain, NfDescriptor, Placement
from app.models.enums import Isolation, SatQosClassId, ServiceClass
from app.models.pool import HostResource
from app.models.slice import SliceProfile
from app.services.qos_mapper import map_qos

logger = logging.getLogger(__name__)

EXACT_SEARCH_LIMIT = 20

BASE_CAPABILITIES = frozenset({"classify", "encapsulate", "schedule"})


def required_capabilities(profile: SliceProfile, qos_map: Optional[QosMapConfig] = None) -> Set[str]:
    required = set(BASE_CAPABILITIES)
    if profile.service_class == ServiceClass.EMBB and profile.qos.gbr_mbps > 0:
        required.add("accelerate")
    if map_qos(profile.qos, profile.service_class, qos_map).class_id == SatQosClassId.RT_CONVERSATIONAL:
        required.add("low-latency-sched")
    if profile.isolation == Isolation.HARD:
        required.add("encrypt")
    return required


def _selection_key(selection: Sequence[NfDescriptor]) -> Tuple[int, int, Tuple[str, ...]]:
    """Total order on covers: cost, then fewer NFs, then sorted nf_id sequence"""
    return (
        sum(nf.cost for nf in selection),
        len(selection),
        tuple(sorted(nf.nf_id for nf in selection)),
    )


def _order_by_stage(selection: Iterable[NfDescriptor]) -> NfChain:
    return NfChain(members=sorted(selection, key=lambda nf: (nf.stage, nf.nf_id)))


def _exact_cover(required: Set[str], candidates: List[NfDescriptor]) -> Optional[List[NfDescriptor]]:
    candidates = sorted(candidates, key=lambda nf: nf.nf_id)
    provides = [set(nf.provides) & required for nf in candidates]

    # capabilities still obtainable from candidates[i:]
    reachable: List[Set[str]] = [set() for _ in range(len(candidates) + 1)]
    for i in range(len(candidates) - 1, -1, -1):
        reachable[i] = reachable[i + 1] | provides[i]

    best: Dict[str, object] = {"key": None, "selection": None}

    def search(i: int, chosen: List[NfDescriptor], cost: int, covered: Set[str]) -> None:
        best_key = best["key"]
        if covered >= required:
            key = _selection_key(chosen)
            if best_key is None or key < best_key:
                best["key"], best["selection"] = key, list(chosen)
            return
        # adding anything raises cost (cost > 0), so equal cost cannot win anymore
        if best_key is not None and cost >= best_key[0]:
            return
        if i == len(candidates) or not (required - covered) <= reachable[i]:
            return

        nf = candidates[i]
        if provides[i] - covered:
            chosen.append(nf)
            search(i + 1, chosen, cost + nf.cost, covered | provides[i])
            chosen.pop()
        search(i + 1, chosen, cost, covered)

    search(0, [], 0, set())
    return best["selection"]


def _greedy_cover(required: Set[str], candidates: List[NfDescriptor]) -> List[NfDescriptor]:
    covered: Set[str] = set()
    chosen: List[NfDescriptor] = []
    remaining = sorted(candidates, key=lambda nf: nf.nf_id)
    while not covered >= required:
        scored = [
            (nf.cost / len((set(nf.provides) & required) - covered), nf.nf_id, nf)
            for nf in remaining
            if (set(nf.provides) & required) - covered
        ]
        _, _, pick = min(scored, key=lambda item: (item[0], item[1]))
        chosen.append(pick)
        covered |= set(pick.provides) & required
        remaining.remove(pick)

    # drop members made redundant by later picks, most expensive first
    for nf in sorted(chosen, key=lambda nf: (-nf.cost, nf.nf_id)):
        rest = [other for other in chosen if other is not nf]
        rest_covers = set()
        for other in rest:
            rest_covers.update(other.provides)
        if required <= rest_covers:
            chosen = rest
    return chosen


def compose_chain(required: Iterable[str], catalog: Sequence[NfDescriptor]) -> NfChain:
    """
    Minimum-cost catalog subset whose capabilities cover `required`, ordered by stage.

    Raises:
        Uncoverable: some required capability is provided by no catalog entry
    """
    required = set(required)
    offered = set().union(*(set(nf.provides) for nf in catalog)) if catalog else set()
    missing = required - offered
    if missing:
        raise Uncoverable(missing)
    if not required:
        return NfChain()

    candidates = [nf for nf in catalog if set(nf.provides) & required]
    if len(catalog) <= EXACT_SEARCH_LIMIT:
        selection = _exact_cover(required, candidates)
    else:
        selection = _greedy_cover(required, candidates)

    chain = _order_by_stage(selection)
    logger.debug("composed chain %s cost=%d for %s", chain.nf_ids, chain.total_cost, sorted(required))
    return chain


def chain_latency(chain: NfChain) -> float:
    return chain.latency_ms


def place_chain(chain: NfChain, hosts: Sequence[HostResource]) -> Placement:
    """
    First-fit-decreasing by cpu demand (ties by nf_id) over hosts ordered by host_id,
    using each host's residual capacity.

    Raises:
        InsufficientCompute: naming the first NF that fits on no host
    """
    ordered_hosts = sorted(hosts, key=lambda h: h.host_id)
    free = {h.host_id: [h.residual_cpu, h.residual_mem] for h in ordered_hosts}
    placement: Dict[str, str] = {}

    for nf in sorted(chain.members, key=lambda nf: (-nf.cpu_units, nf.nf_id)):
        target = next(
            (h.host_id for h in ordered_hosts
             if free[h.host_id][0] >= nf.cpu_units and free[h.host_id][1] >= nf.mem_mb),
            None,
        )
        if target is None:
            raise InsufficientCompute(nf.nf_id)
        free[target][0] -= nf.cpu_units
        free[target][1] -= nf.mem_mb
        placement[nf.nf_id] = target

    logger.debug("placed chain %s", placement)
    return Placement(hosts=placement)
