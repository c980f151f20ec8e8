"""
Slice classifier rule compilation and flow classification.

Classifiers sit at the subnet boundaries (stitch points) and map flow metadata to
the slice the flow belongs to. Tables are immutable snapshots; recompiling builds
a new table that the owner swaps in.
"""

import heapq
import logging
from ipaddress import ip_address, ip_network
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from app.core.errors import ConflictingRules
from app.models.classifier import (
    ClassifierRule,
    FlowMetadata,
    MatchSpec,
    RuleAction,
    RuleTable,
    StitchPoint,
    StitchTopology,
)
from app.models.enums import LifecycleState, Mark, SliceMode
from app.models.slice import SliceInstance

logger = logging.getLogger(__name__)

# specificity tiers, lower wins
EXACT_TIER = 100
SNSSAI_TIER = 200
PREFIX_TIER = 300
MAX_PREFIX_BITS = 256

CLASSIFIED_STATES = frozenset({LifecycleState.INSTANTIATING, LifecycleState.ACTIVE, LifecycleState.MODIFYING})


def _slice_matches(instance: SliceInstance, direction: Mark) -> List[Tuple[int, MatchSpec]]:
    """(priority, match) pairs one slice contributes to a table"""
    matches: List[Tuple[int, MatchSpec]] = []
    if instance.profile.mode == SliceMode.INTEGRATED:
        stitching = instance.stitching
        if stitching is None or stitching.snssai is None:
            return matches
        if stitching.qfi:
            for qfi in sorted(set(stitching.qfi)):
                matches.append((EXACT_TIER, MatchSpec(snssai=stitching.snssai, qfi=qfi)))
        else:
            matches.append((SNSSAI_TIER, MatchSpec(snssai=stitching.snssai)))
    else:
        ingress = instance.ingress
        if ingress is None:
            return matches
        for pair in ingress.prefixes:
            src, dst = pair.src_prefix, pair.dst_prefix
            if direction == Mark.FROM_SATELLITE:
                src, dst = dst, src
            if src is None and dst is None:
                continue
            match = MatchSpec(src_prefix=src, dst_prefix=dst, dscp=ingress.dscp)
            matches.append((PREFIX_TIER + MAX_PREFIX_BITS - match.prefix_bits(), match))

    unique: Dict[str, Tuple[int, MatchSpec]] = {}
    for priority, match in matches:
        unique.setdefault(match.model_dump_json(), (priority, match))
    return list(unique.values())


def compile_rules(slices: Iterable[SliceInstance], direction: Mark = Mark.TO_SATELLITE) -> RuleTable:
    """
    Build the rule table for the classified slices, rule ids in creation order.

    Raises:
        ConflictingRules: two slices produce an identical match
    """
    eligible = sorted(
        (s for s in slices if s.state in CLASSIFIED_STATES),
        key=lambda s: (s.creation_index, s.created_at, s.slice_id),
    )
    owners: Dict[str, str] = {}
    rules: List[ClassifierRule] = []
    next_id = 1
    for instance in eligible:
        for priority, match in _slice_matches(instance, direction):
            key = match.model_dump_json()
            if key in owners:
                raise ConflictingRules(owners[key], instance.slice_id, match.model_dump(exclude_none=True))
            owners[key] = instance.slice_id
            rules.append(
                ClassifierRule(
                    rule_id=next_id,
                    priority=priority,
                    match=match,
                    action=RuleAction(slice_id=instance.slice_id, mark=direction),
                )
            )
            next_id += 1

    logger.debug("compiled %d rules for %d slices (%s)", len(rules), len(eligible), direction.value)
    return RuleTable(rules=rules)


def stitch_points(mode: SliceMode, topology: Optional[StitchTopology] = None) -> List[StitchPoint]:
    """Where a slice of the given mode needs classifiers"""
    topology = topology or StitchTopology()
    if SliceMode(mode) == SliceMode.INTEGRATED:
        return [
            StitchPoint(location=topology.ran_edge, direction=Mark.TO_SATELLITE),
            StitchPoint(location=topology.cn_edge, direction=Mark.FROM_SATELLITE),
            StitchPoint(location=topology.hub_edge, direction=Mark.TO_SATELLITE),
            StitchPoint(location=topology.hub_edge, direction=Mark.FROM_SATELLITE),
        ]
    # pure satellite slices have no RAN/CN side to stitch; the hub FromSatellite
    # table matches the swapped pair, i.e. traffic addressed to the customer prefixes
    return [
        StitchPoint(location=topology.terminal_edge, direction=Mark.TO_SATELLITE),
        StitchPoint(location=topology.hub_edge, direction=Mark.TO_SATELLITE),
        StitchPoint(location=topology.hub_edge, direction=Mark.FROM_SATELLITE),
    ]


def compile_stitch_tables(
    slices: Sequence[SliceInstance], topology: Optional[StitchTopology] = None
) -> Dict[str, RuleTable]:
    """One shared table per stitch point, keyed 'location/direction'"""
    members: Dict[str, List[SliceInstance]] = {}
    points: Dict[str, StitchPoint] = {}
    for mode in SliceMode:
        for point in stitch_points(mode, topology):
            points[point.key()] = point
            members.setdefault(point.key(), [])
    for instance in slices:
        for point in stitch_points(instance.profile.mode, topology):
            members[point.key()].append(instance)
    return {key: compile_rules(members[key], points[key].direction) for key in sorted(points)}


# ============================================================================
# Classification
# ============================================================================

def _build_index(table: RuleTable) -> dict:
    """SST buckets plus wildcard-SST rules, each in (priority, rule_id) order"""
    by_sst: Dict[int, list] = {}
    wildcard: list = []
    for rule in table.rules:
        m = rule.match
        entry = (
            (rule.priority, rule.rule_id),
            rule,
            ip_network(m.src_prefix) if m.src_prefix else None,
            ip_network(m.dst_prefix) if m.dst_prefix else None,
        )
        if m.snssai is not None:
            by_sst.setdefault(m.snssai.sst, []).append(entry)
        else:
            wildcard.append(entry)
    return {"by_sst": by_sst, "wildcard": wildcard}


def _matches(rule: ClassifierRule, src_net, dst_net, meta: FlowMetadata, src, dst) -> bool:
    m = rule.match
    if m.snssai is not None:
        if meta.snssai is None or meta.snssai.sst != m.snssai.sst:
            return False
        if m.snssai.sd is not None and meta.snssai.sd != m.snssai.sd:
            return False
    if m.qfi is not None and meta.qfi != m.qfi:
        return False
    if m.dscp is not None and meta.dscp != m.dscp:
        return False
    if src_net is not None and src not in src_net:
        return False
    if dst_net is not None and dst not in dst_net:
        return False
    return True


def classify(meta: FlowMetadata, table: RuleTable) -> str:
    """Slice id of the first matching rule in (priority, rule_id) order, else the default"""
    if table._index is None:
        table._index = _build_index(table)
    index = table._index

    sst_rules = index["by_sst"].get(meta.snssai.sst, []) if meta.snssai is not None else []
    src, dst = ip_address(meta.src), ip_address(meta.dst)
    for _, rule, src_net, dst_net in heapq.merge(sst_rules, index["wildcard"], key=lambda e: e[0]):
        if _matches(rule, src_net, dst_net, meta, src, dst):
            return rule.action.slice_id
    return table.default.slice_id
