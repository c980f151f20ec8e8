"""
5G QoS -> satellite service class mapping and latency budget decomposition
"""

from typing import Mapping, Optional

from app.core.service_config import QosMapConfig
from app.models.catalog import NfChain
from app.models.enums import Orbit, SatQosClassId, ServiceClass
from app.models.qos import LatencyBudget, SatQosClass
from app.models.slice import FiveGQos

SPEED_OF_LIGHT_KM_S = 299792.458

DEFAULT_ALTITUDES_KM = {Orbit.LEO: 550.0, Orbit.MEO: 8000.0, Orbit.GEO: 35786.0}
DEFAULT_SCHEDULING_MS = 10.0


def map_qos(qos: FiveGQos, service_class: ServiceClass, qos_map: Optional[QosMapConfig] = None) -> SatQosClass:
    """Total, deterministic mapping of a slice's 5G QoS onto a satellite class"""
    qos_map = qos_map or QosMapConfig()

    if service_class == ServiceClass.URLLC or qos.pdb_ms <= qos_map.rt_pdb_ms:
        class_id = SatQosClassId.RT_CONVERSATIONAL
    elif service_class == ServiceClass.EMBB:
        class_id = SatQosClassId.STREAMING if qos.gbr_mbps > 0 else SatQosClassId.INTERACTIVE
    elif service_class == ServiceClass.MMTC:
        class_id = SatQosClassId.BACKGROUND
    else:
        rt, streaming, interactive = qos_map.custom_thresholds
        if qos.priority <= rt:
            class_id = SatQosClassId.RT_CONVERSATIONAL
        elif qos.priority <= streaming:
            class_id = SatQosClassId.STREAMING
        elif qos.priority <= interactive:
            class_id = SatQosClassId.INTERACTIVE
        else:
            class_id = SatQosClassId.BACKGROUND

    return SatQosClass(
        class_id=class_id,
        scheduler_weight=qos_map.scheduler_weights[class_id],
        drop_precedence=qos_map.drop_precedence[class_id],
    )


def propagation_delay_ms(orbit: Orbit, altitudes_km: Optional[Mapping[Orbit, float]] = None) -> float:
    """
    Bent-pipe one-way delay ground -> satellite -> ground at the sub-satellite
    point: 2 * h / c.
    """
    altitudes = altitudes_km or DEFAULT_ALTITUDES_KM
    return altitude_delay_ms(altitudes[Orbit(orbit)])


def altitude_delay_ms(altitude_km: float) -> float:
    return 2.0 * altitude_km / SPEED_OF_LIGHT_KM_S * 1000.0


def latency_feasibility(
    qos: FiveGQos,
    orbit: Orbit,
    chain: Optional[NfChain] = None,
    scheduling_ms: float = DEFAULT_SCHEDULING_MS,
    altitudes_km: Optional[Mapping[Orbit, float]] = None,
) -> LatencyBudget:
    propagation = propagation_delay_ms(orbit, altitudes_km)
    chain_ms = chain.latency_ms if chain is not None else 0.0
    slack = qos.pdb_ms - (propagation + chain_ms + scheduling_ms)
    return LatencyBudget(
        pdb_ms=qos.pdb_ms,
        propagation_ms=propagation,
        chain_ms=chain_ms,
        scheduling_ms=scheduling_ms,
        slack_ms=slack,
        orbit=orbit,
        feasible=slack >= 0,
    )
