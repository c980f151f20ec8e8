"""
Service configuration file: pool inventory, NF catalog, QoS map, tenants
"""

import json
import logging
from pathlib import Path
from typing import Dict, List

from pydantic import BaseModel, Field, ValidationError, field_validator

from app.core.errors import ConfigError
from app.models.catalog import NfDescriptor
from app.models.classifier import StitchTopology
from app.models.enums import Orbit, SatQosClassId, TenantControl
from app.models.pool import BeamResource, HostResource, ResourcePool

logger = logging.getLogger(__name__)


class HostConfig(BaseModel):
    id: str
    cpu: int = Field(..., ge=0)
    mem: int = Field(..., ge=0)


class BeamConfig(BaseModel):
    id: str
    fwd_mbps: float = Field(..., ge=0)
    rtn_mbps: float = Field(..., ge=0)


class QosMapConfig(BaseModel):
    """Satellite class weights and the 5G -> satellite mapping thresholds"""
    scheduler_weights: Dict[SatQosClassId, int] = Field(
        default_factory=lambda: {
            SatQosClassId.RT_CONVERSATIONAL: 8,
            SatQosClassId.STREAMING: 4,
            SatQosClassId.INTERACTIVE: 2,
            SatQosClassId.BACKGROUND: 1,
        }
    )
    drop_precedence: Dict[SatQosClassId, int] = Field(
        default_factory=lambda: {
            SatQosClassId.RT_CONVERSATIONAL: 0,
            SatQosClassId.STREAMING: 0,
            SatQosClassId.INTERACTIVE: 1,
            SatQosClassId.BACKGROUND: 2,
        }
    )
    rt_pdb_ms: float = Field(50.0, description="pdb at or below this maps to RT-Conversational")
    custom_thresholds: List[int] = Field(
        default_factory=lambda: [32, 64, 96],
        description="Custom class priority bounds for RT / Streaming / Interactive",
    )

    @field_validator("scheduler_weights")
    @classmethod
    def validate_weights(cls, v):
        missing = [c.value for c in SatQosClassId if c not in v]
        if missing:
            raise ValueError(f"scheduler_weights missing {missing}")
        weights = [v[c] for c in SatQosClassId]
        if weights[-1] <= 0 or any(a <= b for a, b in zip(weights, weights[1:])):
            raise ValueError(
                f"scheduler_weights must be positive and strictly decreasing from RT-Conversational "
                f"to Background, got {weights}"
            )
        return v

    @field_validator("drop_precedence")
    @classmethod
    def validate_drop_precedence(cls, v):
        missing = [c.value for c in SatQosClassId if c not in v]
        if missing:
            raise ValueError(f"drop_precedence missing {missing}")
        if any(not 0 <= p <= 2 for p in v.values()):
            raise ValueError("drop_precedence values must be within 0..2")
        return v

    @field_validator("custom_thresholds")
    @classmethod
    def validate_thresholds(cls, v):
        if len(v) != 3:
            raise ValueError(f"custom_thresholds needs 3 bounds (RT, Streaming, Interactive), got {len(v)}")
        if any(a > b for a, b in zip(v, v[1:])):
            raise ValueError(f"custom_thresholds must be non-decreasing, got {v}")
        return v


class ToleranceConfig(BaseModel):
    isolation: float = Field(0.02, ge=0, lt=1)


class EmulatorConfig(BaseModel):
    burst_ms: float = Field(50.0, gt=0)
    queue_packets: int = Field(100, gt=0)
    packet_size_bytes: int = Field(1250, gt=0, le=1500)
    sample_interval_s: float = Field(0.1, gt=0)
    default_weight: int = Field(1, gt=0)


class ServiceConfig(BaseModel):
    """Everything the orchestrator reads from S3_CONFIG"""
    orbit: Orbit = Orbit.GEO
    altitudes_km: Dict[Orbit, float] = Field(
        default_factory=lambda: {Orbit.LEO: 550.0, Orbit.MEO: 8000.0, Orbit.GEO: 35786.0}
    )
    hosts: List[HostConfig] = Field(default_factory=list)
    beams: List[BeamConfig] = Field(default_factory=list)
    nf_catalog: List[NfDescriptor] = Field(default_factory=list)
    qos_map: QosMapConfig = Field(default_factory=QosMapConfig)
    scheduling_ms: float = Field(10.0, ge=0)
    overbooking_mbr: float = Field(2.0, ge=1.0)
    return_link_ratio: float = Field(0.1, ge=0)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    emulator: EmulatorConfig = Field(default_factory=EmulatorConfig)
    topology: StitchTopology = Field(default_factory=StitchTopology)
    tenants: Dict[str, TenantControl] = Field(default_factory=lambda: {"operator": TenantControl.FULL_CONTROL})
    default_tenant: str = "operator"

    def build_pool(self) -> ResourcePool:
        """Fresh pool (no allocations) from the configured inventory"""
        return ResourcePool(
            orbit=self.orbit,
            hosts=[HostResource(host_id=h.id, cpu_units=h.cpu, mem_mb=h.mem) for h in self.hosts],
            beams=[
                BeamResource(beam_id=b.id, fwd_capacity_mbps=b.fwd_mbps, rtn_capacity_mbps=b.rtn_mbps)
                for b in self.beams
            ],
            overbooking_mbr=self.overbooking_mbr,
        )


def load_service_config(path: Path) -> ServiceConfig:
    """
    Load and validate the service config file.

    Raises:
        ConfigError: when the file is missing, not JSON, or fails validation
    """
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: line {e.lineno} column {e.colno}")

    try:
        config = ServiceConfig.model_validate(raw)
        config.build_pool()
    except ValidationError as e:
        raise ConfigError(f"config {path} is invalid: {e}")

    logger.info(
        "loaded service config path=%s orbit=%s hosts=%d beams=%d catalog=%d",
        path, config.orbit.value, len(config.hosts), len(config.beams), len(config.nf_catalog),
    )
    return config
