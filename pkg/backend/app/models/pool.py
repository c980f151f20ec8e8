"""
Pydantic models for the mutualized HUB resource pool
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from app.models.enums import Orbit


class HostResource(BaseModel):
    """Compute host of the HUB; allocated_* are re-tallied from the pool ledger"""
    host_id: str
    cpu_units: int = Field(..., ge=0)
    mem_mb: int = Field(..., ge=0)
    allocated_cpu: int = 0
    allocated_mem: int = 0

    @property
    def residual_cpu(self) -> int:
        return self.cpu_units - self.allocated_cpu

    @property
    def residual_mem(self) -> int:
        return self.mem_mb - self.allocated_mem


class BeamResource(BaseModel):
    """Beam/carrier with forward and return capacities (Mbit/s)"""
    beam_id: str
    fwd_capacity_mbps: float = Field(..., ge=0)
    rtn_capacity_mbps: float = Field(..., ge=0)
    allocated_gbr_fwd: float = 0.0
    allocated_gbr_rtn: float = 0.0
    allocated_mbr_fwd: float = 0.0
    allocated_mbr_rtn: float = 0.0
    # sum of (mbr - gbr) held exclusively by Hard-isolation slices
    allocated_exclusive_fwd: float = 0.0
    allocated_exclusive_rtn: float = 0.0


class BeamReservation(BaseModel):
    gbr_fwd: float
    mbr_fwd: float
    gbr_rtn: float
    mbr_rtn: float
    exclusive: bool = Field(False, description="MBR held against plain capacity (Hard isolation)")


class HostDemand(BaseModel):
    cpu: int = 0
    mem: int = 0


class Allocation(BaseModel):
    """Everything one slice holds in the pool"""
    slice_id: str
    beams: Dict[str, BeamReservation] = Field(default_factory=dict)
    placement: Dict[str, str] = Field(default_factory=dict, description="nf_id -> host_id")
    hosts: Dict[str, HostDemand] = Field(default_factory=dict)


class ResourcePool(BaseModel):
    """HUB inventory plus the ledger of live allocations"""
    orbit: Orbit
    hosts: List[HostResource] = Field(default_factory=list)
    beams: List[BeamResource] = Field(default_factory=list)
    overbooking_mbr: float = Field(2.0, ge=1.0)
    allocations: Dict[str, Allocation] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_unique_ids(self):
        host_ids = [h.host_id for h in self.hosts]
        beam_ids = [b.beam_id for b in self.beams]
        if len(set(host_ids)) != len(host_ids):
            raise ValueError("host ids must be unique")
        if len(set(beam_ids)) != len(beam_ids):
            raise ValueError("beam ids must be unique")
        return self

    def beam(self, beam_id: str) -> Optional[BeamResource]:
        return next((b for b in self.beams if b.beam_id == beam_id), None)

    def host(self, host_id: str) -> Optional[HostResource]:
        return next((h for h in self.hosts if h.host_id == host_id), None)


class AdmissionDecision(BaseModel):
    admitted: bool
    reason: Optional[str] = Field(None, description="First failing check code when rejected")
    detail: Optional[str] = None

    @classmethod
    def admit(cls) -> "AdmissionDecision":
        return cls(admitted=True)

    @classmethod
    def reject(cls, reason: str, detail: Optional[str] = None) -> "AdmissionDecision":
        return cls(admitted=False, reason=reason, detail=detail)


class BeamUtilization(BaseModel):
    beam_id: str
    gbr_fwd: float
    gbr_rtn: float
    mbr_fwd: float
    mbr_rtn: float


class HostUtilization(BaseModel):
    host_id: str
    cpu: float
    mem: float


class UtilizationReport(BaseModel):
    """Fractions in [0, 1]; zero-capacity resources report 0"""
    beams: List[BeamUtilization] = Field(default_factory=list)
    hosts: List[HostUtilization] = Field(default_factory=list)
