"""
Pydantic models for slice requirements and live slice instances
"""

from typing import List, Optional

from pydantic import BaseModel, Field

from app.models.catalog import NfChain
from app.models.classifier import ClassifierRule, Snssai
from app.models.enums import (
    Isolation,
    LifecycleState,
    OrbitPreference,
    ServiceClass,
    SliceMode,
    TenantControl,
)
from app.models.pool import Allocation
from app.models.qos import SatQosClass


class FiveGQos(BaseModel):
    """5G QoS characteristics of a slice (rates in Mbit/s, delays in ms)"""
    gbr_mbps: float = Field(..., description="Guaranteed bit rate")
    mbr_mbps: float = Field(..., description="Maximum bit rate")
    pdb_ms: float = Field(..., description="Packet delay budget")
    per: float = Field(1e-6, description="Packet error rate target", gt=0, le=1)
    priority: int = Field(50, description="Lower = more important", ge=1, le=127)
    rtn_gbr_mbps: Optional[float] = Field(None, description="Return-link GBR; defaults to a ratio of gbr")
    rtn_mbr_mbps: Optional[float] = Field(None, description="Return-link MBR; defaults to a ratio of mbr")


class SliceProfile(BaseModel):
    """Tenant-facing slice requirements"""
    slice_id: str
    mode: SliceMode
    service_class: ServiceClass
    qos: FiveGQos
    isolation: Isolation = Isolation.SOFT
    tenant_control: TenantControl = TenantControl.MANAGED
    orbit_preference: OrbitPreference = OrbitPreference.ANY
    coverage_beams: List[str] = Field(default_factory=list, description="Beam ids, order kept for reason reporting")
    notes: str = ""


class StitchingInfo(BaseModel):
    """Integrated-mode identifiers used to stitch the satellite subnet to RAN and CN"""
    ran_edge_ids: List[str] = Field(default_factory=list)
    cn_edge_ids: List[str] = Field(default_factory=list)
    snssai: Optional[Snssai] = None
    qfi: List[int] = Field(default_factory=list, description="QFI set")


class PrefixPair(BaseModel):
    src_prefix: Optional[str] = None
    dst_prefix: Optional[str] = None


class StandaloneIngress(BaseModel):
    """Standalone-mode ingress descriptor for the terminal and hub edges"""
    prefixes: List[PrefixPair] = Field(default_factory=list)
    dscp: Optional[int] = Field(None, ge=0, le=63)


class SliceInstance(BaseModel):
    """A live slice and everything the orchestrator holds for it"""
    profile: SliceProfile
    state: LifecycleState = LifecycleState.PENDING
    allocation: Optional[Allocation] = None
    chain: Optional[NfChain] = None
    rules: List[ClassifierRule] = Field(default_factory=list)
    sat_qos: Optional[SatQosClass] = None
    created_at: float
    updated_at: float
    creation_index: int = Field(0, description="Order of creation, drives rule_id assignment")
    failure_reason: Optional[str] = None
    tenant: Optional[str] = None
    e2e_slice_ref: Optional[str] = None
    stitching: Optional[StitchingInfo] = None
    ingress: Optional[StandaloneIngress] = None

    @property
    def slice_id(self) -> str:
        return self.profile.slice_id


class Violation(BaseModel):
    code: str
    field: str
    message: str


class ValidationResult(BaseModel):
    violations: List[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> List[str]:
        return [v.code for v in self.violations]
