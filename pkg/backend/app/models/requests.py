"""
Pydantic models for the management API: requests, responses, events, subscriptions
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, HttpUrl, model_validator

from app.models.catalog import NfChain
from app.models.enums import EventKind, LifecycleState
from app.models.pool import Allocation, ResourcePool, UtilizationReport
from app.models.qos import SatQosClass
from app.models.slice import SliceInstance, SliceProfile, StandaloneIngress, StitchingInfo


class NssiRequest(BaseModel):
    """Allocate-NSSI request from the 5G slice management system (Integrated mode)"""
    profile: SliceProfile
    e2e_slice_ref: str = ""
    stitching: StitchingInfo = Field(default_factory=StitchingInfo)


class StandaloneRequest(BaseModel):
    """Pure satellite slice request"""
    profile: SliceProfile
    ingress: StandaloneIngress = Field(default_factory=StandaloneIngress)


class QosDelta(BaseModel):
    """Partial FiveGQos for modify; omitted fields keep their value"""
    gbr_mbps: Optional[float] = None
    mbr_mbps: Optional[float] = None
    pdb_ms: Optional[float] = None
    per: Optional[float] = Field(None, gt=0, le=1)
    priority: Optional[int] = Field(None, ge=1, le=127)
    rtn_gbr_mbps: Optional[float] = None
    rtn_mbr_mbps: Optional[float] = None

    @model_validator(mode="after")
    def validate_not_empty(self):
        if not self.model_dump(exclude_none=True):
            raise ValueError("modify needs at least one QoS field")
        return self


class SliceEvent(BaseModel):
    """Lifecycle notification; StateChanged carries both states"""
    seq: int = 0
    slice_id: str
    kind: EventKind
    old_state: Optional[LifecycleState] = None
    new_state: Optional[LifecycleState] = None
    timestamp: float
    detail: Optional[str] = None

    @model_validator(mode="after")
    def validate_states(self):
        if self.kind == EventKind.STATE_CHANGED and (self.old_state is None or self.new_state is None):
            raise ValueError("StateChanged events carry old and new state")
        return self


class ErrorResponse(BaseModel):
    code: str
    reason: str
    stage: Optional[str] = None


class SliceStateResponse(BaseModel):
    """Outcome of a create / modify / delete call"""
    slice_id: str
    state: LifecycleState
    failure_reason: Optional[str] = None
    service_endpoint: Optional[StandaloneIngress] = Field(None, description="Ingress descriptor of standalone slices")


class SliceSummary(BaseModel):
    slice_id: str
    mode: str
    service_class: str
    state: LifecycleState
    tenant: Optional[str] = None
    gbr_mbps: float
    mbr_mbps: float
    beams: List[str] = Field(default_factory=list)

    @classmethod
    def from_instance(cls, instance: SliceInstance) -> "SliceSummary":
        profile = instance.profile
        return cls(
            slice_id=profile.slice_id,
            mode=profile.mode.value,
            service_class=profile.service_class.value,
            state=instance.state,
            tenant=instance.tenant,
            gbr_mbps=profile.qos.gbr_mbps,
            mbr_mbps=profile.qos.mbr_mbps,
            beams=list(profile.coverage_beams),
        )


class SliceDetail(BaseModel):
    """Full per-slice record: state, allocation, chain and rules"""
    instance: SliceInstance
    allocation: Optional[Allocation] = None
    chain: Optional[NfChain] = None
    sat_qos: Optional[SatQosClass] = None
    rules: List[Dict[str, Any]] = Field(default_factory=list)


class SubscriptionRequest(BaseModel):
    """Webhook (url) or log sink subscriber"""
    kind: str = Field("webhook", pattern="^(webhook|log)$")
    url: Optional[HttpUrl] = None
    slice_id: Optional[str] = Field(None, description="Only events of this slice; all when omitted")

    @model_validator(mode="after")
    def validate_target(self):
        if self.kind == "webhook" and self.url is None:
            raise ValueError("webhook subscriptions need a url")
        return self


class Subscription(SubscriptionRequest):
    subscription_id: str
    owner: Optional[str] = Field(None, description="Tenant that registered the subscriber")


class PoolView(BaseModel):
    pool: ResourcePool
    utilization: UtilizationReport
