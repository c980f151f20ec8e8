"""
Pydantic models for network function descriptors and per-slice gateway chains
"""

from typing import Dict, List

from pydantic import BaseModel, Field, field_validator


class NfDescriptor(BaseModel):
    """Catalog entry for one network function of the satellite gateway"""
    nf_id: str = Field(..., min_length=1)
    stage: int = Field(..., description="Ingress-to-egress position", ge=0, le=9)
    provides: List[str] = Field(..., description="Capability tags")
    cpu_units: int = Field(..., ge=0, validation_alias="cpu", serialization_alias="cpu")
    mem_mb: int = Field(..., ge=0, validation_alias="mem", serialization_alias="mem")
    latency_ms: float = Field(..., description="Per-packet processing time", ge=0)
    cost: int = Field(..., gt=0)

    model_config = {"populate_by_name": True}

    @field_validator("provides")
    @classmethod
    def validate_provides(cls, v):
        if not v:
            raise ValueError("provides must name at least one capability")
        return sorted(set(v))


class NfChain(BaseModel):
    """Ordered gateway composition, ingress first"""
    members: List[NfDescriptor] = Field(default_factory=list)

    @property
    def nf_ids(self) -> List[str]:
        return [nf.nf_id for nf in self.members]

    @property
    def latency_ms(self) -> float:
        return sum(nf.latency_ms for nf in self.members)

    @property
    def total_cost(self) -> int:
        return sum(nf.cost for nf in self.members)

    def capabilities(self) -> set:
        provided = set()
        for nf in self.members:
            provided.update(nf.provides)
        return provided


class Placement(BaseModel):
    """nf_id -> host_id"""
    hosts: Dict[str, str] = Field(default_factory=dict)
