"""
Pydantic models for emulation scenario inputs
"""

from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from app.models.classifier import FlowMetadata
from app.models.enums import LinkDirection, Mark, TrafficPattern


class TrafficSpec(BaseModel):
    """One traffic flow offered to the emulated network"""
    flow_id: str = Field("", description="Label used in logs; defaults to the flow index")
    meta: FlowMetadata = Field(default_factory=FlowMetadata, description="Slice-targeting metadata")
    beam_id: str
    direction: LinkDirection = LinkDirection.FORWARD
    location: str = Field("hub-edge", description="Ingress stitch point location")
    mark: Mark = Field(Mark.TO_SATELLITE, description="Which classifier at the location sees the flow")
    rate_mbps: float = Field(..., ge=0)
    packet_size_bytes: Optional[int] = Field(None, gt=0, le=1500, description="Defaults to the emulator's configured size")
    pattern: TrafficPattern = TrafficPattern.CBR
    start_s: float = Field(0.0, ge=0)
    stop_s: float

    @model_validator(mode="after")
    def validate_window(self):
        if self.stop_s <= self.start_s:
            raise ValueError("stop_s must be greater than start_s")
        return self


class ScenarioSpec(BaseModel):
    """Scenario file: {duration_s, seed, flows}"""
    duration_s: float = Field(..., gt=0)
    seed: int = Field(42, ge=0, lt=2 ** 64)
    flows: List[TrafficSpec] = Field(default_factory=list)
