"""
Pydantic models for emulation results
"""

from datetime import datetime
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from app.models.enums import LinkDirection, ScenarioStatus


class LaneMetrics(BaseModel):
    """Offered/carried load of one slice on one beam link"""
    offered_mbps: float = 0.0
    carried_mbps: float = 0.0
    gbr_mbps: float = 0.0


class SliceMetrics(BaseModel):
    """Per-slice outcome of a scenario run"""
    offered_mbps: float = 0.0
    carried_mbps: float = 0.0
    mean_delay_ms: float = 0.0
    p99_delay_ms: float = 0.0
    loss_ratio: float = Field(0.0, ge=0, le=1)
    packets_in: int = 0
    packets_carried: int = 0
    packets_dropped: int = 0
    packets_in_flight: int = 0
    lanes: Dict[str, LaneMetrics] = Field(default_factory=dict, description="Keyed 'beam_id/direction'")


class BeamSeries(BaseModel):
    """Busy fraction of one beam link per sampling interval"""
    beam_id: str
    direction: LinkDirection
    times_s: List[float] = Field(default_factory=list, description="Interval start times")
    utilization: List[float] = Field(default_factory=list)


class MetricsReport(BaseModel):
    duration_s: float
    seed: int
    slices: Dict[str, SliceMetrics] = Field(default_factory=dict)
    beams: List[BeamSeries] = Field(default_factory=list)


class IsolationVerdict(BaseModel):
    slice_id: str
    passed: bool
    offered_mbps: float
    carried_mbps: float
    required_mbps: float = Field(..., description="min(offered, gbr) * (1 - tolerance)")
    tolerance: float


class ScenarioResponse(BaseModel):
    """Response when a scenario run is queued"""
    scenario_id: str = Field(..., description="Unique scenario run identifier")
    status: ScenarioStatus = Field(..., description="Current run status")
    created_at: datetime = Field(..., description="Submission timestamp")
    message: str = Field(default="Scenario queued successfully")


class ScenarioResult(BaseModel):
    """Polling view of a scenario run"""
    scenario_id: str
    status: ScenarioStatus
    created_at: datetime
    completed_at: Optional[datetime] = None
    report: Optional[MetricsReport] = None
    verdicts: List[IsolationVerdict] = Field(default_factory=list)
    error: Optional[str] = None

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)
