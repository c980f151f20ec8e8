"""
Pydantic models for the satellite-side QoS view of a slice
"""

from pydantic import BaseModel, Field

from app.models.enums import Orbit, SatQosClassId


class SatQosClass(BaseModel):
    """Satellite service class a slice is scheduled under"""
    class_id: SatQosClassId
    scheduler_weight: int = Field(..., description="Share of residual capacity", gt=0)
    drop_precedence: int = Field(..., description="0 = dropped last", ge=0, le=2)


class LatencyBudget(BaseModel):
    """Packet delay budget split; slack = pdb - (propagation + chain + scheduling)"""
    pdb_ms: float
    propagation_ms: float
    chain_ms: float
    scheduling_ms: float
    slack_ms: float
    orbit: Orbit
    feasible: bool = Field(..., description="True when slack_ms >= 0")
