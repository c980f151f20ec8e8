"""
Pydantic models for slice classifier rules and stitch points
"""

from ipaddress import ip_address, ip_network
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, PrivateAttr, field_validator, model_validator

from app.models.enums import Mark

DEFAULT_SLICE = "default"


class Snssai(BaseModel):
    """S-NSSAI: slice/service type byte plus optional 24-bit differentiator"""
    sst: int = Field(..., ge=0, le=255)
    sd: Optional[int] = Field(None, ge=0, le=0xFFFFFF)


def _check_prefix(v: Optional[str]) -> Optional[str]:
    if v is None:
        return v
    return str(ip_network(v, strict=False))


class MatchSpec(BaseModel):
    """Flow match; absent fields are wildcards"""
    snssai: Optional[Snssai] = None
    qfi: Optional[int] = Field(None, ge=0, le=63)
    dscp: Optional[int] = Field(None, ge=0, le=63)
    src_prefix: Optional[str] = None
    dst_prefix: Optional[str] = None

    @field_validator("src_prefix", "dst_prefix")
    @classmethod
    def validate_prefix(cls, v):
        return _check_prefix(v)

    @model_validator(mode="after")
    def validate_not_empty(self):
        if all(getattr(self, name) is None for name in ("snssai", "qfi", "dscp", "src_prefix", "dst_prefix")):
            raise ValueError("a match needs at least one field")
        return self

    def prefix_bits(self) -> int:
        bits = 0
        for prefix in (self.src_prefix, self.dst_prefix):
            if prefix is not None:
                bits += ip_network(prefix).prefixlen
        return bits


class RuleAction(BaseModel):
    slice_id: str
    mark: Mark = Mark.TO_SATELLITE


class ClassifierRule(BaseModel):
    rule_id: int
    priority: int = Field(..., description="Lower wins")
    match: MatchSpec
    action: RuleAction


class FlowMetadata(BaseModel):
    """What a classifier sees of a flow at a stitch point"""
    snssai: Optional[Snssai] = None
    qfi: Optional[int] = Field(None, ge=0, le=63)
    dscp: Optional[int] = Field(None, ge=0, le=63)
    src: str = "0.0.0.0"
    dst: str = "0.0.0.0"

    @field_validator("src", "dst")
    @classmethod
    def validate_address(cls, v):
        return str(ip_address(v))


class RuleTable(BaseModel):
    """Immutable snapshot: rules sorted by (priority, rule_id) plus the default action"""
    rules: List[ClassifierRule] = Field(default_factory=list)
    default: RuleAction = Field(default_factory=lambda: RuleAction(slice_id=DEFAULT_SLICE))

    _index: Optional[dict] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def validate_order(self):
        ids = [r.rule_id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ValueError("rule ids must be unique within a table")
        self.rules = sorted(self.rules, key=lambda r: (r.priority, r.rule_id))
        return self

    def export(self) -> Dict:
        """Inspection document {rules: [{id, priority, match, slice, mark}], default}"""
        return {
            "rules": [
                {
                    "id": r.rule_id,
                    "priority": r.priority,
                    "match": r.match.model_dump(exclude_none=True),
                    "slice": r.action.slice_id,
                    "mark": r.action.mark.value,
                }
                for r in self.rules
            ],
            "default": self.default.slice_id,
        }


class StitchTopology(BaseModel):
    """Names of the four subnet boundary locations"""
    ran_edge: str = "ran-edge"
    cn_edge: str = "cn-edge"
    terminal_edge: str = "terminal-edge"
    hub_edge: str = "hub-edge"


class StitchPoint(BaseModel):
    location: str
    direction: Mark

    def key(self) -> str:
        return f"{self.location}/{self.direction.value}"
