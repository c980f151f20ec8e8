"""
Slice lifecycle state machine, profile validation and tenant permission policy
"""

import time
from ipaddress import ip_network
from typing import Dict, FrozenSet, Optional, Tuple

from app.core.errors import IllegalTransition
from app.models.enums import LifecycleEvent as Ev
from app.models.enums import LifecycleState as St
from app.models.enums import SliceMode, TenantControl
from app.models.slice import (
    SliceInstance,
    SliceProfile,
    StandaloneIngress,
    StitchingInfo,
    ValidationResult,
    Violation,
)

ABSORBING_STATES = frozenset({St.TERMINATED, St.FAILED})

TRANSITIONS: Dict[Tuple[St, Ev], St] = {
    (St.PENDING, Ev.PREPARE): St.PREPARING,
    (St.PREPARING, Ev.INSTANTIATE): St.INSTANTIATING,
    (St.INSTANTIATING, Ev.ACTIVATE_DONE): St.ACTIVE,
    (St.ACTIVE, Ev.MODIFY): St.MODIFYING,
    (St.MODIFYING, Ev.MODIFY_DONE): St.ACTIVE,
    (St.ACTIVE, Ev.DEACTIVATE): St.DEACTIVATED,
    (St.DEACTIVATED, Ev.REACTIVATE): St.ACTIVE,
    (St.ACTIVE, Ev.TERMINATE): St.TERMINATING,
    (St.DEACTIVATED, Ev.TERMINATE): St.TERMINATING,
    (St.TERMINATING, Ev.TERMINATE_DONE): St.TERMINATED,
}
# any non-absorbing state may fail
for _state in St:
    if _state not in ABSORBING_STATES:
        TRANSITIONS[(_state, Ev.FAIL)] = St.FAILED


def next_state(state: St, event: Ev) -> Optional[St]:
    return TRANSITIONS.get((state, event))


def transition(instance: SliceInstance, event: Ev, now: Optional[float] = None) -> SliceInstance:
    """
    Apply a lifecycle event.

    Returns a new instance; the input is left untouched.

    Raises:
        IllegalTransition: the (state, event) pair is not in the table
    """
    target = next_state(instance.state, event)
    if target is None:
        raise IllegalTransition(instance.state, event)
    return instance.model_copy(
        update={"state": target, "updated_at": time.monotonic() if now is None else now}
    )


# ============================================================================
# Tenant permissions
# ============================================================================

_MANAGED_OPS = frozenset({"create", "delete", "status"})
_SHARED_OPS = _MANAGED_OPS | {"modify", "scenario-run"}
_FULL_OPS = _SHARED_OPS | {"catalog-edit", "pool-inspect"}

_PERMISSIONS: Dict[TenantControl, FrozenSet[str]] = {
    TenantControl.MANAGED: _MANAGED_OPS,
    TenantControl.SHARED_CONTROL: _SHARED_OPS,
    TenantControl.FULL_CONTROL: _FULL_OPS,
}


def allowed_operations(level: TenantControl) -> FrozenSet[str]:
    return _PERMISSIONS[TenantControl(level)]


# ============================================================================
# Validation
# ============================================================================

def validate_profile(profile: SliceProfile) -> ValidationResult:
    """Collect every violated profile invariant; never raises"""
    violations = []

    def add(code, field, message):
        violations.append(Violation(code=code, field=field, message=message))

    qos = profile.qos
    if not profile.slice_id.strip():
        add("EMPTY_SLICE_ID", "slice_id", "slice_id must be non-empty")
    if not profile.coverage_beams:
        add("NO_BEAMS", "coverage_beams", "at least one beam is required")
    elif len(set(profile.coverage_beams)) != len(profile.coverage_beams):
        add("DUPLICATE_BEAM", "coverage_beams", "beam ids must not repeat")

    rates = {
        "qos.gbr_mbps": qos.gbr_mbps,
        "qos.mbr_mbps": qos.mbr_mbps,
        "qos.rtn_gbr_mbps": qos.rtn_gbr_mbps,
        "qos.rtn_mbr_mbps": qos.rtn_mbr_mbps,
    }
    for field, value in rates.items():
        if value is not None and value < 0:
            add("NEGATIVE_RATE", field, f"{field} must be non-negative")
    if qos.mbr_mbps < qos.gbr_mbps:
        add("MBR_LT_GBR", "qos.mbr_mbps", f"mbr {qos.mbr_mbps} is below gbr {qos.gbr_mbps}")
    if (
        qos.rtn_gbr_mbps is not None
        and qos.rtn_mbr_mbps is not None
        and qos.rtn_mbr_mbps < qos.rtn_gbr_mbps
    ):
        add("RTN_MBR_LT_GBR", "qos.rtn_mbr_mbps", "return-link mbr is below return-link gbr")
    if qos.pdb_ms <= 0:
        add("PDB_NONPOSITIVE", "qos.pdb_ms", "packet delay budget must be positive")

    return ValidationResult(violations=violations)


def validate_nssi_request(profile: SliceProfile, e2e_slice_ref: str, stitching: StitchingInfo) -> ValidationResult:
    result = validate_profile(profile)
    extra = []
    if profile.mode != SliceMode.INTEGRATED:
        extra.append(Violation(code="MODE_MISMATCH", field="profile.mode", message="allocate NSSI needs mode Integrated"))
    if not e2e_slice_ref.strip():
        extra.append(Violation(code="NO_E2E_REF", field="e2e_slice_ref", message="end-to-end slice reference is required"))
    if stitching.snssai is None:
        extra.append(Violation(code="NO_SNSSAI", field="stitching.snssai", message="S-NSSAI is required for stitching"))
    return ValidationResult(violations=result.violations + extra)


def validate_standalone_request(profile: SliceProfile, ingress: StandaloneIngress) -> ValidationResult:
    result = validate_profile(profile)
    extra = []
    if profile.mode != SliceMode.STANDALONE:
        extra.append(Violation(code="MODE_MISMATCH", field="profile.mode", message="standalone slices need mode Standalone"))
    usable = [p for p in ingress.prefixes if p.src_prefix or p.dst_prefix]
    if not usable:
        extra.append(Violation(code="NO_PREFIXES", field="ingress.prefixes", message="at least one prefix pair is required"))
    for i, pair in enumerate(ingress.prefixes):
        for name in ("src_prefix", "dst_prefix"):
            value = getattr(pair, name)
            if value is None:
                continue
            try:
                ip_network(value, strict=False)
            except ValueError:
                extra.append(Violation(code="BAD_PREFIX", field=f"ingress.prefixes[{i}].{name}", message=f"{value!r} is not a prefix"))
    return ValidationResult(violations=result.violations + extra)
