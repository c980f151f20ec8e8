"""
Slice management service: the single writer behind the northbound API.

Every mutation runs under one lock against working copies of the pool and the
classifier tables; the copies are published only when the whole pipeline
succeeded, so a failed request leaves capacity untouched. Events produced by a
request are persisted and published together with its final instance record.
"""

import logging
import threading
import time
import uuid
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path
from typing import Callable, Deque, Dict, List, Optional, Sequence

from app.core.errors import (
    AdmissionRace,
    ConflictingRules,
    InconsistentState,
    InsufficientCompute,
    S3Error,
    Uncoverable,
    UnknownBeam,
)
from app.core.logging_utils import log_operation_error, log_operation_start, log_operation_success
from app.core.service_config import ServiceConfig
from app.models.catalog import NfDescriptor
from app.models.classifier import ClassifierRule, RuleTable
from app.models.enums import EventKind, LifecycleEvent, LifecycleState, ScenarioStatus, TenantControl
from app.models.pool import ResourcePool
from app.models.requests import (
    ErrorResponse,
    NssiRequest,
    PoolView,
    QosDelta,
    SliceDetail,
    SliceEvent,
    SliceStateResponse,
    SliceSummary,
    StandaloneRequest,
    Subscription,
    SubscriptionRequest,
)
from app.models.results import ScenarioResponse, ScenarioResult
from app.models.scenario import ScenarioSpec
from app.models.slice import SliceInstance, SliceProfile, ValidationResult, Violation
from app.services.emulator import EmulatedNetwork, build_network, run_scenario, validate_flows, verify_isolation
from app.services.event_log import EventLog, RecoveredState
from app.services.gateway_composer import compose_chain, required_capabilities
from app.services.lifecycle import (
    ABSORBING_STATES,
    allowed_operations,
    transition,
    validate_nssi_request,
    validate_profile,
    validate_standalone_request,
)
from app.services.notifier import Notifier
from app.services.qos_mapper import map_qos
from app.services.resource_pool import allocate, check_admission, release, restore, utilization
from app.services.slice_classifier import compile_stitch_tables

logger = logging.getLogger(__name__)

_CONTROL_RANK = {
    TenantControl.MANAGED: 0,
    TenantControl.SHARED_CONTROL: 1,
    TenantControl.FULL_CONTROL: 2,
}

# domain error -> HTTP status when raised inside a pipeline stage
_STATUS_BY_ERROR = {
    Uncoverable: 422,
    InsufficientCompute: 422,
    AdmissionRace: 422,
    ConflictingRules: 409,
    UnknownBeam: 400,
}


class ApiError(Exception):
    """Error surfaced to API clients as {code, reason, stage}"""

    def __init__(self, status_code: int, code: str, reason: str, stage: Optional[str] = None):
        super().__init__(reason)
        self.status_code = status_code
        self.code = code
        self.reason = reason
        self.stage = stage

    def to_response(self) -> ErrorResponse:
        return ErrorResponse(code=self.code, reason=self.reason, stage=self.stage)


def _as_api_error(error: Exception, stage: str) -> ApiError:
    if isinstance(error, ApiError):
        return error
    for error_type, status in _STATUS_BY_ERROR.items():
        if isinstance(error, error_type):
            return ApiError(status, error.code, str(error), stage)
    if isinstance(error, S3Error):
        return ApiError(500, error.code, str(error), stage)
    logger.exception("unexpected error in stage %s", stage)
    return ApiError(500, "INTERNAL", f"{type(error).__name__}: {error}", stage)


def _validation_error(result: ValidationResult) -> ApiError:
    reason = "; ".join(f"{v.field}: {v.message}" for v in result.violations)
    return ApiError(400, result.violations[0].code, reason, "validate")


class SliceManagementService:
    """
    Orchestrates validate -> map_qos -> compose -> admission -> allocate -> classify
    for both slice modes, and owns inventory, pool, tables, events and scenario runs.

    Args:
        config: service configuration (pool inventory, catalog, QoS map, tenants)
        data_dir: event log / snapshot directory; None keeps everything in memory
        snapshot_interval: log records between snapshots
        event_history: events kept for GET /events
        scenario_workers: parallel scenario runs
        notifier: event delivery; a default one is created when omitted
        clock: wall clock source for timestamps
    """

    def __init__(
        self,
        config: ServiceConfig,
        data_dir: Optional[Path] = None,
        snapshot_interval: int = 50,
        event_history: int = 1000,
        scenario_workers: int = 2,
        notifier: Optional[Notifier] = None,
        clock: Callable[[], float] = time.time,
    ):
        self.config = config.model_copy(deep=True)
        self.notifier = notifier or Notifier()
        self._clock = clock
        self._lock = threading.RLock()
        self._instances: Dict[str, SliceInstance] = {}
        self._pool = self.config.build_pool()
        self._tables: Dict[str, RuleTable] = compile_stitch_tables([], self.config.topology)
        self._events: Deque[SliceEvent] = deque(maxlen=max(1, event_history))
        self._event_seq = 0
        self._next_index = 0
        self._last_time = 0.0
        self._scenarios: Dict[str, ScenarioResult] = {}
        self._executor = ThreadPoolExecutor(max_workers=max(1, scenario_workers), thread_name_prefix="s3-scenario")
        self._log = EventLog(data_dir, snapshot_interval) if data_dir is not None else None
        if self._log is not None:
            self._recover()

    # ========================================================================
    # Recovery / shutdown
    # ========================================================================

    def _recover(self) -> None:
        state = self._log.recover(self._events.maxlen)
        if state.catalog is not None:
            self.config.nf_catalog = state.catalog

        instances = dict(state.instances)
        fresh = self.config.build_pool()
        allocations = []
        for slice_id in sorted(instances):
            allocation = instances[slice_id].allocation
            if allocation is None:
                continue
            for beam_id in allocation.beams:
                if fresh.beam(beam_id) is None:
                    raise InconsistentState(slice_id, f"allocation names beam {beam_id!r} missing from the config")
            for host_id in allocation.hosts:
                if fresh.host(host_id) is None:
                    raise InconsistentState(slice_id, f"allocation names host {host_id!r} missing from the config")
            allocations.append(allocation)

        self._instances = instances
        self._pool = restore(allocations, fresh)
        self._tables = compile_stitch_tables(list(instances.values()), self.config.topology)
        self._refresh_rules()
        self._events.extend(state.events)
        self._event_seq = max((e.seq for e in state.events), default=0)
        self._next_index = max((i.creation_index for i in instances.values()), default=-1) + 1
        self._last_time = max(
            [i.updated_at for i in instances.values()] + [e.timestamp for e in state.events] + [0.0]
        )

    def shutdown(self) -> None:
        """Finish scenario runs, write a final snapshot, stop delivery"""
        self._executor.shutdown(wait=True)
        with self._lock:
            if self._log is not None:
                self._log.write_snapshot(self._state())
        self.notifier.flush()
        self.notifier.close()

    def _state(self) -> RecoveredState:
        return RecoveredState(
            instances=dict(self._instances),
            catalog=list(self.config.nf_catalog),
            events=list(self._events),
        )

    # ========================================================================
    # Helpers
    # ========================================================================

    def _tick(self) -> float:
        """Strictly increasing wall-clock timestamp, also across restarts"""
        now = max(self._clock(), self._last_time + 1e-6)
        self._last_time = now
        return now

    def _authorize(self, tenant: Optional[str], operation: str) -> str:
        name = tenant or self.config.default_tenant
        level = self.config.tenants.get(name)
        if level is None:
            raise ApiError(403, "UNKNOWN_TENANT", f"tenant {name!r} is not configured", "authorize")
        if operation not in allowed_operations(level):
            raise ApiError(403, "FORBIDDEN", f"{level.value} tenants may not {operation}", "authorize")
        return name

    def _visible(self, instance: SliceInstance, tenant: str) -> bool:
        return self.config.tenants[tenant] == TenantControl.FULL_CONTROL or instance.tenant == tenant

    def _lookup(self, slice_id: str, tenant: str) -> SliceInstance:
        instance = self._instances.get(slice_id)
        if instance is None or not self._visible(instance, tenant):
            raise ApiError(404, "NOT_FOUND", f"slice {slice_id!r} not found", "lookup")
        return instance

    def _step(self, instance: SliceInstance, event: LifecycleEvent, events: List[SliceEvent]) -> SliceInstance:
        now = self._tick()
        updated = transition(instance, event, now)
        events.append(SliceEvent(
            slice_id=instance.slice_id,
            kind=EventKind.STATE_CHANGED,
            old_state=instance.state,
            new_state=updated.state,
            timestamp=now,
            detail=event.value,
        ))
        return updated

    def _event(self, slice_id: str, kind: EventKind, state: Optional[LifecycleState] = None,
               detail: Optional[str] = None) -> SliceEvent:
        return SliceEvent(slice_id=slice_id, kind=kind, new_state=state, timestamp=self._tick(), detail=detail)

    def _compile_with(self, instance: SliceInstance) -> Dict[str, RuleTable]:
        others = [i for sid, i in self._instances.items() if sid != instance.slice_id]
        return compile_stitch_tables(others + [instance], self.config.topology)

    @staticmethod
    def _rules_for(slice_id: str, tables: Dict[str, RuleTable]) -> List[ClassifierRule]:
        return [r for key in sorted(tables) for r in tables[key].rules if r.action.slice_id == slice_id]

    def _refresh_rules(self) -> None:
        for slice_id, instance in list(self._instances.items()):
            rules = self._rules_for(slice_id, self._tables)
            if rules != instance.rules:
                self._instances[slice_id] = instance.model_copy(update={"rules": rules})

    def _publish(self, events: Sequence[SliceEvent]) -> None:
        """Number, persist, keep and hand out events"""
        for event in events:
            self._event_seq += 1
            numbered = event.model_copy(update={"seq": self._event_seq})
            if self._log is not None:
                self._log.append_event(numbered)
            self._events.append(numbered)
            self.notifier.publish(numbered)

    def _commit(
        self,
        instance: SliceInstance,
        events: Sequence[SliceEvent],
        pool: Optional[ResourcePool] = None,
        tables: Optional[Dict[str, RuleTable]] = None,
    ) -> SliceInstance:
        """Log the instance first; live state changes only once the record is durable"""
        tables = self._tables if tables is None else tables
        stored = instance.model_copy(update={"rules": self._rules_for(instance.slice_id, tables)})
        if self._log is not None:
            self._log.append_instance(stored)
        self._instances[instance.slice_id] = stored
        if pool is not None:
            self._pool = pool
        self._tables = tables
        self._refresh_rules()
        self._publish(events)
        self._maybe_snapshot()
        return stored

    def _maybe_snapshot(self) -> None:
        if self._log is not None and self._log.snapshot_due():
            self._log.write_snapshot(self._state())

    @staticmethod
    def _response(instance: SliceInstance) -> SliceStateResponse:
        return SliceStateResponse(
            slice_id=instance.slice_id,
            state=instance.state,
            failure_reason=instance.failure_reason,
            service_endpoint=instance.ingress,
        )

    # ========================================================================
    # Creation pipeline
    # ========================================================================

    def allocate_nssi(self, request: NssiRequest, tenant: Optional[str] = None) -> SliceStateResponse:
        """Allocate-NSSI for an Integrated slice"""
        validation = validate_nssi_request(request.profile, request.e2e_slice_ref, request.stitching)
        return self._create(
            request.profile,
            tenant,
            validation,
            {"e2e_slice_ref": request.e2e_slice_ref, "stitching": request.stitching},
            "allocate_nssi",
        )

    def create_slice(self, request: StandaloneRequest, tenant: Optional[str] = None) -> SliceStateResponse:
        """Create a pure satellite (Standalone) slice"""
        validation = validate_standalone_request(request.profile, request.ingress)
        return self._create(request.profile, tenant, validation, {"ingress": request.ingress}, "create_slice")

    def _create(
        self,
        profile: SliceProfile,
        tenant: Optional[str],
        validation: ValidationResult,
        extras: Dict,
        operation: str,
    ) -> SliceStateResponse:
        log_operation_start(logger, operation, slice_id=profile.slice_id, tenant=tenant)
        with self._lock:
            try:
                tenant = self._authorize(tenant, "create")
                level = self.config.tenants[tenant]
                if _CONTROL_RANK[profile.tenant_control] > _CONTROL_RANK[level]:
                    raise ApiError(
                        403, "CONTROL_LEVEL",
                        f"tenant {tenant!r} ({level.value}) cannot request {profile.tenant_control.value}",
                        "authorize",
                    )
                unknown = [
                    Violation(code="UNKNOWN_BEAM", field="profile.coverage_beams", message=f"beam {b!r} is not part of the pool")
                    for b in profile.coverage_beams if self._pool.beam(b) is None
                ]
                validation = ValidationResult(violations=validation.violations + unknown)
                if not validation.ok:
                    raise _validation_error(validation)
                existing = self._instances.get(profile.slice_id)
                if existing is not None and existing.state not in ABSORBING_STATES:
                    raise ApiError(409, "DUPLICATE", f"slice {profile.slice_id!r} already exists", "validate")
            except ApiError as e:
                log_operation_error(logger, operation, e, slice_id=profile.slice_id, stage=e.stage)
                raise

            now = self._tick()
            instance = SliceInstance(
                profile=profile,
                created_at=now,
                updated_at=now,
                creation_index=self._next_index,
                tenant=tenant,
                **extras,
            )
            self._next_index += 1
            events = [SliceEvent(
                slice_id=profile.slice_id, kind=EventKind.CREATED,
                new_state=LifecycleState.PENDING, timestamp=now,
            )]

            stage = "map_qos"
            try:
                instance = self._step(instance, LifecycleEvent.PREPARE, events)
                sat_qos = map_qos(profile.qos, profile.service_class, self.config.qos_map)
                stage = "compose"
                chain = compose_chain(required_capabilities(profile, self.config.qos_map), self.config.nf_catalog)
                instance = self._step(instance, LifecycleEvent.INSTANTIATE, events)
                stage = "admission"
                decision = check_admission(profile, self._pool, chain, self.config)
                if not decision.admitted:
                    logger.info("admission rejected slice=%s reason=%s", profile.slice_id, decision.reason)
                    raise ApiError(422, decision.reason, decision.detail or decision.reason, stage)
                stage = "allocate"
                allocation, pool = allocate(profile, self._pool, chain, self.config)
                instance = instance.model_copy(update={"allocation": allocation, "chain": chain, "sat_qos": sat_qos})
                stage = "classify"
                tables = self._compile_with(instance)
                instance = self._step(instance, LifecycleEvent.ACTIVATE_DONE, events)
            except Exception as e:
                error = _as_api_error(e, stage)
                failed = instance.model_copy(update={"allocation": None, "failure_reason": f"{stage}:{error.code}"})
                failed = self._step(failed, LifecycleEvent.FAIL, events)
                self._commit(failed, events)
                log_operation_error(logger, operation, error, slice_id=profile.slice_id, stage=stage)
                raise error

            stored = self._commit(instance, events, pool, tables)

        log_operation_success(logger, operation, slice_id=profile.slice_id, chain=",".join(stored.chain.nf_ids))
        return self._response(stored)

    # ========================================================================
    # Modify / deactivate / reactivate / deallocate
    # ========================================================================

    def modify_nssi(self, slice_id: str, delta: QosDelta, tenant: Optional[str] = None) -> SliceStateResponse:
        """
        Re-admit an Active slice with changed QoS. The old reservation is released
        on the working pool only, so a reject leaves the slice exactly as it was.
        """
        operation = "modify_nssi"
        log_operation_start(logger, operation, slice_id=slice_id, tenant=tenant)
        with self._lock:
            try:
                tenant = self._authorize(tenant, "modify")
                current = self._lookup(slice_id, tenant)
                if current.state != LifecycleState.ACTIVE:
                    raise ApiError(409, "NOT_ACTIVE", f"slice is {current.state.value}", "lifecycle")
                qos = current.profile.qos.model_copy(update=delta.model_dump(exclude_none=True))
                profile = current.profile.model_copy(update={"qos": qos})
                validation = validate_profile(profile)
                if not validation.ok:
                    raise _validation_error(validation)
            except ApiError as e:
                log_operation_error(logger, operation, e, slice_id=slice_id, stage=e.stage)
                raise

            events: List[SliceEvent] = []
            modifying = self._step(current, LifecycleEvent.MODIFY, events)
            stage = "map_qos"
            try:
                sat_qos = map_qos(profile.qos, profile.service_class, self.config.qos_map)
                stage = "compose"
                chain = compose_chain(required_capabilities(profile, self.config.qos_map), self.config.nf_catalog)
                stage = "admission"
                working = release(current.allocation, self._pool)
                decision = check_admission(profile, working, chain, self.config)
                if not decision.admitted:
                    logger.info("modify rejected slice=%s reason=%s", slice_id, decision.reason)
                    raise ApiError(422, decision.reason, decision.detail or decision.reason, stage)
                stage = "allocate"
                allocation, pool = allocate(profile, working, chain, self.config)
                updated = modifying.model_copy(
                    update={"profile": profile, "allocation": allocation, "chain": chain, "sat_qos": sat_qos}
                )
                stage = "classify"
                tables = self._compile_with(updated)
            except Exception as e:
                error = _as_api_error(e, stage)
                restored = self._step(modifying, LifecycleEvent.MODIFY_DONE, events)
                self._commit(restored, events)
                log_operation_error(logger, operation, error, slice_id=slice_id, stage=stage)
                raise error

            final = self._step(updated, LifecycleEvent.MODIFY_DONE, events)
            events.append(self._event(
                slice_id, EventKind.MODIFIED, final.state,
                f"gbr {current.profile.qos.gbr_mbps}->{qos.gbr_mbps} mbr {current.profile.qos.mbr_mbps}->{qos.mbr_mbps}",
            ))
            stored = self._commit(final, events, pool, tables)

        log_operation_success(logger, operation, slice_id=slice_id, gbr=qos.gbr_mbps, mbr=qos.mbr_mbps)
        return self._response(stored)

    def deactivate(self, slice_id: str, tenant: Optional[str] = None) -> SliceStateResponse:
        """Withdraw the slice's classifier rules, keeping its reservation"""
        return self._toggle(slice_id, tenant, LifecycleEvent.DEACTIVATE, "deactivate")

    def activate(self, slice_id: str, tenant: Optional[str] = None) -> SliceStateResponse:
        return self._toggle(slice_id, tenant, LifecycleEvent.REACTIVATE, "activate")

    def _toggle(self, slice_id: str, tenant: Optional[str], event: LifecycleEvent, operation: str) -> SliceStateResponse:
        log_operation_start(logger, operation, slice_id=slice_id, tenant=tenant)
        with self._lock:
            try:
                tenant = self._authorize(tenant, "modify")
                current = self._lookup(slice_id, tenant)
                events: List[SliceEvent] = []
                try:
                    updated = self._step(current, event, events)
                except S3Error as e:
                    raise ApiError(409, e.code, str(e), "lifecycle")
                try:
                    tables = self._compile_with(updated)
                except ConflictingRules as e:
                    raise _as_api_error(e, "classify")
            except ApiError as e:
                log_operation_error(logger, operation, e, slice_id=slice_id, stage=e.stage)
                raise
            stored = self._commit(updated, events, tables=tables)
        log_operation_success(logger, operation, slice_id=slice_id, state=stored.state.value)
        return self._response(stored)

    def deallocate(self, slice_id: str, tenant: Optional[str] = None) -> SliceStateResponse:
        """
        Terminate a slice and return its capacity. Repeating the call on a
        Terminated (or Failed) slice is a no-op that reports the same state.
        """
        operation = "deallocate"
        log_operation_start(logger, operation, slice_id=slice_id, tenant=tenant)
        with self._lock:
            try:
                tenant = self._authorize(tenant, "delete")
                current = self._lookup(slice_id, tenant)
                if current.state in ABSORBING_STATES:
                    return self._response(current)
                if current.state not in (LifecycleState.ACTIVE, LifecycleState.DEACTIVATED):
                    raise ApiError(409, "TRANSIENT_STATE", f"slice is {current.state.value}", "lifecycle")
            except ApiError as e:
                log_operation_error(logger, operation, e, slice_id=slice_id, stage=e.stage)
                raise

            events: List[SliceEvent] = []
            terminating = self._step(current, LifecycleEvent.TERMINATE, events)
            pool = release(current.allocation, self._pool) if current.allocation is not None else self._pool
            terminated = self._step(terminating.model_copy(update={"allocation": None}), LifecycleEvent.TERMINATE_DONE, events)
            events.append(self._event(slice_id, EventKind.DELETED, terminated.state))
            tables = self._compile_with(terminated)
            stored = self._commit(terminated, events, pool, tables)

        log_operation_success(logger, operation, slice_id=slice_id)
        return self._response(stored)

    # ========================================================================
    # Reads
    # ========================================================================

    def list_slices(self, tenant: Optional[str] = None) -> List[SliceSummary]:
        with self._lock:
            tenant = self._authorize(tenant, "status")
            return [
                SliceSummary.from_instance(self._instances[sid])
                for sid in sorted(self._instances)
                if self._visible(self._instances[sid], tenant)
            ]

    def get_slice(self, slice_id: str, tenant: Optional[str] = None) -> SliceDetail:
        with self._lock:
            tenant = self._authorize(tenant, "status")
            instance = self._lookup(slice_id, tenant).model_copy(deep=True)
            rules = []
            for key in sorted(self._tables):
                rules.extend(
                    {"table": key, **rule}
                    for rule in self._tables[key].export()["rules"]
                    if rule["slice"] == slice_id
                )
        return SliceDetail(
            instance=instance,
            allocation=instance.allocation,
            chain=instance.chain,
            sat_qos=instance.sat_qos,
            rules=rules,
        )

    def instances(self) -> Dict[str, SliceInstance]:
        with self._lock:
            return {sid: i.model_copy(deep=True) for sid, i in self._instances.items()}

    def pool_snapshot(self) -> ResourcePool:
        with self._lock:
            return self._pool.model_copy(deep=True)

    def pool_view(self, tenant: Optional[str] = None) -> PoolView:
        with self._lock:
            self._authorize(tenant, "pool-inspect")
            pool = self._pool.model_copy(deep=True)
        return PoolView(pool=pool, utilization=utilization(pool))

    def rules_view(self, tenant: Optional[str] = None) -> Dict[str, Dict]:
        with self._lock:
            self._authorize(tenant, "pool-inspect")
            return {key: table.export() for key, table in sorted(self._tables.items())}

    def list_events(self, tenant: Optional[str] = None, slice_id: Optional[str] = None, since: int = 0) -> List[SliceEvent]:
        with self._lock:
            tenant = self._authorize(tenant, "status")
            full = self.config.tenants[tenant] == TenantControl.FULL_CONTROL
            owned = {sid for sid, i in self._instances.items() if i.tenant == tenant}
            return [
                e for e in self._events
                if e.seq > since
                and (slice_id is None or e.slice_id == slice_id)
                and (full or e.slice_id in owned)
            ]

    # ========================================================================
    # Catalog
    # ========================================================================

    def get_catalog(self, tenant: Optional[str] = None) -> List[NfDescriptor]:
        with self._lock:
            self._authorize(tenant, "pool-inspect")
            return list(self.config.nf_catalog)

    def replace_catalog(self, catalog: List[NfDescriptor], tenant: Optional[str] = None) -> List[NfDescriptor]:
        """New catalog applies to slices admitted from now on"""
        with self._lock:
            self._authorize(tenant, "catalog-edit")
            ids = [nf.nf_id for nf in catalog]
            duplicates = sorted({i for i in ids if ids.count(i) > 1})
            if duplicates:
                raise ApiError(400, "DUPLICATE_NF", f"nf_id repeated: {duplicates}", "validate")
            self.config.nf_catalog = list(catalog)
            if self._log is not None:
                self._log.append_catalog(self.config.nf_catalog)
                self._maybe_snapshot()
            logger.info("catalog replaced size=%d", len(catalog))
            return list(self.config.nf_catalog)

    # ========================================================================
    # Subscriptions
    # ========================================================================

    def subscribe(self, request: SubscriptionRequest, tenant: Optional[str] = None) -> Subscription:
        """Tenants subscribe to slices they can see; only FullControl may follow every slice"""
        with self._lock:
            tenant = self._authorize(tenant, "status")
            if request.slice_id is not None:
                self._lookup(request.slice_id, tenant)
            elif self.config.tenants[tenant] != TenantControl.FULL_CONTROL:
                raise ApiError(403, "FORBIDDEN", "subscriptions without slice_id need FullControl", "authorize")
        return self.notifier.subscribe(request, owner=tenant)

    def unsubscribe(self, subscription_id: str, tenant: Optional[str] = None) -> None:
        with self._lock:
            tenant = self._authorize(tenant, "status")
            full = self.config.tenants[tenant] == TenantControl.FULL_CONTROL
        if not self.notifier.unsubscribe(subscription_id, owner=None if full else tenant):
            raise ApiError(404, "NOT_FOUND", f"subscription {subscription_id!r} not found", "lookup")

    # ========================================================================
    # Scenario runs
    # ========================================================================

    def submit_scenario(self, spec: ScenarioSpec, tenant: Optional[str] = None) -> ScenarioResponse:
        """Queue an emulation against the Active slices as they are now"""
        with self._lock:
            self._authorize(tenant, "scenario-run")
            active = [
                self._instances[sid].model_copy(deep=True)
                for sid in sorted(self._instances)
                if self._instances[sid].state == LifecycleState.ACTIVE
            ]
            try:
                network = build_network(active, self._pool, dict(self._tables), self.config)
                validate_flows(network, spec.flows)
            except InconsistentState as e:
                raise ApiError(500, e.code, str(e), "scenario")
            except ValueError as e:
                raise ApiError(400, "UNKNOWN_BEAM", str(e), "scenario")

            scenario_id = uuid.uuid4().hex
            created = datetime.now()
            self._scenarios[scenario_id] = ScenarioResult(
                scenario_id=scenario_id, status=ScenarioStatus.PENDING, created_at=created,
            )

        self._executor.submit(self._run_scenario, scenario_id, network, spec, active)
        logger.info("scenario queued id=%s flows=%d active_slices=%d", scenario_id, len(spec.flows), len(active))
        return ScenarioResponse(scenario_id=scenario_id, status=ScenarioStatus.PENDING, created_at=created)

    def get_scenario(self, scenario_id: str, tenant: Optional[str] = None) -> ScenarioResult:
        with self._lock:
            self._authorize(tenant, "scenario-run")
            result = self._scenarios.get(scenario_id)
            if result is None:
                raise ApiError(404, "NOT_FOUND", f"scenario {scenario_id!r} not found", "lookup")
            return result.model_copy(deep=True)

    def _set_scenario(self, scenario_id: str, **update) -> None:
        with self._lock:
            self._scenarios[scenario_id] = self._scenarios[scenario_id].model_copy(update=update)

    def _run_scenario(self, scenario_id: str, network: EmulatedNetwork, spec: ScenarioSpec,
                      slices: List[SliceInstance]) -> None:
        # emulation runs outside the writer lock
        self._set_scenario(scenario_id, status=ScenarioStatus.RUNNING)
        try:
            report = run_scenario(network, spec.flows, spec.duration_s, spec.seed)
            verdicts = verify_isolation(report, slices, self.config.tolerances.isolation)
        except Exception as e:
            logger.exception("scenario %s failed", scenario_id)
            self._set_scenario(scenario_id, status=ScenarioStatus.FAILED, completed_at=datetime.now(), error=str(e))
            return

        with self._lock:
            self._scenarios[scenario_id] = self._scenarios[scenario_id].model_copy(update={
                "status": ScenarioStatus.COMPLETED,
                "completed_at": datetime.now(),
                "report": report,
                "verdicts": verdicts,
            })
            alarms = [
                self._event(
                    v.slice_id, EventKind.ALARM, None,
                    f"isolation check failed in scenario {scenario_id}: "
                    f"carried {v.carried_mbps:.3f} < required {v.required_mbps:.3f} Mbps",
                )
                for v in verdicts if not v.passed
            ]
            self._publish(alarms)
            self._maybe_snapshot()
        logger.info(
            "scenario completed id=%s passed=%d failed=%d",
            scenario_id, sum(v.passed for v in verdicts), len(alarms),
        )
