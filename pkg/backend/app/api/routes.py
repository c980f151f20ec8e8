"""
API route handlers
"""

import logging
from typing import Any, Callable, Dict, List, Optional

from fastapi import APIRouter, Header, Request, Response, status

from app.models.catalog import NfDescriptor
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
from app.services.orchestrator import ApiError, SliceManagementService

logger = logging.getLogger(__name__)

router = APIRouter()

ERROR_RESPONSES = {
    400: {"model": ErrorResponse, "description": "Validation failure"},
    403: {"model": ErrorResponse, "description": "Tenant not allowed"},
    404: {"model": ErrorResponse, "description": "Unknown slice"},
    409: {"model": ErrorResponse, "description": "Conflicting state"},
    422: {"model": ErrorResponse, "description": "Admission rejected"},
}


def get_service(request: Request) -> SliceManagementService:
    return request.app.state.service


def _invoke(operation: str, call: Callable[[], Any]) -> Any:
    """
    Run a service call, mapping failures to ApiError.

    Args:
        operation: name used in the 500 reason
        call: zero-argument callable doing the work

    Returns:
        Whatever the call returned
    """
    try:
        return call()
    except ApiError:
        raise
    except ValueError as e:
        raise ApiError(status.HTTP_400_BAD_REQUEST, "INVALID", str(e))
    except Exception as e:
        logger.exception("%s failed", operation)
        raise ApiError(status.HTTP_500_INTERNAL_SERVER_ERROR, "INTERNAL", f"{operation} failed: {e}")


# ============================================================================
# Integrated mode (5G NSSI management)
# ============================================================================

@router.post(
    "/nssi",
    response_model=SliceStateResponse,
    status_code=status.HTTP_201_CREATED,
    responses=ERROR_RESPONSES,
    summary="Allocate a network slice subnet instance",
    description="Integrated mode: the satellite subnet as part of an end-to-end 5G slice",
)
def allocate_nssi(body: NssiRequest, request: Request, x_tenant: Optional[str] = Header(None)):
    """
    Run the full creation pipeline for an Integrated slice.

    Returns the final state (Active) on success; rejects carry the failing
    stage and reason code in the error body.
    """
    service = get_service(request)
    return _invoke("allocate_nssi", lambda: service.allocate_nssi(body, x_tenant))


@router.patch(
    "/nssi/{slice_id}",
    response_model=SliceStateResponse,
    responses=ERROR_RESPONSES,
    summary="Modify the QoS of an Active slice",
)
def modify_nssi(slice_id: str, body: QosDelta, request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("modify_nssi", lambda: service.modify_nssi(slice_id, body, x_tenant))


@router.delete(
    "/nssi/{slice_id}",
    response_model=SliceStateResponse,
    responses=ERROR_RESPONSES,
    summary="Deallocate a slice subnet instance",
)
def deallocate_nssi(slice_id: str, request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("deallocate_nssi", lambda: service.deallocate(slice_id, x_tenant))


# ============================================================================
# Standalone mode and inventory
# ============================================================================

@router.post(
    "/slices",
    response_model=SliceStateResponse,
    status_code=status.HTTP_201_CREATED,
    responses=ERROR_RESPONSES,
    summary="Create a pure satellite slice",
)
def create_slice(body: StandaloneRequest, request: Request, x_tenant: Optional[str] = Header(None)):
    """
    Standalone mode: classifiers at the terminal and hub edges match the
    request's prefixes. The response echoes the ingress descriptor.
    """
    service = get_service(request)
    return _invoke("create_slice", lambda: service.create_slice(body, x_tenant))


@router.delete(
    "/slices/{slice_id}",
    response_model=SliceStateResponse,
    responses=ERROR_RESPONSES,
    summary="Delete a slice",
)
def delete_slice(slice_id: str, request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("delete_slice", lambda: service.deallocate(slice_id, x_tenant))


@router.get("/slices", response_model=List[SliceSummary], responses=ERROR_RESPONSES, summary="List slices")
def list_slices(request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("list_slices", lambda: service.list_slices(x_tenant))


@router.get("/slices/{slice_id}", response_model=SliceDetail, responses=ERROR_RESPONSES, summary="Describe a slice")
def get_slice(slice_id: str, request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("get_slice", lambda: service.get_slice(slice_id, x_tenant))


@router.post(
    "/slices/{slice_id}/deactivate",
    response_model=SliceStateResponse,
    responses=ERROR_RESPONSES,
    summary="Deactivate a slice (keeps its reservation)",
)
def deactivate_slice(slice_id: str, request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("deactivate", lambda: service.deactivate(slice_id, x_tenant))


@router.post(
    "/slices/{slice_id}/activate",
    response_model=SliceStateResponse,
    responses=ERROR_RESPONSES,
    summary="Reactivate a deactivated slice",
)
def activate_slice(slice_id: str, request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("activate", lambda: service.activate(slice_id, x_tenant))


# ============================================================================
# Pool, rules and catalog
# ============================================================================

@router.get("/pool", response_model=PoolView, responses=ERROR_RESPONSES, summary="Pool inventory and utilization")
def get_pool(request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("get_pool", lambda: service.pool_view(x_tenant))


@router.get(
    "/rules",
    response_model=Dict[str, Dict[str, Any]],
    responses=ERROR_RESPONSES,
    summary="Classifier tables per stitch point",
)
def get_rules(request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("get_rules", lambda: service.rules_view(x_tenant))


@router.get("/catalog", response_model=List[NfDescriptor], responses=ERROR_RESPONSES, summary="NF catalog")
def get_catalog(request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("get_catalog", lambda: service.get_catalog(x_tenant))


@router.put("/catalog", response_model=List[NfDescriptor], responses=ERROR_RESPONSES, summary="Replace the NF catalog")
def put_catalog(body: List[NfDescriptor], request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("put_catalog", lambda: service.replace_catalog(body, x_tenant))


# ============================================================================
# Scenario runs
# ============================================================================

@router.post(
    "/scenario",
    response_model=ScenarioResponse,
    status_code=status.HTTP_202_ACCEPTED,
    responses=ERROR_RESPONSES,
    summary="Run an emulation scenario",
    description="Queues the scenario against the Active slices; poll GET /scenario/{id}",
)
def submit_scenario(body: ScenarioSpec, request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("submit_scenario", lambda: service.submit_scenario(body, x_tenant))


@router.get(
    "/scenario/{scenario_id}",
    response_model=ScenarioResult,
    responses=ERROR_RESPONSES,
    summary="Scenario status, metrics and isolation verdicts",
)
def get_scenario(scenario_id: str, request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("get_scenario", lambda: service.get_scenario(scenario_id, x_tenant))


# ============================================================================
# Events and subscriptions
# ============================================================================

@router.post(
    "/subscriptions",
    response_model=Subscription,
    status_code=status.HTTP_201_CREATED,
    responses=ERROR_RESPONSES,
    summary="Register a webhook or log subscriber",
)
def subscribe(body: SubscriptionRequest, request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    return _invoke("subscribe", lambda: service.subscribe(body, x_tenant))


@router.delete(
    "/subscriptions/{subscription_id}",
    status_code=status.HTTP_204_NO_CONTENT,
    responses=ERROR_RESPONSES,
    summary="Remove a subscriber",
)
def unsubscribe(subscription_id: str, request: Request, x_tenant: Optional[str] = Header(None)):
    service = get_service(request)
    _invoke("unsubscribe", lambda: service.unsubscribe(subscription_id, x_tenant))
    return Response(status_code=status.HTTP_204_NO_CONTENT)


@router.get("/events", response_model=List[SliceEvent], responses=ERROR_RESPONSES, summary="Recent slice events")
def list_events(
    request: Request,
    slice_id: Optional[str] = None,
    since: int = 0,
    x_tenant: Optional[str] = Header(None),
):
    service = get_service(request)
    return _invoke("list_events", lambda: service.list_events(x_tenant, slice_id, since))
