"""
FastAPI application entry point for the S3 slice orchestrator
"""

import logging
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.api import routes
from app.core.config import Settings, settings
from app.core.errors import S3Error
from app.core.logging_utils import configure_logging
from app.core.service_config import load_service_config
from app.models.requests import ErrorResponse
from app.services.notifier import Notifier
from app.services.orchestrator import ApiError, SliceManagementService

logger = logging.getLogger(__name__)


def build_service(config: Settings) -> SliceManagementService:
    """Load the service config and recover state from the data directory"""
    service_config = load_service_config(config.CONFIG)
    return SliceManagementService(
        service_config,
        data_dir=config.DATA_DIR,
        snapshot_interval=config.SNAPSHOT_INTERVAL,
        event_history=config.EVENT_HISTORY,
        scenario_workers=config.SCENARIO_WORKERS,
        notifier=Notifier(max_attempts=config.NOTIFY_MAX_ATTEMPTS, timeout_s=config.NOTIFY_TIMEOUT_S),
    )


def _error(status_code: int, code: str, reason: str, stage: Optional[str] = None) -> JSONResponse:
    body = ErrorResponse(code=code, reason=reason, stage=stage)
    return JSONResponse(status_code=status_code, content=body.model_dump())


def create_app(config: Optional[Settings] = None) -> FastAPI:
    config = config or settings
    configure_logging(config.LOG_LEVEL)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.service = build_service(config)
        logger.info("orchestrator ready data_dir=%s", config.DATA_DIR)
        yield
        app.state.service.shutdown()
        logger.info("orchestrator stopped")

    app = FastAPI(
        title="S3 Slice Orchestrator API",
        description="Satellite network slice subnet management: integrated 5G and standalone modes",
        version=config.VERSION,
        lifespan=lifespan,
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.ALLOWED_ORIGINS,
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return _error(exc.status_code, exc.code, exc.reason, exc.stage)

    @app.exception_handler(RequestValidationError)
    async def schema_error_handler(request: Request, exc: RequestValidationError):
        reason = "; ".join(
            f"{'.'.join(str(p) for p in err.get('loc', ()))}: {err.get('msg')}" for err in exc.errors()
        )
        return _error(status.HTTP_400_BAD_REQUEST, "SCHEMA", reason, "validate")

    @app.exception_handler(S3Error)
    async def domain_error_handler(request: Request, exc: S3Error):
        return _error(status.HTTP_500_INTERNAL_SERVER_ERROR, exc.code, str(exc))

    # Include API routes
    app.include_router(routes.router, prefix=config.API_V1_PREFIX)

    @app.get("/")
    async def root():
        return {
            "message": "S3 Slice Orchestrator - satellite network slicing service",
            "version": config.VERSION,
            "docs": "/docs",
        }

    @app.get("/api/health")
    async def health_check():
        return {"status": "healthy"}

    return app


app = create_app()


if __name__ == "__main__":
    import uvicorn

    host, port = settings.listen_address()
    uvicorn.run(app, host=host, port=port)
