"""
Application configuration settings
"""

from pathlib import Path
from typing import List, Tuple

from pydantic_settings import BaseSettings

BACKEND_DIR = Path(__file__).resolve().parent.parent.parent
DEFAULT_SERVICE_CONFIG = BACKEND_DIR / "config" / "default_config.json"


class Settings(BaseSettings):
    # API Settings
    API_V1_PREFIX: str = "/api/v1"
    PROJECT_NAME: str = "S3 Slice Orchestrator"
    VERSION: str = "1.0.0"

    # CORS Settings
    ALLOWED_ORIGINS: List[str] = [
        "http://localhost:8000",
    ]

    # Service files
    CONFIG: Path = DEFAULT_SERVICE_CONFIG  # S3_CONFIG
    DATA_DIR: Path = Path("data")  # S3_DATA_DIR
    LISTEN: str = "0.0.0.0:8000"  # S3_LISTEN

    LOG_LEVEL: str = "INFO"

    # Persistence
    SNAPSHOT_INTERVAL: int = 50
    EVENT_HISTORY: int = 1000

    # Scenario runs
    SCENARIO_WORKERS: int = 2

    # Notifications
    NOTIFY_MAX_ATTEMPTS: int = 3
    NOTIFY_TIMEOUT_S: float = 2.0

    class Config:
        case_sensitive = True
        env_prefix = "S3_"
        env_file = ".env"
        extra = "ignore"

    def listen_address(self) -> Tuple[str, int]:
        """Split S3_LISTEN into (host, port)"""
        host, _, port = self.LISTEN.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"S3_LISTEN must look like host:port, got {self.LISTEN!r}")
        return host, int(port)


settings = Settings()
