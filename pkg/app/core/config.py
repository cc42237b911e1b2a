"""
core/config.py
All tolerances, caps and budgets in one place.
Every service reads its defaults from here; callers may override per call.
"""

from functools import lru_cache
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv
load_dotenv()

class Settings(BaseSettings):

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    # ─── App ───────────────────────────────────────────────
    APP_NAME: str = "fermimodes"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    HOST: str = "0.0.0.0"
    PORT: int = 8000
    ALLOWED_ORIGINS: list[str] = ["*"]   # tighten in production

    # ─── Mode caps ─────────────────────────────────────────
    MAX_MODES: int = 10                # 2^10 ladder matrices, memory guard
    CAR_CHECK_MAX_MODES: int = 8
    SEARCH_MAX_MODES: int = 4          # 2^(2^n - 1) sign assignments
    ORACLE_MAX_MODES: int = 6          # 4^k x 4^n consistency system

    # ─── Tolerance ladder ──────────────────────────────────
    EXACT_TOL: float = 1e-12           # algebraic identities on exact inputs
    EIGEN_TOL: float = 1e-9            # eigen-based quantities
    PSD_TOL: float = 1e-9              # smallest admissible eigenvalue is -PSD_TOL
    MATCH_TOL: float = 1e-10           # inside-out vs oracle, diagram residuals

    # ─── SSR-restricted EoF optimiser ──────────────────────
    SSR_EOF_RESTARTS: int = 32
    SSR_EOF_ITERATIONS: int = 500
    SSR_EOF_PATIENCE: int = 4          # restarts without improvement before a sector stops
    SSR_EOF_FTOL: float = 1e-10
    SSR_EOF_GTOL: float = 1e-6
    DEFAULT_SEED: int = 0

    # ─── Mapping search ────────────────────────────────────
    JOBS: int = 1                      # >1 = process pool over sign assignments

    # ─── Reports ───────────────────────────────────────────
    REPORT_SIGNIFICANT_DIGITS: int = 12
    REPORT_SCHEMA_VERSION: str = "1"


@lru_cache()
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
