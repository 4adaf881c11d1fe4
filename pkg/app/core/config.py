from pydantic_settings import BaseSettings

class Settings(BaseSettings):
    """Application settings"""
    PROJECT_NAME: str = "SmoothCert API"
    VERSION: str = "1.0.0"
    API_V1_STR: str = "/api/v1"

    # Logging
    LOG_FILE: str = "smoothcert.log"
    LOG_LEVEL: str = "INFO"

    # Certification run defaults
    ALPHA: float = 0.001
    SIGMA: float = 0.5
    N0: int = 100
    N: int = 10_000
    SEED: int = 0
    BATCH: int = 1000

    # Radii
    RADIUS_CAP_FACTOR: float = 1e6

    # Clopper-Pearson inversion
    CP_TOLERANCE: float = 1e-12
    CP_MAX_TRIALS: int = 1_000_000

    # s0 solver
    BRENT_MAX_ITER: int = 200
    S0_BRACKET: float = 50.0
    BALL_GRID_POINTS: int = 1025
    LIPSCHITZ_FALLBACK: bool = True

    # Power iteration
    POWER_ITER_TOL: float = 1e-10
    POWER_ITER_MAX: int = 10_000

    # Coverage simulation
    MIN_COVERAGE_REPLICATIONS: int = 10_000

    class Config:
        case_sensitive = True
        env_prefix = "SMOOTHCERT_"

settings = Settings()
