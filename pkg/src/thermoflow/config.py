"""Configuration via environment variables."""

from __future__ import annotations

from pydantic import BaseModel
from pydantic_settings import BaseSettings, SettingsConfigDict


class Tolerances(BaseModel):
    """Every numerical tolerance in one record."""

    model_config = {"frozen": True, "extra": "forbid"}

    # Measures and eigen-data
    measure: float = 1e-12
    eigen_residual: float = 1e-12
    power_step: float = 1e-14
    power_max_iter: int = 1_000_000

    # Pressure
    pressure: float = 1e-10
    coexistence: float = 1e-9

    # Cycle optimization
    cycle: float = 1e-12
    ratio: float = 1e-10
    cohomology: float = 1e-10

    # Flows
    bowen: float = 1e-11
    ell: float = 1e-12
    segment: float = 1e-13
    hyperbolic: float = 1e-10

    # Certification thresholds
    variational: float = 1e-9
    entropy_one: float = 1e-8
    cylinder: float = 1e-6
    density: float = 1e-8
    factor_pressure: float = 1e-9


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="THERMOFLOW_",
        env_file=".env",
        env_nested_delimiter="__",
    )

    # THERMOFLOW_TOL='{"bowen": 1e-12}' overrides a subset of fields
    tol: Tolerances = Tolerances()

    # Recoding limits
    max_block: int = 12
    max_block_states: int = 4096

    # Synchronization horizon search stops at 2**7
    horizon_cap: float = 128.0

    log_level: str = "WARNING"


settings = Settings()
