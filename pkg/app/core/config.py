from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="HARMONIC_", env_file=".env", extra="ignore")

    real_tolerance: float = 1e-12

    inverse_min_grid_exponent: int = 8
    inverse_threshold: float = 1e-12
    inverse_condition_limit: float = 1e12

    solver_tol: float = 1e-8
    solver_h_max: int = 500
    solver_growth: float = 1.5
    trim_threshold: float = 1e-14
    stability_h_cap: int = 120

    riccati_max_iter: int = 50
    riccati_threshold: float = 1e-6
    tail_fraction: float = 0.2
    tail_energy: float = 1e-8

    steps_per_period: int = 1000
    magnitude_floor: float = 1e-3

    lmi_h_lmi: int = 20
    lmi_h_p: int = 10
    lmi_h_t: int = 10

    log_level: str = "INFO"


@lru_cache
def get_settings() -> Settings:
    return Settings()
