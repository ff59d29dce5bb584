import os
from contextlib import contextmanager
from typing import List

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="DCKIT_", env_file=".env", extra="ignore")

    # Truncation defaults
    kmax: int = 256
    grid_points: int = 64
    order: int = 12
    max_grid: int = 128
    max_order: int = 30
    max_compose_order: int = 20

    # Decision thresholds
    convexity_tol: float = 1e-9
    stabilization_tol: float = 0.01
    decay_ratio: float = 0.6
    growth_factor: float = 1.5
    limit_fit_tol: float = 1e-9
    qa_margin: float = 0.05
    min_fit_terms: int = 8
    remainder_tol: float = 1e-6
    cancellation_tol: float = 1e-12
    bound_tol: float = 1e-9

    # Numerical sampling
    directions: int = 16
    fd_step: float = 1e-3

    # Workers (0 = one per CPU)
    threads: int = 0

    log_level: str = "WARNING"
    environment: str = "development"

    # HTTP surface
    allowed_origins: str = "http://localhost:3000,http://localhost:5173"

    @property
    def worker_count(self) -> int:
        if self.threads > 0:
            return self.threads
        return os.cpu_count() or 1

    @property
    def cors_origins(self) -> List[str]:
        return [origin.strip() for origin in self.allowed_origins.split(",")]

    def thresholds(self) -> dict:
        """Tolerances that every report echoes back."""
        return {
            "convexity_tol": self.convexity_tol,
            "stabilization_tol": self.stabilization_tol,
            "decay_ratio": self.decay_ratio,
            "growth_factor": self.growth_factor,
            "limit_fit_tol": self.limit_fit_tol,
            "qa_margin": self.qa_margin,
        }


settings = Settings()


@contextmanager
def override_settings(**overrides):
    """Temporarily replace fields of the ``settings`` singleton."""
    saved = {name: getattr(settings, name) for name in overrides}
    for name, value in overrides.items():
        if name not in Settings.model_fields:
            raise AttributeError(f"unknown setting {name}")
        setattr(settings, name, value)
    try:
        yield settings
    finally:
        for name, value in saved.items():
            setattr(settings, name, value)
