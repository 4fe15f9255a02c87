from fractions import Fraction
from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # App
    app_name: str = "QAM Index Codes"
    environment: str = "development"
    debug: bool = False
    log_level: str = "INFO"

    # Redis (Celery broker and result backend)
    redis_url: str = "redis://localhost:6379/0"

    # Parallelism
    threads: int = 1

    # Enumeration budgets
    subcode_budget: int = 2**20  # M^|S̄| points per subcode
    brute_force_budget: int = 2**24  # pairwise distance evaluations
    search_budget: int = 2**24  # candidates per search run
    max_lattice_dimension: int = 12

    # Lattice reduction / enumeration
    lll_delta: str = "3/4"
    witness_cap: int = 64

    # Search
    tie_cap: int = 64
    checkpoint_interval: int = 1024

    # Simulation
    max_errors_per_point: int = 200
    sim_batch_size: int = 4096

    @property
    def lll_delta_fraction(self) -> Fraction:
        return Fraction(self.lll_delta)


@lru_cache
def get_settings() -> Settings:
    return Settings()
