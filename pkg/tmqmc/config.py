"""
Configurações do Simulador - Quantum Annealing por Transfer-Matrix
Carrega variáveis de ambiente e valida configurações
"""
from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Configurações da aplicação carregadas do .env"""

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # App
    APP_NAME: str = "tmqmc"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False  # serialize=True no loguru

    # Execução
    OUTPUT_DIR: str = "runs"
    THREADS: int = 1

    # Cadeia e schedule (L = 20·N, corte em 95% de T)
    PLACKETS_PER_SPIN: int = 20
    CUTOFF_FRACTION: float = 0.95
    SHORT_WINDOW: int = 500
    LONG_WINDOW: int = 10_000
    VISIT_BLOCK: int = 1 << 20  # visitas sorteadas por bloco do kernel

    # Limites dos oráculos
    EXHAUSTIVE_MAX_SPINS: int = 28
    DOS_MAX_SPINS: int = 24
    EIGEN_MAX_SPINS: int = 20
    DENSE_MAX_SPINS: int = 4
    VALIDATE_MAX_SPINS: int = 12
    MARGINAL_MAX_SPINS: int = 4
    MARGINAL_MAX_PLACKETS: int = 64
    CHAIN_STATE_MAX_BITS: int = 20
    ENUM_CHUNK_BITS: int = 16
    MAX_REPRESENTATIVES: int = 64

    # Power iteration
    POWER_TOL: float = 1e-12
    POWER_RESIDUAL_TOL: float = 1e-12
    POWER_MAX_ITER: int = 200_000


@lru_cache()
def get_settings() -> Settings:
    """Singleton para settings (cache)"""
    return Settings()


settings = get_settings()
