from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Environment variables take precedence; .env.local overrides .env for local defaults.
    model_config = SettingsConfigDict(
        env_prefix="ITRPOWER_",
        env_file=(".env", ".env.local"),
        extra="ignore",
    )

    threads: int = Field(default=1, ge=1)

    # Dominant eigenpairs (implicitly restarted Arnoldi).
    eig_tol: float = Field(default=1e-12, gt=0)
    krylov_dim: int = Field(default=30, ge=3)
    max_restarts: int = Field(default=300, ge=1)
    dense_eig_fallback: bool = False
    dense_eig_max_dim: int = Field(default=400, ge=1)

    # Deflated geometric-sum solves (restarted GMRES).
    solve_tol: float = Field(default=1e-8, gt=0)
    gmres_restart: int = Field(default=30, ge=1)

    # Fast-variant states are put back in canonical form at a check above this residual.
    recanonicalize_tol: float = Field(default=1e-10, gt=0)

    oracle_max_dim: int = Field(default=4096, ge=1)
    enable_oracles: bool = True

    log_level: str = "INFO"
    trace_file: str | None = None


settings = Settings()
