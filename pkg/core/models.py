from __future__ import annotations

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

ModelKind = Literal["ising", "heisenberg_s1", "heisenberg_half"]
Variant = Literal["canonical", "fast"]
Termination = Literal["stagnation", "max_iters", "rank_deficient"]

_PHYSICAL_DIM: Dict[str, int] = {"ising": 2, "heisenberg_s1": 3, "heisenberg_half": 2}


class ModelSpec(BaseModel):
    # Frozen so it can key the gate-exponential cache.
    model_config = ConfigDict(frozen=True)

    kind: ModelKind
    g: Optional[float] = None       # transverse field (ising)
    delta: Optional[float] = None   # ZZ anisotropy (heisenberg_s1)

    @property
    def d(self) -> int:
        return _PHYSICAL_DIM[self.kind]

    @property
    def params(self) -> Dict[str, float]:
        if self.kind == "ising":
            return {"g": self.g} if self.g is not None else {}
        if self.kind == "heisenberg_s1":
            return {"delta": self.delta if self.delta is not None else 1.0}
        return {}


class RunConfig(BaseModel):
    model: ModelSpec
    rank: int = Field(ge=1)
    t_init: float = 1e-1
    t_min: float = 1e-5
    t_shrink: float = 10.0
    variant: Variant = "fast"
    check_every: Optional[int] = Field(default=None, ge=1)  # None: ceil(check_period/t) per timestep
    check_period: float = Field(default=1.0, gt=0)
    check_floor: int = Field(default=10, ge=1)
    stagnation_window: int = Field(default=3, ge=2)
    max_iters: int = Field(default=1_000_000, ge=1)
    seed: int = 0
    init_rank: Optional[int] = Field(default=None, ge=1)  # None: start at full rank
    eig_tol: float = Field(default=1e-12, gt=0)
    solve_tol: float = Field(default=1e-8, gt=0)
    adaptive: bool = True
    theta_hat: bool = False
    sigma_floor: float = Field(default=1e-12, ge=0)

    @model_validator(mode="after")
    def _check_schedule(self) -> "RunConfig":
        if not self.t_min > 0:
            raise ValueError("t_min must be positive")
        if self.t_init < self.t_min:
            raise ValueError("t_init must be >= t_min")
        if not self.t_shrink > 1:
            raise ValueError("t_shrink must be > 1")
        if self.init_rank is not None and self.init_rank > self.rank:
            raise ValueError("init_rank must be <= rank")
        return self


class IterationRecord(BaseModel):
    iter: int
    t: float
    T_total: float
    theta: float
    theta1: float
    theta2: float
    res_norm: float
    err: Optional[float] = None
    sigma_min: float
    omega_min: float
    wallclock_s: float
    theta_hat: Optional[float] = None
    trunc_err: float = 0.0


class ResidualReport(BaseModel):
    res_norm: float
    theta: float
    theta1: float
    theta2: float
    sigma_min: float
    omega_min: float


class ScheduleEntry(BaseModel):
    t: float
    iters: int
    seconds: float
    T_total: float


class RunSummary(BaseModel):
    model: str
    params: Dict[str, float] = Field(default_factory=dict)
    rank: int
    variant: Variant
    schedule: List[ScheduleEntry] = Field(default_factory=list)
    theta: float
    theta_hat: Optional[float] = None
    res_norm: float
    err: Optional[float] = None
    seed: int
    T_total: float = 0.0
    iterations: int = 0
    termination: Optional[Termination] = None
    sigma: List[float] = Field(default_factory=list)
    omega: List[float] = Field(default_factory=list)
